use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warehouse_layout::par;
use warehouse_layout::qd::mutate;
use warehouse_layout::setups::{named_setup, ArchiveRows};
use warehouse_layout::sim::{evaluate, SimConfig};
use warehouse_layout::Layout;

/// Desk-scale layouts: the human layout and its mirror image, each with one
/// mutation kept when the result is still valid.
fn batch(n: usize) -> (Vec<Layout>, SimConfig) {
    let setup = named_setup("desk", ArchiveRows::AsPrinted).unwrap();
    let human = setup.human_layout().unwrap();
    let cfg = SimConfig {
        scenario: setup.scenario,
        n_agents: setup.n_agents,
        horizon: 200,
        planner: setup.planner,
        ..SimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let cand = if out.len() % 2 == 0 {
            human.clone()
        } else {
            human.mirrored()
        };
        let m = mutate(&cand, &mut rng);
        let l = if warehouse_layout::layout::validate(&m, setup.scenario, setup.n_agents)
            .meets(setup.scenario)
        {
            m
        } else {
            cand
        };
        out.push(l);
    }
    (out, cfg)
}

// Only the batch level differs between the two arms; the runs inside one
// evaluation follow the `parallel` feature either way.
fn batch_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_eval");
    group.sample_size(10);
    for n in [4usize, 16] {
        let (layouts, cfg) = batch(n);
        group.bench_with_input(BenchmarkId::new("parallel", n), &layouts, |b, ls| {
            b.iter(|| par::map(ls, |l| evaluate(l, &cfg, 2).unwrap().mean_throughput))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &layouts, |b, ls| {
            b.iter(|| par::map_seq(ls, |l| evaluate(l, &cfg, 2).unwrap().mean_throughput))
        });
    }
    group.finish();
}

criterion_group!(benches, batch_eval);
criterion_main!(benches);
