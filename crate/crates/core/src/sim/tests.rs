use super::*;
use crate::layout::templates::{home_template, human_style, workstation_template};
use crate::layout::{Pos, StorageArea};
use proptest::prelude::*;

fn parse(rows: &[&str]) -> Layout {
    let h = rows.len();
    let w = rows[0].len();
    let mut text = format!("type warehouse\nheight {h}\nwidth {w}\nstorage 0 0 0 0\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    Layout::parse(&text).unwrap()
}

#[test]
fn congestion_threshold_is_strict_majority() {
    use Action::*;
    assert!(!detect_congestion(&[Wait, Wait, Move, Move]));
    assert!(detect_congestion(&[Wait, Wait, Wait, Move]));
    assert!(!detect_congestion(&[]));
    assert!(detect_congestion(&[Wait]));
}

/// Open 8x8 map with two endpoints `d` apart and nothing else to do.
fn two_endpoint_map(d: usize) -> Layout {
    let mut l = Layout::filled(8, 8, StorageArea::default(), TileType::Empty).unwrap();
    l.set(Pos::new(3, 0), TileType::Endpoint);
    l.set(Pos::new(3, d), TileType::Endpoint);
    l.set(Pos::new(7, 7), TileType::HomeLocation);
    l
}

#[test]
fn single_agent_throughput_approaches_inverse_distance() {
    for d in [3, 5, 7] {
        let l = two_endpoint_map(d);
        for planner in [Planner::Rhcr, Planner::Dpp] {
            let cfg = SimConfig {
                scenario: Scenario::HomeLocation,
                planner,
                n_agents: 1,
                horizon: 1000,
                check_layout: false,
                ..SimConfig::default()
            };
            let r = run_simulation(&l, &cfg).unwrap();
            let target = 1.0 / d as f64;
            assert!(
                (r.throughput - target).abs() <= 0.1 * target,
                "d={d} {planner:?}: {}",
                r.throughput
            );
            assert!(!r.congested);
        }
    }
}

#[test]
fn valid_workstation_variant_of_single_agent_oracle() {
    // Workstation at distance d from both endpoints of one shelf.
    for d in [3usize, 5, 7] {
        let mut l = Layout::filled(
            8,
            8,
            StorageArea {
                row: 0,
                col: 6,
                height: 8,
                width: 2,
            },
            TileType::Empty,
        )
        .unwrap();
        l.set(Pos::new(3, 7), TileType::Shelf);
        l.set(Pos::new(2, 7), TileType::Endpoint);
        l.set(Pos::new(4, 7), TileType::Endpoint);
        l.set(Pos::new(3, 8 - d), TileType::Workstation);
        let cfg = SimConfig {
            n_agents: 1,
            horizon: 1000,
            ..SimConfig::default()
        };
        let r = run_simulation(&l, &cfg).unwrap();
        let target = 1.0 / d as f64;
        assert!(
            (r.throughput - target).abs() <= 0.1 * target,
            "d={d}: {}",
            r.throughput
        );
    }
}

#[test]
fn empty_goal_pool_gives_zero_throughput_without_congestion() {
    let l = parse(&["w....", ".....", "....w"]);
    let cfg = SimConfig {
        n_agents: 3,
        horizon: 50,
        ..SimConfig::default()
    };
    let r = run_simulation(&l, &cfg).unwrap();
    assert_eq!(r.throughput, 0.0);
    assert!(!r.congested);
    assert_eq!(r.elapsed_steps, 50);
}

fn small_workstation_layout() -> Layout {
    let t = workstation_template(16, 9, 12, 9, 6).unwrap();
    human_style(&t, 20, 10).unwrap()
}

fn assert_accounting(r: &SimResult, n_agents: usize) {
    assert_eq!(
        r.tile_usage.iter().sum::<u64>(),
        n_agents as u64 * r.elapsed_steps as u64
    );
    let per_agent: u64 = r.tasks_finished.iter().map(|&x| x as u64).sum();
    assert_eq!(per_agent, r.total_finished());
    assert_eq!(r.finished_per_timestep.len(), r.elapsed_steps as usize);
    let expected = if r.elapsed_steps == 0 {
        0.0
    } else {
        r.total_finished() as f64 / r.elapsed_steps as f64
    };
    assert!((r.throughput - expected).abs() < 1e-12);
}

#[test]
fn rhcr_run_is_conflict_free_and_accounted() {
    let l = small_workstation_layout();
    for solver in [MapfSolver::Pbs, MapfSolver::PrioritizedPlanning] {
        let cfg = SimConfig {
            n_agents: 15,
            horizon: 200,
            mapf_solver: solver,
            seed: 4,
            record_trajectory: true,
            ..SimConfig::default()
        };
        let r = run_simulation(&l, &cfg).unwrap();
        check_trajectory(&l, r.trajectory.as_ref().unwrap()).unwrap();
        assert_accounting(&r, 15);
        assert!(r.total_finished() > 0);
    }
}

#[test]
fn dpp_never_fails_on_well_formed_layout() {
    let t = home_template(20, 17, 12, 9, 88).unwrap();
    let l = human_style(&t, 20, 10).unwrap();
    let cfg = SimConfig {
        scenario: Scenario::HomeLocation,
        planner: Planner::Dpp,
        n_agents: 40,
        horizon: 150,
        seed: 2,
        record_trajectory: true,
        early_stop_on_congestion: false,
        ..SimConfig::default()
    };
    let r = run_simulation(&l, &cfg).unwrap();
    assert_eq!(r.solver_failures, 0);
    check_trajectory(&l, r.trajectory.as_ref().unwrap()).unwrap();
    assert_accounting(&r, 40);
    assert!(r.total_finished() > 0);
}

#[test]
fn same_config_same_result() {
    let l = small_workstation_layout();
    let cfg = SimConfig {
        n_agents: 10,
        horizon: 100,
        seed: 77,
        ..SimConfig::default()
    };
    assert_eq!(
        run_simulation(&l, &cfg).unwrap(),
        run_simulation(&l, &cfg).unwrap()
    );
}

#[test]
fn dpp_rejected_outside_home_scenario() {
    let l = small_workstation_layout();
    let cfg = SimConfig {
        planner: Planner::Dpp,
        ..SimConfig::default()
    };
    assert!(matches!(run_simulation(&l, &cfg), Err(SimError::Config(_))));
    let cfg = SimConfig {
        rhcr_window: 3,
        rhcr_period: 5,
        ..SimConfig::default()
    };
    assert!(matches!(run_simulation(&l, &cfg), Err(SimError::Config(_))));
}

#[test]
fn invalid_layout_rejected() {
    let l = parse(&["e@.", "..w"]);
    let cfg = SimConfig::default();
    assert!(matches!(
        run_simulation(&l, &cfg),
        Err(SimError::InvalidLayout(_))
    ));
}

#[test]
fn evaluate_aggregates_runs() {
    let l = small_workstation_layout();
    let cfg = SimConfig {
        n_agents: 8,
        horizon: 120,
        seed: 5,
        ..SimConfig::default()
    };

    let one = evaluate(&l, &cfg, 1).unwrap();
    assert_eq!(one.mean_throughput, one.runs[0].throughput);

    let same = evaluate_with_seeds(&l, &cfg, &[9; 5], DistanceMetric::Bfs).unwrap();
    assert!(same
        .runs
        .iter()
        .all(|r| r.throughput == same.runs[0].throughput));
    assert_eq!(same.throughput_sd(), 0.0);

    let five = evaluate(&l, &cfg, 5).unwrap();
    let by_hand = five
        .runs
        .iter()
        .map(|r| r.total_finished() as f64 / r.elapsed_steps as f64)
        .sum::<f64>()
        / 5.0;
    assert!((five.mean_throughput - by_hand).abs() < 1e-12);
    assert!((five.tile_usage_normalized.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(
        five.measures,
        measures(&l, Scenario::Workstation, DistanceMetric::Bfs).unwrap()
    );
    let seeds: Vec<u64> = five.runs.iter().map(|r| r.seed).collect();
    let mut dedup = seeds.clone();
    dedup.dedup();
    assert_eq!(seeds.len(), dedup.len());
}

#[test]
fn zero_on_congestion_toggle() {
    let l = parse(&["w.........e"]);
    let base = SimConfig {
        n_agents: 6,
        horizon: 200,
        check_layout: false,
        start_locations: Some(vec![1, 2, 3, 7, 8, 9]),
        ..SimConfig::default()
    };
    let r = run_simulation(&l, &base).unwrap();
    assert!(r.congested);
    let z = run_simulation(
        &l,
        &SimConfig {
            zero_on_congestion: true,
            ..base
        },
    )
    .unwrap();
    assert_eq!(z.throughput, 0.0);
    assert_eq!(z.elapsed_steps, r.elapsed_steps);
}

#[test]
fn checker_flags_conflicts() {
    let l = parse(&["....", "..@."]);
    assert!(check_trajectory(&l, &[vec![0, 1], vec![1, 0]]).is_err());
    assert!(matches!(
        check_trajectory(&l, &[vec![0, 2], vec![1, 1]]),
        Err(TrajectoryError::Vertex { .. })
    ));
    assert!(matches!(
        check_trajectory(&l, &[vec![0], vec![2]]),
        Err(TrajectoryError::IllegalMove { .. })
    ));
    assert!(matches!(
        check_trajectory(&l, &[vec![2], vec![6]]),
        Err(TrajectoryError::Blocked { .. })
    ));
    // Following into a vacated cell is fine.
    check_trajectory(&l, &[vec![0, 1], vec![1, 2]]).unwrap();
}

#[test]
fn usage_csv_shape() {
    assert_eq!(usage_csv(2, &[1, 2, 3, 4]), "1,2\n3,4\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn random_runs_are_conflict_free(seed in 0u64..1000, agents in 2usize..20, pp in any::<bool>()) {
        let l = small_workstation_layout();
        let cfg = SimConfig {
            n_agents: agents,
            horizon: 60,
            seed,
            mapf_solver: if pp { MapfSolver::PrioritizedPlanning } else { MapfSolver::Pbs },
            record_trajectory: true,
            early_stop_on_congestion: false,
            ..SimConfig::default()
        };
        let r = run_simulation(&l, &cfg).unwrap();
        prop_assert!(check_trajectory(&l, r.trajectory.as_ref().unwrap()).is_ok());
        assert_accounting(&r, agents);
    }
}
