use crate::layout::{Layout, Pos, Scenario, TileType};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization MILP with named variables. Continuous variables are
/// bounded below by 0 and unbounded above; binaries live in {0, 1}.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearModel {
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub rows: Vec<Row>,
}

impl LinearModel {
    pub fn add_var(&mut self, name: String, kind: VarKind) -> usize {
        self.names.push(name);
        self.kinds.push(kind);
        self.names.len() - 1
    }

    pub fn add_row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row {
            name,
            terms,
            sense,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == VarKind::Binary).count()
    }

    pub fn name_index(&self) -> HashMap<&str, usize> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .map(|&(i, c)| c * values[i])
                .sum::<f64>()
    }

    /// Largest violation of any row or variable domain by `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &v) in values.iter().enumerate() {
            worst = worst.max(-v);
            if self.kinds[i] == VarKind::Binary {
                worst = worst.max(v - 1.0).max((v - v.round()).abs());
            }
        }
        for r in &self.rows {
            let lhs: f64 = r.terms.iter().map(|&(i, c)| c * values[i]).sum();
            let d = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(d);
        }
        worst
    }
}

/// Per-vertex tile symbols of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    H,
    W,
    E,
    S,
    P,
    D,
}

impl Sym {
    pub const ALL: [Sym; 6] = [Sym::H, Sym::W, Sym::E, Sym::S, Sym::P, Sym::D];

    pub fn letter(self) -> char {
        match self {
            Sym::H => 'h',
            Sym::W => 'w',
            Sym::E => 'e',
            Sym::S => 's',
            Sym::P => 'p',
            Sym::D => 'd',
        }
    }

    pub fn of(tile: TileType) -> Sym {
        match tile {
            TileType::HomeLocation => Sym::H,
            TileType::Workstation => Sym::W,
            TileType::Endpoint => Sym::E,
            TileType::Shelf => Sym::S,
            TileType::Empty => Sym::P,
            TileType::DummySource => Sym::D,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Symbols with a variable at every vertex in `scenario`.
    pub fn used(scenario: Scenario) -> [Sym; 5] {
        match scenario {
            Scenario::Workstation => [Sym::W, Sym::E, Sym::S, Sym::P, Sym::D],
            Scenario::HomeLocation => [Sym::H, Sym::E, Sym::S, Sym::P, Sym::D],
        }
    }

    /// Types whose outgoing flow is cut.
    pub fn blocking(scenario: Scenario) -> &'static [Sym] {
        match scenario {
            Scenario::Workstation => &[Sym::S],
            Scenario::HomeLocation => &[Sym::S, Sym::H, Sym::E],
        }
    }

    /// Types that demand one unit of flow.
    pub fn is_sink(self) -> bool {
        matches!(self, Sym::H | Sym::W | Sym::E | Sym::P)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("no {0:?} tile outside the storage area to act as flow source")]
    NoSource(TileType),
    #[error("{tile:?} at {pos} is not allowed in the {scenario:?} scenario")]
    ForeignTile {
        tile: TileType,
        pos: Pos,
        scenario: Scenario,
    },
}

/// The repair MILP for one unrepaired layout.
#[derive(Debug, Clone)]
pub struct RepairModel {
    pub lp: LinearModel,
    pub scenario: Scenario,
    pub n_shelves: usize,
    pub n_workstations: usize,
    pub n_homes: usize,
    /// Vertex fixed to the dummy-source type.
    pub source: usize,
    pub unrepaired: Layout,
    x: Vec<[Option<usize>; 6]>,
    /// Directed edges, in flow-variable order starting at `flow_start`.
    pub edges: Vec<(usize, usize)>,
    flow_start: usize,
    fs_start: usize,
    ft_start: usize,
}

impl RepairModel {
    pub fn x(&self, v: usize, sym: Sym) -> Option<usize> {
        self.x[v][sym.index()]
    }

    pub fn flow(&self, e: usize) -> usize {
        self.flow_start + e
    }

    pub fn supply(&self, v: usize) -> usize {
        self.fs_start + v
    }

    pub fn demand(&self, v: usize) -> usize {
        self.ft_start + v
    }
}

fn rc(layout: &Layout, v: usize) -> String {
    let p = layout.pos(v);
    format!("{}_{}", p.row, p.col)
}

/// Builds the repair MILP. `n_workstations` is ignored in the home-location
/// scenario and `n_homes` in the workstation scenario; the dummy source
/// counts toward whichever applies.
pub fn build_model(
    unrepaired: &Layout,
    scenario: Scenario,
    n_shelves: usize,
    n_workstations: usize,
    n_homes: usize,
) -> Result<RepairModel, ModelError> {
    let layout = unrepaired;
    let n = layout.len();
    let big = n as f64;
    let used = Sym::used(scenario);
    let (src_tile, foreign) = match scenario {
        Scenario::Workstation => (TileType::Workstation, TileType::HomeLocation),
        Scenario::HomeLocation => (TileType::HomeLocation, TileType::Workstation),
    };
    for v in 0..n {
        if layout.tile(v) == foreign {
            return Err(ModelError::ForeignTile {
                tile: foreign,
                pos: layout.pos(v),
                scenario,
            });
        }
    }
    let source = (0..n)
        .find(|&v| !layout.in_storage(v) && layout.tile(v) == src_tile)
        .ok_or(ModelError::NoSource(src_tile))?;

    let mut lp = LinearModel::default();
    let mut x = vec![[None; 6]; n];
    for v in 0..n {
        for s in used {
            x[v][s.index()] = Some(lp.add_var(
                format!("x_{}_{}", s.letter(), rc(layout, v)),
                VarKind::Binary,
            ));
        }
    }
    let mut edges = Vec::new();
    for v in 0..n {
        for u in layout.neighbors(v) {
            edges.push((v, u));
        }
    }
    let flow_start = lp.num_vars();
    for &(a, b) in &edges {
        lp.add_var(
            format!("f_{}_{}", rc(layout, a), rc(layout, b)),
            VarKind::Continuous,
        );
    }
    let fs_start = lp.num_vars();
    for v in 0..n {
        lp.add_var(format!("fs_{}", rc(layout, v)), VarKind::Continuous);
    }
    let ft_start = lp.num_vars();
    for v in 0..n {
        lp.add_var(format!("ft_{}", rc(layout, v)), VarKind::Continuous);
    }
    let xv = |v: usize, s: Sym| x[v][s.index()].unwrap();

    // Hamming objective; the source counts as already being a dummy.
    let orig = |v: usize| {
        if v == source {
            Sym::D
        } else {
            Sym::of(layout.tile(v))
        }
    };
    for v in 0..n {
        for s in used {
            let c = if orig(v) == s { -1.0 } else { 1.0 };
            lp.objective.push((xv(v, s), c));
        }
    }
    lp.objective_constant = n as f64;

    for v in 0..n {
        lp.add_row(
            format!("uniq_{}", rc(layout, v)),
            used.iter().map(|&s| (xv(v, s), 1.0)).collect(),
            Sense::Eq,
            1.0,
        );
    }
    for v in 0..n {
        if !layout.in_storage(v) {
            let s = orig(v);
            lp.add_row(
                format!("fix_{}_{}", s.letter(), rc(layout, v)),
                vec![(xv(v, s), 1.0)],
                Sense::Eq,
                1.0,
            );
        }
        if v != source {
            lp.add_row(
                format!("fix_d_{}", rc(layout, v)),
                vec![(xv(v, Sym::D), 1.0)],
                Sense::Eq,
                0.0,
            );
        }
    }
    let (count_sym, count) = match scenario {
        Scenario::Workstation => (Sym::W, n_workstations),
        Scenario::HomeLocation => (Sym::H, n_homes),
    };
    lp.add_row(
        "count".into(),
        (0..n)
            .flat_map(|v| [(xv(v, count_sym), 1.0), (xv(v, Sym::D), 1.0)])
            .collect(),
        Sense::Eq,
        count as f64,
    );
    for v in 0..n {
        let mut t: Vec<(usize, f64)> = layout.neighbors(v).map(|u| (xv(u, Sym::S), 1.0)).collect();
        t.push((xv(v, Sym::E), -1.0));
        lp.add_row(format!("adj_e_{}", rc(layout, v)), t, Sense::Ge, 0.0);
        let mut t: Vec<(usize, f64)> = layout.neighbors(v).map(|u| (xv(u, Sym::E), 1.0)).collect();
        t.push((xv(v, Sym::S), -2.0));
        lp.add_row(format!("adj_s_{}", rc(layout, v)), t, Sense::Ge, 0.0);
    }

    // Implied by the flow rows but much tighter in the relaxation: a sink
    // gets its unit through some neighbor that passes flow on.
    let passing: Vec<Sym> = used
        .iter()
        .copied()
        .filter(|s| !Sym::blocking(scenario).contains(s))
        .collect();
    for v in 0..n {
        let mut t: Vec<(usize, f64)> = layout
            .neighbors(v)
            .flat_map(|u| passing.iter().map(move |&s| (u, s)))
            .map(|(u, s)| (xv(u, s), 1.0))
            .collect();
        t.extend(
            used.iter()
                .filter(|s| s.is_sink())
                .map(|&s| (xv(v, s), -1.0)),
        );
        lp.add_row(format!("conn_{}", rc(layout, v)), t, Sense::Ge, 0.0);
    }
    for v in 0..n {
        let mut t = vec![(ft_start + v, 1.0)];
        t.extend(
            used.iter()
                .filter(|s| s.is_sink())
                .map(|&s| (xv(v, s), -1.0)),
        );
        lp.add_row(format!("dem_{}", rc(layout, v)), t, Sense::Eq, 0.0);
    }
    for v in 0..n {
        lp.add_row(
            format!("sup_{}", rc(layout, v)),
            vec![(fs_start + v, 1.0), (xv(v, Sym::D), -big)],
            Sense::Le,
            0.0,
        );
    }
    let mut inflow = vec![Vec::new(); n];
    let mut outflow = vec![Vec::new(); n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        outflow[a].push(flow_start + e);
        inflow[b].push(flow_start + e);
    }
    for v in 0..n {
        let mut t = vec![(fs_start + v, 1.0)];
        t.extend(inflow[v].iter().map(|&f| (f, 1.0)));
        t.push((ft_start + v, -1.0));
        t.extend(outflow[v].iter().map(|&f| (f, -1.0)));
        lp.add_row(format!("cons_{}", rc(layout, v)), t, Sense::Eq, 0.0);
    }
    for (e, &(a, b)) in edges.iter().enumerate() {
        let mut t = vec![(flow_start + e, 1.0)];
        t.extend(Sym::blocking(scenario).iter().map(|&s| (xv(a, s), big)));
        lp.add_row(
            format!("blk_{}_{}", rc(layout, a), rc(layout, b)),
            t,
            Sense::Le,
            big,
        );
    }
    lp.add_row(
        "shelves".into(),
        (0..n).map(|v| (xv(v, Sym::S), 1.0)).collect(),
        Sense::Eq,
        n_shelves as f64,
    );

    Ok(RepairModel {
        lp,
        scenario,
        n_shelves,
        n_workstations: if scenario == Scenario::Workstation {
            n_workstations
        } else {
            0
        },
        n_homes: if scenario == Scenario::HomeLocation {
            n_homes
        } else {
            0
        },
        source,
        unrepaired: layout.clone(),
        x,
        edges,
        flow_start,
        fs_start,
        ft_start,
    })
}
