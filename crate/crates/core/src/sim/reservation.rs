use std::collections::HashSet;

pub const INF: u32 = u32::MAX;

/// Space-time reservations of other agents: per-cell reserved time
/// intervals (inclusive, sorted, disjoint) and directed edge traversals.
#[derive(Debug, Clone)]
pub struct ReservationTable {
    reserved: Vec<Vec<(u32, u32)>>,
    dirty: Vec<usize>,
    edges: HashSet<(u32, u32, u32)>,
}

impl ReservationTable {
    pub fn new(n_cells: usize) -> Self {
        ReservationTable {
            reserved: vec![Vec::new(); n_cells],
            dirty: Vec::new(),
            edges: HashSet::new(),
        }
    }

    pub fn clear(&mut self) {
        for &c in &self.dirty {
            self.reserved[c].clear();
        }
        self.dirty.clear();
        self.edges.clear();
    }

    /// Reserves `cell` for times `from..=to`.
    pub fn reserve_vertex(&mut self, cell: usize, from: u32, to: u32) {
        let list = &mut self.reserved[cell];
        if list.is_empty() {
            self.dirty.push(cell);
        }
        let (mut lo, mut hi) = (from, to);
        // Merge with every interval that overlaps or touches [lo, hi].
        let start = list.partition_point(|&(_, b)| b != INF && b + 1 < lo);
        let mut end = start;
        while end < list.len() && (hi == INF || list[end].0 <= hi + 1) {
            lo = lo.min(list[end].0);
            hi = hi.max(list[end].1);
            end += 1;
        }
        list.splice(start..end, [(lo, hi)]);
    }

    /// Records that another agent moves `from -> to` departing at `t`.
    pub fn reserve_edge(&mut self, from: usize, to: usize, t: u32) {
        self.edges.insert((from as u32, to as u32, t));
    }

    /// Adds a path that starts at `start` (cell of `path[k]` at time
    /// `start + k`) and holds its last cell until `hold_until`.
    pub fn add_path(&mut self, path: &[usize], start: u32, hold_until: u32) {
        let Some(&last) = path.last() else { return };
        for (k, &c) in path.iter().enumerate() {
            let t = start + k as u32;
            self.reserve_vertex(c, t, t);
            if k + 1 < path.len() && path[k + 1] != c {
                self.reserve_edge(c, path[k + 1], t);
            }
        }
        let end = start + path.len() as u32 - 1;
        if hold_until > end {
            self.reserve_vertex(last, end, hold_until);
        }
    }

    pub fn edge_reserved(&self, from: usize, to: usize, t: u32) -> bool {
        !self.edges.is_empty() && self.edges.contains(&(from as u32, to as u32, t))
    }

    pub fn vertex_free(&self, cell: usize, t: u32) -> bool {
        !self.reserved[cell].iter().any(|&(a, b)| a <= t && t <= b)
    }

    /// Maximal free intervals of `cell`, in time order.
    pub fn safe_intervals(&self, cell: usize, out: &mut Vec<(u32, u32)>) {
        out.clear();
        let mut start = 0u32;
        for &(a, b) in &self.reserved[cell] {
            if a > start {
                out.push((start, a - 1));
            }
            if b == INF {
                return;
            }
            start = b + 1;
        }
        out.push((start, INF));
    }

    /// Latest finite reserved time, if any.
    pub fn latest_reserved(&self) -> u32 {
        let mut m = 0;
        for &c in &self.dirty {
            for &(a, b) in &self.reserved[c] {
                m = m.max(if b == INF { a } else { b });
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_adjacent_and_overlapping() {
        let mut rt = ReservationTable::new(1);
        rt.reserve_vertex(0, 5, 5);
        rt.reserve_vertex(0, 7, 8);
        rt.reserve_vertex(0, 6, 6);
        rt.reserve_vertex(0, 1, 2);
        assert_eq!(rt.reserved[0], vec![(1, 2), (5, 8)]);
        rt.reserve_vertex(0, 3, INF);
        assert_eq!(rt.reserved[0], vec![(1, INF)]);
        let mut out = Vec::new();
        rt.safe_intervals(0, &mut out);
        assert_eq!(out, vec![(0, 0)]);
    }

    #[test]
    fn safe_intervals_complement() {
        let mut rt = ReservationTable::new(2);
        rt.add_path(&[0, 1, 1, 0], 2, 3);
        let mut out = Vec::new();
        rt.safe_intervals(0, &mut out);
        assert_eq!(out, vec![(0, 1), (3, 4), (6, INF)]);
        rt.safe_intervals(1, &mut out);
        assert_eq!(out, vec![(0, 2), (5, INF)]);
        assert!(rt.edge_reserved(0, 1, 2));
        assert!(rt.edge_reserved(1, 0, 4));
        assert!(!rt.edge_reserved(1, 0, 3));
        rt.clear();
        rt.safe_intervals(0, &mut out);
        assert_eq!(out, vec![(0, INF)]);
    }
}
