use crate::layout::Layout;
use std::cell::OnceCell;
use std::collections::VecDeque;

pub const UNREACHABLE: u32 = u32::MAX;

/// Traversability graph of a layout with per-goal BFS distances computed on
/// first use.
pub struct Env {
    width: usize,
    passable: Vec<bool>,
    adj: Vec<[u32; 4]>,
    deg: Vec<u8>,
    dist: Vec<OnceCell<Vec<u32>>>,
}

impl Env {
    pub fn new(layout: &Layout) -> Env {
        let n = layout.len();
        let passable: Vec<bool> = (0..n).map(|i| layout.tile(i).is_traversable()).collect();
        let mut adj = vec![[0u32; 4]; n];
        let mut deg = vec![0u8; n];
        for v in 0..n {
            if !passable[v] {
                continue;
            }
            for u in layout.neighbors(v) {
                if passable[u] {
                    adj[v][deg[v] as usize] = u as u32;
                    deg[v] += 1;
                }
            }
        }
        Env {
            width: layout.width(),
            passable,
            adj,
            deg,
            dist: (0..n).map(|_| OnceCell::new()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.passable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passable.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn passable(&self, v: usize) -> bool {
        self.passable[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v][..self.deg[v] as usize]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).contains(&(b as u32))
    }

    /// Distances from every cell to `goal`.
    pub fn dist(&self, goal: usize) -> &[u32] {
        self.dist[goal].get_or_init(|| self.bfs(goal))
    }

    fn bfs(&self, src: usize) -> Vec<u32> {
        let mut d = vec![UNREACHABLE; self.len()];
        if !self.passable[src] {
            return d;
        }
        let mut q = VecDeque::from([src]);
        d[src] = 0;
        while let Some(v) = q.pop_front() {
            for &u in self.neighbors(v) {
                let u = u as usize;
                if d[u] == UNREACHABLE {
                    d[u] = d[v] + 1;
                    q.push_back(u);
                }
            }
        }
        d
    }
}
