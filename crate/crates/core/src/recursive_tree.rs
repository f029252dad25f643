//! Random recursive trees, the cutting construction of the coalescent, and the
//! time-stationary evolving tree whose root-edge maximum tracks the MRCA age.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::exp1;
use crate::path::{BlockPath, PiecewisePath};

/// Rooted tree on vertices `1..=n` (index 0 is unused). Vertex 1 is the root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursiveTree {
    pub n: usize,
    /// `parent[v]`, 0 for the root and for removed vertices.
    pub parent: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    /// Label set carried by each vertex; empty for removed vertices.
    pub labels: Vec<Vec<usize>>,
    /// Exponential label of the edge from `v` to its parent.
    pub edge_clock: Vec<f64>,
    pub alive: Vec<bool>,
}

pub const ROOT: usize = 1;

impl RecursiveTree {
    /// Builds a tree from a parent vector (`parent[v] < v` for `v >= 2`) with
    /// the given edge clocks.
    pub fn from_parents(parent: Vec<usize>, edge_clock: Vec<f64>) -> Result<Self> {
        let n = parent.len().saturating_sub(1);
        if n == 0 || edge_clock.len() != n + 1 {
            return domain("parent and clock vectors must have length n + 1 with n >= 1");
        }
        let mut children = vec![Vec::new(); n + 1];
        for v in 2..=n {
            let p = parent[v];
            if p == 0 || p >= v {
                return domain(format!("vertex {v} has parent {p}, expected 1..{v}"));
            }
            if !(edge_clock[v] > 0.0) {
                return domain(format!("edge clock of vertex {v} must be positive"));
            }
            children[p].push(v);
        }
        Ok(RecursiveTree {
            n,
            parent,
            children,
            labels: (0..=n).map(|v| if v == 0 { vec![] } else { vec![v] }).collect(),
            edge_clock,
            alive: (0..=n).map(|v| v != 0).collect(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// `(parent, child)` pairs of the live tree.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (2..=self.n)
            .filter(|&v| self.alive[v] && self.parent[v] != 0)
            .map(|v| (self.parent[v], v))
            .collect()
    }

    pub fn has_edge(&self, x: usize, y: usize) -> bool {
        y <= self.n && x != 0 && self.alive[y] && self.parent[y] == x
    }

    fn subtree(&self, y: usize) -> Vec<usize> {
        let mut out = vec![y];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out
    }

    /// Removes the subtree rooted at `y` and moves its labels to `x`, where
    /// `(x, y)` is an edge with `x` the endpoint closer to the root. Returns
    /// the number of removed vertices.
    pub fn cut(&mut self, x: usize, y: usize) -> Result<usize> {
        if !self.has_edge(x, y) {
            return Err(Error::MissingEdge(x, y));
        }
        let removed = self.subtree(y);
        let pos = self.children[x].iter().position(|&c| c == y).expect("child listed");
        self.children[x].swap_remove(pos);
        for &v in &removed {
            let moved = std::mem::take(&mut self.labels[v]);
            self.labels[x].extend(moved);
            self.children[v].clear();
            self.parent[v] = 0;
            self.alive[v] = false;
        }
        self.labels[x].sort_unstable();
        Ok(removed.len())
    }

    /// Sum over live vertices of their distance to the root.
    pub fn depth_sum(&self) -> u64 {
        let mut depth = vec![0u64; self.n + 1];
        let mut total = 0;
        let mut stack = vec![ROOT];
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                depth[c] = depth[v] + 1;
                total += depth[c];
                stack.push(c);
            }
        }
        total
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Uniform attachment: vertex `k` picks its parent uniformly from `1..k`.
/// Each edge gets an independent Exp(1) clock.
pub fn build_rrt<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<RecursiveTree> {
    if n < 1 {
        return domain("build_rrt needs n >= 1");
    }
    let mut parent = vec![0usize; n + 1];
    let mut clock = vec![0.0; n + 1];
    for k in 2..=n {
        parent[k] = rng.random_range(1..k);
        clock[k] = exp1(rng);
    }
    RecursiveTree::from_parents(parent, clock)
}

/// Parent vector only, for statistics that need the shape and nothing else.
pub fn rrt_parents<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut parent = vec![0usize; n + 1];
    for (k, p) in parent.iter_mut().enumerate().skip(2) {
        *p = rng.random_range(1..k);
    }
    parent
}

/// Depth sum of a recursive tree given by its parent vector.
pub fn depth_sum_of_parents(parent: &[usize]) -> u64 {
    let mut depth = vec![0u64; parent.len()];
    let mut total = 0;
    for k in 2..parent.len() {
        depth[k] = depth[parent[k]] + 1;
        total += depth[k];
    }
    total
}

pub fn depth_sum(tree: &RecursiveTree) -> u64 {
    tree.depth_sum()
}

/// Copy of `tree` with the edge `(x, y)` cut.
pub fn cut_edge(tree: &RecursiveTree, edge: (usize, usize)) -> Result<RecursiveTree> {
    let mut t = tree.clone();
    t.cut(edge.0, edge.1)?;
    Ok(t)
}

/// Cuts the edges of a tree in increasing clock order, skipping edges that
/// were removed with an earlier subtree. The vertex count is the block count.
pub fn cutting_path(mut tree: RecursiveTree) -> Result<BlockPath> {
    let mut order: Vec<usize> = (2..=tree.n).filter(|&v| tree.alive[v]).collect();
    order.sort_by(|&a, &b| tree.edge_clock[a].total_cmp(&tree.edge_clock[b]));
    let mut path = BlockPath::new(tree.vertex_count());
    for v in order {
        if !tree.alive[v] {
            continue;
        }
        let x = tree.parent[v];
        let removed = tree.cut(x, v)?;
        path.record(tree.edge_clock[v], removed + 1)?;
    }
    Ok(path)
}

pub fn coalescent_from_rrt<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<BlockPath> {
    if n < 2 {
        return domain("coalescent_from_rrt needs n >= 2");
    }
    cutting_path(build_rrt(n, rng)?)
}

/// Tree whose edge clocks run down at unit speed. When a clock hits zero the
/// subtree below that edge is cut off and its vertices are re-attached one at
/// a time to uniform vertices of the current tree with fresh Exp(1) clocks.
#[derive(Debug, Clone)]
pub struct EvolvingTreeState {
    pub n: usize,
    pub now: f64,
    parent: Vec<usize>,
    children: Vec<Vec<usize>>,
    /// Position of `v` in `children[parent[v]]`.
    child_pos: Vec<usize>,
    /// Absolute time at which the edge above `v` is cut.
    expiry: Vec<f64>,
    birth: Vec<f64>,
    generation: Vec<u32>,
    heap: BinaryHeap<Reverse<(OrdF64, usize, u32)>>,
    root_max: f64,
    root_max_stale: bool,
    /// Offset `log log n` subtracted from the root maximum.
    shift: f64,
    /// Vertices currently attached (for uniform parent choice).
    attached: Vec<usize>,
    attached_pos: Vec<usize>,
    pub cuts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl EvolvingTreeState {
    /// Recursive tree on `n >= 3` vertices with i.i.d. Exp(1) clocks, which is
    /// the stationary law of the dynamics.
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n < 3 {
            return domain("evolving tree needs n >= 3 so that log log n is defined");
        }
        let tree = build_rrt(n, rng)?;
        let mut s = EvolvingTreeState {
            n,
            now: 0.0,
            parent: tree.parent,
            children: vec![Vec::new(); n + 1],
            child_pos: vec![0; n + 1],
            expiry: tree.edge_clock,
            birth: vec![0.0; n + 1],
            generation: vec![0; n + 1],
            heap: BinaryHeap::with_capacity(2 * n),
            root_max: 0.0,
            root_max_stale: true,
            shift: (n as f64).ln().ln(),
            attached: (1..=n).collect(),
            attached_pos: (0..=n).map(|v| v.saturating_sub(1)).collect(),
            cuts: 0,
        };
        for v in 2..=n {
            let p = s.parent[v];
            s.child_pos[v] = s.children[p].len();
            s.children[p].push(v);
            s.heap.push(Reverse((OrdF64(s.expiry[v]), v, 0)));
        }
        Ok(s)
    }

    fn detach_child(&mut self, v: usize) {
        let p = self.parent[v];
        let i = self.child_pos[v];
        let last = *self.children[p].last().expect("non-empty child list");
        self.children[p].swap_remove(i);
        if last != v {
            self.child_pos[last] = i;
        }
        if p == ROOT && self.expiry[v] >= self.root_max {
            self.root_max_stale = true;
        }
        self.parent[v] = 0;
    }

    fn attach(&mut self, v: usize, p: usize, expiry: f64) {
        self.parent[v] = p;
        self.child_pos[v] = self.children[p].len();
        self.children[p].push(v);
        self.expiry[v] = expiry;
        self.generation[v] = self.generation[v].wrapping_add(1);
        self.heap.push(Reverse((OrdF64(expiry), v, self.generation[v])));
        if p == ROOT && !self.root_max_stale && expiry > self.root_max {
            self.root_max = expiry;
        }
    }

    fn remove_attached(&mut self, v: usize) {
        let i = self.attached_pos[v];
        let last = *self.attached.last().unwrap();
        self.attached.swap_remove(i);
        if last != v {
            self.attached_pos[last] = i;
        }
    }

    fn push_attached(&mut self, v: usize) {
        self.attached_pos[v] = self.attached.len();
        self.attached.push(v);
    }

    /// Largest absolute expiry among root edges.
    fn root_max_expiry(&mut self) -> f64 {
        if self.root_max_stale {
            self.root_max = self.children[ROOT]
                .iter()
                .map(|&c| self.expiry[c])
                .fold(f64::NEG_INFINITY, f64::max);
            self.root_max_stale = false;
        }
        self.root_max
    }

    /// `M_n(now)`: largest remaining clock on an edge at the root.
    pub fn root_max(&mut self) -> f64 {
        self.root_max_expiry() - self.now
    }

    /// `R_n(now) = M_n(now) - log log n`.
    pub fn r_value(&mut self) -> f64 {
        self.root_max() - self.shift
    }

    fn next_event(&mut self) -> Option<(f64, usize)> {
        while let Some(&Reverse((OrdF64(t), v, g))) = self.heap.peek() {
            if self.generation[v] == g && self.parent[v] != 0 {
                return Some((t, v));
            }
            self.heap.pop();
        }
        None
    }

    fn apply_cut<R: Rng + ?Sized>(&mut self, t: f64, v: usize, rng: &mut R) {
        self.heap.pop();
        self.detach_child(v);
        let mut removed = vec![v];
        let mut i = 0;
        while i < removed.len() {
            let w = removed[i];
            removed.extend(std::mem::take(&mut self.children[w]));
            i += 1;
        }
        for &w in &removed {
            self.parent[w] = 0;
            self.generation[w] = self.generation[w].wrapping_add(1);
            self.remove_attached(w);
        }
        for &w in &removed {
            let p = self.attached[rng.random_range(0..self.attached.len())];
            let e = t + exp1(rng);
            self.attach(w, p, e);
            self.birth[w] = t;
            self.push_attached(w);
        }
        self.cuts += 1;
    }

    /// Runs the dynamics on `(now, now + horizon]` and returns the path of
    /// `R_n` over that interval.
    pub fn evolve<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) -> Result<PiecewisePath> {
        if !(horizon >= 0.0) {
            return domain("horizon must be non-negative");
        }
        let end = self.now + horizon;
        let mut path = PiecewisePath::start(self.now, self.r_value());
        while let Some((t, v)) = self.next_event() {
            if t > end {
                break;
            }
            let before = self.root_max_expiry() - t - self.shift;
            self.now = t;
            self.apply_cut(t, v, rng);
            let after = self.r_value();
            if after != before {
                path.jump(t, before, after);
            }
        }
        self.now = end;
        let v = self.r_value();
        path.push(end, v);
        Ok(path)
    }

    /// Snapshot as a [`RecursiveTree`] with remaining clocks and birth times.
    pub fn snapshot(&self) -> TreeSnapshot {
        TreeSnapshot {
            now: self.now,
            parent: self.parent.clone(),
            remaining_clock: (0..=self.n)
                .map(|v| {
                    if self.parent[v] == 0 {
                        0.0
                    } else {
                        self.expiry[v] - self.now
                    }
                })
                .collect(),
            birth: self.birth.clone(),
        }
    }

    /// Checks vertex count, clock positivity and the cached root maximum.
    pub fn check(&mut self) -> Result<()> {
        let attached = (2..=self.n).filter(|&v| self.parent[v] != 0).count() + 1;
        if attached != self.n || self.attached.len() != self.n {
            return domain(format!("tree has {attached} vertices, expected {}", self.n));
        }
        for v in 2..=self.n {
            if !(self.expiry[v] > self.now) {
                return domain(format!("edge above {v} has non-positive clock"));
            }
        }
        let cached = self.root_max_expiry();
        let direct = self.children[ROOT]
            .iter()
            .map(|&c| self.expiry[c])
            .fold(f64::NEG_INFINITY, f64::max);
        if cached != direct {
            return domain("cached root maximum is out of date");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeSnapshot {
    pub now: f64,
    pub parent: Vec<usize>,
    pub remaining_clock: Vec<f64>,
    pub birth: Vec<f64>,
}

/// Advances the state by `horizon` and returns the emitted `R_n` path.
pub fn evolve_tree<R: Rng + ?Sized>(state: &mut EvolvingTreeState, horizon: f64, rng: &mut R) -> Result<PiecewisePath> {
    state.evolve(horizon, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn path3() -> RecursiveTree {
        RecursiveTree::from_parents(vec![0, 0, 1, 2], vec![0.0, 0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn cut_path_lower_edge() {
        let t = cut_edge(&path3(), (2, 3)).unwrap();
        assert_eq!(t.edges(), vec![(1, 2)]);
        assert_eq!(t.labels[2], vec![2, 3]);
    }

    #[test]
    fn cut_path_root_edge() {
        let t = cut_edge(&path3(), (1, 2)).unwrap();
        assert!(t.edges().is_empty());
        assert_eq!(t.labels[1], vec![1, 2, 3]);
        assert_eq!(t.vertex_count(), 1);
    }

    #[test]
    fn cut_star_leaf() {
        let star = RecursiveTree::from_parents(vec![0, 0, 1, 1, 1], vec![0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let t = cut_edge(&star, (1, 3)).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert_eq!(t.edges(), vec![(1, 2), (1, 4)]);
        assert_eq!(t.labels[1], vec![1, 3]);
        assert_eq!(t.labels[4], vec![4]);
    }

    #[test]
    fn missing_edge() {
        assert!(matches!(cut_edge(&path3(), (1, 3)), Err(Error::MissingEdge(1, 3))));
    }

    #[test]
    fn single_vertex() {
        let mut rng = seeded(0);
        let t = build_rrt(1, &mut rng).unwrap();
        assert!(t.edges().is_empty());
        assert_eq!(t.depth_sum(), 0);
    }

    #[test]
    fn depth_sum_agrees() {
        let mut rng = seeded(4);
        let t = build_rrt(200, &mut rng).unwrap();
        assert_eq!(t.depth_sum(), depth_sum_of_parents(&t.parent));
    }

    #[test]
    fn cutting_gives_valid_path() {
        let mut rng = seeded(2);
        for n in [2usize, 3, 10, 100] {
            let p = coalescent_from_rrt(n, &mut rng).unwrap();
            p.validate().unwrap();
            assert!(p.is_absorbed());
        }
    }

    #[test]
    fn evolving_tree_invariants() {
        let mut rng = seeded(8);
        let mut s = EvolvingTreeState::new(50, &mut rng).unwrap();
        for _ in 0..20 {
            let path = s.evolve(0.05, &mut rng).unwrap();
            s.check().unwrap();
            for w in path.knots.windows(2) {
                if !w[1].is_jump && w[1].time > w[0].time {
                    let slope = (w[1].value - w[0].value) / (w[1].time - w[0].time);
                    assert!((slope + 1.0).abs() < 1e-9);
                }
            }
        }
        assert!(s.cuts > 0);
    }
}
