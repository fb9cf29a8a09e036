//! s-t max-flow / min-cut by shortest augmenting paths.
//!
//! Augmentation proceeds in breadth-first phases (Dinic): each phase builds
//! the BFS level graph of the residual network and saturates every shortest
//! augmenting path in it. Arcs are scanned in insertion order, so results are
//! deterministic for a fixed construction order.

use super::OpCounter;

/// Residual capacities at or below this are treated as zero.
pub const CAPACITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Source,
    Sink,
}

/// Arc endpoint: an inner node index or a terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Node(usize),
    Terminal(Terminal),
}

impl From<usize> for Endpoint {
    fn from(n: usize) -> Self {
        Endpoint::Node(n)
    }
}

pub const SOURCE: Endpoint = Endpoint::Terminal(Terminal::Source);
pub const SINK: Endpoint = Endpoint::Terminal(Terminal::Sink);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: Endpoint,
    pub to: Endpoint,
    pub capacity: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowGraph {
    node_count: usize,
    arcs: Vec<Arc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub value: f64,
    /// `true` for inner nodes on the source side: those reachable from the
    /// source in the final residual network.
    pub source_side: Vec<bool>,
}

impl FlowGraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            arcs: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn add_node(&mut self) -> usize {
        self.node_count += 1;
        self.node_count - 1
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Adds a directed arc. Capacity must be non-negative (infinity allowed).
    pub fn add_arc(&mut self, from: impl Into<Endpoint>, to: impl Into<Endpoint>, capacity: f64) {
        let (from, to) = (from.into(), to.into());
        assert!(capacity >= 0.0, "negative capacity {capacity}");
        for e in [from, to] {
            if let Endpoint::Node(n) = e {
                assert!(n < self.node_count, "node {n} out of range");
            }
        }
        self.arcs.push(Arc { from, to, capacity });
    }

    /// Arc pair `u -> v` and `v -> u` with the same capacity.
    pub fn add_edge(&mut self, u: usize, v: usize, capacity: f64) {
        self.add_arc(u, v, capacity);
        self.add_arc(v, u, capacity);
    }

    /// Capacity of the cut whose source side is `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        let side = |e: Endpoint| match e {
            Endpoint::Node(n) => source_side[n],
            Endpoint::Terminal(Terminal::Source) => true,
            Endpoint::Terminal(Terminal::Sink) => false,
        };
        self.arcs
            .iter()
            .filter(|a| side(a.from) && !side(a.to))
            .map(|a| a.capacity)
            .sum()
    }
}

struct Residual {
    head: Vec<usize>,
    next: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl Residual {
    fn build(g: &FlowGraph) -> (Self, usize, usize) {
        let n = g.node_count + 2;
        let (s, t) = (g.node_count, g.node_count + 1);
        let idx = |e: Endpoint| match e {
            Endpoint::Node(v) => v,
            Endpoint::Terminal(Terminal::Source) => s,
            Endpoint::Terminal(Terminal::Sink) => t,
        };
        let mut r = Residual {
            head: vec![NONE; n],
            next: Vec::with_capacity(2 * g.arcs.len()),
            to: Vec::with_capacity(2 * g.arcs.len()),
            cap: Vec::with_capacity(2 * g.arcs.len()),
        };
        // Adjacency lists are prepended, so insert in reverse to scan in insertion order.
        let mut pending: Vec<(usize, usize, f64)> =
            g.arcs.iter().map(|a| (idx(a.from), idx(a.to), a.capacity)).collect();
        pending.reverse();
        let m = pending.len();
        r.to.resize(2 * m, 0);
        r.cap.resize(2 * m, 0.0);
        r.next.resize(2 * m, NONE);
        for (k, &(u, v, c)) in pending.iter().enumerate() {
            let e = 2 * (m - 1 - k);
            r.to[e] = v;
            r.cap[e] = c;
            r.to[e + 1] = u;
            r.cap[e + 1] = 0.0;
            r.next[e] = r.head[u];
            r.head[u] = e;
            r.next[e + 1] = r.head[v];
            r.head[v] = e + 1;
        }
        (r, s, t)
    }

    fn bfs_levels(&self, s: usize, level: &mut [usize], queue: &mut Vec<usize>) {
        level.fill(NONE);
        queue.clear();
        level[s] = 0;
        queue.push(s);
        let mut i = 0;
        while i < queue.len() {
            let u = queue[i];
            i += 1;
            let mut e = self.head[u];
            while e != NONE {
                let v = self.to[e];
                if level[v] == NONE && self.cap[e] > CAPACITY_EPS {
                    level[v] = level[u] + 1;
                    queue.push(v);
                }
                e = self.next[e];
            }
        }
    }
}

pub fn max_flow(g: &FlowGraph) -> MinCut {
    max_flow_counted(g, &mut OpCounter::default())
}

/// Max-flow with arithmetic operations on flow values credited to `ops`.
pub fn max_flow_counted(g: &FlowGraph, ops: &mut OpCounter) -> MinCut {
    let (mut r, s, t) = Residual::build(g);
    let n = r.head.len();
    let mut level = vec![NONE; n];
    let mut queue = Vec::with_capacity(n);
    let mut iter = vec![NONE; n];
    let mut path: Vec<usize> = Vec::with_capacity(n);
    let mut value = 0.0;

    loop {
        r.bfs_levels(s, &mut level, &mut queue);
        if level[t] == NONE {
            break;
        }
        iter.copy_from_slice(&r.head);
        // Iterative DFS over the level graph; `path` holds edge ids.
        path.clear();
        let mut u = s;
        loop {
            if u == t {
                let mut push = f64::INFINITY;
                for &e in &path {
                    push = push.min(r.cap[e]);
                }
                for &e in &path {
                    r.cap[e] -= push;
                    r.cap[e ^ 1] += push;
                }
                ops.add(2 * path.len() as u64 + 1);
                value += push;
                // Restart from the tail of the first saturated edge.
                let cut_at = path
                    .iter()
                    .position(|&e| r.cap[e] <= CAPACITY_EPS)
                    .unwrap_or(0);
                path.truncate(cut_at);
                u = if cut_at == 0 { s } else { r.to[path[cut_at - 1]] };
                continue;
            }
            let mut advanced = false;
            while iter[u] != NONE {
                let e = iter[u];
                let v = r.to[e];
                if r.cap[e] > CAPACITY_EPS && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                iter[u] = r.next[e];
            }
            if advanced {
                continue;
            }
            // Dead end: retreat.
            if u == s {
                break;
            }
            level[u] = NONE;
            let e = path.pop().expect("non-source node has a path edge");
            u = r.to[e ^ 1];
            iter[u] = r.next[iter[u]];
        }
    }

    r.bfs_levels(s, &mut level, &mut queue);
    let source_side = (0..g.node_count).map(|v| level[v] != NONE).collect();
    MinCut { value, source_side }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path_bottleneck() {
        let mut g = FlowGraph::new(1);
        g.add_arc(SOURCE, 0, 3.0);
        g.add_arc(0, SINK, 2.0);
        let cut = max_flow(&g);
        assert_eq!(cut.value, 2.0);
        // a -> t is saturated, so a stays reachable from s.
        assert_eq!(cut.source_side, vec![true]);
        assert_eq!(g.cut_capacity(&cut.source_side), 2.0);
    }

    #[test]
    fn two_paths_with_cross_arc() {
        let mut g = FlowGraph::new(2);
        let (a, b) = (0, 1);
        g.add_arc(SOURCE, a, 3.0);
        g.add_arc(SOURCE, b, 2.0);
        g.add_arc(a, b, 1.0);
        g.add_arc(a, SINK, 2.0);
        g.add_arc(b, SINK, 3.0);
        let cut = max_flow(&g);
        assert_eq!(cut.value, 5.0);
        assert_eq!(g.cut_capacity(&cut.source_side), 5.0);
    }

    #[test]
    fn disconnected() {
        let mut g = FlowGraph::new(2);
        g.add_arc(SOURCE, 0, 4.0);
        g.add_arc(1, SINK, 4.0);
        let cut = max_flow(&g);
        assert_eq!(cut.value, 0.0);
        assert_eq!(cut.source_side, vec![true, false]);
    }

    #[test]
    fn infinite_arcs() {
        let mut g = FlowGraph::new(2);
        g.add_arc(SOURCE, 0, 5.0);
        g.add_arc(0, 1, f64::INFINITY);
        g.add_arc(1, SINK, 7.0);
        assert_eq!(max_flow(&g).value, 5.0);
    }

    #[test]
    fn counts_ops() {
        let mut g = FlowGraph::new(1);
        g.add_arc(SOURCE, 0, 3.0);
        g.add_arc(0, SINK, 2.0);
        let mut ops = OpCounter::default();
        max_flow_counted(&g, &mut ops);
        assert_eq!(ops.get(), 5);
    }
}
