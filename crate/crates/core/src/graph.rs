//! Visibility graph, its relative-neighbourhood trimming, and graph metrics.

use std::collections::VecDeque;

use crate::geom2d::{distance, distance_sq, in_lune, GeomError, Point2};

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list; duplicates are merged.
    ///
    /// # Panics
    /// On self-loops or out-of-range indices.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Graph::new(n);
        for (i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Inserts `{i, j}`. Returns false if it was already present.
    pub fn add_edge(&mut self, i: usize, j: usize) -> bool {
        assert!(i != j, "self-loop at {i}");
        assert!(i < self.n() && j < self.n(), "edge ({i}, {j}) out of range");
        match self.adj[i].binary_search(&j) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[i].insert(pos, j);
                let pos = self.adj[j].binary_search(&i).unwrap_err();
                self.adj[j].insert(pos, i);
                self.edge_count += 1;
                true
            }
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n() && self.adj[i].binary_search(&j).is_ok()
    }

    /// Sorted neighbour list of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n() == other.n() && self.edges().all(|(i, j)| other.has_edge(i, j))
    }

    /// Hop counts from `src` (`None` = unreachable).
    pub fn bfs_hops(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Edge `{i, j}` iff the agents are at most `v` apart.
pub fn visibility_graph(positions: &[Point2], v: f64) -> Graph {
    let n = positions.len();
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if distance(positions[i], positions[j]) <= v {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Number of other agents strictly inside the lune of `(i, j)`.
pub fn lune_count(i: usize, j: usize, positions: &[Point2]) -> Result<usize, GeomError> {
    let (pi, pj) = (positions[i], positions[j]);
    let mut count = 0;
    for (k, &pk) in positions.iter().enumerate() {
        if k != i && k != j && in_lune(pk, pi, pj)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Whether `{i, j}` survives trimming with at most `m` lune occupants.
///
/// Only agents within range of both endpoints can sit in the lune, so the
/// decision uses the same local data at either end.
fn keeps_edge(i: usize, j: usize, positions: &[Point2], m: usize) -> bool {
    let (pi, pj) = (positions[i], positions[j]);
    let dij = distance_sq(pi, pj);
    if dij == 0.0 {
        // coincident agents have no lune
        return true;
    }
    let mut count = 0;
    for (k, &pk) in positions.iter().enumerate() {
        if k != i && k != j && distance_sq(pi, pk) < dij && distance_sq(pj, pk) < dij {
            count += 1;
            if count > m {
                return false;
            }
        }
    }
    true
}

/// Subgraph of `g` keeping each edge whose lune holds at most `m` agents.
/// `m = 0` yields the relative neighbourhood graph restricted to `g`.
pub fn effective_graph(g: &Graph, positions: &[Point2], m: usize) -> Graph {
    debug_assert_eq!(g.n(), positions.len());
    let mut ge = Graph::new(g.n());
    for (i, j) in g.edges() {
        if keeps_edge(i, j, positions, m) {
            ge.add_edge(i, j);
        }
    }
    ge
}

/// Effective neighbours of `i` computed from `i`'s own view: only agents
/// within range `v` of `i` are consulted.
pub fn local_effective_neighbors(i: usize, positions: &[Point2], v: f64, m: usize) -> Vec<usize> {
    let pi = positions[i];
    let visible: Vec<usize> = (0..positions.len())
        .filter(|&k| k != i && distance(pi, positions[k]) <= v)
        .collect();
    visible
        .iter()
        .copied()
        .filter(|&j| {
            let dij = distance_sq(pi, positions[j]);
            if dij == 0.0 {
                return true;
            }
            let occupants = visible
                .iter()
                .filter(|&&k| {
                    k != j
                        && distance_sq(pi, positions[k]) < dij
                        && distance_sq(positions[j], positions[k]) < dij
                })
                .count();
            occupants <= m
        })
        .collect()
}

pub fn is_connected(g: &Graph) -> bool {
    if g.n() <= 1 {
        return true;
    }
    g.bfs_hops(0).iter().all(Option::is_some)
}

/// Aggregate quantities for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetrics {
    pub edge_count: usize,
    pub effective_edge_count: usize,
    pub connected: bool,
    /// Hop diameter of the visibility graph; `None` when disconnected.
    pub graph_diameter_hops: Option<usize>,
    /// Smallest pairwise distance (0 when `n < 2`).
    pub min_pair_distance: f64,
    /// Geometric swarm diameter (0 when `n < 2`).
    pub max_pair_distance: f64,
    pub max_effective_degree: usize,
    /// Pairs of agents at identical positions.
    pub coincident_pairs: usize,
}

pub fn graph_metrics(g: &Graph, ge: &Graph, positions: &[Point2]) -> GraphMetrics {
    let n = positions.len();
    let connected = is_connected(g);
    let graph_diameter_hops = if !connected {
        None
    } else {
        let mut diam = 0;
        for src in 0..n {
            let far = g.bfs_hops(src).into_iter().flatten().max().unwrap_or(0);
            diam = diam.max(far);
        }
        Some(diam)
    };
    let mut min_d = f64::INFINITY;
    let mut max_d = 0.0_f64;
    let mut coincident_pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(positions[i], positions[j]);
            min_d = min_d.min(d);
            max_d = max_d.max(d);
            if d == 0.0 {
                coincident_pairs += 1;
            }
        }
    }
    if n < 2 {
        min_d = 0.0;
    }
    GraphMetrics {
        edge_count: g.edge_count(),
        effective_edge_count: ge.edge_count(),
        connected,
        graph_diameter_hops,
        min_pair_distance: min_d,
        max_pair_distance: max_d,
        max_effective_degree: (0..ge.n()).map(|i| ge.degree(i)).max().unwrap_or(0),
        coincident_pairs,
    }
}
