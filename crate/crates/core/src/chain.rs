//! Coupling graph, connectedness chains and the non-resonant chain certificate.
//!
//! Levels are coupled when their coupling entry survived the zero threshold.
//! A connected coupling graph is a connectedness chain; it is non-resonant when
//! no chain transition frequency coincides with the frequency of another coupled
//! pair. Both verdicts only cover the listed window of modes.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};
use crate::spectral::{ModeIndex, Resonance};

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingGraph {
    pub nodes: Vec<ModeIndex>,
    /// Neighbors of each node, sorted by mode index.
    pub adjacency: Vec<Vec<usize>>,
}

impl CouplingGraph {
    /// Graph on `nodes` with the given undirected edges (self-loops ignored).
    pub fn from_edges(nodes: Vec<ModeIndex>, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b) in edges {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&k| nodes[k]);
            adj.dedup();
        }
        Self { nodes, adjacency }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Undirected edges (a, b) with a < b.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            for &b in adj {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn position(&self, m: ModeIndex) -> Option<usize> {
        self.nodes.iter().position(|&n| n == m)
    }

    fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Edges are the stored off-diagonal entries among the first `node_count` modes.
pub fn build_graph(matrix: &CouplingMatrix, node_count: usize) -> Result<CouplingGraph> {
    if node_count > matrix.modes.len() {
        return Err(Error::invalid(format!(
            "node count {node_count} exceeds the {} modes of the coupling matrix",
            matrix.modes.len()
        )));
    }
    let edges: Vec<_> = matrix
        .entries
        .keys()
        .copied()
        .filter(|&(a, b)| a != b && b < node_count)
        .collect();
    Ok(CouplingGraph::from_edges(
        matrix.modes[..node_count].to_vec(),
        &edges,
    ))
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    /// Node positions per component, ordered by least member.
    pub components: Vec<Vec<usize>>,
}

pub fn check_connected(graph: &CouplingGraph) -> Connectivity {
    let n = graph.len();
    let mut sets = DisjointSets::new(n);
    for (a, b) in graph.edges() {
        sets.union(a, b);
    }
    let mut slot = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let root = sets.find(v);
        if slot[root] == usize::MAX {
            slot[root] = components.len();
            components.push(Vec::new());
        }
        components[slot[root]].push(v);
    }
    Connectivity {
        connected: components.len() <= 1,
        components,
    }
}

/// Shortest path from `j` to `k` by edge count; among shortest paths the one
/// whose node sequence is lexicographically least. `None` if disconnected.
pub fn coupling_path(graph: &CouplingGraph, j: ModeIndex, k: ModeIndex) -> Result<Option<Vec<ModeIndex>>> {
    let js = graph
        .position(j)
        .ok_or_else(|| Error::invalid(format!("mode {j} is not a graph node")))?;
    let ks = graph
        .position(k)
        .ok_or_else(|| Error::invalid(format!("mode {k} is not a graph node")))?;
    Ok(path_positions(graph, js, ks).map(|p| p.into_iter().map(|v| graph.nodes[v]).collect()))
}

fn path_positions(graph: &CouplingGraph, from: usize, to: usize) -> Option<Vec<usize>> {
    let dist = graph.distances_from(to);
    let mut d = dist[from]?;
    let mut path = vec![from];
    let mut cur = from;
    while d > 0 {
        // adjacency is sorted by mode index, so the first hit is the least
        cur = *graph.adjacency[cur]
            .iter()
            .find(|&&v| dist[v] == Some(d - 1))
            .expect("BFS layers are consistent");
        path.push(cur);
        d -= 1;
    }
    Some(path)
}

/// Breadth-first spanning forest, rooted at the least member of each component.
pub fn spanning_tree_edges(graph: &CouplingGraph) -> Vec<(usize, usize)> {
    let n = graph.len();
    let mut seen = vec![false; n];
    let mut edges = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &graph.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    edges.push((u.min(v), u.max(v)));
                    queue.push_back(v);
                }
            }
        }
    }
    edges
}

/// Collisions between chain transition frequencies and those of other coupled pairs.
///
/// For each chain edge {s1, s2} and each coupled pair (t1, t2) in either
/// orientation (diagonal couplings included), reports |(λ_s1 − λ_s2) − (λ_t1 − λ_t2)| ≤ tol
/// with (t1, t2) ≠ (s1, s2). Pairs are oriented with the higher level first
/// (ties go to the later list position); a collision found from both sides is listed once.
pub fn certify_nonresonant_chain(
    eigenvalues: &[f64],
    matrix: &CouplingMatrix,
    chain_edges: &[(usize, usize)],
    tol: f64,
) -> Vec<Resonance<usize>> {
    let n = eigenvalues.len();
    let mut coupled: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in matrix.entries.keys() {
        if b < n {
            coupled.push((a, b));
            if a != b {
                coupled.push((b, a));
            }
        }
    }
    let orient = |(a, b): (usize, usize)| {
        if (eigenvalues[a], a) >= (eigenvalues[b], b) {
            (a, b)
        } else {
            (b, a)
        }
    };
    let mut found = BTreeSet::new();
    let mut out = Vec::new();
    for &edge in chain_edges {
        if edge.0 == edge.1 || edge.0 >= n || edge.1 >= n {
            continue;
        }
        let s = orient(edge);
        let ds = eigenvalues[s.0] - eigenvalues[s.1];
        for &t in &coupled {
            if t == s {
                continue;
            }
            let dt = eigenvalues[t.0] - eigenvalues[t.1];
            let gap = (ds - dt).abs();
            if gap > tol {
                continue;
            }
            let key = if s <= t { (s, t) } else { (t, s) };
            if found.insert(key) {
                out.push(Resonance {
                    s: key.0,
                    t: key.1,
                    gap,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.s, a.t).cmp(&(b.s, b.t)));
    out
}

/// Finite-window certificate for the non-resonant connectedness chain condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainCertificate {
    pub truncation: usize,
    pub resonance_tolerance: f64,
    pub zero_tolerance: crate::coupling::ZeroTol,
    pub connected: bool,
    pub components: Vec<Vec<ModeIndex>>,
    pub chain_edges: Vec<(ModeIndex, ModeIndex)>,
    /// Paths from the least node to every other node of its component.
    pub witness_paths: Vec<(ModeIndex, ModeIndex, Vec<ModeIndex>)>,
    pub violations: Vec<Resonance<ModeIndex>>,
}

impl ChainCertificate {
    pub fn certified(&self) -> bool {
        self.connected && self.violations.is_empty()
    }
}

/// Builds the certificate on the graph's nodes with the breadth-first spanning
/// tree as the chain, unless `chain_edges` is given.
pub fn certify(
    graph: &CouplingGraph,
    eigenvalues: &[f64],
    matrix: &CouplingMatrix,
    chain_edges: Option<Vec<(usize, usize)>>,
    tol: f64,
) -> Result<ChainCertificate> {
    if eigenvalues.len() < graph.len() {
        return Err(Error::invalid("fewer eigenvalues than graph nodes"));
    }
    let conn = check_connected(graph);
    let chain = chain_edges.unwrap_or_else(|| spanning_tree_edges(graph));
    if let Some(&(a, b)) = chain.iter().find(|&&(a, b)| !graph.has_edge(a, b)) {
        return Err(Error::invalid(format!(
            "chain edge {}-{} is not a coupling edge",
            graph.nodes[a], graph.nodes[b]
        )));
    }
    let mut witness_paths = Vec::new();
    for comp in &conn.components {
        let root = comp[0];
        for &v in &comp[1..] {
            let p = path_positions(graph, root, v).expect("same component");
            witness_paths.push((
                graph.nodes[root],
                graph.nodes[v],
                p.into_iter().map(|x| graph.nodes[x]).collect(),
            ));
        }
    }
    let violations = certify_nonresonant_chain(&eigenvalues[..graph.len()], matrix, &chain, tol)
        .iter()
        .map(|r| r.to_modes(&graph.nodes))
        .collect();
    Ok(ChainCertificate {
        truncation: graph.len(),
        resonance_tolerance: tol,
        zero_tolerance: matrix.zero_tol,
        connected: conn.connected,
        components: conn
            .components
            .iter()
            .map(|c| c.iter().map(|&v| graph.nodes[v]).collect())
            .collect(),
        chain_edges: chain.iter().map(|&(a, b)| (graph.nodes[a], graph.nodes[b])).collect(),
        witness_paths,
        violations,
    })
}
