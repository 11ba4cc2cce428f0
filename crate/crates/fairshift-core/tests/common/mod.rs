//! Shared helpers for the integration suites: a brute-force d-separation
//! oracle (simple-path enumeration with the chain/fork/collider triple
//! rule) and a seeded random-DAG builder. The oracle shares no code with
//! the engine's moralization algorithm, so agreement is meaningful.

// Compiled into every test binary; each uses a different subset.
#![allow(dead_code)]

use fairshift_core::graph::{CausalGraph, CiQuery, Role};
use fairshift_core::rng::row_rng;
use rand::Rng;

/// Plain edge-list DAG mirror consumed by the oracle.
pub struct DagSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    /// reachable[v][u]: u equals v or is a descendant of v.
    reachable: Vec<Vec<bool>>,
}

impl DagSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> DagSpec {
        let mut adjacency = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for &(p, c) in &edges {
            adjacency[p * n + c] = true;
            if !neighbors[p].contains(&c) {
                neighbors[p].push(c);
            }
            if !neighbors[c].contains(&p) {
                neighbors[c].push(p);
            }
        }
        let mut reachable = vec![vec![false; n]; n];
        for v in 0..n {
            reachable[v][v] = true;
            let mut stack = vec![v];
            while let Some(u) = stack.pop() {
                for &(p, c) in &edges {
                    if p == u && !reachable[v][c] {
                        reachable[v][c] = true;
                        stack.push(c);
                    }
                }
            }
        }
        DagSpec { n, edges, adjacency, neighbors, reachable }
    }

    fn points_at(&self, parent: usize, child: usize) -> bool {
        self.adjacency[parent * self.n + child]
    }
}

/// Textbook d-separation: no simple skeleton path between `x` and `y` is
/// active. A collider on a path needs itself or a descendant inside
/// `given`; every other interior node must stay outside `given`.
pub fn oracle_d_separated(g: &DagSpec, x: usize, y: usize, given: &[usize]) -> bool {
    assert_ne!(x, y);
    let mut visited = vec![false; g.n];
    visited[x] = true;
    let mut path = vec![x];
    !active_path_exists(g, y, given, &mut path, &mut visited)
}

fn active_path_exists(
    g: &DagSpec,
    target: usize,
    given: &[usize],
    path: &mut Vec<usize>,
    visited: &mut [bool],
) -> bool {
    let last = *path.last().expect("path never empty");
    if last == target {
        return path_is_active(g, path, given);
    }
    for i in 0..g.neighbors[last].len() {
        let next = g.neighbors[last][i];
        if visited[next] {
            continue;
        }
        visited[next] = true;
        path.push(next);
        let found = active_path_exists(g, target, given, path, visited);
        path.pop();
        visited[next] = false;
        if found {
            return true;
        }
    }
    false
}

fn path_is_active(g: &DagSpec, path: &[usize], given: &[usize]) -> bool {
    for w in path.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let collider = g.points_at(a, b) && g.points_at(c, b);
        if collider {
            if !given.iter().any(|&z| g.reachable[b][z]) {
                return false;
            }
        } else if given.contains(&b) {
            return false;
        }
    }
    true
}

/// Seeded DAG on 2..=8 nodes with edge probability 0.3 (index order keeps
/// it acyclic). Node 0 is the outcome and node 1 the context so the graph
/// type's role validation is satisfied.
pub fn random_dag(seed: u64) -> (CausalGraph, DagSpec) {
    let mut rng = row_rng(seed, 0);
    let n: usize = rng.random_range(2..=8);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.3 {
                edges.push((i, j));
            }
        }
    }
    let name = |i: usize| format!("n{i}");
    let nodes: Vec<(String, Role)> = (0..n)
        .map(|i| {
            let role = match i {
                0 => Role::Outcome,
                1 => Role::Context,
                _ => Role::System,
            };
            (name(i), role)
        })
        .collect();
    let named: Vec<(String, String)> = edges.iter().map(|&(p, c)| (name(p), name(c))).collect();
    let graph = CausalGraph::new(nodes, named).expect("index-ordered edges form a DAG");
    (graph, DagSpec::new(n, edges))
}

/// Engine-vs-oracle sweep over every unordered pair and every conditioning
/// set of size at most `max_given`. Returns (queries run, mismatches).
pub fn count_query_mismatches(
    g: &CausalGraph,
    spec: &DagSpec,
    max_given: usize,
) -> (usize, usize) {
    let n = spec.n;
    let mut queries = 0;
    let mut mismatches = 0;
    for x in 0..n {
        for y in (x + 1)..n {
            let others: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
            for bits in 0u32..(1 << others.len()) {
                if bits.count_ones() as usize > max_given {
                    continue;
                }
                let given: Vec<usize> = others
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| bits & (1 << *i) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                let engine = g.d_separated(&CiQuery {
                    left: vec![x],
                    right: vec![y],
                    given: given.clone(),
                });
                let oracle = oracle_d_separated(spec, x, y, &given);
                queries += 1;
                if engine != oracle {
                    mismatches += 1;
                }
            }
        }
    }
    (queries, mismatches)
}
