//! The d-separation engine against an independent brute-force oracle, plus
//! hand-checked textbook fixtures.

mod common;

use common::{count_query_mismatches, oracle_d_separated, random_dag, DagSpec};
use fairshift_core::graph::{CausalGraph, CiQuery, Role};

#[test]
fn engine_matches_oracle_on_random_dags() {
    let mut total = 0;
    for seed in 0..40 {
        let (graph, spec) = random_dag(seed);
        let (queries, mismatches) = count_query_mismatches(&graph, &spec, 3);
        assert_eq!(
            mismatches, 0,
            "seed {seed}: {mismatches}/{queries} disagree (edges {:?})",
            spec.edges
        );
        total += queries;
    }
    assert!(total > 5_000, "only {total} queries exercised");
}

#[test]
fn queries_are_symmetric_in_their_arguments() {
    for seed in 40..60 {
        let (graph, spec) = random_dag(seed);
        let n = spec.n;
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                let given: Vec<usize> = (0..n).filter(|&v| v != x && v != y && v % 2 == 0).collect();
                let a = graph.d_separated(&CiQuery {
                    left: vec![x],
                    right: vec![y],
                    given: given.clone(),
                });
                let b = graph.d_separated(&CiQuery { left: vec![y], right: vec![x], given });
                assert_eq!(a, b, "seed {seed}, pair ({x}, {y})");
            }
        }
    }
}

fn hand_graph(edges: &[(&str, &str)]) -> (CausalGraph, DagSpec) {
    // Endpoints of interest are "a" (outcome) and "b" (context); the rest
    // are unlabeled system nodes.
    let mut names: Vec<&str> = vec!["a", "b"];
    for (p, c) in edges {
        for v in [p, c] {
            if !names.contains(v) {
                names.push(v);
            }
        }
    }
    let nodes: Vec<(String, Role)> = names
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let role = match i {
                0 => Role::Outcome,
                1 => Role::Context,
                _ => Role::System,
            };
            (v.to_string(), role)
        })
        .collect();
    let named: Vec<(String, String)> =
        edges.iter().map(|(p, c)| (p.to_string(), c.to_string())).collect();
    let index = |v: &str| names.iter().position(|n| *n == v).unwrap();
    let idx_edges: Vec<(usize, usize)> = edges.iter().map(|(p, c)| (index(p), index(c))).collect();
    let graph = CausalGraph::new(nodes, named).unwrap();
    (graph, DagSpec::new(names.len(), idx_edges))
}

fn check(graph: &CausalGraph, spec: &DagSpec, given: &[&str], want_separated: bool) {
    let index = |v: &str| graph.node_index(v).unwrap();
    let given_idx: Vec<usize> = given.iter().map(|v| index(v)).collect();
    let q = CiQuery { left: vec![index("a")], right: vec![index("b")], given: given_idx.clone() };
    assert_eq!(graph.d_separated(&q), want_separated, "engine, given {given:?}");
    assert_eq!(
        oracle_d_separated(spec, index("a"), index("b"), &given_idx),
        want_separated,
        "oracle, given {given:?}"
    );
}

#[test]
fn chain_fork_and_collider_fixtures() {
    // Chain a -> m -> b: open marginally, blocked by conditioning on m.
    let (g, s) = hand_graph(&[("a", "m"), ("m", "b")]);
    check(&g, &s, &[], false);
    check(&g, &s, &["m"], true);

    // Fork m -> a, m -> b: same blocking rule.
    let (g, s) = hand_graph(&[("m", "a"), ("m", "b")]);
    check(&g, &s, &[], false);
    check(&g, &s, &["m"], true);

    // Collider a -> c <- b with descendant c -> d: blocked marginally,
    // opened by conditioning on the collider or any descendant.
    let (g, s) = hand_graph(&[("a", "c"), ("b", "c"), ("c", "d")]);
    check(&g, &s, &[], true);
    check(&g, &s, &["c"], false);
    check(&g, &s, &["d"], false);

    // M-graph u -> a, u -> c, v -> c, v -> b: conditioning on the collider
    // c creates the dependence; adding u blocks it again.
    let (g, s) = hand_graph(&[("u", "a"), ("u", "c"), ("v", "c"), ("v", "b")]);
    check(&g, &s, &[], true);
    check(&g, &s, &["c"], false);
    check(&g, &s, &["c", "u"], true);
}
