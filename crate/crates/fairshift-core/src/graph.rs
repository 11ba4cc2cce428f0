//! Annotated causal DAG and d-separation queries.
//!
//! Nodes carry a role: `system` covariates, `context` variables that encode
//! how domains differ, the `protected` attribute, and the single `outcome`.
//! The two transfer assumptions reduce to d-separation statements on this
//! graph: (1) the outcome is independent of every context variable given the
//! candidate subset, and (2) the subset is independent of the contexts given
//! the outcome and the protected attribute.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    System,
    Context,
    Protected,
    Outcome,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::Context => "context",
            Role::Protected => "protected",
            Role::Outcome => "outcome",
        }
    }

    fn parse(s: &str) -> Option<Role> {
        Some(match s {
            "system" => Role::System,
            "context" => Role::Context,
            "protected" => Role::Protected,
            "outcome" => Role::Outcome,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    DuplicateNode(String),
    UnknownNode(String),
    Cycle,
    NoContextNode,
    OutcomeCount(usize),
    MalformedLine { line: usize, text: String },
    UnknownRole { line: usize, role: String },
    /// A conditioning set handed to an assumption check contains a node that
    /// can never be part of a feature subset (the outcome or a context).
    ForbiddenInSubset(String),
    /// Query sets overlap after normalization.
    OverlappingQuerySets(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DuplicateNode(n) => write!(f, "duplicate node `{n}`"),
            GraphError::UnknownNode(n) => write!(f, "unknown node `{n}`"),
            GraphError::Cycle => write!(f, "graph contains a cycle"),
            GraphError::NoContextNode => write!(f, "graph has no context node"),
            GraphError::OutcomeCount(k) => {
                write!(f, "graph must have exactly one outcome node, found {k}")
            }
            GraphError::MalformedLine { line, text } => {
                write!(f, "malformed graph line {line}: `{text}`")
            }
            GraphError::UnknownRole { line, role } => {
                write!(f, "unknown role `{role}` on line {line}")
            }
            GraphError::ForbiddenInSubset(n) => {
                write!(f, "`{n}` is an outcome or context node and cannot be in a feature subset")
            }
            GraphError::OverlappingQuerySets(n) => {
                write!(f, "query sets overlap on `{n}` after normalization")
            }
        }
    }
}

impl core::error::Error for GraphError {}

#[derive(Debug, Clone)]
pub struct CausalGraph {
    names: Vec<String>,
    roles: Vec<Role>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    index: BTreeMap<String, usize>,
}

/// A conditional-independence query `left ⊥ right | given`, held as node
/// indices. Construction normalizes the sets: anything conditioned on is
/// dropped from `left`/`right` (a variable is trivially independent of
/// everything given itself).
#[derive(Debug, Clone)]
pub struct CiQuery {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub given: Vec<usize>,
}

impl CausalGraph {
    pub fn new(
        nodes: Vec<(String, Role)>,
        edges: Vec<(String, String)>,
    ) -> Result<CausalGraph, GraphError> {
        let mut index = BTreeMap::new();
        let mut names = Vec::with_capacity(nodes.len());
        let mut roles = Vec::with_capacity(nodes.len());
        for (name, role) in nodes {
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(GraphError::DuplicateNode(name));
            }
            names.push(name);
            roles.push(role);
        }
        let n = names.len();
        let mut edge_idx = Vec::with_capacity(edges.len());
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (p, c) in &edges {
            let pi = *index.get(p).ok_or_else(|| GraphError::UnknownNode(p.clone()))?;
            let ci = *index.get(c).ok_or_else(|| GraphError::UnknownNode(c.clone()))?;
            edge_idx.push((pi, ci));
            parents[ci].push(pi);
            children[pi].push(ci);
        }
        let g = CausalGraph { names, roles, edges: edge_idx, parents, children, index };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GraphError> {
        // Kahn's algorithm: all nodes must drain for the graph to be acyclic.
        let n = self.names.len();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.parents[i].len()).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for &c in &self.children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if seen != n {
            return Err(GraphError::Cycle);
        }
        let outcomes = self.roles.iter().filter(|r| **r == Role::Outcome).count();
        if outcomes != 1 {
            return Err(GraphError::OutcomeCount(outcomes));
        }
        if !self.roles.contains(&Role::Context) {
            return Err(GraphError::NoContextNode);
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn role(&self, i: usize) -> Role {
        self.roles[i]
    }

    pub fn node_index(&self, name: &str) -> Result<usize, GraphError> {
        self.index.get(name).copied().ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn outcome(&self) -> usize {
        self.roles.iter().position(|r| *r == Role::Outcome).expect("validated")
    }

    pub fn context_nodes(&self) -> Vec<usize> {
        (0..self.names.len()).filter(|&i| self.roles[i] == Role::Context).collect()
    }

    pub fn protected_nodes(&self) -> Vec<usize> {
        (0..self.names.len()).filter(|&i| self.roles[i] == Role::Protected).collect()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Ancestors of `seed` nodes, including the seeds themselves.
    fn ancestral_set(&self, seed: &[usize]) -> Vec<bool> {
        let mut in_set = vec![false; self.names.len()];
        let mut stack: Vec<usize> = seed.to_vec();
        for &s in seed {
            in_set[s] = true;
        }
        while let Some(u) = stack.pop() {
            for &p in &self.parents[u] {
                if !in_set[p] {
                    in_set[p] = true;
                    stack.push(p);
                }
            }
        }
        in_set
    }

    /// d-separation by reachability on the moralized ancestral graph.
    ///
    /// Restrict to ancestors of the query nodes, connect co-parents, drop
    /// edge directions, delete the conditioning set, and test undirected
    /// reachability from `left` to `right`. Equivalent to Bayes-ball.
    pub fn d_separated(&self, q: &CiQuery) -> bool {
        if q.left.is_empty() || q.right.is_empty() {
            return true;
        }
        let n = self.names.len();
        let mut seed: Vec<usize> = Vec::new();
        seed.extend_from_slice(&q.left);
        seed.extend_from_slice(&q.right);
        seed.extend_from_slice(&q.given);
        let anc = self.ancestral_set(&seed);

        let mut adj = vec![Vec::new(); n];
        let connect = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
            if !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        };
        for &(p, c) in &self.edges {
            if anc[p] && anc[c] {
                connect(p, c, &mut adj);
            }
        }
        for w in 0..n {
            if !anc[w] {
                continue;
            }
            let ps = &self.parents[w];
            for i in 0..ps.len() {
                for j in (i + 1)..ps.len() {
                    if anc[ps[i]] && anc[ps[j]] {
                        connect(ps[i], ps[j], &mut adj);
                    }
                }
            }
        }

        let mut blocked = vec![false; n];
        for &z in &q.given {
            blocked[z] = true;
        }
        let mut visited = vec![false; n];
        let mut stack: Vec<usize> = q.left.iter().copied().filter(|&i| !blocked[i]).collect();
        for &s in &stack {
            visited[s] = true;
        }
        let mut right = vec![false; n];
        for &r in &q.right {
            right[r] = true;
        }
        while let Some(u) = stack.pop() {
            if right[u] {
                return false;
            }
            for &v in &adj[u] {
                if !visited[v] && !blocked[v] && anc[v] {
                    visited[v] = true;
                    stack.push(v);
                }
            }
        }
        true
    }

    pub fn query(
        &self,
        left: &[&str],
        right: &[&str],
        given: &[&str],
    ) -> Result<CiQuery, GraphError> {
        let to_idx = |names: &[&str]| -> Result<Vec<usize>, GraphError> {
            let mut out = Vec::with_capacity(names.len());
            for n in names {
                let i = self.node_index(n)?;
                if !out.contains(&i) {
                    out.push(i);
                }
            }
            Ok(out)
        };
        let given_idx = to_idx(given)?;
        let mut left_idx = to_idx(left)?;
        let mut right_idx = to_idx(right)?;
        left_idx.retain(|i| !given_idx.contains(i));
        right_idx.retain(|i| !given_idx.contains(i));
        for i in &left_idx {
            if right_idx.contains(i) {
                return Err(GraphError::OverlappingQuerySets(self.names[*i].clone()));
            }
        }
        Ok(CiQuery { left: left_idx, right: right_idx, given: given_idx })
    }

    /// Assumption 1: the outcome is d-separated from every context variable
    /// by the candidate subset, so the outcome conditional transfers.
    pub fn check_assumption_1(&self, subset: &[&str]) -> Result<bool, GraphError> {
        let s = self.subset_indices(subset)?;
        let q = CiQuery {
            left: vec![self.outcome()],
            right: self.context_nodes(),
            given: s,
        };
        Ok(self.d_separated(&q))
    }

    /// Assumption 2: the subset (minus the protected attribute and outcome,
    /// which move to the conditioning side) is d-separated from the contexts
    /// given the outcome and the protected attribute.
    pub fn check_assumption_2(&self, subset: &[&str]) -> Result<bool, GraphError> {
        let s = self.subset_indices(subset)?;
        let mut given = vec![self.outcome()];
        given.extend(self.protected_nodes());
        let left: Vec<usize> = s.into_iter().filter(|i| !given.contains(i)).collect();
        let q = CiQuery { left, right: self.context_nodes(), given };
        Ok(self.d_separated(&q))
    }

    fn subset_indices(&self, subset: &[&str]) -> Result<Vec<usize>, GraphError> {
        let mut out = Vec::with_capacity(subset.len());
        for name in subset {
            let i = self.node_index(name)?;
            match self.roles[i] {
                Role::Outcome | Role::Context => {
                    return Err(GraphError::ForbiddenInSubset(self.names[i].clone()))
                }
                _ => {}
            }
            if !out.contains(&i) {
                out.push(i);
            }
        }
        Ok(out)
    }
}

/// Parse the text graph format: `node <name> <role>` and
/// `edge <parent> <child>` lines, `#` comments, order-insensitive.
pub fn parse_graph(text: &str) -> Result<CausalGraph, GraphError> {
    let mut nodes: Vec<(String, Role)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let kind = tok.next().unwrap_or("");
        let a = tok.next();
        let b = tok.next();
        let extra = tok.next();
        match (kind, a, b, extra) {
            ("node", Some(name), Some(role), None) => {
                let role = Role::parse(role).ok_or(GraphError::UnknownRole {
                    line: ln + 1,
                    role: role.to_string(),
                })?;
                nodes.push((name.to_string(), role));
            }
            ("edge", Some(p), Some(c), None) => {
                edges.push((p.to_string(), c.to_string()));
            }
            _ => {
                return Err(GraphError::MalformedLine { line: ln + 1, text: line.to_string() })
            }
        }
    }
    CausalGraph::new(nodes, edges)
}

/// Serialize in declaration order; `parse_graph(serialize_graph(g))`
/// reproduces `g` exactly.
pub fn serialize_graph(g: &CausalGraph) -> String {
    let mut out = String::new();
    for (name, role) in g.names.iter().zip(&g.roles) {
        out.push_str("node ");
        out.push_str(name);
        out.push(' ');
        out.push_str(role.as_str());
        out.push('\n');
    }
    for &(p, c) in &g.edges {
        out.push_str("edge ");
        out.push_str(&g.names[p]);
        out.push(' ');
        out.push_str(&g.names[c]);
        out.push('\n');
    }
    out
}

/// The synthetic generator's graph: context C1 shifts the protected-group
/// ratio and the collider X1; X2 drives the outcome directly.
pub fn fig1b_graph() -> CausalGraph {
    parse_graph(
        "node C1 context\n\
         node D protected\n\
         node X1 system\n\
         node X2 system\n\
         node Y outcome\n\
         edge C1 D\n\
         edge C1 X1\n\
         edge D Y\n\
         edge D X1\n\
         edge X2 Y\n\
         edge Y X1\n",
    )
    .expect("static graph")
}
