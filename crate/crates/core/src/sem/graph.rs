use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kci::replicate_rng;
use crate::randomization::kernels::draw_index;

/// How a node obtains its value.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    /// Drawn independently from `pmf` over the node's domain.
    Exogenous { pmf: Vec<f64> },
    /// Deterministic function of the parents, tabulated row-major over
    /// parent-value tuples with the first parent most significant.
    Endogenous { parents: Vec<usize>, table: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub domain: Vec<String>,
    pub mechanism: Mechanism,
}

impl Node {
    pub fn exogenous(name: &str, domain: &[&str], pmf: Vec<f64>) -> Self {
        Node {
            name: name.to_string(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
            mechanism: Mechanism::Exogenous { pmf },
        }
    }

    pub fn endogenous(name: &str, domain: &[&str], parents: Vec<usize>, table: Vec<usize>) -> Self {
        Node {
            name: name.to_string(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
            mechanism: Mechanism::Endogenous { parents, table },
        }
    }

    pub fn parents(&self) -> &[usize] {
        match &self.mechanism {
            Mechanism::Exogenous { .. } => &[],
            Mechanism::Endogenous { parents, .. } => parents,
        }
    }

    pub fn is_exogenous(&self) -> bool {
        matches!(self.mechanism, Mechanism::Exogenous { .. })
    }
}

/// Optional role tags, by node index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Roles {
    pub protected: Option<usize>,
    pub outcome: Option<usize>,
    pub prediction: Option<usize>,
    /// Observed values `(node, value code)`.
    pub evidence: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Intervention {
    SetValue(usize),
    SetDistribution(Vec<f64>),
}

/// A finite structural equation model over a DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct SemGraph {
    nodes: Vec<Node>,
    order: Vec<usize>,
    children: Vec<Vec<usize>>,
    pub roles: Roles,
}

fn check_pmf(pmf: &[f64], size: usize, what: &str) -> Result<()> {
    if pmf.len() != size {
        return Err(Error::Model(format!(
            "{what}: pmf has {} entries for a domain of {size}",
            pmf.len()
        )));
    }
    if pmf.iter().any(|p| p.is_nan() || *p < 0.0) || (pmf.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Model(format!("{what}: pmf must be nonnegative and sum to 1")));
    }
    Ok(())
}

impl SemGraph {
    pub fn new(nodes: Vec<Node>, roles: Roles) -> Result<Self> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.domain.is_empty() {
                return Err(Error::Model(format!("node {} has an empty domain", node.name)));
            }
            if nodes[..i].iter().any(|m| m.name == node.name) {
                return Err(Error::Model(format!("duplicate node name {}", node.name)));
            }
            match &node.mechanism {
                Mechanism::Exogenous { pmf } => check_pmf(pmf, node.domain.len(), &node.name)?,
                Mechanism::Endogenous { parents, table } => {
                    if parents.is_empty() {
                        return Err(Error::Model(format!("endogenous node {} has no parents", node.name)));
                    }
                    let mut rows = 1usize;
                    for (k, &p) in parents.iter().enumerate() {
                        if p >= n || p == i {
                            return Err(Error::Model(format!("node {}: bad parent index {p}", node.name)));
                        }
                        if parents[..k].contains(&p) {
                            return Err(Error::Model(format!("node {}: repeated parent", node.name)));
                        }
                        rows = rows.checked_mul(nodes[p].domain.len()).ok_or_else(|| {
                            Error::Model(format!("node {}: table too large", node.name))
                        })?;
                    }
                    if table.len() != rows {
                        return Err(Error::Model(format!(
                            "node {}: table has {} rows, expected {rows}",
                            node.name,
                            table.len()
                        )));
                    }
                    if let Some(v) = table.iter().find(|&&v| v >= node.domain.len()) {
                        return Err(Error::Model(format!("node {}: table value {v} out of domain", node.name)));
                    }
                }
            }
        }
        let mut children = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            for &p in node.parents() {
                children[p].push(i);
            }
        }
        // Kahn's algorithm, always taking the lowest ready index
        let mut indeg: Vec<usize> = nodes.iter().map(|nd| nd.parents().len()).collect();
        let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Model("graph has a directed cycle".into()));
        }
        let g = SemGraph {
            nodes,
            order,
            children,
            roles: Roles::default(),
        };
        g.with_roles(roles)
    }

    /// Replaces the role tags after checking them against the graph.
    pub fn with_roles(mut self, roles: Roles) -> Result<Self> {
        let n = self.nodes.len();
        for r in [roles.protected, roles.outcome, roles.prediction].into_iter().flatten() {
            if r >= n {
                return Err(Error::Model(format!("role refers to missing node {r}")));
            }
        }
        for &(node, v) in &roles.evidence {
            if node >= n || v >= self.nodes[node].domain.len() {
                return Err(Error::Model("evidence refers to a missing node or value".into()));
            }
        }
        self.roles = roles;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        self.nodes[i].parents()
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| Error::Model(format!("no node named {name}")))
    }

    pub fn value_code(&self, node: usize, label: &str) -> Result<usize> {
        self.nodes[node]
            .domain
            .iter()
            .position(|d| d == label)
            .ok_or_else(|| Error::Model(format!("{label} is not in the domain of {}", self.nodes[node].name)))
    }

    pub fn exogenous_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i].is_exogenous()).collect()
    }

    /// Value of endogenous node `i` given the values of its parents in `state`.
    pub(crate) fn evaluate(&self, i: usize, state: &[usize]) -> usize {
        match &self.nodes[i].mechanism {
            Mechanism::Exogenous { .. } => state[i],
            Mechanism::Endogenous { parents, table } => {
                let mut row = 0usize;
                for &p in parents {
                    row = row * self.nodes[p].domain.len() + state[p];
                }
                table[row]
            }
        }
    }

    /// Completes `state` (exogenous entries filled in) in topological order.
    pub(crate) fn propagate(&self, state: &mut [usize]) {
        for &i in &self.order {
            if !self.nodes[i].is_exogenous() {
                state[i] = self.evaluate(i, state);
            }
        }
    }

    /// Graph surgery: `node` loses its parents and becomes exogenous.
    pub fn intervene(&self, node: usize, action: &Intervention) -> Result<SemGraph> {
        if node >= self.len() {
            return Err(Error::Model(format!("no node with index {node}")));
        }
        let size = self.nodes[node].domain.len();
        let pmf = match action {
            Intervention::SetValue(v) => {
                if *v >= size {
                    return Err(Error::Model(format!("value {v} outside the domain of {}", self.nodes[node].name)));
                }
                let mut p = vec![0.0; size];
                p[*v] = 1.0;
                p
            }
            Intervention::SetDistribution(p) => {
                check_pmf(p, size, &self.nodes[node].name)?;
                p.clone()
            }
        };
        let mut nodes = self.nodes.clone();
        nodes[node].mechanism = Mechanism::Exogenous { pmf };
        SemGraph::new(nodes, self.roles.clone())
    }

    /// Ancestral sampling; row `t` uses the random stream `(seed, t)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<usize>> {
        (0..n)
            .map(|t| {
                let mut rng = replicate_rng(seed, t as u64);
                let mut state = vec![0usize; self.len()];
                for &i in &self.order {
                    state[i] = match &self.nodes[i].mechanism {
                        Mechanism::Exogenous { pmf } => draw_index(pmf, rng.random()),
                        Mechanism::Endogenous { .. } => self.evaluate(i, &state),
                    };
                }
                state
            })
            .collect()
    }

    /// All directed paths from `from` to `to`, children visited in index order.
    pub fn directed_paths(&self, from: usize, to: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut path = vec![from];
        self.paths_rec(to, &mut path, &mut out);
        out
    }

    fn paths_rec(&self, to: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == to && path.len() > 1 {
            out.push(path.clone());
            return;
        }
        let mut kids = self.children[last].clone();
        kids.sort_unstable();
        for c in kids {
            path.push(c);
            self.paths_rec(to, path, out);
            path.pop();
        }
    }

    /// Whether every directed path from `a` to `yhat` passes through `y`.
    /// This certifies equalized counterfactual odds but cannot refute it.
    pub fn check_eco_structural(&self, a: usize, yhat: usize, y: usize) -> bool {
        self.directed_paths(a, yhat).iter().all(|p| p.contains(&y))
    }

    /// Role indices `(protected, prediction, outcome)`, all required.
    pub fn eco_roles(&self) -> Result<(usize, usize, usize)> {
        match (self.roles.protected, self.roles.prediction, self.roles.outcome) {
            (Some(a), Some(p), Some(y)) => Ok((a, p, y)),
            _ => Err(Error::Model("protected, prediction and outcome roles are required".into())),
        }
    }

    /// Number of joint configurations of the exogenous nodes.
    pub fn exogenous_configurations(&self) -> u128 {
        self.exogenous_nodes()
            .iter()
            .map(|&i| self.nodes[i].domain.len() as u128)
            .product()
    }

    /// Node name to domain label for one full assignment.
    pub fn labels(&self, state: &[usize]) -> BTreeMap<String, String> {
        state
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.nodes[i].name.clone(), self.nodes[i].domain[v].clone()))
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn bern(p: f64) -> Vec<f64> {
        vec![1.0 - p, p]
    }

    /// `a -> z -> yhat` with copy tables.
    pub fn chain(p: f64) -> SemGraph {
        SemGraph::new(
            vec![
                Node::exogenous("a", &["0", "1"], bern(p)),
                Node::endogenous("z", &["0", "1"], vec![0], vec![0, 1]),
                Node::endogenous("yhat", &["0", "1"], vec![1], vec![0, 1]),
            ],
            Roles::default(),
        )
        .unwrap()
    }

    /// `u -> {z, a, y}`, `z -> yhat`, with a three-level ability `u`.
    pub fn accident() -> SemGraph {
        let b = &["0", "1"];
        SemGraph::new(
            vec![
                Node::exogenous("u", &["low", "mid", "high"], vec![0.3, 0.4, 0.3]),
                Node::endogenous("z", b, vec![0], vec![0, 1, 1]),
                Node::endogenous("a", b, vec![0], vec![1, 0, 0]),
                Node::endogenous("y", b, vec![0], vec![1, 1, 0]),
                Node::endogenous("yhat", b, vec![1], vec![1, 0]),
            ],
            Roles {
                protected: Some(2),
                outcome: Some(3),
                prediction: Some(4),
                evidence: Vec::new(),
            },
        )
        .unwrap()
    }
}
