//! JSON model files.
//!
//! ```json
//! {
//!   "nodes": [
//!     {"name": "u", "domain": ["lo", "hi"], "pmf": [0.4, 0.6]},
//!     {"name": "z", "domain": ["0", "1"], "parents": ["u"], "table": ["0", "1"]}
//!   ],
//!   "roles": {"protected": "a", "outcome": "y", "prediction": "yhat",
//!             "evidence": {"z": "1"}}
//! }
//! ```
//!
//! A node with `pmf` is exogenous; a node with `parents` and `table` is a
//! deterministic function of its parents. Table rows enumerate parent-value
//! tuples in row-major order, the first parent varying slowest. Nodes may
//! be listed in any order. All `roles` entries are optional.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::graph::{Mechanism, Node, Roles, SemGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSpec {
    name: String,
    domain: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pmf: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parents: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    protected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prediction: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    evidence: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    nodes: Vec<NodeSpec>,
    #[serde(default)]
    roles: RoleSpec,
}

/// Line of the first `"name": "<name>"` entry, 1-based.
fn line_of_node(text: &str, name: &str) -> Option<usize> {
    let quoted = format!("\"{name}\"");
    text.lines()
        .position(|l| {
            l.find("\"name\"")
                .is_some_and(|k| l[k + 6..].trim_start().trim_start_matches(':').trim_start().starts_with(&quoted))
        })
        .map(|i| i + 1)
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// Whether `name` occurs in `message` as a whole word.
fn mentions(message: &str, name: &str) -> bool {
    let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    message.match_indices(name).any(|(k, _)| {
        !word(message[..k].chars().next_back()) && !word(message[k + name.len()..].chars().next())
    })
}

fn at(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

/// Parses and validates a model file; errors carry the offending line.
pub fn parse_sem(text: &str) -> Result<SemGraph> {
    let spec: ModelSpec = serde_json::from_str(text).map_err(|e| at(Some(e.line()), e.to_string()))?;
    let names: Vec<&str> = spec.nodes.iter().map(|n| n.name.as_str()).collect();
    let index = |name: &str| names.iter().position(|n| *n == name);

    let mut nodes = Vec::with_capacity(spec.nodes.len());
    for ns in &spec.nodes {
        let line = line_of_node(text, &ns.name);
        let mechanism = match (&ns.pmf, &ns.parents, &ns.table) {
            (Some(pmf), None, None) => Mechanism::Exogenous { pmf: pmf.clone() },
            (None, Some(parents), Some(table)) => {
                let parents = parents
                    .iter()
                    .map(|p| index(p).ok_or_else(|| at(line, format!("node {}: unknown parent {p}", ns.name))))
                    .collect::<Result<Vec<_>>>()?;
                let table = table
                    .iter()
                    .map(|v| {
                        ns.domain.iter().position(|d| d == v).ok_or_else(|| {
                            at(line, format!("node {}: table value {v} is not in its domain", ns.name))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Mechanism::Endogenous { parents, table }
            }
            _ => {
                return Err(at(
                    line,
                    format!("node {} needs either \"pmf\" or both \"parents\" and \"table\"", ns.name),
                ))
            }
        };
        nodes.push(Node {
            name: ns.name.clone(),
            domain: ns.domain.clone(),
            mechanism,
        });
    }

    let role = |name: &Option<String>, key: &str| -> Result<Option<usize>> {
        match name {
            None => Ok(None),
            Some(n) => index(n)
                .map(Some)
                .ok_or_else(|| at(line_of_key(text, key), format!("role {key} refers to unknown node {n}"))),
        }
    };
    let mut evidence = Vec::new();
    for (node, value) in &spec.roles.evidence {
        let line = line_of_key(text, "evidence");
        let i = index(node).ok_or_else(|| at(line, format!("evidence on unknown node {node}")))?;
        let v = spec.nodes[i]
            .domain
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| at(line, format!("evidence value {value} is not in the domain of {node}")))?;
        evidence.push((i, v));
    }
    let roles = Roles {
        protected: role(&spec.roles.protected, "protected")?,
        outcome: role(&spec.roles.outcome, "outcome")?,
        prediction: role(&spec.roles.prediction, "prediction")?,
        evidence,
    };

    SemGraph::new(nodes, roles).map_err(|e| {
        let message = e.to_string();
        let line = names
            .iter()
            .filter(|n| mentions(&message, n))
            .filter_map(|n| line_of_node(text, n))
            .min();
        at(line, message)
    })
}

/// Serializes a model in the file format, nodes in index order.
pub fn to_json(sem: &SemGraph) -> String {
    let name = |i: usize| sem.node(i).name.clone();
    let nodes = sem
        .nodes()
        .iter()
        .map(|n| match &n.mechanism {
            Mechanism::Exogenous { pmf } => NodeSpec {
                name: n.name.clone(),
                domain: n.domain.clone(),
                pmf: Some(pmf.clone()),
                parents: None,
                table: None,
            },
            Mechanism::Endogenous { parents, table } => NodeSpec {
                name: n.name.clone(),
                domain: n.domain.clone(),
                pmf: None,
                parents: Some(parents.iter().map(|&p| name(p)).collect()),
                table: Some(table.iter().map(|&v| n.domain[v].clone()).collect()),
            },
        })
        .collect();
    let r = &sem.roles;
    let spec = ModelSpec {
        nodes,
        roles: RoleSpec {
            protected: r.protected.map(name),
            outcome: r.outcome.map(name),
            prediction: r.prediction.map(name),
            evidence: r
                .evidence
                .iter()
                .map(|&(i, v)| (name(i), sem.node(i).domain[v].clone()))
                .collect(),
        },
    };
    serde_json::to_string_pretty(&spec).expect("model specs always serialize")
}

#[cfg(test)]
mod tests {
    use super::super::graph::fixtures::accident;
    use super::*;

    const CHAIN: &str = r#"{
  "nodes": [
    {"name": "a", "domain": ["0", "1"], "pmf": [0.5, 0.5]},
    {"name": "z", "domain": ["0", "1"], "parents": ["a"], "table": ["0", "1"]}
  ],
  "roles": {"protected": "a", "evidence": {"z": "1"}}
}"#;

    #[test]
    fn parses_a_chain() {
        let g = parse_sem(CHAIN).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.parents(1), &[0]);
        assert_eq!(g.roles.protected, Some(0));
        assert_eq!(g.roles.evidence, vec![(1, 1)]);
    }

    #[test]
    fn round_trip() {
        let g = accident();
        assert_eq!(parse_sem(&to_json(&g)).unwrap(), g);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let broken = CHAIN.replace("\"pmf\": [0.5, 0.5]}", "\"pmf\": [0.5, 0.5]");
        match parse_sem(&broken) {
            Err(Error::Format { line: Some(l), .. }) => assert!(l >= 3, "{l}"),
            other => panic!("{other:?}"),
        }
        let unknown = CHAIN.replace("\"pmf\"", "\"probs\"");
        assert!(matches!(parse_sem(&unknown), Err(Error::Format { line: Some(3), .. })));
    }

    #[test]
    fn semantic_errors_point_at_the_node() {
        let bad_table = CHAIN.replace("\"table\": [\"0\", \"1\"]", "\"table\": [\"0\"]");
        assert!(matches!(parse_sem(&bad_table), Err(Error::Format { line: Some(4), .. })));
        let bad_value = CHAIN.replace("\"table\": [\"0\", \"1\"]", "\"table\": [\"0\", \"7\"]");
        assert!(matches!(parse_sem(&bad_value), Err(Error::Format { line: Some(4), .. })));
        let bad_pmf = CHAIN.replace("[0.5, 0.5]", "[0.5, 0.6]");
        assert!(matches!(parse_sem(&bad_pmf), Err(Error::Format { line: Some(3), .. })));
        let bad_parent = CHAIN.replace("\"parents\": [\"a\"]", "\"parents\": [\"q\"]");
        assert!(matches!(parse_sem(&bad_parent), Err(Error::Format { line: Some(4), .. })));
        let bad_role = CHAIN.replace("\"protected\": \"a\"", "\"protected\": \"w\"");
        assert!(matches!(parse_sem(&bad_role), Err(Error::Format { line: Some(6), .. })));
        let cyclic = CHAIN.replace(
            "\"pmf\": [0.5, 0.5]",
            "\"parents\": [\"z\"], \"table\": [\"0\", \"1\"]",
        );
        assert!(matches!(parse_sem(&cyclic), Err(Error::Format { .. })));
    }
}
