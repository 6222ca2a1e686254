use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use cparity::sem::{check_cf_with, d_separated, parse_sem, CfMethod, CfOptions, CounterfactualLaw, EvidenceSpec, SemGraph};
use serde::Serialize;

use super::print_json;
use crate::failure::{io_error, Failure, Outcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CheckArg {
    Eco,
    Cf,
    Dsep,
}

/// Structural checks on a model file.
#[derive(Debug, Args)]
pub struct SemArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    check: CheckArg,
    /// dsep: first node set (comma separated); defaults to the protected node.
    #[arg(long, value_delimiter = ',')]
    x: Vec<String>,
    /// dsep: second node set; defaults to the prediction node.
    #[arg(long, value_delimiter = ',')]
    y: Vec<String>,
    /// dsep: conditioning set; defaults to the outcome node.
    #[arg(long, value_delimiter = ',')]
    given: Option<Vec<String>>,
    /// cf: observed value NODE=VALUE (repeatable); replaces the file's evidence.
    #[arg(long = "evidence", value_name = "NODE=VALUE")]
    evidence: Vec<String>,
    /// cf: intervention law over the protected node's domain (comma separated);
    /// uniform by default.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    p_a: Option<Vec<f64>>,
    /// cf: total-variation level above which the check reports a violation.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// cf: draws used when the model is too large to enumerate.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct EcoReport {
    check: &'static str,
    protected: String,
    prediction: String,
    outcome: String,
    /// Every directed path from the protected node to the prediction passes
    /// through the outcome. A `false` is not a refutation.
    holds: bool,
    paths: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct DsepReport {
    check: &'static str,
    x: Vec<String>,
    y: Vec<String>,
    given: Vec<String>,
    separated: bool,
}

#[derive(Serialize)]
struct CfReport {
    check: &'static str,
    protected: String,
    prediction: String,
    evidence: BTreeMap<String, String>,
    epsilon: f64,
    tolerance: f64,
    fair: bool,
    method: CfMethod,
    evidence_probability: f64,
    laws: Vec<CounterfactualLaw>,
}

fn role(r: Option<usize>, what: &str) -> Outcome<usize> {
    r.ok_or_else(|| Failure::usage(format!("the model declares no {what} role")))
}

fn lookup(sem: &SemGraph, names: &[String]) -> Outcome<Vec<usize>> {
    names
        .iter()
        .map(|n| sem.index_of(n).map_err(|_| Failure::usage(format!("no node named {n}"))))
        .collect()
}

fn names(sem: &SemGraph, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| sem.node(i).name.clone()).collect()
}

pub fn run(args: &SemArgs) -> Outcome<()> {
    let text = std::fs::read_to_string(&args.model).map_err(|e| io_error(&args.model, e))?;
    let sem = parse_sem(&text).map_err(|e| Failure::parse(format!("{}: {e}", args.model.display())))?;
    let r = sem.roles.clone();
    match args.check {
        CheckArg::Eco => {
            let a = role(r.protected, "protected")?;
            let yhat = role(r.prediction, "prediction")?;
            let y = role(r.outcome, "outcome")?;
            print_json(&EcoReport {
                check: "eco",
                protected: sem.node(a).name.clone(),
                prediction: sem.node(yhat).name.clone(),
                outcome: sem.node(y).name.clone(),
                holds: sem.check_eco_structural(a, yhat, y),
                paths: sem.directed_paths(a, yhat).iter().map(|p| names(&sem, p)).collect(),
            })
        }
        CheckArg::Dsep => {
            let x = if args.x.is_empty() {
                vec![role(r.protected, "protected")?]
            } else {
                lookup(&sem, &args.x)?
            };
            let y = if args.y.is_empty() {
                vec![role(r.prediction, "prediction")?]
            } else {
                lookup(&sem, &args.y)?
            };
            let given = match &args.given {
                Some(g) => lookup(&sem, g)?,
                None => vec![role(r.outcome, "outcome")?],
            };
            let separated = d_separated(&sem, &x, &y, &given)?;
            print_json(&DsepReport {
                check: "dsep",
                x: names(&sem, &x),
                y: names(&sem, &y),
                given: names(&sem, &given),
                separated,
            })
        }
        CheckArg::Cf => {
            let a = role(r.protected, "protected")?;
            let yhat = role(r.prediction, "prediction")?;
            let assignments = if args.evidence.is_empty() {
                r.evidence.clone()
            } else {
                args.evidence
                    .iter()
                    .map(|e| {
                        let (node, value) = e
                            .split_once('=')
                            .ok_or_else(|| Failure::usage(format!("evidence {e:?} is not NODE=VALUE")))?;
                        let i = lookup(&sem, &[node.to_string()])?[0];
                        let v = sem.value_code(i, value).map_err(|e| Failure::usage(e.to_string()))?;
                        Ok((i, v))
                    })
                    .collect::<Outcome<Vec<_>>>()?
            };
            let na = sem.node(a).domain.len();
            let p_a = args.p_a.clone().unwrap_or_else(|| vec![1.0 / na as f64; na]);
            let evidence = EvidenceSpec { assignments };
            let opts = CfOptions {
                samples: args.samples,
                seed: args.seed,
            };
            let res = check_cf_with(&sem, yhat, a, &evidence, &p_a, &opts)?;
            let epsilon = res.parity.epsilon_hat;
            print_json(&CfReport {
                check: "cf",
                protected: sem.node(a).name.clone(),
                prediction: sem.node(yhat).name.clone(),
                evidence: evidence
                    .assignments
                    .iter()
                    .map(|&(i, v)| (sem.node(i).name.clone(), sem.node(i).domain[v].clone()))
                    .collect(),
                epsilon,
                tolerance: args.tolerance,
                fair: epsilon <= args.tolerance,
                method: res.method,
                evidence_probability: res.evidence_probability,
                laws: res.laws,
            })
        }
    }
}
