//! Counterfactual fairness by twin networks.
//!
//! The factual and counterfactual worlds share every exogenous node. The
//! counterfactual copy has the protected attribute replaced by an
//! independent draw `a' ~ P_a`; the law of the counterfactual prediction is
//! then conditioned on the factual evidence and on `a'`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kci::{replicate_rng, total_variation, EpsilonCpResult, StratumDistance, WorstPair};
use crate::randomization::kernels::draw_index;

use super::graph::{Intervention, Mechanism, SemGraph};
use super::joint::{for_each_world, ENUMERATION_BUDGET};

/// Observed values `(node, value code)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvidenceSpec {
    pub assignments: Vec<(usize, usize)>,
}

impl EvidenceSpec {
    pub fn holds(&self, state: &[usize]) -> bool {
        self.assignments.iter().all(|&(n, v)| state[n] == v)
    }

    pub fn describe(&self, sem: &SemGraph) -> String {
        if self.assignments.is_empty() {
            return "(none)".into();
        }
        self.assignments
            .iter()
            .map(|&(n, v)| format!("{}={}", sem.node(n).name, sem.node(n).domain[v]))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CfMethod {
    Exact,
    Sampling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterfactualLaw {
    pub a: String,
    /// Law of the counterfactual prediction over its domain.
    pub pmf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfResult {
    pub parity: EpsilonCpResult,
    pub laws: Vec<CounterfactualLaw>,
    pub method: CfMethod,
    /// Probability (or sample frequency) of the evidence in the factual world.
    pub evidence_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfOptions {
    /// Draws used when exact enumeration exceeds the budget.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CfOptions {
    fn default() -> Self {
        CfOptions {
            samples: 100_000,
            seed: 0,
        }
    }
}

pub fn check_cf(
    sem: &SemGraph,
    yhat: usize,
    a: usize,
    evidence: &EvidenceSpec,
    p_a: &[f64],
) -> Result<CfResult> {
    check_cf_with(sem, yhat, a, evidence, p_a, &CfOptions::default())
}

pub fn check_cf_with(
    sem: &SemGraph,
    yhat: usize,
    a: usize,
    evidence: &EvidenceSpec,
    p_a: &[f64],
    opts: &CfOptions,
) -> Result<CfResult> {
    let n = sem.len();
    if a >= n || yhat >= n || a == yhat {
        return Err(Error::InvalidArgument("protected and prediction nodes must be distinct nodes".into()));
    }
    let na = sem.node(a).domain.len();
    let ny = sem.node(yhat).domain.len();
    if p_a.len() != na || p_a.iter().any(|p| p.is_nan() || *p <= 0.0) || (p_a.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "intervention law must be a full-support pmf over the {na} values of {}",
            sem.node(a).name
        )));
    }
    for &(node, v) in &evidence.assignments {
        if node >= n || v >= sem.node(node).domain.len() {
            return Err(Error::InvalidArgument("evidence refers to a missing node or value".into()));
        }
    }
    let worlds: Vec<SemGraph> = (0..na)
        .map(|v| sem.intervene(a, &Intervention::SetValue(v)))
        .collect::<Result<_>>()?;

    let mut mass = vec![vec![0.0; ny]; na];
    let mut evidence_mass = 0.0;
    let method;
    if sem.exogenous_configurations() <= ENUMERATION_BUDGET {
        method = CfMethod::Exact;
        let mut cf = vec![0usize; n];
        for_each_world(sem, |state, p| {
            if !evidence.holds(state) {
                return;
            }
            evidence_mass += p;
            for (v, world) in worlds.iter().enumerate() {
                cf.copy_from_slice(state);
                cf[a] = v;
                world.propagate(&mut cf);
                mass[v][cf[yhat]] += p * p_a[v];
            }
        })?;
    } else {
        method = CfMethod::Sampling;
        if opts.samples < 10_000 {
            return Err(Error::InvalidArgument("sampling needs at least 10000 draws".into()));
        }
        let mut hits = 0usize;
        let mut cf = vec![0usize; n];
        for t in 0..opts.samples {
            let mut rng = replicate_rng(opts.seed, t as u64);
            let mut state = vec![0usize; n];
            for &i in sem.topological_order() {
                if let Mechanism::Exogenous { pmf } = &sem.node(i).mechanism {
                    state[i] = draw_index(pmf, rng.random());
                }
            }
            sem.propagate(&mut state);
            let v = draw_index(p_a, rng.random());
            if !evidence.holds(&state) {
                continue;
            }
            hits += 1;
            cf.copy_from_slice(&state);
            cf[a] = v;
            worlds[v].propagate(&mut cf);
            mass[v][cf[yhat]] += 1.0;
        }
        evidence_mass = hits as f64 / opts.samples as f64;
    }

    let mut laws = Vec::with_capacity(na);
    for (v, m) in mass.iter().enumerate() {
        let total: f64 = m.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        laws.push(CounterfactualLaw {
            a: sem.node(a).domain[v].clone(),
            pmf: m.iter().map(|x| x / total).collect(),
        });
    }

    let mut best = 0.0;
    let mut worst = None;
    for i in 0..na {
        for j in i + 1..na {
            let tv = total_variation(&laws[i].pmf, &laws[j].pmf);
            if worst.is_none() || tv > best {
                best = tv;
                worst = Some((i, j));
            }
        }
    }
    let stratum = evidence.describe(sem);
    let parity = EpsilonCpResult {
        epsilon_hat: best,
        worst_pair: worst.map(|(i, j)| WorstPair {
            stratum: stratum.clone(),
            a: laws[i].a.clone(),
            a_prime: laws[j].a.clone(),
        }),
        per_stratum: vec![StratumDistance {
            stratum,
            max_tv: best,
            n: 1,
        }],
        skipped: Vec::new(),
    };
    Ok(CfResult {
        parity,
        laws,
        method,
        evidence_probability: evidence_mass,
    })
}
