use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::graph::{Mechanism, SemGraph};

/// Exact joint law, keyed by full assignments (value codes in node order).
pub type JointPmf = BTreeMap<Vec<usize>, f64>;

pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// Calls `f(state, probability)` for every exogenous configuration with
/// positive probability, with endogenous entries filled in.
pub(crate) fn for_each_world(sem: &SemGraph, mut f: impl FnMut(&[usize], f64)) -> Result<()> {
    let total = sem.exogenous_configurations();
    if total > ENUMERATION_BUDGET {
        return Err(Error::StateSpaceTooLarge(total));
    }
    let exo = sem.exogenous_nodes();
    let pmfs: Vec<&[f64]> = exo
        .iter()
        .map(|&i| match &sem.node(i).mechanism {
            Mechanism::Exogenous { pmf } => pmf.as_slice(),
            Mechanism::Endogenous { .. } => unreachable!("exogenous_nodes returned an endogenous node"),
        })
        .collect();
    let mut digits = vec![0usize; exo.len()];
    let mut state = vec![0usize; sem.len()];
    loop {
        let mut p = 1.0;
        for (k, &i) in exo.iter().enumerate() {
            state[i] = digits[k];
            p *= pmfs[k][digits[k]];
        }
        if p > 0.0 {
            sem.propagate(&mut state);
            f(&state, p);
        }
        // odometer increment, last exogenous node fastest
        let mut k = exo.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < pmfs[k].len() {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Exact joint pmf by enumerating exogenous configurations.
pub fn joint_pmf(sem: &SemGraph) -> Result<JointPmf> {
    let mut out = JointPmf::new();
    for_each_world(sem, |state, p| *out.entry(state.to_vec()).or_insert(0.0) += p)?;
    Ok(out)
}

/// Marginal law of the nodes `vars`, keyed by their values in that order.
pub fn marginal(joint: &JointPmf, vars: &[usize]) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    for (state, &p) in joint {
        let key: Vec<usize> = vars.iter().map(|&v| state[v]).collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

/// Conditional mutual information `I(X; Y | Z)` in nats.
pub fn conditional_mutual_information(joint: &JointPmf, x: &[usize], y: &[usize], z: &[usize]) -> f64 {
    let cat = |a: &[usize], b: &[usize]| [a, b].concat();
    let pxyz = marginal(joint, &cat(&cat(x, y), z));
    let pxz = marginal(joint, &cat(x, z));
    let pyz = marginal(joint, &cat(y, z));
    let pz = marginal(joint, z);
    let (nx, ny) = (x.len(), y.len());
    let mut total = 0.0;
    for (key, &p) in &pxyz {
        if p <= 0.0 {
            continue;
        }
        let kx = &key[..nx];
        let ky = &key[nx..nx + ny];
        let kz = &key[nx + ny..];
        let a = pxz[&cat(kx, kz)];
        let b = pyz[&cat(ky, kz)];
        let c = pz[kz];
        total += p * (p * c / (a * b)).ln();
    }
    total.max(0.0)
}
