use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

use super::graph::SemGraph;

/// Whether every path between `x` and `y` is blocked by `z`.
///
/// Active-trail search: a trail may pass a non-collider outside `z` and a
/// collider that is in `z` or has a descendant in `z`.
pub fn d_separated(sem: &SemGraph, x: &[usize], y: &[usize], z: &[usize]) -> Result<bool> {
    let n = sem.len();
    let xs: BTreeSet<usize> = x.iter().copied().collect();
    let ys: BTreeSet<usize> = y.iter().copied().collect();
    let zs: BTreeSet<usize> = z.iter().copied().collect();
    if let Some(&bad) = xs.iter().chain(&ys).chain(&zs).find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!("no node with index {bad}")));
    }
    if !xs.is_disjoint(&ys) || !xs.is_disjoint(&zs) || !ys.is_disjoint(&zs) {
        return Err(Error::InvalidArgument("node sets must be disjoint".into()));
    }

    // z together with all of its ancestors
    let mut anc = vec![false; n];
    let mut stack: Vec<usize> = zs.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if !anc[v] {
            anc[v] = true;
            stack.extend_from_slice(sem.parents(v));
        }
    }

    // (node, arrived travelling up from a child)
    let mut seen = vec![[false; 2]; n];
    let mut queue: VecDeque<(usize, bool)> = xs.iter().map(|&v| (v, true)).collect();
    while let Some((v, up)) = queue.pop_front() {
        if seen[v][up as usize] {
            continue;
        }
        seen[v][up as usize] = true;
        let in_z = zs.contains(&v);
        if !in_z && ys.contains(&v) {
            return Ok(false);
        }
        if up {
            if !in_z {
                queue.extend(sem.parents(v).iter().map(|&p| (p, true)));
                queue.extend(sem.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !in_z {
                queue.extend(sem.children(v).iter().map(|&c| (c, false)));
            }
            if anc[v] {
                queue.extend(sem.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::super::graph::fixtures::{accident, bern};
    use super::super::graph::{Node, Roles};
    use super::super::joint::{conditional_mutual_information, joint_pmf};
    use super::*;
    use crate::kci::replicate_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn accident_path_through_ability_is_open() {
        let g = accident();
        let (a, yhat, y) = g.eco_roles().unwrap();
        assert!(!d_separated(&g, &[a], &[yhat], &[y]).unwrap());
        assert!(d_separated(&g, &[a], &[yhat], &[0]).unwrap());
    }

    #[test]
    fn collider_rule() {
        let b = &["0", "1"];
        let g = SemGraph::new(
            vec![
                Node::exogenous("a", b, bern(0.5)),
                Node::exogenous("b", b, bern(0.5)),
                Node::endogenous("c", b, vec![0, 1], vec![0, 1, 1, 0]),
                Node::endogenous("d", b, vec![2], vec![0, 1]),
            ],
            Roles::default(),
        )
        .unwrap();
        assert!(d_separated(&g, &[0], &[1], &[]).unwrap());
        assert!(!d_separated(&g, &[0], &[1], &[2]).unwrap());
        // a descendant of the collider also opens it
        assert!(!d_separated(&g, &[0], &[1], &[3]).unwrap());
        assert!(d_separated(&g, &[0], &[1], &[0]).is_err());
    }

    /// Random DAG over `n` binary nodes: roots are exogenous with random
    /// pmfs, the rest are random deterministic tables.
    fn random_sem(seed: u64, n: usize) -> SemGraph {
        let mut rng = replicate_rng(seed, 0);
        let b = &["0", "1"];
        let mut nodes = Vec::new();
        for i in 0..n {
            let parents: Vec<usize> = (0..i).filter(|_| rng.random::<f64>() < 0.45).take(3).collect();
            if parents.is_empty() {
                let p = 0.1 + 0.8 * rng.random::<f64>();
                nodes.push(Node::exogenous(&format!("v{i}"), b, bern(p)));
            } else {
                let table = (0..1usize << parents.len()).map(|_| rng.random_range(0..2)).collect();
                nodes.push(Node::endogenous(&format!("v{i}"), b, parents, table));
            }
        }
        SemGraph::new(nodes, Roles::default()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn separation_implies_zero_conditional_information(seed in any::<u64>(), n in 3usize..=6) {
            let g = random_sem(seed, n);
            let joint = joint_pmf(&g).unwrap();
            for x in 0..n {
                for y in x + 1..n {
                    let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
                    for mask in 0..1u32 << rest.len() {
                        let z: Vec<usize> = rest.iter().enumerate()
                            .filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect();
                        if d_separated(&g, &[x], &[y], &z).unwrap() {
                            let cmi = conditional_mutual_information(&joint, &[x], &[y], &z);
                            prop_assert!(cmi <= 1e-12, "x={x} y={y} z={z:?} cmi={cmi}");
                        }
                        prop_assert_eq!(
                            d_separated(&g, &[x], &[y], &z).unwrap(),
                            d_separated(&g, &[y], &[x], &z).unwrap()
                        );
                    }
                }
            }
        }
    }
}
