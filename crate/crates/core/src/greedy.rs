//! Thresholding greedy machinery: orderings, greedy sets and the coordinate
//! operators built on them.

use crate::error::{invalid, Error, Result};
use crate::spaces::{CoefVec, SignPattern};
use crate::weights::IndexSet;

/// Default cap on the number of greedy sets enumerated per `(x, m)`.
pub const GREEDY_SET_CAP: usize = 64;

/// Support of `x` sorted by decreasing modulus, smallest index first on ties.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOrdering {
    pub perm: Vec<usize>,
    /// Groups of two or more support indices sharing a modulus.
    pub tie_classes: Vec<IndexSet>,
}

pub fn greedy_ordering(x: &CoefVec) -> Result<GreedyOrdering> {
    if x.is_zero() {
        return invalid("the zero vector has no greedy ordering");
    }
    let perm = canonical_order(x.coords());
    let mut tie_classes = Vec::new();
    let mut i = 0;
    while i < perm.len() {
        let m = x.get(perm[i]).abs();
        let j = perm[i..].iter().position(|&n| x.get(n).abs() != m).map_or(perm.len(), |k| i + k);
        if j - i > 1 {
            tie_classes.push(perm[i..j].iter().copied().collect());
        }
        i = j;
    }
    Ok(GreedyOrdering { perm, tie_classes })
}

/// 1-based support indices sorted by decreasing modulus, then index.
pub(crate) fn canonical_order(a: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..=a.len()).filter(|&n| a[n - 1] != 0.0).collect();
    idx.sort_by(|&i, &j| a[j - 1].abs().total_cmp(&a[i - 1].abs()).then(i.cmp(&j)));
    idx
}

fn check_m(x: &CoefVec, m: usize) -> Result<usize> {
    let s = x.coords().iter().filter(|c| **c != 0.0).count();
    if m > s {
        return invalid(format!("m = {m} exceeds the support size {s}"));
    }
    Ok(s)
}

/// The canonical greedy set `A_m(x)`.
pub fn greedy_set(x: &CoefVec, m: usize) -> Result<IndexSet> {
    check_m(x, m)?;
    Ok(canonical_order(x.coords()).into_iter().take(m).collect())
}

/// Every `m`-set whose smallest modulus dominates all moduli outside it.
pub fn all_greedy_sets(x: &CoefVec, m: usize, cap: usize) -> Result<Vec<IndexSet>> {
    check_m(x, m)?;
    if m == 0 {
        return Ok(vec![IndexSet::empty()]);
    }
    let order = canonical_order(x.coords());
    let t = x.get(order[m - 1]).abs();
    let forced: Vec<usize> = order.iter().copied().filter(|&n| x.get(n).abs() > t).collect();
    let tied: Vec<usize> = order.iter().copied().filter(|&n| x.get(n).abs() == t).collect();
    let k = m - forced.len();
    let count = binomial(tied.len(), k);
    if count > cap as u128 {
        return Err(Error::BudgetExceeded {
            what: "greedy sets".into(),
            examined: 0,
            budget: cap as u64,
            best: None,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        out.push(forced.iter().copied().chain(pick.iter().map(|&i| tied[i])).collect());
        // next k-combination of tied positions in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| pick[i] < tied.len() - k + i) else { break };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Greedy approximand `G_m(x) = P_{A_m(x)} x`.
pub fn tga(x: &CoefVec, m: usize) -> Result<CoefVec> {
    Ok(project(x, &greedy_set(x, m)?))
}

/// `S_m x`: keeps coordinates `1..=m`.
pub fn partial_sum(x: &CoefVec, m: usize) -> CoefVec {
    let mut v = x.coords().to_vec();
    v.iter_mut().skip(m).for_each(|c| *c = 0.0);
    CoefVec::from(v)
}

/// `P_A x`: keeps coordinates in `A`.
pub fn project(x: &CoefVec, a: &IndexSet) -> CoefVec {
    let mut v = vec![0.0; x.window()];
    for n in a.iter().filter(|&n| n <= x.window()) {
        v[n - 1] = x.get(n);
    }
    CoefVec::from(v)
}

/// `x - P_A x`.
pub fn project_complement(x: &CoefVec, a: &IndexSet) -> CoefVec {
    let mut v = x.coords().to_vec();
    for n in a.iter().filter(|&n| n <= x.window()) {
        v[n - 1] = 0.0;
    }
    CoefVec::from(v)
}

/// `1_{εA}` on a window large enough to hold `A`.
pub fn indicator(a: &IndexSet, eps: &SignPattern, window: usize) -> CoefVec {
    assert_eq!(a.len(), eps.len(), "sign pattern length must match the set");
    let window = window.max(a.max().unwrap_or(0));
    let mut v = vec![0.0; window];
    for (i, n) in a.iter().enumerate() {
        v[n - 1] = eps.get(i);
    }
    CoefVec::from(v)
}

/// Coordinatewise λ-truncation: moduli above λ are clipped to λ.
pub fn truncate(x: &CoefVec, lambda: f64) -> Result<CoefVec> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return invalid(format!("truncation level must be positive, got {lambda}"));
    }
    Ok(CoefVec::from(
        x.coords()
            .iter()
            .map(|&a| if a.abs() >= lambda { lambda * a.signum() } else { a })
            .collect::<Vec<_>>(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(a: &[f64]) -> CoefVec {
        CoefVec::from(a.to_vec())
    }

    fn set(a: &[usize]) -> IndexSet {
        a.iter().copied().collect()
    }

    #[test]
    fn orderings() {
        let o = greedy_ordering(&v(&[3.0, -2.0, 1.0])).unwrap();
        assert_eq!(o.perm, vec![1, 2, 3]);
        assert!(o.tie_classes.is_empty());
        let o = greedy_ordering(&v(&[1.0, -1.0])).unwrap();
        assert_eq!(o.perm, vec![1, 2]);
        assert_eq!(o.tie_classes, vec![set(&[1, 2])]);
        assert_eq!(greedy_ordering(&v(&[0.0, 5.0, 0.0, 5.0])).unwrap().perm, vec![2, 4]);
        assert!(greedy_ordering(&v(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn greedy_sets() {
        let x = v(&[3.0, -2.0, 1.0]);
        assert_eq!(greedy_set(&x, 2).unwrap(), set(&[1, 2]));
        assert_eq!(all_greedy_sets(&x, 2, 64).unwrap(), vec![set(&[1, 2])]);
        let x = v(&[1.0, -1.0]);
        assert_eq!(greedy_set(&x, 1).unwrap(), set(&[1]));
        assert_eq!(all_greedy_sets(&x, 1, 64).unwrap(), vec![set(&[1]), set(&[2])]);
        assert!(greedy_set(&x, 3).is_err());
        assert_eq!(all_greedy_sets(&x, 0, 64).unwrap(), vec![IndexSet::empty()]);
    }

    #[test]
    fn all_greedy_sets_matches_subset_filter() {
        let x = v(&[2.0, 2.0, 2.0]);
        assert_eq!(all_greedy_sets(&x, 2, 64).unwrap(), vec![set(&[1, 2]), set(&[1, 3]), set(&[2, 3])]);
        // independent oracle: filter every m-subset of the window by the defining inequality
        let x = v(&[1.0, -3.0, 1.0, 0.0, -1.0, 3.0, 0.5]);
        for m in 0..=6 {
            let mut oracle = Vec::new();
            for mask in 0u64..1 << 7 {
                let a = IndexSet::from_mask(mask, 1);
                if a.len() != m {
                    continue;
                }
                let inside = a.iter().map(|n| x.get(n).abs()).fold(f64::INFINITY, f64::min);
                let outside = (1..=7).filter(|n| !a.contains(*n)).map(|n| x.get(n).abs()).fold(0.0, f64::max);
                if inside >= outside {
                    oracle.push(a);
                }
            }
            let mut got = all_greedy_sets(&x, m, 64).unwrap();
            got.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
            oracle.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
            assert_eq!(got, oracle, "m={m}");
        }
    }

    #[test]
    fn greedy_set_cap() {
        let x = v(&[1.0; 10]);
        assert!(matches!(all_greedy_sets(&x, 5, 64), Err(Error::BudgetExceeded { .. })));
        assert_eq!(all_greedy_sets(&x, 5, 252).unwrap().len(), 252);
    }

    #[test]
    fn tga_examples() {
        let x = v(&[3.0, -2.0, 1.0]);
        assert_eq!(tga(&x, 1).unwrap(), v(&[3.0, 0.0, 0.0]));
        assert_eq!(tga(&x, 3).unwrap(), x);
        assert_eq!(tga(&x, 0).unwrap(), v(&[0.0, 0.0, 0.0]));
        assert_eq!(tga(&v(&[1.0, -1.0]), 1).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn operators() {
        let x = v(&[3.0, -2.0, 1.0]);
        assert_eq!(partial_sum(&x, 2), v(&[3.0, -2.0, 0.0]));
        assert_eq!(project(&x, &set(&[2])), v(&[0.0, -2.0, 0.0]));
        assert_eq!(project_complement(&x, &set(&[2])), v(&[3.0, 0.0, 1.0]));
        let eps: SignPattern = serde_json::from_str("[1,-1]").unwrap();
        assert_eq!(indicator(&set(&[1, 3]), &eps, 3), v(&[1.0, 0.0, -1.0]));
    }

    #[test]
    fn truncation() {
        let x = v(&[3.0, -2.0, 1.0]);
        assert_eq!(truncate(&x, 2.0).unwrap(), v(&[2.0, -2.0, 1.0]));
        assert_eq!(truncate(&x, 3.0).unwrap(), x);
        assert_eq!(truncate(&x, 0.5).unwrap(), v(&[0.5, -0.5, 0.5]));
        assert!(truncate(&x, 0.0).is_err());
    }
}
