use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::greedy::greedy_set;
use crate::optim::minimize::{min_norm_with, MinimizeOptions};
use crate::par;
use crate::spaces::{CoefVec, NormModel};
use crate::weights::{IndexSet, Weight};

pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaResult {
    pub value: f64,
    pub witness_set: IndexSet,
    /// Coefficients on `witness_set`, in increasing index order.
    pub witness_coeffs: Vec<f64>,
    pub sets_examined: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaOptions {
    pub budget: u64,
    pub minimize: MinimizeOptions,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        SigmaOptions { budget: DEFAULT_BUDGET, minimize: MinimizeOptions::default() }
    }
}

impl SigmaOptions {
    pub fn with_budget(budget: u64) -> Self {
        SigmaOptions { budget, ..Default::default() }
    }
}

/// `σ^w_δ(x)`: best error over sets of measure at most δ, free coefficients.
pub fn sigma_w(
    model: &NormModel,
    w: &Weight,
    x: &CoefVec,
    delta: f64,
    window: usize,
    budget: u64,
) -> Result<SigmaResult> {
    sigma_w_with(model, w, x, delta, window, &SigmaOptions::with_budget(budget))
}

pub fn sigma_w_with(
    model: &NormModel,
    w: &Weight,
    x: &CoefVec,
    delta: f64,
    window: usize,
    opts: &SigmaOptions,
) -> Result<SigmaResult> {
    let free = !model.is_lattice() || opts.minimize.force_numeric;
    search(model, w, x, delta, window, opts, free)
}

/// `σ̃^w_δ(x)`: best error over projections `x - P_A x` with `w(A) <= δ`.
pub fn sigma_w_tilde(
    model: &NormModel,
    w: &Weight,
    x: &CoefVec,
    delta: f64,
    window: usize,
    budget: u64,
) -> Result<SigmaResult> {
    search(model, w, x, delta, window, &SigmaOptions::with_budget(budget), false)
}

/// Classical best `m`-term error `σ_m(x)`.
pub fn sigma_m(model: &NormModel, x: &CoefVec, m: usize, budget: u64) -> Result<SigmaResult> {
    sigma_w(model, &Weight::counting(), x, m as f64, model.window(), budget)
}

/// Chebyshev greedy approximand on the canonical greedy set, with the
/// residual norm.
pub fn cga(model: &NormModel, x: &CoefVec, m: usize, tol: f64) -> Result<(CoefVec, f64)> {
    let a = greedy_set(x, m)?;
    let r = min_norm_with(model, x, &a, &MinimizeOptions::with_tol(tol))?;
    let mut approx = CoefVec::zeros(model.window().max(x.window()));
    for (n, b) in a.iter().zip(&r.coeffs) {
        approx.set(n, *b);
    }
    Ok((approx, r.value))
}

/// Weight-pruned enumeration of subsets of `ground` (increasing) with
/// index-order measure at most `delta`. `visit` returns false to stop.
pub(crate) fn enumerate_light_sets(
    ground: &[usize],
    weights: &[f64],
    delta: f64,
    first: usize,
    visit: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    fn rec(
        ground: &[usize],
        weights: &[f64],
        delta: f64,
        from: usize,
        acc: f64,
        stack: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        for k in from..ground.len() {
            let s = acc + weights[k];
            if s > delta {
                continue;
            }
            stack.push(ground[k]);
            if !visit(stack) || !rec(ground, weights, delta, k + 1, s, stack, visit) {
                stack.pop();
                return false;
            }
            stack.pop();
        }
        true
    }
    let s = weights[first];
    if s > delta {
        return true;
    }
    let mut stack = vec![ground[first]];
    visit(&stack) && rec(ground, weights, delta, first + 1, s, &mut stack, visit)
}

struct Best {
    value: f64,
    set: Vec<usize>,
    coeffs: Vec<f64>,
}

fn search(
    model: &NormModel,
    w: &Weight,
    x: &CoefVec,
    delta: f64,
    window: usize,
    opts: &SigmaOptions,
    free: bool,
) -> Result<SigmaResult> {
    if !(delta >= 0.0) {
        return invalid(format!("δ must be nonnegative, got {delta}"));
    }
    if window > model.window() {
        return invalid(format!("window {window} exceeds the model window {}", model.window()));
    }
    let base = model.norm(x)?;
    let xs = x.resized(model.window()).into_inner();
    // projections only ever need support elements; free coefficients can use any index
    let ground: Vec<usize> = (1..=window).filter(|&n| free || xs[n - 1] != 0.0).collect();
    let weights: Vec<f64> = ground.iter().map(|&n| w.at(n)).collect();

    // count first so the budget cut is the same for any worker count
    let counts = par::map_range(ground.len(), |i| {
        let mut c = 0u64;
        enumerate_light_sets(&ground, &weights, delta, i, &mut |_| {
            c += 1;
            c <= opts.budget
        });
        c
    });
    let mut remaining = opts.budget.saturating_sub(1);
    let mut quotas = Vec::with_capacity(counts.len());
    let mut total = 1u64;
    let mut truncated = false;
    for &c in &counts {
        let q = c.min(remaining);
        truncated |= q < c;
        remaining -= q;
        total = total.saturating_add(c);
        quotas.push(q);
    }

    let parts = par::map_range(ground.len(), |i| {
        let mut best: Option<Best> = None;
        let mut left = quotas[i];
        if left == 0 {
            return best;
        }
        let mut r = xs.clone();
        enumerate_light_sets(&ground, &weights, delta, i, &mut |set| {
            let (value, coeffs) = if free {
                let a: IndexSet = set.iter().copied().collect();
                let res = min_norm_with(model, x, &a, &opts.minimize).expect("validated input");
                (res.value, res.coeffs)
            } else {
                for &n in set {
                    r[n - 1] = 0.0;
                }
                let v = model.eval(&r);
                for &n in set {
                    r[n - 1] = xs[n - 1];
                }
                (v, set.iter().map(|&n| xs[n - 1]).collect())
            };
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(Best { value, set: set.to_vec(), coeffs });
            }
            left -= 1;
            left > 0
        });
        best
    });

    let mut best = Best { value: base, set: vec![], coeffs: vec![] };
    for b in parts.into_iter().flatten() {
        if b.value < best.value {
            best = b;
        }
    }
    let examined = if truncated { opts.budget } else { total };
    if truncated {
        return Err(Error::BudgetExceeded {
            what: "σ set enumeration".into(),
            examined,
            budget: opts.budget,
            best: Some(best.value),
        });
    }
    Ok(SigmaResult {
        value: best.value,
        witness_set: IndexSet::from_sorted(best.set).expect("dfs emits increasing sets"),
        witness_coeffs: best.coeffs,
        sets_examined: examined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceSpec;

    fn x321() -> CoefVec {
        CoefVec::from(vec![3.0, 2.0, 1.0])
    }

    #[test]
    fn documented_examples() {
        let one = Weight::counting();
        let l2 = NormModel::new(SpaceSpec::lp(2.0), 3).unwrap();
        let r = sigma_w(&l2, &one, &x321(), 0.0, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!((r.value, r.witness_set.len()), (14f64.sqrt(), 0));
        let r = sigma_w(&l2, &one, &x321(), 1.0, 3, DEFAULT_BUDGET).unwrap();
        assert!((r.value - 2.2360680).abs() < 1e-7);
        assert_eq!(r.witness_set.as_slice(), &[1]);
        assert_eq!(r.sets_examined, 4);
        let l1 = NormModel::new(SpaceSpec::lp(1.0), 3).unwrap();
        let r = sigma_w(&l1, &one, &x321(), 2.0, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!((r.value, r.witness_set.as_slice()), (1.0, &[1usize, 2][..]));
        let linf = NormModel::new(SpaceSpec::lp(f64::INFINITY), 3).unwrap();
        let r = sigma_w_tilde(&linf, &one, &x321(), 1.0, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!((r.value, r.witness_set.as_slice()), (2.0, &[1usize][..]));
    }

    #[test]
    fn budget_is_reported_with_partial_best() {
        let l1 = NormModel::new(SpaceSpec::lp(1.0), 6).unwrap();
        let x = CoefVec::from(vec![1.0; 6]);
        let err = sigma_w(&l1, &Weight::counting(), &x, 6.0, 6, 10).unwrap_err();
        match err {
            Error::BudgetExceeded { examined, budget, best, .. } => {
                assert_eq!((examined, budget), (10, 10));
                assert!(best.unwrap() < 6.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn enumeration_respects_measure_and_order() {
        let ground = [1, 2, 3, 4];
        let w = Weight::power(1.0);
        let weights: Vec<f64> = ground.iter().map(|&n| w.at(n)).collect();
        let mut seen = Vec::new();
        for i in 0..ground.len() {
            enumerate_light_sets(&ground, &weights, 1.2, i, &mut |s| {
                seen.push(s.to_vec());
                true
            });
        }
        // oracle: every nonempty subset filtered by its index-order measure
        let mut expect: Vec<Vec<usize>> = (1u64..16)
            .map(|mask| IndexSet::from_mask(mask, 1))
            .filter(|a| w.measure(a) <= 1.2)
            .map(|a| a.as_slice().to_vec())
            .collect();
        expect.sort();
        assert_eq!(seen, expect);
    }

    #[test]
    fn cga_on_sup_norm() {
        let linf = NormModel::new(SpaceSpec::lp(f64::INFINITY), 3).unwrap();
        let (approx, res) = cga(&linf, &x321(), 1, 1e-6).unwrap();
        assert_eq!(res, 2.0);
        assert_eq!(approx.coords(), &[3.0, 0.0, 0.0]);
        let (_, res0) = cga(&linf, &x321(), 0, 1e-6).unwrap();
        assert_eq!(res0, 3.0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = NormModel::new(SpaceSpec::James { q: 2.0.into() }, 7).unwrap();
        let x = CoefVec::from(vec![1.0, -0.5, 0.25, 1.0, 0.0, -1.0, 0.5]);
        let w = Weight::power(0.3);
        let a = par::with_workers(1, || sigma_w(&m, &w, &x, 2.0, 7, DEFAULT_BUDGET).unwrap());
        let b = par::with_workers(3, || sigma_w(&m, &w, &x, 2.0, 7, DEFAULT_BUDGET).unwrap());
        assert_eq!(a, b);
    }
}
