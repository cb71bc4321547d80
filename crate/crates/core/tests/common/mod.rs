//! Strategies and invariant bodies shared by the property tests and the
//! acceptance harness.

#![allow(dead_code)]

use greedylab::constants::{estimate, reevaluate, ConstantName, SearchFamily};
use greedylab::greedy::{all_greedy_sets, greedy_set};
use greedylab::optim::{sigma_w, sigma_w_tilde, DEFAULT_BUDGET};
use greedylab::{CoefVec, NormModel, SpaceSpec, Weight};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn lattice_spec() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        Just(SpaceSpec::lp(1.0)),
        Just(SpaceSpec::lp(2.0)),
        Just(SpaceSpec::lp(f64::INFINITY)),
        (1.0f64..4.0).prop_map(SpaceSpec::lp),
        Just(SpaceSpec::Schreier),
        (0.1f64..0.9).prop_map(|t| SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, Weight::power(t))),
        (0.1f64..0.5).prop_map(|t| SpaceSpec::rosenthal_woo(2.0, 1.0, Weight::power(t))),
    ]
}

pub fn any_spec() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        3 => lattice_spec(),
        1 => Just(SpaceSpec::James { q: 2.0.into() }),
        1 => Just(SpaceSpec::Ebasis),
        1 => (0.2f64..0.8).prop_map(|t| SpaceSpec::RwSumming { q: 2.0.into(), weight: Weight::power(t) }),
    ]
}

pub fn weight() -> impl Strategy<Value = Weight> {
    prop_oneof![
        Just(Weight::counting()),
        (0.0f64..1.0).prop_map(Weight::power),
        (0.3f64..0.95).prop_map(|r| Weight::Geometric { r }),
        prop::collection::vec(0.5f64..3.0, 1..8).prop_map(|values| Weight::Explicit { values, tail: 1.0 }),
    ]
}

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        prop::sample::select(vec![1.0, -1.0, 0.5, -0.5, 0.25, -0.25]),
        -1.0f64..1.0,
    ]
}

/// A nonzero vector on `len` coordinates.
pub fn vector(len: usize) -> impl Strategy<Value = CoefVec> {
    prop::collection::vec(coefficient(), len).prop_filter_map("nonzero", |v| {
        let x = CoefVec::from(v);
        (!x.is_zero()).then_some(x)
    })
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

/// `A_m(x) ⊆ A_{m+1}(x)`, and each canonical set is a greedy set.
pub fn greedy_nesting(x: &CoefVec) -> Result<(), TestCaseError> {
    let s = x.support().len();
    let mut prev = greedy_set(x, 0).map_err(|e| fail(e.to_string()))?;
    for m in 1..=s {
        let a = greedy_set(x, m).map_err(|e| fail(e.to_string()))?;
        if !prev.is_subset(&a) || a.len() != m {
            return Err(fail(format!("A_{} = {prev} not inside A_{m} = {a}", m - 1)));
        }
        let all = all_greedy_sets(x, m, usize::MAX).map_err(|e| fail(e.to_string()))?;
        if !all.contains(&a) {
            return Err(fail(format!("canonical A_{m} = {a} missing from the greedy sets")));
        }
        prev = a;
    }
    Ok(())
}

/// Greedy sets do not change under `x ↦ ±2^k x` (exact in floating point).
pub fn greedy_scaling(x: &CoefVec, k: i32, negate: bool) -> Result<(), TestCaseError> {
    let c = if negate { -(2f64.powi(k)) } else { 2f64.powi(k) };
    let y = x.scale(c);
    for m in 0..=x.support().len() {
        let a = greedy_set(x, m).map_err(|e| fail(e.to_string()))?;
        let b = greedy_set(&y, m).map_err(|e| fail(e.to_string()))?;
        if a != b {
            return Err(fail(format!("m={m}: {a} vs {b} after scaling by {c}")));
        }
        let sa = all_greedy_sets(x, m, 64).map_err(|e| fail(e.to_string()))?;
        let sb = all_greedy_sets(&y, m, 64).map_err(|e| fail(e.to_string()))?;
        if sa != sb {
            return Err(fail(format!("m={m}: greedy set families differ after scaling by {c}")));
        }
    }
    Ok(())
}

/// `δ1 <= δ2` implies `σ_{δ2} <= σ_{δ1}`, for both σ and σ̃.
pub fn sigma_monotone(spec: &SpaceSpec, w: &Weight, x: &CoefVec, d1: f64, d2: f64) -> Result<(), TestCaseError> {
    let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
    let n = x.window();
    let model = NormModel::new(spec.clone(), n).map_err(|e| fail(e.to_string()))?;
    let run = |d: f64, tilde: bool| {
        let r = if tilde {
            sigma_w_tilde(&model, w, x, d, n, DEFAULT_BUDGET)
        } else {
            sigma_w(&model, w, x, d, n, DEFAULT_BUDGET)
        };
        r.map(|s| s.value).map_err(|e| fail(e.to_string()))
    };
    for tilde in [false, true] {
        let (a, b) = (run(lo, tilde)?, run(hi, tilde)?);
        if b > a {
            return Err(fail(format!("σ{} not monotone: {a} at δ={lo}, {b} at δ={hi}", if tilde { "~" } else { "" })));
        }
    }
    Ok(())
}

pub fn small_family(window: usize, samples: usize, seed: u64) -> SearchFamily {
    SearchFamily { window, random_samples: samples, seed, set_size_cap: 2, sigma_instances: 12, ..Default::default() }
}

/// Growing the random part of the family never lowers a supremum estimate.
pub fn estimate_monotone(
    spec: &SpaceSpec,
    w: &Weight,
    name: ConstantName,
    n1: usize,
    n2: usize,
    seed: u64,
) -> Result<(), TestCaseError> {
    let (lo, hi) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
    let model = NormModel::new(spec.clone(), 6).map_err(|e| fail(e.to_string()))?;
    let small = estimate(name, &model, w, &small_family(6, lo, seed)).map_err(|e| fail(e.to_string()))?;
    let big = estimate(name, &model, w, &small_family(6, hi, seed)).map_err(|e| fail(e.to_string()))?;
    if big.value < small.value {
        return Err(fail(format!("{name}: {} with {lo} samples, {} with {hi}", small.value, big.value)));
    }
    Ok(())
}

/// Re-evaluating an emitted witness gives back the emitted value.
pub fn witness_reproduces(spec: &SpaceSpec, w: &Weight, name: ConstantName, seed: u64) -> Result<(), TestCaseError> {
    let model = NormModel::new(spec.clone(), 6).map_err(|e| fail(e.to_string()))?;
    let fam = small_family(6, 10, seed);
    let e = estimate(name, &model, w, &fam).map_err(|e| fail(e.to_string()))?;
    if e.instances == 0 {
        return Ok(());
    }
    let again = reevaluate(name, &model, w, &fam, &e.witness).map_err(|e| fail(e.to_string()))?;
    if (again - e.value).abs() > 1e-12 * e.value.abs().max(1.0) {
        return Err(fail(format!("{name}: emitted {} but witness gives {again}", e.value)));
    }
    Ok(())
}

/// Constants cheap enough for per-case property runs.
pub const MONOTONE_NAMES: [ConstantName; 5] =
    [ConstantName::Kb, ConstantName::Ku, ConstantName::Cq, ConstantName::Ca, ConstantName::Cu];

pub const WITNESS_NAMES: [ConstantName; 10] = [
    ConstantName::Kb,
    ConstantName::Ku,
    ConstantName::Cq,
    ConstantName::Cd,
    ConstantName::Cs,
    ConstantName::Ca,
    ConstantName::Cc,
    ConstantName::Cu,
    ConstantName::PropD,
    ConstantName::Cp,
];
