//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use greedylab::constants::{
    cardinality_profile, estimate, run_check_with, CheckId, CheckMode, CheckSetup, ConstantName, EstimateStatus,
    ModeRequest, SearchFamily,
};
use greedylab::greedy::{greedy_set, indicator, tga};
use greedylab::lab::{self, Outcome};
use greedylab::optim::{min_norm_with, sigma_w, MinimizeOptions, DEFAULT_BUDGET};
use greedylab::weights::s_w_window;
use greedylab::{CoefVec, IndexSet, NormModel, SignPattern, SpaceSpec, Weight};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcomes = Result<String, String>;

struct Harness {
    failed: usize,
}

impl Harness {
    fn run(&mut self, id: &str, limit: Duration, f: impl FnOnce() -> Outcomes) {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        let res = match res {
            Ok(d) if took > limit => Err(format!("{d}; took {:.2}s, limit {:.0}s", took.as_secs_f64(), limit.as_secs_f64())),
            other => other,
        };
        match res {
            Ok(d) => println!("PASS {id}: {d} ({:.2}s)", took.as_secs_f64()),
            Err(d) => {
                self.failed += 1;
                println!("FAIL {id}: {d} ({:.2}s)", took.as_secs_f64());
            }
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn s<E: ToString>(e: E) -> String {
    e.to_string()
}

fn ones(model: &NormModel, a: &IndexSet) -> Result<f64, String> {
    model.norm(&indicator(a, &SignPattern::all_plus(a.len()), model.window())).map_err(s)
}

fn schreier() -> Outcomes {
    let model = NormModel::new(SpaceSpec::Schreier, 42).map_err(s)?;
    for n in 2..=6usize {
        let far = ones(&model, &IndexSet::range(n * n + 1, n * n + n))?;
        ensure((far - n as f64).abs() <= 1e-9, || format!("far block N={n}: {far}"))?;
    }
    for n in 1..=6usize {
        let near = ones(&model, &IndexSet::range(1, n))?;
        ensure(near <= (n as f64).sqrt() + 1e-9, || format!("initial block N={n}: {near}"))?;
    }
    Ok("far blocks equal N for N=2..6, initial blocks at most sqrt(N)".into())
}

fn ebasis() -> Outcomes {
    let model = NormModel::new(SpaceSpec::Ebasis, 16).map_err(s)?;
    for n in 1..=8usize {
        let mut z = CoefVec::zeros(16);
        for k in 1..=n {
            z.set(2 * k - 1, -1.0);
            z.set(2 * k, 2.0);
        }
        let zn = model.norm(&z).map_err(s)?;
        ensure((zn - 2.0).abs() <= 1e-9, || format!("‖z‖ = {zn} at N={n}"))?;
        let on = ones(&model, &IndexSet::range(1, 2 * n))?;
        let want = 0.75 * n as f64 + 0.25;
        ensure((on - want).abs() <= 1e-9, || format!("indicator norm {on} vs {want} at N={n}"))?;
    }
    let profile = cardinality_profile(&model, 16, 25_000_000).map_err(s)?;
    let lower = |m: usize| profile.iter().filter(|e| e.k >= m).map(|e| e.min).fold(f64::INFINITY, f64::min);
    for m in 1..=6usize {
        let d = lower(m);
        ensure(d >= m as f64 / 8.0 - 1e-9, || format!("d({m}) = {d} < {}", m as f64 / 8.0))?;
    }
    // exact-rational dynamic programme over thresholds, independent of the enumeration
    let oracle = [1.0, 1.0, 1.5, 1.75, 2.0, 2.0, 2.25, 2.25];
    for (m, want) in (1..=8).zip(oracle) {
        let d = lower(m);
        ensure((d - want).abs() <= 1e-9, || format!("d({m}) = {d}, oracle {want}"))?;
    }
    Ok(format!("z and indicator norms for N=1..8; d(m) >= m/8 for m<=6 at window 16; d(4) = {}", lower(4)))
}

fn rw_one_w_greedy() -> Outcomes {
    let w = Weight::power(0.4);
    let model = NormModel::new(SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, w.clone()), 12).map_err(s)?;
    let ca = estimate(ConstantName::Ca, &model, &w, &SearchFamily::default()).map_err(s)?;
    ensure(ca.value <= 1.0 + 1e-9, || format!("Property (A) ratio {}", ca.value))?;
    ensure(ca.status == EstimateStatus::Complete, || "Property (A) search was partial".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let count = 1000;
    for _ in 0..count {
        let mut x = CoefVec::zeros(12);
        for n in 1..=12 {
            if rng.random_bool(0.6) {
                let c: f64 = if rng.random_bool(0.5) { [1.0, -0.5, 0.25][rng.random_range(0..3)] } else { rng.random_range(-1.0..1.0) };
                x.set(n, c);
            }
        }
        if x.is_zero() {
            x.set(rng.random_range(1..=12), 1.0);
        }
        let m = rng.random_range(1..=x.support().len());
        let a = greedy_set(&x, m).map_err(s)?;
        let err = model.norm(&x.sub(&tga(&x, m).map_err(s)?)).map_err(s)?;
        let sigma = sigma_w(&model, &w, &x, w.measure(&a), 12, DEFAULT_BUDGET).map_err(s)?.value;
        if sigma > 1e-12 {
            worst = worst.max(err / sigma);
        } else {
            ensure(err <= 1e-12, || format!("σ = 0 but error {err}"))?;
        }
    }
    ensure(worst <= 1.0 + 1e-6, || format!("w-greedy ratio {worst}"))?;
    Ok(format!(
        "Property (A) ratio {} over {} instances; w-greedy ratio {worst} over {count} random instances",
        ca.value, ca.instances
    ))
}

fn rw_not_conservative() -> Outcomes {
    let (theta, w) = (0.4, Weight::power(0.4));
    let mut ratios = Vec::new();
    for m in 4..=64usize {
        let root = (m as f64).sqrt();
        let mut k = m;
        while w.measure(&IndexSet::range(k + 1, k + m)) > root {
            k += 1;
        }
        let model = NormModel::new(SpaceSpec::rosenthal_woo(2.0, 1.0, w.clone()), k + m).map_err(s)?;
        let ratio = ones(&model, &IndexSet::range(1, m))? / ones(&model, &IndexSet::range(k + 1, k + m))?;
        let wa: f64 = (1..=m).map(|n| (n as f64).powf(-theta)).sum();
        let closed = root.max(wa) / root;
        ensure((ratio - closed).abs() <= 1e-9, || format!("m={m}: ratio {ratio} vs closed form {closed}"))?;
        let bound = ((m as f64).powf(1.0 - theta) - 1.0) / (1.0 - theta) / root;
        ensure(ratio > bound, || format!("m={m}: ratio {ratio} below bound {bound}"))?;
        ratios.push(ratio);
    }
    let (first, last) = (ratios[0], ratios[ratios.len() - 1]);
    ensure(last > first, || format!("no growth: {first} -> {last}"))?;
    Ok(format!("ratio matches closed form and exceeds the bound for m=4..64; grows {first:.6} -> {last:.6}"))
}

fn sw() -> Outcomes {
    let g = s_w_window(&Weight::Geometric { r: 0.5 }, 10).map_err(s)?.value;
    let c = s_w_window(&Weight::counting(), 10).map_err(s)?.value;
    ensure(g == 0 && c == 5, || format!("geometric {g}, constant {c}"))?;
    Ok("geometric(1/2) gives 0, constant at window 10 gives 5".into())
}

/// James norm by enumerating every partition into consecutive blocks.
/// Block sums run right to left, as in the dynamic programme, so the
/// comparison can be exact.
fn james_brute(a: &[f64]) -> f64 {
    let n = a.len();
    let mut best = 0.0f64;
    for cuts in 0u32..1 << (n - 1) {
        let (mut total, mut start) = (0.0, 0);
        for end in 1..=n {
            if end == n || cuts >> (end - 1) & 1 == 1 {
                let block: f64 = a[start..end].iter().rev().sum();
                total += block * block;
                start = end;
            }
        }
        best = best.max(total);
    }
    best.sqrt()
}

fn james_oracle() -> Outcomes {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..200 {
        let n = rng.random_range(1..=10);
        let v: Vec<f64> = (0..n)
            .map(|_| if i % 2 == 0 { rng.random_range(-8i32..=8) as f64 / 4.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let model = NormModel::new(SpaceSpec::James { q: 2.0.into() }, n).map_err(s)?;
        let dp = model.norm(&CoefVec::from(v.clone())).map_err(s)?;
        let bf = james_brute(&v);
        ensure(dp == bf, || format!("{v:?}: dp {dp} vs partitions {bf}"))?;
    }
    Ok("200 random vectors, windows 1..10, bitwise equal".into())
}

fn minimizer_oracle() -> Outcomes {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let specs = [
        SpaceSpec::lp(1.0),
        SpaceSpec::lp(2.0),
        SpaceSpec::lp(f64::INFINITY),
        SpaceSpec::lp(3.0),
        SpaceSpec::Schreier,
        SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, Weight::power(0.4)),
        SpaceSpec::rosenthal_woo(2.0, 1.0, Weight::power(0.4)),
    ];
    let numeric = MinimizeOptions { force_numeric: true, ..MinimizeOptions::default() };
    let mut worst = 0.0f64;
    for i in 0..200 {
        let spec = specs[i % specs.len()].clone();
        let n = rng.random_range(2..=8);
        let model = NormModel::new(spec, n).map_err(s)?;
        let x = CoefVec::from((0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
        let a: IndexSet = (1..=n).filter(|_| rng.random_bool(0.4)).collect();
        let fast = min_norm_with(&model, &x, &a, &MinimizeOptions::default()).map_err(s)?.value;
        let slow = min_norm_with(&model, &x, &a, &numeric).map_err(s)?.value;
        let gap = (fast - slow).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-6, || format!("instance {i}: shortcut {fast} vs numeric {slow}"))?;
    }
    Ok(format!("200 lattice instances, largest gap {worst:.2e}"))
}

fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    } else {
        v.iter().map(|c| c.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn sigma_oracle() -> Outcomes {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut cases = 0;
    for p in [1.0, 2.0, f64::INFINITY] {
        for _ in 0..40 {
            let n = rng.random_range(1..=8);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let model = NormModel::new(SpaceSpec::lp(p), n).map_err(s)?;
            let x = CoefVec::from(v.clone());
            for m in 0..=n {
                let mut best = f64::INFINITY;
                for mask in 0u32..1 << n {
                    if mask.count_ones() as usize > m {
                        continue;
                    }
                    let r: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { 0.0 } else { v[i] }).collect();
                    best = best.min(lp_norm(&r, p));
                }
                let got = sigma_w(&model, &Weight::counting(), &x, m as f64, n, DEFAULT_BUDGET).map_err(s)?.value;
                ensure((got - best).abs() <= 1e-12 * best.max(1.0), || format!("p={p} m={m} {v:?}: {got} vs {best}"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (p, x, m) cases on lp(1), lp(2), lp(inf), windows up to 8"))
}

fn check_all(
    id: CheckId,
    spec: SpaceSpec,
    w: &Weight,
    window: usize,
    setup: CheckSetup,
    want: Option<CheckMode>,
) -> Result<String, String> {
    let model = NormModel::new(spec.clone(), window).map_err(s)?;
    let r = run_check_with(id, &model, w, &SearchFamily::with_window(window), setup).map_err(|e| format!("{id}: {e}"))?;
    let tag = format!("{id} on {}", serde_json::to_string(&spec).unwrap_or_default());
    if let Some(m) = want {
        ensure(r.mode == m, || format!("{tag}: mode {:?}, wanted {m:?}", r.mode))?;
    }
    ensure(r.all_pass, || format!("{tag}: {} of {} instances fail", r.fail_count, r.instance_count))?;
    Ok(format!("{} ({})", r.instance_count, serde_json::to_value(r.mode).unwrap_or_default()))
}

fn exact() -> CheckSetup {
    CheckSetup { mode: ModeRequest::Exact, ..Default::default() }
}

fn truncation() -> Outcomes {
    let rw = Weight::power(0.4);
    let models = [
        (SpaceSpec::lp(1.0), Weight::counting()),
        (SpaceSpec::lp(2.0), Weight::counting()),
        (SpaceSpec::lp(f64::INFINITY), Weight::counting()),
        (SpaceSpec::Schreier, Weight::counting()),
        (SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, rw.clone()), rw.clone()),
        (SpaceSpec::rosenthal_woo(2.0, 1.0, rw.clone()), rw),
    ];
    let mut counts = Vec::new();
    for (spec, w) in models {
        counts.push(check_all(CheckId::TruncationLemma, spec, &w, 12, exact(), Some(CheckMode::Exact))?);
    }
    Ok(format!("exact mode, instances per model: {}", counts.join(", ")))
}

fn rw_greedy_chars() -> Outcomes {
    let w = Weight::power(0.4);
    let spec = SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, w.clone());
    let a = check_all(CheckId::GreedyCharUpper, spec.clone(), &w, 12, exact(), Some(CheckMode::Exact))?;
    let b = check_all(CheckId::AlmostGreedyCharUpper, spec, &w, 12, exact(), Some(CheckMode::Exact))?;
    Ok(format!("greedy-char-upper {a}, almost-greedy-char-upper {b}"))
}

fn relations() -> Outcomes {
    let mut n = 0;
    for spec in [SpaceSpec::lp(1.0), SpaceSpec::lp(2.0), SpaceSpec::lp(f64::INFINITY), SpaceSpec::Ebasis] {
        for id in [CheckId::PropAImpliesSuperdem, CheckId::PropCSuperdemImpliesPropA] {
            check_all(id, spec.clone(), &Weight::counting(), 12, CheckSetup::default(), Some(CheckMode::Relation))?;
            n += 1;
        }
    }
    Ok(format!("Cs <= 2Ca and Ca <= 3CuCs on {n} (model, relation) pairs"))
}

fn part1_and_c0() -> Outcomes {
    let mut out = Vec::new();
    for spec in [SpaceSpec::Schreier, SpaceSpec::lp(1.0)] {
        for id in [CheckId::Part1Lemma, CheckId::FindC0Bound] {
            out.push(check_all(id, spec.clone(), &Weight::counting(), 12, CheckSetup::default(), None)?);
        }
    }
    Ok(format!("instances: {}", out.join(", ")))
}

fn weight_transfer() -> Outcomes {
    let w = Weight::Explicit { values: vec![1.0, 3.0, 2.0, 1.5, 2.5, 1.0, 3.0, 2.0, 1.25, 2.75, 1.75, 2.25], tail: 2.0 };
    let setup = CheckSetup { alt_weight: Some(Weight::counting()), ..Default::default() };
    let model = NormModel::new(SpaceSpec::lp(2.0), 12).map_err(s)?;
    let r = run_check_with(CheckId::WeightTransfer, &model, &w, &SearchFamily::default(), setup).map_err(s)?;
    ensure(r.all_pass, || format!("{} of {} instances fail", r.fail_count, r.instance_count))?;
    let bound = r.constants.get("bound").copied().unwrap_or(f64::NAN);
    Ok(format!("{} instances under the stated constant {bound:.6}", r.instance_count))
}

fn invariants() -> Outcomes {
    use common::*;
    use proptest::prelude::*;
    let cfg = |cases| Config { cases, failure_persistence: None, ..Config::default() };
    let runner = |cases| TestRunner::new_with_rng(cfg(cases), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let mut total = 0;

    runner(256)
        .run(&(1usize..=10).prop_flat_map(vector), |x| greedy_nesting(&x))
        .map_err(|e| format!("greedy nesting: {e}"))?;
    runner(256)
        .run(&((1usize..=10).prop_flat_map(vector), -6i32..6, any::<bool>()), |(x, k, neg)| greedy_scaling(&x, k, neg))
        .map_err(|e| format!("greedy scaling: {e}"))?;
    total += 512;
    runner(96)
        .run(&(lattice_spec(), weight(), (1usize..=7).prop_flat_map(vector), 0.0f64..4.0, 0.0f64..4.0), |(sp, w, x, a, b)| {
            sigma_monotone(&sp, &w, &x, a, b)
        })
        .map_err(|e| format!("σ monotonicity: {e}"))?;
    total += 96;
    runner(24)
        .run(
            &(any_spec(), weight(), prop::sample::select(MONOTONE_NAMES.to_vec()), 0usize..30, 0usize..30, any::<u64>()),
            |(sp, w, name, a, b, seed)| estimate_monotone(&sp, &w, name, a, b, seed),
        )
        .map_err(|e| format!("estimate monotonicity: {e}"))?;
    total += 24;
    runner(24)
        .run(&(any_spec(), weight(), prop::sample::select(WITNESS_NAMES.to_vec()), any::<u64>()), |(sp, w, name, seed)| {
            witness_reproduces(&sp, &w, name, seed)
        })
        .map_err(|e| format!("witness reproducibility: {e}"))?;
    total += 24;
    Ok(format!("{total} generated cases across the four invariant families"))
}

fn theorem_suite() -> Outcomes {
    let r = lab::reproduce("theorem-suite", 1).map_err(s)?;
    let failed: Vec<&str> = r.criteria.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    ensure(r.outcome == Outcome::Pass, || format!("outcome {:?}, failing: {failed:?}, flags {:?}", r.outcome, r.budget_flags))?;
    Ok(format!(
        "exit {}, {} verdict checks, {} reported checks, {:.1}s",
        r.outcome.exit_code(),
        r.criteria.len(),
        r.checks.len(),
        r.wall_clock_seconds
    ))
}

fn main() {
    let secs = Duration::from_secs;
    let mut h = Harness { failed: 0 };
    h.run("1a schreier-norms", secs(1), schreier);
    h.run("1b ebasis-norms-and-profile", secs(1), ebasis);
    h.run("1c rw-inf-one-w-greedy", secs(1), rw_one_w_greedy);
    h.run("1d rw-not-conservative", secs(1), rw_not_conservative);
    h.run("1e triviality-index", secs(1), sw);
    h.run("2a james-dp-vs-partitions", secs(30), james_oracle);
    h.run("2b minimizer-vs-lattice-shortcut", secs(30), minimizer_oracle);
    h.run("2c sigma-vs-best-m-term", secs(30), sigma_oracle);
    h.run("3a truncation-lemma", secs(120), truncation);
    h.run("3b greedy-characterizations", secs(120), rw_greedy_chars);
    h.run("3c superdemocracy-relations", secs(120), relations);
    h.run("3d part1-and-find-c0", secs(120), part1_and_c0);
    h.run("3e weight-transfer", secs(120), weight_transfer);
    h.run("4 structural-invariants", secs(60), invariants);
    h.run("5 theorem-suite", secs(600), theorem_suite);
    println!("acceptance: {} of 15 criteria failed", h.failed);
    if h.failed > 0 {
        std::process::exit(1);
    }
}
