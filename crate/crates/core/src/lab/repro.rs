//! Named reproductions. Each is a frozen config whose pass criteria are
//! part of the config and asserted at the end of the run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_tables, estimates_table, fmt_sig, Cell, Report, RunConfig, Table};
use crate::constants::{
    cardinality_profile, estimate, estimate_from_profile, passes, CheckContext, CheckId, CheckSetup, ConstantName,
    EstimateStatus, ModeRequest, SearchFamily, DENOM_GUARD,
};
use crate::error::{Error, Result};
use crate::greedy::{greedy_set, indicator, tga};
use crate::optim::sigma_w;
use crate::par;
use crate::spaces::{CoefVec, NormModel, SignPattern, SpaceSpec};
use crate::weights::{s_w_window, IndexSet, Weight};

/// Registered reproduction names.
pub const REPRODUCTIONS: [&str; 8] = [
    "schreier-gap",
    "ebasis-no-propD",
    "rw-one-w-greedy",
    "rw-not-conservative",
    "rw-not-w-democratic",
    "sw-trivial",
    "pathological-f1q",
    "theorem-suite",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ReproConfig {
    SchreierGap(SchreierGap),
    #[serde(rename = "ebasis-no-propD")]
    EbasisNoPropD(EbasisNoPropD),
    RwOneWGreedy(RwOneWGreedy),
    RwNotConservative(RwNotConservative),
    RwNotWDemocratic(RwNotWDemocratic),
    SwTrivial(SwTrivial),
    PathologicalF1q(PathologicalF1q),
    TheoremSuite(TheoremSuite),
}

impl ReproConfig {
    /// The frozen config registered under `name`.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name {
            "schreier-gap" => ReproConfig::SchreierGap(SchreierGap::default()),
            "ebasis-no-propD" => ReproConfig::EbasisNoPropD(EbasisNoPropD::default()),
            "rw-one-w-greedy" => ReproConfig::RwOneWGreedy(RwOneWGreedy::default()),
            "rw-not-conservative" => ReproConfig::RwNotConservative(RwNotConservative::default()),
            "rw-not-w-democratic" => ReproConfig::RwNotWDemocratic(RwNotWDemocratic::default()),
            "sw-trivial" => ReproConfig::SwTrivial(SwTrivial::default()),
            "pathological-f1q" => ReproConfig::PathologicalF1q(PathologicalF1q::default()),
            "theorem-suite" => ReproConfig::TheoremSuite(TheoremSuite::default()),
            other => {
                return Err(Error::Parse(format!(
                    "unknown reproduction {other:?}; registered: {}",
                    REPRODUCTIONS.join(", ")
                )))
            }
        })
    }
}

pub(super) fn run(cfg: &ReproConfig) -> Result<Report> {
    let mut report = Report::empty(RunConfig::Reproduction(cfg.clone()));
    match cfg {
        ReproConfig::SchreierGap(c) => c.run(&mut report)?,
        ReproConfig::EbasisNoPropD(c) => c.run(&mut report)?,
        ReproConfig::RwOneWGreedy(c) => c.run(&mut report)?,
        ReproConfig::RwNotConservative(c) => c.run(&mut report)?,
        ReproConfig::RwNotWDemocratic(c) => c.run(&mut report)?,
        ReproConfig::SwTrivial(c) => c.run(&mut report)?,
        ReproConfig::PathologicalF1q(c) => c.run(&mut report)?,
        ReproConfig::TheoremSuite(c) => c.run(&mut report)?,
    }
    Ok(report)
}

fn ones(model: &NormModel, a: &IndexSet) -> Result<f64> {
    model.norm(&indicator(a, &SignPattern::all_plus(a.len()), model.window()))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Schreier space: far blocks have full norm, initial blocks stay small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchreierGap {
    pub ns: Vec<usize>,
    /// Family window for the conservativeness estimate.
    pub cc_window: usize,
    pub tol: f64,
}

impl Default for SchreierGap {
    fn default() -> Self {
        SchreierGap { ns: (1..=6).collect(), cc_window: 12, tol: 1e-9 }
    }
}

impl SchreierGap {
    fn run(&self, report: &mut Report) -> Result<()> {
        let top = self.ns.iter().map(|n| n * n + n).max().unwrap_or(1);
        let model = NormModel::new(SpaceSpec::Schreier, top.max(self.cc_window))?;
        let mut t = Table::new("schreier_gap", &["n", "far_norm", "near_norm", "sqrt_n", "far_ok", "near_ok"]);
        let (mut far_all, mut near_all) = (true, true);
        for &n in &self.ns {
            let far = ones(&model, &IndexSet::range(n * n + 1, n * n + n))?;
            let near = ones(&model, &IndexSet::range(1, n))?;
            let root = (n as f64).sqrt();
            let far_ok = close(far, n as f64, self.tol);
            let near_ok = passes(near, root);
            far_all &= far_ok;
            near_all &= near_ok;
            t.push(vec![n.into(), far.into(), near.into(), root.into(), far_ok.into(), near_ok.into()]);
        }
        report.tables.push(t);
        report.criterion("far block norm equals N", far_all, format!("N in {:?}", self.ns));
        report.criterion("initial block norm at most sqrt(N)", near_all, format!("N in {:?}", self.ns));

        let fam = SearchFamily::with_window(self.cc_window);
        let cc = estimate(ConstantName::Cc, &model, &Weight::counting(), &fam)?;
        let ok = close(cc.value, 1.0, self.tol) && cc.status == EstimateStatus::Complete;
        report.criterion("conservativeness constant is 1", ok, format!("Cc estimate {}", fmt_sig(cc.value)));
        report.add_estimate("", cc);
        report.tables.push(estimates_table(&report.estimates, ""));
        Ok(())
    }
}

/// The ℓ₁ ⊕ c₀ basis: superdemocratic lower profile, no Property (D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EbasisNoPropD {
    pub ns: Vec<usize>,
    pub profile_window: usize,
    /// `d(m) >= m/8` is asserted for `m <= max_m`.
    pub max_m: usize,
    pub budget: u64,
    pub tol: f64,
}

impl Default for EbasisNoPropD {
    fn default() -> Self {
        EbasisNoPropD { ns: (1..=8).collect(), profile_window: 16, max_m: 6, budget: 25_000_000, tol: 1e-9 }
    }
}

impl EbasisNoPropD {
    fn run(&self, report: &mut Report) -> Result<()> {
        let top = self.ns.iter().max().copied().unwrap_or(1) * 2;
        let model = NormModel::new(SpaceSpec::Ebasis, top.max(self.profile_window))?;
        let n_win = model.window();
        let mut t = Table::new("ebasis_norms", &["n", "z_norm", "ones_norm", "ones_expected", "propd_ratio"]);
        let (mut z_ok, mut ones_ok, mut grows) = (true, true, true);
        let mut prev = f64::NEG_INFINITY;
        for &n in &self.ns {
            let mut z = CoefVec::zeros(n_win);
            for k in 1..=n {
                z.set(2 * k - 1, -1.0);
                z.set(2 * k, 2.0);
            }
            let zn = model.norm(&z)?;
            let on = ones(&model, &IndexSet::range(1, 2 * n))?;
            let expected = 0.75 * n as f64 + 0.25;
            // min |coefficient| of z is 1 and its support is [1, 2N]
            let ratio = on / zn;
            z_ok &= close(zn, 2.0, self.tol);
            ones_ok &= close(on, expected, self.tol);
            grows &= ratio > prev;
            prev = ratio;
            t.push(vec![n.into(), zn.into(), on.into(), expected.into(), ratio.into()]);
        }
        report.tables.push(t);
        report.criterion("norm of z is 2", z_ok, format!("N in {:?}", self.ns));
        report.criterion("norm of the indicator is 3N/4 + 1/4", ones_ok, format!("N in {:?}", self.ns));
        report.criterion("Property (D) ratio grows with N", grows, format!("last ratio {}", fmt_sig(prev)));

        let fam = SearchFamily { window: self.profile_window, budget: self.budget, ..Default::default() };
        let profile = match cardinality_profile(&model, self.profile_window, self.budget) {
            Ok(p) => p,
            Err(e) => {
                report.absorb_error("cardinality profile", e)?;
                return Ok(());
            }
        };
        let mut t = Table::new("ebasis_profile", &["m", "max", "min", "upper_d", "lower_d", "m_over_8", "count"]);
        let mut ok = true;
        for e in &profile {
            let upper = estimate_from_profile(ConstantName::DUpper(e.k), &profile, &model, &Weight::counting(), &fam)?;
            let lower = estimate_from_profile(ConstantName::DLower(e.k), &profile, &model, &Weight::counting(), &fam)?;
            let floor = e.k as f64 / 8.0;
            if e.k <= self.max_m {
                ok &= passes(floor, lower.value);
                report.add_estimate("", lower.clone());
            }
            t.push(vec![
                e.k.into(),
                e.max.into(),
                e.min.into(),
                upper.value.into(),
                lower.value.into(),
                floor.into(),
                e.count.into(),
            ]);
        }
        report.tables.push(t);
        report.criterion(
            "d(m) >= m/8",
            ok,
            format!("m <= {}, exhaustive over signs at window {}", self.max_m, self.profile_window),
        );
        report.tables.push(estimates_table(&report.estimates, ""));
        Ok(())
    }
}

/// `X_{∞,p,w^{1/p}}`: Property (A) with constant 1 and a 1-w-greedy basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwOneWGreedy {
    pub theta: f64,
    pub p: f64,
    pub window: usize,
    pub family: SearchFamily,
    pub instances: usize,
    pub seed: u64,
    pub tol_prop_a: f64,
    pub tol_greedy: f64,
}

impl Default for RwOneWGreedy {
    fn default() -> Self {
        RwOneWGreedy {
            theta: 0.4,
            p: 1.0,
            window: 12,
            family: SearchFamily::with_window(12),
            instances: 1000,
            seed: 0,
            tol_prop_a: 1e-9,
            tol_greedy: 1e-6,
        }
    }
}

/// Random test vectors with a target `m`; half use grid values so ties occur.
pub(crate) fn random_instances(window: usize, count: usize, seed: u64) -> Vec<(CoefVec, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = [1.0, -1.0, 0.5, -0.5, 0.25, -0.25];
    (0..count)
        .map(|i| {
            let size = rng.random_range(1..=window);
            let mut x = CoefVec::zeros(window);
            let mut placed = 0;
            while placed < size {
                let k = rng.random_range(1..=window);
                if x.get(k) != 0.0 {
                    continue;
                }
                let mut c = 0.0;
                while c == 0.0 {
                    c = if i % 2 == 0 { grid[rng.random_range(0..grid.len())] } else { rng.random_range(-1.0..=1.0) };
                }
                x.set(k, c);
                placed += 1;
            }
            let m = rng.random_range(1..=size);
            (x, m)
        })
        .collect()
}

impl RwOneWGreedy {
    fn run(&self, report: &mut Report) -> Result<()> {
        let w = Weight::power(self.theta);
        let model = NormModel::new(SpaceSpec::rosenthal_woo(f64::INFINITY, self.p, w.clone()), self.window)?;
        let ca = estimate(ConstantName::Ca, &model, &w, &self.family)?;
        report.criterion(
            "Property (A) ratio at most 1",
            ca.value <= 1.0 + self.tol_prop_a,
            format!("Ca estimate {} over {} instances", fmt_sig(ca.value), ca.instances),
        );
        report.add_estimate("", ca);

        let setup = CheckSetup { mode: ModeRequest::Exact, ..Default::default() };
        let ctx = CheckContext::new(&model, &w, &self.family, setup);
        match ctx.run(CheckId::GreedyCharUpper) {
            Ok(r) => report.add_check("", r),
            Err(e) => report.absorb_error("greedy-char-upper", e)?,
        }

        let cases = random_instances(self.window, self.instances, self.seed);
        let rows = par::map_collect(&cases, |(x, m)| -> Result<(f64, f64, f64, f64)> {
            let a = greedy_set(x, *m)?;
            let delta = w.measure(&a);
            let err = model.norm(&x.sub(&tga(x, *m)?))?;
            let sigma = sigma_w(&model, &w, x, delta, self.window, self.family.budget)?.value;
            let ratio = if sigma > DENOM_GUARD {
                err / sigma
            } else if err <= DENOM_GUARD {
                0.0
            } else {
                f64::INFINITY
            };
            Ok((delta, err, sigma, ratio))
        });
        let mut t = Table::new("w_greedy_instances", &["i", "m", "support", "delta", "error", "sigma", "ratio"]);
        let mut worst = 0.0f64;
        for (i, ((x, m), row)) in cases.iter().zip(rows).enumerate() {
            let (delta, err, sigma, ratio) = row?;
            worst = worst.max(ratio);
            t.push(vec![
                (i + 1).into(),
                (*m).into(),
                x.support().len().into(),
                delta.into(),
                err.into(),
                sigma.into(),
                ratio.into(),
            ]);
        }
        report.tables.push(t);
        report.criterion(
            "w-greedy ratio at most 1",
            worst <= 1.0 + self.tol_greedy,
            format!("max ratio {} over {} random instances", fmt_sig(worst), cases.len()),
        );
        report.tables.push(estimates_table(&report.estimates, ""));
        let (checks, inst) = check_tables(&report.checks);
        report.tables.push(checks);
        report.tables.push(inst);
        Ok(())
    }
}

/// `X_{q,p,w^{1/p}}` with `w_n = n^{-θ}`: far blocks have small norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwNotConservative {
    pub q: f64,
    pub p: f64,
    pub theta: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub tol: f64,
}

impl Default for RwNotConservative {
    fn default() -> Self {
        RwNotConservative { q: 2.0, p: 1.0, theta: 0.4, m_min: 4, m_max: 64, tol: 1e-9 }
    }
}

/// Smallest `k >= m` with `w(B_{m,k})^{1/p} <= m^{1/q}`.
fn far_offset(w: &Weight, m: usize, p: f64, q: f64) -> usize {
    let target = (m as f64).powf(1.0 / q);
    let mut k = m;
    while w.measure(&IndexSet::range(k + 1, k + m)).powf(1.0 / p) > target {
        k += 1;
    }
    k
}

impl RwNotConservative {
    fn run(&self, report: &mut Report) -> Result<()> {
        let w = Weight::power(self.theta);
        let mut t = Table::new(
            "rw_conservative",
            &["m", "k_m", "norm_a", "norm_b", "ratio", "closed_form", "lower_bound"],
        );
        let (mut matches, mut above, mut b_flat) = (true, true, true);
        let mut first_last = (None, None);
        for m in self.m_min..=self.m_max {
            let k = far_offset(&w, m, self.p, self.q);
            let model = NormModel::new(SpaceSpec::rosenthal_woo(self.q, self.p, w.clone()), k + m)?;
            let a = IndexSet::range(1, m);
            let na = ones(&model, &a)?;
            let nb = ones(&model, &IndexSet::range(k + 1, k + m))?;
            let mq = (m as f64).powf(1.0 / self.q);
            let ratio = na / nb;
            let closed = mq.max(w.measure(&a).powf(1.0 / self.p)) / mq;
            let bound = ((m as f64).powf(1.0 - self.theta) - 1.0) / (1.0 - self.theta);
            let bound = bound.powf(1.0 / self.p) / mq;
            matches &= close(ratio, closed, self.tol);
            above &= ratio > bound;
            b_flat &= close(nb, mq, self.tol);
            if m == self.m_min {
                first_last.0 = Some(ratio);
            }
            first_last.1 = Some(ratio);
            t.push(vec![m.into(), k.into(), na.into(), nb.into(), ratio.into(), closed.into(), bound.into()]);
        }
        report.tables.push(t);
        let range = format!("m in {}..={}", self.m_min, self.m_max);
        report.criterion("far block norm equals m^(1/q)", b_flat, range.clone());
        report.criterion("ratio matches the closed form", matches, range.clone());
        report.criterion("ratio exceeds the integral lower bound", above, range);
        let (lo, hi) = (first_last.0.unwrap_or(0.0), first_last.1.unwrap_or(0.0));
        report.criterion(
            "ratio grows",
            hi > lo,
            format!("m={}: {}, m={}: {}", self.m_min, fmt_sig(lo), self.m_max, fmt_sig(hi)),
        );
        Ok(())
    }
}

/// Same space: far blocks of smaller measure but larger norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwNotWDemocratic {
    pub q: f64,
    pub p: f64,
    pub theta: f64,
    /// `A_n = [1, n]`.
    pub n: usize,
    pub ks: Vec<usize>,
}

impl Default for RwNotWDemocratic {
    fn default() -> Self {
        RwNotWDemocratic { q: 2.0, p: 1.0, theta: 0.4, n: 4, ks: (4..=14).map(|j| 1usize << j).collect() }
    }
}

impl RwNotWDemocratic {
    fn run(&self, report: &mut Report) -> Result<()> {
        let w = Weight::power(self.theta);
        let a = IndexSet::range(1, self.n);
        let wa = w.measure(&a);
        let mut t = Table::new("rw_democracy", &["k", "m", "w_a", "w_b", "norm_a", "norm_b", "ratio", "predicted"]);
        let mut lighter = true;
        let mut ratios = Vec::new();
        for &k in &self.ks {
            if k < self.n {
                return Err(Error::InvalidArgument(format!("k = {k} must be at least n = {}", self.n)));
            }
            // largest m with w(B_{m,k}) <= w(A_n)
            let mut m = 1;
            while w.measure(&IndexSet::range(k + 1, k + m + 1)) <= wa {
                m += 1;
            }
            let b = IndexSet::range(k + 1, k + m);
            let wb = w.measure(&b);
            let model = NormModel::new(SpaceSpec::rosenthal_woo(self.q, self.p, w.clone()), k + m)?;
            let (na, nb) = (ones(&model, &a)?, ones(&model, &b)?);
            let ratio = nb / na;
            let predicted = (k as f64).powf(self.theta / self.q)
                * (self.n as f64).powf(-(1.0 - self.theta) * (1.0 - 1.0 / self.q));
            lighter &= wb <= wa;
            ratios.push(ratio);
            t.push(vec![
                k.into(),
                m.into(),
                wa.into(),
                wb.into(),
                na.into(),
                nb.into(),
                ratio.into(),
                predicted.into(),
            ]);
        }
        report.tables.push(t);
        report.criterion("B is no heavier than A_n", lighter, format!("n = {}", self.n));
        let (lo, hi) = (ratios.first().copied().unwrap_or(0.0), ratios.last().copied().unwrap_or(0.0));
        report.criterion(
            "ratio grows with k",
            hi > lo && hi > 1.0,
            format!("first {}, last {}", fmt_sig(lo), fmt_sig(hi)),
        );
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwExpect {
    Value { value: usize },
    /// `⌊window/2⌋`.
    HalfWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwCase {
    pub weight: Weight,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<SwExpect>,
}

/// The triviality index for a few weights across windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwTrivial {
    pub windows: Vec<usize>,
    pub cases: Vec<SwCase>,
}

impl Default for SwTrivial {
    fn default() -> Self {
        SwTrivial {
            windows: vec![10, 20, 40],
            cases: vec![
                SwCase { weight: Weight::Geometric { r: 0.5 }, expect: Some(SwExpect::Value { value: 0 }) },
                SwCase { weight: Weight::counting(), expect: Some(SwExpect::HalfWindow) },
                SwCase { weight: Weight::power(0.4), expect: None },
                SwCase { weight: Weight::power(1.0), expect: None },
            ],
        }
    }
}

impl SwTrivial {
    fn run(&self, report: &mut Report) -> Result<()> {
        let mut t = Table::new("s_w", &["weight", "window", "s_w", "saturated", "expected"]);
        for case in &self.cases {
            let label = serde_json::to_string(&case.weight)?;
            let mut ok = true;
            for &n in &self.windows {
                let s = s_w_window(&case.weight, n)?;
                let want = match case.expect {
                    Some(SwExpect::Value { value }) => Some(value),
                    Some(SwExpect::HalfWindow) => Some(n / 2),
                    None => None,
                };
                if let Some(v) = want {
                    ok &= s.value == v;
                }
                t.push(vec![
                    label.as_str().into(),
                    n.into(),
                    s.value.into(),
                    s.saturated.into(),
                    want.map_or(Cell::Text(String::new()), Cell::from),
                ]);
            }
            if case.expect.is_some() {
                report.criterion(format!("s_w for {label}"), ok, format!("windows {:?}", self.windows));
            }
        }
        report.tables.push(t);
        Ok(())
    }
}

/// ⊕_{ℓ₁} of `max(f1q, james)` blocks: Property (C) and superdemocracy
/// estimates across block counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathologicalF1q {
    pub q: f64,
    pub blocks: Vec<usize>,
    pub family: SearchFamily,
    /// Largest tolerated growth of an estimate between consecutive block counts.
    pub growth_allowance: f64,
}

impl Default for PathologicalF1q {
    fn default() -> Self {
        PathologicalF1q { q: 2.0, blocks: vec![2, 3], family: SearchFamily::default(), growth_allowance: 1.5 }
    }
}

impl PathologicalF1q {
    fn run(&self, report: &mut Report) -> Result<()> {
        let w = Weight::counting();
        let mut t = Table::new("pathological", &["blocks", "dim", "cu", "cs", "ca", "three_cu_cs"]);
        let mut prev: Option<(f64, f64)> = None;
        let (mut relation, mut cu_bounded, mut cs_bounded) = (true, true, true);
        for &b in &self.blocks {
            let model = NormModel::intrinsic(SpaceSpec::pathological(self.q, b))?;
            let fam = SearchFamily { window: self.family.window.min(model.window()), ..self.family.clone() };
            let label = format!("blocks={b} ");
            let mut vals = [0.0; 3];
            for (slot, name) in [ConstantName::Cu, ConstantName::Cs, ConstantName::Ca].into_iter().enumerate() {
                let e = estimate(name, &model, &w, &fam)?;
                vals[slot] = e.value;
                report.add_estimate(&label, e);
            }
            let [cu, cs, ca] = vals;
            relation &= passes(ca, 3.0 * cu * cs);
            if let Some((pcu, pcs)) = prev {
                cu_bounded &= passes(cu, self.growth_allowance * pcu);
                cs_bounded &= passes(cs, self.growth_allowance * pcs);
            }
            prev = Some((cu, cs));
            t.push(vec![b.into(), model.window().into(), cu.into(), cs.into(), ca.into(), (3.0 * cu * cs).into()]);
        }
        report.tables.push(t);
        let span = format!("blocks {:?}", self.blocks);
        report.criterion("Ca <= 3 Cu Cs", relation, span.clone());
        report.criterion(
            "Property (C) estimate stays bounded",
            cu_bounded,
            format!("{span}, growth allowance {}", self.growth_allowance),
        );
        report.criterion(
            "superdemocracy estimate stays bounded",
            cs_bounded,
            format!("{span}, growth allowance {}", self.growth_allowance),
        );
        let mut est = estimates_table(&[], "");
        for e in &report.estimates {
            let mut row = estimates_table(std::slice::from_ref(e), "").rows.remove(0);
            row[0] = Cell::Text(format!("{}", e.family.window));
            est.rows.push(row);
        }
        est.columns[0] = "family_window".into();
        report.tables.push(est);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub label: String,
    pub spec: SpaceSpec,
    pub weight: Weight,
    pub window: usize,
    pub family: SearchFamily,
    /// The second weight for `weight-transfer`.
    pub alt_weight: Weight,
}

/// Every check on a fixed matrix of models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremSuite {
    pub entries: Vec<SuiteEntry>,
    pub checks: Vec<CheckId>,
}

impl Default for TheoremSuite {
    fn default() -> Self {
        let entry = |label: &str, spec: SpaceSpec, weight: Weight, window: usize, alt: Weight| SuiteEntry {
            label: label.into(),
            spec,
            weight,
            window,
            family: SearchFamily::with_window(window),
            alt_weight: alt,
        };
        let one = Weight::counting;
        let rw_w = Weight::power(0.4);
        let spread = Weight::Explicit { values: vec![1.0, 3.0, 2.0, 1.5, 2.5, 1.0, 3.0, 2.0, 1.25, 2.75], tail: 2.0 };
        TheoremSuite {
            entries: vec![
                entry("lp1", SpaceSpec::lp(1.0), one(), 10, Weight::power(0.5)),
                entry("lp2-explicit", SpaceSpec::lp(2.0), spread, 10, one()),
                entry("lpinf", SpaceSpec::lp(f64::INFINITY), one(), 10, Weight::power(0.5)),
                entry(
                    "weighted-lp2",
                    SpaceSpec::WeightedLp { p: 2.0.into(), weight: Weight::power(0.5) },
                    Weight::power(0.5),
                    10,
                    one(),
                ),
                entry("schreier", SpaceSpec::Schreier, one(), 12, Weight::power(0.5)),
                entry(
                    "rw-inf",
                    SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, rw_w.clone()),
                    rw_w.clone(),
                    12,
                    one(),
                ),
                entry("rw-2", SpaceSpec::rosenthal_woo(2.0, 1.0, rw_w.clone()), rw_w, 10, one()),
                entry("ebasis", SpaceSpec::Ebasis, one(), 10, Weight::power(0.5)),
                entry("james2", SpaceSpec::James { q: 2.0.into() }, one(), 8, Weight::power(0.5)),
            ],
            checks: CheckId::ALL.to_vec(),
        }
    }
}

impl TheoremSuite {
    fn run(&self, report: &mut Report) -> Result<()> {
        let mut matrix = Table::new("suite_models", &["label", "spec", "weight", "window", "alt_weight"]);
        for e in &self.entries {
            matrix.push(vec![
                e.label.as_str().into(),
                serde_json::to_string(&e.spec)?.into(),
                serde_json::to_string(&e.weight)?.into(),
                e.window.into(),
                serde_json::to_string(&e.alt_weight)?.into(),
            ]);
            let model = NormModel::new(e.spec.clone(), e.window)?;
            let setup = CheckSetup { alt_weight: Some(e.alt_weight.clone()), ..Default::default() };
            let ctx = CheckContext::new(&model, &e.weight, &e.family, setup);
            for &id in &self.checks {
                match ctx.run(id) {
                    Ok(r) => report.add_check(&e.label, r),
                    Err(err) => report.absorb_error(&format!("{} {id}", e.label), err)?,
                }
            }
        }
        report.tables.push(matrix);
        let (checks, inst) = check_tables(&report.checks);
        report.tables.push(checks);
        report.tables.push(inst);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_resolve_and_round_trip() {
        for name in REPRODUCTIONS {
            let cfg = ReproConfig::named(name).unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            assert!(text.contains(&format!("\"name\":\"{name}\"")), "{text}");
            let back: ReproConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
        let err = ReproConfig::named("nope").unwrap_err().to_string();
        assert!(err.contains("theorem-suite"), "{err}");
    }

    #[test]
    fn far_offset_is_minimal() {
        let w = Weight::power(0.4);
        for m in [4, 9, 30] {
            let k = far_offset(&w, m, 1.0, 2.0);
            let root = (m as f64).sqrt();
            assert!(w.measure(&IndexSet::range(k + 1, k + m)) <= root);
            if k > m {
                assert!(w.measure(&IndexSet::range(k, k + m - 1)) > root);
            }
        }
    }

    #[test]
    fn random_instances_are_seeded() {
        let a = random_instances(8, 20, 7);
        assert_eq!(a, random_instances(8, 20, 7));
        assert!(a.iter().all(|(x, m)| *m >= 1 && *m <= x.support().len()));
    }
}
