use std::sync::Mutex;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::estimate::{estimate, ConstantEstimate, ConstantName, EstimateStatus, Witness, DENOM_GUARD, SIGMA_NUMERIC_MAX_M};
use super::family::{combinations, SearchFamily};
use super::known::{known_constants, partially_greedy_constant, KnownConstants};
use crate::error::{Error, Result};
use crate::greedy::{all_greedy_sets, greedy_set, indicator, partial_sum, project, project_complement, truncate};
use crate::optim::{sigma_w_tilde, sigma_w_with, MinimizeOptions, SigmaOptions};
use crate::par;
use crate::spaces::{CoefVec, NormModel, SignPattern};
use crate::weights::{equivalence_constants, IndexSet, Weight};

/// Instances kept per report besides failures.
pub const KEPT_INSTANCES: usize = 50;

/// Failing instances kept per report; `fail_count` has the full tally.
pub const MAX_FAILURES: usize = 200;

/// Relative slack in `lhs <= rhs (1 + 1e-9) + 1e-12`.
pub const PASS_REL: f64 = 1e-9;
pub const PASS_ABS: f64 = 1e-12;

pub fn passes(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + PASS_REL) + PASS_ABS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    GreedyCharUpper,
    AlmostGreedyCharUpper,
    PartiallyGreedyForward,
    PartiallyGreedyReverse,
    PropAImpliesSuperdem,
    PropCSuperdemImpliesPropA,
    WeightTransfer,
    TruncationLemma,
    Part1Lemma,
    FindC0Bound,
    PropAFormulations,
    SemiGreedyImpliesPropA,
}

impl CheckId {
    pub const ALL: [CheckId; 12] = [
        CheckId::GreedyCharUpper,
        CheckId::AlmostGreedyCharUpper,
        CheckId::PartiallyGreedyForward,
        CheckId::PartiallyGreedyReverse,
        CheckId::PropAImpliesSuperdem,
        CheckId::PropCSuperdemImpliesPropA,
        CheckId::WeightTransfer,
        CheckId::TruncationLemma,
        CheckId::Part1Lemma,
        CheckId::FindC0Bound,
        CheckId::PropAFormulations,
        CheckId::SemiGreedyImpliesPropA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::GreedyCharUpper => "greedy-char-upper",
            CheckId::AlmostGreedyCharUpper => "almost-greedy-char-upper",
            CheckId::PartiallyGreedyForward => "partially-greedy-forward",
            CheckId::PartiallyGreedyReverse => "partially-greedy-reverse",
            CheckId::PropAImpliesSuperdem => "propA-implies-superdem",
            CheckId::PropCSuperdemImpliesPropA => "propC-superdem-implies-propA",
            CheckId::WeightTransfer => "weight-transfer",
            CheckId::TruncationLemma => "truncation-lemma",
            CheckId::Part1Lemma => "part1-lemma",
            CheckId::FindC0Bound => "find-c0-bound",
            CheckId::PropAFormulations => "propA-formulations",
            CheckId::SemiGreedyImpliesPropA => "semi-greedy-implies-propA",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL.iter().copied().find(|c| c.as_str() == s).ok_or_else(|| {
            let ids: Vec<&str> = CheckId::ALL.iter().map(|c| c.as_str()).collect();
            Error::Parse(format!("unknown check {s:?}; known: {}", ids.join(", ")))
        })
    }
}

impl Serialize for CheckId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CheckId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// How the constants on the right-hand side were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Analytic constants: pass/fail is a real verdict.
    Exact,
    /// Family estimates on the right: ratios are for review only.
    Estimate,
    /// An inequality between estimates that holds on every finite family.
    Relation,
    /// Bounded-growth observation across families.
    Qualitative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeRequest {
    /// Exact when the model declares the constants, estimates otherwise.
    #[default]
    Auto,
    Exact,
    Estimate,
}

/// Extra inputs some checks take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSetup {
    pub mode: ModeRequest,
    /// The second weight `v` for `weight-transfer`.
    pub alt_weight: Option<Weight>,
    /// Windows for the growing families of `semi-greedy-implies-propA`.
    pub growth_windows: Vec<usize>,
    /// Largest tolerated growth factor of `Ĉ_a` between consecutive windows.
    pub growth_allowance: f64,
}

impl Default for CheckSetup {
    fn default() -> Self {
        CheckSetup { mode: ModeRequest::Auto, alt_weight: None, growth_windows: vec![4, 6, 8], growth_allowance: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckInstance {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: CheckId,
    pub mode: CheckMode,
    /// Constants used on the right-hand sides.
    pub constants: BTreeMap<String, f64>,
    /// Failures plus the worst passing instances by ratio.
    pub instances: Vec<CheckInstance>,
    pub instance_count: u64,
    pub fail_count: u64,
    pub rejected: u64,
    pub max_ratio: f64,
    pub all_pass: bool,
    pub budget_flags: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Default)]
struct Collector {
    kept: Vec<CheckInstance>,
    floor: f64,
    count: u64,
    fails: u64,
    rejected: u64,
    max_ratio: f64,
    flags: BTreeSet<String>,
}

impl Collector {
    fn push(&mut self, label: &str, lhs: f64, rhs: f64, witness: impl FnOnce() -> Witness) {
        if !(rhs >= DENOM_GUARD) {
            self.rejected += 1;
            return;
        }
        self.count += 1;
        let ratio = lhs / rhs;
        let pass = passes(lhs, rhs);
        self.fails += u64::from(!pass);
        self.max_ratio = self.max_ratio.max(ratio);
        if !pass || ratio > self.floor || self.kept.len() < KEPT_INSTANCES {
            self.kept.push(CheckInstance { label: label.to_string(), lhs, rhs, ratio, pass, witness: witness() });
            if self.kept.len() > 4 * KEPT_INSTANCES {
                self.compact();
            }
        }
    }

    fn flag(&mut self, f: &str) {
        self.flags.insert(f.to_string());
    }

    fn compact(&mut self) {
        self.kept.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
        let (mut passing, mut failing) = (0, 0);
        self.kept.retain(|i| {
            if !i.pass {
                failing += 1;
                return failing <= MAX_FAILURES;
            }
            passing += 1;
            passing <= KEPT_INSTANCES
        });
        if passing >= KEPT_INSTANCES {
            self.floor = self.kept.iter().filter(|i| i.pass).map(|i| i.ratio).fold(f64::INFINITY, f64::min);
        }
    }

    fn merge(parts: Vec<Collector>) -> Collector {
        let mut out = Collector::default();
        for p in parts {
            out.count += p.count;
            out.fails += p.fails;
            out.rejected += p.rejected;
            out.max_ratio = out.max_ratio.max(p.max_ratio);
            out.flags.extend(p.flags);
            out.kept.extend(p.kept);
        }
        out.compact();
        out
    }
}

/// Shared state for running several checks on one model: estimates are
/// computed once.
pub struct CheckContext<'a> {
    pub model: &'a NormModel,
    pub w: &'a Weight,
    pub family: &'a SearchFamily,
    pub setup: CheckSetup,
    cache: Mutex<BTreeMap<ConstantName, ConstantEstimate>>,
}

struct DefPass {
    col: Collector,
    /// Largest raw ratio with `sup |x| = t`.
    max_unit: f64,
    max_all: f64,
    notes: Vec<String>,
}

struct Consts {
    mode: CheckMode,
    values: BTreeMap<String, f64>,
    flags: Vec<String>,
}

impl<'a> CheckContext<'a> {
    pub fn new(model: &'a NormModel, w: &'a Weight, family: &'a SearchFamily, setup: CheckSetup) -> Self {
        CheckContext { model, w, family, setup, cache: Mutex::new(BTreeMap::new()) }
    }

    pub fn estimate(&self, name: ConstantName) -> Result<ConstantEstimate> {
        if let Some(e) = self.cache.lock().expect("cache lock").get(&name) {
            return Ok(e.clone());
        }
        let e = estimate(name, self.model, self.w, self.family)?;
        self.cache.lock().expect("cache lock").insert(name, e.clone());
        Ok(e)
    }

    fn known(&self) -> KnownConstants {
        known_constants(self.model, self.w)
    }

    /// Resolves named constants: analytic values when all are available
    /// (and allowed), family estimates otherwise.
    fn resolve(&self, names: &[ConstantName], check: CheckId) -> Result<Consts> {
        let known = self.known();
        let pick = |n: ConstantName| match n {
            ConstantName::Kb => known.kb,
            ConstantName::Ku => known.ku,
            ConstantName::Cq => known.cq,
            ConstantName::Cu => known.cu,
            ConstantName::Cd => known.cd,
            ConstantName::Cs => known.cs,
            ConstantName::Ca => known.ca,
            ConstantName::Cc => known.cc,
            _ => None,
        };
        let exact: Option<Vec<f64>> = names.iter().map(|n| pick(*n)).collect();
        let mut values = BTreeMap::new();
        let mut flags = Vec::new();
        match (self.setup.mode, exact) {
            (ModeRequest::Estimate, _) | (ModeRequest::Auto, None) => {
                for n in names {
                    let e = self.estimate(*n)?;
                    if e.status == EstimateStatus::Partial {
                        flags.push(format!("{n}: partial estimate"));
                    }
                    values.insert(n.to_string(), e.value);
                }
                Ok(Consts { mode: CheckMode::Estimate, values, flags })
            }
            (_, Some(v)) => {
                for (n, x) in names.iter().zip(v) {
                    values.insert(n.to_string(), x);
                }
                Ok(Consts { mode: CheckMode::Exact, values, flags })
            }
            (ModeRequest::Exact, None) => {
                let missing: Vec<String> = names.iter().filter(|n| pick(**n).is_none()).map(|n| n.to_string()).collect();
                Err(Error::ModeUnavailable(format!(
                    "{check} needs analytic {} for this model",
                    missing.join(", ")
                )))
            }
        }
    }

    /// `c2` is exact for lattices; otherwise a search bound, which forces
    /// estimate mode.
    fn resolve_c2(&self, consts: &mut Consts, check: CheckId) -> Result<f64> {
        let fb = self.model.frame_bounds();
        if !fb.exact {
            if self.setup.mode == ModeRequest::Exact {
                return Err(Error::ModeUnavailable(format!("{check} needs an exact c2")));
            }
            consts.mode = CheckMode::Estimate;
        }
        consts.values.insert("c2".into(), fb.c2);
        Ok(fb.c2)
    }

    pub fn run(&self, id: CheckId) -> Result<CheckReport> {
        self.family.validate(self.model)?;
        self.w.validate()?;
        let (consts, col, notes) = match id {
            CheckId::GreedyCharUpper => self.greedy_char(id, false)?,
            CheckId::AlmostGreedyCharUpper => self.greedy_char(id, true)?,
            CheckId::PartiallyGreedyForward => self.partially_forward(id)?,
            CheckId::PartiallyGreedyReverse => self.partially_reverse(id)?,
            CheckId::PropAImpliesSuperdem => self.relation(id, ConstantName::Cs, 2.0, &[ConstantName::Ca])?,
            CheckId::PropCSuperdemImpliesPropA => {
                self.relation(id, ConstantName::Ca, 3.0, &[ConstantName::Cu, ConstantName::Cs])?
            }
            CheckId::WeightTransfer => self.weight_transfer(id)?,
            CheckId::TruncationLemma => self.truncation(id)?,
            CheckId::Part1Lemma => self.part1(id)?,
            CheckId::FindC0Bound => self.find_c0(id)?,
            CheckId::PropAFormulations => self.formulations(id)?,
            CheckId::SemiGreedyImpliesPropA => self.semi_greedy(id)?,
        };
        let mut budget_flags: Vec<String> = consts.flags;
        budget_flags.extend(col.flags.iter().cloned());
        let mut instances = col.kept;
        instances.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
        Ok(CheckReport {
            check_id: id,
            mode: consts.mode,
            constants: consts.values,
            instances,
            instance_count: col.count,
            fail_count: col.fails,
            rejected: col.rejected,
            max_ratio: col.max_ratio,
            all_pass: col.fails == 0,
            budget_flags,
            notes,
        })
    }

    fn greedy_sets(&self, x: &CoefVec, m: usize, col: &mut Collector) -> Vec<IndexSet> {
        match all_greedy_sets(x, m, self.family.greedy_cap) {
            Ok(v) => v,
            Err(_) => {
                col.flag("greedy-cap");
                vec![greedy_set(x, m).expect("m within support")]
            }
        }
    }

    fn sigma_opts(&self) -> SigmaOptions {
        SigmaOptions { budget: self.family.budget, minimize: MinimizeOptions::with_tol(self.family.tol) }
    }

    fn greedy_char(&self, id: CheckId, almost: bool) -> Result<(Consts, Collector, Vec<String>)> {
        let first = if almost { ConstantName::Cq } else { ConstantName::Ku };
        let consts = self.resolve(&[first, ConstantName::Ca], id)?;
        let k = consts.values[&first.to_string()] * consts.values["Ca"];
        let xs = self.family.sigma_vectors(self.model);
        let free = !almost && !self.model.is_lattice();
        let opts = self.sigma_opts();
        let parts = par::map_collect(&xs, |x| {
            let mut col = Collector::default();
            for m in 1..x.support().len() {
                if free && m > SIGMA_NUMERIC_MAX_M {
                    col.flag("sigma-m-cap");
                    break;
                }
                for a in self.greedy_sets(x, m, &mut col) {
                    let delta = self.w.measure(&a);
                    let sig = if almost {
                        sigma_w_tilde(self.model, self.w, x, delta, self.family.window, opts.budget)
                    } else {
                        sigma_w_with(self.model, self.w, x, delta, self.family.window, &opts)
                    };
                    let sig = match sig {
                        Ok(s) => s.value,
                        Err(Error::BudgetExceeded { .. }) => {
                            col.flag("budget: σ search truncated");
                            continue;
                        }
                        Err(e) => panic!("σ on validated input failed: {e}"),
                    };
                    let lhs = self.model.eval(project_complement(x, &a).coords());
                    col.push("residual", lhs, k * sig, || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        m: Some(m),
                        ..Default::default()
                    });
                }
            }
            col
        });
        Ok((consts, Collector::merge(parts), vec![]))
    }

    fn partially_forward(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let mut consts = self.resolve(&[ConstantName::Cq, ConstantName::Cc], id)?;
        let k = partially_greedy_constant(consts.values["Cq"], consts.values["Cc"]);
        consts.values.insert("bound".into(), k);
        let xs = self.family.vectors(self.model);
        let n = self.model.window();
        let prefix: Vec<f64> = (1..=n).map(|m| self.w.measure(&IndexSet::range(1, m))).collect();
        let parts = par::map_collect(&xs, |x| {
            let mut col = Collector::default();
            for r in 1..=x.support().len() {
                for a in self.greedy_sets(x, r, &mut col) {
                    let wa = self.w.measure(&a);
                    let lhs = self.model.eval(project_complement(x, &a).coords());
                    for m in (1..=n).take_while(|&m| prefix[m - 1] <= wa) {
                        let tail = x.sub(&partial_sum(x, m));
                        col.push("residual", lhs, k * self.model.eval(tail.coords()), || Witness {
                            x: Some(x.clone()),
                            a: Some(a.clone()),
                            r: Some(r),
                            m: Some(m),
                            ..Default::default()
                        });
                    }
                }
            }
            col
        });
        let notes = vec!["bound 1 + 2Cq + 8Cq^3 Cc covers both pieces of x - G_r x".into()];
        Ok((consts, Collector::merge(parts), notes))
    }

    fn partially_reverse(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let mut consts = self.resolve(&[ConstantName::Kb, ConstantName::Cq, ConstantName::Cc], id)?;
        let c2 = self.resolve_c2(&mut consts, id)?;
        let cp = if consts.mode == CheckMode::Exact {
            partially_greedy_constant(consts.values["Cq"], consts.values["Cc"])
        } else {
            self.estimate(ConstantName::Cp)?.value
        };
        consts.values.insert("Cp".into(), cp);
        let k = (cp + 1.0) * (consts.values["Kb"] + 1.0) + c2 * c2;
        consts.values.insert("bound".into(), k);
        let xs = self.family.vectors(self.model);
        let parts = par::map_collect(&xs, |x| {
            let mut col = Collector::default();
            let nx = self.model.eval(x.coords());
            for r in 1..=x.support().len() {
                for a in self.greedy_sets(x, r, &mut col) {
                    let g = self.model.eval(project(x, &a).coords());
                    col.push("greedy-sum", g, k * nx, || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        r: Some(r),
                        ..Default::default()
                    });
                }
            }
            col
        });
        Ok((consts, Collector::merge(parts), vec![]))
    }

    /// `Ĉ_lhs <= factor · Π Ĉ_rhs` between estimates on the same family.
    fn relation(
        &self,
        _id: CheckId,
        lhs: ConstantName,
        factor: f64,
        rhs: &[ConstantName],
    ) -> Result<(Consts, Collector, Vec<String>)> {
        let mut values = BTreeMap::new();
        let mut flags = Vec::new();
        let l = self.estimate(lhs)?;
        let mut prod = factor;
        for n in rhs {
            let e = self.estimate(*n)?;
            if e.status == EstimateStatus::Partial {
                flags.push(format!("{n}: partial estimate"));
            }
            prod *= e.value;
            values.insert(n.to_string(), e.value);
        }
        values.insert(lhs.to_string(), l.value);
        let mut col = Collector::default();
        col.push(&format!("{lhs} vs {factor}·{}", rhs.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("·")), l.value, prod, || {
            l.witness.clone()
        });
        Ok((Consts { mode: CheckMode::Relation, values, flags }, col, vec![]))
    }

    fn weight_transfer(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let v = self
            .setup
            .alt_weight
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("{id} needs a second weight v")))?;
        v.validate()?;
        let mut consts = self.resolve(&[ConstantName::Ca], id)?;
        let c2 = self.resolve_c2(&mut consts, id)?;
        let ca = consts.values["Ca"];
        let (a, b) = equivalence_constants(&v, self.w, self.family.window)?;
        let bound = (c2 * c2 * b + 2.0 * b * ca * ca) / a;
        // the chain c2²b/a + C_a m + C_a²(m-1) with m <= 2b/a + 1
        let chain = c2 * c2 * b / a + ca * (2.0 * b / a + 1.0) + ca * ca * 2.0 * b / a;
        consts.values.insert("a".into(), a);
        consts.values.insert("b".into(), b);
        consts.values.insert("bound".into(), bound);
        consts.values.insert("bound_chain".into(), chain);
        let pass = self.definition_form(&v, bound, "v-property-A");
        let (col, mut notes) = (pass.col, pass.notes);
        consts.values.insert("max_v_ratio".into(), pass.max_all);
        notes.push(format!("stated bound {bound:.6}; bound from the proof's own chain {chain:.6}"));
        Ok((consts, col, notes))
    }

    /// Definition-form instances `‖x + t1_{εA}‖ <= k ‖x + t1_{ηB}‖` under
    /// weight `v`, with `t = 1` and `sup |x| <= 1`.
    fn definition_form(&self, v: &Weight, k: f64, label: &str) -> DefPass {
        let xs = self.family.sigma_vectors(self.model);
        let n = self.model.window();
        let lattice = self.model.is_lattice();
        let cap = if lattice { self.family.set_size_cap } else { self.family.set_size_cap.min(2) };
        let mut notes = Vec::new();
        if cap < self.family.set_size_cap {
            notes.push(format!("definition-form sets limited to {cap} elements"));
        }
        let parts = par::map_collect(&xs, |x0| {
            let mut col = Collector::default();
            let (mut top_unit, mut top_all) = (0.0f64, 0.0f64);
            let mut sets: Vec<(IndexSet, f64, Vec<(SignPattern, CoefVec)>)> = Vec::new();
            for scale in [1.0, 0.5] {
                let x = x0.scale(scale / x0.max_abs());
                let s = x.support();
                if sets.is_empty() {
                    let fam = SearchFamily { set_size_cap: cap, ..self.family.clone() };
                    for a in fam.small_sets().into_iter().filter(|a| a.is_disjoint(&s)) {
                        let signs: Vec<SignPattern> =
                            if lattice { vec![SignPattern::all_plus(a.len())] } else { SignPattern::all(a.len()).collect() };
                        let inds = signs.into_iter().map(|e| (e.clone(), indicator(&a, &e, n))).collect();
                        sets.push((a.clone(), v.measure(&a), inds));
                    }
                }
                let empty = CoefVec::zeros(n);
                let none = (IndexSet::empty(), 0.0, vec![(SignPattern::all_plus(0), empty)]);
                for (a, wa, ainds) in sets.iter().chain(std::iter::once(&none)) {
                    let lhs_vals: Vec<f64> = ainds.iter().map(|(_, i)| self.model.eval(x.add(i).coords())).collect();
                    for (b, wb, binds) in &sets {
                        if wb < wa || !a.is_disjoint(b) {
                            continue;
                        }
                        for (eta, bi) in binds {
                            let den = self.model.eval(x.add(bi).coords());
                            for ((eps, _), lhs) in ainds.iter().zip(&lhs_vals) {
                                if den >= DENOM_GUARD {
                                    top_all = top_all.max(lhs / den);
                                    if scale == 1.0 {
                                        top_unit = top_unit.max(lhs / den);
                                    }
                                }
                                col.push(label, *lhs, k * den, || Witness {
                                    x: Some(x.clone()),
                                    a: Some(a.clone()),
                                    b: Some(b.clone()),
                                    eps: Some(eps.clone()),
                                    eta: Some(eta.clone()),
                                    t: Some(1.0),
                                    ..Default::default()
                                });
                            }
                        }
                    }
                }
            }
            (col, top_unit, top_all)
        });
        let max_unit = parts.iter().fold(0.0f64, |m, p| m.max(p.1));
        let max_all = parts.iter().fold(0.0f64, |m, p| m.max(p.2));
        DefPass { col: Collector::merge(parts.into_iter().map(|p| p.0).collect()), max_unit, max_all, notes }
    }

    fn truncation(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let consts = self.resolve(&[ConstantName::Cq, ConstantName::Ku], id)?;
        let (cq, ku) = (consts.values["Cq"], consts.values["Ku"]);
        let xs = self.family.vectors(self.model);
        let n = self.model.window();
        let cap = self.family.set_size_cap;
        let parts = par::map_collect(&xs, |x| {
            let mut col = Collector::default();
            let nx = self.model.eval(x.coords());
            let mut mods: Vec<f64> = x.coords().iter().map(|c| c.abs()).filter(|c| *c > 0.0).collect();
            mods.sort_by(|a, b| b.total_cmp(a));
            mods.dedup();
            let mut levels = vec![mods[0] * 1.5];
            for (i, &mdl) in mods.iter().enumerate() {
                levels.push(mdl);
                levels.push(mods.get(i + 1).map_or(mdl / 2.0, |nx| (mdl + nx) / 2.0));
            }
            let subsets = {
                let s = x.support();
                let mut out = vec![IndexSet::empty()];
                for k in 1..=cap.min(s.len()) {
                    combinations(s.len(), k, &mut |c| out.push(c.iter().map(|&i| s.as_slice()[i - 1]).collect()));
                }
                out
            };
            for &lambda in &levels {
                let wit = || Witness { x: Some(x.clone()), lambda: Some(lambda), ..Default::default() };
                let t = truncate(x, lambda).expect("positive level");
                col.push("T", self.model.eval(t.coords()), cq * nx, wit);
                col.push("I-T", self.model.eval(x.sub(&t).coords()), (cq + 1.0) * nx, wit);
                for a in &subsets {
                    let ta = truncate(&project_complement(x, a), lambda).expect("positive level");
                    col.push("T(I-P_A)", self.model.eval(ta.coords()), ku * nx, || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        lambda: Some(lambda),
                        ..Default::default()
                    });
                }
            }
            for m in 1..=x.support().len() {
                for a in self.greedy_sets(x, m, &mut col) {
                    let alpha = a.iter().map(|j| x.get(j).abs()).fold(f64::INFINITY, f64::min);
                    let eps = SignPattern::try_from(a.iter().map(|j| x.get(j).signum() as i8).collect::<Vec<i8>>())
                        .expect("support coefficients are nonzero");
                    let ind = indicator(&a, &eps, n);
                    col.push("alpha-indicator", alpha * self.model.eval(ind.coords()), 2.0 * cq * nx, || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        eps: Some(eps.clone()),
                        m: Some(m),
                        ..Default::default()
                    });
                }
            }
            col
        });
        Ok((consts, Collector::merge(parts), vec![]))
    }

    fn part1(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let consts = self.resolve(&[ConstantName::Cq, ConstantName::Cc], id)?;
        let k = 4.0 * consts.values["Cq"] * consts.values["Cc"];
        let sets = self.family.small_sets();
        let n = self.model.window();
        let parts = par::map_collect(&sets, |a| {
            let mut col = Collector::default();
            let wa = self.w.measure(a);
            // extreme points of the coefficient cube, plus a graded profile
            let mut coeffs: Vec<(Option<SignPattern>, CoefVec)> =
                SignPattern::all(a.len()).map(|e| (Some(e.clone()), indicator(a, &e, n))).collect();
            let mut graded = CoefVec::zeros(n);
            for (i, j) in a.iter().enumerate() {
                graded.set(j, 0.5f64.powi(i as i32));
            }
            coeffs.push((None, graded));
            for b in sets.iter().filter(|b| a.precedes(b) && wa <= self.w.measure(b)) {
                let signs: Vec<SignPattern> = if self.model.is_lattice() {
                    vec![SignPattern::all_plus(b.len())]
                } else {
                    SignPattern::all(b.len()).collect()
                };
                for eta in signs {
                    let den = self.model.eval(indicator(b, &eta, n).coords());
                    for (eps, v) in &coeffs {
                        col.push("block", self.model.eval(v.coords()), k * v.max_abs() * den, || Witness {
                            x: Some(v.clone()),
                            a: Some(a.clone()),
                            b: Some(b.clone()),
                            eps: eps.clone(),
                            eta: Some(eta.clone()),
                            ..Default::default()
                        });
                    }
                }
            }
            col
        });
        Ok((consts, Collector::merge(parts), vec![]))
    }

    fn find_c0(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let mut consts = self.resolve(&[ConstantName::Cs], id)?;
        let c2 = self.resolve_c2(&mut consts, id)?;
        let k = c2 * consts.values["Cs"];
        let wdw = self.family.window;
        let wts = self.w.values(wdw);
        // limsup of w, seen from the window: the largest weight in its second half
        let limsup = wts[wdw / 2..].iter().fold(0.0f64, |m, v| m.max(*v));
        consts.values.insert("limsup_w".into(), limsup);
        let n = self.model.window();
        let mut col = Collector::default();
        for a in self.family.small_sets() {
            let wa = self.w.measure(&a);
            let has_heavier = (1..=wdw).any(|j| !a.contains(j) && wts[j - 1] >= wa);
            if wa > limsup || !has_heavier {
                continue;
            }
            for eps in SignPattern::all(a.len()) {
                let v = self.model.eval(indicator(&a, &eps, n).coords());
                col.push("indicator", v, k, || Witness { a: Some(a.clone()), eps: Some(eps.clone()), ..Default::default() });
            }
        }
        let notes = vec!["A qualifies when w(A) <= limsup and some n outside A has w_n >= w(A)".into()];
        Ok((consts, col, notes))
    }

    fn formulations(&self, id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let mut consts = self.resolve(&[ConstantName::Ca], id)?;
        let c2 = self.resolve_c2(&mut consts, id)?;
        let ca = consts.values["Ca"];
        // (a) and (c): definition form, t = 1 with sup|x| <= 1, resp. sup|x| = 1
        let def = self.definition_form(self.w, 1.0, "definition");
        let (est_a, est_c, mut notes) = (def.max_all, def.max_unit, def.notes);
        // (d) is the projection form with t = s = 1: the Ca estimate on normalized vectors
        let proj = self.estimate(ConstantName::Ca)?;
        let est_d = proj.value;
        // (b): projection form with t >= sup|x|, via scaled vectors
        let (b_col, passage) = self.projection_scaled(ca + 2.0 * c2 * c2);
        let est_b = est_d.max(b_col.max_ratio);
        consts.values.insert("est_a".into(), est_a);
        consts.values.insert("est_b".into(), est_b);
        consts.values.insert("est_c".into(), est_c);
        consts.values.insert("est_d".into(), est_d);
        consts.values.insert("passage_stated".into(), ca + 2.0 * c2 * c2);
        consts.values.insert("passage_derived".into(), ca + (ca + 1.0) * c2 * c2);
        let mut col = passage;
        col.push("c <= a", est_c, est_a, Witness::default);
        col.push("d <= b", est_d, est_b, Witness::default);
        notes.push("passage instances use t > sup|x| and the stated constant C' + 2c2^2".into());
        Ok((consts, col, notes))
    }

    /// Projection-form instances with `t = 1 > sup|x|`, checked against `k`.
    fn projection_scaled(&self, k: f64) -> (Collector, Collector) {
        let xs = self.family.sigma_vectors(self.model);
        let n = self.model.window();
        let small = self.family.small_sets();
        let lattice = self.model.is_lattice();
        let parts = par::map_collect(&xs, |x0| {
            let mut ratios = Collector::default();
            let mut col = Collector::default();
            let x = x0.scale(0.5 / x0.max_abs());
            let s = x.support();
            let nx = self.model.eval(x.coords());
            let mut subsets = vec![IndexSet::empty()];
            for kk in 1..=self.family.set_size_cap.min(s.len()) {
                combinations(s.len(), kk, &mut |c| subsets.push(c.iter().map(|&i| s.as_slice()[i - 1]).collect()));
            }
            for a in &subsets {
                let wa = self.w.measure(a);
                let r = project_complement(&x, a);
                for b in small.iter().filter(|b| b.is_disjoint(&s) && self.w.measure(b) >= wa) {
                    let signs: Vec<SignPattern> =
                        if lattice { vec![SignPattern::all_plus(b.len())] } else { SignPattern::all(b.len()).collect() };
                    for eta in signs {
                        let y = r.add(&indicator(b, &eta, n));
                        let ny = self.model.eval(y.coords());
                        let wit = || Witness {
                            x: Some(x.clone()),
                            a: Some(a.clone()),
                            b: Some(b.clone()),
                            eta: Some(eta.clone()),
                            t: Some(1.0),
                            ..Default::default()
                        };
                        ratios.push("b", nx, ny, wit);
                        col.push("passage", nx, k * ny, wit);
                    }
                }
            }
            (ratios, col)
        });
        let (r, c): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        (Collector::merge(r), Collector::merge(c))
    }

    fn semi_greedy(&self, _id: CheckId) -> Result<(Consts, Collector, Vec<String>)> {
        let mut values = BTreeMap::new();
        let mut flags = Vec::new();
        let mut col = Collector::default();
        let mut prev: Option<f64> = None;
        let windows: Vec<usize> =
            self.setup.growth_windows.iter().copied().filter(|w| *w >= 2 && *w <= self.model.window()).collect();
        for wdw in windows {
            let fam = SearchFamily { window: wdw, ..self.family.clone() };
            let csg = estimate(ConstantName::Csg, self.model, self.w, &fam)?;
            let ca = estimate(ConstantName::Ca, self.model, self.w, &fam)?;
            for e in [&csg, &ca] {
                if e.status == EstimateStatus::Partial {
                    flags.push(format!("{} at window {wdw}: partial estimate", e.name));
                }
            }
            values.insert(format!("Csg@{wdw}"), csg.value);
            values.insert(format!("Ca@{wdw}"), ca.value);
            if let Some(p) = prev {
                col.push(&format!("Ca growth to window {wdw}"), ca.value, p * self.setup.growth_allowance, || {
                    ca.witness.clone()
                });
            }
            prev = Some(ca.value);
        }
        let notes = vec![format!(
            "bounded growth: each Ca estimate within {}x of the previous window's",
            self.setup.growth_allowance
        )];
        Ok((Consts { mode: CheckMode::Qualitative, values, flags }, col, notes))
    }
}

/// Runs one check with default setup.
pub fn run_check(id: CheckId, model: &NormModel, w: &Weight, family: &SearchFamily) -> Result<CheckReport> {
    CheckContext::new(model, w, family, CheckSetup::default()).run(id)
}

/// Runs one check with an explicit setup.
pub fn run_check_with(
    id: CheckId,
    model: &NormModel,
    w: &Weight,
    family: &SearchFamily,
    setup: CheckSetup,
) -> Result<CheckReport> {
    CheckContext::new(model, w, family, setup).run(id)
}
