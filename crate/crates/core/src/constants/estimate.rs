use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::family::{combinations, SearchFamily};
use super::known::known_constants;
use crate::error::{invalid, Error, Result};
use crate::greedy::{all_greedy_sets, greedy_set, indicator, partial_sum, project_complement};
use crate::optim::{min_norm_with, sigma_w_tilde, sigma_w_with, MinimizeOptions, SigmaOptions};
use crate::par;
use crate::spaces::{CoefVec, NormModel, SignPattern};
use crate::weights::{IndexSet, Weight};

/// Denominators below this are rejected instead of producing huge ratios.
pub const DENOM_GUARD: f64 = 1e-12;

/// Largest set for which every sign pattern is tried.
const MAX_SIGN_SET: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstantName {
    Kb,
    Ku,
    Cq,
    Cd,
    Cs,
    Ca,
    Cc,
    Cu,
    PropD,
    Bidem,
    Cg,
    Cal,
    Cp,
    Csg,
    /// `D(m)`: largest `‖1_{εA}‖` over `1 <= |A| <= m`.
    DUpper(usize),
    /// `d(m)`: smallest `‖1_{εA}‖` over `|A| >= m`.
    DLower(usize),
}

impl ConstantName {
    /// Every constant without a cardinality parameter.
    pub const SCALARS: [ConstantName; 14] = [
        ConstantName::Kb,
        ConstantName::Ku,
        ConstantName::Cq,
        ConstantName::Cd,
        ConstantName::Cs,
        ConstantName::Ca,
        ConstantName::Cc,
        ConstantName::Cu,
        ConstantName::PropD,
        ConstantName::Bidem,
        ConstantName::Cg,
        ConstantName::Cal,
        ConstantName::Cp,
        ConstantName::Csg,
    ];

    /// False only for `d(m)`, which is an infimum.
    pub fn is_supremum(self) -> bool {
        !matches!(self, ConstantName::DLower(_))
    }

    /// Needs a σ search per instance.
    pub fn needs_sigma(self) -> bool {
        matches!(self, ConstantName::Cg | ConstantName::Cal | ConstantName::Csg)
    }
}

impl fmt::Display for ConstantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ConstantName::*;
        let s = match self {
            Kb => "Kb",
            Ku => "Ku",
            Cq => "Cq",
            Cd => "Cd",
            Cs => "Cs",
            Ca => "Ca",
            Cc => "Cc",
            Cu => "Cu",
            PropD => "propD",
            Bidem => "bidem",
            Cg => "Cg",
            Cal => "Cal",
            Cp => "Cp",
            Csg => "Csg",
            DUpper(m) => return write!(f, "D({m})"),
            DLower(m) => return write!(f, "d({m})"),
        };
        f.write_str(s)
    }
}

impl FromStr for ConstantName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("D(").or_else(|| s.strip_prefix("d(")) {
            let m: usize = rest
                .strip_suffix(')')
                .and_then(|v| v.trim().parse().ok())
                .filter(|m| *m >= 1)
                .ok_or_else(|| Error::Parse(format!("bad cardinality in {s:?}")))?;
            return Ok(if s.starts_with('D') { ConstantName::DUpper(m) } else { ConstantName::DLower(m) });
        }
        if s == "Cu(propC)" || s == "propC" {
            return Ok(ConstantName::Cu);
        }
        ConstantName::SCALARS
            .iter()
            .copied()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown constant {s:?}")))
    }
}

impl Serialize for ConstantName {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConstantName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// The instance attaining an estimate. Fields not used by a constant stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<CoefVec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<IndexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<IndexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<SignPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<SignPattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// Truncation level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl Witness {
    fn need<T: Clone>(v: &Option<T>, what: &str) -> Result<T> {
        v.clone().ok_or_else(|| Error::InvalidArgument(format!("witness lacks {what}")))
    }

    pub fn x(&self) -> Result<CoefVec> {
        Self::need(&self.x, "x")
    }

    pub fn a(&self) -> Result<IndexSet> {
        Self::need(&self.a, "A")
    }

    pub fn b(&self) -> Result<IndexSet> {
        Self::need(&self.b, "B")
    }

    fn eps_for(&self, a: &IndexSet) -> SignPattern {
        self.eps.clone().unwrap_or_else(|| SignPattern::all_plus(a.len()))
    }

    fn eta_for(&self, b: &IndexSet) -> SignPattern {
        self.eta.clone().unwrap_or_else(|| SignPattern::all_plus(b.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateStatus {
    Complete,
    /// A budget cut the search short; the value is still a valid bound.
    Partial,
    SkippedUnsupported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub name: ConstantName,
    /// Best ratio found; a lower bound for suprema.
    pub value: f64,
    pub witness: Witness,
    pub status: EstimateStatus,
    /// Ratios evaluated.
    pub instances: u64,
    /// Ratios rejected by the denominator guard.
    pub rejected: u64,
    /// Analytic value, when the model certifies one.
    pub known: Option<f64>,
    pub flags: Vec<String>,
    pub family: SearchFamily,
}

#[derive(Debug, Clone)]
struct Cand {
    value: f64,
    witness: Witness,
}

#[derive(Debug, Default)]
struct Part {
    best: Option<Cand>,
    count: u64,
    rejected: u64,
    flags: BTreeSet<String>,
}

impl Part {
    fn offer(&mut self, value: f64, witness: impl FnOnce() -> Witness) {
        self.count += 1;
        if self.best.as_ref().is_none_or(|b| value > b.value) {
            self.best = Some(Cand { value, witness: witness() });
        }
    }

    fn ratio(&mut self, num: f64, den: f64, witness: impl FnOnce() -> Witness) {
        if den < DENOM_GUARD {
            self.rejected += 1;
        } else {
            self.offer(num / den, witness);
        }
    }

    fn flag(&mut self, f: &str) {
        self.flags.insert(f.to_string());
    }

    /// Folds parts in order; earlier candidates win ties.
    fn merge(parts: Vec<Part>) -> Part {
        let mut out = Part::default();
        for p in parts {
            out.count += p.count;
            out.rejected += p.rejected;
            out.flags.extend(p.flags);
            if let Some(c) = p.best {
                if out.best.as_ref().is_none_or(|b| c.value > b.value) {
                    out.best = Some(c);
                }
            }
        }
        out
    }
}

struct Ctx<'a> {
    model: &'a NormModel,
    w: &'a Weight,
    fam: &'a SearchFamily,
}

impl Ctx<'_> {
    fn norm(&self, v: &CoefVec) -> f64 {
        self.model.eval(v.coords())
    }

    fn greedy_sets(&self, x: &CoefVec, m: usize, part: &mut Part) -> Vec<IndexSet> {
        match all_greedy_sets(x, m, self.fam.greedy_cap) {
            Ok(v) => v,
            Err(_) => {
                part.flag("greedy-cap");
                vec![greedy_set(x, m).expect("m within support")]
            }
        }
    }

    fn signs(&self, len: usize, part: &mut Part) -> Vec<SignPattern> {
        if self.model.is_lattice() {
            vec![SignPattern::all_plus(len)]
        } else if len > MAX_SIGN_SET {
            part.flag("sign-cap");
            vec![SignPattern::all_plus(len)]
        } else {
            SignPattern::all(len).collect()
        }
    }

    fn sigma_opts(&self) -> SigmaOptions {
        SigmaOptions { budget: self.fam.budget, minimize: MinimizeOptions::with_tol(self.fam.tol) }
    }
}

fn min_abs_on(x: &CoefVec, a: &IndexSet) -> f64 {
    a.iter().map(|n| x.get(n).abs()).fold(f64::INFINITY, f64::min)
}

/// Subsets of `s` with at most `cap` elements, the empty set first.
fn capped_subsets(s: &IndexSet, cap: usize) -> Vec<IndexSet> {
    let mut out = vec![IndexSet::empty()];
    for k in 1..=cap.min(s.len()) {
        combinations(s.len(), k, &mut |c| out.push(c.iter().map(|&i| s.as_slice()[i - 1]).collect()));
    }
    out
}

/// `x - P_A x + 1_{ηB}`.
fn replace(x: &CoefVec, a: &IndexSet, b: &IndexSet, eta: &SignPattern) -> CoefVec {
    let mut y = project_complement(x, a);
    for (i, n) in b.iter().enumerate() {
        y.set(n, y.get(n) + eta.get(i));
    }
    y
}

/// Estimates `name` over the family.
pub fn estimate(name: ConstantName, model: &NormModel, w: &Weight, family: &SearchFamily) -> Result<ConstantEstimate> {
    family.validate(model)?;
    w.validate()?;
    let ctx = Ctx { model, w, fam: family };
    let known = known_value(name, model, w);
    let mut status = EstimateStatus::Complete;
    let part = match name {
        ConstantName::Kb => kb(&ctx),
        ConstantName::Ku => ku(&ctx),
        ConstantName::Cq => cq(&ctx),
        ConstantName::Cu => {
            let mut p = cu(&ctx);
            let extra = prop_a_pass(&ctx).1;
            p = Part::merge(vec![p, extra]);
            p
        }
        ConstantName::Ca => prop_a_pass(&ctx).0,
        ConstantName::Cd => set_pairs(&ctx, false),
        ConstantName::Cs => set_pairs(&ctx, true),
        ConstantName::Cc => cc(&ctx),
        ConstantName::PropD => prop_d(&ctx),
        ConstantName::Bidem => {
            if !model.has_dual_closed_form() {
                return Ok(ConstantEstimate {
                    name,
                    value: 0.0,
                    witness: Witness::default(),
                    status: EstimateStatus::SkippedUnsupported,
                    instances: 0,
                    rejected: 0,
                    known,
                    flags: vec!["dual-norm-unsupported".into()],
                    family: family.clone(),
                });
            }
            bidem(&ctx)?
        }
        ConstantName::Cg | ConstantName::Cal | ConstantName::Csg => sigma_ratios(&ctx, name),
        ConstantName::Cp => cp(&ctx),
        ConstantName::DUpper(_) | ConstantName::DLower(_) => {
            let profile = cardinality_profile(model, family.window, family.budget)?;
            return estimate_from_profile(name, &profile, model, w, family);
        }
    };
    if part.flags.iter().any(|f| f.starts_with("budget")) {
        status = EstimateStatus::Partial;
    }
    let (value, witness) = match part.best {
        Some(c) => (c.value, c.witness),
        None => (0.0, Witness::default()),
    };
    let mut flags: Vec<String> = part.flags.into_iter().collect();
    if part.count == 0 {
        flags.push("no-instances".into());
    }
    Ok(ConstantEstimate {
        name,
        value,
        witness,
        status,
        instances: part.count,
        rejected: part.rejected,
        known,
        flags,
        family: family.clone(),
    })
}

/// `D(m)` or `d(m)` read off a precomputed [`cardinality_profile`].
pub fn estimate_from_profile(
    name: ConstantName,
    profile: &[ProfileEntry],
    model: &NormModel,
    w: &Weight,
    family: &SearchFamily,
) -> Result<ConstantEstimate> {
    let m = match name {
        ConstantName::DUpper(m) | ConstantName::DLower(m) => m,
        other => return invalid(format!("{other} is not a cardinality profile constant")),
    };
    let pick = if name.is_supremum() {
        profile.iter().filter(|e| e.k <= m).max_by(|a, b| a.max.total_cmp(&b.max).then(b.k.cmp(&a.k)))
    } else {
        profile.iter().filter(|e| e.k >= m).min_by(|a, b| a.min.total_cmp(&b.min).then(a.k.cmp(&b.k)))
    };
    let Some(e) = pick else {
        return invalid(format!("{name} needs 1 <= m <= window {}", family.window));
    };
    let (value, a, eps) = if name.is_supremum() {
        (e.max, e.max_set.clone(), e.max_signs.clone())
    } else {
        (e.min, e.min_set.clone(), e.min_signs.clone())
    };
    Ok(ConstantEstimate {
        name,
        value,
        witness: Witness { a: Some(a), eps: Some(eps), ..Default::default() },
        status: EstimateStatus::Complete,
        instances: profile.iter().map(|e| e.count).sum(),
        rejected: 0,
        known: known_value(name, model, w),
        flags: Vec::new(),
        family: family.clone(),
    })
}

/// The model's analytic value for `name`, if it has one.
pub fn known_value(name: ConstantName, model: &NormModel, w: &Weight) -> Option<f64> {
    let k = known_constants(model, w);
    match name {
        ConstantName::Kb => k.kb,
        ConstantName::Ku => k.ku,
        ConstantName::Cq => k.cq,
        ConstantName::Cu => k.cu,
        ConstantName::Cd => k.cd,
        ConstantName::Cs => k.cs,
        ConstantName::Ca => k.ca,
        ConstantName::Cc => k.cc,
        _ => None,
    }
}

fn kb(ctx: &Ctx) -> Part {
    let xs = ctx.fam.vectors(ctx.model);
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        let nx = ctx.norm(x);
        for m in 1..=x.support().as_slice().last().copied().unwrap_or(0) {
            let s = partial_sum(x, m);
            p.ratio(ctx.norm(&s), nx, || Witness { x: Some(x.clone()), m: Some(m), ..Default::default() });
        }
        p
    }))
}

fn ku(ctx: &Ctx) -> Part {
    let xs = ctx.fam.vectors(ctx.model);
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        let nx = ctx.norm(x);
        let s = x.support();
        let subsets: Vec<IndexSet> = if s.len() <= 16 {
            s.subsets().collect()
        } else {
            p.flag("subset-cap");
            capped_subsets(&s, ctx.fam.set_size_cap)
        };
        for a in subsets {
            let r = project_complement(x, &a);
            p.ratio(ctx.norm(&r), nx, || Witness { x: Some(x.clone()), a: Some(a.clone()), ..Default::default() });
        }
        p
    }))
}

fn cq(ctx: &Ctx) -> Part {
    let xs = ctx.fam.vectors(ctx.model);
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        let nx = ctx.norm(x);
        for m in 0..=x.support().len() {
            for a in ctx.greedy_sets(x, m, &mut p) {
                let r = project_complement(x, &a);
                p.ratio(ctx.norm(&r), nx, || Witness { x: Some(x.clone()), a: Some(a.clone()), m: Some(m), ..Default::default() });
            }
        }
        p
    }))
}

fn cu(ctx: &Ctx) -> Part {
    let xs = ctx.fam.vectors(ctx.model);
    let n = ctx.model.window();
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        let nx = ctx.norm(x);
        for m in 1..=x.support().len() {
            for a in ctx.greedy_sets(x, m, &mut p) {
                let lo = min_abs_on(x, &a);
                for eps in ctx.signs(a.len(), &mut p) {
                    let ind = indicator(&a, &eps, n);
                    p.ratio(lo * ctx.norm(&ind), nx, || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        eps: Some(eps.clone()),
                        ..Default::default()
                    });
                }
            }
        }
        p
    }))
}

/// Scalings of each test vector relative to `t = 1` in the Property (A) sweep.
pub const PROP_A_SCALES: [f64; 2] = [1.0, 0.5];

/// One sweep over `(x, A, B, η)` in projection form. Returns the Property (A)
/// part and, as a by-product, Property (C) candidates: `B` is a greedy set of
/// `y = x - P_A x + 1_{ηB}` since `sup |x| <= 1`.
fn prop_a_pass(ctx: &Ctx) -> (Part, Part) {
    let xs = ctx.fam.vectors(ctx.model);
    let n = ctx.model.window();
    let small = ctx.fam.small_sets();
    let parts = par::map_collect(&xs, |x0| {
        let mut pa = Part::default();
        let mut pc = Part::default();
        let s = x0.support();
        let mut bs: Vec<(IndexSet, f64, Vec<(SignPattern, f64)>)> = vec![(IndexSet::empty(), 0.0, vec![(SignPattern::all_plus(0), 0.0)])];
        for b in small.iter().filter(|b| b.is_disjoint(&s)) {
            let signs = ctx.signs(b.len(), &mut pa);
            let normed = signs.into_iter().map(|e| {
                let v = ctx.norm(&indicator(b, &e, n));
                (e, v)
            });
            bs.push((b.clone(), ctx.w.measure(b), normed.collect()));
        }
        let subsets = capped_subsets(&s, ctx.fam.set_size_cap);
        // sup |x| = t and sup |x| < t, with t = 1
        for scale in PROP_A_SCALES {
            let x = x0.scale(scale / x0.max_abs());
            let nx = ctx.norm(&x);
            // y = x - P_A x + 1_{ηB} built in place; B lies off the support
            let mut buf = x.resized(n).into_inner();
            for a in &subsets {
                let wa = ctx.w.measure(a);
                for k in a.iter() {
                    buf[k - 1] = 0.0;
                }
                for (b, wb, signs) in &bs {
                    if *wb < wa {
                        continue;
                    }
                    for (eta, nind) in signs {
                        for (i, k) in b.iter().enumerate() {
                            buf[k - 1] = eta.get(i);
                        }
                        let ny = ctx.model.eval(&buf);
                        for k in b.iter() {
                            buf[k - 1] = 0.0;
                        }
                        pa.ratio(nx, ny, || Witness {
                            x: Some(x.clone()),
                            a: Some(a.clone()),
                            b: Some(b.clone()),
                            eta: Some(eta.clone()),
                            ..Default::default()
                        });
                        if !b.is_empty() {
                            pc.ratio(1.0 * nind, ny, || Witness {
                                x: Some(replace(&x, a, b, eta)),
                                a: Some(b.clone()),
                                eps: Some(eta.clone()),
                                ..Default::default()
                            });
                        }
                    }
                }
                for k in a.iter() {
                    buf[k - 1] = x.get(k);
                }
            }
        }
        (pa, pc)
    });
    let (a, c): (Vec<Part>, Vec<Part>) = parts.into_iter().unzip();
    (Part::merge(a), Part::merge(c))
}

struct SetRow {
    set: IndexSet,
    weight: f64,
    plus: f64,
    max: (f64, SignPattern),
    min: (f64, SignPattern),
}

fn set_rows(ctx: &Ctx, sets: &[IndexSet], signed: bool) -> Vec<SetRow> {
    let n = ctx.model.window();
    par::map_collect(sets, |a| {
        let plus_sign = SignPattern::all_plus(a.len());
        let plus = ctx.norm(&indicator(a, &plus_sign, n));
        let mut row = SetRow {
            set: a.clone(),
            weight: ctx.w.measure(a),
            plus,
            max: (plus, plus_sign.clone()),
            min: (plus, plus_sign),
        };
        if signed && !ctx.model.is_lattice() {
            for eps in SignPattern::all(a.len()).skip(1) {
                let v = ctx.norm(&indicator(a, &eps, n));
                if v > row.max.0 {
                    row.max = (v, eps.clone());
                }
                if v < row.min.0 {
                    row.min = (v, eps);
                }
            }
        }
        row
    })
}

/// `sup ‖1_{εA}‖ / ‖1_{ηB}‖` over small sets with `w(A) <= w(B)`.
fn set_pairs(ctx: &Ctx, signed: bool) -> Part {
    let rows = set_rows(ctx, &ctx.fam.small_sets(), signed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| rows[i].weight.total_cmp(&rows[j].weight).then(i.cmp(&j)));
    let den = |r: &SetRow| if signed { r.min.0 } else { r.plus };
    // suffix minima of the denominator over increasing weight
    let mut suffix: Vec<usize> = vec![0; order.len()];
    for k in (0..order.len()).rev() {
        suffix[k] = if k + 1 < order.len() && den(&rows[suffix[k + 1]]) < den(&rows[order[k]]) {
            suffix[k + 1]
        } else {
            order[k]
        };
    }
    let mut p = Part::default();
    for a in &rows {
        let k = order.partition_point(|&j| rows[j].weight < a.weight);
        let b = &rows[suffix[k]];
        p.count += (order.len() - k) as u64 - 1;
        let num = if signed { a.max.0 } else { a.plus };
        p.ratio(num, den(b), || Witness {
            a: Some(a.set.clone()),
            b: Some(b.set.clone()),
            eps: signed.then(|| a.max.1.clone()),
            eta: signed.then(|| b.min.1.clone()),
            ..Default::default()
        });
    }
    p
}

/// Exhaustive over `A < B` inside the window when `2^window` fits the budget.
fn cc(ctx: &Ctx) -> Part {
    let wdw = ctx.fam.window;
    if wdw > 30 || (1u64 << wdw) > ctx.fam.budget {
        let rows = set_rows(ctx, &ctx.fam.small_sets(), false);
        let mut p = Part::default();
        p.flag("budget: conservative search limited to small sets");
        for a in &rows {
            for b in rows.iter().filter(|b| a.set.precedes(&b.set) && a.weight <= b.weight) {
                p.ratio(a.plus, b.plus, || Witness { a: Some(a.set.clone()), b: Some(b.set.clone()), ..Default::default() });
            }
        }
        return p;
    }
    let total = 1usize << wdw;
    let n = ctx.model.window();
    let wts = ctx.w.values(wdw);
    let norms = par::map_range(total, |mask| {
        let mut v = vec![0.0; n];
        for (i, c) in v.iter_mut().enumerate().take(wdw) {
            if mask >> i & 1 == 1 {
                *c = 1.0;
            }
        }
        ctx.model.eval(&v)
    });
    let measure = |mask: usize| -> f64 { (0..wdw).filter(|i| mask >> i & 1 == 1).map(|i| wts[i]).sum() };
    let parts = par::map_range(wdw.saturating_sub(1), |t0| {
        let t = t0 + 1;
        let mut p = Part::default();
        // B ranges over nonempty subsets of (t, wdw]
        let mut bs: Vec<(f64, usize)> = (1..1usize << (wdw - t)).map(|m| (measure(m << t), m << t)).collect();
        bs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut suffix = vec![0usize; bs.len()];
        for k in (0..bs.len()).rev() {
            suffix[k] = if k + 1 < bs.len() && norms[bs[suffix[k + 1]].1] < norms[bs[k].1] { suffix[k + 1] } else { k };
        }
        // A ranges over subsets of [1, t] containing t
        for low in 0..1usize << (t - 1) {
            let am = low | 1 << (t - 1);
            let wa = measure(am);
            let k = bs.partition_point(|b| b.0 < wa);
            if k == bs.len() {
                continue;
            }
            let bm = bs[suffix[k]].1;
            p.count += (bs.len() - k) as u64 - 1;
            p.ratio(norms[am], norms[bm], || Witness {
                a: Some(IndexSet::from_mask(am as u64, 1)),
                b: Some(IndexSet::from_mask(bm as u64, 1)),
                ..Default::default()
            });
        }
        p
    });
    Part::merge(parts)
}

fn prop_d(ctx: &Ctx) -> Part {
    let xs = ctx.fam.vectors(ctx.model);
    let n = ctx.model.window();
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        let a = x.support();
        let ind = indicator(&a, &SignPattern::all_plus(a.len()), n);
        p.ratio(min_abs_on(x, &a) * ctx.norm(&ind), ctx.norm(x), || Witness { x: Some(x.clone()), ..Default::default() });
        p
    }))
}

fn bidem(ctx: &Ctx) -> Result<Part> {
    let sets = ctx.fam.small_sets();
    let n = ctx.model.window();
    let parts = par::map_collect(&sets, |a| -> Result<Part> {
        let mut p = Part::default();
        let signs: Vec<SignPattern> = SignPattern::all(a.len()).collect();
        let duals = signs
            .iter()
            .map(|e| ctx.model.dual_norm(&indicator(a, e, n)))
            .collect::<Result<Vec<f64>>>()?;
        for eps in &signs {
            let prim = ctx.norm(&indicator(a, eps, n));
            for (eta, d) in signs.iter().zip(&duals) {
                p.ratio(prim * d, a.len() as f64, || Witness {
                    a: Some(a.clone()),
                    eps: Some(eps.clone()),
                    eta: Some(eta.clone()),
                    ..Default::default()
                });
            }
        }
        Ok(p)
    });
    Ok(Part::merge(parts.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Numerator and denominator of the σ-based ratios for one greedy set.
fn sigma_instance(ctx: &Ctx, name: ConstantName, x: &CoefVec, a: &IndexSet) -> Result<(f64, f64)> {
    let delta = ctx.w.measure(a);
    let opts = ctx.sigma_opts();
    let num = match name {
        ConstantName::Csg => min_norm_with(ctx.model, x, a, &opts.minimize)?.value,
        _ => ctx.norm(&project_complement(x, a)),
    };
    let den = match name {
        ConstantName::Cal => sigma_w_tilde(ctx.model, ctx.w, x, delta, ctx.fam.window, opts.budget)?.value,
        _ => sigma_w_with(ctx.model, ctx.w, x, delta, ctx.fam.window, &opts)?.value,
    };
    Ok((num, den))
}

/// Free-coefficient σ searches on non-lattice models are limited to greedy
/// sets of this size.
pub const SIGMA_NUMERIC_MAX_M: usize = 3;

fn sigma_ratios(ctx: &Ctx, name: ConstantName) -> Part {
    let xs = ctx.fam.sigma_vectors(ctx.model);
    let free = !ctx.model.is_lattice() && name != ConstantName::Cal;
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        let s = x.support().len();
        for m in 1..s {
            if free && m > SIGMA_NUMERIC_MAX_M {
                p.flag("sigma-m-cap");
                break;
            }
            for a in ctx.greedy_sets(x, m, &mut p) {
                match sigma_instance(ctx, name, x, &a) {
                    Ok((num, den)) => p.ratio(num, den, || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        m: Some(m),
                        ..Default::default()
                    }),
                    Err(Error::BudgetExceeded { .. }) => p.flag("budget: σ search truncated"),
                    Err(e) => panic!("σ instance on validated input failed: {e}"),
                }
            }
        }
        p
    }))
}

fn cp(ctx: &Ctx) -> Part {
    let xs = ctx.fam.vectors(ctx.model);
    let n = ctx.model.window();
    let prefix: Vec<f64> = (1..=n).map(|m| ctx.w.measure(&IndexSet::range(1, m))).collect();
    Part::merge(par::map_collect(&xs, |x| {
        let mut p = Part::default();
        for r in 1..=x.support().len() {
            for a in ctx.greedy_sets(x, r, &mut p) {
                let wa = ctx.w.measure(&a);
                let num = ctx.norm(&project_complement(x, &a));
                for m in (1..=n).take_while(|&m| prefix[m - 1] <= wa) {
                    let tail = x.sub(&partial_sum(x, m));
                    p.ratio(num, ctx.norm(&tail), || Witness {
                        x: Some(x.clone()),
                        a: Some(a.clone()),
                        r: Some(r),
                        m: Some(m),
                        ..Default::default()
                    });
                }
            }
        }
        p
    }))
}

/// Extremes of `‖1_{εA}‖` at one cardinality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub k: usize,
    pub max: f64,
    pub max_set: IndexSet,
    pub max_signs: SignPattern,
    pub min: f64,
    pub min_set: IndexSet,
    pub min_signs: SignPattern,
    pub count: u64,
}

/// Exhaustive `max`/`min` of `‖1_{εA}‖` per `|A| = k` over `A ⊆ [1, window]`
/// and every sign. One sign is fixed since `‖-y‖ = ‖y‖`, leaving
/// `(3^window - 1)/2` evaluations.
pub fn cardinality_profile(model: &NormModel, window: usize, budget: u64) -> Result<Vec<ProfileEntry>> {
    if window == 0 || window > model.window() || window > 40 {
        return invalid(format!("profile window must lie in 1..={}", model.window().min(40)));
    }
    let cost = (3f64.powi(window as i32) - 1.0) / 2.0;
    if cost > budget as f64 {
        return Err(Error::BudgetExceeded {
            what: format!("cardinality profile over window {window}"),
            examined: 0,
            budget,
            best: None,
        });
    }
    let n = model.window();
    let total = 1u64 << window;
    let chunks = 64u64.min(total);
    let per = total.div_ceil(chunks);
    type Slot = Option<(f64, u64, u64, f64, u64, u64, u64)>;
    let parts: Vec<Vec<Slot>> = par::map_range(chunks as usize, |c| {
        let mut slots: Vec<Slot> = vec![None; window + 1];
        let mut v = vec![0.0; n];
        for mask in (c as u64 * per).max(1)..((c as u64 + 1) * per).min(total) {
            let elems: Vec<usize> = (0..window).filter(|i| mask >> i & 1 == 1).collect();
            let k = elems.len();
            for &e in &elems {
                v[e] = 1.0;
            }
            let mut gray = 0u64;
            for g in 0..1u64 << (k - 1) {
                if g > 0 {
                    let bit = g.trailing_zeros() as usize;
                    gray ^= 1 << bit;
                    v[elems[bit + 1]] = -v[elems[bit + 1]];
                }
                let val = model.eval(&v);
                let signs = gray << 1;
                let slot = &mut slots[k];
                match slot {
                    None => *slot = Some((val, mask, signs, val, mask, signs, 1)),
                    Some(s) => {
                        s.6 += 1;
                        if val > s.0 {
                            (s.0, s.1, s.2) = (val, mask, signs);
                        }
                        if val < s.3 {
                            (s.3, s.4, s.5) = (val, mask, signs);
                        }
                    }
                }
            }
            for &e in &elems {
                v[e] = 0.0;
            }
        }
        slots
    });
    let mut merged: Vec<Slot> = vec![None; window + 1];
    for part in parts {
        for (k, s) in part.into_iter().enumerate() {
            let Some(s) = s else { continue };
            match &mut merged[k] {
                None => merged[k] = Some(s),
                Some(m) => {
                    m.6 += s.6;
                    if s.0 > m.0 {
                        (m.0, m.1, m.2) = (s.0, s.1, s.2);
                    }
                    if s.3 < m.3 {
                        (m.3, m.4, m.5) = (s.3, s.4, s.5);
                    }
                }
            }
        }
    }
    Ok(merged
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(k, s)| {
            let s = s.expect("every cardinality is visited");
            ProfileEntry {
                k,
                max: s.0,
                max_set: IndexSet::from_mask(s.1, 1),
                max_signs: SignPattern::from_mask(s.2, k),
                min: s.3,
                min_set: IndexSet::from_mask(s.4, 1),
                min_signs: SignPattern::from_mask(s.5, k),
                count: s.6,
            }
        })
        .collect())
}

/// Recomputes the ratio a witness certifies, from scratch.
pub fn reevaluate(name: ConstantName, model: &NormModel, w: &Weight, family: &SearchFamily, wit: &Witness) -> Result<f64> {
    let n = model.window();
    let norm = |v: &CoefVec| model.norm(v);
    let ind = |a: &IndexSet, e: &SignPattern| indicator(a, e, n);
    let plus = |a: &IndexSet| SignPattern::all_plus(a.len());
    Ok(match name {
        ConstantName::Kb => {
            let x = wit.x()?;
            norm(&partial_sum(&x, wit.m.unwrap_or(0)))? / norm(&x)?
        }
        ConstantName::Ku | ConstantName::Cq => {
            let x = wit.x()?;
            norm(&project_complement(&x, &wit.a()?))? / norm(&x)?
        }
        ConstantName::Cu => {
            let (x, a) = (wit.x()?, wit.a()?);
            min_abs_on(&x, &a) * norm(&ind(&a, &wit.eps_for(&a)))? / norm(&x)?
        }
        ConstantName::Ca => {
            let (x, a, b) = (wit.x()?, wit.a()?, wit.b()?);
            norm(&x)? / norm(&replace(&x, &a, &b, &wit.eta_for(&b)))?
        }
        ConstantName::Cd | ConstantName::Cc => {
            let (a, b) = (wit.a()?, wit.b()?);
            norm(&ind(&a, &plus(&a)))? / norm(&ind(&b, &plus(&b)))?
        }
        ConstantName::Cs => {
            let (a, b) = (wit.a()?, wit.b()?);
            norm(&ind(&a, &wit.eps_for(&a)))? / norm(&ind(&b, &wit.eta_for(&b)))?
        }
        ConstantName::PropD => {
            let x = wit.x()?;
            let a = x.support();
            min_abs_on(&x, &a) * norm(&ind(&a, &plus(&a)))? / norm(&x)?
        }
        ConstantName::Bidem => {
            let a = wit.a()?;
            norm(&ind(&a, &wit.eps_for(&a)))? * model.dual_norm(&ind(&a, &wit.eta_for(&a)))? / a.len() as f64
        }
        ConstantName::Cg | ConstantName::Cal | ConstantName::Csg => {
            let ctx = Ctx { model, w, fam: family };
            let (num, den) = sigma_instance(&ctx, name, &wit.x()?, &wit.a()?)?;
            num / den
        }
        ConstantName::Cp => {
            let x = wit.x()?;
            let m = wit.m.ok_or_else(|| Error::InvalidArgument("witness lacks m".into()))?;
            norm(&project_complement(&x, &wit.a()?))? / norm(&x.sub(&partial_sum(&x, m)))?
        }
        ConstantName::DUpper(_) | ConstantName::DLower(_) => {
            let a = wit.a()?;
            norm(&ind(&a, &wit.eps_for(&a)))?
        }
    })
}
