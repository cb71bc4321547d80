//! Experiment plumbing: configs, reports, CSV tables and the named
//! reproductions. A report embeds the config that produced it, and
//! re-running that config reproduces every numeric field.

mod parse;
mod repro;
mod table;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constants::{
    cardinality_profile, estimate, estimate_from_profile, passes, CheckContext, CheckId, CheckMode, CheckReport,
    CheckSetup, ConstantEstimate, ConstantName, EstimateStatus, SearchFamily,
};
use crate::error::{Error, Result};
use crate::optim::{sigma_w, sigma_w_tilde};
use crate::par;
use crate::spaces::{CoefVec, NormModel, SpaceSpec};
use crate::weights::Weight;

pub use parse::{parse_spec, parse_weight};
pub use repro::{
    EbasisNoPropD, PathologicalF1q, ReproConfig, RwNotConservative, RwNotWDemocratic, RwOneWGreedy, SchreierGap,
    SuiteEntry, SwCase, SwExpect, SwTrivial, TheoremSuite, REPRODUCTIONS,
};
pub use table::{fmt_sig, Cell, Table};

/// Version of every file format the lab reads or writes.
pub const FORMAT_VERSION: u32 = 1;

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Parse(format!("format_version {v} is not supported (expected {FORMAT_VERSION})")))
    }
}

/// A σ table request: one vector, several δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaRequest {
    pub x: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Use projections (σ̃) instead of free coefficients.
    #[serde(default)]
    pub projections: bool,
}

/// A pass criterion on an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub name: ConstantName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// Everything that determines an estimate/check run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub spec: SpaceSpec,
    #[serde(default)]
    pub weight: Weight,
    /// Model window; defaults to the constructor's own dimension, then to
    /// the family window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default)]
    pub family: SearchFamily,
    /// Overrides `family.seed` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub estimates: Vec<ConstantName>,
    #[serde(default)]
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub setup: CheckSetup,
    #[serde(default)]
    pub sigma: Vec<SigmaRequest>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

impl ExperimentConfig {
    pub fn new(spec: SpaceSpec, weight: Weight) -> Self {
        ExperimentConfig {
            format_version: FORMAT_VERSION,
            spec,
            weight,
            window: None,
            family: SearchFamily::default(),
            seed: None,
            estimates: Vec::new(),
            checks: Vec::new(),
            setup: CheckSetup::default(),
            sigma: Vec::new(),
            expect: Vec::new(),
        }
    }

    /// The model and the effective family (window clipped to the model,
    /// seed override applied).
    pub fn resolve(&self) -> Result<(NormModel, SearchFamily)> {
        check_version(self.format_version)?;
        let window = self.window.or(self.spec.intrinsic_dim()).unwrap_or(self.family.window);
        let model = NormModel::new(self.spec.clone(), window)?;
        let mut family = self.family.clone();
        family.window = family.window.min(window);
        if let Some(seed) = self.seed {
            family.seed = seed;
        }
        family.validate(&model)?;
        self.weight.validate()?;
        Ok((model, family))
    }
}

/// What a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunConfig {
    Experiment(ExperimentConfig),
    Reproduction(ReproConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCheck {
    pub label: String,
    #[serde(flatten)]
    pub report: CheckReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    BudgetPartial,
}

impl Outcome {
    /// 0 pass, 1 failure, 3 budget-partial.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::BudgetPartial => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub artifact_version: String,
    pub config: RunConfig,
    pub estimates: Vec<ConstantEstimate>,
    pub checks: Vec<LabeledCheck>,
    pub tables: Vec<Table>,
    pub criteria: Vec<Criterion>,
    /// Items skipped because the model does not support them.
    pub skipped: Vec<String>,
    pub budget_flags: Vec<String>,
    pub outcome: Outcome,
    pub workers: usize,
    pub wall_clock_seconds: f64,
}

impl Report {
    fn empty(config: RunConfig) -> Self {
        Report {
            format_version: FORMAT_VERSION,
            artifact_version: crate::ARTIFACT_VERSION.to_string(),
            config,
            estimates: Vec::new(),
            checks: Vec::new(),
            tables: Vec::new(),
            criteria: Vec::new(),
            skipped: Vec::new(),
            budget_flags: Vec::new(),
            outcome: Outcome::Pass,
            workers: 1,
            wall_clock_seconds: 0.0,
        }
    }

    pub(crate) fn criterion(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.criteria.push(Criterion { name: name.into(), pass, detail: detail.into() });
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn finish(&mut self) {
        self.outcome = if self.criteria.iter().any(|c| !c.pass) {
            Outcome::Fail
        } else if !self.budget_flags.is_empty() {
            Outcome::BudgetPartial
        } else {
            Outcome::Pass
        };
    }

    /// Absorbs an estimate, flagging partial searches.
    pub(crate) fn add_estimate(&mut self, label: &str, e: ConstantEstimate) {
        if e.status == EstimateStatus::Partial {
            self.budget_flags.push(format!("{label}{}: partial search ({})", e.name, e.flags.join("; ")));
        }
        if e.status == EstimateStatus::SkippedUnsupported {
            self.skipped.push(format!("{label}{}: {}", e.name, e.flags.join("; ")));
        }
        self.estimates.push(e);
    }

    /// Absorbs a check. Verdict modes become criteria; estimate-mode and
    /// qualitative checks are recorded for review only.
    pub(crate) fn add_check(&mut self, label: &str, r: CheckReport) {
        for f in &r.budget_flags {
            if f.starts_with("budget") || f.contains("partial") {
                self.budget_flags.push(format!("{label} {}: {f}", r.check_id));
            }
        }
        if matches!(r.mode, CheckMode::Exact | CheckMode::Relation) {
            let detail = format!(
                "{} instances, {} failures, max ratio {}",
                r.instance_count,
                r.fail_count,
                fmt_sig(r.max_ratio)
            );
            let name = if label.is_empty() { r.check_id.to_string() } else { format!("{label} {}", r.check_id) };
            self.criterion(name, r.all_pass, detail);
        }
        self.checks.push(LabeledCheck { label: label.to_string(), report: r });
    }

    /// Routes a per-item error: budget overruns and unsupported items are
    /// recorded, anything else aborts the run.
    pub(crate) fn absorb_error(&mut self, what: &str, e: Error) -> Result<()> {
        match e {
            Error::BudgetExceeded { .. } => {
                self.budget_flags.push(format!("{what}: {e}"));
                Ok(())
            }
            Error::Unsupported(_) => {
                self.skipped.push(format!("{what}: {e}"));
                Ok(())
            }
            other => Err(other),
        }
    }

    /// Writes `report.json` and one CSV per table into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        for t in &self.tables {
            t.write_csv(dir)?;
        }
        Ok(())
    }
}

fn tag<T: Serialize>(t: &T) -> String {
    match serde_json::to_value(t) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(v) => v.to_string(),
        Err(_) => String::new(),
    }
}

/// Runs a config with at most `workers` threads. Results do not depend on
/// the worker count.
pub fn run(config: &RunConfig, workers: usize) -> Result<Report> {
    let start = Instant::now();
    let workers = workers.max(1);
    let mut report = par::with_workers(workers, || match config {
        RunConfig::Experiment(c) => run_experiment(c),
        RunConfig::Reproduction(r) => repro::run(r),
    })?;
    report.workers = workers;
    report.finish();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs the named reproduction.
pub fn reproduce(name: &str, workers: usize) -> Result<Report> {
    run(&RunConfig::Reproduction(ReproConfig::named(name)?), workers)
}

fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let (model, family) = cfg.resolve()?;
    let w = &cfg.weight;
    let mut report = Report::empty(RunConfig::Experiment(cfg.clone()));

    let wants_profile = cfg.estimates.iter().any(|n| matches!(n, ConstantName::DUpper(_) | ConstantName::DLower(_)));
    let profile = if wants_profile {
        match cardinality_profile(&model, family.window, family.budget) {
            Ok(p) => {
                let mut t = Table::new("profile", &["k", "max", "min", "count"]);
                for e in &p {
                    t.push(vec![e.k.into(), e.max.into(), e.min.into(), e.count.into()]);
                }
                report.tables.push(t);
                Some(p)
            }
            Err(e) => {
                report.absorb_error("cardinality profile", e)?;
                None
            }
        }
    } else {
        None
    };

    for &name in &cfg.estimates {
        let r = match (name, &profile) {
            (ConstantName::DUpper(_) | ConstantName::DLower(_), Some(p)) => {
                estimate_from_profile(name, p, &model, w, &family)
            }
            (ConstantName::DUpper(_) | ConstantName::DLower(_), None) => continue,
            _ => estimate(name, &model, w, &family),
        };
        match r {
            Ok(e) => report.add_estimate("", e),
            Err(e) => report.absorb_error(&format!("estimate {name}"), e)?,
        }
    }

    let ctx = CheckContext::new(&model, w, &family, cfg.setup.clone());
    for &id in &cfg.checks {
        match ctx.run(id) {
            Ok(r) => report.add_check("", r),
            Err(e) => report.absorb_error(&format!("check {id}"), e)?,
        }
    }

    if !cfg.sigma.is_empty() {
        let mut t = Table::new("sigma", &["vector", "delta", "kind", "value", "set", "sets_examined"]);
        for (i, req) in cfg.sigma.iter().enumerate() {
            let x = CoefVec::new(req.x.clone())?;
            for &delta in &req.deltas {
                let r = if req.projections {
                    sigma_w_tilde(&model, w, &x, delta, family.window, family.budget)
                } else {
                    sigma_w(&model, w, &x, delta, family.window, family.budget)
                };
                match r {
                    Ok(s) => t.push(vec![
                        (i + 1).into(),
                        delta.into(),
                        (if req.projections { "projection" } else { "free" }).into(),
                        s.value.into(),
                        s.witness_set.to_string().into(),
                        s.sets_examined.into(),
                    ]),
                    Err(e) => report.absorb_error(&format!("sigma vector {} delta {delta}", i + 1), e)?,
                }
            }
        }
        report.tables.push(t);
    }

    for ex in &cfg.expect {
        let Some(e) = report.estimates.iter().find(|e| e.name == ex.name) else {
            report.criterion(format!("expect {}", ex.name), false, "no estimate was produced");
            continue;
        };
        let v = e.value;
        let mut ok = true;
        let mut bounds = Vec::new();
        if let Some(lo) = ex.min {
            ok &= passes(lo, v);
            bounds.push(format!(">= {}", fmt_sig(lo)));
        }
        if let Some(hi) = ex.max {
            ok &= passes(v, hi);
            bounds.push(format!("<= {}", fmt_sig(hi)));
        }
        report.criterion(format!("expect {}", ex.name), ok, format!("value {} {}", fmt_sig(v), bounds.join(" and ")));
    }

    report.tables.insert(0, estimates_table(&report.estimates, ""));
    let (checks, instances) = check_tables(&report.checks);
    report.tables.push(checks);
    report.tables.push(instances);
    Ok(report)
}

pub(crate) fn estimates_table(estimates: &[ConstantEstimate], label: &str) -> Table {
    let mut t = Table::new(
        "estimates",
        &["label", "name", "value", "status", "instances", "rejected", "known", "flags", "witness"],
    );
    for e in estimates {
        t.push(vec![
            label.into(),
            e.name.to_string().into(),
            e.value.into(),
            tag(&e.status).into(),
            e.instances.into(),
            e.rejected.into(),
            e.known.map_or(Cell::Text(String::new()), Cell::Num),
            e.flags.join("; ").into(),
            serde_json::to_string(&e.witness).unwrap_or_default().into(),
        ]);
    }
    t
}

pub(crate) fn check_tables(checks: &[LabeledCheck]) -> (Table, Table) {
    let mut summary = Table::new(
        "checks",
        &["label", "check", "mode", "instances", "failures", "rejected", "max_ratio", "all_pass", "constants"],
    );
    let mut inst = Table::new("check_instances", &["label", "check", "instance", "lhs", "rhs", "ratio", "pass"]);
    for LabeledCheck { label, report: r } in checks {
        let constants: Vec<String> = r.constants.iter().map(|(k, v)| format!("{k}={}", fmt_sig(*v))).collect();
        summary.push(vec![
            label.as_str().into(),
            r.check_id.as_str().into(),
            tag(&r.mode).into(),
            r.instance_count.into(),
            r.fail_count.into(),
            r.rejected.into(),
            r.max_ratio.into(),
            r.all_pass.into(),
            constants.join(";").into(),
        ]);
        for i in &r.instances {
            inst.push(vec![
                label.as_str().into(),
                r.check_id.as_str().into(),
                i.label.as_str().into(),
                i.lhs.into(),
                i.rhs.into(),
                i.ratio.into(),
                i.pass.into(),
            ]);
        }
    }
    (summary, inst)
}
