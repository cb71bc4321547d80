use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spaces::{CoefVec, NormModel};
use crate::weights::IndexSet;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LatticeShortcut,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Cap on coordinate sweeps per restart.
    pub max_iter: usize,
    /// Skip the lattice shortcut even when the model allows it.
    pub force_numeric: bool,
    /// Start the first restart at the projection coefficients.
    pub warm_start: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { tol: DEFAULT_TOL, restarts: 5, seed: 0, max_iter: 10_000, force_numeric: false, warm_start: true }
    }
}

impl MinimizeOptions {
    pub fn with_tol(tol: f64) -> Self {
        MinimizeOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    /// `b_n` for each `n` of the set, in increasing index order.
    pub coeffs: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: Method,
    /// Some coefficient ended on the edge of the search box.
    pub box_hit: bool,
}

/// `min_b ‖x - Σ_{n∈A} b_n e_n‖` with default options and the given tolerance.
pub fn min_norm_over_coeffs(model: &NormModel, x: &CoefVec, a: &IndexSet, tol: f64) -> Result<MinimizeResult> {
    min_norm_with(model, x, a, &MinimizeOptions::with_tol(tol))
}

pub fn min_norm_with(model: &NormModel, x: &CoefVec, a: &IndexSet, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    if !(opts.tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    if x.coords().iter().any(|c| !c.is_finite()) {
        return invalid("coefficients must be finite");
    }
    let w = model.window();
    if a.max().is_some_and(|n| n > w) {
        return invalid(format!("set {a} leaves the window 1..={w}"));
    }
    let base = model.norm(x)?;
    let mut r = x.resized(w).into_inner();
    if a.is_empty() {
        return Ok(MinimizeResult {
            coeffs: vec![],
            value: base,
            iterations: 0,
            converged: true,
            method: Method::LatticeShortcut,
            box_hit: false,
        });
    }
    if model.is_lattice() && !opts.force_numeric {
        for n in a.iter() {
            r[n - 1] = 0.0;
        }
        return Ok(MinimizeResult {
            coeffs: a.iter().map(|n| x.get(n)).collect(),
            value: model.eval(&r),
            iterations: 0,
            converged: true,
            method: Method::LatticeShortcut,
            box_hit: false,
        });
    }
    Ok(numeric(model, &r, a, base, opts))
}

struct Objective<'a> {
    model: &'a NormModel,
    r: Vec<f64>,
}

impl Objective<'_> {
    fn at(&mut self, i: usize, t: f64) -> f64 {
        let old = self.r[i];
        self.r[i] = t;
        let v = self.model.eval(&self.r);
        self.r[i] = old;
        v
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes the convex function `t ↦ f(t)` on `[lo, hi]`. Golden-section
/// search locates a minimizer; bisection then finds the edges of the
/// near-optimal plateau and its midpoint is returned, which makes the choice
/// among equal minimizers deterministic and central.
fn line_min(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let scale = 1.0f64.max(lo.abs()).max(hi.abs());
    let eps = 1e-11 * scale;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > eps {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (mut t, mut ft) = if fc <= fd { (c, fc) } else { (d, fd) };
    for edge in [lo, hi] {
        let fe = f(edge);
        if fe < ft {
            t = edge;
            ft = fe;
        }
    }
    let level = ft + 1e-12 * ft.max(1.0);
    let mut edge_of = |mut inside: f64, mut outside: f64| {
        if f(outside) <= level {
            return outside;
        }
        while (outside - inside).abs() > eps {
            let mid = 0.5 * (inside + outside);
            if f(mid) <= level {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let left = edge_of(t, lo);
    let right = edge_of(t, hi);
    let mid = 0.5 * (left + right);
    let fm = f(mid);
    if fm <= ft {
        (mid, fm)
    } else {
        (t, ft)
    }
}

fn numeric(model: &NormModel, x: &[f64], a: &IndexSet, base: f64, opts: &MinimizeOptions) -> MinimizeResult {
    let idx: Vec<usize> = a.iter().map(|n| n - 1).collect();
    let xmax = idx.iter().fold(0.0f64, |m, &i| m.max(x[i].abs()));
    let c2 = model.frame_bounds().c2;
    // any minimizer has |b_n| <= c2 (‖x‖ + ‖x - Σ b e‖) <= 2 c2 ‖x‖
    let radius = (2.0 * c2 * base).max(2.0 * xmax).max(1e-300);
    let restarts = if idx.len() == 1 { 1 } else { opts.restarts.max(1) };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ set_hash(a));

    let mut best: Option<(Vec<f64>, f64, usize, bool)> = None;
    let mut total_iters = 0;
    for k in 0..restarts {
        // residual coordinates c_n = x_n - b_n
        let start: Vec<f64> = match (k, opts.warm_start) {
            (0, true) => vec![0.0; idx.len()],
            (0, false) | (1, true) => idx.iter().map(|&i| x[i]).collect(),
            _ => idx.iter().map(|&i| x[i] - rng.random_range(-1.0..=1.0) * radius.min(2.0 * base.max(xmax))).collect(),
        };
        let (c, v, iters, conv) = descend(model, x, &idx, &start, radius, opts);
        total_iters += iters;
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((c, v, iters, conv));
        }
    }
    let (c, value, _, converged) = best.expect("at least one restart");
    let coeffs: Vec<f64> = idx.iter().zip(&c).map(|(&i, ci)| x[i] - ci).collect();
    let box_hit = coeffs.iter().any(|b| b.abs() >= radius * (1.0 - 1e-9));
    MinimizeResult { coeffs, value, iterations: total_iters, converged, method: Method::Numeric, box_hit }
}

fn set_hash(a: &IndexSet) -> u64 {
    a.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, n| (h ^ n as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Cyclic coordinate descent, with pairwise diagonal moves to escape the
/// corners where nonsmooth objectives stall single-coordinate search.
fn descend(
    model: &NormModel,
    x: &[f64],
    idx: &[usize],
    start: &[f64],
    radius: f64,
    opts: &MinimizeOptions,
) -> (Vec<f64>, f64, usize, bool) {
    let mut obj = Objective { model, r: x.to_vec() };
    for (&i, &c) in idx.iter().zip(start) {
        obj.r[i] = c;
    }
    let mut fval = model.eval(&obj.r);
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iter {
        iters += 1;
        let before = fval;
        for &i in idx {
            let (lo, hi) = (x[i] - radius, x[i] + radius);
            let (t, ft) = line_min(&mut |t| obj.at(i, t), lo, hi);
            if ft <= fval {
                obj.r[i] = t;
                fval = ft;
            }
        }
        if before - fval < opts.tol / 10.0 {
            let gain = diagonal_sweep(&mut obj, x, idx, radius, &mut fval);
            if gain < opts.tol / 10.0 {
                converged = true;
                break;
            }
        }
    }
    let c = idx.iter().map(|&i| obj.r[i]).collect();
    (c, fval, iters, converged)
}

fn diagonal_sweep(obj: &mut Objective<'_>, x: &[f64], idx: &[usize], radius: f64, fval: &mut f64) -> f64 {
    let before = *fval;
    for (p, &i) in idx.iter().enumerate() {
        for &j in &idx[p + 1..] {
            for s in [1.0, -1.0] {
                let (ri, rj) = (obj.r[i], obj.r[j]);
                // keep both coordinates inside their boxes
                let lo = (x[i] - radius - ri).max(if s > 0.0 { x[j] - radius - rj } else { rj - x[j] - radius });
                let hi = (x[i] + radius - ri).min(if s > 0.0 { x[j] + radius - rj } else { rj - (x[j] - radius) });
                if !(lo < hi) {
                    continue;
                }
                let mut f = |t: f64| {
                    obj.r[i] = ri + t;
                    obj.r[j] = rj + s * t;
                    let v = obj.model.eval(&obj.r);
                    obj.r[i] = ri;
                    obj.r[j] = rj;
                    v
                };
                let (t, ft) = line_min(&mut f, lo, hi);
                if ft < *fval {
                    obj.r[i] = ri + t;
                    obj.r[j] = rj + s * t;
                    *fval = ft;
                }
            }
        }
    }
    before - *fval
}
