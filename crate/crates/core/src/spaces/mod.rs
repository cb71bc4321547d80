//! Norm models over a finite window of basis coordinates.

mod node;
mod spec;
mod vector;

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use node::Node;

pub use spec::{Exponent, SpaceSpec, MAX_DYADIC_LEVEL};
pub use vector::{CoefVec, SignPattern};

/// Bounds `c1 <= min(‖e_n‖, ‖e_n^*‖)` and `max(‖e_n‖, ‖e_n^*‖) <= c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub c1: f64,
    pub c2: f64,
    /// False when the dual side is a search lower bound.
    pub exact: bool,
}

/// A compiled [`SpaceSpec`] on coordinates `1..=window`.
#[derive(Debug, Clone)]
pub struct NormModel {
    spec: SpaceSpec,
    window: usize,
    root: Node,
    lattice: bool,
    dual_closed: bool,
    frame: OnceLock<FrameBounds>,
}

impl NormModel {
    pub fn new(spec: SpaceSpec, window: usize) -> Result<Self> {
        spec.validate()?;
        if window == 0 {
            return invalid("window must be at least 1");
        }
        let root = Node::compile(&spec, window)?;
        Ok(NormModel {
            lattice: spec.is_lattice(),
            dual_closed: spec.has_dual_closed_form(),
            spec,
            window,
            root,
            frame: OnceLock::new(),
        })
    }

    /// Builds a model whose window is fixed by the constructor itself.
    pub fn intrinsic(spec: SpaceSpec) -> Result<Self> {
        match spec.intrinsic_dim() {
            Some(d) => NormModel::new(spec, d),
            None => invalid("constructor has no intrinsic dimension; pass a window"),
        }
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_lattice(&self) -> bool {
        self.lattice
    }

    pub fn has_dual_closed_form(&self) -> bool {
        self.dual_closed
    }

    /// Basis constant, when known analytically.
    pub fn known_kb(&self) -> Option<f64> {
        self.lattice.then_some(1.0)
    }

    /// Suppression unconditional constant, when known analytically.
    pub fn known_ku(&self) -> Option<f64> {
        self.lattice.then_some(1.0)
    }

    fn check_support(&self, a: &[f64]) -> Result<()> {
        if let Some(i) = a.iter().skip(self.window).position(|v| *v != 0.0) {
            let n = self.window + i + 1;
            return match self.spec.intrinsic_dim() {
                Some(d) => invalid(format!("coordinate {n} is off the declared levels (dimension {d})")),
                None => invalid(format!("coordinate {n} is outside the window 1..={}", self.window)),
            };
        }
        if a.iter().any(|v| !v.is_finite()) {
            return invalid("coefficients must be finite");
        }
        Ok(())
    }

    pub fn norm(&self, x: &CoefVec) -> Result<f64> {
        self.norm_slice(x.coords())
    }

    pub fn norm_slice(&self, a: &[f64]) -> Result<f64> {
        self.check_support(a)?;
        Ok(self.eval_padded(a))
    }

    fn eval_padded(&self, a: &[f64]) -> f64 {
        if a.len() == self.window {
            self.root.eval(a)
        } else {
            let mut v = a[..a.len().min(self.window)].to_vec();
            v.resize(self.window, 0.0);
            self.root.eval(&v)
        }
    }

    /// Unchecked evaluation for internal hot loops.
    pub(crate) fn eval(&self, a: &[f64]) -> f64 {
        debug_assert!(a.len() <= self.window || a[self.window..].iter().all(|v| *v == 0.0));
        self.eval_padded(a)
    }

    pub fn dual_norm(&self, f: &CoefVec) -> Result<f64> {
        self.check_support(f.coords())?;
        let mut v = f.coords()[..f.window().min(self.window)].to_vec();
        v.resize(self.window, 0.0);
        self.root.dual(&v)
    }

    pub fn unit_norm(&self, n: usize) -> f64 {
        let mut v = vec![0.0; self.window];
        v[n - 1] = 1.0;
        self.root.eval(&v)
    }

    /// Frame bounds over the window, computed once per model.
    pub fn frame_bounds(&self) -> FrameBounds {
        *self.frame.get_or_init(|| self.compute_frame_bounds())
    }

    fn compute_frame_bounds(&self) -> FrameBounds {
        let units: Vec<f64> = (1..=self.window).map(|n| self.unit_norm(n)).collect();
        if self.lattice {
            // ‖e_n^*‖ = 1/‖e_n‖ for absolute norms
            let (lo, hi) = units.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &u| {
                (lo.min(u).min(1.0 / u), hi.max(u).max(1.0 / u))
            });
            return FrameBounds { c1: lo, c2: hi, exact: true };
        }
        let dual_lb = self.dual_unit_lower_bounds(&units);
        let c1 = units.iter().fold(f64::INFINITY, |m, &u| m.min(u));
        let c2 = units.iter().chain(&dual_lb).fold(0.0f64, |m, &u| m.max(u));
        FrameBounds { c1, c2, exact: false }
    }

    /// Lower bounds for `‖e_n^*‖ = sup |x_n| / ‖x‖` from two-term probes
    /// `e_n + c e_m` and seeded random vectors.
    fn dual_unit_lower_bounds(&self, units: &[f64]) -> Vec<f64> {
        let w = self.window;
        let mut lb: Vec<f64> = units.iter().map(|u| 1.0 / u).collect();
        let reach = if w <= 24 { w } else { 4 };
        let mut v = vec![0.0; w];
        for n in 0..w {
            for m in n.saturating_sub(reach)..(n + reach + 1).min(w) {
                if m == n {
                    continue;
                }
                for step in -36i32..=36 {
                    let c = f64::from(step) / 12.0;
                    v[n] = 1.0;
                    v[m] = c;
                    let r = 1.0 / self.root.eval(&v);
                    if r > lb[n] {
                        lb[n] = r;
                    }
                    v[m] = 0.0;
                }
                v[n] = 0.0;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f4a3);
        for _ in 0..256 {
            for c in v.iter_mut() {
                *c = rng.random_range(-1.0..=1.0);
            }
            let nv = self.root.eval(&v);
            if nv > 0.0 {
                for (b, c) in lb.iter_mut().zip(&v) {
                    *b = b.max(c.abs() / nv);
                }
            }
        }
        lb
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;

    fn model(json: &str, window: usize) -> NormModel {
        NormModel::new(serde_json::from_str(json).unwrap(), window).unwrap()
    }

    fn v(a: &[f64]) -> CoefVec {
        CoefVec::from(a.to_vec())
    }

    #[test]
    fn documented_norm_examples() {
        assert_eq!(model(r#"{"kind":"lp","p":1}"#, 2).norm(&v(&[1.0, 1.0])).unwrap(), 2.0);
        let j = model(r#"{"kind":"james","q":2}"#, 3).norm(&v(&[1.0, -1.0, 1.0])).unwrap();
        assert!((j - 1.7320508).abs() < 1e-7);
        let s = model(r#"{"kind":"schreier"}"#, 8);
        assert_eq!(s.norm(&v(&[1.0, 1.0, 1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(s.norm(&v(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0])).unwrap(), 2.0);
        let e = model(r#"{"kind":"ebasis"}"#, 6);
        assert_eq!(e.norm(&v(&[1.0])).unwrap(), 1.0);
        assert_eq!(e.norm(&v(&[-1.0, 2.0, -1.0, 2.0, -1.0, 2.0])).unwrap(), 2.0);
    }

    #[test]
    fn rosenthal_woo_indicator_closed_form() {
        let w = Weight::power(0.4);
        let m = NormModel::new(SpaceSpec::rosenthal_woo(2.0, 1.0, w.clone()), 10).unwrap();
        let a = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let wa = 1.0 + w.at(3) + w.at(4) + w.at(7);
        assert!((m.norm(&v(&a)).unwrap() - 2.0f64.max(wa)).abs() < 1e-15);
    }

    #[test]
    fn exponent_strings_parse() {
        let s: SpaceSpec = serde_json::from_str(r#"{"kind":"lp","p":"inf"}"#).unwrap();
        assert_eq!(s, SpaceSpec::lp(f64::INFINITY));
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(back, r#"{"kind":"lp","p":"inf"}"#);
    }

    #[test]
    fn nested_spec_parses() {
        let json = r#"{"kind":"dsum_l1","parts":[{"kind":"max_of","parts":[{"kind":"f1q","q":2,"levels":[0,1]},{"kind":"james","q":2}]},{"kind":"lp","p":2}]}"#;
        let m = model(json, 5);
        // first block has 3 coordinates, lp(2) takes the remaining 2
        let x = v(&[0.0, 0.0, 0.0, 3.0, 4.0]);
        assert_eq!(m.norm(&x).unwrap(), 5.0);
        assert!(m.is_lattice() == false);
    }

    #[test]
    fn pathological_dimensions() {
        let m = NormModel::intrinsic(SpaceSpec::pathological(2.0, 3)).unwrap();
        assert_eq!(m.window(), 1 + 3 + 7);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(NormModel::new(SpaceSpec::lp(0.5), 3).is_err());
        assert!(NormModel::new(SpaceSpec::f1q(2.0, vec![1, 0]), 3).is_err());
        assert!(NormModel::new(SpaceSpec::f1q(2.0, vec![0, 1]), 4).is_err());
        assert!(NormModel::new(SpaceSpec::rosenthal_woo(1.0, 1.0, Weight::counting()), 3).is_err());
        let two_free = SpaceSpec::DsumInf { parts: vec![SpaceSpec::lp(1.0), SpaceSpec::lp(2.0)], sizes: None };
        assert!(NormModel::new(two_free, 4).is_err());
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"kind":"banach"}"#).is_err());
    }

    #[test]
    fn support_outside_window() {
        let m = model(r#"{"kind":"lp","p":2}"#, 2);
        assert!(m.norm(&v(&[1.0, 0.0, 1.0])).is_err());
        assert_eq!(m.norm(&v(&[3.0, 4.0, 0.0])).unwrap(), 5.0);
        assert_eq!(m.norm(&v(&[2.0])).unwrap(), 2.0);
        let f = NormModel::new(SpaceSpec::f1q(2.0, vec![0]), 1).unwrap();
        let err = f.norm(&v(&[1.0, 1.0])).unwrap_err().to_string();
        assert!(err.contains("declared levels"), "{err}");
    }

    #[test]
    fn dual_norms() {
        let l1 = model(r#"{"kind":"lp","p":1}"#, 2);
        assert_eq!(l1.dual_norm(&v(&[1.0, -1.0])).unwrap(), 1.0);
        let l2 = model(r#"{"kind":"lp","p":2}"#, 4);
        assert_eq!(l2.dual_norm(&v(&[1.0, 1.0, 1.0, 1.0])).unwrap(), 2.0);
        assert!(model(r#"{"kind":"schreier"}"#, 4).dual_norm(&v(&[1.0])).is_err());
        let wl = NormModel::new(SpaceSpec::WeightedLp { p: Exponent(1.0), weight: Weight::Constant { c: 2.0 } }, 2).unwrap();
        assert_eq!(wl.dual_norm(&v(&[1.0, 0.5])).unwrap(), 0.5);
        let ds = SpaceSpec::DsumInf { parts: vec![SpaceSpec::lp(1.0), SpaceSpec::lp(2.0)], sizes: Some(vec![1, 2]) };
        let ds = NormModel::new(ds, 3).unwrap();
        assert_eq!(ds.dual_norm(&v(&[1.0, 3.0, 4.0])).unwrap(), 6.0);
    }

    #[test]
    fn weighted_dual_is_dual() {
        // Hölder pairing: |<f, x>| <= ‖f‖_* ‖x‖ with equality at the extremal x
        let w = Weight::power(0.5);
        let m = NormModel::new(SpaceSpec::WeightedLp { p: Exponent(3.0), weight: w.clone() }, 4).unwrap();
        let f: [f64; 4] = [1.0, -2.0, 0.5, 1.0];
        let pc: f64 = 1.5;
        let x: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(i, fv)| fv.signum() * (fv.abs() / w.at(i + 1)).powf(pc - 1.0))
            .collect();
        let pairing: f64 = f.iter().zip(&x).map(|(a, b)| a * b).sum();
        let ratio = pairing / m.norm_slice(&x).unwrap();
        assert!((ratio - m.dual_norm(&v(&f)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn frame_bounds_examples() {
        let fb = model(r#"{"kind":"lp","p":2}"#, 5).frame_bounds();
        assert_eq!(fb, FrameBounds { c1: 1.0, c2: 1.0, exact: true });
        let fb = model(r#"{"kind":"schreier"}"#, 9).frame_bounds();
        assert_eq!((fb.c1, fb.c2), (1.0, 1.0));
        let fb = model(r#"{"kind":"ebasis"}"#, 8).frame_bounds();
        assert_eq!(fb.c1, 1.0);
        assert!(fb.c2 >= 1.0 && !fb.exact);
    }
}
