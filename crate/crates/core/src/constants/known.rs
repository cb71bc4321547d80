use serde::{Deserialize, Serialize};

use crate::spaces::{NormModel, SpaceSpec};
use crate::weights::Weight;

/// Constants a model can certify analytically under a given weight.
/// `None` means no closed form is claimed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KnownConstants {
    pub kb: Option<f64>,
    pub ku: Option<f64>,
    pub cq: Option<f64>,
    pub cu: Option<f64>,
    pub cd: Option<f64>,
    pub cs: Option<f64>,
    pub ca: Option<f64>,
    pub cc: Option<f64>,
    /// Exact frame constant `c2`.
    pub c2: Option<f64>,
}

impl KnownConstants {
    /// `C_g <= K_u C_a`.
    pub fn cg_bound(&self) -> Option<f64> {
        Some(self.ku? * self.ca?)
    }

    /// `C_al <= C_q C_a`.
    pub fn cal_bound(&self) -> Option<f64> {
        Some(self.cq? * self.ca?)
    }

    /// The partially greedy constant from quasi-greediness and conservativeness.
    pub fn cp_bound(&self) -> Option<f64> {
        let (cq, cc) = (self.cq?, self.cc?);
        Some(partially_greedy_constant(cq, cc))
    }
}

/// `1 + 2C_q + 8C_q³C_c`: the split `x - G_r x = (x - S_m x) + (S_m x - G_r x)`
/// contributes `1 + 2C_q`, the remaining block `8C_q³C_c`.
pub fn partially_greedy_constant(cq: f64, cc: f64) -> f64 {
    1.0 + 2.0 * cq + 8.0 * cq.powi(3) * cc
}

fn is_constant(w: &Weight) -> bool {
    match w {
        Weight::Constant { .. } => true,
        Weight::Power { theta } => *theta == 0.0,
        Weight::Explicit { values, tail } => values.iter().all(|v| v == tail),
        Weight::Geometric { .. } => false,
    }
}

fn same_weight(a: &Weight, b: &Weight) -> bool {
    a == b || (is_constant(a) && is_constant(b) && a.at(1) == b.at(1))
}

/// Analytic constants of `model` for the weight `w`.
pub fn known_constants(model: &NormModel, w: &Weight) -> KnownConstants {
    let mut k = KnownConstants::default();
    if model.is_lattice() {
        k.kb = Some(1.0);
        k.ku = Some(1.0);
        k.cq = Some(1.0);
        k.cu = Some(1.0);
        k.c2 = Some(model.frame_bounds().c2);
    }
    let all_one = |k: &mut KnownConstants| {
        k.cd = Some(1.0);
        k.cs = Some(1.0);
        k.ca = Some(1.0);
        k.cc = Some(1.0);
    };
    match model.spec() {
        SpaceSpec::Lp { p } if p.is_infinite() => all_one(&mut k),
        SpaceSpec::Lp { .. } if is_constant(w) => all_one(&mut k),
        SpaceSpec::Lp { .. } if w.is_nonincreasing() => k.cc = Some(1.0),
        SpaceSpec::WeightedLp { p, .. } if p.is_infinite() => all_one(&mut k),
        SpaceSpec::WeightedLp { weight, .. } if same_weight(weight, w) => all_one(&mut k),
        SpaceSpec::RosenthalWoo { q, weight, .. } if q.is_infinite() && same_weight(weight, w) => all_one(&mut k),
        SpaceSpec::RosenthalWoo { weight, .. } if same_weight(weight, w) && w.is_nonincreasing() => {
            k.cc = Some(1.0)
        }
        SpaceSpec::Schreier if w.is_nonincreasing() => k.cc = Some(1.0),
        _ => {}
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_and_model_rules() {
        let w = Weight::power(0.4);
        let rw = NormModel::new(SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, w.clone()), 8).unwrap();
        let k = known_constants(&rw, &w);
        assert_eq!((k.ku, k.ca, k.cg_bound()), (Some(1.0), Some(1.0), Some(1.0)));
        let k = known_constants(&rw, &Weight::counting());
        assert_eq!(k.ca, None);
        let rw2 = NormModel::new(SpaceSpec::rosenthal_woo(2.0, 1.0, w.clone()), 8).unwrap();
        let k = known_constants(&rw2, &w);
        assert_eq!((k.cc, k.ca), (Some(1.0), None));
        let e = NormModel::new(SpaceSpec::Ebasis, 6).unwrap();
        assert_eq!(known_constants(&e, &Weight::counting()), KnownConstants::default());
        let l2 = NormModel::new(SpaceSpec::lp(2.0), 4).unwrap();
        let k = known_constants(&l2, &Weight::Power { theta: 0.0 });
        assert_eq!((k.ca, k.c2, k.cp_bound()), (Some(1.0), Some(1.0), Some(11.0)));
    }
}
