use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::weights::Weight;

/// An exponent in `[1, ∞]`. Serialized as a number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Exponent {
    fn from(v: f64) -> Self {
        Exponent(v)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExpVisitor;

        impl Visitor<'_> for ExpVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v {
                    "inf" | "infinity" | "Infinity" | "∞" => Ok(Exponent::INFINITY),
                    other => other
                        .parse::<f64>()
                        .map(Exponent)
                        .map_err(|_| E::custom(format!("bad exponent {other:?}"))),
                }
            }
        }

        d.deserialize_any(ExpVisitor)
    }
}

/// Composition tree of norm constructors.
///
/// Weights inside a node are indexed locally: the first coordinate of the
/// node's range reads `w_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Lp {
        p: Exponent,
    },
    WeightedLp {
        p: Exponent,
        weight: Weight,
    },
    /// ⊕_∞: the norm is the max of the part norms.
    DsumInf {
        parts: Vec<SpaceSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sizes: Option<Vec<usize>>,
    },
    /// ⊕_{ℓ₁}: the norm is the sum of the part norms.
    DsumL1 {
        parts: Vec<SpaceSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sizes: Option<Vec<usize>>,
    },
    /// Pointwise max of norms over the same coordinates.
    MaxOf {
        parts: Vec<SpaceSpec>,
    },
    /// `sup_{A∈S} Σ_{n∈A} |a_n|` with `S = {A : |A| <= sqrt(min A)}`.
    Schreier,
    James {
        q: Exponent,
    },
    /// Dyadic 𝔣₁^q norm on the intervals of the listed levels; coordinates
    /// run level by level, left to right.
    F1q {
        q: Exponent,
        levels: Vec<u32>,
    },
    /// `(Σ|a_n|^q)^(1/q) ∨ (Σ|a_n|^p w_n)^(1/p)`.
    RosenthalWoo {
        q: Exponent,
        p: Exponent,
        weight: Weight,
    },
    /// `(Σ|a_n|^q)^(1/q) ∨ sup_j |Σ_{n>=j} a_n w_n|`.
    RwSumming {
        q: Exponent,
        weight: Weight,
    },
    /// ℓ₁ ⊕ c₀ basis `E_{2n-1} = (½e_n, -½f_n)`, `E_{2n} = (¼e_n, ¾f_n)`.
    Ebasis,
}

/// Deepest dyadic level accepted by `f1q`.
pub const MAX_DYADIC_LEVEL: u32 = 20;

impl SpaceSpec {
    pub fn lp(p: f64) -> Self {
        SpaceSpec::Lp { p: Exponent(p) }
    }

    pub fn rosenthal_woo(q: f64, p: f64, weight: Weight) -> Self {
        SpaceSpec::RosenthalWoo { q: Exponent(q), p: Exponent(p), weight }
    }

    pub fn f1q(q: f64, levels: Vec<u32>) -> Self {
        SpaceSpec::F1q { q: Exponent(q), levels }
    }

    /// ⊕_{ℓ₁} of `max(f1q, james)` blocks, block `N` using levels `0..N`.
    pub fn pathological(q: f64, blocks: usize) -> Self {
        let parts = (1..=blocks as u32)
            .map(|n| SpaceSpec::MaxOf {
                parts: vec![SpaceSpec::f1q(q, (0..n).collect()), SpaceSpec::James { q: Exponent(q) }],
            })
            .collect();
        SpaceSpec::DsumL1 { parts, sizes: None }
    }

    /// Dimension fixed by the constructor itself, if any.
    pub fn intrinsic_dim(&self) -> Option<usize> {
        match self {
            SpaceSpec::F1q { levels, .. } => Some(levels.iter().map(|k| 1usize << k).sum()),
            SpaceSpec::MaxOf { parts } => parts.iter().find_map(|p| p.intrinsic_dim()),
            SpaceSpec::DsumInf { parts, sizes } | SpaceSpec::DsumL1 { parts, sizes } => match sizes {
                Some(s) => Some(s.iter().sum()),
                None => parts.iter().map(|p| p.intrinsic_dim()).sum(),
            },
            _ => None,
        }
    }

    pub fn is_lattice(&self) -> bool {
        match self {
            SpaceSpec::Lp { .. }
            | SpaceSpec::WeightedLp { .. }
            | SpaceSpec::Schreier
            | SpaceSpec::F1q { .. }
            | SpaceSpec::RosenthalWoo { .. } => true,
            SpaceSpec::DsumInf { parts, .. } | SpaceSpec::DsumL1 { parts, .. } | SpaceSpec::MaxOf { parts } => {
                parts.iter().all(|p| p.is_lattice())
            }
            SpaceSpec::James { .. } | SpaceSpec::RwSumming { .. } | SpaceSpec::Ebasis => false,
        }
    }

    pub fn has_dual_closed_form(&self) -> bool {
        match self {
            SpaceSpec::Lp { .. } | SpaceSpec::WeightedLp { .. } => true,
            SpaceSpec::DsumInf { parts, .. } | SpaceSpec::DsumL1 { parts, .. } => {
                parts.iter().all(|p| p.has_dual_closed_form())
            }
            _ => false,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let at_least_one = |name: &str, e: Exponent| {
            if e.0.is_nan() || e.0 < 1.0 {
                invalid(format!("{name} must lie in [1, inf], got {e}"))
            } else {
                Ok(())
            }
        };
        match self {
            SpaceSpec::Lp { p } => at_least_one("p", *p),
            SpaceSpec::WeightedLp { p, weight } => {
                at_least_one("p", *p)?;
                weight.validate()
            }
            SpaceSpec::DsumInf { parts, sizes } | SpaceSpec::DsumL1 { parts, sizes } => {
                if parts.is_empty() {
                    return invalid("direct sums need at least one part");
                }
                if let Some(s) = sizes {
                    if s.len() != parts.len() {
                        return invalid("direct sum sizes must match the number of parts");
                    }
                    if s.iter().any(|&n| n == 0) {
                        return invalid("direct sum parts must be nonempty");
                    }
                }
                parts.iter().try_for_each(|p| p.validate())
            }
            SpaceSpec::MaxOf { parts } => {
                if parts.is_empty() {
                    return invalid("max_of needs at least one part");
                }
                let dims: Vec<usize> = parts.iter().filter_map(|p| p.intrinsic_dim()).collect();
                if dims.windows(2).any(|d| d[0] != d[1]) {
                    return invalid("max_of parts disagree on dimension");
                }
                parts.iter().try_for_each(|p| p.validate())
            }
            SpaceSpec::Schreier | SpaceSpec::Ebasis => Ok(()),
            SpaceSpec::James { q } => at_least_one("q", *q),
            SpaceSpec::F1q { q, levels } => {
                at_least_one("q", *q)?;
                if levels.is_empty() {
                    return invalid("f1q needs at least one level");
                }
                if levels.windows(2).any(|l| l[0] >= l[1]) {
                    return invalid("f1q levels must be strictly increasing");
                }
                if levels.iter().any(|&k| k > MAX_DYADIC_LEVEL) {
                    return invalid(format!("f1q levels are capped at {MAX_DYADIC_LEVEL}"));
                }
                Ok(())
            }
            SpaceSpec::RosenthalWoo { q, p, weight } => {
                if q.0.is_nan() || q.0 <= 1.0 {
                    return invalid(format!("rosenthal_woo q must lie in (1, inf], got {q}"));
                }
                if p.is_infinite() {
                    return invalid("rosenthal_woo p must be finite");
                }
                at_least_one("p", *p)?;
                weight.validate()
            }
            SpaceSpec::RwSumming { q, weight } => {
                at_least_one("q", *q)?;
                weight.validate()
            }
        }
    }
}
