use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::weights::IndexSet;

/// Finitely supported vector in basis coordinates. Index `n` (1-based) holds
/// `e_n^*(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefVec(Vec<f64>);

impl CoefVec {
    pub fn zeros(window: usize) -> Self {
        CoefVec(vec![0.0; window])
    }

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return invalid("coefficients must be finite");
        }
        Ok(CoefVec(coeffs))
    }

    pub fn window(&self) -> usize {
        self.0.len()
    }

    /// Coefficient at 1-based index `n`; zero outside the window.
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.0.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, n: usize, value: f64) {
        assert!(n >= 1 && n <= self.0.len(), "index {n} outside window {}", self.0.len());
        self.0[n - 1] = value;
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> IndexSet {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, c: f64) -> CoefVec {
        CoefVec(self.0.iter().map(|a| a * c).collect())
    }

    /// Coordinatewise sum; the shorter vector is padded with zeros.
    pub fn add(&self, other: &CoefVec) -> CoefVec {
        let n = self.0.len().max(other.0.len());
        CoefVec((1..=n).map(|i| self.get(i) + other.get(i)).collect())
    }

    pub fn sub(&self, other: &CoefVec) -> CoefVec {
        let n = self.0.len().max(other.0.len());
        CoefVec((1..=n).map(|i| self.get(i) - other.get(i)).collect())
    }

    /// Same coefficients, zero-padded or truncated to `window`.
    pub fn resized(&self, window: usize) -> CoefVec {
        let mut v = self.0.clone();
        v.resize(window, 0.0);
        CoefVec(v)
    }
}

impl From<Vec<f64>> for CoefVec {
    fn from(v: Vec<f64>) -> Self {
        CoefVec(v)
    }
}

impl fmt::Display for CoefVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A `±1` per element of an associated index set, in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn all_plus(len: usize) -> Self {
        SignPattern(vec![1; len])
    }

    /// Bit `i` set means entry `i` is `-1`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        SignPattern((0..len).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// All `2^len` patterns, all-plus first.
    pub fn all(len: usize) -> impl Iterator<Item = SignPattern> {
        assert!(len < 64, "sign enumeration is limited to 63 entries");
        (0..1u64 << len).map(move |m| SignPattern::from_mask(m, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

impl TryFrom<Vec<i8>> for SignPattern {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        if v.iter().any(|s| *s != 1 && *s != -1) {
            return invalid("sign patterns may only contain +1 and -1");
        }
        Ok(SignPattern(v))
    }
}

impl From<SignPattern> for Vec<i8> {
    fn from(s: SignPattern) -> Self {
        s.0
    }
}
