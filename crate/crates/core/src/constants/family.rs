use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::greedy::GREEDY_SET_CAP;
use crate::optim::{DEFAULT_BUDGET, DEFAULT_TOL};
use crate::spaces::{CoefVec, NormModel, SignPattern, SpaceSpec};
use crate::weights::IndexSet;

/// The finite quantifier domain for constant estimates and checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchFamily {
    pub window: usize,
    /// Coefficient values for structured test vectors.
    pub grid: Vec<f64>,
    pub max_support: usize,
    pub random_samples: usize,
    pub seed: u64,
    /// Largest `|A|`, `|B|` in set-pair searches.
    pub set_size_cap: usize,
    pub greedy_cap: usize,
    /// Number of test vectors used where every instance needs σ.
    pub sigma_instances: usize,
    pub budget: u64,
    pub tol: f64,
}

impl Default for SearchFamily {
    fn default() -> Self {
        SearchFamily {
            window: 12,
            grid: vec![0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0],
            max_support: 6,
            random_samples: 200,
            seed: 0,
            set_size_cap: 3,
            greedy_cap: GREEDY_SET_CAP,
            sigma_instances: 60,
            budget: DEFAULT_BUDGET,
            tol: DEFAULT_TOL,
        }
    }
}

impl SearchFamily {
    pub fn with_window(window: usize) -> Self {
        SearchFamily { window, ..Default::default() }
    }

    pub fn validate(&self, model: &NormModel) -> Result<()> {
        if self.window == 0 {
            return invalid("family window must be at least 1");
        }
        if self.window > model.window() {
            return invalid(format!("family window {} exceeds the model window {}", self.window, model.window()));
        }
        if self.set_size_cap == 0 || self.set_size_cap > 16 {
            return invalid("set size cap must lie in 1..=16");
        }
        if self.max_support == 0 {
            return invalid("max support must be positive");
        }
        if self.grid.iter().any(|g| !g.is_finite()) {
            return invalid("grid values must be finite");
        }
        Ok(())
    }

    /// Nonempty subsets of the window with at most `set_size_cap` elements,
    /// by size and then lexicographically.
    pub fn small_sets(&self) -> Vec<IndexSet> {
        let mut out = Vec::new();
        for k in 1..=self.set_size_cap.min(self.window) {
            combinations(self.window, k, &mut |c| out.push(c.iter().copied().collect()));
        }
        out
    }

    /// The test vectors, in a fixed order: model-specific witnesses, signed
    /// indicators, grid patterns, then random vectors.
    pub fn vectors(&self, model: &NormModel) -> Vec<CoefVec> {
        let n = model.window();
        let mut out = witnesses(model.spec(), self.window, n);
        for a in self.small_sets() {
            for eps in SignPattern::all(a.len()) {
                let mut v = vec![0.0; n];
                for (i, k) in a.iter().enumerate() {
                    v[k - 1] = eps.get(i);
                }
                out.push(CoefVec::from(v));
            }
        }
        let nonzero: Vec<f64> = self.grid.iter().copied().filter(|g| *g != 0.0).collect();
        let top = nonzero.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let patterns = |support: &[usize], out: &mut Vec<CoefVec>| {
            let k = support.len();
            let mut digits = vec![0usize; k];
            loop {
                let vals: Vec<f64> = digits.iter().map(|&d| nonzero[d]).collect();
                if vals[0] > 0.0 && vals.iter().any(|v| v.abs() == top) {
                    let mut v = vec![0.0; n];
                    for (&s, &c) in support.iter().zip(&vals) {
                        v[s - 1] = c / top;
                    }
                    out.push(CoefVec::from(v));
                }
                let Some(i) = (0..k).find(|&i| digits[i] + 1 < nonzero.len()) else { break };
                digits[i] += 1;
                digits[..i].iter_mut().for_each(|d| *d = 0);
            }
        };
        if !nonzero.is_empty() {
            if self.max_support >= 2 {
                combinations(self.window, 2, &mut |c| patterns(c, &mut out));
            }
            if self.max_support >= 3 {
                for s in 1..=self.window.saturating_sub(2) {
                    patterns(&[s, s + 1, s + 2], &mut out);
                }
            }
        }
        for i in 0..self.random_samples {
            out.push(self.random_vector(i, n));
        }
        out
    }

    /// Sample `i` depends only on the seed and `i`, so growing the sample
    /// count only appends vectors.
    fn random_vector(&self, i: usize, n: usize) -> CoefVec {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64);
        let size = rng.random_range(1..=self.max_support.min(self.window));
        let mut support: Vec<usize> = Vec::with_capacity(size);
        while support.len() < size {
            let k = rng.random_range(1..=self.window);
            if !support.contains(&k) {
                support.push(k);
            }
        }
        let on_grid = i % 2 == 0 && self.grid.iter().any(|g| *g != 0.0);
        let mut v = vec![0.0; n];
        for &k in &support {
            let mut c = 0.0;
            while c == 0.0 {
                c = if on_grid { self.grid[rng.random_range(0..self.grid.len())] } else { rng.random_range(-1.0..=1.0) };
            }
            v[k - 1] = c;
        }
        let m = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        v.iter_mut().for_each(|c| *c /= m);
        CoefVec::from(v)
    }

    /// Test vectors for instances that need σ: witnesses first, then an
    /// evenly strided selection of the rest.
    pub fn sigma_vectors(&self, model: &NormModel) -> Vec<CoefVec> {
        let all = self.vectors(model);
        let nw = witnesses(model.spec(), self.window, model.window()).len();
        let want = self.sigma_instances.max(1);
        let mut out: Vec<CoefVec> = all[..nw.min(all.len())].iter().take(want).cloned().collect();
        let rest = &all[nw.min(all.len())..];
        let left = want.saturating_sub(out.len());
        if left > 0 && !rest.is_empty() {
            let stride = rest.len().div_ceil(left).max(1);
            out.extend(rest.iter().step_by(stride).take(left).cloned());
        }
        out
    }
}

/// Calls `f` with each increasing `k`-tuple from `1..=n`.
pub(crate) fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if k > n {
        return;
    }
    let mut c: Vec<usize> = (1..=k).collect();
    loop {
        f(&c);
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i + 1) else { break };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Extremal vectors the constructions are known for.
pub(crate) fn witnesses(spec: &SpaceSpec, window: usize, n: usize) -> Vec<CoefVec> {
    let mut out = Vec::new();
    let mut push = |pairs: &[(usize, f64)]| {
        if pairs.iter().all(|(k, _)| *k >= 1 && *k <= window) && !pairs.is_empty() {
            let mut v = vec![0.0; n];
            for &(k, c) in pairs {
                v[k - 1] = c;
            }
            out.push(CoefVec::from(v));
        }
    };
    match spec {
        SpaceSpec::Ebasis => {
            for big_n in 1..=window / 2 {
                // z = Σ 2E_{2n} - E_{2n-1}, and Σ E_i over the same support
                let z: Vec<(usize, f64)> = (1..=big_n).flat_map(|k| [(2 * k - 1, -1.0), (2 * k, 2.0)]).collect();
                push(&z);
                let ones: Vec<(usize, f64)> = (1..=2 * big_n).map(|k| (k, 1.0)).collect();
                push(&ones);
            }
        }
        SpaceSpec::Schreier => {
            for big_n in 1..=6usize {
                let far: Vec<(usize, f64)> = (big_n * big_n + 1..=big_n * big_n + big_n).map(|k| (k, 1.0)).collect();
                push(&far);
                let near: Vec<(usize, f64)> = (1..=big_n).map(|k| (k, 1.0)).collect();
                push(&near);
            }
        }
        SpaceSpec::RosenthalWoo { .. } | SpaceSpec::RwSumming { .. } => {
            for m in 1..=window / 2 {
                let head: Vec<(usize, f64)> = (1..=m).map(|k| (k, 1.0)).collect();
                push(&head);
                let tail: Vec<(usize, f64)> = (window - m + 1..=window).map(|k| (k, 1.0)).collect();
                push(&tail);
            }
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        let mut n = 0;
        combinations(6, 3, &mut |_| n += 1);
        assert_eq!(n, 20);
        let mut seen = Vec::new();
        combinations(3, 2, &mut |c| seen.push(c.to_vec()));
        assert_eq!(seen, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn family_is_deterministic_and_prefix_stable() {
        let model = NormModel::new(SpaceSpec::lp(2.0), 8).unwrap();
        let small = SearchFamily { window: 8, random_samples: 10, ..Default::default() };
        let big = SearchFamily { random_samples: 30, ..small.clone() };
        let a = small.vectors(&model);
        let b = big.vectors(&model);
        assert_eq!(a, small.vectors(&model));
        assert_eq!(&b[..a.len()], &a[..]);
        assert!(a.iter().all(|x| x.max_abs() == 1.0));
    }

    #[test]
    fn grid_patterns_are_normalized_with_positive_lead() {
        let model = NormModel::new(SpaceSpec::lp(1.0), 4).unwrap();
        let fam = SearchFamily { window: 4, random_samples: 0, set_size_cap: 1, ..Default::default() };
        let v = fam.vectors(&model);
        // 4 singletons x 2 signs, then 6 pairs x 10 patterns, then 2 triples x 76 patterns
        assert_eq!(v.len(), 8 + 60 + 152);
        for x in &v[8..] {
            let s = x.support();
            assert!(x.get(s.as_slice()[0]) > 0.0);
            assert_eq!(x.max_abs(), 1.0);
        }
    }

    #[test]
    fn ebasis_witnesses() {
        let w = witnesses(&SpaceSpec::Ebasis, 6, 6);
        assert_eq!(w.len(), 6);
        assert_eq!(w[0].coords(), &[-1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
