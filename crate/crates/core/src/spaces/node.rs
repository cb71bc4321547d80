//! Compiled norm trees. Every node sees a contiguous slice of coordinates.

use crate::error::{invalid, Error, Result};
use crate::spaces::spec::SpaceSpec;

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub start: usize,
    pub len: usize,
    pub node: Node,
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Lp { p: f64 },
    WeightedLp { p: f64, w: Vec<f64> },
    DsumInf(Vec<Block>),
    DsumL1(Vec<Block>),
    MaxOf(Vec<Node>),
    Schreier,
    James { q: f64 },
    F1q { q: f64, levels: Vec<u32> },
    RosenthalWoo { q: f64, p: f64, w: Vec<f64> },
    RwSumming { q: f64, w: Vec<f64> },
    Ebasis,
}

/// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
pub(crate) fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `f64::max` for a running maximum that is never NaN; compiles to a plain
/// compare where the std version does not.
#[inline]
fn fmax(m: f64, v: f64) -> f64 {
    if v > m {
        v
    } else {
        m
    }
}

pub(crate) fn lp_norm<I: Iterator<Item = f64>>(a: I, p: f64) -> f64 {
    if p.is_infinite() {
        a.fold(0.0, |m, v| fmax(m, v.abs()))
    } else if p == 1.0 {
        a.map(f64::abs).sum()
    } else if p == 2.0 {
        a.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        a.map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn weighted_lp(a: &[f64], p: f64, w: &[f64]) -> f64 {
    if p.is_infinite() {
        return lp_norm(a.iter().copied(), p);
    }
    if p == 1.0 {
        return a.iter().zip(w).map(|(v, wn)| v.abs() * wn).sum();
    }
    a.iter().zip(w).map(|(v, wn)| v.abs().powf(p) * wn).sum::<f64>().powf(1.0 / p)
}

fn isqrt(m: usize) -> usize {
    let mut r = (m as f64).sqrt() as usize;
    while r * r > m {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= m {
        r += 1;
    }
    r
}

/// Admissible sets have `|A| <= sqrt(min A)`. For a fixed minimum `m` the
/// best set adds the `floor(sqrt(m)) - 1` largest moduli to the right of `m`.
fn schreier(a: &[f64]) -> f64 {
    let mut best = 0.0f64;
    // moduli strictly right of the current index, kept in descending order
    let mut tail: Vec<f64> = Vec::new();
    for m in (1..=a.len()).rev() {
        let am = a[m - 1].abs();
        if am != 0.0 {
            let extra = isqrt(m) - 1;
            let s = tail.iter().take(extra).fold(am, |s, v| s + v);
            best = best.max(s);
        }
        let pos = tail.partition_point(|v| *v >= am);
        tail.insert(pos, am);
    }
    best
}

/// James norm by dynamic programming over the right end of the last block.
fn james(a: &[f64], q: f64) -> f64 {
    let n = a.len();
    if q.is_infinite() {
        let mut best = 0.0f64;
        for i in 0..n {
            let mut s = 0.0;
            for v in &a[i..] {
                s += v;
                best = best.max(f64::abs(s));
            }
        }
        return best;
    }
    let mut f = vec![0.0f64; n + 1];
    for i in 1..=n {
        let mut best = f64::NEG_INFINITY;
        let mut s = 0.0;
        for j in (0..i).rev() {
            s += a[j];
            let t = if q == 1.0 {
                s.abs()
            } else if q == 2.0 {
                s * s
            } else {
                s.abs().powf(q)
            };
            best = best.max(f[j] + t);
        }
        f[i] = best;
    }
    match q {
        q if q == 1.0 => f[n],
        q if q == 2.0 => f[n].sqrt(),
        q => f[n].powf(1.0 / q),
    }
}

/// Integrates `g(t) = (Σ_I |a_I|^q |I|^{-q} χ_I(t))^{1/q}` over the finest
/// grid; intervals of level `k` have length `2^{-k}`.
fn f1q(a: &[f64], q: f64, levels: &[u32]) -> f64 {
    let top = *levels.last().expect("validated nonempty");
    let cells = 1usize << top;
    let mut offsets = Vec::with_capacity(levels.len());
    let mut off = 0usize;
    for &k in levels {
        offsets.push(off);
        off += 1usize << k;
    }
    let mut total = 0.0;
    for c in 0..cells {
        let g = if q.is_infinite() {
            levels.iter().zip(&offsets).fold(0.0f64, |m, (&k, &o)| {
                let v = a[o + (c >> (top - k))].abs();
                m.max(v * (1u64 << k) as f64)
            })
        } else {
            let s: f64 = levels
                .iter()
                .zip(&offsets)
                .map(|(&k, &o)| {
                    let v = a[o + (c >> (top - k))].abs();
                    (v * (1u64 << k) as f64).powf(q)
                })
                .sum();
            if q == 1.0 {
                s
            } else {
                s.powf(1.0 / q)
            }
        };
        total += g;
    }
    total / cells as f64
}

fn rosenthal_woo(a: &[f64], q: f64, p: f64, w: &[f64]) -> f64 {
    lp_norm(a.iter().copied(), q).max(weighted_lp(a, p, w))
}

fn rw_summing(a: &[f64], q: f64, w: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    let mut s = 0.0;
    for (v, wn) in a.iter().zip(w).rev() {
        s += v * wn;
        sup = sup.max(s.abs());
    }
    lp_norm(a.iter().copied(), q).max(sup)
}

/// `x_n = ½a_{2n-1} + ¼a_{2n}`, `y_n = -½a_{2n-1} + ¾a_{2n}`; norm is
/// `‖x‖_1 + ‖y‖_∞`.
fn ebasis(a: &[f64]) -> f64 {
    let mut l1 = 0.0;
    let mut sup = 0.0f64;
    let mut pair = |odd: f64, even: f64| {
        l1 += (0.5 * odd + 0.25 * even).abs();
        sup = fmax(sup, (-0.5 * odd + 0.75 * even).abs());
    };
    let pairs = a.chunks_exact(2);
    let last = pairs.remainder().first().copied();
    for p in pairs {
        pair(p[0], p[1]);
    }
    if let Some(odd) = last {
        pair(odd, 0.0);
    }
    l1 + sup
}

impl Node {
    pub fn compile(spec: &SpaceSpec, len: usize) -> Result<Node> {
        if let Some(d) = spec.intrinsic_dim() {
            if d != len {
                return invalid(format!("constructor has dimension {d} but was assigned {len} coordinates"));
            }
        }
        Ok(match spec {
            SpaceSpec::Lp { p } => Node::Lp { p: p.0 },
            SpaceSpec::WeightedLp { p, weight } => Node::WeightedLp { p: p.0, w: weight.values(len) },
            SpaceSpec::DsumInf { parts, sizes } => Node::DsumInf(blocks(parts, sizes.as_deref(), len)?),
            SpaceSpec::DsumL1 { parts, sizes } => Node::DsumL1(blocks(parts, sizes.as_deref(), len)?),
            SpaceSpec::MaxOf { parts } => {
                Node::MaxOf(parts.iter().map(|p| Node::compile(p, len)).collect::<Result<_>>()?)
            }
            SpaceSpec::Schreier => Node::Schreier,
            SpaceSpec::James { q } => Node::James { q: q.0 },
            SpaceSpec::F1q { q, levels } => Node::F1q { q: q.0, levels: levels.clone() },
            SpaceSpec::RosenthalWoo { q, p, weight } => Node::RosenthalWoo { q: q.0, p: p.0, w: weight.values(len) },
            SpaceSpec::RwSumming { q, weight } => Node::RwSumming { q: q.0, w: weight.values(len) },
            SpaceSpec::Ebasis => Node::Ebasis,
        })
    }

    /// Norm of a slice covering exactly this node's coordinates.
    pub fn eval(&self, a: &[f64]) -> f64 {
        match self {
            Node::Lp { p } => lp_norm(a.iter().copied(), *p),
            Node::WeightedLp { p, w } => weighted_lp(a, *p, w),
            Node::DsumInf(bs) => bs.iter().fold(0.0, |m, b| m.max(b.node.eval(&a[b.start..b.start + b.len]))),
            Node::DsumL1(bs) => bs.iter().map(|b| b.node.eval(&a[b.start..b.start + b.len])).sum(),
            Node::MaxOf(parts) => parts.iter().fold(0.0, |m, n| m.max(n.eval(a))),
            Node::Schreier => schreier(a),
            Node::James { q } => james(a, *q),
            Node::F1q { q, levels } => f1q(a, *q, levels),
            Node::RosenthalWoo { q, p, w } => rosenthal_woo(a, *q, *p, w),
            Node::RwSumming { q, w } => rw_summing(a, *q, w),
            Node::Ebasis => ebasis(a),
        }
    }

    /// Closed-form dual norm of a functional given by its coordinates.
    pub fn dual(&self, f: &[f64]) -> Result<f64> {
        match self {
            Node::Lp { p } => Ok(lp_norm(f.iter().copied(), conjugate(*p))),
            Node::WeightedLp { p, w } => Ok(if p.is_infinite() {
                lp_norm(f.iter().copied(), 1.0)
            } else if *p == 1.0 {
                f.iter().zip(w).fold(0.0, |m, (v, wn)| m.max(v.abs() / wn))
            } else {
                let pc = conjugate(*p);
                f.iter().zip(w).map(|(v, wn)| v.abs().powf(pc) * wn.powf(1.0 - pc)).sum::<f64>().powf(1.0 / pc)
            }),
            Node::DsumInf(bs) => {
                let mut s = 0.0;
                for b in bs {
                    s += b.node.dual(&f[b.start..b.start + b.len])?;
                }
                Ok(s)
            }
            Node::DsumL1(bs) => {
                let mut m = 0.0f64;
                for b in bs {
                    m = m.max(b.node.dual(&f[b.start..b.start + b.len])?);
                }
                Ok(m)
            }
            other => Err(Error::Unsupported(format!("no closed-form dual norm for {}", other.kind()))),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Node::Lp { .. } => "lp",
            Node::WeightedLp { .. } => "weighted_lp",
            Node::DsumInf(_) => "dsum_inf",
            Node::DsumL1(_) => "dsum_l1",
            Node::MaxOf(_) => "max_of",
            Node::Schreier => "schreier",
            Node::James { .. } => "james",
            Node::F1q { .. } => "f1q",
            Node::RosenthalWoo { .. } => "rosenthal_woo",
            Node::RwSumming { .. } => "rw_summing",
            Node::Ebasis => "ebasis",
        }
    }
}

/// Resolves part ranges. Explicit `sizes` win; otherwise intrinsic
/// dimensions are used and at most one part may absorb the remainder.
fn blocks(parts: &[SpaceSpec], sizes: Option<&[usize]>, len: usize) -> Result<Vec<Block>> {
    let resolved: Vec<usize> = match sizes {
        Some(s) => {
            if s.iter().sum::<usize>() != len {
                return invalid(format!("direct sum sizes add up to {} but the window is {len}", s.iter().sum::<usize>()));
            }
            s.to_vec()
        }
        None => {
            let dims: Vec<Option<usize>> = parts.iter().map(|p| p.intrinsic_dim()).collect();
            let fixed: usize = dims.iter().flatten().sum();
            let free = dims.iter().filter(|d| d.is_none()).count();
            match free {
                0 if fixed == len => dims.into_iter().map(|d| d.unwrap()).collect(),
                0 => return invalid(format!("direct sum covers {fixed} coordinates but the window is {len}")),
                1 if fixed < len => dims.into_iter().map(|d| d.unwrap_or(len - fixed)).collect(),
                1 => return invalid("direct sum leaves no coordinates for its free part"),
                _ => return invalid("direct sum needs `sizes` when several parts lack a fixed dimension"),
            }
        }
    };
    let mut out = Vec::with_capacity(parts.len());
    let mut start = 0;
    for (spec, n) in parts.iter().zip(resolved) {
        out.push(Block { start, len: n, node: Node::compile(spec, n)? });
        start += n;
    }
    Ok(out)
}
