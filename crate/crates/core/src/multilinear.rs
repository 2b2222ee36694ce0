//! Multilinear extension, its partial derivatives and total curvature.
//!
//! Edge sets are `u64` bitmasks over a ground set of at most 64 edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RngStream;

pub type EdgeMask = u64;

pub const MAX_EDGES: usize = 64;

/// Default cap on the number of fractional coordinates enumerated exactly.
pub const ENUMERATION_LIMIT: usize = 20;

/// A set function c: 2^E -> R over edges `0..ground_size()`.
pub trait SetFunction: Sync {
    fn ground_size(&self) -> usize;
    fn value(&self, mask: EdgeMask) -> Result<f64>;
}

/// Wraps a closure as a set function.
pub struct FnSet<F> {
    pub size: usize,
    pub f: F,
}

impl<F: Fn(EdgeMask) -> f64 + Sync> SetFunction for FnSet<F> {
    fn ground_size(&self) -> usize {
        self.size
    }

    fn value(&self, mask: EdgeMask) -> Result<f64> {
        Ok((self.f)(mask))
    }
}

/// Per-edge inclusion probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalState {
    pub x: Vec<f64>,
}

impl FractionalState {
    pub fn zeros(n: usize) -> Self {
        Self { x: vec![0.0; n] }
    }

    /// Edges fixed at 1 and the fractional support, in increasing edge order.
    fn split(&self) -> (EdgeMask, Vec<usize>) {
        let mut ones = 0u64;
        let mut support = Vec::new();
        for (e, &v) in self.x.iter().enumerate() {
            if v >= 1.0 {
                ones |= 1 << e;
            } else if v > 0.0 {
                support.push(e);
            }
        }
        (ones, support)
    }
}

/// Probabilities of every subset of `support` (bit k of the index is support[k]).
fn subset_probs(x: &[f64], support: &[usize]) -> Vec<f64> {
    let mut probs = Vec::with_capacity(1 << support.len());
    probs.push(1.0);
    for &e in support {
        let p = x[e];
        let n = probs.len();
        for k in 0..n {
            let base = probs[k];
            probs[k] = base * (1.0 - p);
            probs.push(base * p);
        }
    }
    probs
}

fn expand(local: usize, support: &[usize]) -> EdgeMask {
    let mut m = 0u64;
    for (k, &e) in support.iter().enumerate() {
        if local >> k & 1 == 1 {
            m |= 1 << e;
        }
    }
    m
}

fn check_ground(c: &dyn SetFunction, x: &FractionalState) -> Result<()> {
    if c.ground_size() > MAX_EDGES || x.x.len() > MAX_EDGES {
        return Err(Error::Config(format!(
            "ground sets above {MAX_EDGES} edges are not supported"
        )));
    }
    Ok(())
}

/// Exact C(x) by enumerating the fractional support.
pub fn eval_exact(c: &dyn SetFunction, x: &FractionalState, limit: usize) -> Result<f64> {
    check_ground(c, x)?;
    let (ones, support) = x.split();
    if support.len() > limit {
        return Err(Error::EnumerationLimit {
            support: support.len(),
            limit,
        });
    }
    let probs = subset_probs(&x.x, &support);
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p * c.value(ones | expand(k, &support))?;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    fn from_samples(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let stderr = if n > 1 {
            ((sum_sq - nf * mean * mean).max(0.0) / (nf - 1.0) / nf).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr }
    }
}

fn draw_mask(x: &FractionalState, rng: &mut RngStream) -> EdgeMask {
    let mut m = 0u64;
    for (e, &p) in x.x.iter().enumerate() {
        if p >= 1.0 || (p > 0.0 && rng.uniform() < p) {
            m |= 1 << e;
        }
    }
    m
}

/// Monte-Carlo estimate of C(x) with independent Bernoulli inclusion per edge.
pub fn eval_mc(
    c: &dyn SetFunction,
    x: &FractionalState,
    samples: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    check_ground(c, x)?;
    if samples == 0 {
        return Err(Error::Config("eval_mc needs at least one sample".into()));
    }
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let v = c.value(draw_mask(x, rng))?;
        s += v;
        s2 += v * v;
    }
    Ok(McEstimate::from_samples(s, s2, samples))
}

/// Exact dC/dx_e = E[c(M + e) - c(M)] with M drawn from x restricted to the other edges.
pub fn partial(c: &dyn SetFunction, x: &FractionalState, e: usize, limit: usize) -> Result<f64> {
    check_ground(c, x)?;
    let mut rest = x.clone();
    rest.x[e] = 0.0;
    let (ones, support) = rest.split();
    if support.len() > limit {
        return Err(Error::EnumerationLimit {
            support: support.len(),
            limit,
        });
    }
    let probs = subset_probs(&rest.x, &support);
    let bit = 1u64 << e;
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            let m = ones | expand(k, &support);
            acc += p * (c.value(m | bit)? - c.value(m)?);
        }
    }
    Ok(acc)
}

/// Sampled dC/dx_e using one draw of M per sample for both terms.
pub fn partial_mc(
    c: &dyn SetFunction,
    x: &FractionalState,
    e: usize,
    samples: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    check_ground(c, x)?;
    let mut rest = x.clone();
    rest.x[e] = 0.0;
    let bit = 1u64 << e;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples.max(1) {
        let m = draw_mask(&rest, rng);
        let d = c.value(m | bit)? - c.value(m)?;
        s += d;
        s2 += d * d;
    }
    Ok(McEstimate::from_samples(s, s2, samples.max(1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub kappa: f64,
    /// Minimizing set M, as ground-set edge indices.
    pub witness_set: Vec<usize>,
    /// Minimizing edge e in M.
    pub witness_edge: usize,
    /// [f(M) - f(M - e)] / f({e}) at the witness.
    pub ratio: f64,
    /// Edges with f({e}) = 0, left out of the minimum.
    pub excluded: Vec<usize>,
}

/// Total curvature over the ground set `edges`.
pub fn curvature(c: &dyn SetFunction, edges: &[usize], limit: usize) -> Result<CurvatureReport> {
    let m = edges.len();
    if m > limit {
        return Err(Error::EnumerationLimit { support: m, limit });
    }
    let n = 1usize << m;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        values.push(c.value(expand(k, edges))?);
    }
    let singles: Vec<f64> = (0..m).map(|k| values[1 << k]).collect();
    let excluded: Vec<usize> = (0..m)
        .filter(|&k| singles[k] <= 0.0)
        .map(|k| edges[k])
        .collect();
    if excluded.len() == m {
        return Err(Error::UndefinedCurvature);
    }
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for set in 1..n {
        for k in 0..m {
            if set >> k & 1 == 0 || singles[k] <= 0.0 {
                continue;
            }
            let ratio = (values[set] - values[set & !(1 << k)]) / singles[k];
            if ratio < best.0 {
                best = (ratio, set, k);
            }
        }
    }
    let (ratio, set, k) = best;
    Ok(CurvatureReport {
        kappa: 1.0 - ratio,
        witness_set: (0..m)
            .filter(|&b| set >> b & 1 == 1)
            .map(|b| edges[b])
            .collect(),
        witness_edge: edges[k],
        ratio,
        excluded,
    })
}

/// The multilinear extension restricted to a block of candidate edges with every
/// other coordinate frozen: h(T) = E[c(M ∪ T)] for each subset T of the block.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub candidates: Vec<usize>,
    h: Vec<f64>,
    /// Standard error of each h(T) when sampled.
    pub stderr: f64,
}

impl Restriction {
    /// Exact restriction; `x` must be zero on the candidates.
    pub fn exact(
        c: &dyn SetFunction,
        x: &FractionalState,
        candidates: &[usize],
        limit: usize,
    ) -> Result<Self> {
        check_ground(c, x)?;
        let (ones, support) = x.split();
        if support.len() > limit {
            return Err(Error::EnumerationLimit {
                support: support.len(),
                limit,
            });
        }
        let probs = subset_probs(&x.x, &support);
        let nt = 1usize << candidates.len();
        let mut h = vec![0.0; nt];
        for (k, p) in probs.iter().enumerate() {
            if *p <= 0.0 {
                continue;
            }
            let base = ones | expand(k, &support);
            for (t, slot) in h.iter_mut().enumerate() {
                *slot += p * c.value(base | expand(t, candidates))?;
            }
        }
        Ok(Self {
            candidates: candidates.to_vec(),
            h,
            stderr: 0.0,
        })
    }

    /// Sampled restriction; every h(T) uses the same draws of M.
    pub fn sampled(
        c: &dyn SetFunction,
        x: &FractionalState,
        candidates: &[usize],
        samples: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        check_ground(c, x)?;
        let nt = 1usize << candidates.len();
        let mut h = vec![0.0; nt];
        let mut h2 = vec![0.0; nt];
        let samples = samples.max(1);
        for _ in 0..samples {
            let base = draw_mask(x, rng);
            for t in 0..nt {
                let v = c.value(base | expand(t, candidates))?;
                h[t] += v;
                h2[t] += v * v;
            }
        }
        let mut worst = 0.0f64;
        for t in 0..nt {
            let est = McEstimate::from_samples(h[t], h2[t], samples);
            h[t] = est.mean;
            worst = worst.max(est.stderr);
        }
        Ok(Self {
            candidates: candidates.to_vec(),
            h,
            stderr: worst,
        })
    }

    /// C at block allocation `y` (aligned with the candidates).
    pub fn value(&self, y: &[f64]) -> f64 {
        let idx: Vec<usize> = (0..y.len()).collect();
        let probs = subset_probs(y, &idx);
        probs.iter().zip(&self.h).map(|(p, h)| p * h).sum()
    }

    /// dC/dy_k at block allocation `y`.
    pub fn partial(&self, y: &[f64], k: usize) -> f64 {
        let mut rest = y.to_vec();
        rest[k] = 0.0;
        let idx: Vec<usize> = (0..y.len()).collect();
        let probs = subset_probs(&rest, &idx);
        let bit = 1usize << k;
        probs
            .iter()
            .enumerate()
            .filter(|(t, _)| t & bit == 0)
            .map(|(t, p)| p * (self.h[t | bit] - self.h[t]))
            .sum()
    }

    /// Largest h(T), an upper bound on every value reachable from this block.
    pub fn max_value(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_pair() -> FnSet<impl Fn(EdgeMask) -> f64 + Sync> {
        // one offline vertex, edges of weight 3 and 5, heaviest counts
        FnSet {
            size: 2,
            f: |m: EdgeMask| match m {
                0 => 0.0,
                1 => 3.0,
                _ => 5.0,
            },
        }
    }

    fn budget_pair() -> FnSet<impl Fn(EdgeMask) -> f64 + Sync> {
        FnSet {
            size: 2,
            f: |m: EdgeMask| (0.6 * m.count_ones() as f64).min(1.0),
        }
    }

    #[test]
    fn single_edge_linear() {
        let c = FnSet {
            size: 1,
            f: |m: EdgeMask| 0.7 * m as f64,
        };
        let x = FractionalState { x: vec![0.4] };
        assert!((eval_exact(&c, &x, 20).unwrap() - 0.28).abs() < 1e-15);
        assert_eq!(eval_exact(&c, &FractionalState::zeros(1), 20).unwrap(), 0.0);
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(
                partial(&c, &FractionalState { x: vec![t] }, 0, 20).unwrap(),
                0.7
            );
        }
    }

    #[test]
    fn heaviest_edge_fixture() {
        let x = FractionalState { x: vec![0.5, 0.5] };
        assert!((eval_exact(&fd_pair(), &x, 20).unwrap() - 3.25).abs() < 1e-15);
        assert!((partial(&fd_pair(), &x, 1, 20).unwrap() - 3.5).abs() < 1e-15);
    }

    #[test]
    fn budget_partial() {
        let x = FractionalState { x: vec![0.2, 1.0] };
        assert!((partial(&budget_pair(), &x, 0, 20).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn limit_enforced() {
        let c = FnSet {
            size: 3,
            f: |m: EdgeMask| m.count_ones() as f64,
        };
        let x = FractionalState { x: vec![0.5; 3] };
        assert!(matches!(
            eval_exact(&c, &x, 2),
            Err(Error::EnumerationLimit {
                support: 3,
                limit: 2
            })
        ));
    }

    #[test]
    fn mc_matches_exact() {
        let x = FractionalState { x: vec![0.5, 0.5] };
        let mut rng = RngStream::new(2);
        let est = eval_mc(&fd_pair(), &x, 1_000_000, &mut rng).unwrap();
        assert!((est.mean - 3.25).abs() <= 3.0 * est.stderr, "{est:?}");
        let zero = eval_mc(&fd_pair(), &FractionalState::zeros(2), 100, &mut rng).unwrap();
        assert_eq!((zero.mean, zero.stderr), (0.0, 0.0));
        let c = FnSet {
            size: 1,
            f: |m: EdgeMask| m as f64,
        };
        let half = eval_mc(&c, &FractionalState { x: vec![0.5] }, 100_000, &mut rng).unwrap();
        assert!((half.mean - 0.5).abs() <= 3.0 * half.stderr);
    }

    #[test]
    fn curvature_fixtures() {
        let modular = FnSet {
            size: 3,
            f: |m: EdgeMask| {
                (0..3)
                    .filter(|k| m >> k & 1 == 1)
                    .map(|k| 0.1 * (k + 1) as f64)
                    .sum()
            },
        };
        let r = curvature(&modular, &[0, 1, 2], 20).unwrap();
        assert!(r.kappa.abs() < 1e-12);

        let unit = FnSet {
            size: 2,
            f: |m: EdgeMask| (m.count_ones() as f64).min(1.0),
        };
        let r = curvature(&unit, &[0, 1], 20).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.witness_set.len(), 2);

        let r = curvature(&budget_pair(), &[0, 1], 20).unwrap();
        assert!((r.kappa - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.kappa, 1.0 - r.ratio);
    }

    #[test]
    fn curvature_excludes_null_edges() {
        let c = FnSet {
            size: 2,
            f: |m: EdgeMask| (m & 1) as f64,
        };
        let r = curvature(&c, &[0, 1], 20).unwrap();
        assert_eq!(r.excluded, vec![1]);
        let z = FnSet {
            size: 2,
            f: |_| 0.0,
        };
        assert!(matches!(
            curvature(&z, &[0, 1], 20),
            Err(Error::UndefinedCurvature)
        ));
    }

    #[test]
    fn restriction_agrees_with_direct() {
        let c = FnSet {
            size: 4,
            f: |m: EdgeMask| {
                let a = [0.3, 0.5, 0.2, 0.4];
                let s: f64 = (0..4).filter(|k| m >> k & 1 == 1).map(|k| a[k]).sum();
                s.min(0.8)
            },
        };
        let mut x = FractionalState {
            x: vec![0.3, 0.6, 0.0, 0.0],
        };
        let r = Restriction::exact(&c, &x, &[2, 3], 20).unwrap();
        let y = [0.25, 0.5];
        x.x[2] = y[0];
        x.x[3] = y[1];
        assert!((r.value(&y) - eval_exact(&c, &x, 20).unwrap()).abs() < 1e-14);
        assert!((r.partial(&y, 1) - partial(&c, &x, 3, 20).unwrap()).abs() < 1e-14);
    }
}
