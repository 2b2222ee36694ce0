//! Concave per-vertex reward shapes for the separable concave model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named concave reward shape. Every shape satisfies P(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcaveSpec {
    /// P(u) = slope * u.
    Linear {
        #[serde(default = "one")]
        slope: f64,
    },
    /// P(u) = scale * (1 - e^(-u)).
    ExpSaturating {
        #[serde(default = "one")]
        scale: f64,
    },
    /// Softplus smoothing of min{u, cap} with width eps.
    SoftplusBudget {
        eps: f64,
        #[serde(default = "one")]
        cap: f64,
    },
    /// Natural cubic spline through sampled points, starting at (0, 0).
    Table { u: Vec<f64>, p: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

/// Evaluator for P, P' and P'' built from a [`ConcaveSpec`].
#[derive(Debug, Clone)]
pub struct ConcaveFn {
    spec: ConcaveSpec,
    spline: Option<Spline>,
}

impl ConcaveFn {
    pub fn new(spec: ConcaveSpec) -> Result<Self> {
        let spline = match &spec {
            ConcaveSpec::Linear { slope } if !(*slope >= 0.0) => {
                return Err(Error::Config(format!("linear slope {slope} is negative")))
            }
            ConcaveSpec::ExpSaturating { scale } if !(*scale > 0.0) => {
                return Err(Error::Config(format!("exp scale {scale} must be positive")))
            }
            ConcaveSpec::SoftplusBudget { eps, cap } if !(*eps > 0.0 && *cap > 0.0) => {
                return Err(Error::Config(format!(
                    "softplus needs eps > 0 and cap > 0, got eps={eps} cap={cap}"
                )))
            }
            ConcaveSpec::Table { u, p } => Some(Spline::fit(u, p)?),
            _ => None,
        };
        Ok(Self { spec, spline })
    }

    pub fn spec(&self) -> &ConcaveSpec {
        &self.spec
    }

    /// True when P'' vanishes identically.
    pub fn is_linear(&self) -> bool {
        matches!(self.spec, ConcaveSpec::Linear { .. })
    }

    pub fn p(&self, u: f64) -> f64 {
        match &self.spec {
            ConcaveSpec::Linear { slope } => slope * u,
            ConcaveSpec::ExpSaturating { scale } => -scale * (-u).exp_m1(),
            ConcaveSpec::SoftplusBudget { eps, cap } => {
                u - eps * softplus((u - cap) / eps) + eps * softplus(-cap / eps)
            }
            ConcaveSpec::Table { .. } => self.spline.as_ref().unwrap().eval(u).0,
        }
    }

    pub fn dp(&self, u: f64) -> f64 {
        match &self.spec {
            ConcaveSpec::Linear { slope } => *slope,
            ConcaveSpec::ExpSaturating { scale } => scale * (-u).exp(),
            ConcaveSpec::SoftplusBudget { eps, cap } => logistic(-(u - cap) / eps),
            ConcaveSpec::Table { .. } => self.spline.as_ref().unwrap().eval(u).1,
        }
    }

    pub fn d2p(&self, u: f64) -> f64 {
        match &self.spec {
            ConcaveSpec::Linear { .. } => 0.0,
            ConcaveSpec::ExpSaturating { scale } => -scale * (-u).exp(),
            ConcaveSpec::SoftplusBudget { eps, cap } => {
                let s = (-((u - cap) / eps).abs()).exp();
                -s / ((1.0 + s) * (1.0 + s)) / eps
            }
            ConcaveSpec::Table { .. } => self.spline.as_ref().unwrap().eval(u).2,
        }
    }

    /// Y(v) = P(v) - v P'(v).
    pub fn y(&self, v: f64) -> f64 {
        self.p(v) - v * self.dp(v)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
struct Spline {
    u: Vec<f64>,
    p: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn fit(u: &[f64], p: &[f64]) -> Result<Self> {
        if u.len() != p.len() || u.len() < 3 {
            return Err(Error::Config(
                "concave table needs >= 3 matching (u, p) samples".into(),
            ));
        }
        if u[0] != 0.0 || p[0] != 0.0 {
            return Err(Error::Config("concave table must start at (0, 0)".into()));
        }
        if u.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("concave table u values must increase".into()));
        }
        let n = u.len();
        // tridiagonal system for the natural spline's second derivatives
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let h0 = u[k] - u[k - 1];
            let h1 = u[k + 1] - u[k];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let rhs = (p[k + 1] - p[k]) / h1 - (p[k] - p[k - 1]) / h0;
            let denom = b - a * c[k - 1];
            c[k] = cc / denom;
            d[k] = (rhs - a * d[k - 1]) / denom;
        }
        for k in (1..n - 1).rev() {
            m[k] = d[k] - c[k] * m[k + 1];
        }
        let s = Self {
            u: u.to_vec(),
            p: p.to_vec(),
            m,
        };
        for k in 0..n - 1 {
            for t in [0.0, 0.5] {
                let x = u[k] + t * (u[k + 1] - u[k]);
                let (_, d1, d2) = s.eval(x);
                if d1 < -1e-12 || d2 > 1e-12 {
                    return Err(Error::Config(format!(
                        "concave table is not monotone concave near u = {x}"
                    )));
                }
            }
        }
        Ok(s)
    }

    /// (P, P', P'') at `x`; linear extension past the last sample.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.u.len();
        let last = n - 1;
        if x >= self.u[last] {
            let (p, d1, _) = self.eval_segment(last - 1, self.u[last]);
            return (p + d1 * (x - self.u[last]), d1, 0.0);
        }
        let k = match self.u.partition_point(|&v| v <= x) {
            0 => 0,
            k => k - 1,
        };
        self.eval_segment(k, x)
    }

    fn eval_segment(&self, k: usize, x: f64) -> (f64, f64, f64) {
        let (u0, u1) = (self.u[k], self.u[k + 1]);
        let h = u1 - u0;
        let (m0, m1) = (self.m[k], self.m[k + 1]);
        let a = (u1 - x) / h;
        let b = (x - u0) / h;
        let p = a * self.p[k]
            + b * self.p[k + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (self.p[k + 1] - self.p[k]) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0
            + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        (p, d1, d2)
    }
}
