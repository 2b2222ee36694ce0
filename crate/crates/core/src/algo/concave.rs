//! Separable concave rewards sum_i P(u_i): the ratio ODE, bisection for r, and
//! the fractional allocation driven by its solution.
//!
//! The ODE (1/r) P'(u) = P'(v) - v P''(v) v'(u) with v(0) = 0 is written as
//! dY(v)/du = P'(u)/r - P'(v) with Y(v) = P(v) - v P'(v), and integrated along
//! the arc length s of the curve (u(s), v(s)):
//!
//! du/ds = Y'(v) / N,  dv/ds = D / N,  D = P'(u)/r - P'(v),  N = |(Y'(v), D)|.
//!
//! This form is regular at the origin, where v grows like sqrt(u).

use serde::{Deserialize, Serialize};

use super::{argmax_by, LoopConfig, StepRecord, FULL};
use crate::error::{Error, Result};
use crate::model::{CompiledModel, ConcaveFn, Problem};

/// Slack allowed on v' >= 0.
pub const SLOPE_TOL: f64 = 1e-8;

/// Default arc-length step of the integrator.
pub const DEFAULT_DS: f64 = 2.5e-4;

/// Default smallest r accepted by the bisection.
pub const R_FLOOR: f64 = 0.01;

/// A concave shape on a bounded load domain.
#[derive(Debug, Clone)]
pub struct ConcaveP {
    pub f: ConcaveFn,
    pub u_max: f64,
}

impl ConcaveP {
    /// Checks P(0) = 0, P' >= 0 and P'' <= 0 on a grid of [0, u_max]; a vanishing
    /// P'' inside the domain is rejected unless P is linear.
    pub fn new(f: ConcaveFn, u_max: f64) -> Result<Self> {
        if !(u_max > 0.0) {
            return Err(Error::Config(format!(
                "load domain {u_max} must be positive"
            )));
        }
        if f.p(0.0).abs() > 1e-12 {
            return Err(Error::Config("P(0) must be 0".into()));
        }
        let n = 1000;
        for k in 0..=n {
            let u = u_max * k as f64 / n as f64;
            if f.dp(u) < -1e-12 || f.d2p(u) > 1e-12 {
                return Err(Error::Config(format!(
                    "P is not monotone concave at u = {u}"
                )));
            }
            if k > 0 && !f.is_linear() && f.d2p(u) == 0.0 {
                return Err(Error::DegenerateCurvature { u });
            }
        }
        Ok(Self { f, u_max })
    }

    /// Largest slope on the domain, P'(0).
    pub fn max_slope(&self) -> f64 {
        self.f.dp(0.0)
    }

    fn dy(&self, v: f64) -> f64 {
        -v * self.f.d2p(v)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeSolution {
    pub r: f64,
    /// Sampled loads u, nondecreasing.
    pub grid: Vec<f64>,
    /// v(u) at each grid point.
    pub v: Vec<f64>,
    /// Residual of the ODE along the curve; on the capped tail, the violation of P'(v) <= P'(u)/r.
    pub residuals: Vec<f64>,
    /// Load at which v reached its cap, if it did.
    pub capped_at: Option<f64>,
    pub v_cap: f64,
}

impl OdeSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn u_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// v(u) by linear interpolation on the grid.
    pub fn v_at(&self, u: f64) -> Result<f64> {
        if u > self.u_end() + 1e-12 {
            return Err(Error::GridExceeded {
                u,
                end: self.u_end(),
            });
        }
        if u <= 0.0 {
            return Ok(0.0);
        }
        let k = self
            .grid
            .partition_point(|&g| g < u)
            .min(self.grid.len() - 1);
        let (u0, u1) = (self.grid[k - 1], self.grid[k]);
        if u1 <= u0 {
            return Ok(self.v[k]);
        }
        let t = (u - u0) / (u1 - u0);
        Ok(self.v[k - 1] + t * (self.v[k] - self.v[k - 1]))
    }
}

/// Why a given r has no solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasible {
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub reason: String,
}

/// Integrates the ratio ODE at `r` over [0, u_max] with arc-length step `ds`.
pub fn cc_solve_ode(
    p: &ConcaveP,
    r: f64,
    ds: f64,
) -> Result<std::result::Result<OdeSolution, Infeasible>> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Config(format!("r = {r} must lie in (0, 1]")));
    }
    if !(ds > 0.0) {
        return Err(Error::Config("ODE step must be positive".into()));
    }
    let f = &p.f;
    let v_cap = 10.0 * p.u_max;
    let slope = |u: f64, v: f64| f.dp(u) / r - f.dp(v);
    let rhs = |u: f64, v: f64| -> Option<(f64, f64)> {
        let (a, d) = (p.dy(v), slope(u, v));
        let n = a.hypot(d);
        (n > 1e-300).then(|| (a / n, d / n))
    };
    let mut us = vec![0.0];
    let mut vs = vec![0.0];
    let (mut u, mut v) = (0.0f64, 0.0f64);
    let max_steps = ((p.u_max + v_cap) / ds * 1.5) as usize + 10;
    let infeasible = |u: f64, v: f64, reason: &str| Infeasible {
        r,
        u,
        v,
        reason: reason.to_string(),
    };
    while u < p.u_max && v < v_cap {
        if us.len() > max_steps {
            return Ok(Err(infeasible(
                u,
                v,
                "integrator did not reach the end of the domain",
            )));
        }
        let stage = |u: f64, v: f64| rhs(u, v).ok_or(());
        let k = (|| -> std::result::Result<[(f64, f64); 4], ()> {
            let k1 = stage(u, v)?;
            let k2 = stage(u + 0.5 * ds * k1.0, v + 0.5 * ds * k1.1)?;
            let k3 = stage(u + 0.5 * ds * k2.0, v + 0.5 * ds * k2.1)?;
            let k4 = stage(u + ds * k3.0, v + ds * k3.1)?;
            Ok([k1, k2, k3, k4])
        })();
        let Ok([k1, k2, k3, k4]) = k else {
            return Ok(Err(infeasible(u, v, "right-hand side vanished")));
        };
        u += ds / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += ds / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(u.is_finite() && v.is_finite()) {
            return Ok(Err(infeasible(u, v, "right-hand side blew up")));
        }
        if slope(u, v) < -SLOPE_TOL {
            return Ok(Err(infeasible(u, v, "v would have to decrease")));
        }
        us.push(u);
        vs.push(v);
    }
    let curve_len = us.len();
    let mut residuals = curve_residuals(p, r, &us, &vs, ds);
    let mut capped_at = None;
    if u < p.u_max {
        // v has reached its cap; hold it and check the inequality on the rest of the domain
        capped_at = Some(u);
        let n = ((p.u_max - u) / ds).ceil().max(1.0) as usize;
        let u0 = u;
        for k in 1..=n {
            let uk = u0 + (p.u_max - u0) * k as f64 / n as f64;
            let d = slope(uk, v);
            if d < -SLOPE_TOL {
                return Ok(Err(infeasible(uk, v, "P'(v) exceeds P'(u)/r at the cap")));
            }
            us.push(uk);
            vs.push(v);
            residuals.push((-d).max(0.0));
        }
    }
    debug_assert_eq!(residuals.len(), us.len());
    debug_assert!(curve_len <= us.len());
    Ok(Ok(OdeSolution {
        r,
        grid: us,
        v: vs,
        residuals,
        capped_at,
        v_cap,
    }))
}

/// |D u_s - Y'(v) v_s| with derivatives along the curve by fourth-order differences.
fn curve_residuals(p: &ConcaveP, r: f64, us: &[f64], vs: &[f64], ds: f64) -> Vec<f64> {
    let n = us.len();
    if n < 5 {
        return vec![0.0; n];
    }
    let deriv = |z: &[f64], k: usize| -> f64 {
        if k >= 2 && k + 2 < n {
            (z[k - 2] - 8.0 * z[k - 1] + 8.0 * z[k + 1] - z[k + 2]) / (12.0 * ds)
        } else if k < 2 {
            let z = &z[k..k + 5];
            (-25.0 * z[0] + 48.0 * z[1] - 36.0 * z[2] + 16.0 * z[3] - 3.0 * z[4]) / (12.0 * ds)
        } else {
            let z = &z[k - 4..=k];
            (25.0 * z[4] - 48.0 * z[3] + 36.0 * z[2] - 16.0 * z[1] + 3.0 * z[0]) / (12.0 * ds)
        }
    };
    (0..n)
        .map(|k| {
            let (u, v) = (us[k], vs[k]);
            let d = p.f.dp(u) / r - p.f.dp(v);
            (d * deriv(us, k) - p.dy(v) * deriv(vs, k)).abs()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioSearch {
    /// Midpoint of the final bracket.
    pub r: f64,
    /// Lower end of the final bracket, known feasible.
    pub r_feasible: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// Why the upper end failed.
    pub upper_failure: Option<Infeasible>,
}

/// Largest r in (0, 1] for which the ODE has a solution, by bisection to width `tol`.
pub fn cc_find_r(p: &ConcaveP, tol: f64, ds: f64) -> Result<RatioSearch> {
    if !(tol > 0.0) {
        return Err(Error::Config("bisection tolerance must be positive".into()));
    }
    if p.f.is_linear() {
        return Ok(RatioSearch {
            r: 1.0,
            r_feasible: 1.0,
            bracket: (1.0, 1.0),
            iterations: 0,
            upper_failure: None,
        });
    }
    let feasible = |r: f64| cc_solve_ode(p, r, ds).map(|s| s.map(|_| ()));
    if let Err(why) = feasible(R_FLOOR)? {
        return Err(Error::NoFeasibleRatio {
            floor: R_FLOOR,
            diagnostics: format!("{} at u = {}, v = {}", why.reason, why.u, why.v),
        });
    }
    let (mut lo, mut hi) = (R_FLOOR, 1.0);
    let mut upper_failure = match feasible(hi)? {
        Ok(()) => {
            return Ok(RatioSearch {
                r: 1.0,
                r_feasible: 1.0,
                bracket: (1.0, 1.0),
                iterations: 0,
                upper_failure: None,
            })
        }
        Err(why) => Some(why),
    };
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Ok(()) => lo = mid,
            Err(why) => {
                hi = mid;
                upper_failure = Some(why);
            }
        }
        iterations += 1;
    }
    Ok(RatioSearch {
        r: 0.5 * (lo + hi),
        r_feasible: lo,
        bracket: (lo, hi),
        iterations,
        upper_failure,
    })
}

/// ODE solutions shared by a concave instance: one per offline vertex, all at a common r.
#[derive(Debug, Clone)]
pub struct CcSolution {
    pub search: Vec<RatioSearch>,
    /// The common ratio used by the run (the smallest feasible r over the shapes).
    pub r: f64,
    pub per_vertex: Vec<std::sync::Arc<OdeSolution>>,
    pub u_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcConfig {
    pub eta: f64,
    pub r_tol: f64,
    pub ds: f64,
    pub trace: bool,
}

impl Default for CcConfig {
    fn default() -> Self {
        Self {
            eta: super::DEFAULT_ETA,
            r_tol: 1e-4,
            ds: DEFAULT_DS,
            trace: false,
        }
    }
}

impl LoopConfig {
    pub fn cc(&self) -> CcConfig {
        CcConfig {
            eta: self.eta,
            trace: self.trace,
            ..CcConfig::default()
        }
    }
}

fn shapes(problem: &Problem) -> Result<&[ConcaveFn]> {
    match &problem.model {
        CompiledModel::ConcaveSeparable(fs) => Ok(fs),
        _ => Err(Error::ModelMismatch {
            algorithm: "separable concave water-filling",
            expected: "concave_separable",
            found: problem.model_name(),
        }),
    }
}

/// Largest reachable load max_i sum_j w_ij.
pub fn max_load(problem: &Problem) -> f64 {
    let g = &problem.graph;
    let mut load = vec![0.0; g.n_offline()];
    for n in g.arcs.iter().flatten() {
        load[n.i] += n.w;
    }
    load.into_iter().fold(0.0, f64::max)
}

/// Solves the ODE for every distinct shape of the instance at a common r.
pub fn cc_prepare(problem: &Problem, cfg: &CcConfig) -> Result<CcSolution> {
    let fs = shapes(problem)?;
    let u_max = max_load(problem).max(1e-9) * (1.0 + 1e-9);
    let mut distinct: Vec<&ConcaveFn> = Vec::new();
    let mut which = Vec::with_capacity(fs.len());
    for f in fs {
        let k = match distinct.iter().position(|d| d.spec() == f.spec()) {
            Some(k) => k,
            None => {
                distinct.push(f);
                distinct.len() - 1
            }
        };
        which.push(k);
    }
    let ps: Vec<ConcaveP> = distinct
        .iter()
        .map(|f| ConcaveP::new((*f).clone(), u_max))
        .collect::<Result<_>>()?;
    let search: Vec<RatioSearch> = ps
        .iter()
        .map(|p| cc_find_r(p, cfg.r_tol, cfg.ds))
        .collect::<Result<_>>()?;
    let r = search.iter().map(|s| s.r_feasible).fold(1.0, f64::min);
    let sols: Vec<std::sync::Arc<OdeSolution>> = ps
        .iter()
        .map(|p| {
            if p.f.is_linear() {
                return Ok(std::sync::Arc::new(linear_solution(u_max, r)));
            }
            match cc_solve_ode(p, r, cfg.ds)? {
                Ok(s) => Ok(std::sync::Arc::new(s)),
                Err(why) => Err(Error::NoFeasibleRatio {
                    floor: r,
                    diagnostics: why.reason,
                }),
            }
        })
        .collect::<Result<_>>()?;
    Ok(CcSolution {
        search,
        r,
        per_vertex: which.iter().map(|&k| sols[k].clone()).collect(),
        u_max,
    })
}

/// For linear P the dual needs no offline potential: Y vanishes, so any v works; use v = 0.
fn linear_solution(u_max: f64, r: f64) -> OdeSolution {
    OdeSolution {
        r,
        grid: vec![0.0, u_max],
        v: vec![0.0, 0.0],
        residuals: vec![0.0, 0.0],
        capped_at: None,
        v_cap: 0.0,
    }
}

/// Outcome of the fractional concave allocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcRun {
    pub r: f64,
    pub u: Vec<f64>,
    pub x_rows: Vec<Vec<(usize, f64)>>,
    pub alpha: Vec<f64>,
    pub beta: f64,
    /// beta recomputed from the final loads.
    pub beta_direct: f64,
    pub primal: f64,
    pub dual: f64,
    pub steps: Vec<StepRecord>,
    /// P'(v(u_i)) never increased over time for any i.
    pub slopes_monotone: bool,
}

/// Fractional water-filling for separable concave rewards.
pub fn cc_run_fractional(problem: &Problem, sol: &CcSolution, cfg: &CcConfig) -> Result<CcRun> {
    let fs = shapes(problem)?;
    LoopConfig::with_eta(cfg.eta).validate()?;
    let g = &problem.graph;
    let mut u = vec![0.0; g.n_offline()];
    let mut beta = 0.0;
    let mut alpha = vec![0.0; g.n_online()];
    let mut x_rows = vec![Vec::new(); g.n_online()];
    let mut steps = Vec::new();
    let mut slopes_monotone = true;
    let slope_at = |i: usize, u: f64| -> Result<f64> { Ok(fs[i].dp(sol.per_vertex[i].v_at(u)?)) };
    let y_at = |i: usize, u: f64| -> Result<f64> { Ok(fs[i].y(sol.per_vertex[i].v_at(u)?)) };
    let mut last_slope: Vec<f64> = (0..g.n_offline())
        .map(|i| slope_at(i, 0.0))
        .collect::<Result<_>>()?;
    for j in 0..g.n_online() {
        let arcs = &g.arcs[j];
        let mut x = vec![0.0; arcs.len()];
        let mut total = 0.0;
        while total < 1.0 - FULL && !arcs.is_empty() {
            let keys: Vec<f64> = arcs
                .iter()
                .map(|n| slope_at(n.i, u[n.i]).map(|s| n.w * s))
                .collect::<Result<_>>()?;
            let k = argmax_by(&keys, |_| true, |&v| v).expect("nonempty");
            let n = arcs[k];
            let s = cfg.eta.min(1.0 - total);
            let u0 = u[n.i];
            let u1 = u0 + n.w * s;
            let start = slope_at(n.i, u0)?;
            let mid = slope_at(n.i, 0.5 * (u0 + u1))?;
            let end = slope_at(n.i, u1)?;
            let d_alpha = n.w * s / 6.0 * (start + 4.0 * mid + end);
            let d_beta = y_at(n.i, u1)? - y_at(n.i, u0)?;
            let d_primal = fs[n.i].p(u1) - fs[n.i].p(u0);
            if end > last_slope[n.i] + 1e-12 {
                slopes_monotone = false;
            }
            last_slope[n.i] = end;
            u[n.i] = u1;
            beta += d_beta;
            alpha[j] += d_alpha;
            x[k] += s;
            total += s;
            if cfg.trace {
                steps.push(StepRecord {
                    j,
                    i: n.i,
                    x: x[k],
                    b: beta,
                    a: alpha[j],
                    y: Some(u1),
                    d_primal,
                    d_dual: d_alpha + d_beta,
                });
            }
        }
        x_rows[j] = arcs
            .iter()
            .zip(&x)
            .filter(|(_, &v)| v > 0.0)
            .map(|(n, &v)| (n.i, v))
            .collect();
    }
    let beta_direct = (0..g.n_offline())
        .map(|i| y_at(i, u[i]))
        .sum::<Result<f64>>()?;
    let primal = u.iter().zip(fs).map(|(&ui, f)| f.p(ui)).sum();
    let dual = alpha.iter().sum::<f64>() + beta;
    Ok(CcRun {
        r: sol.r,
        u,
        x_rows,
        alpha,
        beta,
        beta_direct,
        primal,
        dual,
        steps,
        slopes_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConcaveSpec;

    fn shape(spec: ConcaveSpec, u_max: f64) -> ConcaveP {
        ConcaveP::new(ConcaveFn::new(spec).unwrap(), u_max).unwrap()
    }

    #[test]
    fn linear_is_one() {
        let p = shape(ConcaveSpec::Linear { slope: 1.0 }, 3.0);
        assert_eq!(cc_find_r(&p, 1e-4, DEFAULT_DS).unwrap().r, 1.0);
    }

    #[test]
    fn r_one_infeasible_for_strictly_concave() {
        let p = shape(ConcaveSpec::ExpSaturating { scale: 1.0 }, 2.0);
        assert!(cc_solve_ode(&p, 1.0, DEFAULT_DS).unwrap().is_err());
    }

    #[test]
    fn exp_solution_is_monotone() {
        let p = shape(ConcaveSpec::ExpSaturating { scale: 1.0 }, 2.0);
        let s = cc_find_r(&p, 1e-3, 1e-3).unwrap();
        assert!(s.r > 0.6 && s.r < 0.9, "{s:?}");
        let sol = cc_solve_ode(&p, s.r_feasible, 1e-3).unwrap().unwrap();
        assert_eq!(sol.v[0], 0.0);
        assert!(sol.v.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(sol.grid.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn scale_invariant() {
        let a = shape(ConcaveSpec::ExpSaturating { scale: 1.0 }, 2.0);
        let b = shape(ConcaveSpec::ExpSaturating { scale: 0.5 }, 2.0);
        let ra = cc_find_r(&a, 1e-3, 1e-3).unwrap().r;
        let rb = cc_find_r(&b, 1e-3, 1e-3).unwrap().r;
        assert!((ra - rb).abs() <= 1e-3);
    }

    #[test]
    fn degenerate_curvature_named() {
        let f = ConcaveFn::new(ConcaveSpec::Table {
            u: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            p: vec![0.0, 1.0, 2.0, 3.0, 4.0],
        })
        .unwrap();
        assert!(matches!(
            ConcaveP::new(f, 3.0),
            Err(Error::DegenerateCurvature { .. })
        ));
    }

    #[test]
    fn interpolation_reads_grid() {
        let sol = OdeSolution {
            r: 0.5,
            grid: vec![0.0, 0.0, 1.0, 2.0],
            v: vec![0.0, 0.5, 1.0, 3.0],
            residuals: vec![0.0; 4],
            capped_at: None,
            v_cap: 20.0,
        };
        assert_eq!(sol.v_at(0.0).unwrap(), 0.0);
        assert!((sol.v_at(0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((sol.v_at(1.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(sol.v_at(2.5), Err(Error::GridExceeded { .. })));
    }
}
