//! Dual-certificate audits. Failures are report entries, never errors.

use serde::{Deserialize, Serialize};

use crate::algo::concave::CcRun;
use crate::algo::sub::SubState;
use crate::algo::StepRecord;
use crate::error::Result;
use crate::model::potential::{big_g, RATE};
use crate::model::{Graph, Problem};
use crate::multilinear::curvature;
use crate::stats::Summary;

/// Tolerances shared by the audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Largest subset of an offline vertex's neighbors checked.
    pub subset_cap: usize,
    /// Standard errors allowed on Monte-Carlo means.
    pub z: f64,
    /// Constant c in the c * eta discretization allowance.
    pub eta_constant: f64,
    /// Absolute slack on exact comparisons.
    pub tol: f64,
    /// Cap on enumerated assignments for the all-M checks.
    pub assignment_cap: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            subset_cap: 12,
            z: 3.0,
            eta_constant: 5.0,
            tol: 1e-9,
            assignment_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    /// Number of individual inequalities evaluated.
    pub checked: usize,
    /// Smallest (lhs - rhs + allowance) seen; negative means a violation.
    pub worst_slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub algorithm: String,
    pub eta: f64,
    /// The constant used in every O(eta) allowance.
    pub eta_constant: f64,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Tracks the worst slack of a family of inequalities.
struct Tally {
    name: &'static str,
    checked: usize,
    worst: f64,
    detail: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            worst: f64::INFINITY,
            detail: String::new(),
        }
    }

    fn see(&mut self, slack: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        if slack < self.worst || slack.is_nan() {
            self.worst = slack;
            self.detail = what();
        }
    }

    fn finish(self) -> AuditCheck {
        AuditCheck {
            name: self.name.to_string(),
            passed: self.checked == 0 || self.worst >= 0.0,
            checked: self.checked,
            worst_slack: if self.checked == 0 { 0.0 } else { self.worst },
            detail: self.detail,
        }
    }
}

/// End-of-trial ledgers of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLedger {
    pub primal: f64,
    pub dual: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Per offline vertex: the integral of G(y_i(w)) dw (free disposal) or W_i G(y_i) (budgets).
    pub potential: Vec<f64>,
}

impl TrialLedger {
    pub fn from_fd(s: &crate::algo::fd::FdState) -> Self {
        use crate::algo::OnlineAlgorithm;
        let off = s.offline_ledgers();
        Self {
            primal: s.primal(),
            dual: s.dual(),
            a: s.a.clone(),
            b: off.iter().map(|o| o.b).collect(),
            potential: off.iter().map(|o| o.int_g).collect(),
        }
    }

    pub fn from_ab(s: &crate::algo::ab::AbState, problem: &Problem) -> Self {
        use crate::algo::OnlineAlgorithm;
        Self {
            primal: s.primal(),
            dual: s.dual(),
            a: s.a.clone(),
            b: s.b.clone(),
            potential: s
                .y
                .iter()
                .zip(&problem.graph.budget)
                .map(|(&y, &w)| w * big_g(y))
                .collect(),
        }
    }
}

fn column(trials: &[TrialLedger], f: impl Fn(&TrialLedger) -> f64) -> Summary {
    Summary::of(&trials.iter().map(f).collect::<Vec<_>>())
}

/// Nonempty subsets of `items` with at most `cap` members, as index lists.
fn subsets(len: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, len: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for k in start..len {
            cur.push(k);
            out.push(cur.clone());
            if cur.len() < cap {
                rec(k + 1, len, cap, cur, out);
            }
            cur.pop();
        }
    }
    rec(0, len, cap.min(len), &mut cur, &mut out);
    out
}

/// Weak duality on means: mean(dual - primal) >= -z stderr.
fn weak_duality(trials: &[TrialLedger], cfg: &AuditConfig) -> AuditCheck {
    let mut t = Tally::new("weak duality");
    let s = column(trials, |tr| tr.dual - tr.primal);
    t.see(s.mean + cfg.z * s.stderr + cfg.tol, || {
        format!("mean(dual - primal) = {:.6e} +- {:.2e}", s.mean, s.stderr)
    });
    t.finish()
}

/// Subset constraints b_i + sum_{k in S} a_k >= factor * value(i, S) on trial means.
fn subset_family(
    name: &'static str,
    g: &Graph,
    trials: &[TrialLedger],
    cfg: &AuditConfig,
    allowance: impl Fn(usize) -> f64,
    rhs: impl Fn(usize, &[(usize, f64)]) -> f64,
) -> AuditCheck {
    let mut t = Tally::new(name);
    for i in 0..g.n_offline() {
        let nbrs: Vec<(usize, f64)> = g
            .offline_nbrs(i)
            .into_iter()
            .map(|(j, n)| (j, n.w))
            .collect();
        let cap = if nbrs.len() > 20 {
            cfg.subset_cap.min(2)
        } else {
            cfg.subset_cap
        };
        for s in subsets(nbrs.len(), cap) {
            let members: Vec<(usize, f64)> = s.iter().map(|&k| nbrs[k]).collect();
            let sum = column(trials, |tr| {
                tr.b[i] + members.iter().map(|&(j, _)| tr.a[j]).sum::<f64>()
            });
            let need = rhs(i, &members);
            let slack = sum.mean - need + cfg.z * sum.stderr + allowance(i) + cfg.tol;
            t.see(slack, || {
                let js: Vec<u64> = members.iter().map(|&(j, _)| g.online_ids[j]).collect();
                format!(
                    "offline {} with online {:?}: {:.6} vs {:.6} (stderr {:.2e})",
                    g.offline_ids[i], js, sum.mean, need, sum.stderr
                )
            });
        }
    }
    t.finish()
}

/// Free-disposal audit over aggregated trials.
pub fn fd_audit(
    problem: &Problem,
    trials: &[TrialLedger],
    eta: f64,
    cfg: &AuditConfig,
) -> AuditReport {
    let g = &problem.graph;
    let w_max = g.edge_w.iter().copied().fold(0.0, f64::max);
    let mut a = Tally::new("ledger dominates potential");
    for (k, tr) in trials.iter().enumerate() {
        for i in 0..g.n_offline() {
            let slack = tr.b[i] - tr.potential[i] + 1e-9 * (1.0 + tr.potential[i].abs());
            a.see(slack, || {
                format!(
                    "trial {k}, offline {}: b = {:.9}, int G = {:.9}",
                    g.offline_ids[i], tr.b[i], tr.potential[i]
                )
            });
        }
    }
    let b = subset_family(
        "subset feasibility",
        g,
        trials,
        cfg,
        |_| cfg.eta_constant * eta * w_max,
        |_, members| members.iter().map(|m| m.1).fold(0.0, f64::max),
    );
    AuditReport {
        algorithm: "fd".into(),
        eta,
        eta_constant: cfg.eta_constant,
        checks: vec![a.finish(), b, weak_duality(trials, cfg)],
    }
}

/// Additive-budget audit over aggregated trials.
pub fn ab_audit(
    problem: &Problem,
    trials: &[TrialLedger],
    eta: f64,
    cfg: &AuditConfig,
) -> AuditReport {
    let g = &problem.graph;
    let factor = big_g(1.0 - crate::algo::ab::r_max(problem));
    let mut a = Tally::new("ledger invariant");
    for i in 0..g.n_offline() {
        let d = column(trials, |tr| tr.b[i] - tr.potential[i]);
        let allow = cfg.z * d.stderr + cfg.eta_constant * eta * g.budget[i] + cfg.tol;
        a.see(allow - d.mean.abs(), || {
            format!(
                "offline {}: mean(b - W G(y)) = {:.3e} +- {:.2e}",
                g.offline_ids[i], d.mean, d.stderr
            )
        });
    }
    let b = subset_family(
        "subset feasibility",
        g,
        trials,
        cfg,
        |i| cfg.eta_constant * eta * g.budget[i],
        |i, members| factor * g.budget[i].min(members.iter().map(|m| m.1).sum()),
    );
    AuditReport {
        algorithm: "ab".into(),
        eta,
        eta_constant: cfg.eta_constant,
        checks: vec![a.finish(), b, weak_duality(trials, cfg)],
    }
}

/// Calls `f` on every feasible assignment, in lexicographic order.
pub fn for_each_assignment(
    g: &Graph,
    cap: f64,
    mut f: impl FnMut(&[Option<usize>]) -> Result<()>,
) -> Result<()> {
    let size: f64 = g.arcs.iter().map(|a| (a.len() + 1) as f64).product();
    if size > cap {
        return Err(crate::Error::SizeCap { size, cap });
    }
    let r = g.n_online();
    let mut choice = vec![0usize; r];
    let mut assign = vec![None; r];
    loop {
        f(&assign)?;
        let mut j = r;
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            if choice[j] < g.arcs[j].len() {
                choice[j] += 1;
                assign[j] = Some(g.arcs[j][choice[j] - 1].i);
                break;
            }
            choice[j] = 0;
            assign[j] = None;
        }
    }
}

fn rate_family(name: &'static str, steps: &[StepRecord], ok: impl Fn(f64) -> f64) -> AuditCheck {
    let mut t = Tally::new(name);
    for (k, st) in steps.iter().enumerate() {
        if let Some(rate) = st.rate() {
            t.see(ok(rate), || {
                format!(
                    "step {k} (online {}, offline {}): rate {rate:.9}",
                    st.j, st.i
                )
            });
        }
    }
    t.finish()
}

/// Per-step rate identity for the water-filling algorithms with the e/(e-1) rate.
pub fn rate_identity(steps: &[StepRecord], eta: f64, cfg: &AuditConfig) -> AuditCheck {
    let allow = 1e-6 + cfg.eta_constant * eta;
    rate_family("rate identity", steps, |rate| allow - (rate - RATE).abs())
}

/// Sub-additive audit of a finished fractional run.
pub fn sub_audit(problem: &Problem, state: &SubState, eta: f64, cfg: &AuditConfig) -> AuditReport {
    let g = &problem.graph;
    let mut checks = Vec::new();
    let mut inv = Tally::new("potential invariant");
    for s in &state.invariant {
        inv.see(10.0 * eta - (s.beta - s.g_of_c).abs(), || {
            format!(
                "after online {}: beta = {:.9}, G(C) = {:.9}",
                g.online_ids[s.j], s.beta, s.g_of_c
            )
        });
    }
    checks.push(inv.finish());
    let edges: Vec<usize> = (0..g.n_edges()).collect();
    let kappa = match curvature(problem, &edges, crate::multilinear::ENUMERATION_LIMIT) {
        Ok(c) => Some(c.kappa),
        Err(_) if g.n_edges() == 0 => Some(0.0),
        Err(_) => None,
    };
    let mut feas = Tally::new("feasibility up to curvature");
    match kappa {
        Some(kappa) => {
            let allow = 1e-6 + 10.0 * eta + cfg.z * state.max_stderr;
            let res = for_each_assignment(g, cfg.assignment_cap, |assign| {
                let c = problem.reward_unchecked(assign)?;
                let lhs = state.beta
                    + assign
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| c.is_some())
                        .map(|(j, _)| state.alpha[j])
                        .sum::<f64>();
                feas.see(lhs - (1.0 - kappa) * c + allow, || {
                    format!("{assign:?}: {lhs:.9} vs (1 - {kappa:.6}) * {c:.9}")
                });
                Ok(())
            });
            if let Err(e) = res {
                feas.see(f64::NAN, || format!("enumeration failed: {e}"));
            }
        }
        None => feas.see(f64::NAN, || {
            "curvature undefined or beyond the enumeration limit".into()
        }),
    }
    checks.push(feas.finish());
    checks.push(rate_identity(&state.steps, eta, cfg));
    AuditReport {
        algorithm: "sub".into(),
        eta,
        eta_constant: cfg.eta_constant,
        checks,
    }
}

/// Separable-concave audit of a fractional run.
pub fn cc_audit(problem: &Problem, run: &CcRun, eta: f64, cfg: &AuditConfig) -> AuditReport {
    let g = &problem.graph;
    let allow = 1e-6 + 10.0 * eta;
    let mut feas = Tally::new("dual feasibility");
    let res = for_each_assignment(g, cfg.assignment_cap, |assign| {
        let c = problem.reward_unchecked(assign)?;
        let lhs = run.beta
            + assign
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_some())
                .map(|(j, _)| run.alpha[j])
                .sum::<f64>();
        feas.see(lhs - c + allow, || {
            format!("{assign:?}: {lhs:.9} vs {c:.9}")
        });
        Ok(())
    });
    if let Err(e) = res {
        feas.see(f64::NAN, || format!("enumeration failed: {e}"));
    }
    let bound = 1.0 / run.r;
    let rate = rate_family("rate bound", &run.steps, |rate| bound + allow - rate);
    let mut beta = Tally::new("incremental beta");
    beta.see(1e-8 - (run.beta - run.beta_direct).abs(), || {
        format!(
            "incremental {:.12} vs direct {:.12}",
            run.beta, run.beta_direct
        )
    });
    AuditReport {
        algorithm: "cc".into(),
        eta,
        eta_constant: 10.0,
        checks: vec![feas.finish(), rate, beta.finish()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_respect_cap() {
        assert_eq!(subsets(3, 3).len(), 7);
        assert_eq!(subsets(4, 1).len(), 4);
        assert_eq!(subsets(4, 2).len(), 10);
        assert!(subsets(0, 3).is_empty());
    }

    #[test]
    fn tally_empty_passes() {
        let c = Tally::new("x").finish();
        assert!(c.passed);
        assert_eq!(c.checked, 0);
    }

    #[test]
    fn nan_slack_fails() {
        let mut t = Tally::new("x");
        t.see(1.0, String::new);
        t.see(f64::NAN, || "bad".into());
        let c = t.finish();
        assert!(!c.passed);
        assert_eq!(c.detail, "bad");
    }
}
