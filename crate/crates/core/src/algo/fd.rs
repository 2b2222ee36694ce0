//! Randomized water-filling for edge-weighted matching with free disposal.

use serde::{Deserialize, Serialize};

use super::step_fn::StepFunction;
use super::{
    argmax_by, simpson_increment, GHatMode, LedgerPolicy, LoopConfig, OnlineAlgorithm, StepRecord,
    FULL,
};
use crate::error::{Error, Result};
use crate::model::potential::{big_g, g};
use crate::model::{CompiledModel, Problem};

/// Per-trial state of the free-disposal algorithm.
#[derive(Debug, Clone)]
pub struct FdState<'a> {
    problem: &'a Problem,
    cfg: LoopConfig,
    /// Heaviest realized weight per offline vertex.
    pub sigma: Vec<f64>,
    /// Ledger for B_i.
    pub b: Vec<f64>,
    /// w -> P[Y_i(w) = 1 | realization so far].
    pub y: Vec<StepFunction>,
    /// Ledger for A_j.
    pub a: Vec<f64>,
    pub x_rows: Vec<Vec<(usize, f64)>>,
    pub steps: Vec<StepRecord>,
}

/// End-of-trial ledger of one offline vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdOffline {
    pub b: f64,
    /// Integral of G(y_i(w)) over w.
    pub int_g: f64,
}

impl<'a> FdState<'a> {
    pub fn new(problem: &'a Problem, cfg: LoopConfig) -> Result<Self> {
        if !matches!(problem.model, CompiledModel::FreeDisposal) {
            return Err(Error::ModelMismatch {
                algorithm: "free-disposal water-filling",
                expected: "free_disposal",
                found: problem.model_name(),
            });
        }
        cfg.validate()?;
        let (l, r) = (problem.graph.n_offline(), problem.graph.n_online());
        Ok(Self {
            problem,
            cfg,
            sigma: vec![0.0; l],
            b: vec![0.0; l],
            y: vec![StepFunction::default(); l],
            a: vec![0.0; r],
            x_rows: vec![Vec::new(); r],
            steps: Vec::new(),
        })
    }

    /// Primitive in the level variable of the g-evaluation on the in-progress interval.
    fn phi(&self, x: f64) -> f64 {
        match self.cfg.ghat {
            GHatMode::Level => big_g(x),
            GHatMode::Expect => {
                let (g0, g1) = (g(0.0), g(1.0));
                g0 * x + 0.5 * (g1 - g0) * x * x
            }
        }
    }

    pub fn offline_ledgers(&self) -> Vec<FdOffline> {
        (0..self.b.len())
            .map(|i| FdOffline {
                b: self.b[i],
                int_g: self.y[i].integral(big_g, self.y[i].support_end()),
            })
            .collect()
    }
}

impl OnlineAlgorithm for FdState<'_> {
    fn allocate(&mut self, j: usize) -> Result<Vec<(usize, f64)>> {
        let arcs = &self.problem.graph.arcs[j];
        let mut x = vec![0.0; arcs.len()];
        let mut total = 0.0;
        while total < 1.0 - FULL {
            let Some(k) = argmax_by(arcs, |n| n.w > self.sigma[n.i], |n| n.w - self.b[n.i]) else {
                break;
            };
            let nb = arcs[k];
            let i = nb.i;
            let s = self.cfg.eta.min(1.0 - total);
            let x0 = x[k];
            let span = nb.w - self.sigma[i];
            let base = self.phi(x0);
            let db = |t: f64| span * (self.phi(x0 + t) - base);
            let d_b = db(s);
            let d_a = (nb.w - self.b[i]) * s - simpson_increment(db, s);
            self.b[i] += d_b;
            self.a[j] += d_a;
            self.y[i].raise(self.sigma[i], nb.w, s);
            x[k] += s;
            total += s;
            debug_assert!(self.y[i].is_valid(1e-9));
            if self.cfg.trace {
                self.steps.push(StepRecord {
                    j,
                    i,
                    x: x[k],
                    b: self.b[i],
                    a: self.a[j],
                    y: None,
                    d_primal: span * s,
                    d_dual: d_a + d_b,
                });
            }
        }
        let row: Vec<(usize, f64)> = arcs
            .iter()
            .zip(&x)
            .filter(|(_, &v)| v > 0.0)
            .map(|(n, &v)| (n.i, v))
            .collect();
        self.x_rows[j] = row.clone();
        Ok(row)
    }

    fn commit(&mut self, j: usize, choice: Option<usize>) {
        if let Some(i) = choice {
            let w = self
                .problem
                .graph
                .nbr(i, j)
                .expect("choice is a neighbor")
                .w;
            self.sigma[i] = self.sigma[i].max(w);
        }
        for &(i, _) in &self.x_rows[j] {
            self.y[i].collapse(self.sigma[i]);
            if self.cfg.policy == LedgerPolicy::Resync {
                // integral of G over the realized indicator of (0, sigma]
                self.b[i] = self.sigma[i];
            }
        }
    }

    fn primal(&self) -> f64 {
        self.sigma.iter().sum()
    }

    fn dual(&self) -> f64 {
        self.a.iter().sum::<f64>() + self.b.iter().sum::<f64>()
    }

    fn n_online(&self) -> usize {
        self.a.len()
    }
}
