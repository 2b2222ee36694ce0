//! Water-filling for additive budgets, and the stochastic-reward reduction.

use serde::{Deserialize, Serialize};

use super::{
    argmax_by, simpson_increment, GHatMode, LedgerPolicy, LoopConfig, OnlineAlgorithm, StepRecord,
    FULL,
};
use crate::error::{Error, Result};
use crate::model::potential::{big_g, g};
use crate::model::{CompiledModel, Edge, Instance, Problem, RewardModel};

/// Per-trial state of the additive-budget algorithm.
#[derive(Debug, Clone)]
pub struct AbState<'a> {
    problem: &'a Problem,
    cfg: LoopConfig,
    /// Sum of realized assigned weights.
    pub consumed: Vec<f64>,
    /// Realized budget fraction min(consumed, W) / W.
    pub y: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub x_rows: Vec<Vec<(usize, f64)>>,
    realized: f64,
    pub steps: Vec<StepRecord>,
}

/// End-of-trial ledger of one offline vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbOffline {
    pub b: f64,
    pub y: f64,
}

/// min{w, max{0, W - consumed}}: the realized gain of assigning an edge of weight `w`.
pub fn ab_marginal(w: f64, budget: f64, consumed: f64) -> f64 {
    w.min((budget - consumed).max(0.0))
}

/// Largest weight-to-budget ratio over all edges.
pub fn r_max(problem: &Problem) -> f64 {
    let gr = &problem.graph;
    gr.arcs
        .iter()
        .flatten()
        .map(|n| n.w / gr.budget[n.i])
        .fold(0.0, f64::max)
}

/// Rewrites a stochastic-reward instance as an additive-budget one with
/// w_ij := p_ij w_i and W_i := w_i.
pub fn ab_from_stochastic(inst: &Instance) -> Result<Instance> {
    if !matches!(inst.model, RewardModel::StochasticReward) {
        return Err(Error::ModelMismatch {
            algorithm: "stochastic reduction",
            expected: "stochastic_reward",
            found: inst.model.name(),
        });
    }
    let weight = |id: u64| {
        inst.offline
            .iter()
            .find(|v| v.id == id)
            .and_then(|v| v.weight)
            .ok_or_else(|| Error::InvalidInstance(format!("offline {id} has no weight")))
    };
    let mut out = inst.clone();
    out.model = RewardModel::AdditiveBudget;
    for v in &mut out.offline {
        v.budget = v.weight;
    }
    for j in &mut out.online {
        for e in &mut j.edges {
            let p = e.p.ok_or_else(|| {
                Error::InvalidInstance(format!("edge to {} has no probability", e.to))
            })?;
            *e = Edge {
                to: e.to,
                w: p * weight(e.to)?,
                p: None,
            };
        }
    }
    Ok(out)
}

impl<'a> AbState<'a> {
    pub fn new(problem: &'a Problem, cfg: LoopConfig) -> Result<Self> {
        if !matches!(problem.model, CompiledModel::AdditiveBudget) {
            return Err(Error::ModelMismatch {
                algorithm: "additive-budget water-filling",
                expected: "additive_budget",
                found: problem.model_name(),
            });
        }
        cfg.validate()?;
        let (l, r) = (problem.graph.n_offline(), problem.graph.n_online());
        Ok(Self {
            problem,
            cfg,
            consumed: vec![0.0; l],
            y: vec![0.0; l],
            b: vec![0.0; l],
            a: vec![0.0; r],
            x_rows: vec![Vec::new(); r],
            realized: 0.0,
            steps: Vec::new(),
        })
    }

    pub fn marginal(&self, i: usize, w: f64) -> f64 {
        ab_marginal(w, self.problem.graph.budget[i], self.consumed[i])
    }

    pub fn offline_ledgers(&self) -> Vec<AbOffline> {
        self.b
            .iter()
            .zip(&self.y)
            .map(|(&b, &y)| AbOffline { b, y })
            .collect()
    }
}

impl OnlineAlgorithm for AbState<'_> {
    fn allocate(&mut self, j: usize) -> Result<Vec<(usize, f64)>> {
        let budget = &self.problem.graph.budget;
        let arcs = &self.problem.graph.arcs[j];
        let mut x = vec![0.0; arcs.len()];
        let mut total = 0.0;
        while total < 1.0 - FULL {
            let Some(k) = argmax_by(
                arcs,
                |n| self.y[n.i] < 1.0 - FULL && self.marginal(n.i, n.w) > 0.0,
                |n| self.marginal(n.i, n.w) * (1.0 - self.b[n.i] / budget[n.i]),
            ) else {
                break;
            };
            let nb = arcs[k];
            let i = nb.i;
            let big_w = budget[i];
            let m = self.marginal(i, nb.w);
            let delta = m / big_w;
            let (y, x0) = (self.y[i], x[k]);
            let s = self.cfg.eta.min(1.0 - total);
            let db = |t: f64| match self.cfg.ghat {
                GHatMode::Level => big_w * (big_g(y + (x0 + t) * delta) - big_g(y + x0 * delta)),
                GHatMode::Expect => {
                    let (g0, g1) = (g(y), g(y + delta));
                    m * (g0 * t + 0.5 * (g1 - g0) * ((x0 + t) * (x0 + t) - x0 * x0))
                }
            };
            let d_b = db(s);
            let d_a = m * (1.0 - self.b[i] / big_w) * s - m / big_w * simpson_increment(db, s);
            self.b[i] += d_b;
            self.a[j] += d_a;
            x[k] += s;
            total += s;
            if self.cfg.trace {
                self.steps.push(StepRecord {
                    j,
                    i,
                    x: x[k],
                    b: self.b[i],
                    a: self.a[j],
                    y: Some(self.y[i]),
                    d_primal: m * s,
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
        let budget = &self.problem.graph.budget;
        if let Some(i) = choice {
            let w = self
                .problem
                .graph
                .nbr(i, j)
                .expect("choice is a neighbor")
                .w;
            let m = self.marginal(i, w);
            self.realized += m;
            self.consumed[i] += w;
            self.y[i] = (self.consumed[i].min(budget[i]) / budget[i]).min(1.0);
        }
        if self.cfg.policy == LedgerPolicy::Resync {
            for &(i, _) in &self.x_rows[j] {
                self.b[i] = budget[i] * big_g(self.y[i]);
            }
        }
    }

    fn primal(&self) -> f64 {
        self.realized
    }

    fn dual(&self) -> f64 {
        self.a.iter().sum::<f64>() + self.b.iter().sum::<f64>()
    }

    fn n_online(&self) -> usize {
        self.a.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::simulate;
    use crate::model::potential::RATE;
    use crate::model::{OfflineVertex, OnlineVertex, Realization, RngStream};

    fn inst(budgets: &[f64], rows: &[&[(u64, f64)]]) -> Problem {
        Problem::new(Instance {
            model: RewardModel::AdditiveBudget,
            offline: budgets
                .iter()
                .enumerate()
                .map(|(k, &b)| OfflineVertex {
                    id: k as u64,
                    budget: Some(b),
                    weight: None,
                })
                .collect(),
            online: rows
                .iter()
                .enumerate()
                .map(|(k, r)| OnlineVertex {
                    id: k as u64,
                    edges: r.iter().map(|&(to, w)| Edge { to, w, p: None }).collect(),
                })
                .collect(),
            meta: None,
        })
        .unwrap()
    }

    fn cfg(ghat: GHatMode) -> LoopConfig {
        LoopConfig {
            eta: 1e-3,
            ghat,
            policy: LedgerPolicy::Resync,
            trace: true,
        }
    }

    #[test]
    fn marginal_examples() {
        assert_eq!(ab_marginal(0.3, 1.0, 0.0), 0.3);
        assert!((ab_marginal(0.5, 1.0, 0.8) - 0.2).abs() < 1e-15);
        assert_eq!(ab_marginal(0.5, 1.0, 1.2), 0.0);
    }

    #[test]
    fn single_edge() {
        let p = inst(&[1.0], &[&[(0, 0.4)]]);
        let mut s = AbState::new(&p, cfg(GHatMode::Level)).unwrap();
        simulate(&mut s, &mut RngStream::new(0)).unwrap();
        assert_eq!(s.primal(), 0.4);
        // the level ledger tracks W G(y) exactly
        assert!((s.b[0] - big_g(0.4)).abs() < 1e-12);
    }

    #[test]
    fn two_heavy_edges_capped() {
        let p = inst(&[1.0], &[&[(0, 0.6)], &[(0, 0.6)]]);
        let mut s = AbState::new(&p, cfg(GHatMode::Level)).unwrap();
        simulate(&mut s, &mut RngStream::new(0)).unwrap();
        assert!((s.primal() - 1.0).abs() < 1e-12);
        assert_eq!(s.y[0], 1.0);
        let exact = p
            .reward(&Realization {
                assign: vec![Some(0), Some(0)],
                success: None,
            })
            .unwrap();
        assert_eq!(exact, s.primal());
    }

    #[test]
    fn symmetric_split() {
        let p = inst(&[1.0, 1.0], &[&[(0, 0.5), (1, 0.5)]]);
        let mut s = AbState::new(&p, cfg(GHatMode::Expect)).unwrap();
        let row = s.allocate(0).unwrap();
        assert_eq!(row.len(), 2);
        assert!((row[0].1 + row[1].1 - 1.0).abs() < 1e-12);
        assert!((row[0].1 - row[1].1).abs() <= 1e-3 + 1e-12);
    }

    #[test]
    fn level_rate_is_exact() {
        let p = inst(
            &[1.0, 2.0],
            &[&[(0, 0.5), (1, 0.9)], &[(0, 0.7)], &[(0, 0.3), (1, 1.5)]],
        );
        let mut s = AbState::new(&p, cfg(GHatMode::Level)).unwrap();
        simulate(&mut s, &mut RngStream::new(9)).unwrap();
        for st in &s.steps {
            assert!((st.rate().unwrap() - RATE).abs() < 1e-9, "{st:?}");
        }
    }

    #[test]
    fn stochastic_substitution() {
        let mut inst = Instance {
            model: RewardModel::StochasticReward,
            offline: vec![OfflineVertex {
                id: 0,
                budget: None,
                weight: Some(2.0),
            }],
            online: vec![OnlineVertex {
                id: 0,
                edges: vec![Edge {
                    to: 0,
                    w: 0.0,
                    p: Some(0.01),
                }],
            }],
            meta: None,
        };
        let out = ab_from_stochastic(&inst).unwrap();
        assert_eq!(out.online[0].edges[0].w, 0.02);
        assert_eq!(out.offline[0].budget, Some(2.0));
        assert!((r_max(&Problem::new(out).unwrap()) - 0.01).abs() < 1e-15);
        inst.online[0].edges[0].p = Some(1.0);
        let out = ab_from_stochastic(&inst).unwrap();
        assert_eq!(r_max(&Problem::new(out).unwrap()), 1.0);
    }
}
