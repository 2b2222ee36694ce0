//! Reference online algorithms: greedy on realized marginals and KVV Ranking.

use rand::seq::SliceRandom;

use crate::algo::OnlineAlgorithm;
use crate::error::{Error, Result};
use crate::model::{CompiledModel, Problem, RngStream};

/// Assigns each arrival to the neighbor with the largest realized marginal reward.
#[derive(Debug, Clone)]
pub struct Greedy<'a> {
    problem: &'a Problem,
    assign: Vec<Option<usize>>,
    value: f64,
}

impl<'a> Greedy<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        Self {
            problem,
            assign: vec![None; problem.graph.n_online()],
            value: 0.0,
        }
    }

    fn marginal(&mut self, j: usize, i: usize) -> Result<f64> {
        self.assign[j] = Some(i);
        let v = self.problem.reward_unchecked(&self.assign);
        self.assign[j] = None;
        Ok(v? - self.value)
    }
}

impl OnlineAlgorithm for Greedy<'_> {
    fn allocate(&mut self, j: usize) -> Result<Vec<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..self.problem.graph.arcs[j].len() {
            let i = self.problem.graph.arcs[j][k].i;
            let m = self.marginal(j, i)?;
            // strict improvement keeps the lowest id on ties; zero marginals never win
            if m > best.map_or(0.0, |b| b.1) {
                best = Some((i, m));
            }
        }
        Ok(best.map(|(i, _)| vec![(i, 1.0)]).unwrap_or_default())
    }

    fn commit(&mut self, j: usize, choice: Option<usize>) {
        if let Some(i) = choice {
            self.assign[j] = Some(i);
            self.value = self
                .problem
                .reward_unchecked(&self.assign)
                .unwrap_or(f64::NAN);
        }
    }

    fn primal(&self) -> f64 {
        self.value
    }

    /// Greedy carries no dual certificate.
    fn dual(&self) -> f64 {
        f64::NAN
    }

    fn n_online(&self) -> usize {
        self.assign.len()
    }
}

/// KVV Ranking: one uniformly random priority order over offline vertices,
/// each arrival matched to its highest-priority free neighbor.
#[derive(Debug, Clone)]
pub struct Kvv<'a> {
    problem: &'a Problem,
    /// rank[i] = position of offline index i in the order (0 = highest priority).
    rank: Vec<usize>,
    matched: Vec<bool>,
    value: f64,
}

impl<'a> Kvv<'a> {
    /// Samples the ranking from `rng`.
    pub fn new(problem: &'a Problem, rng: &mut RngStream) -> Result<Self> {
        let mut order: Vec<usize> = (0..problem.graph.n_offline()).collect();
        order.shuffle(rng);
        Self::with_order(problem, &order)
    }

    /// Uses `order` (offline indices, highest priority first).
    pub fn with_order(problem: &'a Problem, order: &[usize]) -> Result<Self> {
        if !matches!(problem.model, CompiledModel::FreeDisposal) {
            return Err(Error::ModelMismatch {
                algorithm: "ranking",
                expected: "free_disposal",
                found: problem.model_name(),
            });
        }
        if problem.graph.edge_w.iter().any(|&w| w != 0.0 && w != 1.0) {
            return Err(Error::ModelMismatch {
                algorithm: "ranking",
                expected: "unweighted free_disposal",
                found: "weighted free_disposal",
            });
        }
        let l = problem.graph.n_offline();
        if order.len() != l {
            return Err(Error::Config(format!(
                "ranking has {} entries for {l} offline vertices",
                order.len()
            )));
        }
        let mut rank = vec![0; l];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = pos;
        }
        Ok(Self {
            problem,
            rank,
            matched: vec![false; l],
            value: 0.0,
        })
    }
}

impl OnlineAlgorithm for Kvv<'_> {
    fn allocate(&mut self, j: usize) -> Result<Vec<(usize, f64)>> {
        Ok(self.problem.graph.arcs[j]
            .iter()
            .filter(|n| n.w > 0.0 && !self.matched[n.i])
            .min_by_key(|n| self.rank[n.i])
            .map(|n| vec![(n.i, 1.0)])
            .unwrap_or_default())
    }

    fn commit(&mut self, _j: usize, choice: Option<usize>) {
        if let Some(i) = choice {
            self.matched[i] = true;
            self.value += 1.0;
        }
    }

    fn primal(&self) -> f64 {
        self.value
    }

    fn dual(&self) -> f64 {
        f64::NAN
    }

    fn n_online(&self) -> usize {
        self.problem.graph.n_online()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algo::simulate;
    use crate::model::{Edge, Instance, OfflineVertex, OnlineVertex, RewardModel};

    fn fd(offline: u64, rows: &[&[(u64, f64)]]) -> Problem {
        Problem::new(Instance {
            model: RewardModel::FreeDisposal,
            offline: (0..offline)
                .map(|id| OfflineVertex {
                    id,
                    budget: None,
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

    #[test]
    fn greedy_half_instance() {
        let p = fd(2, &[&[(0, 1.0), (1, 1.0)], &[(0, 1.0)]]);
        let mut g = Greedy::new(&p);
        let real = simulate(&mut g, &mut RngStream::new(0)).unwrap();
        assert_eq!(real.assign, vec![Some(0), None]);
        assert_eq!(g.primal(), 1.0);
    }

    #[test]
    fn greedy_budget_caps() {
        let p = Problem::new(crate::model::tests::single_offline(
            RewardModel::AdditiveBudget,
            Some(1.0),
            &[0.6, 0.6],
        ))
        .unwrap();
        let mut g = Greedy::new(&p);
        let real = simulate(&mut g, &mut RngStream::new(0)).unwrap();
        assert_eq!(real.assign, vec![Some(0), Some(0)]);
        assert!((g.primal() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kvv_star_and_n2() {
        let star = fd(1, &[&[(0, 1.0)], &[(0, 1.0)], &[(0, 1.0)]]);
        let mut k = Kvv::new(&star, &mut RngStream::new(3)).unwrap();
        simulate(&mut k, &mut RngStream::new(3)).unwrap();
        assert_eq!(k.primal(), 1.0);

        // online 0 sees {0, 1}, online 1 sees {1}; average over both rankings
        let p = fd(2, &[&[(0, 1.0), (1, 1.0)], &[(1, 1.0)]]);
        let mut total = 0.0;
        for order in [[0, 1], [1, 0]] {
            let mut k = Kvv::with_order(&p, &order).unwrap();
            simulate(&mut k, &mut RngStream::new(0)).unwrap();
            total += k.primal();
        }
        assert_eq!(total / 2.0, 1.5);
    }

    #[test]
    fn kvv_rejects_weights() {
        let p = fd(1, &[&[(0, 0.5)]]);
        assert!(matches!(
            Kvv::with_order(&p, &[0]),
            Err(Error::ModelMismatch { .. })
        ));
    }
}
