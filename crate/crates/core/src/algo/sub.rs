//! Fractional water-filling on the multilinear extension of a sub-additive reward.

use serde::{Deserialize, Serialize};

use super::{argmax_by, LoopConfig, OnlineAlgorithm, StepRecord, FULL};
use crate::error::{Error, Result};
use crate::model::potential::{big_g, big_h};
use crate::model::{CompiledModel, Problem, RngStream, SubAdditiveSpec, TOL};
use crate::multilinear::{EdgeMask, FractionalState, Restriction, SetFunction, ENUMERATION_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubConfig {
    pub eta: f64,
    /// Fractional support up to which partials are exact.
    pub limit: usize,
    /// Monte-Carlo draws per arrival beyond the limit.
    pub samples: usize,
    pub seed: u64,
    pub trace: bool,
}

impl Default for SubConfig {
    fn default() -> Self {
        Self {
            eta: super::DEFAULT_ETA,
            limit: ENUMERATION_LIMIT,
            samples: 4096,
            seed: 0,
            trace: false,
        }
    }
}

/// The invariant pair (beta, G(C(x))) recorded after an arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSample {
    pub j: usize,
    pub beta: f64,
    pub g_of_c: f64,
}

/// Rejects oracle values above 1.
struct Checked<'a>(&'a dyn SetFunction);

impl SetFunction for Checked<'_> {
    fn ground_size(&self) -> usize {
        self.0.ground_size()
    }

    fn value(&self, mask: EdgeMask) -> Result<f64> {
        let v = self.0.value(mask)?;
        if v > 1.0 + TOL {
            return Err(Error::ScalingViolation { mask, value: v });
        }
        Ok(v)
    }
}

/// Fractional state of the sub-additive algorithm plus the rounding of one trial.
#[derive(Clone)]
pub struct SubState<'a> {
    problem: &'a Problem,
    cfg: SubConfig,
    pub x: FractionalState,
    pub beta: f64,
    pub alpha: Vec<f64>,
    /// C(x) after the latest arrival.
    pub c_value: f64,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub invariant: Vec<InvariantSample>,
    pub steps: Vec<StepRecord>,
    /// Arrivals whose partials were sampled, and the largest stderr seen.
    pub sampled_arrivals: usize,
    pub max_stderr: f64,
    rng: RngStream,
    realized: EdgeMask,
}

impl<'a> SubState<'a> {
    pub fn new(problem: &'a Problem, cfg: SubConfig) -> Result<Self> {
        if !matches!(problem.model, CompiledModel::SubAdditive(_)) {
            return Err(Error::ModelMismatch {
                algorithm: "sub-additive water-filling",
                expected: "sub_additive",
                found: problem.model_name(),
            });
        }
        super::LoopConfig::with_eta(cfg.eta).validate()?;
        let r = problem.graph.n_online();
        Ok(Self {
            problem,
            cfg,
            x: FractionalState::zeros(problem.graph.n_edges()),
            beta: 0.0,
            alpha: vec![0.0; r],
            c_value: 0.0,
            rows: vec![Vec::new(); r],
            invariant: Vec::new(),
            steps: Vec::new(),
            sampled_arrivals: 0,
            max_stderr: 0.0,
            rng: RngStream::new(cfg.seed),
            realized: 0,
        })
    }

    /// Runs the fractional phase of every arrival.
    pub fn run_fractional(&mut self) -> Result<()> {
        for j in 0..self.problem.graph.n_online() {
            self.allocate(j)?;
        }
        Ok(())
    }

    /// Clears the rounding of a previous trial, keeping the fractional phase.
    pub fn reset_rounding(&mut self) {
        self.realized = 0;
    }

    pub fn realized_mask(&self) -> EdgeMask {
        self.realized
    }
}

impl OnlineAlgorithm for SubState<'_> {
    fn allocate(&mut self, j: usize) -> Result<Vec<(usize, f64)>> {
        if !self.rows[j].is_empty() || self.invariant.iter().any(|s| s.j == j) {
            // fractional phase is deterministic; replay it for later trials
            return Ok(self.rows[j].clone());
        }
        let arcs = &self.problem.graph.arcs[j];
        let cands: Vec<usize> = arcs.iter().map(|n| n.edge).collect();
        let oracle = Checked(self.problem);
        let support = self.x.x.iter().filter(|&&v| v > 0.0 && v < 1.0).count();
        let rest = if support <= self.cfg.limit {
            Restriction::exact(&oracle, &self.x, &cands, self.cfg.limit)?
        } else {
            self.sampled_arrivals += 1;
            Restriction::sampled(&oracle, &self.x, &cands, self.cfg.samples, &mut self.rng)?
        };
        self.max_stderr = self.max_stderr.max(rest.stderr);
        if rest.max_value() > 1.0 + TOL {
            return Err(Error::ScalingViolation {
                mask: 0,
                value: rest.max_value(),
            });
        }
        let mut y = vec![0.0; cands.len()];
        let mut total = 0.0;
        let mut c0 = rest.value(&y);
        while total < 1.0 - FULL && self.beta < 1.0 {
            let partials: Vec<f64> = (0..y.len()).map(|k| rest.partial(&y, k)).collect();
            let Some(k) = argmax_by(&partials, |_| true, |&d| d) else {
                break;
            };
            let d = partials[k];
            let s = self.cfg.eta.min(1.0 - total);
            let c1 = c0 + d * s;
            let beta0 = self.beta;
            let d_beta = big_g(c1) - big_g(c0);
            // integral of d (1 - beta(t)) with beta(t) = beta0 + G(c0 + d t) - G(c0)
            let d_alpha = d * s * (1.0 - beta0 + big_g(c0)) - (big_h(c1) - big_h(c0));
            self.beta += d_beta;
            self.alpha[j] += d_alpha;
            y[k] += s;
            total += s;
            c0 = c1;
            if self.cfg.trace {
                self.steps.push(StepRecord {
                    j,
                    i: arcs[k].i,
                    x: y[k],
                    b: self.beta,
                    a: self.alpha[j],
                    y: None,
                    d_primal: d * s,
                    d_dual: d_alpha + d_beta,
                });
            }
        }
        for (e, v) in cands.iter().zip(&y) {
            self.x.x[*e] = *v;
        }
        self.c_value = c0;
        self.invariant.push(InvariantSample {
            j,
            beta: self.beta,
            g_of_c: big_g(c0),
        });
        let row: Vec<(usize, f64)> = arcs
            .iter()
            .zip(&y)
            .filter(|(_, &v)| v > 0.0)
            .map(|(n, &v)| (n.i, v))
            .collect();
        self.rows[j] = row.clone();
        Ok(row)
    }

    fn commit(&mut self, j: usize, choice: Option<usize>) {
        if let Some(i) = choice {
            let e = self
                .problem
                .graph
                .nbr(i, j)
                .expect("choice is a neighbor")
                .edge;
            self.realized |= 1u64 << e;
        }
    }

    fn primal(&self) -> f64 {
        self.problem.value(self.realized).unwrap_or(f64::NAN)
    }

    fn dual(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta
    }

    fn n_online(&self) -> usize {
        self.alpha.len()
    }
}

/// Divides a set function by `bound` so that its values fit in [0, 1].
pub struct ScaledOracle<'a> {
    pub inner: &'a dyn SetFunction,
    pub bound: f64,
}

impl ScaledOracle<'_> {
    /// Maps a scaled value back to the original units.
    pub fn unscale(&self, v: f64) -> f64 {
        v * self.bound
    }
}

impl SetFunction for ScaledOracle<'_> {
    fn ground_size(&self) -> usize {
        self.inner.ground_size()
    }

    fn value(&self, mask: EdgeMask) -> Result<f64> {
        Ok(self.inner.value(mask)? / self.bound)
    }
}

/// Scales a table oracle by its largest entry; returns the factor to multiply results by.
pub fn scale_table(spec: &SubAdditiveSpec) -> (SubAdditiveSpec, f64) {
    let bound = spec.table.iter().map(|e| e.1).fold(0.0, f64::max);
    if bound <= 1.0 {
        return (spec.clone(), 1.0);
    }
    let mut out = spec.clone();
    for e in &mut out.table {
        e.1 /= bound;
    }
    (out, bound)
}

impl LoopConfig {
    pub fn sub(&self) -> SubConfig {
        SubConfig {
            eta: self.eta,
            trace: self.trace,
            ..SubConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::potential::RATE;
    use crate::model::{Edge, EdgeKey, Instance, OfflineVertex, OnlineVertex, RewardModel};

    fn problem(offline: usize, rows: &[&[u64]], table: impl Fn(u64) -> f64) -> Problem {
        let mut edges = Vec::new();
        let online: Vec<OnlineVertex> = rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                for &to in r.iter() {
                    edges.push(EdgeKey(to, k as u64));
                }
                OnlineVertex {
                    id: k as u64,
                    edges: r
                        .iter()
                        .map(|&to| Edge {
                            to,
                            w: 1.0,
                            p: None,
                        })
                        .collect(),
                }
            })
            .collect();
        let m = edges.len();
        let tab = (0..1u64 << m).map(|s| (s, table(s))).collect();
        Problem::new(Instance {
            model: RewardModel::SubAdditive(SubAdditiveSpec {
                edges,
                table: tab,
                callback: None,
            }),
            offline: (0..offline as u64)
                .map(|id| OfflineVertex {
                    id,
                    budget: None,
                    weight: None,
                })
                .collect(),
            online,
            meta: None,
        })
        .unwrap()
    }

    fn cfg() -> SubConfig {
        SubConfig {
            trace: true,
            ..SubConfig::default()
        }
    }

    #[test]
    fn single_edge_closed_form() {
        let p = problem(1, &[&[0]], |s| 0.7 * s as f64);
        let mut st = SubState::new(&p, cfg()).unwrap();
        st.run_fractional().unwrap();
        assert_eq!(st.x.x, vec![1.0]);
        assert!((st.beta - big_g(0.7)).abs() < 1e-12);
        for step in &st.steps {
            assert!((step.rate().unwrap() - RATE).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_oracle_still_fills() {
        let p = problem(2, &[&[0, 1]], |_| 0.0);
        let mut st = SubState::new(&p, cfg()).unwrap();
        st.run_fractional().unwrap();
        assert_eq!(st.beta, 0.0);
        assert_eq!(st.alpha[0], 0.0);
        assert_eq!(
            st.x.x,
            vec![1.0, 0.0],
            "ties go to the lowest id every step"
        );
    }

    #[test]
    fn modular_goes_to_best_edge() {
        let p = problem(2, &[&[0, 1]], |s| {
            0.3 * (s & 1) as f64 + 0.5 * (s >> 1 & 1) as f64
        });
        let mut st = SubState::new(&p, cfg()).unwrap();
        st.run_fractional().unwrap();
        assert_eq!(st.x.x, vec![0.0, 1.0]);
        assert!((st.c_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaling_violation_detected() {
        let mut p = problem(1, &[&[0]], |s| 0.5 * s as f64);
        if let CompiledModel::SubAdditive(_) = &p.model {
            let mut inst = p.instance.clone();
            if let RewardModel::SubAdditive(spec) = &mut inst.model {
                spec.callback = Some(std::sync::Arc::new(|s| 2.0 * s as f64));
            }
            p = Problem::new(inst).unwrap();
        }
        let mut st = SubState::new(&p, cfg()).unwrap();
        assert!(matches!(
            st.run_fractional(),
            Err(Error::ScalingViolation { .. })
        ));
    }

    #[test]
    fn scale_table_divides_by_max() {
        let spec = SubAdditiveSpec {
            edges: vec![EdgeKey(0, 0)],
            table: vec![(0, 0.0), (1, 4.0)],
            callback: None,
        };
        let (out, f) = scale_table(&spec);
        assert_eq!(f, 4.0);
        assert_eq!(out.table[1].1, 1.0);
    }
}
