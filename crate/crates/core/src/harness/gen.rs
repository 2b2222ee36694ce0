//! Instance generators.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ConcaveSpec, Edge, EdgeKey, Instance, InstanceMeta, OfflineVertex, OnlineVertex, RewardModel,
    RngStream, SubAdditiveSpec,
};

/// Online vertex j (in arrival order) sees offline pi(i) for every i >= j, so
/// the edges (pi(j), j) form a perfect matching and OPT = n.
pub fn gen_upper_triangular(n: usize, rng: &mut RngStream) -> Result<Instance> {
    if n == 0 {
        return Err(Error::Config(
            "upper-triangular size must be at least 1".into(),
        ));
    }
    let mut pi: Vec<usize> = (0..n).collect();
    pi.shuffle(rng);
    let online = (0..n)
        .map(|j| OnlineVertex {
            id: j as u64,
            edges: (j..n)
                .map(|i| Edge {
                    to: pi[i] as u64,
                    w: 1.0,
                    p: None,
                })
                .collect(),
        })
        .collect();
    Ok(Instance {
        model: RewardModel::FreeDisposal,
        offline: (0..n as u64).map(plain_offline).collect(),
        online,
        meta: Some(InstanceMeta {
            generator: format!("upper_triangular(n={n})"),
            known_opt: Some(n as f64),
            permutation: Some(pi),
        }),
    })
}

fn plain_offline(id: u64) -> OfflineVertex {
    OfflineVertex {
        id,
        budget: None,
        weight: None,
    }
}

/// Edge weight (or success probability) distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDist {
    /// Every weight is 1.
    Unit,
    /// Uniform on (lo, hi].
    Uniform { lo: f64, hi: f64 },
    /// Uniform on the multiples of `step` in (0, max].
    Grid { step: f64, max: f64 },
    /// Uniform over the listed values.
    Choice { values: Vec<f64> },
}

impl Default for WeightDist {
    fn default() -> Self {
        WeightDist::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl WeightDist {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            WeightDist::Unit => true,
            WeightDist::Uniform { lo, hi } => *lo >= 0.0 && hi > lo,
            WeightDist::Grid { step, max } => *step > 0.0 && max >= step,
            WeightDist::Choice { values } => !values.is_empty() && values.iter().all(|v| *v > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid weight distribution {self:?}"
            )))
        }
    }

    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match self {
            WeightDist::Unit => 1.0,
            // 1 - u lies in (0, 1]
            WeightDist::Uniform { lo, hi } => lo + (hi - lo) * (1.0 - rng.uniform()),
            WeightDist::Grid { step, max } => {
                let k = (max / step + 1e-9).floor().max(1.0) as u64;
                step * (1 + (rng.uniform() * k as f64) as u64).min(k) as f64
            }
            WeightDist::Choice { values } => {
                values[((rng.uniform() * values.len() as f64) as usize).min(values.len() - 1)]
            }
        }
    }
}

/// Shape of a generated sub-additive table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubKind {
    /// c(M) = sum of edge values.
    Modular,
    /// c(M) = max over a few additive clauses.
    Xos { clauses: usize },
    /// c(M) = sum_i min(1, sum of i's edge values).
    Budgeted,
}

/// Reward model and its parameters for [`gen_random`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    FreeDisposal,
    AdditiveBudget {
        budget: f64,
    },
    /// Edge weights are success probabilities; offline weights are drawn from `offline_weight`.
    StochasticReward {
        offline_weight: WeightDist,
    },
    /// Table over all edges, divided by its maximum so values lie in [0, 1].
    SubAdditive {
        sub: SubKind,
    },
    ConcaveSeparable {
        shape: ConcaveSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n_offline: usize,
    pub n_online: usize,
    pub density: f64,
    #[serde(default)]
    pub weights: WeightDist,
    pub model: ModelParams,
}

/// Table-size limit for generated sub-additive instances.
pub const SUB_GEN_EDGES: usize = 16;

/// Random bipartite instance: each potential edge is present independently
/// with probability `density`. Online vertices of degree 0 are kept.
pub fn gen_random(spec: &RandomSpec, rng: &mut RngStream) -> Result<Instance> {
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::Config(format!(
            "density {} must lie in (0, 1]",
            spec.density
        )));
    }
    spec.weights.validate()?;
    let (nl, nr) = (spec.n_offline as u64, spec.n_online as u64);
    let mut online = Vec::with_capacity(spec.n_online);
    for j in 0..nr {
        let mut edges = Vec::new();
        for i in 0..nl {
            if spec.density >= 1.0 || rng.uniform() < spec.density {
                let w = spec.weights.draw(rng);
                edges.push(Edge { to: i, w, p: None });
            }
        }
        online.push(OnlineVertex { id: j, edges });
    }
    let mut offline: Vec<OfflineVertex> = (0..nl).map(plain_offline).collect();
    let model = match &spec.model {
        ModelParams::FreeDisposal => RewardModel::FreeDisposal,
        ModelParams::AdditiveBudget { budget } => {
            for v in &mut offline {
                v.budget = Some(*budget);
            }
            RewardModel::AdditiveBudget
        }
        ModelParams::StochasticReward { offline_weight } => {
            offline_weight.validate()?;
            for v in &mut offline {
                v.weight = Some(offline_weight.draw(rng));
            }
            for j in &mut online {
                for e in &mut j.edges {
                    if e.w > 1.0 {
                        return Err(Error::Config(
                            "success probabilities must not exceed 1".into(),
                        ));
                    }
                    e.p = Some(e.w);
                    e.w = 0.0;
                }
            }
            RewardModel::StochasticReward
        }
        ModelParams::SubAdditive { sub } => {
            RewardModel::SubAdditive(sub_table(*sub, &online, rng)?)
        }
        ModelParams::ConcaveSeparable { shape } => RewardModel::ConcaveSeparable {
            functions: vec![shape.clone()],
        },
    };
    Ok(Instance {
        model,
        offline,
        online,
        meta: Some(InstanceMeta {
            generator: format!(
                "random(n_offline={}, n_online={}, density={})",
                spec.n_offline, spec.n_online, spec.density
            ),
            known_opt: None,
            permutation: None,
        }),
    })
}

/// Builds a complete table for the generated edges; edge values are the drawn weights.
fn sub_table(
    kind: SubKind,
    online: &[OnlineVertex],
    rng: &mut RngStream,
) -> Result<SubAdditiveSpec> {
    let keyed: Vec<(EdgeKey, f64)> = online
        .iter()
        .flat_map(|j| j.edges.iter().map(move |e| (EdgeKey(e.to, j.id), e.w)))
        .collect();
    let m = keyed.len();
    if m > SUB_GEN_EDGES {
        return Err(Error::EnumerationLimit {
            support: m,
            limit: SUB_GEN_EDGES,
        });
    }
    let clauses: Vec<Vec<f64>> = match kind {
        SubKind::Xos { clauses } => (0..clauses.max(1))
            .map(|_| keyed.iter().map(|(_, w)| w * rng.uniform()).collect())
            .collect(),
        _ => Vec::new(),
    };
    let raw = |mask: u64| -> f64 {
        let members = (0..m).filter(|k| mask >> k & 1 == 1);
        match kind {
            SubKind::Modular => members.map(|k| keyed[k].1).sum(),
            SubKind::Xos { .. } => clauses
                .iter()
                .map(|c| {
                    (0..m)
                        .filter(|k| mask >> k & 1 == 1)
                        .map(|k| c[k])
                        .sum::<f64>()
                })
                .fold(0.0, f64::max),
            SubKind::Budgeted => {
                let mut load = std::collections::BTreeMap::<u64, f64>::new();
                for k in members {
                    *load.entry(keyed[k].0 .0).or_default() += keyed[k].1;
                }
                load.values().map(|s| s.min(1.0)).sum()
            }
        }
    };
    let mut table: Vec<(u64, f64)> = (0..1u64 << m).map(|s| (s, raw(s))).collect();
    let top = table.iter().map(|e| e.1).fold(0.0, f64::max);
    if top > 0.0 {
        for e in &mut table {
            e.1 /= top;
        }
    }
    Ok(SubAdditiveSpec {
        edges: keyed.into_iter().map(|k| k.0).collect(),
        table,
        callback: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, Problem};

    #[test]
    fn upper_triangular_shape() {
        let inst = gen_upper_triangular(3, &mut RngStream::new(5)).unwrap();
        let deg: Vec<usize> = inst.online.iter().map(|v| v.edges.len()).collect();
        assert_eq!(deg, vec![3, 2, 1]);
        let pi = inst.meta.as_ref().unwrap().permutation.clone().unwrap();
        for (j, v) in inst.online.iter().enumerate() {
            assert!(v.edges.iter().any(|e| e.to == pi[j] as u64));
        }
        let one = gen_upper_triangular(1, &mut RngStream::new(0)).unwrap();
        assert_eq!(one.online[0].edges.len(), 1);
    }

    #[test]
    fn dense_is_complete_and_deterministic() {
        let spec = RandomSpec {
            n_offline: 3,
            n_online: 4,
            density: 1.0,
            weights: WeightDist::default(),
            model: ModelParams::FreeDisposal,
        };
        let a = gen_random(&spec, &mut RngStream::new(1)).unwrap();
        let b = gen_random(&spec, &mut RngStream::new(1)).unwrap();
        assert!(a.online.iter().all(|v| v.edges.len() == 3));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn edge_count_matches_density() {
        let spec = RandomSpec {
            n_offline: 3,
            n_online: 6,
            density: 0.5,
            weights: WeightDist::Unit,
            model: ModelParams::FreeDisposal,
        };
        let n = 4000;
        let total: usize = (0..n)
            .map(|s| {
                gen_random(&spec, &mut RngStream::new(s))
                    .unwrap()
                    .online
                    .iter()
                    .map(|v| v.edges.len())
                    .sum::<usize>()
            })
            .sum();
        let mean = total as f64 / n as f64;
        // binomial(18, 1/2) has sd 2.12; the mean of 4000 draws has sd 0.034
        assert!((mean - 9.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn grid_weights_on_grid() {
        let d = WeightDist::Grid {
            step: 0.05,
            max: 0.2,
        };
        let mut rng = RngStream::new(2);
        for _ in 0..200 {
            let w = d.draw(&mut rng);
            let k = (w / 0.05).round();
            assert!((1.0..=4.0).contains(&k) && (w - k * 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn generated_sub_tables_validate() {
        for sub in [
            SubKind::Modular,
            SubKind::Xos { clauses: 3 },
            SubKind::Budgeted,
        ] {
            let spec = RandomSpec {
                n_offline: 2,
                n_online: 3,
                density: 1.0,
                weights: WeightDist::default(),
                model: ModelParams::SubAdditive { sub },
            };
            let inst = gen_random(&spec, &mut RngStream::new(7)).unwrap();
            assert!(validate_instance(&inst).is_empty(), "{sub:?}");
            Problem::new(inst).unwrap();
        }
    }

    #[test]
    fn stochastic_moves_weights_to_probabilities() {
        let spec = RandomSpec {
            n_offline: 2,
            n_online: 3,
            density: 1.0,
            weights: WeightDist::Uniform { lo: 0.0, hi: 0.1 },
            model: ModelParams::StochasticReward {
                offline_weight: WeightDist::Unit,
            },
        };
        let inst = gen_random(&spec, &mut RngStream::new(3)).unwrap();
        assert!(inst
            .online
            .iter()
            .flat_map(|v| &v.edges)
            .all(|e| e.p.unwrap() <= 0.1 && e.w == 0.0));
        assert!(validate_instance(&inst).is_empty());
    }
}
