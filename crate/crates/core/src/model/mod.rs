//! Instances, reward models, realized assignments and their validation.

mod concave_fn;
pub mod potential;
mod rng;
mod rounding;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multilinear::{EdgeMask, SetFunction, MAX_EDGES};

pub use concave_fn::{ConcaveFn, ConcaveSpec};
pub use rng::RngStream;
pub use rounding::{sample_assignment, ROW_TOLERANCE};

/// Absolute tolerance for numeric comparisons.
pub const TOL: f64 = 1e-9;

/// Table size up to which sub-additivity is checked on every pair of subsets.
pub const PAIR_CHECK_EDGES: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    pub model: RewardModel,
    pub offline: Vec<OfflineVertex>,
    pub online: Vec<OnlineVertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineVertex {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineVertex {
    pub id: u64,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub to: u64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

/// Generator provenance kept alongside an instance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_opt: Option<f64>,
    /// Hidden permutation of the upper-triangular family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardModel {
    FreeDisposal,
    AdditiveBudget,
    StochasticReward,
    SubAdditive(SubAdditiveSpec),
    ConcaveSeparable {
        /// One shape shared by every offline vertex, or one per offline vertex in id order.
        functions: Vec<ConcaveSpec>,
    },
}

impl RewardModel {
    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::FreeDisposal => "free_disposal",
            RewardModel::AdditiveBudget => "additive_budget",
            RewardModel::StochasticReward => "stochastic_reward",
            RewardModel::SubAdditive(_) => "sub_additive",
            RewardModel::ConcaveSeparable { .. } => "concave_separable",
        }
    }
}

pub type OracleFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

/// Sub-additive reward given over a declared edge order: bit `k` of a mask
/// stands for `edges[k]`.
#[derive(Clone, Default, Serialize, Deserialize)]
pub struct SubAdditiveSpec {
    pub edges: Vec<EdgeKey>,
    #[serde(default)]
    pub table: Vec<(u64, f64)>,
    #[serde(skip)]
    pub callback: Option<OracleFn>,
}

impl fmt::Debug for SubAdditiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubAdditiveSpec")
            .field("edges", &self.edges)
            .field("table_len", &self.table.len())
            .field("callback", &self.callback.is_some())
            .finish()
    }
}

/// (offline id, online id).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey(pub u64, pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: String,
    pub rule: String,
}

impl Violation {
    fn new(subject: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            subject: subject.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)
    }
}

/// Checks every instance invariant and returns the violations found.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for v in &inst.offline {
        if !ids.insert(v.id) {
            out.push(Violation::new(
                format!("offline {}", v.id),
                "duplicate offline id",
            ));
        }
        if let Some(b) = v.budget {
            if !(b > 0.0 && b.is_finite()) {
                out.push(Violation::new(
                    format!("offline {}", v.id),
                    "budget must be > 0",
                ));
            }
        }
        if let Some(w) = v.weight {
            if !(w >= 0.0 && w.is_finite()) {
                out.push(Violation::new(
                    format!("offline {}", v.id),
                    "weight must be >= 0",
                ));
            }
        }
        match inst.model {
            RewardModel::AdditiveBudget if v.budget.is_none() => out.push(Violation::new(
                format!("offline {}", v.id),
                "additive budget model needs a budget",
            )),
            RewardModel::StochasticReward if !matches!(v.weight, Some(w) if w > 0.0) => {
                out.push(Violation::new(
                    format!("offline {}", v.id),
                    "stochastic model needs weight > 0",
                ))
            }
            _ => {}
        }
    }
    let mut prev: Option<u64> = None;
    for j in &inst.online {
        if let Some(p) = prev {
            if j.id <= p {
                out.push(Violation::new(
                    format!("online {}", j.id),
                    "arrival ids must strictly increase",
                ));
            }
        }
        prev = Some(j.id);
        let mut seen = HashSet::new();
        for e in &j.edges {
            let subject = format!("edge ({}, {})", e.to, j.id);
            if !ids.contains(&e.to) {
                out.push(Violation::new(&subject, "unknown offline id"));
            }
            if !seen.insert(e.to) {
                out.push(Violation::new(
                    &subject,
                    "more than one edge to the same offline vertex",
                ));
            }
            if !(e.w >= 0.0 && e.w.is_finite()) {
                out.push(Violation::new(&subject, "weight must be >= 0"));
            }
            match e.p {
                Some(p) if !(0.0..=1.0).contains(&p) => {
                    out.push(Violation::new(&subject, "probability outside [0, 1]"))
                }
                None if matches!(inst.model, RewardModel::StochasticReward) => out.push(
                    Violation::new(&subject, "stochastic model needs a probability"),
                ),
                _ => {}
            }
        }
    }
    match &inst.model {
        RewardModel::SubAdditive(spec) => validate_sub(inst, spec, &mut out),
        RewardModel::ConcaveSeparable { functions } => {
            if functions.len() != 1 && functions.len() != inst.offline.len() {
                out.push(Violation::new(
                    "model",
                    "concave model needs one shared shape or one shape per offline vertex",
                ));
            }
            for (k, f) in functions.iter().enumerate() {
                if let Err(e) = ConcaveFn::new(f.clone()) {
                    out.push(Violation::new(format!("concave shape {k}"), e.to_string()));
                }
            }
        }
        _ => {}
    }
    out
}

fn validate_sub(inst: &Instance, spec: &SubAdditiveSpec, out: &mut Vec<Violation>) {
    let m = spec.edges.len();
    if m > MAX_EDGES {
        out.push(Violation::new(
            "model",
            format!("sub-additive oracle supports at most {MAX_EDGES} edges"),
        ));
        return;
    }
    let declared: HashSet<EdgeKey> = spec.edges.iter().copied().collect();
    if declared.len() != m {
        out.push(Violation::new(
            "model",
            "duplicate edge in the declared edge order",
        ));
    }
    let actual: HashSet<EdgeKey> = inst
        .online
        .iter()
        .flat_map(|j| j.edges.iter().map(move |e| EdgeKey(e.to, j.id)))
        .collect();
    for k in declared.difference(&actual) {
        out.push(Violation::new(
            format!("edge ({}, {})", k.0, k.1),
            "declared edge missing from instance",
        ));
    }
    for k in actual.difference(&declared) {
        out.push(Violation::new(
            format!("edge ({}, {})", k.0, k.1),
            "instance edge missing from declared order",
        ));
    }
    if spec.callback.is_some() {
        return;
    }
    let table: HashMap<u64, f64> = spec.table.iter().copied().collect();
    if m <= crate::multilinear::ENUMERATION_LIMIT {
        let full = 1u64 << m;
        if (0..full).any(|mask| !table.contains_key(&mask)) {
            out.push(Violation::new(
                "model",
                "oracle table misses subsets of the declared edges",
            ));
            return;
        }
    }
    for (&mask, &v) in &table {
        if m < 64 && mask >> m != 0 {
            out.push(Violation::new(
                format!("subset {mask:#x}"),
                "mask references undeclared edges",
            ));
        }
        if !(0.0..=1.0 + TOL).contains(&v) {
            out.push(Violation::new(
                format!("subset {mask:#x}"),
                "oracle value outside [0, 1]",
            ));
        }
    }
    if table.get(&0).is_some_and(|&v| v.abs() > TOL) {
        out.push(Violation::new("subset 0x0", "empty set must have value 0"));
    }
    if m <= PAIR_CHECK_EDGES {
        let full = 1u64 << m;
        'outer: for a in 0..full {
            for b in a..full {
                if table[&(a | b)] > table[&a] + table[&b] + TOL {
                    out.push(Violation::new(
                        format!("subsets {a:#x}, {b:#x}"),
                        "violates sub-additivity",
                    ));
                    break 'outer;
                }
            }
        }
    }
}

/// Neighbor of an online vertex in the compiled graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nbr {
    /// Offline index (position in id order).
    pub i: usize,
    pub w: f64,
    pub p: f64,
    /// Global edge index.
    pub edge: usize,
}

/// Index-based view of an instance. Offline vertices are indexed in increasing
/// id order, online vertices in arrival order, edges by arrival then offline index.
#[derive(Debug, Clone)]
pub struct Graph {
    pub offline_ids: Vec<u64>,
    pub online_ids: Vec<u64>,
    pub budget: Vec<f64>,
    pub weight: Vec<f64>,
    pub arcs: Vec<Vec<Nbr>>,
    /// (offline index, online index) per edge.
    pub edges: Vec<(usize, usize)>,
    pub edge_w: Vec<f64>,
}

impl Graph {
    pub fn n_offline(&self) -> usize {
        self.offline_ids.len()
    }

    pub fn n_online(&self) -> usize {
        self.online_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nbr(&self, i: usize, j: usize) -> Option<&Nbr> {
        self.arcs[j].iter().find(|a| a.i == i)
    }

    /// Neighbors (online index, arc) of offline vertex `i`.
    pub fn offline_nbrs(&self, i: usize) -> Vec<(usize, Nbr)> {
        (0..self.n_online())
            .filter_map(|j| self.nbr(i, j).map(|a| (j, *a)))
            .collect()
    }

    fn build(inst: &Instance) -> Self {
        let mut order: Vec<usize> = (0..inst.offline.len()).collect();
        order.sort_by_key(|&k| inst.offline[k].id);
        let index: HashMap<u64, usize> = order
            .iter()
            .enumerate()
            .map(|(pos, &k)| (inst.offline[k].id, pos))
            .collect();
        let offline_ids = order.iter().map(|&k| inst.offline[k].id).collect();
        let budget = order
            .iter()
            .map(|&k| inst.offline[k].budget.unwrap_or(f64::INFINITY))
            .collect();
        let weight = order
            .iter()
            .map(|&k| inst.offline[k].weight.unwrap_or(1.0))
            .collect();
        let mut arcs = Vec::with_capacity(inst.online.len());
        let mut edges = Vec::new();
        let mut edge_w = Vec::new();
        for (j, v) in inst.online.iter().enumerate() {
            let mut row: Vec<Nbr> = v
                .edges
                .iter()
                .map(|e| Nbr {
                    i: index[&e.to],
                    w: e.w,
                    p: e.p.unwrap_or(1.0),
                    edge: 0,
                })
                .collect();
            row.sort_by_key(|a| a.i);
            for a in &mut row {
                a.edge = edges.len();
                edges.push((a.i, j));
                edge_w.push(a.w);
            }
            arcs.push(row);
        }
        Self {
            offline_ids,
            online_ids: inst.online.iter().map(|v| v.id).collect(),
            budget,
            weight,
            arcs,
            edges,
            edge_w,
        }
    }
}

/// Compiled sub-additive oracle over graph edge indices.
#[derive(Clone)]
pub struct SubOracle {
    /// Declared bit for each graph edge.
    bit: Vec<u32>,
    identity: bool,
    table: HashMap<u64, f64>,
    callback: Option<OracleFn>,
}

impl fmt::Debug for SubOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubOracle")
            .field("edges", &self.bit.len())
            .field("table_len", &self.table.len())
            .finish()
    }
}

impl SubOracle {
    fn declared_mask(&self, mask: EdgeMask) -> u64 {
        if self.identity {
            return mask;
        }
        let mut out = 0u64;
        let mut m = mask;
        while m != 0 {
            let e = m.trailing_zeros() as usize;
            out |= 1u64 << self.bit[e];
            m &= m - 1;
        }
        out
    }

    pub fn value(&self, mask: EdgeMask) -> Result<f64> {
        let d = self.declared_mask(mask);
        if let Some(cb) = &self.callback {
            return Ok(cb(d));
        }
        self.table
            .get(&d)
            .copied()
            .ok_or(Error::OracleGap { mask: d })
    }
}

#[derive(Debug, Clone)]
pub enum CompiledModel {
    FreeDisposal,
    AdditiveBudget,
    StochasticReward,
    SubAdditive(SubOracle),
    ConcaveSeparable(Vec<ConcaveFn>),
}

/// A validated instance together with its compiled graph and reward.
#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    pub graph: Graph,
    pub model: CompiledModel,
}

impl Problem {
    pub fn new(instance: Instance) -> Result<Self> {
        let violations = validate_instance(&instance);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidInstance(msg.join("; ")));
        }
        let graph = Graph::build(&instance);
        let model = match &instance.model {
            RewardModel::FreeDisposal => CompiledModel::FreeDisposal,
            RewardModel::AdditiveBudget => CompiledModel::AdditiveBudget,
            RewardModel::StochasticReward => CompiledModel::StochasticReward,
            RewardModel::SubAdditive(spec) => {
                let pos: HashMap<EdgeKey, u32> = spec
                    .edges
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (*e, k as u32))
                    .collect();
                let bit: Vec<u32> = graph
                    .edges
                    .iter()
                    .map(|&(i, j)| pos[&EdgeKey(graph.offline_ids[i], graph.online_ids[j])])
                    .collect();
                let identity = bit.iter().enumerate().all(|(k, &b)| b as usize == k);
                CompiledModel::SubAdditive(SubOracle {
                    bit,
                    identity,
                    table: spec.table.iter().copied().collect(),
                    callback: spec.callback.clone(),
                })
            }
            RewardModel::ConcaveSeparable { functions } => {
                let fs: Vec<ConcaveFn> = functions
                    .iter()
                    .map(|s| ConcaveFn::new(s.clone()))
                    .collect::<Result<_>>()?;
                let fs = if fs.len() == 1 {
                    vec![fs[0].clone(); graph.n_offline()]
                } else {
                    fs
                };
                CompiledModel::ConcaveSeparable(fs)
            }
        };
        Ok(Self {
            instance,
            graph,
            model,
        })
    }

    pub fn model_name(&self) -> &'static str {
        self.instance.model.name()
    }

    /// c(M) for a realized assignment.
    pub fn reward(&self, r: &Realization) -> Result<f64> {
        r.check(&self.graph)?;
        self.reward_unchecked(&r.assign)
    }

    /// c(M) for `assign[j]` = offline index or `None`; edges must exist.
    pub fn reward_unchecked(&self, assign: &[Option<usize>]) -> Result<f64> {
        let g = &self.graph;
        let edges = assign
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.map(|i| (i, j)))
            .map(|(i, j)| *g.nbr(i, j).expect("checked realization"));
        self.reward_of_arcs(edges)
    }

    /// c of an arbitrary edge set (several edges per online vertex allowed).
    pub fn reward_of_arcs(&self, arcs: impl Iterator<Item = Nbr>) -> Result<f64> {
        let g = &self.graph;
        let l = g.n_offline();
        Ok(match &self.model {
            CompiledModel::FreeDisposal => {
                let mut best = vec![0.0f64; l];
                for a in arcs {
                    best[a.i] = best[a.i].max(a.w);
                }
                best.iter().sum()
            }
            CompiledModel::AdditiveBudget => {
                let mut load = vec![0.0f64; l];
                for a in arcs {
                    load[a.i] += a.w;
                }
                load.iter().zip(&g.budget).map(|(s, b)| s.min(*b)).sum()
            }
            CompiledModel::StochasticReward => {
                let mut load = vec![0.0f64; l];
                for a in arcs {
                    load[a.i] += a.p;
                }
                load.iter()
                    .zip(&g.weight)
                    .map(|(s, w)| w * s.min(1.0))
                    .sum()
            }
            CompiledModel::SubAdditive(o) => {
                let mask = arcs.fold(0u64, |m, a| m | (1u64 << a.edge));
                o.value(mask)?
            }
            CompiledModel::ConcaveSeparable(fs) => {
                let mut load = vec![0.0f64; l];
                for a in arcs {
                    load[a.i] += a.w;
                }
                load.iter().zip(fs).map(|(u, f)| f.p(*u)).sum()
            }
        })
    }
}

impl SetFunction for Problem {
    fn ground_size(&self) -> usize {
        self.graph.n_edges()
    }

    fn value(&self, mask: EdgeMask) -> Result<f64> {
        if let CompiledModel::SubAdditive(o) = &self.model {
            return o.value(mask);
        }
        let g = &self.graph;
        let arcs = (0..g.n_edges())
            .filter(|e| mask >> e & 1 == 1)
            .map(|e| *g.nbr(g.edges[e].0, g.edges[e].1).unwrap());
        self.reward_of_arcs(arcs)
    }
}

/// A realized assignment: `assign[j]` is the offline index matched to online
/// vertex `j`, if any.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Realization {
    pub assign: Vec<Option<usize>>,
    /// Success draws of the stochastic model, aligned with `assign`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<Vec<bool>>,
}

impl Realization {
    pub fn empty(n_online: usize) -> Self {
        Self {
            assign: vec![None; n_online],
            success: None,
        }
    }

    pub fn check(&self, g: &Graph) -> Result<()> {
        if self.assign.len() != g.n_online() {
            return Err(Error::InvalidRealization(format!(
                "{} entries for {} online vertices",
                self.assign.len(),
                g.n_online()
            )));
        }
        for (j, c) in self.assign.iter().enumerate() {
            if let Some(i) = *c {
                if i >= g.n_offline() || g.nbr(i, j).is_none() {
                    return Err(Error::InvalidRealization(format!(
                        "online {} assigned to a non-neighbor",
                        g.online_ids[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Online id to offline id view.
    pub fn to_ids(&self, g: &Graph) -> BTreeMap<u64, Option<u64>> {
        self.assign
            .iter()
            .enumerate()
            .map(|(j, c)| (g.online_ids[j], c.map(|i| g.offline_ids[i])))
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn single_offline(model: RewardModel, budget: Option<f64>, weights: &[f64]) -> Instance {
        Instance {
            model,
            offline: vec![OfflineVertex {
                id: 0,
                budget,
                weight: None,
            }],
            online: weights
                .iter()
                .enumerate()
                .map(|(k, &w)| OnlineVertex {
                    id: k as u64,
                    edges: vec![Edge { to: 0, w, p: None }],
                })
                .collect(),
            meta: None,
        }
    }

    fn two_by_two() -> Instance {
        Instance {
            model: RewardModel::FreeDisposal,
            offline: vec![
                OfflineVertex {
                    id: 0,
                    budget: None,
                    weight: None,
                },
                OfflineVertex {
                    id: 1,
                    budget: None,
                    weight: None,
                },
            ],
            online: vec![
                OnlineVertex {
                    id: 0,
                    edges: vec![
                        Edge {
                            to: 0,
                            w: 1.0,
                            p: None,
                        },
                        Edge {
                            to: 1,
                            w: 2.0,
                            p: None,
                        },
                    ],
                },
                OnlineVertex {
                    id: 1,
                    edges: vec![Edge {
                        to: 1,
                        w: 1.0,
                        p: None,
                    }],
                },
            ],
            meta: None,
        }
    }

    #[test]
    fn valid_instance_has_no_violations() {
        assert!(validate_instance(&two_by_two()).is_empty());
    }

    #[test]
    fn unknown_offline_reported() {
        let mut inst = two_by_two();
        inst.online[1].edges[0].to = 9;
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("unknown offline"));
    }

    #[test]
    fn probability_range_reported() {
        let mut inst = two_by_two();
        inst.online[0].edges[0].p = Some(1.3);
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("probability"));
    }

    #[test]
    fn non_increasing_arrivals_reported() {
        let mut inst = two_by_two();
        inst.online[1].id = 0;
        assert_eq!(validate_instance(&inst).len(), 1);
    }

    #[test]
    fn free_disposal_keeps_heaviest() {
        let p = Problem::new(single_offline(RewardModel::FreeDisposal, None, &[3.0, 5.0])).unwrap();
        let r = Realization {
            assign: vec![Some(0), Some(0)],
            success: None,
        };
        assert_eq!(p.reward(&r).unwrap(), 5.0);
    }

    #[test]
    fn additive_caps_at_budget() {
        let p = Problem::new(single_offline(
            RewardModel::AdditiveBudget,
            Some(1.0),
            &[0.6, 0.6],
        ))
        .unwrap();
        let r = Realization {
            assign: vec![Some(0), Some(0)],
            success: None,
        };
        assert_eq!(p.reward(&r).unwrap(), 1.0);
    }

    #[test]
    fn empty_realization_is_zero() {
        let p = Problem::new(two_by_two()).unwrap();
        assert_eq!(p.reward(&Realization::empty(2)).unwrap(), 0.0);
    }

    #[test]
    fn non_neighbor_rejected() {
        let p = Problem::new(two_by_two()).unwrap();
        let r = Realization {
            assign: vec![None, Some(0)],
            success: None,
        };
        assert!(p.reward(&r).is_err());
    }

    #[test]
    fn offline_indexed_by_id() {
        let mut inst = two_by_two();
        inst.offline.swap(0, 1);
        let p = Problem::new(inst).unwrap();
        assert_eq!(p.graph.offline_ids, vec![0, 1]);
        assert_eq!(p.graph.arcs[0][1].w, 2.0);
    }

    #[test]
    fn json_round_trip() {
        let inst = two_by_two();
        let s = serde_json::to_string(&inst).unwrap();
        assert!(s.contains(r#""model":{"kind":"free_disposal"}"#));
        assert!(!s.contains("budget"));
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back.online, inst.online);
    }

    #[test]
    fn sub_table_must_be_complete() {
        let mut inst = single_offline(RewardModel::FreeDisposal, None, &[1.0, 1.0]);
        inst.model = RewardModel::SubAdditive(SubAdditiveSpec {
            edges: vec![EdgeKey(0, 0), EdgeKey(0, 1)],
            table: vec![(0, 0.0), (1, 0.5), (2, 0.5)],
            callback: None,
        });
        assert!(validate_instance(&inst)
            .iter()
            .any(|v| v.rule.contains("misses")));
    }

    #[test]
    fn sub_additivity_checked() {
        let mut inst = single_offline(RewardModel::FreeDisposal, None, &[1.0, 1.0]);
        inst.model = RewardModel::SubAdditive(SubAdditiveSpec {
            edges: vec![EdgeKey(0, 0), EdgeKey(0, 1)],
            table: vec![(0, 0.0), (1, 0.2), (2, 0.2), (3, 0.9)],
            callback: None,
        });
        assert!(validate_instance(&inst)
            .iter()
            .any(|v| v.rule.contains("sub-additivity")));
    }
}
