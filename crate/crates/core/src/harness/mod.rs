//! Experiment configuration, the Monte-Carlo runner and its reports.

pub mod gen;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algo::ab::{ab_from_stochastic, r_max, AbState};
use crate::algo::concave::{cc_prepare, cc_run_fractional, CcConfig};
use crate::algo::fd::FdState;
use crate::algo::sub::{scale_table, SubConfig, SubState};
use crate::algo::{
    simulate, GHatMode, LedgerPolicy, LoopConfig, OnlineAlgorithm, StepRecord, DEFAULT_ETA,
};
use crate::audit::{
    ab_audit, cc_audit, fd_audit, rate_identity, sub_audit, AuditConfig, AuditReport, TrialLedger,
};
use crate::baselines::{Greedy, Kvv};
use crate::error::{Error, Result};
use crate::model::potential::budget_bound;
use crate::model::{Instance, Problem, Realization, RewardModel, RngStream};
use crate::multilinear::curvature;
use crate::oracle::{
    assignment_count, opt_bruteforce, opt_budget_dp, opt_fractional_concave, opt_matching_fd,
    BRUTE_FORCE_CAP, DP_STATE_CAP,
};
use crate::par::{map_range, Execution};
use crate::stats::Summary;

pub use gen::{gen_random, gen_upper_triangular, ModelParams, RandomSpec, SubKind, WeightDist};
pub use output::{read_json, write_csv, write_json, write_trace_jsonl};

/// Stream reserved for instance generation, so trial streams stay untouched.
pub const GENERATOR_STREAM: u64 = u64::MAX;

/// Stream offset for the Bernoulli success draws of the stochastic demonstration.
const SUCCESS_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fd,
    Ab,
    Sub,
    Cc,
    Greedy,
    Kvv,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fd => "fd",
            Algorithm::Ab => "ab",
            Algorithm::Sub => "sub",
            Algorithm::Cc => "cc",
            Algorithm::Greedy => "greedy",
            Algorithm::Kvv => "kvv",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    File { path: PathBuf },
    Inline { instance: Instance },
    UpperTriangular { n: usize },
    Random(RandomSpec),
}

/// How the offline optimum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptMethod {
    /// Known value, then matching, brute force or a fractional bound as the model allows.
    #[default]
    Auto,
    BruteForce,
    Matching,
    /// Grid dynamic program; weights and budgets must be multiples of `unit`.
    BudgetDp {
        unit: f64,
    },
    /// Frank-Wolfe upper bound on the fractional optimum (concave model).
    FractionalBound {
        iterations: usize,
    },
    Skip,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    /// One JSON step record per line (first trial).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// Ledgers and steps for a later `audit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<PathBuf>,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_trials() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub source: InstanceSource,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub audit: bool,
    #[serde(default)]
    pub audit_config: AuditConfig,
    #[serde(default)]
    pub ghat: GHatMode,
    #[serde(default)]
    pub policy: LedgerPolicy,
    #[serde(default)]
    pub opt: OptMethod,
    /// Record per-step traces of the first trial (always on when auditing).
    #[serde(default)]
    pub trace: bool,
    /// Scheduling only; never affects results, so it is not echoed.
    #[serde(default, skip_serializing)]
    pub execution: Execution,
    #[serde(default, skip_serializing)]
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, source: InstanceSource) -> Self {
        Self {
            algorithm,
            source,
            eta: DEFAULT_ETA,
            trials: 1,
            seed: 0,
            audit: true,
            audit_config: AuditConfig::default(),
            ghat: GHatMode::default(),
            policy: LedgerPolicy::default(),
            opt: OptMethod::Auto,
            trace: false,
            execution: Execution::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.loop_config().validate()
    }

    pub fn loop_config(&self) -> LoopConfig {
        LoopConfig {
            eta: self.eta,
            ghat: self.ghat,
            policy: self.policy,
            trace: false,
        }
    }

    /// Loads or generates the instance.
    pub fn instance(&self) -> Result<Instance> {
        let mut rng = RngStream::for_trial(self.seed, GENERATOR_STREAM);
        match &self.source {
            InstanceSource::File { path } => read_json(path),
            InstanceSource::Inline { instance } => Ok(instance.clone()),
            InstanceSource::UpperTriangular { n } => gen_upper_triangular(*n, &mut rng),
            InstanceSource::Random(spec) => gen_random(spec, &mut rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub primal: f64,
    pub dual: Option<f64>,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptInfo {
    pub value: f64,
    pub method: String,
    /// False when `value` is only an upper bound on the optimum.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub model: String,
    pub n_offline: usize,
    pub n_online: usize,
    pub n_edges: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub instance: InstanceSummary,
    pub opt: Option<OptInfo>,
    /// Why no optimum is available, if so.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_note: Option<String>,
    /// Guaranteed competitive ratio of the algorithm on this instance, if any.
    pub bound: Option<f64>,
    pub primal: Summary,
    pub dual: Option<Summary>,
    pub ratio: Option<Summary>,
    pub rows: Vec<TrialRow>,
    pub extras: BTreeMap<String, f64>,
    pub audits: Vec<AuditReport>,
}

impl RunReport {
    /// True iff every enabled audit passed.
    pub fn audits_passed(&self) -> bool {
        self.audits.iter().all(|a| a.passed())
    }
}

/// Everything `audit` needs to re-check a run without re-simulating it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceBundle {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub ledgers: Vec<TrialLedger>,
    pub steps: Vec<StepRecord>,
}

/// Result of one Monte-Carlo trial.
struct TrialOutcome {
    primal: f64,
    dual: Option<f64>,
    ledger: Option<TrialLedger>,
    steps: Vec<StepRecord>,
    extra: Option<f64>,
}

/// Runs an experiment and writes the configured outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let (report, bundle) = execute(cfg)?;
    write_outputs(cfg, &report, &bundle)?;
    Ok(report)
}

/// Runs an experiment without writing anything; also returns the audit bundle.
pub fn execute(cfg: &ExperimentConfig) -> Result<(RunReport, TraceBundle)> {
    cfg.validate()?;
    let original = cfg.instance()?;
    // values above 1 are scaled into [0, 1] and reported in original units
    let (instance, scale) = match &original.model {
        RewardModel::SubAdditive(spec) => {
            let (scaled, factor) = scale_table(spec);
            let mut inst = original.clone();
            inst.model = RewardModel::SubAdditive(scaled);
            (inst, factor)
        }
        _ => (original.clone(), 1.0),
    };
    let problem = Problem::new(instance.clone())?;
    let summary = InstanceSummary {
        model: problem.model_name().to_string(),
        n_offline: problem.graph.n_offline(),
        n_online: problem.graph.n_online(),
        n_edges: problem.graph.n_edges(),
        generator: instance.meta.as_ref().map(|m| m.generator.clone()),
    };
    let (opt, opt_note) = match compute_opt(&problem, cfg.opt) {
        Ok(Some(mut o)) => {
            o.value *= scale;
            (Some(o), None)
        }
        Ok(None) => (None, Some("optimum not requested".to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut extras = BTreeMap::new();
    let mut audits = Vec::new();
    let trace_first = cfg.trace || cfg.audit;
    let lc = cfg.loop_config();
    let mut bound = None;

    let outcomes: Vec<TrialOutcome> = match cfg.algorithm {
        Algorithm::Fd => {
            let out = run_trials(cfg, |k, rng| {
                let mut st = FdState::new(
                    &problem,
                    LoopConfig {
                        trace: trace_first && k == 0,
                        ..lc
                    },
                )?;
                simulate(&mut st, rng)?;
                Ok(TrialOutcome {
                    primal: st.primal(),
                    dual: Some(st.dual()),
                    ledger: Some(TrialLedger::from_fd(&st)),
                    steps: std::mem::take(&mut st.steps),
                    extra: None,
                })
            })?;
            bound = Some(budget_bound(0.0));
            if cfg.audit {
                let ledgers: Vec<TrialLedger> =
                    out.iter().filter_map(|o| o.ledger.clone()).collect();
                let mut rep = fd_audit(&problem, &ledgers, cfg.eta, &cfg.audit_config);
                rep.checks
                    .push(rate_identity(&out[0].steps, cfg.eta, &cfg.audit_config));
                audits.push(rep);
            }
            out
        }
        Algorithm::Ab => {
            let stochastic = matches!(problem.instance.model, RewardModel::StochasticReward);
            let ab_problem = if stochastic {
                Problem::new(ab_from_stochastic(&problem.instance)?)?
            } else {
                problem.clone()
            };
            let rm = r_max(&ab_problem);
            extras.insert("r_max".into(), rm);
            bound = Some(budget_bound(rm));
            let out = run_trials(cfg, |k, rng| {
                let mut st = AbState::new(
                    &ab_problem,
                    LoopConfig {
                        trace: trace_first && k == 0,
                        ..lc
                    },
                )?;
                let real = simulate(&mut st, rng)?;
                let extra = if stochastic {
                    let mut draws = RngStream::for_trial(cfg.seed, SUCCESS_STREAM + k as u64);
                    Some(realized_success(&problem, &real, &mut draws))
                } else {
                    None
                };
                Ok(TrialOutcome {
                    primal: st.primal(),
                    dual: Some(st.dual()),
                    ledger: Some(TrialLedger::from_ab(&st, &ab_problem)),
                    steps: std::mem::take(&mut st.steps),
                    extra,
                })
            })?;
            if stochastic {
                let xs: Vec<f64> = out.iter().filter_map(|o| o.extra).collect();
                extras.insert("realized_success_mean".into(), Summary::of(&xs).mean);
            }
            if cfg.audit {
                let ledgers: Vec<TrialLedger> =
                    out.iter().filter_map(|o| o.ledger.clone()).collect();
                let mut rep = ab_audit(&ab_problem, &ledgers, cfg.eta, &cfg.audit_config);
                rep.checks
                    .push(rate_identity(&out[0].steps, cfg.eta, &cfg.audit_config));
                audits.push(rep);
            }
            out
        }
        Algorithm::Sub => {
            let sc = SubConfig {
                eta: cfg.eta,
                seed: cfg.seed,
                trace: trace_first,
                ..SubConfig::default()
            };
            let mut base = SubState::new(&problem, sc)?;
            base.run_fractional()?;
            let steps = std::mem::take(&mut base.steps);
            let edges: Vec<usize> = (0..problem.graph.n_edges()).collect();
            if let Ok(c) = curvature(&problem, &edges, crate::multilinear::ENUMERATION_LIMIT) {
                extras.insert("kappa".into(), c.kappa);
                bound = Some((1.0 - c.kappa) * budget_bound(0.0));
            }
            extras.insert("fractional".into(), base.c_value * scale);
            extras.insert("sampled_arrivals".into(), base.sampled_arrivals as f64);
            extras.insert("scale".into(), scale);
            if cfg.audit {
                base.steps = steps.clone();
                audits.push(sub_audit(&problem, &base, cfg.eta, &cfg.audit_config));
                base.steps.clear();
            }
            let dual = base.dual() * scale;
            let mut out = run_trials(cfg, |_, rng| {
                let mut st = base.clone();
                st.reset_rounding();
                simulate(&mut st, rng)?;
                Ok(TrialOutcome {
                    primal: st.primal() * scale,
                    dual: Some(dual),
                    ledger: None,
                    steps: Vec::new(),
                    extra: None,
                })
            })?;
            out[0].steps = steps;
            out
        }
        Algorithm::Cc => {
            let cc = CcConfig {
                eta: cfg.eta,
                trace: trace_first,
                ..CcConfig::default()
            };
            let sol = cc_prepare(&problem, &cc)?;
            let run = cc_run_fractional(&problem, &sol, &cc)?;
            extras.insert("r".into(), run.r);
            extras.insert(
                "max_residual".into(),
                sol.per_vertex
                    .iter()
                    .map(|s| s.max_residual())
                    .fold(0.0, f64::max),
            );
            extras.insert("beta_drift".into(), (run.beta - run.beta_direct).abs());
            extras.insert(
                "slopes_monotone".into(),
                if run.slopes_monotone { 1.0 } else { 0.0 },
            );
            bound = Some(run.r);
            if cfg.audit {
                audits.push(cc_audit(&problem, &run, cfg.eta, &cfg.audit_config));
            }
            // the fractional run is deterministic: one row
            vec![TrialOutcome {
                primal: run.primal,
                dual: Some(run.dual),
                ledger: None,
                steps: run.steps,
                extra: None,
            }]
        }
        Algorithm::Greedy => run_trials(cfg, |_, rng| {
            let mut st = Greedy::new(&problem);
            simulate(&mut st, rng)?;
            Ok(TrialOutcome {
                primal: st.primal(),
                dual: None,
                ledger: None,
                steps: Vec::new(),
                extra: None,
            })
        })?,
        Algorithm::Kvv => {
            bound = Some(budget_bound(0.0));
            run_trials(cfg, |_, rng| {
                let mut st = Kvv::new(&problem, rng)?;
                simulate(&mut st, rng)?;
                Ok(TrialOutcome {
                    primal: st.primal(),
                    dual: None,
                    ledger: None,
                    steps: Vec::new(),
                    extra: None,
                })
            })?
        }
    };

    let opt_value = opt.as_ref().map(|o| o.value);
    let rows: Vec<TrialRow> = outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| TrialRow {
            trial: k,
            primal: o.primal,
            dual: o.dual,
            opt: opt_value,
            ratio: opt_value.filter(|&v| v > 0.0).map(|v| o.primal / v),
        })
        .collect();
    let primal = Summary::of(&rows.iter().map(|r| r.primal).collect::<Vec<_>>());
    let duals: Vec<f64> = rows.iter().filter_map(|r| r.dual).collect();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let steps = outcomes
        .first()
        .map(|o| o.steps.clone())
        .unwrap_or_default();
    let bundle = TraceBundle {
        config: cfg.clone(),
        instance: original,
        ledgers: outcomes.into_iter().filter_map(|o| o.ledger).collect(),
        steps,
    };
    let report = RunReport {
        config: cfg.clone(),
        instance: summary,
        opt,
        opt_note,
        bound,
        primal,
        dual: (!duals.is_empty()).then(|| Summary::of(&duals)),
        ratio: (!ratios.is_empty()).then(|| Summary::of(&ratios)),
        rows,
        extras,
        audits,
    };
    Ok((report, bundle))
}

fn run_trials(
    cfg: &ExperimentConfig,
    f: impl Fn(usize, &mut RngStream) -> Result<TrialOutcome> + Sync + Send,
) -> Result<Vec<TrialOutcome>> {
    map_range(cfg.execution, cfg.trials, |k| {
        let mut rng = RngStream::for_trial(cfg.seed, k as u64);
        f(k, &mut rng)
    })
    .into_iter()
    .collect()
}

/// Realized reward of a stochastic-reward assignment with Bernoulli success draws:
/// offline i earns w_i once any of its assigned edges succeeds.
pub fn realized_success(problem: &Problem, real: &Realization, rng: &mut RngStream) -> f64 {
    let g = &problem.graph;
    let mut hit = vec![false; g.n_offline()];
    for (j, c) in real.assign.iter().enumerate() {
        if let Some(i) = *c {
            let p = g.nbr(i, j).map_or(0.0, |n| n.p);
            if rng.uniform() < p {
                hit[i] = true;
            }
        }
    }
    hit.iter()
        .zip(&g.weight)
        .filter(|(h, _)| **h)
        .map(|(_, w)| w)
        .sum()
}

/// Offline optimum (or an upper bound on it) for the chosen method.
pub fn compute_opt(problem: &Problem, method: OptMethod) -> Result<Option<OptInfo>> {
    let exact = |value: f64, method: &str| {
        Ok(Some(OptInfo {
            value,
            method: method.into(),
            exact: true,
        }))
    };
    match method {
        OptMethod::Skip => Ok(None),
        OptMethod::BruteForce => exact(
            opt_bruteforce(problem, BRUTE_FORCE_CAP)?.value,
            "brute_force",
        ),
        OptMethod::Matching => exact(opt_matching_fd(problem)?.value, "matching"),
        OptMethod::BudgetDp { unit } => exact(
            opt_budget_dp(problem, unit, DP_STATE_CAP)?.value,
            "budget_dp",
        ),
        OptMethod::FractionalBound { iterations } => {
            let b = opt_fractional_concave(problem, iterations)?;
            Ok(Some(OptInfo {
                value: b.upper,
                method: "fractional_upper_bound".into(),
                exact: false,
            }))
        }
        OptMethod::Auto => {
            if let Some(v) = problem.instance.meta.as_ref().and_then(|m| m.known_opt) {
                return exact(v, "known");
            }
            match problem.instance.model {
                RewardModel::FreeDisposal => compute_opt(problem, OptMethod::Matching),
                RewardModel::ConcaveSeparable { .. } => {
                    compute_opt(problem, OptMethod::FractionalBound { iterations: 2000 })
                }
                _ if assignment_count(problem) <= BRUTE_FORCE_CAP => {
                    compute_opt(problem, OptMethod::BruteForce)
                }
                _ => Err(Error::SizeCap {
                    size: assignment_count(problem),
                    cap: BRUTE_FORCE_CAP,
                }),
            }
        }
    }
}

/// Re-checks a saved run. Free-disposal and budget runs are audited from their
/// stored ledgers; fractional runs are deterministic and are replayed.
pub fn audit_bundle(bundle: &TraceBundle) -> Result<Vec<AuditReport>> {
    let cfg = &bundle.config;
    let problem = Problem::new(bundle.instance.clone())?;
    let ac = &cfg.audit_config;
    match cfg.algorithm {
        Algorithm::Fd => {
            let mut rep = fd_audit(&problem, &bundle.ledgers, cfg.eta, ac);
            rep.checks.push(rate_identity(&bundle.steps, cfg.eta, ac));
            Ok(vec![rep])
        }
        Algorithm::Ab => {
            let ab_problem = if matches!(problem.instance.model, RewardModel::StochasticReward) {
                Problem::new(ab_from_stochastic(&problem.instance)?)?
            } else {
                problem
            };
            let mut rep = ab_audit(&ab_problem, &bundle.ledgers, cfg.eta, ac);
            rep.checks.push(rate_identity(&bundle.steps, cfg.eta, ac));
            Ok(vec![rep])
        }
        Algorithm::Sub | Algorithm::Cc => {
            let replay = ExperimentConfig {
                source: InstanceSource::Inline {
                    instance: bundle.instance.clone(),
                },
                trials: 1,
                audit: true,
                opt: OptMethod::Skip,
                outputs: Outputs::default(),
                ..cfg.clone()
            };
            Ok(execute(&replay)?.0.audits)
        }
        Algorithm::Greedy | Algorithm::Kvv => Ok(Vec::new()),
    }
}

fn write_outputs(cfg: &ExperimentConfig, report: &RunReport, bundle: &TraceBundle) -> Result<()> {
    let o = &cfg.outputs;
    if let Some(p) = &o.csv {
        let mut f = std::fs::File::create(p)?;
        write_csv(&mut f, &report.rows)?;
    }
    if let Some(p) = &o.json {
        write_json(p, report)?;
    }
    if let Some(p) = &o.trace {
        let mut f = std::fs::File::create(p)?;
        write_trace_jsonl(&mut f, &bundle.steps)?;
    }
    if let Some(p) = &o.bundle {
        write_json(p, bundle)?;
    }
    Ok(())
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Size of the upper-triangular family.
    N,
    /// Largest edge weight of a random budget instance (weights uniform on (0, value]).
    RMax,
    /// Largest success probability of a random stochastic instance.
    PMax,
    /// Smoothing width of the softplus budget shape.
    Eps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mean_ratio: Option<f64>,
    pub stderr: Option<f64>,
    pub bound: Option<f64>,
}

/// Runs `base` once per value of `param`.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let mut cfg = base.clone();
            cfg.outputs = Outputs::default();
            match (param, &mut cfg.source) {
                (SweepParam::N, src) => {
                    if value < 1.0 || value.fract() != 0.0 {
                        return Err(Error::Config(format!(
                            "n = {value} is not a positive integer"
                        )));
                    }
                    *src = InstanceSource::UpperTriangular { n: value as usize };
                }
                (SweepParam::RMax | SweepParam::PMax, InstanceSource::Random(spec)) => {
                    spec.weights = WeightDist::Uniform { lo: 0.0, hi: value };
                }
                (SweepParam::Eps, InstanceSource::Random(spec)) => {
                    let cap = match &spec.model {
                        ModelParams::ConcaveSeparable {
                            shape: crate::model::ConcaveSpec::SoftplusBudget { cap, .. },
                        } => *cap,
                        _ => 1.0,
                    };
                    spec.model = ModelParams::ConcaveSeparable {
                        shape: crate::model::ConcaveSpec::SoftplusBudget { eps: value, cap },
                    };
                }
                _ => {
                    return Err(Error::Config(format!(
                        "sweeping {param:?} needs a random instance source"
                    )))
                }
            }
            let report = execute(&cfg)?.0;
            Ok(SweepRow {
                value,
                mean_ratio: report.ratio.map(|s| s.mean),
                stderr: report.ratio.map(|s| s.stderr),
                bound: report.bound,
            })
        })
        .collect()
}
