use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pdmatch::algo::{GHatMode, LedgerPolicy};
use pdmatch::harness::{
    audit_bundle, execute, gen_random, gen_upper_triangular, read_json, sweep, write_csv,
    write_json, write_trace_jsonl, Algorithm, ExperimentConfig, InstanceSource, ModelParams,
    OptMethod, RandomSpec, SubKind, SweepParam, TraceBundle, WeightDist, GENERATOR_STREAM,
};
use pdmatch::model::{ConcaveSpec, RngStream};
use pdmatch::par::Execution;

#[derive(Parser)]
#[command(
    name = "pdmatch",
    version,
    about = "Primal-dual online bipartite matching experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit an instance file.
    Gen(GenArgs),
    /// Run an experiment; emit per-trial CSV and a JSON report.
    Run(RunArgs),
    /// Re-check the dual certificate of a saved run bundle.
    Audit(AuditArgs),
    /// Sweep a parameter and emit a ratio-vs-parameter table.
    Ratio(RatioArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Ghat {
    Expect,
    Level,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Policy {
    Keep,
    Resync,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Fd,
    Ab,
    Stochastic,
    SubModular,
    SubXos,
    SubBudgeted,
    CcLinear,
    CcExp,
    CcSoftplus,
}

/// Instance selection shared by `gen`, `run` and `ratio`.
#[derive(Args, Clone)]
struct SourceArgs {
    /// Read the instance from a JSON file.
    #[arg(long, conflicts_with_all = ["upper_triangular", "model"])]
    instance: Option<PathBuf>,
    /// Upper-triangular instance of this size.
    #[arg(long)]
    upper_triangular: Option<usize>,
    /// Random instance with this reward model.
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long, default_value_t = 3)]
    n_offline: usize,
    #[arg(long, default_value_t = 6)]
    n_online: usize,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Edge weights (or success probabilities) uniform on (0, max-weight].
    #[arg(long, default_value_t = 1.0)]
    max_weight: f64,
    /// Weights on the grid step, 2 step, ..., max-weight instead.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Budget of every offline vertex (budget model).
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    /// Smoothing width of the softplus budget shape.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Number of clauses of an XOS table.
    #[arg(long, default_value_t = 3)]
    clauses: usize,
}

impl SourceArgs {
    fn source(&self) -> Result<InstanceSource, String> {
        if let Some(path) = &self.instance {
            return Ok(InstanceSource::File { path: path.clone() });
        }
        if let Some(n) = self.upper_triangular {
            return Ok(InstanceSource::UpperTriangular { n });
        }
        let model = self
            .model
            .ok_or("choose --instance, --upper-triangular or --model")?;
        let weights = match self.grid_step {
            Some(step) => WeightDist::Grid {
                step,
                max: self.max_weight,
            },
            None => WeightDist::Uniform {
                lo: 0.0,
                hi: self.max_weight,
            },
        };
        let model = match model {
            Model::Fd => ModelParams::FreeDisposal,
            Model::Ab => ModelParams::AdditiveBudget {
                budget: self.budget,
            },
            Model::Stochastic => ModelParams::StochasticReward {
                offline_weight: WeightDist::Unit,
            },
            Model::SubModular => ModelParams::SubAdditive {
                sub: SubKind::Modular,
            },
            Model::SubXos => ModelParams::SubAdditive {
                sub: SubKind::Xos {
                    clauses: self.clauses,
                },
            },
            Model::SubBudgeted => ModelParams::SubAdditive {
                sub: SubKind::Budgeted,
            },
            Model::CcLinear => ModelParams::ConcaveSeparable {
                shape: ConcaveSpec::Linear { slope: 1.0 },
            },
            Model::CcExp => ModelParams::ConcaveSeparable {
                shape: ConcaveSpec::ExpSaturating { scale: 1.0 },
            },
            Model::CcSoftplus => ModelParams::ConcaveSeparable {
                shape: ConcaveSpec::SoftplusBudget {
                    eps: self.eps,
                    cap: 1.0,
                },
            },
        };
        Ok(InstanceSource::Random(RandomSpec {
            n_offline: self.n_offline,
            n_online: self.n_online,
            density: self.density,
            weights,
            model,
        }))
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Experiment settings shared by `run` and `ratio`.
#[derive(Args)]
struct ExpArgs {
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
    /// JSON experiment config; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    ghat: Option<Ghat>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Grid unit for the exact budget dynamic program (otherwise the optimum is chosen automatically).
    #[arg(long)]
    dp_unit: Option<f64>,
    #[arg(long)]
    no_audit: bool,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

impl ExpArgs {
    fn config(&self, fallback: Option<InstanceSource>) -> Result<ExperimentConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => read_json::<ExperimentConfig>(p).map_err(|e| e.to_string())?,
            None => {
                let algo = self.algo.ok_or("--algo is required without --config")?;
                let source = match (self.source.source(), fallback) {
                    (Err(_), Some(f)) => f,
                    (s, _) => s?,
                };
                ExperimentConfig::new(algo, source)
            }
        };
        if self.config.is_some() {
            if let Some(a) = self.algo {
                cfg.algorithm = a;
            }
            if self.source.instance.is_some()
                || self.source.upper_triangular.is_some()
                || self.source.model.is_some()
            {
                cfg.source = self.source.source()?;
            }
        }
        if let Some(v) = self.eta {
            cfg.eta = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(g) = self.ghat {
            cfg.ghat = if g == Ghat::Expect {
                GHatMode::Expect
            } else {
                GHatMode::Level
            };
        }
        if let Some(p) = self.policy {
            cfg.policy = if p == Policy::Keep {
                LedgerPolicy::Keep
            } else {
                LedgerPolicy::Resync
            };
        }
        if let Some(unit) = self.dp_unit {
            cfg.opt = OptMethod::BudgetDp { unit };
        }
        if self.no_audit {
            cfg.audit = false;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// Directory for trials.csv, report.json, trace.jsonl and bundle.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also write the first trial's step trace and the audit bundle.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// Bundle written by `run --trace --out DIR`.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    exp: ExpArgs,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

enum Failure {
    Audit,
    Error(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.to_string())
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Audit) => ExitCode::from(2),
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let mut rng = RngStream::for_trial(a.seed, GENERATOR_STREAM);
            let inst = match a.source.source().map_err(Failure::Error)? {
                InstanceSource::UpperTriangular { n } => gen_upper_triangular(n, &mut rng)?,
                InstanceSource::Random(spec) => gen_random(&spec, &mut rng)?,
                _ => {
                    return Err(Failure::Error(
                        "gen needs --upper-triangular or --model".into(),
                    ))
                }
            };
            let mut text = serde_json::to_vec_pretty(&inst)?;
            text.push(b'\n');
            emit(a.out.as_ref(), &text)
        }
        Cmd::Run(a) => {
            let mut cfg = a.exp.config(None).map_err(Failure::Error)?;
            cfg.trace |= a.trace;
            let (report, bundle) = execute(&cfg)?;
            let mut csv = Vec::new();
            write_csv(&mut csv, &report.rows)?;
            if let Some(dir) = &a.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("trials.csv"), &csv)?;
                write_json(&dir.join("report.json"), &report)?;
                if a.trace {
                    let mut f = std::fs::File::create(dir.join("trace.jsonl"))?;
                    write_trace_jsonl(&mut f, &bundle.steps)?;
                    write_json(&dir.join("bundle.json"), &bundle)?;
                }
            } else {
                match a.format {
                    Format::Csv => emit(None, &csv)?,
                    Format::Json => {
                        let mut text = serde_json::to_vec_pretty(&report)?;
                        text.push(b'\n');
                        emit(None, &text)?;
                    }
                }
            }
            for audit in &report.audits {
                for c in audit.checks.iter().filter(|c| !c.passed) {
                    eprintln!(
                        "audit {} / {} failed: {}",
                        audit.algorithm, c.name, c.detail
                    );
                }
            }
            if report.audits_passed() {
                Ok(())
            } else {
                Err(Failure::Audit)
            }
        }
        Cmd::Audit(a) => {
            let bundle: TraceBundle = read_json(&a.bundle)?;
            let audits = audit_bundle(&bundle)?;
            let passed = audits.iter().all(|r| r.passed());
            let text = match a.format {
                Format::Json => {
                    let mut t = serde_json::to_vec_pretty(&audits)?;
                    t.push(b'\n');
                    t
                }
                Format::Csv => {
                    let mut t = String::from("algorithm,check,passed,checked,worst_slack\n");
                    for r in &audits {
                        for c in &r.checks {
                            t.push_str(&format!(
                                "{},{},{},{},{}\n",
                                r.algorithm, c.name, c.passed, c.checked, c.worst_slack
                            ));
                        }
                    }
                    t.into_bytes()
                }
            };
            emit(None, &text)?;
            if passed {
                Ok(())
            } else {
                Err(Failure::Audit)
            }
        }
        Cmd::Ratio(a) => {
            // the size sweep needs no instance flags
            let fallback =
                (a.param == SweepParam::N).then_some(InstanceSource::UpperTriangular { n: 1 });
            let mut cfg = a.exp.config(fallback).map_err(Failure::Error)?;
            cfg.audit = false;
            let rows = sweep(&cfg, a.param, &a.values)?;
            let text = match a.format {
                Format::Json => {
                    let mut t = serde_json::to_vec_pretty(&rows)?;
                    t.push(b'\n');
                    t
                }
                Format::Csv => {
                    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    let mut t = String::from("value,mean_ratio,stderr,bound\n");
                    for r in &rows {
                        t.push_str(&format!(
                            "{},{},{},{}\n",
                            r.value,
                            cell(r.mean_ratio),
                            cell(r.stderr),
                            cell(r.bound)
                        ));
                    }
                    t.into_bytes()
                }
            };
            emit(a.out.as_ref(), &text)
        }
    }
}
