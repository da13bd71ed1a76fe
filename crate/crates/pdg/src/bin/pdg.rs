//! Command-line interface: reads model files, writes JSON reports to stdout.
//!
//! Exit codes: 0 success, 2 schema or validation error, 3 solver
//! non-convergence, 4 infeasible (empty feasible support).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pdg::convert::{
    bn_to_pdg, fg_distribution, fg_to_pdg, pdg_to_fg, pdg_to_wfg, wfg_to_pdg,
};
use pdg::infer::{add_observation, inconsistency_of_candidate, query, Evidence};
use pdg::io::{self, Model, SolveConfigFile};
use pdg::model::Severity;
use pdg::solve::uniqueness_gamma_bound;
use pdg::{
    degree_of_inconsistency, in_sd, limit_distribution, minimize_score, score, PdgError,
    SolveConfig,
};

/// Probabilistic dependency graphs: scoring, solving, and translations.
#[derive(Parser)]
#[command(name = "pdg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SolverFlags {
    /// Solver configuration file (JSON); defaults to $PDG_CONFIG if set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step_init: Option<f64>,
    /// Convergence tolerance (max-norm change between iterates).
    #[arg(long = "tol")]
    tol: Option<f64>,
    /// Ratio of the geometric gamma schedule, in (0, 1).
    #[arg(long)]
    gamma_ratio: Option<f64>,
    #[arg(long)]
    gamma_floor: Option<f64>,
    #[arg(long)]
    limit_tol: Option<f64>,
    /// Starting-point seed; 0 starts from uniform.
    #[arg(long)]
    seed: Option<u64>,
}

impl SolverFlags {
    fn build(&self) -> Result<SolveConfig, PdgError> {
        let mut cfg = SolveConfig::default();
        let config_path = self
            .config
            .clone()
            .or_else(|| std::env::var_os("PDG_CONFIG").map(PathBuf::from));
        if let Some(path) = config_path {
            let bytes = read(&path)?;
            SolveConfigFile::parse(&bytes)?.apply(&mut cfg);
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.step_init {
            cfg.step_init = v;
        }
        if let Some(v) = self.tol {
            cfg.convergence_tol = v;
        }
        if let Some(v) = self.gamma_ratio {
            cfg.gamma_schedule_ratio = v;
        }
        if let Some(v) = self.gamma_floor {
            cfg.gamma_floor = v;
        }
        if let Some(v) = self.limit_tol {
            cfg.limit_tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score a joint distribution against a PDG.
    Score {
        pdg: PathBuf,
        joint: PathBuf,
        #[arg(long)]
        gamma: f64,
    },
    /// Minimize the score at a fixed gamma.
    Solve {
        pdg: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Compute the small-gamma limit distribution.
    Limit {
        pdg: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Compute the degree of inconsistency (minimum incompatibility).
    Inc {
        pdg: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Check whether a joint distribution matches every cpd exactly.
    Check {
        pdg: PathBuf,
        joint: PathBuf,
        #[arg(long, default_value_t = pdg::scoring::DEFAULT_SD_TOL)]
        tol: f64,
    },
    /// Convert between model kinds.
    Convert {
        #[arg(long = "from")]
        from: String,
        #[arg(long = "to")]
        to: String,
        /// Beta-to-alpha ratio for weighted factor graph conversion.
        #[arg(long)]
        k: Option<f64>,
        /// Per-variable beta for BN conversion (default 1).
        #[arg(long)]
        beta: Option<f64>,
        file: PathBuf,
    },
    /// Conditional probability of a target given another variable, under the
    /// limit distribution.
    Query {
        pdg: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        given: String,
        /// Also report the degree of inconsistency of the answer as a
        /// candidate edge.
        #[arg(long)]
        audit: bool,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Add an observation (point value or soft distribution) to a PDG.
    Observe {
        pdg: PathBuf,
        #[arg(long)]
        var: String,
        #[arg(long, conflicts_with = "dist")]
        value: Option<String>,
        /// JSON file holding a probability vector over the variable's values.
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Union of two PDGs (edge labels are suffixed on collision).
    Union { a: PathBuf, b: PathBuf },
    /// Restrict a PDG to the named variables.
    Restrict {
        pdg: PathBuf,
        /// Comma-separated variable names to keep.
        #[arg(long, value_delimiter = ',')]
        keep: Vec<String>,
    },
    /// Parse and validate a model file, reporting violations.
    Validate { file: PathBuf },
}

fn read(path: &Path) -> Result<Vec<u8>, PdgError> {
    std::fs::read(path).map_err(|e| PdgError::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load_pdg(path: &Path) -> Result<pdg::Pdg, PdgError> {
    match io::parse(&read(path)?)? {
        Model::Pdg(p) => {
            for v in p.validate() {
                if v.severity == Severity::Warning {
                    eprintln!("{}: {v}", path.display());
                }
            }
            Ok(p)
        }
        other => Err(PdgError::InvalidInput(format!(
            "{} holds a `{}` model, expected a pdg",
            path.display(),
            other.kind()
        ))),
    }
}

fn load_joint(path: &Path, model: &pdg::Pdg) -> Result<pdg::JointTable, PdgError> {
    match io::parse(&read(path)?)? {
        Model::Joint(spec) => spec.resolve(model),
        other => Err(PdgError::InvalidInput(format!(
            "{} holds a `{}` model, expected a joint distribution",
            path.display(),
            other.kind()
        ))),
    }
}

fn emit(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("report"));
}

fn emit_model(model: &Model) {
    let bytes = io::serialize(model);
    print!("{}", String::from_utf8(bytes).expect("canonical output is UTF-8"));
}

enum Failure {
    Error(PdgError),
    NotConverged,
}

impl From<PdgError> for Failure {
    fn from(e: PdgError) -> Self {
        Failure::Error(e)
    }
}

fn warn_gamma(model: &pdg::Pdg, gamma: f64) {
    let bound = uniqueness_gamma_bound(model);
    if gamma > bound {
        eprintln!(
            "warning: gamma {gamma} exceeds min beta/alpha = {bound}; \
             the minimizer is not guaranteed unique"
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Score { pdg, joint, gamma } => {
            let model = load_pdg(&pdg)?;
            let mu = load_joint(&joint, &model)?;
            let report = score(&model, &mu, gamma)?;
            emit(io::score_report_value(&report));
        }
        Command::Solve { pdg, gamma, solver } => {
            let model = load_pdg(&pdg)?;
            warn_gamma(&model, gamma);
            let cfg = solver.build()?;
            let result = minimize_score(&model, gamma, &cfg)?;
            emit(io::solve_result_value(&result));
            if !result.converged {
                return Err(Failure::NotConverged);
            }
        }
        Command::Limit { pdg, solver } => {
            let model = load_pdg(&pdg)?;
            let cfg = solver.build()?;
            let result = limit_distribution(&model, &cfg)?;
            emit(io::solve_result_value(&result));
            if !result.converged {
                return Err(Failure::NotConverged);
            }
        }
        Command::Inc { pdg, solver } => {
            let model = load_pdg(&pdg)?;
            let cfg = solver.build()?;
            let degree = degree_of_inconsistency(&model, &cfg)?;
            emit(json!({ "degreeOfInconsistency": io::extended_real(degree) }));
        }
        Command::Check { pdg, joint, tol } => {
            let model = load_pdg(&pdg)?;
            let mu = load_joint(&joint, &model)?;
            let report = in_sd(&model, &mu, tol)?;
            emit(io::sd_report_value(&report));
        }
        Command::Convert {
            from,
            to,
            k,
            beta,
            file,
        } => {
            let model = io::parse(&read(&file)?)?;
            if model.kind() != from {
                return Err(PdgError::InvalidInput(format!(
                    "{} holds a `{}` model but --from {from} was given",
                    file.display(),
                    model.kind()
                ))
                .into());
            }
            let converted = convert_model(model, &to, k, beta)?;
            emit_model(&converted);
        }
        Command::Query {
            pdg,
            target,
            given,
            audit,
            solver,
        } => {
            let model = load_pdg(&pdg)?;
            let cfg = solver.build()?;
            let answer = query(&model, &target, &given, &cfg)?;
            let row_labels = model
                .var(model.var_id(&given).unwrap())
                .values()
                .to_vec();
            let col_labels = model
                .var(model.var_id(&target).unwrap())
                .values()
                .to_vec();
            let mut value = io::cond_table_value(&answer, &row_labels, &col_labels);
            if audit {
                let degree =
                    inconsistency_of_candidate(&model, &target, &given, &answer.cpd, &cfg)?;
                value["candidateInconsistency"] = io::extended_real(degree);
            }
            emit(value);
        }
        Command::Observe {
            pdg,
            var,
            value,
            dist,
            beta,
        } => {
            let model = load_pdg(&pdg)?;
            let evidence = match (value, dist) {
                (Some(v), None) => Evidence::point(var, v).with_beta(beta),
                (None, Some(path)) => {
                    let bytes = read(&path)?;
                    let probs: Vec<f64> =
                        serde_json::from_slice(&bytes).map_err(|e| PdgError::Schema {
                            path: path.display().to_string(),
                            message: format!("expected a JSON array of probabilities: {e}"),
                        })?;
                    Evidence::soft(var, probs).with_beta(beta)
                }
                _ => {
                    return Err(PdgError::InvalidInput(
                        "observe requires exactly one of --value or --dist".into(),
                    )
                    .into())
                }
            };
            let observed = add_observation(&model, &evidence)?;
            emit_model(&Model::Pdg(observed));
        }
        Command::Union { a, b } => {
            let left = load_pdg(&a)?;
            let right = load_pdg(&b)?;
            emit_model(&Model::Pdg(left.union(&right)?));
        }
        Command::Restrict { pdg, keep } => {
            let model = load_pdg(&pdg)?;
            let names: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
            emit_model(&Model::Pdg(model.restrict(&names)?));
        }
        Command::Validate { file } => {
            let model = io::parse(&read(&file)?)?;
            let violations = match &model {
                Model::Pdg(p) => p.validate(),
                _ => Vec::new(),
            };
            emit(json!({
                "kind": model.kind(),
                "violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            }));
        }
    }
    Ok(())
}

fn convert_model(
    model: Model,
    to: &str,
    k: Option<f64>,
    beta: Option<f64>,
) -> Result<Model, PdgError> {
    match (model, to) {
        (Model::Bn(bn), "pdg") => {
            let betas = vec![beta.unwrap_or(1.0); bn.variables().len()];
            Ok(Model::Pdg(bn_to_pdg(&bn, &betas)?))
        }
        (Model::Fg(fg), "pdg") => Ok(Model::Pdg(fg_to_pdg(&fg)?.pdg)),
        (Model::Wfg(wfg), "pdg") => {
            let converted = wfg_to_pdg(&wfg, k.unwrap_or(1.0))?;
            for w in &converted.warnings {
                eprintln!("warning: {w}");
            }
            Ok(Model::Pdg(converted.pdg))
        }
        (Model::Fg(fg), "joint") => Ok(Model::Joint(io::JointSpec::of_table(&fg_distribution(
            &fg,
        )?))),
        (Model::Wfg(wfg), "joint") => Ok(Model::Joint(io::JointSpec::of_table(
            &pdg::convert::wfg_distribution(&wfg)?,
        ))),
        (Model::Bn(bn), "joint") => Ok(Model::Joint(io::JointSpec::of_table(
            &pdg::convert::bn_distribution(&bn)?,
        ))),
        (Model::Pdg(p), "fg") => {
            let (fg, warnings) = pdg_to_fg(&p)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            Ok(Model::Fg(fg))
        }
        (Model::Pdg(p), "wfg") => Ok(Model::Wfg(pdg_to_wfg(&p)?)),
        (model, to) => Err(PdgError::InvalidInput(format!(
            "no conversion from `{}` to `{to}`",
            model.kind()
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => {
            emit(json!({
                "error": {"code": "non-convergence",
                          "message": "solver did not converge within the iteration budget"}
            }));
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            let code = match &e {
                PdgError::EmptySupport => 4u8,
                _ => 2u8,
            };
            let label = match code {
                4 => "infeasible",
                _ => "schema",
            };
            emit(json!({
                "error": {"code": label, "message": e.to_string()}
            }));
            ExitCode::from(code)
        }
    }
}
