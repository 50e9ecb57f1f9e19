//! Command-line front end: `fit`, `cv`, `predict`, `simulate`, `bench`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adaptive::{fit_aspcr, AdaptiveFit, AdaptiveOptions};
use crate::data::{
    read_dataset, read_table, write_dataset, Dataset, ResponseColumn, SpcrConfig, SpcrModel,
};
use crate::error::{Result, SpcrError};
use crate::selection::{select_zeta, FoldPlan, GridSpacing, ZETA_CANDIDATES};
use crate::simbench::{
    make_case, run_benchmark, BenchConfig, BenchSpec, CaseId, Method, Preprocess,
};
use crate::solver::Problem;

/// Exit status for bad input: unreadable CSV, unknown case, invalid flags.
pub const EXIT_INPUT: i32 = 2;
/// Exit status when some requested fit did not converge.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "SPCR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "spcr",
    version,
    about = "Sparse principal component regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Fit at fixed penalties and write the model as JSON.
    Fit(FitArgs),
    /// Select penalties by K-fold cross-validation.
    Cv(CvArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Draw a simulation case and write it as CSV.
    Simulate(SimulateArgs),
    /// Run Monte Carlo replications of the simulation cases.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column, by header name or zero-based index.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// The CSV has no header row.
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Number of components.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub w: f64,
    #[arg(long, default_value_t = 0.01)]
    pub zeta: f64,
    /// Scale predictors to unit variance after centering.
    #[arg(long)]
    pub standardize: bool,
    /// Two-stage fit with adaptive loading weights.
    #[arg(long)]
    pub adaptive: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::data::DEFAULT_MAX_SWEEPS)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_gamma: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Grid spacing: linear or log.
    #[arg(long, default_value = "linear")]
    pub grid: GridSpacing,
    /// Reuse the pilot's penalties for the adaptive stage instead of a second CV.
    #[arg(long)]
    pub reuse_lambda: bool,
    /// Also choose zeta from 0.1, 0.3, 0.5, 0.7, 0.9 by CV.
    #[arg(long)]
    pub select_zeta: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Model JSON written by `fit` or `cv`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of predictor rows, columns in training order.
    #[arg(long)]
    pub input: PathBuf,
    /// If given, this column is the true response and the MSE is reported.
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub case: String,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Comma-separated case ids.
    #[arg(long, default_value = "1a")]
    pub cases: String,
    /// Comma-separated component counts.
    #[arg(long, default_value = "1")]
    pub k: String,
    /// Comma-separated training sizes.
    #[arg(long, default_value = "50")]
    pub n: String,
    /// Comma-separated noise levels.
    #[arg(long, default_value = "0.1")]
    pub sigma: String,
    /// Comma-separated methods: spcr, aspcr, pcr.
    #[arg(long, default_value = "aspcr")]
    pub methods: String,
    #[arg(long = "R", default_value_t = 20)]
    pub replications: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub w: f64,
    #[arg(long, default_value_t = 0.01)]
    pub zeta: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value = "linear")]
    pub grid: GridSpacing,
    #[arg(long)]
    pub reuse_lambda: bool,
    /// Also run every setting on standardized predictors.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = crate::data::DEFAULT_MAX_SWEEPS)]
    pub max_sweeps: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Everything needed to rerun a command.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a Command,
    /// sha256 of every input file.
    pub input_digests: BTreeMap<String, String>,
}

impl<'a> RunManifest<'a> {
    fn new(command: &'a Command, inputs: &[&Path]) -> Result<Self> {
        let mut input_digests = BTreeMap::new();
        for p in inputs {
            let bytes = fs::read(p).map_err(|e| SpcrError::Csv {
                location: p.display().to_string(),
                message: e.to_string(),
            })?;
            input_digests.insert(p.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        }
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            input_digests,
        })
    }
}

/// Map an error to its exit status.
pub fn exit_code(e: &SpcrError) -> i32 {
    match e {
        SpcrError::Diverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_INPUT,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| SpcrError::InvalidConfig(format!("bad {what} '{t}': {e}")))
        })
        .collect()
}

fn load(input: &InputArgs, standardize: bool) -> Result<Dataset> {
    let sel: ResponseColumn = input.response.parse().expect("infallible");
    let raw = read_dataset(&input.input, &sel, !input.no_header)?;
    if raw.p() == 0 {
        return Err(SpcrError::Dimension("no predictor columns".into()));
    }
    let names = raw.names().to_vec();
    Dataset::preprocess(raw.x().to_owned(), raw.y().clone(), standardize)?.with_names(names)
}

fn config(m: &ModelArgs) -> SpcrConfig {
    let mut c = SpcrConfig::new(m.k);
    c.w = m.w;
    c.zeta = m.zeta;
    c.seed = m.seed;
    c.max_sweeps = m.max_sweeps;
    c.tol = m.tol;
    c
}

#[derive(Serialize)]
struct ModelFile<'a> {
    manifest: &'a RunManifest<'a>,
    predictors: &'a [String],
    composite: Vec<f64>,
    model: &'a SpcrModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pilot: Option<&'a SpcrModel>,
}

fn summary(model: &SpcrModel, names: &[String]) -> String {
    let mut s = format!(
        "objective {:.10e} after {} sweeps ({})\nintercept {}\n",
        model.objective,
        model.sweeps_used,
        if model.converged {
            "converged"
        } else {
            "NOT converged"
        },
        model.gamma0
    );
    let nnz = model.nnz_per_component();
    for j in model.selected_components() {
        s.push_str(&format!(
            "component {}: gamma = {}, nonzero loadings = {}\n",
            j + 1,
            model.gamma[j],
            nnz[j]
        ));
    }
    let dropped = model.k() - model.selected_components().len();
    if dropped > 0 {
        s.push_str(&format!("{dropped} component(s) with gamma = 0 omitted\n"));
    }
    s.push_str("composite coefficients:\n");
    for (name, v) in names.iter().zip(model.composite().iter()) {
        s.push_str(&format!("  {name:<12} {v}\n"));
    }
    s
}

fn write_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut s = String::from("sweep,objective\n");
    for (i, v) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    fs::write(path, s)?;
    Ok(())
}

/// Report a fitted model; returns the exit status.
fn finish_model(out_dir: &Path, file: &str, mf: &ModelFile<'_>) -> Result<i32> {
    let path = out_dir.join(file);
    write_json(&path, mf)?;
    print!("{}", summary(mf.model, mf.predictors));
    println!("model written to {}", path.display());
    let unconverged: Vec<&SpcrModel> = std::iter::once(mf.model)
        .chain(mf.pilot)
        .filter(|m| !m.converged)
        .collect();
    if let Some(m) = unconverged.first() {
        let trace = out_dir.join("trace.csv");
        write_trace(&trace, &m.trace)?;
        eprintln!(
            "fit did not converge; objective trace in {}",
            trace.display()
        );
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

/// Run a parsed command; returns the process exit status.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(&cli.command, a),
        Command::Cv(a) => cmd_cv(&cli.command, a),
        Command::Predict(a) => cmd_predict(&cli.command, a),
        Command::Simulate(a) => cmd_simulate(&cli.command, a),
        Command::Bench(a) => cmd_bench(&cli.command, a),
    }
}

fn cmd_fit(cmd: &Command, a: &FitArgs) -> Result<i32> {
    let manifest = RunManifest::new(cmd, &[&a.input.input])?;
    let d = load(&a.input, a.model.standardize)?;
    let c = config(&a.model).with_lambdas(a.lambda_beta, a.lambda_gamma);
    c.validate(d.p())?;
    fs::create_dir_all(&a.out_dir)?;
    let (model, pilot) = if a.model.adaptive {
        let fit = fit_aspcr(&d, &c, &AdaptiveOptions::Fixed)?;
        (fit.model, Some(fit.pilot))
    } else {
        (Problem::new(&d)?.fit(&c)?, None)
    };
    let mf = ModelFile {
        manifest: &manifest,
        predictors: d.names(),
        composite: model.composite().to_vec(),
        model: &model,
        pilot: pilot.as_ref(),
    };
    finish_model(&a.out_dir, "model.json", &mf)
}

#[derive(Serialize)]
struct CvFile<'a> {
    manifest: &'a RunManifest<'a>,
    zeta: f64,
    cv: &'a crate::selection::CvResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    adaptive_cv: Option<&'a crate::selection::CvResult>,
    adaptive_degenerate: bool,
}

fn cmd_cv(cmd: &Command, a: &CvArgs) -> Result<i32> {
    let manifest = RunManifest::new(cmd, &[&a.input.input])?;
    let d = load(&a.input, a.model.standardize)?;
    let mut c = config(&a.model);
    c.validate(d.p())?;
    let plan = FoldPlan::new(d.n(), a.folds, a.model.seed)?;
    if a.select_zeta {
        let (zeta, _) = select_zeta(&d, &c, &plan, a.grid, &ZETA_CANDIDATES)?;
        c.zeta = zeta;
    }
    fs::create_dir_all(&a.out_dir)?;
    let opts = AdaptiveOptions::CrossValidate {
        plan: plan.clone(),
        spacing: a.grid,
        reselect: !a.reuse_lambda,
    };
    let fit: AdaptiveFit = if a.model.adaptive {
        fit_aspcr(&d, &c, &opts)?
    } else {
        let cv = crate::selection::cross_validate(&d, &c, &plan, a.grid)?;
        AdaptiveFit {
            pilot: cv.best_model.clone(),
            model: cv.best_model.clone(),
            pilot_cv: Some(cv),
            weights: None,
            adaptive_cv: None,
            degenerate: false,
        }
    };
    let cv = fit.pilot_cv.as_ref().expect("cv ran");
    write_json(
        &a.out_dir.join("cv.json"),
        &CvFile {
            manifest: &manifest,
            zeta: c.zeta,
            cv,
            adaptive_cv: fit.adaptive_cv.as_ref(),
            adaptive_degenerate: fit.degenerate,
        },
    )?;
    println!(
        "selected lambda_beta = {}, lambda_gamma = {} (cv error {})",
        cv.best_lambda_beta(),
        cv.best_lambda_gamma(),
        cv.best_error()
    );
    if let Some(acv) = &fit.adaptive_cv {
        println!(
            "adaptive stage: lambda_beta = {}, lambda_gamma = {} (cv error {})",
            acv.best_lambda_beta(),
            acv.best_lambda_gamma(),
            acv.best_error()
        );
    }
    if fit.degenerate {
        eprintln!("warning: pilot fit has no nonzero loading; adaptive stage skipped");
    }
    for w in &cv.warnings {
        eprintln!("warning: {w}");
    }
    let mf = ModelFile {
        manifest: &manifest,
        predictors: d.names(),
        composite: fit.model.composite().to_vec(),
        model: &fit.model,
        pilot: a.model.adaptive.then_some(&fit.pilot),
    };
    finish_model(&a.out_dir, "model.json", &mf)
}

#[derive(serde::Deserialize)]
struct SavedModel {
    model: SpcrModel,
}

fn cmd_predict(cmd: &Command, a: &PredictArgs) -> Result<i32> {
    let manifest = RunManifest::new(cmd, &[&a.model, &a.input])?;
    let saved: SavedModel = serde_json::from_str(&fs::read_to_string(&a.model)?)?;
    let table = read_table(&a.input, !a.no_header)?;
    let (x, y) = match &a.response {
        Some(r) => {
            let sel: ResponseColumn = r.parse().expect("infallible");
            let (_, x, y) = table.split_response(&sel)?;
            (x, Some(y))
        }
        None => (table.values, None),
    };
    if x.ncols() != saved.model.p() {
        return Err(SpcrError::Dimension(format!(
            "model has {} predictors, input has {}",
            saved.model.p(),
            x.ncols()
        )));
    }
    let pred = saved.model.predict(x.view());
    fs::create_dir_all(&a.out_dir)?;
    let mut s = String::from("prediction\n");
    for v in &pred {
        s.push_str(&format!("{v}\n"));
    }
    fs::write(a.out_dir.join("predictions.csv"), s)?;
    write_json(
        &a.out_dir.join("predict.json"),
        &serde_json::json!({ "manifest": manifest }),
    )?;
    if let Some(y) = y {
        println!("mse {}", crate::simbench::mse(pred.view(), y.view()));
    }
    Ok(0)
}

fn cmd_simulate(cmd: &Command, a: &SimulateArgs) -> Result<i32> {
    let manifest = RunManifest::new(cmd, &[])?;
    let id: CaseId = a.case.parse()?;
    let (train, test) = make_case(id, a.n, a.sigma, a.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    let names: Vec<String> = (1..=train.p()).map(|j| format!("x{j}")).collect();
    write_dataset(&a.out_dir.join("train.csv"), &names, train.x(), train.y())?;
    write_dataset(&a.out_dir.join("test.csv"), &names, test.x(), test.y())?;
    write_json(
        &a.out_dir.join("simulate.json"),
        &serde_json::json!({ "manifest": manifest }),
    )?;
    println!(
        "wrote train.csv ({} rows) and test.csv ({} rows)",
        train.n(),
        test.n()
    );
    Ok(0)
}

#[derive(Serialize)]
struct BenchFile<'a> {
    manifest: &'a RunManifest<'a>,
    report: &'a crate::simbench::BenchReport,
}

fn cmd_bench(cmd: &Command, a: &BenchArgs) -> Result<i32> {
    let manifest = RunManifest::new(cmd, &[])?;
    let cases: Vec<CaseId> = a
        .cases
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    let methods: Vec<Method> = a
        .methods
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    let ks: Vec<usize> = parse_list(&a.k, "k")?;
    let ns: Vec<usize> = parse_list(&a.n, "n")?;
    let sigmas: Vec<f64> = parse_list(&a.sigma, "sigma")?;
    let mut specs = Vec::new();
    for &case in &cases {
        for &k in &ks {
            for &n in &ns {
                for &sigma in &sigmas {
                    specs.push(BenchSpec { case, k, n, sigma });
                }
            }
        }
    }
    let mut cfg = BenchConfig::new(specs, methods, a.replications, a.seed);
    cfg.w = a.w;
    cfg.zeta = a.zeta;
    cfg.folds = a.folds;
    cfg.spacing = a.grid;
    cfg.reselect = !a.reuse_lambda;
    cfg.max_sweeps = a.max_sweeps;
    if a.standardize {
        cfg.preprocess.push(Preprocess::Standardize);
    }
    let report = run_benchmark(&cfg)?;
    fs::create_dir_all(&a.out_dir)?;
    fs::write(a.out_dir.join("bench.csv"), report.to_csv()?)?;
    write_json(
        &a.out_dir.join("bench.json"),
        &BenchFile {
            manifest: &manifest,
            report: &report,
        },
    )?;
    print!("{}", report.table());
    Ok(if report.all_converged() {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}
