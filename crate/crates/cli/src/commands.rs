use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use tbell_core::analysis::{delta_feasibility, CorrelatorEstimate, WignerReport, DELTA_THRESHOLD};
use tbell_core::engine::{run_experiment, run_experiment_with_workers, with_workers};
use tbell_core::search::{
    analytic_optimum, first_non_violating, maximize_violation_in, noise_sweep, SearchMode, SweepRow,
};
use tbell_core::{
    ConditionalTable, Disturbance, ExperimentPlan, InequalityReport, Model, NoiseDiagnostics, QubitState,
    RealityDist, SearchResult, Setting, SettingTriple, Tally,
};

use crate::config::{parse_direction, parse_etas, parse_triple, parse_weights, resolve_seed};
use crate::error::{CliError, Result};
use crate::format::{read_records, write_pretty, write_records, Meta};

/// Refinement tolerances above this are flagged as loose in the report.
pub const LOOSE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "tbell", version, about = "Temporal Bell inequality simulator and analysis bench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate throw records from a model.
    Simulate(SimulateArgs),
    /// Tally a record file and evaluate the inequalities.
    Analyze(AnalyzeArgs),
    /// Search for the setting triple maximizing the correlator-form violation.
    Optimize(OptimizeArgs),
    /// Sweep the second-outcome flip probability at the optimal triple.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Quantum,
    Realist,
    Invasive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DisturbanceKind {
    /// Redraw the reality so the second outcome follows the quantum law.
    Quantum,
    /// Leave the reality unchanged.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "quantum")]
    pub model: ModelKind,
    /// Amplitude of the `+e` component, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Relative phase of the `-e` component.
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    /// Reference axis `x,y,z` of the state.
    #[arg(long, default_value = "0,0,1")]
    pub e: String,
    /// Bloch vector `x,y,z` of a possibly mixed state; overrides --s/--phi/--e.
    #[arg(long, conflicts_with_all = ["s", "phi", "e"])]
    pub bloch: Option<String>,
    /// Eight reality weights, order +++,++-,+-+,+--,-++,-+-,--+,---.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, value_enum, default_value = "quantum")]
    pub disturbance: DisturbanceKind,
    /// Settings `ax,ay,az:bx,by,bz:cx,cy,cz`; defaults to x, y, (x+y)/√2.
    #[arg(long)]
    pub triple: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub throws: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draw a fresh seed instead of the fixed default.
    #[arg(long)]
    pub entropy: bool,
    /// Probability of flipping each second outcome.
    #[arg(long, default_value_t = 0.0)]
    pub flip: f64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the meta header line.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Record file; `-` for stdin.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Coarse grid spacing in degrees.
    #[arg(long, default_value_t = 10.0)]
    pub grid_step: f64,
    /// Refinement tolerance on the objective.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Hold b orthogonal to a.
    #[arg(long)]
    pub orthogonal_ab: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated flip probabilities.
    #[arg(long, default_value = "0,0.05,0.1,0.12,0.14,0.15,0.16,0.18,0.2")]
    pub eta: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub throws: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub entropy: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: SweepFormat,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_target(path: Option<&Path>) -> PathBuf {
    path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn emit<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = open_output(path)?;
    write_pretty(&mut w, value)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(io_target(path), e))
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(w) => with_workers(w, f)?,
        None => f(),
    }
}

/// Builds the plan described by the simulate flags.
pub fn simulate_plan(a: &SimulateArgs) -> Result<ExperimentPlan> {
    let triple = match &a.triple {
        Some(t) => parse_triple(t)?,
        None => SettingTriple::canonical_optimal(),
    };
    let dist = || -> Result<RealityDist> {
        a.weights.as_deref().map_or(Ok(RealityDist::uniform()), parse_weights)
    };
    let model = match a.model {
        ModelKind::Quantum => {
            if a.weights.is_some() {
                return Err(CliError::Config("--weights applies to realist and invasive models".into()));
            }
            let state = match &a.bloch {
                Some(b) => QubitState::from_bloch(parse_floats3(b)?).map_err(|e| CliError::Config(e.to_string()))?,
                None => tbell_core::quantum::state_from_amplitudes(a.s, a.phi, parse_direction(&a.e, "e")?)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            };
            Model::Quantum { state }
        }
        ModelKind::Realist => Model::Realist { dist: dist()? },
        ModelKind::Invasive => Model::Invasive {
            dist: dist()?,
            disturbance: match a.disturbance {
                DisturbanceKind::Quantum => Disturbance::quantum_mimicking(&triple),
                DisturbanceKind::Identity => Disturbance::Identity,
            },
        },
    };
    let seed = resolve_seed(a.seed, a.entropy)?;
    let plan = ExperimentPlan::new(model, triple, a.throws, seed).with_second_flip(a.flip);
    plan.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(plan)
}

fn parse_floats3(text: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Config(format!("bloch: cannot parse {text:?}")))?;
    v.try_into()
        .map_err(|_| CliError::Config("bloch: expected 3 components".into()))
}

pub fn plan_meta(plan: &ExperimentPlan) -> Meta {
    Meta {
        seed: plan.seed,
        triple: plan.triple.to_arrays(),
        model: plan.model.clone(),
        n_throws: plan.n_throws,
        second_flip: plan.second_flip,
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let plan = simulate_plan(a)?;
    info!("simulating {} throws of the {} model, seed {}", plan.n_throws, plan.model.name(), plan.seed);
    let records = match a.workers {
        Some(w) => run_experiment_with_workers(&plan, w),
        None => run_experiment(&plan),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    let meta = plan_meta(&plan);
    let mut w = open_output(a.out.as_deref())?;
    write_records(&mut w, (!a.no_meta).then_some(&meta), &records)
        .map_err(|e| CliError::io(io_target(a.out.as_deref()), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct PairCorrelator {
    pub first_setting: Setting,
    pub second_setting: Setting,
    #[serde(flatten)]
    pub estimate: CorrelatorEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Feasibility {
    pub delta_max: f64,
    pub threshold: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
    pub tally: Tally,
    pub correlators: Vec<PairCorrelator>,
    pub wigner: WignerReport,
    pub correlator_form: InequalityReport,
    pub reference_bell: InequalityReport,
    pub noise: NoiseDiagnostics,
    pub symmetrized: InequalityReport,
    pub feasibility: Feasibility,
}

/// Evaluates everything on a tally with all nine pairs present.
pub fn analyze_tally(tally: &Tally, meta: Option<serde_json::Value>) -> Result<AnalysisReport> {
    let table = ConditionalTable::from_tally(tally);
    let missing = table.missing_pairs();
    if !missing.is_empty() {
        return Err(CliError::InsufficientData(missing));
    }
    let correlators = Setting::ordered_pairs()
        .map(|(x, y)| {
            Ok(PairCorrelator {
                first_setting: x,
                second_setting: y,
                estimate: table.correlator(x, y)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let noise = table.noise_diagnostics()?;
    let feasibility = Feasibility {
        delta_max: noise.delta_max,
        threshold: DELTA_THRESHOLD,
        feasible: delta_feasibility(noise.delta_max),
    };
    Ok(AnalysisReport {
        meta,
        tally: *tally,
        correlators,
        wigner: table.wigner()?,
        correlator_form: table.correlator_form()?,
        reference_bell: table.reference_bell()?,
        symmetrized: table.symmetrized()?,
        noise,
        feasibility,
    })
}

pub fn analyze_path(path: &Path) -> Result<AnalysisReport> {
    let source = path.display().to_string();
    let file = if source == "-" {
        read_records(io::stdin().lock(), "<stdin>")?
    } else {
        let f = File::open(path).map_err(|e| CliError::io(path, e))?;
        read_records(BufReader::new(f), &source)?
    };
    info!("read {} records from {source}", file.records.len());
    analyze_tally(&Tally::from_records(&file.records), file.meta)
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let report = analyze_path(&a.input)?;
    emit(a.out.as_deref(), &report)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub mode: SearchMode,
    pub grid_step_deg: f64,
    pub tol: f64,
    pub loose_tolerance: bool,
    pub result: SearchResult,
    pub reference: SearchResult,
    pub gap_to_reference: f64,
}

pub fn optimize(a: &OptimizeArgs) -> Result<OptimizeReport> {
    let mode = if a.orthogonal_ab { SearchMode::OrthogonalAb } else { SearchMode::Free };
    let loose = a.tol > LOOSE_TOLERANCE;
    if loose {
        warn!("refinement tolerance {} is looser than {LOOSE_TOLERANCE}", a.tol);
    }
    let result = in_pool(a.workers, || {
        maximize_violation_in(mode, a.grid_step, a.tol).map_err(|e| CliError::Config(e.to_string()))
    })?;
    let reference = analytic_optimum();
    Ok(OptimizeReport {
        mode,
        grid_step_deg: a.grid_step,
        tol: a.tol,
        loose_tolerance: loose,
        gap_to_reference: result.objective - reference.objective,
        result,
        reference,
    })
}

pub fn cmd_optimize(a: &OptimizeArgs) -> Result<()> {
    emit(a.out.as_deref(), &optimize(a)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub seed: u64,
    pub n_throws: u64,
    pub rows: Vec<SweepRow>,
    pub first_non_violating: Option<f64>,
}

pub fn sweep(a: &SweepArgs) -> Result<SweepReport> {
    let etas = parse_etas(&a.eta)?;
    let seed = resolve_seed(a.seed, a.entropy)?;
    if a.throws == 0 {
        return Err(CliError::Config("--throws must be at least 1".into()));
    }
    let rows = in_pool(a.workers, || {
        noise_sweep(&etas, a.throws, seed).map_err(CliError::from)
    })?;
    Ok(SweepReport {
        seed,
        n_throws: a.throws,
        first_non_violating: first_non_violating(&rows),
        rows,
    })
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    use crate::format::format_f64;
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| CliError::io("<csv>", io::Error::other(e));
    out.write_record(["eta", "delta", "delta_stderr", "lhs", "lhs_stderr", "expected_lhs", "violated", "z_score"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            format_f64(r.eta),
            format_f64(r.delta),
            format_f64(r.delta_stderr),
            format_f64(r.lhs),
            format_f64(r.lhs_stderr),
            format_f64(r.expected_lhs),
            r.violated.to_string(),
            r.z_score.map(format_f64).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| CliError::io("<csv>", e))
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let report = sweep(a)?;
    match a.format {
        SweepFormat::Json => emit(a.out.as_deref(), &report),
        SweepFormat::Csv => {
            let w = open_output(a.out.as_deref())?;
            write_sweep_csv(w, &report.rows)
        }
    }
}
