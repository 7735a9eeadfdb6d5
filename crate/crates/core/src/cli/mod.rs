//! The `magcas` command-line frontend.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad arguments, 3 preset or
//! config error, 4 numerical failure, 130 interrupted. Failures also print a
//! one-line JSON object to stderr.

pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::casimir::{casimir_magnetization, CasimirError, CasimirQuadrature};
use crate::dispersion::DispersionModel;
use crate::materials::{load_params, MaterialPreset, MaterialsError, PresetRegistry};
use crate::par::{self, Exec};
use crate::sweep::{figure_bundle, run_sweep_cancellable, Axis, FigureId, RowStatus, SweepError, SweepPlan};
use output::{curve_csv, gnuplot_script, slug, Curve, MagnetizationRecord, OutputRecord, Units, SCHEMA_VERSION};

pub const WORKERS_ENV: &str = "MAGCAS_WORKERS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Args(String),
    #[error(transparent)]
    Preset(#[from] MaterialsError),
    #[error("{0}")]
    Numerical(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("interrupted")]
    Interrupted,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Args(_) => 2,
            CliError::Preset(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Interrupted => 130,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Args(_) => "arguments",
            CliError::Preset(_) => "preset",
            CliError::Numerical(_) => "numerical",
            CliError::Interrupted => "interrupted",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "exit_code": self.exit_code(), "message": self.to_string() }).to_string()
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Quadrature(e) => CliError::Numerical(e.to_string()),
            other => CliError::Args(other.to_string()),
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Debug, Parser)]
#[command(name = "magcas", version, about = "Magnonic Casimir energy of magnetic thin films")]
pub struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Casimir energy of one film.
    Compute(ComputeArgs),
    /// Reproduce a figure: one CSV per curve plus a gnuplot script.
    Figure(FigureArgs),
    /// Scan one parameter.
    Sweep(SweepArgs),
    /// Casimir and bulk magnetization of a ferrimagnet film.
    Magnetization(MagnetizationArgs),
    /// List presets or print one in parameter-file format.
    Preset(PresetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MaterialArgs {
    /// Built-in preset name (Cr2O3, YIG).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    /// Parameter file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exponent l of the out-of-plane exchange (ferrimagnet).
    #[arg(long)]
    pub l: Option<f64>,
    /// D_z / D (ferrimagnet).
    #[arg(long)]
    pub dz_ratio: Option<f64>,
    /// Gap parameter delta (antiferromagnet).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Zeeman energy H0 in meV (ferrimagnet).
    #[arg(long)]
    pub h0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct NumericArgs {
    /// Relaxed tolerances (1e-8 meV); refused for l = 2.
    #[arg(long)]
    pub fast: bool,
    /// Absolute tolerance on E_cas, meV.
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Relative tolerance on E_cas.
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub material: MaterialArgs,
    /// Film thickness in magnetic unit cells.
    #[arg(long)]
    pub nz: u32,
    /// Coefficient exponent b (repeatable; default l, or 3 for antiferromagnets).
    #[arg(long)]
    pub b: Vec<f64>,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Fig2, Fig3, FigS1 or FigS2.
    pub figure: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub numeric: NumericArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub material: MaterialArgs,
    /// nz, l, dz-ratio, delta or h0.
    #[arg(long)]
    pub axis: Axis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', conflicts_with = "range", required_unless_present = "range")]
    pub values: Vec<f64>,
    /// Inclusive range START:END:STEP.
    #[arg(long)]
    pub range: Option<String>,
    /// Thickness for axes other than nz.
    #[arg(long, default_value_t = 10)]
    pub nz: u32,
    /// Coefficient exponent b (repeatable).
    #[arg(long)]
    pub b: Vec<f64>,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MagnetizationArgs {
    #[command(flatten)]
    pub material: MaterialArgs,
    /// Comma-separated thicknesses.
    #[arg(long, value_delimiter = ',', required = true)]
    pub nz: Vec<u32>,
    /// Finite-difference step in H0, meV.
    #[arg(long, default_value_t = 1e-3)]
    pub h_step: f64,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// Preset to print; lists all presets when omitted.
    pub name: Option<String>,
    /// Print as JSON instead of parameter-file text.
    #[arg(long)]
    pub json: bool,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let echo = command_echo(&args);
    match run(cli, echo) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Arguments after the program name, minus the worker count, which must not
/// change any output byte.
fn command_echo(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()) {
        if skip {
            skip = false;
        } else if a == "--workers" {
            skip = true;
        } else if !a.starts_with("--workers=") {
            out.push(a);
        }
    }
    out
}

pub fn run(cli: Cli, echo: Vec<String>) -> Result<(), CliError> {
    if cli.workers == Some(0) {
        return Err(CliError::Args("--workers must be at least 1".into()));
    }
    let go = move || match cli.command {
        Command::Compute(a) => compute(a, echo),
        Command::Figure(a) => figure(a, echo),
        Command::Sweep(a) => sweep(a, echo),
        Command::Magnetization(a) => magnetization(a, echo),
        Command::Preset(a) => preset(a),
    };
    match cli.workers {
        Some(n) => par::with_workers(n, go),
        None => go(),
    }
}

fn interrupt_flag() -> Arc<AtomicBool> {
    static FLAG: OnceLock<Arc<AtomicBool>> = OnceLock::new();
    FLAG.get_or_init(|| {
        let flag = Arc::new(AtomicBool::new(false));
        let handler_flag = Arc::clone(&flag);
        // A second handler registration fails; the first one keeps working.
        let _ = ctrlc::set_handler(move || handler_flag.store(true, Ordering::SeqCst));
        flag
    })
    .clone()
}

fn resolve_preset(m: &MaterialArgs) -> Result<MaterialPreset, CliError> {
    let mut preset = match (&m.preset, &m.config) {
        (Some(name), _) => PresetRegistry::default().get(name)?,
        (None, Some(path)) => load_params(path)?,
        (None, None) => return Err(CliError::Args("one of --preset or --config is required".into())),
    };
    let not_for = |flag: &str, kind: &str| CliError::Args(format!("--{flag} does not apply to {kind} {}", preset.name));
    match &mut preset.params {
        DispersionModel::Afm(p) => {
            for (flag, given) in [("l", m.l.is_some()), ("dz-ratio", m.dz_ratio.is_some()), ("h0", m.h0.is_some())] {
                if given {
                    return Err(not_for(flag, "antiferromagnet"));
                }
            }
            if let Some(d) = m.delta {
                *p = p.with_delta(d).map_err(|e| CliError::Args(e.to_string()))?;
            }
        }
        DispersionModel::Ferri(p) => {
            if m.delta.is_some() {
                return Err(not_for("delta", "ferrimagnet"));
            }
            if let Some(l) = m.l {
                p.l_exponent = l;
            }
            if let Some(r) = m.dz_ratio {
                p.dz_over_a2 = r * p.d_over_a2;
            }
            if let Some(h) = m.h0 {
                p.h0 = h;
            }
            p.validate().map_err(|e| CliError::Args(e.to_string()))?;
        }
    }
    Ok(preset)
}

fn default_exponent(preset: &MaterialPreset) -> f64 {
    match preset.params {
        DispersionModel::Afm(_) => 3.0,
        DispersionModel::Ferri(p) => p.l_exponent,
    }
}

fn involves_l2(model: &DispersionModel, axis: Option<(Axis, &[f64])>) -> bool {
    match model {
        DispersionModel::Afm(_) => false,
        DispersionModel::Ferri(p) => match axis {
            Some((Axis::L, values)) => values.contains(&2.0),
            _ => p.l_exponent == 2.0,
        },
    }
}

fn quadrature(n: &NumericArgs, l2: bool) -> Result<CasimirQuadrature, CliError> {
    if n.fast && l2 {
        return Err(CliError::Args("--fast is refused for l = 2, whose energy is below the relaxed tolerance".into()));
    }
    let mut q = if n.fast { CasimirQuadrature::fast() } else { CasimirQuadrature::standard() };
    if n.abs_tol.is_some() || n.rel_tol.is_some() {
        let abs = n.abs_tol.unwrap_or(q.outer.abs_tol);
        let rel = n.rel_tol.unwrap_or(q.outer.rel_tol);
        q.outer = q.outer.with_tolerances(abs, rel).map_err(|e| CliError::Args(e.to_string()))?;
    }
    Ok(q)
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), CliError> {
    match &out.output {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io_err("writing stdout"))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(format!("writing {}", path.display())))
}

fn render(record: &OutputRecord, format: Format) -> String {
    match format {
        Format::Json => record.to_json(),
        Format::Csv => record.curves.iter().map(|c| curve_csv(c, record.truncated)).collect::<Vec<_>>().join("\n"),
    }
}

fn row_failures(record: &OutputRecord) -> Result<(), CliError> {
    if record.truncated {
        return Err(CliError::Interrupted);
    }
    let failed: Vec<String> = record
        .curves
        .iter()
        .flat_map(|c| c.rows.iter().map(move |r| (c, r)))
        .filter_map(|(c, r)| match &r.status {
            RowStatus::Ok | RowStatus::Cancelled => None,
            RowStatus::ToleranceNotMet => Some(format!("{} {}={}: tolerance not met", c.label, c.axis, r.axis_value)),
            RowStatus::Failed(msg) => Some(format!("{} {}={}: {msg}", c.label, c.axis, r.axis_value)),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failed.join("; ")))
    }
}

fn run_plans(plans: &[SweepPlan]) -> Vec<Curve> {
    let cancel = interrupt_flag();
    plans.iter().map(|plan| Curve::new(plan, run_sweep_cancellable(plan, Exec::Parallel, &cancel))).collect()
}

fn compute(a: ComputeArgs, echo: Vec<String>) -> Result<(), CliError> {
    let preset = resolve_preset(&a.material)?;
    let quad = quadrature(&a.numeric, involves_l2(&preset.params, None))?;
    let b = if a.b.is_empty() { vec![default_exponent(&preset)] } else { a.b };
    let plan = SweepPlan::new("compute", preset, Axis::Nz, vec![a.nz as f64], b)?.with_quadrature(quad)?;
    let record = OutputRecord::new(echo, run_plans(&[plan]));
    emit(&a.out, &render(&record, a.out.format))?;
    row_failures(&record)
}

fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Args(format!("--range expects START:END:STEP, got {spec:?}"));
    let parts: Vec<f64> = spec.split(':').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let [start, end, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(CliError::Args(format!("--range {spec} has {count} points")));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn sweep(a: SweepArgs, echo: Vec<String>) -> Result<(), CliError> {
    let preset = resolve_preset(&a.material)?;
    let values = match &a.range {
        Some(r) => parse_range(r)?,
        None => a.values.clone(),
    };
    let quad = quadrature(&a.numeric, involves_l2(&preset.params, Some((a.axis, &values))))?;
    let b = if a.b.is_empty() { vec![default_exponent(&preset)] } else { a.b };
    let label = format!("{} {}", preset.name, a.axis);
    let plan = SweepPlan::new(label, preset, a.axis, values, b)?
        .with_n_z(a.nz)?
        .with_quadrature(quad)?;
    let record = OutputRecord::new(echo, run_plans(&[plan]));
    emit(&a.out, &render(&record, a.out.format))?;
    row_failures(&record)
}

fn figure(a: FigureArgs, echo: Vec<String>) -> Result<(), CliError> {
    let id: FigureId = a.figure.parse().map_err(|e: SweepError| CliError::Args(e.to_string()))?;
    let plans = figure_bundle(id);
    let l2 = plans.iter().any(|p| involves_l2(&p.preset().params, None));
    let quad = quadrature(&a.numeric, l2)?;
    let plans: Vec<SweepPlan> = plans.into_iter().map(|p| p.with_quadrature(quad.clone())).collect::<Result<_, _>>()?;
    fs::create_dir_all(&a.out_dir).map_err(io_err(format!("creating {}", a.out_dir.display())))?;
    let record = OutputRecord::new(echo, run_plans(&plans));

    let mut files = Vec::new();
    for curve in &record.curves {
        let name = format!("{id}_{}.csv", slug(&curve.label));
        write_file(&a.out_dir.join(&name), &curve_csv(curve, record.truncated))?;
        files.push((curve.label.clone(), name));
    }
    let b_label = match id {
        FigureId::Fig2 => "3",
        _ => "l",
    };
    write_file(&a.out_dir.join(format!("{id}.gp")), &gnuplot_script(&id.to_string(), &files, b_label))?;
    write_file(&a.out_dir.join(format!("{id}.json")), &record.to_json())?;
    row_failures(&record)
}

fn magnetization(a: MagnetizationArgs, echo: Vec<String>) -> Result<(), CliError> {
    let preset = resolve_preset(&a.material)?;
    let DispersionModel::Ferri(params) = preset.params else {
        return Err(CliError::Args(format!("magnetization needs a ferrimagnet; {} has no H0 dependence", preset.name)));
    };
    if a.nz.contains(&0) {
        return Err(CliError::Args("--nz values must be at least 1".into()));
    }
    let quad = quadrature(&a.numeric, params.l_exponent == 2.0)?;
    let results = par::map_ordered(&a.nz, Exec::Parallel, |&n| casimir_magnetization(&params, n, &quad, a.h_step));
    let rows = results.into_iter().collect::<Result<Vec<_>, CasimirError>>().map_err(|e| match e {
        CasimirError::InvalidInput(msg) => CliError::Args(msg),
        other => CliError::Numerical(other.to_string()),
    })?;
    let record = MagnetizationRecord {
        schema_version: SCHEMA_VERSION.into(),
        command: echo,
        units: Units::default(),
        preset,
        rows,
    };
    let text = match a.out.format {
        Format::Json => record.to_json(),
        Format::Csv => record.to_csv(),
    };
    emit(&a.out, &text)
}

fn preset(a: PresetArgs) -> Result<(), CliError> {
    let registry = PresetRegistry::default();
    let text = match a.name {
        None => registry.names().map(|n| format!("{n}\n")).collect(),
        Some(name) => {
            let p = registry.get(&name)?;
            if a.json {
                serde_json::to_string_pretty(&p).expect("presets serialize") + "\n"
            } else {
                p.to_config_string()
            }
        }
    };
    std::io::stdout().lock().write_all(text.as_bytes()).map_err(io_err("writing stdout"))
}
