//! Command-line front end.
//!
//! Settings resolve as flags > config file > built-in defaults. Data go to
//! `--out` (default `<subcommand>.csv|json`), a manifest with run timing to
//! `<out>.manifest.json`, progress to stderr and a one-line summary to stdout.

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bloch::{self, LocalDrive};
use crate::fields;
use crate::io::{
    self, ConfigFile, Format, NoiseKindName, Overrides, RunManifest, RunSetup, Sidecar, Table,
};
use crate::localization::{self, AntiblockadeMode, DeltaOffset, Map3DSpec, ShiftSettings};
use crate::meanfield::{self, BoundaryResolution, MaskMode, ShiftAxis};
use crate::noise;
use crate::units::{AngularFrequency, Position, SystemConfig};

#[derive(Debug, Parser)]
#[command(
    name = "vortex-localize",
    version,
    about = "Rydberg excitation and subwavelength localization in a vortex control beam",
    after_help = "Precedence: command-line flags > --config file > built-in defaults."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output data file [default: <subcommand>.csv|json]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master RNG seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    /// Sets Ωp0 = Ωc0/κ
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Shift-quadrature spacing in units of λc
    #[arg(long, global = true)]
    pub grid_spacing: Option<f64>,
    /// Blockade mask of the shift integral
    #[arg(long, global = true, value_enum)]
    pub mask: Option<MaskArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskArg {
    Local,
    Core,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    None,
    Partial,
    Perfect,
}

impl From<ModeArg> for AntiblockadeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::None => Self::None,
            ModeArg::Partial => Self::Partial,
            ModeArg::Perfect => Self::Perfect,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetArg {
    Calibrated,
    Detuned,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisArg {
    Radial,
    Longitudinal,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Intensity,
    Frequency,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady σrr at one point
    Steady(SteadyArgs),
    /// Transverse profile and FWHM a_r
    ScanR(ScanRArgs),
    /// Longitudinal profile and FWHM a_z
    ScanZ(ScanZArgs),
    /// Transverse FWHM versus winding number
    ScanL(ScanLArgs),
    /// σrr on a 3D grid with the half-maximum level set
    Map3d(Map3dArgs),
    /// Mean-field Rydberg shift profile
    Shift(ShiftArgs),
    /// Partial-antiblockade shift δ = Δc0 + s0
    CalibrateDelta(CalibrateArgs),
    /// Local blockade radius and boundary shape
    Blockade(BlockadeArgs),
    /// Time to enter the steady band from the ground state
    SteadyTime(SteadyTimeArgs),
    /// Trajectory-averaged transverse profile under laser noise
    Noise(NoiseArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Steady(_) => "steady",
            Self::ScanR(_) => "scan-r",
            Self::ScanZ(_) => "scan-z",
            Self::ScanL(_) => "scan-l",
            Self::Map3d(_) => "map3d",
            Self::Shift(_) => "shift",
            Self::CalibrateDelta(_) => "calibrate-delta",
            Self::Blockade(_) => "blockade",
            Self::SteadyTime(_) => "steady-time",
            Self::Noise(_) => "noise",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SteadyArgs {
    /// Radius (µm)
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Azimuth (rad)
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
    /// Axial position (µm) [default: 3λc/4]
    #[arg(long)]
    pub z: Option<f64>,
    /// Rydberg shift s/2π (MHz)
    #[arg(long, default_value_t = 0.0)]
    pub shift_mhz: f64,
    /// Set Δc = s at the point
    #[arg(long)]
    pub antiblockade: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanRArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::None)]
    pub mode: ModeArg,
    /// Half-width of the sampled x range (µm) [default: 4·W0·κ^(−1/|l|), capped at the intensity maximum]
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Quadrature spacing for the shift in λc units when the mode needs it
    #[arg(long, default_value_t = 0.05)]
    pub scan_spacing: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanZArgs {
    /// Start of the z range (µm) [default: 0]
    #[arg(long)]
    pub z_start: Option<f64>,
    /// End of the z range (µm) [default: 2λc]
    #[arg(long)]
    pub z_end: Option<f64>,
    #[arg(long, default_value_t = 801)]
    pub samples: usize,
    /// Frozen shift s0/2π (MHz) [default: calibrated]
    #[arg(long)]
    pub s0_mhz: Option<f64>,
    #[arg(long, value_enum, default_value_t = OffsetArg::Calibrated)]
    pub offset: OffsetArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanLArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub l_values: Vec<i32>,
}

#[derive(Debug, Args, Serialize)]
pub struct Map3dArgs {
    /// Samples per axis
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Transverse half-extent (µm) [default: 1.5× closed-form a_r]
    #[arg(long)]
    pub half_xy: Option<f64>,
    /// Axial half-extent (µm) [default: 1.5× closed-form a_z]
    #[arg(long)]
    pub half_z: Option<f64>,
    #[arg(long, value_enum, default_value_t = OffsetArg::Calibrated)]
    pub offset: OffsetArg,
    /// Shift s0/2π (MHz) [default: calibrated]
    #[arg(long)]
    pub s0_mhz: Option<f64>,
    /// Evaluate the shift at every voxel (slow)
    #[arg(long)]
    pub per_voxel: bool,
    #[arg(long, default_value_t = 0.5)]
    pub iso_level: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ShiftArgs {
    #[arg(long, value_enum, default_value_t = AxisArg::Radial)]
    pub axis: AxisArg,
    /// Range start (µm)
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    /// Range end (µm) [default: 2λc]
    #[arg(long)]
    pub end: Option<f64>,
    #[arg(long, default_value_t = 21)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// Also report the result at half the spacing
    #[arg(long)]
    pub check_halving: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BlockadeArgs {
    /// Atom radius (µm)
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    /// Atom z (µm) [default: 3λc/4]
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long, default_value_t = 360)]
    pub directions: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SteadyTimeArgs {
    /// Relative band around the steady value
    #[arg(long, default_value_t = 0.01)]
    pub rel_tol: f64,
    /// Integration budget (µs)
    #[arg(long, default_value_t = 400.0)]
    pub budget: f64,
    /// Radius (µm) [default: half-maximum radius, η = 1]
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct NoiseArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Relative to Ωc0 (intensity) or ν in MHz (frequency)
    #[arg(long)]
    pub std: Option<f64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::None)]
    pub mode: ModeArg,
    /// Half-width of the sampled x range (µm) [default: as scan-r]
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub scan_spacing: f64,
}

/// Failure of one named operation.
#[derive(Debug)]
pub struct CliError {
    pub op: &'static str,
    pub source: Box<dyn Error + Send + Sync>,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.op, self.source)
    }
}

impl Error for CliError {}

trait Context<T> {
    fn op(self, op: &'static str) -> Result<T, CliError>;
}

impl<T, E: Error + Send + Sync + 'static> Context<T> for Result<T, E> {
    fn op(self, op: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            op,
            source: Box::new(e),
        })
    }
}

fn usage(op: &'static str, msg: impl Into<String>) -> CliError {
    CliError {
        op,
        source: msg.into().into(),
    }
}

/// Result of one subcommand before it is written out.
struct Outcome {
    table: Table,
    specs: Value,
    seed: Option<u64>,
    line: String,
    /// Additional files as (suffix appended to the output path, contents).
    extra: Vec<(&'static str, String)>,
}

impl Outcome {
    fn new(table: Table, specs: Value, line: String) -> Self {
        Self {
            table,
            specs,
            seed: None,
            line,
            extra: Vec::new(),
        }
    }
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Executes the subcommand, writes its files and returns the summary line.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let started = Instant::now();
    let g = &cli.global;
    let name = cli.command.name();
    let threads = g
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(usage("threads", "--threads must be ≥ 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .op("threads")?;

    let file = match &g.config {
        Some(p) => ConfigFile::load(p).op("config")?,
        None => ConfigFile::default(),
    };
    let flags = overrides(cli);
    let setup = io::resolve(&file, &flags).op("config")?;

    let outcome = pool.install(|| dispatch(&cli.command, &setup))?;

    let format = match g.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let out = g
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}.{}", format.extension())));
    let mut specs = outcome.specs;
    if let Value::Object(map) = &mut specs {
        map.insert("quadrature".into(), json!(setup.quadrature));
        map.insert("mask".into(), json!(setup.mask));
    }
    let manifest = RunManifest::new(name, &setup.config, specs, outcome.seed);
    io::write_file(&out, &io::render(&manifest, &outcome.table, format)).op("output")?;
    for (suffix, text) in &outcome.extra {
        let mut path = out.as_os_str().to_owned();
        path.push(suffix);
        io::write_file(&PathBuf::from(path), text).op("output")?;
    }
    let sidecar = Sidecar {
        manifest: &manifest,
        output: out.display().to_string(),
        threads,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&sidecar).expect("manifest serializes");
    io::write_file(&io::sidecar_path(&out), &text).op("output")?;
    Ok(outcome.line)
}

fn overrides(cli: &Cli) -> Overrides {
    let g = &cli.global;
    let mut o = Overrides {
        kappa: g.kappa,
        grid_spacing: g.grid_spacing,
        seed: g.seed,
        mask: g.mask.map(|m| match m {
            MaskArg::Local => MaskMode::Local,
            MaskArg::Core => MaskMode::Core,
        }),
        ..Overrides::default()
    };
    if let Command::Noise(n) = &cli.command {
        o.noise_kind = n.kind.map(|k| match k {
            KindArg::Intensity => NoiseKindName::Intensity,
            KindArg::Frequency => NoiseKindName::Frequency,
        });
        o.noise_std = n.std;
        o.trajectories = n.trajectories;
    }
    o
}

fn dispatch(cmd: &Command, setup: &RunSetup) -> Result<Outcome, CliError> {
    match cmd {
        Command::Steady(a) => steady(a, setup),
        Command::ScanR(a) => scan_r(a, setup),
        Command::ScanZ(a) => scan_z(a, setup),
        Command::ScanL(a) => scan_l(a, setup),
        Command::Map3d(a) => map3d(a, setup),
        Command::Shift(a) => shift(a, setup),
        Command::CalibrateDelta(a) => calibrate(a, setup),
        Command::Blockade(a) => blockade(a, setup),
        Command::SteadyTime(a) => steady_time(a, setup),
        Command::Noise(a) => noise_scan(a, setup),
    }
}

fn specs_of<T: Serialize>(args: &T) -> Value {
    json!({ "args": args })
}

fn steady(a: &SteadyArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let pos = Position::new(a.r, a.phi, a.z.unwrap_or_else(|| cfg.localized_z()));
    let mut drive = LocalDrive::at(cfg, &pos, AngularFrequency::from_mhz(a.shift_mhz));
    if a.antiblockade {
        drive = drive.antiblockaded();
    }
    let sigma = bloch::steady_sigma_rr(&drive).op("steady")?;
    let eta = fields::intensity_ratio_eta(&pos, cfg);
    let w = bloch::linewidth_w(&drive);
    let mut t = Table::new(&[
        "r_um",
        "phi_rad",
        "z_um",
        "z_lambda",
        "eta",
        "delta_c_mhz",
        "w_mhz",
        "sigma_rr",
    ]);
    t.push(vec![
        pos.r,
        pos.phi,
        pos.z,
        pos.z / cfg.lambda_c(),
        eta,
        drive.delta_c.mhz(),
        w.mhz(),
        sigma,
    ]);
    t.note("sigma_rr", sigma);
    let line = format!(
        "steady: sigma_rr = {sigma} (eta = {eta}, w/2pi = {} MHz)",
        w.mhz()
    );
    Ok(Outcome::new(t, specs_of(a), line))
}

fn default_r_max(cfg: &SystemConfig) -> f64 {
    let l = f64::from(cfg.beam.winding_l.abs().max(1));
    (4.0 * cfg.beam.waist_w0 * cfg.kappa().powf(-1.0 / l)).min(fields::lg_peak_radius(&cfg.beam))
}

fn shift_settings(setup: &RunSetup, spacing: f64) -> ShiftSettings {
    let mut quad = setup.quadrature;
    let lam = setup.config.lambda_c();
    quad.spacing_r = spacing * lam;
    quad.spacing_z = spacing * lam;
    ShiftSettings {
        quadrature: quad,
        mask: setup.mask,
    }
}

fn profile_table(p: &localization::ScanProfile, spread: Option<&[f64]>) -> Table {
    let (c, cl) = match p.axis {
        localization::ScanAxis::Transverse => ("x_um", "x_lambda"),
        localization::ScanAxis::Longitudinal => ("z_um", "z_lambda"),
    };
    let mut cols = vec![c, cl, "sigma_rr", "s_mhz"];
    if spread.is_some() {
        cols.push("sigma_rr_spread");
    }
    let mut t = Table::new(&cols);
    let lam = p.coords_lambda();
    for i in 0..p.coords.len() {
        let mut row = vec![p.coords[i], lam[i], p.sigma[i], p.shift[i].mhz()];
        if let Some(s) = spread {
            row.push(s[i]);
        }
        t.push(row);
    }
    t.note("fwhm_um", p.fwhm.map_or(Value::Null, |v| json!(v)));
    t.note(
        "fwhm_lambda",
        p.fwhm_lambda().map_or(Value::Null, |v| json!(v)),
    );
    t.note("peak", p.peak);
    t.note("peak_at_um", p.peak_at);
    t.note("mode", p.mode.label());
    t
}

fn fwhm_line(op: &str, p: &localization::ScanProfile) -> String {
    let width = match (p.fwhm, p.fwhm_lambda()) {
        (Some(w), Some(wl)) => format!("{:.4} nm ({wl:.6} lambda_c)", w * 1e3),
        _ => "none (profile stays below 0.5)".to_string(),
    };
    format!(
        "{op}: FWHM = {width}, peak = {:.6}, mode = {}",
        p.peak,
        p.mode.label()
    )
}

fn scan_r(a: &ScanRArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let r_max = a.r_max.unwrap_or_else(|| default_r_max(cfg));
    let settings = shift_settings(setup, a.scan_spacing);
    let p = localization::transverse_scan(cfg, a.mode.into(), r_max, a.samples, &settings)
        .op("transverse_scan")?;
    let line = fwhm_line("scan-r", &p);
    let mut specs = specs_of(a);
    specs["r_max_um"] = json!(r_max);
    Ok(Outcome::new(profile_table(&p, None), specs, line))
}

fn calibrated(setup: &RunSetup) -> Result<meanfield::DeltaCalibration, CliError> {
    eprintln!("calibrating δ on the shift quadrature...");
    meanfield::calibrate_delta(&setup.config, &setup.quadrature, setup.mask).op("calibrate_delta")
}

fn offset_config(cfg: &SystemConfig, s0: AngularFrequency, offset: OffsetArg) -> SystemConfig {
    let k = match offset {
        OffsetArg::Calibrated => 1.0,
        OffsetArg::Detuned => 2.0,
    };
    cfg.with_delta_shift(cfg.detuning.delta_c0 + s0 * k)
}

fn scan_z(a: &ScanZArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let lam = setup.config.lambda_c();
    let s0 = match a.s0_mhz {
        Some(v) => AngularFrequency::from_mhz(v),
        None => calibrated(setup)?.s0,
    };
    let cfg = offset_config(&setup.config, s0, a.offset);
    let range = (a.z_start.unwrap_or(0.0), a.z_end.unwrap_or(2.0 * lam));
    let p = localization::longitudinal_scan(&cfg, range, a.samples, s0).op("longitudinal_scan")?;
    let mut t = profile_table(&p, None);
    let w = meanfield::local_linewidth(0.0, &cfg);
    let analytic = localization::analytic_a_z(w, cfg.detuning.delta_c0, lam).ok();
    t.note(
        "a_z_closed_form_um",
        analytic.map_or(Value::Null, |v| json!(v)),
    );
    t.note("s0_mhz", s0.mhz());
    t.note("delta_mhz", cfg.detuning.delta_shift.mhz());
    let peaks: Vec<f64> = (1..p.sigma.len() - 1)
        .filter(|&i| {
            p.sigma[i] >= p.sigma[i - 1] && p.sigma[i] > p.sigma[i + 1] && p.sigma[i] >= 0.5
        })
        .map(|i| p.coords[i] / lam)
        .collect();
    t.note("peaks_lambda", json!(peaks));
    let mut specs = specs_of(a);
    specs["s0_mhz"] = json!(s0.mhz());
    Ok(Outcome::new(t, specs, fwhm_line("scan-z", &p)))
}

fn scan_l(a: &ScanLArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let lam = setup.config.lambda_c();
    let widths =
        localization::oam_broadening_scan(&setup.config, &a.l_values).op("oam_broadening_scan")?;
    let mut t = Table::new(&["l", "fwhm_um", "fwhm_lambda"]);
    for &(l, w) in &widths {
        t.push(vec![f64::from(l), w, w / lam]);
    }
    let line = widths
        .iter()
        .map(|(l, w)| format!("l={l}: {:.4} um", w))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome::new(t, specs_of(a), format!("scan-l: {line}")))
}

fn map3d(a: &Map3dArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let lam = cfg.lambda_c();
    let s0 = match a.s0_mhz {
        Some(v) => AngularFrequency::from_mhz(v),
        None => calibrated(setup)?.s0,
    };
    let w = meanfield::local_linewidth(0.0, cfg);
    let half_xy = match a.half_xy {
        Some(v) => v,
        None => {
            1.5 * localization::analytic_a_r(cfg.kappa(), cfg.beam.waist_w0).op("analytic_a_r")?
        }
    };
    let half_z = match a.half_z {
        Some(v) => v,
        None => {
            1.5 * localization::analytic_a_z(w, cfg.detuning.delta_c0, lam).op("analytic_a_z")?
        }
    };
    let mut spec = Map3DSpec::around_localization(
        cfg,
        [half_xy, half_xy, half_z],
        a.samples,
        match a.offset {
            OffsetArg::Calibrated => DeltaOffset::Calibrated,
            OffsetArg::Detuned => DeltaOffset::Detuned,
        },
        s0,
    );
    spec.iso_level = a.iso_level;
    if a.per_voxel {
        spec.per_voxel = Some((setup.quadrature, setup.mask));
    }
    eprintln!("evaluating {} voxels...", a.samples.pow(3));
    let m = localization::map3d(cfg, &spec).op("map3d")?;
    let mut t = Table::new(&["x_um", "y_um", "z_um", "sigma_rr"]);
    for (i, &x) in m.xs.iter().enumerate() {
        for (j, &y) in m.ys.iter().enumerate() {
            for (k, &z) in m.zs.iter().enumerate() {
                t.push(vec![x, y, z, m.value(i, j, k)]);
            }
        }
    }
    t.note("iso_level", m.iso_level);
    t.note("peak", m.peak);
    t.note("peak_at_um", json!(m.peak_at));
    t.note("delta_mhz", m.delta.mhz());
    t.note("s0_mhz", s0.mhz());
    t.note("extents_um", json!(m.extents));
    t.note("truncated", m.truncated);
    t.note("crossings", m.crossings.len());
    let extents = match m.extents {
        Some(e) => format!(
            "extents = ({:.4}, {:.4}, {:.4}) nm",
            e[0] * 1e3,
            e[1] * 1e3,
            e[2] * 1e3
        ),
        None => "no half-maximum surface".to_string(),
    };
    let line = format!("map3d: peak = {:.6}, {extents}", m.peak);
    let mut specs = specs_of(a);
    specs["grid"] = json!(spec);
    let mut out = Outcome::new(t, specs, line);
    let mut cloud = String::from("x_um,y_um,z_um\n");
    for p in &m.crossings {
        cloud.push_str(&format!("{},{},{}\n", p[0], p[1], p[2]));
    }
    out.extra.push((".iso.csv", cloud));
    Ok(out)
}

fn shift(a: &ShiftArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let lam = cfg.lambda_c();
    let axis = match a.axis {
        AxisArg::Radial => ShiftAxis::Radial,
        AxisArg::Longitudinal => ShiftAxis::Longitudinal,
    };
    let end = a.end.unwrap_or(2.0 * lam);
    eprintln!("evaluating {} shift integrals...", a.samples);
    let g = meanfield::shift_profile(
        axis,
        (a.start, end, a.samples),
        cfg,
        &setup.quadrature,
        setup.mask,
    )
    .op("shift_at")?;
    let mut t = Table::new(&["r_um", "z_um", "r_lambda", "z_lambda", "s_mhz"]);
    for p in &g.points {
        t.push(vec![p.r, p.z, p.r / lam, p.z / lam, p.s.mhz()]);
    }
    t.note(
        "core_flatness",
        g.core_flatness.map_or(Value::Null, |v| json!(v)),
    );
    let (lo, hi) = g
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.s.mhz()), hi.max(p.s.mhz()))
        });
    let line = format!(
        "shift: s/2pi in [{lo:.6}, {hi:.6}] MHz over {} points",
        g.points.len()
    );
    Ok(Outcome::new(t, specs_of(a), line))
}

fn calibrate(a: &CalibrateArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cal = calibrated(setup)?;
    let mut t = Table::new(&["kappa", "delta_mhz", "s0_mhz", "iterations"]);
    let kappa = setup.config.kappa();
    t.push(vec![
        kappa,
        cal.delta.mhz(),
        cal.s0.mhz(),
        cal.iterations as f64,
    ]);
    let mut line = format!(
        "calibrate-delta: delta/2pi = {:.4} MHz (s0/2pi = {:.5} MHz, kappa = {kappa})",
        cal.delta.mhz(),
        cal.s0.mhz()
    );
    if a.check_halving {
        let fine =
            meanfield::calibrate_delta(&setup.config, &setup.quadrature.halved(), setup.mask)
                .op("calibrate_delta")?;
        let rel = (fine.s0.rad_per_us() - cal.s0.rad_per_us()).abs() / fine.s0.rad_per_us();
        t.note("s0_half_spacing_mhz", fine.s0.mhz());
        t.note("halving_change", rel);
        line.push_str(&format!(", halving change {rel:.2e}"));
    }
    Ok(Outcome::new(t, specs_of(a), line))
}

fn blockade(a: &BlockadeArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let atom = Position::new(a.r, 0.0, a.z.unwrap_or_else(|| cfg.localized_z()));
    let w = meanfield::local_linewidth(atom.r, cfg);
    let rb = meanfield::blockade_radius(w, cfg.medium.c6).op("blockade_radius")?;
    let n_sa = meanfield::superatom_count(rb, cfg.medium.density_rho);
    let res = BoundaryResolution {
        directions: a.directions.max(1),
        ..BoundaryResolution::default()
    };
    let b = meanfield::blockade_boundary(&atom, cfg, &res);
    let mut t = Table::new(&["theta_rad", "distance_um", "x_um", "z_um"]);
    for r in &b.rays {
        t.push(vec![r.theta, r.distance, r.x, r.z]);
    }
    t.note("w_mhz", w.mhz());
    t.note("blockade_radius_um", rb);
    t.note("superatom_count", n_sa);
    t.note("max_over_min", b.max_over_min());
    t.note(
        "dip_radius_um",
        b.dip_radius().map_or(Value::Null, |v| json!(v)),
    );
    let line = format!(
        "blockade: R_b = {rb:.4} um, N_sa = {n_sa:.1}, anisotropy max/min = {:.4}",
        b.max_over_min()
    );
    Ok(Outcome::new(t, specs_of(a), line))
}

fn steady_time(a: &SteadyTimeArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let (drive, r) = match a.r {
        Some(r) => {
            let pos = Position::new(r, 0.0, cfg.localized_z());
            (
                LocalDrive::at(cfg, &pos, AngularFrequency::ZERO).antiblockaded(),
                r,
            )
        }
        None => (
            localization::half_max_drive(cfg).op("steady_time")?,
            fields::eta_crossing_radius(cfg, 1.0).op("steady_time")?,
        ),
    };
    eprintln!("integrating the Bloch equations up to {} µs...", a.budget);
    let ts = bloch::steady_time(&drive, a.rel_tol, a.budget).op("steady_time")?;
    let sigma = bloch::steady_sigma_rr(&drive).op("steady_time")?;
    let mut t = Table::new(&["kappa", "r_um", "rel_tol", "sigma_rr_steady", "t_s_us"]);
    t.push(vec![cfg.kappa(), r, a.rel_tol, sigma, ts]);
    let line = format!(
        "steady-time: T_s = {ts:.4} us (kappa = {}, r = {r:.6} um)",
        cfg.kappa()
    );
    Ok(Outcome::new(t, specs_of(a), line))
}

fn noise_scan(a: &NoiseArgs, setup: &RunSetup) -> Result<Outcome, CliError> {
    let cfg = &setup.config;
    let r_max = a.r_max.unwrap_or_else(|| default_r_max(cfg));
    let settings = shift_settings(setup, a.scan_spacing);
    let res = noise::noisy_transverse_scan(
        cfg,
        &setup.noise,
        a.mode.into(),
        r_max,
        a.samples,
        &settings,
    )
    .op("noisy_transverse_scan")?;
    let mut t = profile_table(&res.profile, Some(&res.spread));
    t.note("clamped", res.clamped);
    t.note("noise", json!(res.spec));
    let line = format!(
        "{}, clamped = {}",
        fwhm_line("noise", &res.profile),
        res.clamped
    );
    let mut specs = specs_of(a);
    specs["noise"] = json!(setup.noise);
    specs["r_max_um"] = json!(r_max);
    let mut out = Outcome::new(t, specs, line);
    out.seed = Some(setup.noise.seed);
    Ok(out)
}
