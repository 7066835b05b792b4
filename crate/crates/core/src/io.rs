//! Configuration files, run manifests and output writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::meanfield::{MaskMode, QuadratureSpec};
use crate::noise::{NoiseKind, NoiseSpec};
use crate::units::{
    make_config, AngularFrequency, ConfigError, DetuningMode, RawConfig, SystemConfig,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config: {0}")]
    Conflict(String),
}

/// Short SHA-256 hex digest of the canonical JSON form of a config.
pub fn fingerprint(config: &SystemConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    digest_hex(json.as_bytes())
}

fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .take(8)
        .fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub omega_c0_mhz: Option<f64>,
    pub waist_um: Option<f64>,
    pub winding_l: Option<i32>,
    pub wavelength_um: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub omega_p0_mhz: Option<f64>,
    /// Sets `Ωp0 = Ωc0/κ`.
    pub kappa: Option<f64>,
    pub delta_p_mhz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningSection {
    pub mode: Option<DetuningMode>,
    pub delta_c_mhz: Option<f64>,
    pub delta_c0_mhz: Option<f64>,
    pub delta_shift_mhz: Option<f64>,
    pub period_um: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub gamma_e_mhz: Option<f64>,
    pub gamma_r_mhz: Option<f64>,
    pub density_um3: Option<f64>,
    pub c6_mhz_um6: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    /// Extent of both axes in units of λc.
    pub extent_lambda: Option<f64>,
    /// Lattice spacing in units of λc.
    pub spacing_lambda: Option<f64>,
    pub mask: Option<MaskMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKindName {
    Intensity,
    Frequency,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: Option<NoiseKindName>,
    /// Relative to Ωc0 for intensity noise, MHz for frequency noise.
    pub std: Option<f64>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub correlation_length_um: Option<f64>,
}

/// Parsed configuration file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub detuning: DetuningSection,
    #[serde(default)]
    pub medium: MediumSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub noise: NoiseSection,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self, IoError> {
        toml::from_str(text).map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kappa: Option<f64>,
    pub grid_spacing: Option<f64>,
    pub seed: Option<u64>,
    pub noise_kind: Option<NoiseKindName>,
    pub noise_std: Option<f64>,
    pub trajectories: Option<usize>,
    pub mask: Option<MaskMode>,
}

/// Everything a run needs, with precedence flags > file > defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSetup {
    pub config: SystemConfig,
    pub quadrature: QuadratureSpec,
    pub mask: MaskMode,
    pub noise: NoiseSpec,
}

pub fn resolve(file: &ConfigFile, flags: &Overrides) -> Result<RunSetup, IoError> {
    let d = RawConfig::default();
    let raw = RawConfig {
        omega_c0_mhz: file.beam.omega_c0_mhz.unwrap_or(d.omega_c0_mhz),
        waist_um: file.beam.waist_um.unwrap_or(d.waist_um),
        winding_l: file.beam.winding_l.unwrap_or(d.winding_l),
        wavelength_um: file.beam.wavelength_um.unwrap_or(d.wavelength_um),
        omega_p0_mhz: file.probe.omega_p0_mhz.unwrap_or(d.omega_p0_mhz),
        delta_p_mhz: file.probe.delta_p_mhz.unwrap_or(d.delta_p_mhz),
        mode: file.detuning.mode.unwrap_or(d.mode),
        delta_c_mhz: file.detuning.delta_c_mhz.unwrap_or(d.delta_c_mhz),
        delta_c0_mhz: file.detuning.delta_c0_mhz.unwrap_or(d.delta_c0_mhz),
        delta_shift_mhz: file
            .detuning
            .delta_shift_mhz
            .or(file.detuning.delta_c0_mhz)
            .unwrap_or(d.delta_shift_mhz),
        period_um: file
            .detuning
            .period_um
            .or(file.beam.wavelength_um)
            .unwrap_or(d.period_um),
        gamma_e_mhz: file.medium.gamma_e_mhz.unwrap_or(d.gamma_e_mhz),
        gamma_r_mhz: file.medium.gamma_r_mhz.unwrap_or(d.gamma_r_mhz),
        density_um3: file.medium.density_um3.unwrap_or(d.density_um3),
        c6_mhz_um6: file.medium.c6_mhz_um6.unwrap_or(d.c6_mhz_um6),
    };
    if file.probe.kappa.is_some() && file.probe.omega_p0_mhz.is_some() {
        return Err(IoError::Conflict(
            "probe.kappa and probe.omega_p0_mhz are mutually exclusive".into(),
        ));
    }
    let mut config = make_config(&raw)?;
    if let Some(k) = flags.kappa.or(file.probe.kappa) {
        config = config.with_kappa(k)?;
    }

    let lam = config.lambda_c();
    let extent = file.quadrature.extent_lambda.unwrap_or(100.0);
    let spacing = flags
        .grid_spacing
        .or(file.quadrature.spacing_lambda)
        .unwrap_or(0.01);
    let quadrature = QuadratureSpec::in_lambda(lam, extent, spacing);
    quadrature
        .validate()
        .map_err(|e| IoError::Conflict(e.to_string()))?;
    let mask = flags.mask.or(file.quadrature.mask).unwrap_or_default();

    let kind = flags
        .noise_kind
        .or(file.noise.kind)
        .unwrap_or(NoiseKindName::Intensity);
    let std = flags.noise_std.or(file.noise.std).unwrap_or(0.0);
    let noise = NoiseSpec {
        kind: match kind {
            NoiseKindName::Intensity => NoiseKind::Intensity { relative_std: std },
            NoiseKindName::Frequency => NoiseKind::Frequency {
                std: AngularFrequency::from_mhz(std),
            },
        },
        trajectories: flags.trajectories.or(file.noise.trajectories).unwrap_or(10),
        seed: flags.seed.or(file.noise.seed).unwrap_or(0),
        correlation_length: file.noise.correlation_length_um.unwrap_or(0.0),
    };
    noise
        .validate()
        .map_err(|e| IoError::Conflict(e.to_string()))?;
    Ok(RunSetup {
        config,
        quadrature,
        mask,
        noise,
    })
}

/// Provenance of one output file. Wall-clock data lives in [`Sidecar`] so
/// the data file stays byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub fingerprint: String,
    pub config: SystemConfig,
    /// Operation-specific settings (quadrature, scan ranges, noise).
    pub specs: Value,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &SystemConfig, specs: Value, seed: Option<u64>) -> Self {
        Self {
            tool: "vortex-localize",
            version: VERSION,
            subcommand: subcommand.to_string(),
            fingerprint: fingerprint(config),
            config: *config,
            specs,
            seed,
        }
    }
}

/// Run facts that vary between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub manifest: &'a RunManifest,
    pub output: String,
    pub threads: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Column-oriented numeric output plus a summary record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// Column names carrying their units, e.g. `x_um`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: BTreeMap<String, Value>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }
}

pub fn render(manifest: &RunManifest, table: &Table, format: Format) -> String {
    match format {
        Format::Csv => render_csv(manifest, table),
        Format::Json => render_json(manifest, table),
    }
}

fn render_csv(manifest: &RunManifest, table: &Table) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} {}", manifest.tool, manifest.version);
    let _ = writeln!(out, "# subcommand: {}", manifest.subcommand);
    let _ = writeln!(out, "# fingerprint: {}", manifest.fingerprint);
    if let Some(seed) = manifest.seed {
        let _ = writeln!(out, "# seed: {seed}");
    }
    let _ = writeln!(
        out,
        "# config: {}",
        serde_json::to_string(&manifest.config).expect("config serializes")
    );
    let _ = writeln!(out, "# specs: {}", manifest.specs);
    for (k, v) in &table.summary {
        let _ = writeln!(out, "# {k}: {v}");
    }
    let _ = writeln!(out, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn render_json(manifest: &RunManifest, table: &Table) -> String {
    let doc = serde_json::json!({
        "manifest": manifest,
        "summary": table.summary,
        "columns": table.columns,
        "rows": table.rows,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// `<out>.manifest.json` next to the data file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
