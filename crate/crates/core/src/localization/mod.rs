//! Transverse, longitudinal and volumetric localization of the Rydberg
//! excitation, with numeric and closed-form resolutions.

mod fwhm;
mod map3d;

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{self, BlochError, LocalDrive};
use crate::fields::{self, FieldError};
use crate::meanfield::{self, linspace, MaskMode, MeanFieldError, QuadratureSpec};
use crate::units::{AngularFrequency, DetuningMode, Position, SystemConfig};

pub use fwhm::{bisect_crossing, extract_fwhm, extract_fwhm_outermost, fwhm_of_fn, FwhmError};
pub use map3d::{map3d, map3d_value, DeltaOffset, Map3D, Map3DSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalizationError {
    #[error("too few samples: {0} (at least 100 required)")]
    TooFewSamples(usize),
    #[error("scan range must be positive and finite")]
    BadRange,
    #[error("closed-form resolution needs κ ≥ 2√2, got {0}")]
    KappaTooSmall(f64),
    #[error("closed-form a_z needs 0 < w ≤ 2Δc0, got w = {w}, Δc0 = {delta_c0}")]
    LinewidthOutOfDomain { w: f64, delta_c0: f64 },
    #[error("winding numbers must be ≥ 1, got {0}")]
    BadWinding(i32),
    #[error("operation requires the standing-wave detuning mode")]
    NeedsStandingWave,
    #[error("grid too coarse: only {samples} samples across the half maximum along {axis}")]
    GridTooCoarse { axis: char, samples: usize },
    #[error("FWHM: {0}")]
    Fwhm(#[from] FwhmError),
    #[error("shift: {0}")]
    Shift(#[from] MeanFieldError),
    #[error("steady state: {0}")]
    Bloch(#[from] BlochError),
    #[error("field: {0}")]
    Field(#[from] FieldError),
}

/// How the control detuning tracks the Rydberg shift across a transverse scan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AntiblockadeMode {
    /// `Δc = s(rj)` at every sample.
    Perfect,
    /// `Δc = s(0)` everywhere.
    Partial,
    /// `s = 0`, `Δc = 0`.
    #[default]
    None,
}

impl AntiblockadeMode {
    pub fn label(self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::Partial => "partial",
            Self::None => "none",
        }
    }

    fn needs_shift(self) -> bool {
        self != Self::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    /// Signed x along φ = 0 at `z = 3λc/4`.
    Transverse,
    /// z on the beam axis.
    Longitudinal,
}

/// Sampled one-dimensional σrr profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanProfile {
    pub axis: ScanAxis,
    pub mode: AntiblockadeMode,
    /// Sample coordinates (µm).
    pub coords: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Rydberg shift used at each sample.
    pub shift: Vec<AngularFrequency>,
    pub lambda_c: f64,
    /// Full width at σrr = 0.5 (µm); `None` when the profile stays below
    /// the level.
    pub fwhm: Option<f64>,
    pub peak: f64,
    pub peak_at: f64,
}

impl ScanProfile {
    pub fn coords_lambda(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c / self.lambda_c).collect()
    }

    pub fn fwhm_lambda(&self) -> Option<f64> {
        self.fwhm.map(|w| w / self.lambda_c)
    }
}

/// Where and how the Rydberg shift is evaluated for shift-aware modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSettings {
    pub quadrature: QuadratureSpec,
    pub mask: MaskMode,
}

impl ShiftSettings {
    /// `100 λc` extents with `0.05 λc` spacing: adequate for profile shapes.
    pub fn scan_default(lambda_c: f64) -> Self {
        Self {
            quadrature: QuadratureSpec::in_lambda(lambda_c, 100.0, 0.05),
            mask: MaskMode::Local,
        }
    }
}

/// Transverse sample: signed coordinate, radius, shift and control detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TransversePoint {
    pub x: f64,
    pub s: AngularFrequency,
    pub delta_c: AngularFrequency,
}

/// Memoized `s(r)` at `z = 3λc/4`.
pub(crate) struct ShiftCache<'a> {
    config: &'a SystemConfig,
    settings: ShiftSettings,
    values: HashMap<u64, AngularFrequency>,
}

impl<'a> ShiftCache<'a> {
    pub fn new(config: &'a SystemConfig, settings: ShiftSettings) -> Self {
        Self {
            config,
            settings,
            values: HashMap::new(),
        }
    }

    pub fn at(&mut self, r: f64) -> Result<AngularFrequency, MeanFieldError> {
        let key = r.abs().to_bits();
        if let Some(&s) = self.values.get(&key) {
            return Ok(s);
        }
        let pos = Position::new(r.abs(), 0.0, self.config.localized_z());
        let s = meanfield::shift_at(
            &pos,
            self.config,
            &self.settings.quadrature,
            self.settings.mask,
        )?;
        self.values.insert(key, s);
        Ok(s)
    }
}

/// Symmetric coordinates: `x[n−1−i] = −x[i]` bit for bit.
pub(crate) fn symmetric_coords(x_max: f64, n: usize) -> Vec<f64> {
    let mut xs = linspace(-x_max, x_max, n);
    for i in 0..n / 2 {
        xs[n - 1 - i] = -xs[i];
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    xs
}

/// Shift and control detuning at radius `r` for `mode`.
fn mode_detuning(
    mode: AntiblockadeMode,
    r: f64,
    cache: &mut ShiftCache<'_>,
    s_core: AngularFrequency,
) -> Result<(AngularFrequency, AngularFrequency), MeanFieldError> {
    Ok(match mode {
        AntiblockadeMode::None => (AngularFrequency::ZERO, AngularFrequency::ZERO),
        AntiblockadeMode::Perfect => {
            let s = cache.at(r)?;
            (s, s)
        }
        AntiblockadeMode::Partial => (cache.at(r)?, s_core),
    })
}

/// σrr at signed transverse coordinate `x` with explicit shift and detuning.
pub(crate) fn transverse_sigma(
    config: &SystemConfig,
    x: f64,
    s: AngularFrequency,
    delta_c: AngularFrequency,
) -> Result<f64, BlochError> {
    let pos = Position::from_cartesian(x, 0.0, config.localized_z());
    let mut drive = LocalDrive::at(config, &pos, s);
    drive.delta_c = delta_c;
    bloch::steady_sigma_rr(&drive)
}

pub(crate) fn transverse_points(
    config: &SystemConfig,
    mode: AntiblockadeMode,
    coords: &[f64],
    settings: &ShiftSettings,
) -> Result<Vec<TransversePoint>, LocalizationError> {
    let mut cache = ShiftCache::new(config, *settings);
    let s_core = if mode.needs_shift() {
        cache.at(0.0)?
    } else {
        AngularFrequency::ZERO
    };
    coords
        .iter()
        .map(|&x| {
            let (s, delta_c) = mode_detuning(mode, x, &mut cache, s_core)?;
            Ok(TransversePoint { x, s, delta_c })
        })
        .collect()
}

/// σrr across the vortex core at `z = 3λc/4`, sampled on `x ∈ [−r_max, r_max]`
/// along φ = 0. The FWHM comes from bisection on the continuous profile.
pub fn transverse_scan(
    config: &SystemConfig,
    mode: AntiblockadeMode,
    r_max: f64,
    n_samples: usize,
    settings: &ShiftSettings,
) -> Result<ScanProfile, LocalizationError> {
    if n_samples < 100 {
        return Err(LocalizationError::TooFewSamples(n_samples));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(LocalizationError::BadRange);
    }
    let coords = symmetric_coords(r_max, n_samples);
    let points = transverse_points(config, mode, &coords, settings)?;
    let sigma = points
        .iter()
        .map(|p| transverse_sigma(config, p.x, p.s, p.delta_c))
        .collect::<Result<Vec<_>, _>>()?;
    let fwhm = transverse_fwhm(config, mode, settings)?;
    let (peak_idx, peak) = sigma
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least 100 samples");
    Ok(ScanProfile {
        axis: ScanAxis::Transverse,
        mode,
        peak_at: coords[peak_idx],
        shift: points.iter().map(|p| p.s).collect(),
        coords,
        sigma,
        lambda_c: config.lambda_c(),
        fwhm: Some(fwhm),
        peak,
    })
}

/// FWHM of the continuous transverse profile: twice the radius where σrr
/// drops to 0.5 between the core and the intensity maximum.
pub fn transverse_fwhm(
    config: &SystemConfig,
    mode: AntiblockadeMode,
    settings: &ShiftSettings,
) -> Result<f64, LocalizationError> {
    if config.beam.winding_l == 0 {
        return Err(FieldError::NoVortexCore.into());
    }
    let mut cache = ShiftCache::new(config, *settings);
    let s_core = if mode.needs_shift() {
        cache.at(0.0)?
    } else {
        AngularFrequency::ZERO
    };
    let cache = std::cell::RefCell::new(cache);
    let failure = std::cell::RefCell::new(None);
    let sigma = |r: f64| -> f64 {
        let res = mode_detuning(mode, r, &mut cache.borrow_mut(), s_core)
            .map_err(LocalizationError::from)
            .and_then(|(s, dc)| Ok(transverse_sigma(config, r, s, dc)?));
        match res {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let hi = fields::lg_peak_radius(&config.beam);
    let level = 0.5;
    let (at_core, at_peak) = (sigma(0.0), sigma(hi));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if !(at_core >= level && at_peak < level) {
        return Err(FwhmError::NoCrossing { level }.into());
    }
    let r_half = bisect_crossing(sigma, 0.0, hi, level);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    Ok(2.0 * r_half)
}

/// Closed-form transverse FWHM `W0·√(1 − √(κ²−8)/κ)` under perfect
/// antiblockade.
pub fn analytic_a_r(kappa: f64, w0: f64) -> Result<f64, LocalizationError> {
    let floor = 2.0 * SQRT_2;
    if !kappa.is_finite() || kappa < floor {
        return Err(LocalizationError::KappaTooSmall(kappa));
    }
    let root = (kappa * kappa - 8.0).max(0.0).sqrt();
    Ok(w0 * (1.0 - root / kappa).sqrt())
}

/// Transverse FWHM per winding number, without Rydberg shift.
pub fn oam_broadening_scan(
    config: &SystemConfig,
    l_values: &[i32],
) -> Result<Vec<(i32, f64)>, LocalizationError> {
    let settings = ShiftSettings::scan_default(config.lambda_c());
    l_values
        .iter()
        .map(|&l| {
            if l < 1 {
                return Err(LocalizationError::BadWinding(l));
            }
            let cfg = (*config)
                .with_winding(l)
                .map_err(|_| LocalizationError::BadWinding(l))?;
            Ok((l, transverse_fwhm(&cfg, AntiblockadeMode::None, &settings)?))
        })
        .collect()
}

/// σrr on the beam axis with the shift frozen at `s0`.
pub fn longitudinal_sigma(
    config: &SystemConfig,
    z: f64,
    s0: AngularFrequency,
) -> Result<f64, BlochError> {
    bloch::steady_sigma_rr(&LocalDrive::at(config, &Position::on_axis(z), s0))
}

const WINDOW_SAMPLES: usize = 4001;

/// σrr(0, z) over `[start, end]` with the standing-wave detuning and a frozen
/// shift. The FWHM is taken in the one-period window around the localization
/// plane `(3/4 + n)λc` nearest the middle of the range.
pub fn longitudinal_scan(
    config: &SystemConfig,
    z_range: (f64, f64),
    n_samples: usize,
    s0: AngularFrequency,
) -> Result<ScanProfile, LocalizationError> {
    if config.detuning.mode != DetuningMode::StandingWave {
        return Err(LocalizationError::NeedsStandingWave);
    }
    if n_samples < 100 {
        return Err(LocalizationError::TooFewSamples(n_samples));
    }
    let (start, end) = z_range;
    if !start.is_finite() || !end.is_finite() || end <= start {
        return Err(LocalizationError::BadRange);
    }
    let coords = linspace(start, end, n_samples);
    let sigma = coords
        .iter()
        .map(|&z| longitudinal_sigma(config, z, s0))
        .collect::<Result<Vec<_>, _>>()?;
    let lam = config.lambda_c();
    let n = (0.5 * (start + end) / lam - 0.75).round();
    let centre = (0.75 + n) * lam;
    let fwhm = longitudinal_fwhm(config, s0, centre)?;
    let (peak_idx, peak) = sigma
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least 100 samples");
    Ok(ScanProfile {
        axis: ScanAxis::Longitudinal,
        mode: AntiblockadeMode::Partial,
        peak_at: coords[peak_idx],
        shift: vec![s0; coords.len()],
        coords,
        sigma,
        lambda_c: lam,
        fwhm: Some(fwhm),
        peak,
    })
}

/// Longitudinal FWHM inside `centre ± λc/2`.
pub fn longitudinal_fwhm(
    config: &SystemConfig,
    s0: AngularFrequency,
    centre: f64,
) -> Result<f64, LocalizationError> {
    let lam = config.lambda_c();
    let (lo, hi) = (centre - 0.5 * lam, centre + 0.5 * lam);
    let zs = linspace(lo, hi, WINDOW_SAMPLES);
    let vals = zs
        .iter()
        .map(|&z| longitudinal_sigma(config, z, s0))
        .collect::<Result<Vec<_>, _>>()?;
    let level = 0.5;
    // Sample-level checks guard the bisection against multiple peaks.
    let peak_idx = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty window");
    extract_fwhm(&zs, &vals, level)?;
    let f = |z: f64| longitudinal_sigma(config, z, s0).unwrap_or(f64::NAN);
    Ok(fwhm_of_fn(f, zs[peak_idx], lo, hi, level)?)
}

/// Closed-form longitudinal FWHM `[1/2 − arcsin(1 − w/Δc0)/π]·λc`.
pub fn analytic_a_z(
    w: AngularFrequency,
    delta_c0: AngularFrequency,
    lambda_c: f64,
) -> Result<f64, LocalizationError> {
    let (wv, d) = (w.rad_per_us(), delta_c0.rad_per_us());
    if !(wv > 0.0 && wv <= 2.0 * d) {
        return Err(LocalizationError::LinewidthOutOfDomain { w: wv, delta_c0: d });
    }
    Ok((0.5 - (1.0 - wv / d).asin() * FRAC_1_PI) * lambda_c)
}

/// Drive at the transverse half-maximum radius (η = 1) in the localization
/// plane under perfect antiblockade; used for steady-time estimates.
pub fn half_max_drive(config: &SystemConfig) -> Result<LocalDrive, LocalizationError> {
    let r = fields::eta_crossing_radius(config, 1.0)?;
    let pos = Position::new(r, 0.0, config.localized_z());
    Ok(LocalDrive::at(config, &pos, AngularFrequency::ZERO).antiblockaded())
}
