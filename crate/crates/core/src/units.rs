//! Canonical units and validated physical parameters.
//!
//! Angular frequencies are stored in rad/µs and lengths in µm. Configuration
//! values are given as per-2π frequencies in MHz, so `ν = 80` becomes
//! `2π·80 rad/µs`. Everything downstream consumes the canonical values only.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Invariant violation found while building a [`SystemConfig`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: value must be finite")]
    NotFinite { field: &'static str },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Angular frequency in rad/µs.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency(f64);

impl AngularFrequency {
    pub const ZERO: Self = Self(0.0);

    pub const fn from_rad_per_us(value: f64) -> Self {
        Self(value)
    }

    /// `ν` in MHz to `2πν` in rad/µs.
    pub fn from_mhz(nu: f64) -> Self {
        Self(TAU * nu)
    }

    pub const fn rad_per_us(self) -> f64 {
        self.0
    }

    /// Back to the per-2π value in MHz.
    pub fn mhz(self) -> f64 {
        self.0 / TAU
    }

    pub fn abs(self) -> Self {
        Self(self.0.abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for AngularFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π×{} MHz", self.mhz())
    }
}

impl Add for AngularFrequency {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for AngularFrequency {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for AngularFrequency {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl Mul<f64> for AngularFrequency {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self(self.0 * rhs)
    }
}

impl Div<f64> for AngularFrequency {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        Self(self.0 / rhs)
    }
}

/// Cylindrical position: radius and axial coordinate in µm, azimuth in rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
}

impl Position {
    /// Azimuth is wrapped into `[0, 2π)`; a negative radius is folded onto
    /// the opposite half-plane.
    pub fn new(r: f64, phi: f64, z: f64) -> Self {
        let (r, phi) = if r < 0.0 { (-r, phi + PI) } else { (r, phi) };
        Self {
            r,
            phi: phi.rem_euclid(TAU),
            z,
        }
    }

    pub fn on_axis(z: f64) -> Self {
        Self {
            r: 0.0,
            phi: 0.0,
            z,
        }
    }

    pub fn from_cartesian(x: f64, y: f64, z: f64) -> Self {
        Self::new(x.hypot(y), y.atan2(x), z)
    }

    pub fn to_cartesian(self) -> (f64, f64, f64) {
        let (s, c) = self.phi.sin_cos();
        (self.r * c, self.r * s, self.z)
    }
}

/// Laguerre-Gaussian control beam with no radial nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeamConfig {
    pub omega_c0: AngularFrequency,
    pub waist_w0: f64,
    pub winding_l: i32,
    pub wavelength_c: f64,
}

impl BeamConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_finite("beam.omega_c0", self.omega_c0.rad_per_us())?;
        check_finite("beam.waist", self.waist_w0)?;
        check_finite("beam.wavelength", self.wavelength_c)?;
        if self.waist_w0 <= 0.0 {
            return Err(invalid("beam.waist: waist must be positive"));
        }
        if self.wavelength_c <= 0.0 {
            return Err(invalid("beam.wavelength: wavelength must be positive"));
        }
        if self.omega_c0.rad_per_us() < 0.0 {
            return Err(invalid(
                "beam.omega_c0: peak Rabi frequency must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Plane traveling-wave probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub omega_p0: AngularFrequency,
    pub delta_p: AngularFrequency,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_finite("probe.omega_p0", self.omega_p0.rad_per_us())?;
        check_finite("probe.delta_p", self.delta_p.rad_per_us())?;
        if self.omega_p0.rad_per_us() <= 0.0 {
            return Err(invalid(
                "probe.omega_p0: probe Rabi frequency must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetuningMode {
    Constant,
    StandingWave,
}

/// Control detuning, either constant or `Δc0·sin(2πz/period) + δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningModulation {
    pub mode: DetuningMode,
    pub delta_c_const: AngularFrequency,
    pub delta_c0: AngularFrequency,
    pub delta_shift: AngularFrequency,
    pub period: f64,
}

impl DetuningModulation {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_finite("detuning.delta_c", self.delta_c_const.rad_per_us())?;
        check_finite("detuning.delta_c0", self.delta_c0.rad_per_us())?;
        check_finite("detuning.delta_shift", self.delta_shift.rad_per_us())?;
        check_finite("detuning.period", self.period)?;
        if self.delta_c0.rad_per_us() < 0.0 {
            return Err(invalid(
                "detuning.delta_c0: modulation amplitude must be non-negative",
            ));
        }
        if self.period <= 0.0 {
            return Err(invalid("detuning.period: period must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomMedium {
    pub gamma_e: AngularFrequency,
    pub gamma_r: AngularFrequency,
    /// Ground-state density in µm⁻³.
    pub density_rho: f64,
    /// Van der Waals coefficient in rad/µs·µm⁶.
    pub c6: f64,
}

impl AtomMedium {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_finite("medium.gamma_e", self.gamma_e.rad_per_us())?;
        check_finite("medium.gamma_r", self.gamma_r.rad_per_us())?;
        check_finite("medium.density", self.density_rho)?;
        check_finite("medium.c6", self.c6)?;
        if self.gamma_e.rad_per_us() <= 0.0 {
            return Err(invalid("medium.gamma_e: decay rate must be positive"));
        }
        if self.gamma_r.rad_per_us() < 0.0 {
            return Err(invalid("medium.gamma_r: decay rate must be non-negative"));
        }
        if self.density_rho <= 0.0 {
            return Err(invalid("medium.density: density must be positive"));
        }
        if self.c6 <= 0.0 {
            return Err(invalid(
                "medium.c6: C6 must be positive (repulsive interaction)",
            ));
        }
        Ok(())
    }

    /// Coherence dephasing `γ = (Γe + Γr)/2`.
    pub fn dephasing(&self) -> AngularFrequency {
        (self.gamma_e + self.gamma_r) * 0.5
    }
}

/// Complete validated parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConfig {
    pub beam: BeamConfig,
    pub probe: ProbeConfig,
    pub detuning: DetuningModulation,
    pub medium: AtomMedium,
}

impl SystemConfig {
    pub fn new(
        beam: BeamConfig,
        probe: ProbeConfig,
        detuning: DetuningModulation,
        medium: AtomMedium,
    ) -> Result<Self, ConfigError> {
        let cfg = Self {
            beam,
            probe,
            detuning,
            medium,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.beam.validate()?;
        self.probe.validate()?;
        self.detuning.validate()?;
        self.medium.validate()?;
        let k = self.kappa();
        if !k.is_finite() || k <= 0.0 {
            return Err(invalid("kappa: Ωc0/Ωp0 must be finite and positive"));
        }
        Ok(())
    }

    /// `κ = Ωc0/Ωp0`.
    pub fn kappa(&self) -> f64 {
        self.beam.omega_c0.rad_per_us() / self.probe.omega_p0.rad_per_us()
    }

    /// Same configuration with `Ωp0 = Ωc0/κ`.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self, ConfigError> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(invalid("kappa: must be finite and positive"));
        }
        self.probe.omega_p0 = self.beam.omega_c0 / kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_waist(mut self, waist: f64) -> Result<Self, ConfigError> {
        self.beam.waist_w0 = waist;
        self.validate()?;
        Ok(self)
    }

    pub fn with_winding(mut self, l: i32) -> Result<Self, ConfigError> {
        self.beam.winding_l = l;
        self.validate()?;
        Ok(self)
    }

    pub fn with_delta_shift(mut self, delta: AngularFrequency) -> Self {
        self.detuning.delta_shift = delta;
        self
    }

    pub fn lambda_c(&self) -> f64 {
        self.beam.wavelength_c
    }

    /// The 3D localization point `z = 3λc/4`.
    pub fn localized_z(&self) -> f64 {
        0.75 * self.beam.wavelength_c
    }

    pub fn probe_intensity(&self) -> f64 {
        self.probe.omega_p0.rad_per_us().powi(2)
    }
}

impl Default for SystemConfig {
    /// ⁸⁷Rb ladder with the |60s⟩ Rydberg level, κ = 100.
    fn default() -> Self {
        make_config(&RawConfig::default()).expect("default parameter set is valid")
    }
}

/// Raw configuration values: frequencies as per-2π MHz, lengths in µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawConfig {
    pub omega_c0_mhz: f64,
    pub waist_um: f64,
    pub winding_l: i32,
    pub wavelength_um: f64,
    pub omega_p0_mhz: f64,
    pub delta_p_mhz: f64,
    pub mode: DetuningMode,
    pub delta_c_mhz: f64,
    pub delta_c0_mhz: f64,
    pub delta_shift_mhz: f64,
    pub period_um: f64,
    pub gamma_e_mhz: f64,
    pub gamma_r_mhz: f64,
    pub density_um3: f64,
    pub c6_mhz_um6: f64,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            omega_c0_mhz: 80.0,
            waist_um: 1.0,
            winding_l: 1,
            wavelength_um: 0.48,
            omega_p0_mhz: 0.8,
            delta_p_mhz: 0.0,
            mode: DetuningMode::StandingWave,
            delta_c_mhz: 0.0,
            delta_c0_mhz: 30.0,
            delta_shift_mhz: 30.0,
            period_um: 0.48,
            gamma_e_mhz: 6.05,
            gamma_r_mhz: 0.0,
            // 6×10⁸ mm⁻³
            density_um3: 0.6,
            // 140 GHz·µm⁶
            c6_mhz_um6: 1.4e5,
        }
    }
}

fn check_finite(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NotFinite { field })
    }
}

/// Converts raw MHz/µm values into a validated [`SystemConfig`].
pub fn make_config(raw: &RawConfig) -> Result<SystemConfig, ConfigError> {
    let mhz = AngularFrequency::from_mhz;
    let fields = [
        ("beam.omega_c0", raw.omega_c0_mhz),
        ("beam.waist", raw.waist_um),
        ("beam.wavelength", raw.wavelength_um),
        ("probe.omega_p0", raw.omega_p0_mhz),
        ("probe.delta_p", raw.delta_p_mhz),
        ("detuning.delta_c", raw.delta_c_mhz),
        ("detuning.delta_c0", raw.delta_c0_mhz),
        ("detuning.delta_shift", raw.delta_shift_mhz),
        ("detuning.period", raw.period_um),
        ("medium.gamma_e", raw.gamma_e_mhz),
        ("medium.gamma_r", raw.gamma_r_mhz),
        ("medium.density", raw.density_um3),
        ("medium.c6", raw.c6_mhz_um6),
    ];
    for (field, v) in fields {
        check_finite(field, v)?;
    }
    SystemConfig::new(
        BeamConfig {
            omega_c0: mhz(raw.omega_c0_mhz),
            waist_w0: raw.waist_um,
            winding_l: raw.winding_l,
            wavelength_c: raw.wavelength_um,
        },
        ProbeConfig {
            omega_p0: mhz(raw.omega_p0_mhz),
            delta_p: mhz(raw.delta_p_mhz),
        },
        DetuningModulation {
            mode: raw.mode,
            delta_c_const: mhz(raw.delta_c_mhz),
            delta_c0: mhz(raw.delta_c0_mhz),
            delta_shift: mhz(raw.delta_shift_mhz),
            period: raw.period_um,
        },
        AtomMedium {
            gamma_e: mhz(raw.gamma_e_mhz),
            gamma_r: mhz(raw.gamma_r_mhz),
            density_rho: raw.density_um3,
            c6: TAU * raw.c6_mhz_um6,
        },
    )
}

/// `κ = Ωc0/Ωp0`.
pub fn kappa(config: &SystemConfig) -> f64 {
    config.kappa()
}
