//! Blockade radius, superatom bookkeeping and the mean-field Rydberg shift.
//!
//! The shift felt by an atom at `(rj, zj)` is the blockade-masked integral
//!
//! ```text
//! s = 2π C6 ρ Ip ∬ r χ / ([(r − rj)² + (z − zj)²]³ B(r, z)) dz dr
//! B = Ic(r) + (4π/3) Rb(r)³ ρ Ip + (γ² + 2Ip) Δc(z)² / (Ip + Ic(r))
//! ```
//!
//! where `Ip/B` is the superatom-limited excitation fraction `fR` of a
//! neighbor and `Rb(r)` follows the local linewidth. The integral is a
//! midpoint sum on a uniform `(r, z)` lattice, evaluated row by row in
//! parallel and reduced in a fixed order.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{self, control_intensity};
use crate::summation::{pairwise_sum, par_row_sum};
use crate::units::{AngularFrequency, DetuningMode, Position, SystemConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeanFieldError {
    #[error("linewidth must be positive for a finite blockade radius, got {0}")]
    ZeroLinewidth(f64),
    #[error("quadrature spec invalid: {0}")]
    BadQuadrature(String),
    #[error("blockade radius {radius} µm is below twice the lattice spacing {spacing} µm")]
    UnresolvedBlockade { radius: f64, spacing: f64 },
    #[error("quadrature not converged: {relative:.3} relative change on halving the spacing")]
    NotConverged { relative: f64 },
    #[error("operation requires the standing-wave detuning mode")]
    NeedsStandingWave,
    #[error("sample range leaves the quadrature domain")]
    RangeOutsideDomain,
    #[error("delta calibration did not settle after {0} iterations")]
    CalibrationDiverged(usize),
}

/// Integration lattice: `r ∈ [0, extent_r]`, `z ∈ zj ± extent_z/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub extent_r: f64,
    pub extent_z: f64,
    pub spacing_r: f64,
    pub spacing_z: f64,
}

impl QuadratureSpec {
    /// `100 λc` extents with `0.01 λc` spacing.
    pub fn standard(lambda_c: f64) -> Self {
        Self::in_lambda(lambda_c, 100.0, 0.01)
    }

    /// Extents and spacing given as multiples of `λc`.
    pub fn in_lambda(lambda_c: f64, extent: f64, spacing: f64) -> Self {
        Self {
            extent_r: extent * lambda_c,
            extent_z: extent * lambda_c,
            spacing_r: spacing * lambda_c,
            spacing_z: spacing * lambda_c,
        }
    }

    pub fn halved(&self) -> Self {
        Self {
            spacing_r: 0.5 * self.spacing_r,
            spacing_z: 0.5 * self.spacing_z,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), MeanFieldError> {
        let all = [self.extent_r, self.extent_z, self.spacing_r, self.spacing_z];
        if all.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(MeanFieldError::BadQuadrature(
                "extents and spacings must be positive".into(),
            ));
        }
        if self.spacing_r > self.extent_r || self.spacing_z > self.extent_z {
            return Err(MeanFieldError::BadQuadrature(
                "spacing exceeds extent".into(),
            ));
        }
        Ok(())
    }

    fn n_r(&self) -> usize {
        (self.extent_r / self.spacing_r).round() as usize
    }

    fn n_z(&self) -> usize {
        (self.extent_z / self.spacing_z).round() as usize
    }
}

/// Which blockade radius excludes neighbors from the shift integral.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// Radius from the linewidth at each neighbor's own position.
    #[default]
    Local,
    /// One radius from the linewidth at the shifted atom.
    Core,
}

/// `Rb = (C6/w)^{1/6}`.
pub fn blockade_radius(w: AngularFrequency, c6: f64) -> Result<f64, MeanFieldError> {
    let w = w.rad_per_us();
    if w.is_nan() || w <= 0.0 {
        return Err(MeanFieldError::ZeroLinewidth(w));
    }
    Ok((c6 / w).powf(1.0 / 6.0))
}

/// Two-photon linewidth at cylindrical radius `r`; independent of the
/// detuning and of z.
pub fn local_linewidth(r: f64, config: &SystemConfig) -> AngularFrequency {
    let ip = config.probe_intensity();
    let g = config.medium.dephasing().rad_per_us();
    let dp = config.probe.delta_p.rad_per_us();
    AngularFrequency::from_rad_per_us(
        (ip + control_intensity(r, &config.beam)) / (g * g + dp * dp + 2.0 * ip).sqrt(),
    )
}

pub fn local_blockade_radius(r: f64, config: &SystemConfig) -> f64 {
    blockade_radius(local_linewidth(r, config), config.medium.c6)
        .expect("probe intensity is positive for a valid config")
}

/// `Nsa = (4π/3) Rb³ ρ`.
pub fn superatom_count(r_b: f64, rho: f64) -> f64 {
    4.0 * PI / 3.0 * r_b.powi(3) * rho
}

/// `fR = f0 / (1 + (Nsa − 1) f0)`.
pub fn excitation_fraction(f0: f64, n_sa: f64) -> f64 {
    f0 / (1.0 + (n_sa - 1.0) * f0)
}

/// 0 strictly inside the blockade sphere of radius `r_b` around the atom,
/// 1 on or outside it. Points are `(r, z)` pairs.
pub fn chi_mask(point: (f64, f64), atom: (f64, f64), r_b: f64) -> u8 {
    let dr = point.0 - atom.0;
    let dz = point.1 - atom.1;
    u8::from(dr * dr + dz * dz >= r_b * r_b)
}

/// Shift value with quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftValue {
    pub s: AngularFrequency,
    /// Upper estimate of the contribution from outside the lattice,
    /// relative to `s`.
    pub tail_fraction: f64,
    /// Smallest exclusion radius met on the lattice (µm).
    pub min_mask_radius: f64,
}

struct Row {
    r: f64,
    mask2: f64,
    base: f64,
    detuning_coeff: f64,
}

/// Precomputed per-row and per-column quantities for one atom position.
struct ShiftIntegrand {
    rows: Vec<Row>,
    dz2: Vec<f64>,
    dc2: Vec<f64>,
    atom_r: f64,
    prefactor: f64,
    f_max: f64,
    min_mask: f64,
}

impl ShiftIntegrand {
    fn new(atom: &Position, config: &SystemConfig, quad: &QuadratureSpec, mask: MaskMode) -> Self {
        let ip = config.probe_intensity();
        let g = config.medium.dephasing().rad_per_us();
        let rho = config.medium.density_rho;
        let c6 = config.medium.c6;
        let rb_atom = local_blockade_radius(atom.r, config);
        let detuning_weight = g * g + 2.0 * ip;

        let (nr, nz) = (quad.n_r(), quad.n_z());
        let mut f_max = 0.0_f64;
        let mut min_mask = f64::INFINITY;
        let rows = (0..nr)
            .map(|i| {
                let r = (i as f64 + 0.5) * quad.spacing_r;
                let ic = control_intensity(r, &config.beam);
                let rb_local = local_blockade_radius(r, config);
                let base = ic + superatom_count(rb_local, rho) * ip;
                f_max = f_max.max(ip / base);
                let mask_r = match mask {
                    MaskMode::Local => rb_local,
                    MaskMode::Core => rb_atom,
                };
                min_mask = min_mask.min(mask_r);
                Row {
                    r,
                    mask2: mask_r * mask_r,
                    base,
                    detuning_coeff: detuning_weight / (ip + ic),
                }
            })
            .collect();
        let z0 = atom.z - 0.5 * quad.extent_z;
        let (dz2, dc2) = (0..nz)
            .map(|k| {
                let z = z0 + (k as f64 + 0.5) * quad.spacing_z;
                let dc = fields::detuning_profile(z, &config.detuning).rad_per_us();
                ((z - atom.z).powi(2), dc * dc)
            })
            .unzip();
        Self {
            rows,
            dz2,
            dc2,
            atom_r: atom.r,
            prefactor: TAU * c6 * rho * ip * quad.spacing_r * quad.spacing_z,
            f_max,
            min_mask,
        }
    }

    fn row_sum(&self, i: usize, buf: &mut Vec<f64>) -> f64 {
        let row = &self.rows[i];
        let dr2 = (row.r - self.atom_r).powi(2);
        buf.clear();
        buf.extend(self.dz2.iter().zip(&self.dc2).map(|(&dz2, &dc2)| {
            let d2 = dr2 + dz2;
            if d2 < row.mask2 {
                0.0
            } else {
                let b = row.base + row.detuning_coeff * dc2;
                row.r / (d2 * d2 * d2 * b)
            }
        }));
        pairwise_sum(buf)
    }

    fn integrate(&self) -> f64 {
        self.prefactor * par_row_sum(self.rows.len(), |i, buf| self.row_sum(i, buf))
    }
}

/// Mean-field shift at `atom` with quadrature diagnostics.
pub fn shift_value(
    atom: &Position,
    config: &SystemConfig,
    quad: &QuadratureSpec,
    mask: MaskMode,
) -> Result<ShiftValue, MeanFieldError> {
    quad.validate()?;
    if config.medium.c6 == 0.0 {
        return Ok(ShiftValue {
            s: AngularFrequency::ZERO,
            tail_fraction: 0.0,
            min_mask_radius: 0.0,
        });
    }
    let integrand = ShiftIntegrand::new(atom, config, quad, mask);
    let spacing = quad.spacing_r.max(quad.spacing_z);
    if integrand.min_mask < 2.0 * spacing {
        return Err(MeanFieldError::UnresolvedBlockade {
            radius: integrand.min_mask,
            spacing,
        });
    }
    let s = integrand.integrate();
    // Everything beyond the nearest lattice edge, with fR bounded by f_max.
    let edge = (quad.extent_r - atom.r).min(0.5 * quad.extent_z);
    let tail = 4.0 * PI / 3.0 * config.medium.c6 * config.medium.density_rho * integrand.f_max
        / edge.powi(3);
    Ok(ShiftValue {
        s: AngularFrequency::from_rad_per_us(s),
        tail_fraction: if s > 0.0 { tail / s } else { 0.0 },
        min_mask_radius: integrand.min_mask,
    })
}

/// Mean-field Rydberg shift `s(rj, zj)`.
pub fn shift_at(
    atom: &Position,
    config: &SystemConfig,
    quad: &QuadratureSpec,
    mask: MaskMode,
) -> Result<AngularFrequency, MeanFieldError> {
    shift_value(atom, config, quad, mask).map(|v| v.s)
}

/// [`shift_at`] plus a half-spacing comparison; fails above 5% disagreement.
pub fn shift_at_checked(
    atom: &Position,
    config: &SystemConfig,
    quad: &QuadratureSpec,
    mask: MaskMode,
) -> Result<AngularFrequency, MeanFieldError> {
    let coarse = shift_at(atom, config, quad, mask)?;
    let fine = shift_at(atom, config, &quad.halved(), mask)?;
    let relative = relative_change(coarse, fine);
    if relative > 0.05 {
        return Err(MeanFieldError::NotConverged { relative });
    }
    Ok(fine)
}

fn relative_change(a: AngularFrequency, b: AngularFrequency) -> f64 {
    let (a, b) = (a.rad_per_us(), b.rad_per_us());
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((a - b) / b).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftAxis {
    /// `r` varies at `z = 3λc/4`.
    Radial,
    /// `z` varies on the beam axis.
    Longitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftPoint {
    pub r: f64,
    pub z: f64,
    pub s: AngularFrequency,
}

/// Sampled shift profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftGrid {
    pub axis: ShiftAxis,
    pub points: Vec<ShiftPoint>,
    pub quadrature: QuadratureSpec,
    pub mask: MaskMode,
    pub fingerprint: String,
    /// `max |s(rj) − s(0)| / s(0)` over `rj ≤ 0.1 λc`, radial profiles only.
    pub core_flatness: Option<f64>,
}

/// Samples the shift along one axis over `[start, end]` (inclusive, `n`
/// points).
pub fn shift_profile(
    axis: ShiftAxis,
    range: (f64, f64, usize),
    config: &SystemConfig,
    quad: &QuadratureSpec,
    mask: MaskMode,
) -> Result<ShiftGrid, MeanFieldError> {
    let (start, end, n) = range;
    let lam = config.lambda_c();
    let zj = config.localized_z();
    match axis {
        ShiftAxis::Radial if start < 0.0 || end >= quad.extent_r => {
            return Err(MeanFieldError::RangeOutsideDomain)
        }
        _ => {}
    }
    let coords = linspace(start, end, n);
    let points = coords
        .iter()
        .map(|&c| {
            let pos = match axis {
                ShiftAxis::Radial => Position::new(c, 0.0, zj),
                ShiftAxis::Longitudinal => Position::on_axis(c),
            };
            shift_at(&pos, config, quad, mask).map(|s| ShiftPoint {
                r: pos.r,
                z: pos.z,
                s,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let core_flatness = match (axis, points.first()) {
        (ShiftAxis::Radial, Some(p0)) if p0.r == 0.0 && p0.s.rad_per_us() > 0.0 => {
            let s0 = p0.s.rad_per_us();
            Some(
                points
                    .iter()
                    .filter(|p| p.r <= 0.1 * lam)
                    .map(|p| ((p.s.rad_per_us() - s0) / s0).abs())
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };
    Ok(ShiftGrid {
        axis,
        points,
        quadrature: *quad,
        mask,
        fingerprint: crate::io::fingerprint(config),
        core_flatness,
    })
}

pub(crate) fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Shift at the 3D localization point `(0, 3λc/4)` for the configured `δ`.
pub fn s0_integral(
    config: &SystemConfig,
    quad: &QuadratureSpec,
    mask: MaskMode,
) -> Result<AngularFrequency, MeanFieldError> {
    if config.detuning.mode != DetuningMode::StandingWave {
        return Err(MeanFieldError::NeedsStandingWave);
    }
    shift_at(&Position::on_axis(config.localized_z()), config, quad, mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaCalibration {
    pub delta: AngularFrequency,
    pub s0: AngularFrequency,
    pub iterations: usize,
}

const CALIBRATION_ITERATIONS: usize = 50;

/// Partial-antiblockade shift `δ = Δc0 + s0`.
///
/// `s0` depends on `δ` through the neighbors' detuning, so the relation is
/// iterated from `δ = Δc0` until `δ` stops moving.
pub fn calibrate_delta(
    config: &SystemConfig,
    quad: &QuadratureSpec,
    mask: MaskMode,
) -> Result<DeltaCalibration, MeanFieldError> {
    if config.detuning.mode != DetuningMode::StandingWave {
        return Err(MeanFieldError::NeedsStandingWave);
    }
    let dc0 = config.detuning.delta_c0;
    let mut delta = dc0;
    for it in 1..=CALIBRATION_ITERATIONS {
        let s0 = s0_integral(&config.with_delta_shift(delta), quad, mask)?;
        let next = dc0 + s0;
        let moved = (next - delta).rad_per_us().abs();
        delta = next;
        if moved <= 1e-10 * s0.rad_per_us().abs() || s0.rad_per_us() == 0.0 {
            return Ok(DeltaCalibration {
                delta,
                s0,
                iterations: it,
            });
        }
    }
    Err(MeanFieldError::CalibrationDiverged(CALIBRATION_ITERATIONS))
}

/// One sampled direction of the blockade boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRay {
    /// Angle from the +z axis in the meridional plane, `[0, 2π)`.
    pub theta: f64,
    pub distance: f64,
    pub x: f64,
    pub z: f64,
}

/// Cross-section of the local blockade sphere around one atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockadeBoundary {
    pub atom_r: f64,
    pub atom_z: f64,
    /// First crossing of `|Δr| = Rb(local)` along each direction.
    pub rays: Vec<BoundaryRay>,
    /// Half-height `√(Rb(r)² − (r − rj)²)` of the level set over `r ≥ 0`.
    pub sections: Vec<(f64, f64)>,
}

impl BlockadeBoundary {
    pub fn max_over_min(&self) -> f64 {
        let (lo, hi) = self
            .rays
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), r| {
                (lo.min(r.distance), hi.max(r.distance))
            });
        hi / lo
    }

    /// Ray closest to the given angle.
    pub fn distance_at(&self, theta: f64) -> f64 {
        self.rays
            .iter()
            .min_by(|a, b| {
                let da = angle_gap(a.theta, theta);
                let db = angle_gap(b.theta, theta);
                da.total_cmp(&db)
            })
            .map(|r| r.distance)
            .unwrap_or(f64::NAN)
    }

    /// Radius where the level-set half-height is smallest.
    pub fn dip_radius(&self) -> Option<f64> {
        self.sections
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|&(r, _)| r)
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResolution {
    pub directions: usize,
    /// March step along each ray (µm) before bisection.
    pub step: f64,
    pub sections: usize,
    pub section_r_max: f64,
}

impl Default for BoundaryResolution {
    fn default() -> Self {
        Self {
            directions: 360,
            step: 0.01,
            sections: 400,
            section_r_max: 4.0,
        }
    }
}

/// Boundary for an arbitrary radius law `rb(r)` bounded above by `upper`.
pub fn blockade_boundary_with<F>(
    atom_r: f64,
    atom_z: f64,
    rb: F,
    upper: f64,
    res: &BoundaryResolution,
) -> BlockadeBoundary
where
    F: Fn(f64) -> f64,
{
    let rays = (0..res.directions)
        .map(|k| {
            let theta = TAU * k as f64 / res.directions as f64;
            let (sin, cos) = theta.sin_cos();
            let gap = |d: f64| d - rb((atom_r + d * sin).abs());
            let mut lo = 0.0;
            let mut hi = res.step;
            while gap(hi) < 0.0 && hi <= upper + res.step {
                lo = hi;
                hi += res.step;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if gap(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let distance = 0.5 * (lo + hi);
            BoundaryRay {
                theta,
                distance,
                x: atom_r + distance * sin,
                z: atom_z + distance * cos,
            }
        })
        .collect();
    let sections = linspace(0.0, res.section_r_max, res.sections)
        .into_iter()
        .filter_map(|r| {
            let h2 = rb(r).powi(2) - (r - atom_r).powi(2);
            (h2 > 0.0).then(|| (r, h2.sqrt()))
        })
        .collect();
    BlockadeBoundary {
        atom_r,
        atom_z,
        rays,
        sections,
    }
}

/// Anisotropic blockade boundary around `atom` from the local linewidth.
pub fn blockade_boundary(
    atom: &Position,
    config: &SystemConfig,
    res: &BoundaryResolution,
) -> BlockadeBoundary {
    // Ic ≥ 0, so the control-free radius bounds every local radius.
    let ip = config.probe_intensity();
    let g = config.medium.dephasing().rad_per_us();
    let dp = config.probe.delta_p.rad_per_us();
    let w_min = AngularFrequency::from_rad_per_us(ip / (g * g + dp * dp + 2.0 * ip).sqrt());
    let upper = blockade_radius(w_min, config.medium.c6).expect("positive probe linewidth");
    blockade_boundary_with(
        atom.r,
        atom.z,
        |r| local_blockade_radius(r, config),
        upper,
        res,
    )
}
