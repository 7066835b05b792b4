//! Spatial profiles of the vortex control beam, the probe and the
//! standing-wave detuning.

use std::f64::consts::TAU;

use num_complex::Complex64;
use thiserror::Error;

use crate::units::{
    AngularFrequency, BeamConfig, DetuningMode, DetuningModulation, Position, SystemConfig,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("fourth-order expansion of η holds for |l| = 1 only, got l = {0}")]
    WindingNotUnit(i32),
    #[error("winding number l = 0 has no dark core")]
    NoVortexCore,
    #[error("half-intensity ratio never reaches {target}: peak η = {peak}")]
    EtaNeverReaches { target: f64, peak: f64 },
}

/// Local field values seen by one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub omega_c: Complex64,
    pub omega_p: f64,
    pub delta_c: AngularFrequency,
}

/// Envelope `(r/W0)^|l|·exp(−r²/W0²)` of the LG mode, without the peak
/// amplitude or the phase winding.
pub fn lg_envelope(r: f64, beam: &BeamConfig) -> f64 {
    let x = r / beam.waist_w0;
    x.powi(beam.winding_l.abs()) * (-x * x).exp()
}

/// Maximum of the envelope over r, reached at `r = W0·√(|l|/2)`.
pub fn lg_envelope_max(l: i32) -> f64 {
    let m = f64::from(l.abs());
    (m / 2.0).powf(m / 2.0) * (-m / 2.0).exp()
}

/// Radius of the intensity maximum.
pub fn lg_peak_radius(beam: &BeamConfig) -> f64 {
    beam.waist_w0 * (f64::from(beam.winding_l.abs()) / 2.0).sqrt()
}

/// Complex control Rabi amplitude `Ωc0 (r/W0)^|l| e^{−r²/W0²} e^{ilφ}`.
pub fn lg_amplitude(pos: &Position, beam: &BeamConfig) -> Complex64 {
    let modulus = beam.omega_c0.rad_per_us() * lg_envelope(pos.r, beam);
    Complex64::from_polar(modulus, f64::from(beam.winding_l) * pos.phi)
}

/// `|Ωc(r)|²`.
pub fn control_intensity(r: f64, beam: &BeamConfig) -> f64 {
    (beam.omega_c0.rad_per_us() * lg_envelope(r, beam)).powi(2)
}

/// Intensity ratio `η = Ic/Ip = κ² (r/W0)^{2|l|} e^{−2(r/W0)²}`.
pub fn intensity_ratio_eta(pos: &Position, config: &SystemConfig) -> f64 {
    eta_at_radius(pos.r, config)
}

pub fn eta_at_radius(r: f64, config: &SystemConfig) -> f64 {
    let e = lg_envelope(r, &config.beam);
    let k = config.kappa();
    k * k * e * e
}

/// Fourth-order expansion of η around the core, `κ²[(r/W0)² − 2(r/W0)⁴]`.
pub fn taylor_eta(r: f64, config: &SystemConfig) -> Result<f64, FieldError> {
    if config.beam.winding_l.abs() != 1 {
        return Err(FieldError::WindingNotUnit(config.beam.winding_l));
    }
    let x2 = (r / config.beam.waist_w0).powi(2);
    let k = config.kappa();
    Ok(k * k * (x2 - 2.0 * x2 * x2))
}

/// Innermost radius where η reaches `target`, found on the rising flank
/// between the core and the intensity maximum.
pub fn eta_crossing_radius(config: &SystemConfig, target: f64) -> Result<f64, FieldError> {
    if config.beam.winding_l == 0 {
        return Err(FieldError::NoVortexCore);
    }
    let hi = lg_peak_radius(&config.beam);
    let peak = eta_at_radius(hi, config);
    if peak < target {
        return Err(FieldError::EtaNeverReaches { target, peak });
    }
    let (mut lo, mut hi) = (0.0_f64, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eta_at_radius(mid, config) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Control detuning at axial position `z`.
pub fn detuning_profile(z: f64, modulation: &DetuningModulation) -> AngularFrequency {
    match modulation.mode {
        DetuningMode::Constant => modulation.delta_c_const,
        DetuningMode::StandingWave => {
            modulation.delta_c0 * (TAU * z / modulation.period).sin() + modulation.delta_shift
        }
    }
}

pub fn sample(pos: &Position, config: &SystemConfig) -> FieldSample {
    FieldSample {
        omega_c: lg_amplitude(pos, &config.beam),
        omega_p: config.probe.omega_p0.rad_per_us(),
        delta_c: detuning_profile(pos.z, &config.detuning),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    #[test]
    fn core_is_dark() {
        let cfg = SystemConfig::default();
        for phi in [0.0, 1.0, 4.0] {
            assert_eq!(
                lg_amplitude(&Position::new(0.0, phi, 0.3), &cfg.beam).norm(),
                0.0
            );
        }
    }

    #[test]
    fn envelope_maximum_location() {
        let cfg = SystemConfig::default();
        let w0 = cfg.beam.waist_w0;
        // dense grid search
        let (mut best_r, mut best) = (0.0, 0.0);
        for i in 0..=200_000 {
            let r = 3.0 * w0 * f64::from(i) / 200_000.0;
            let v = lg_amplitude(&Position::new(r, 0.0, 0.0), &cfg.beam).norm();
            if v > best {
                best = v;
                best_r = r;
            }
        }
        assert!((best_r - w0 * FRAC_1_SQRT_2).abs() < 2e-5 * w0);
        let at = lg_amplitude(&Position::new(w0 * FRAC_1_SQRT_2, 0.0, 0.0), &cfg.beam).norm();
        assert_relative_eq!(
            at / cfg.beam.omega_c0.rad_per_us(),
            0.428_881_942_480_353,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            at / cfg.beam.omega_c0.rad_per_us(),
            lg_envelope_max(1),
            max_relative = 1e-12
        );
        assert!(at >= best * (1.0 - 1e-12));
    }

    #[test]
    fn phase_winding() {
        let cfg = SystemConfig::default();
        let w0 = cfg.beam.waist_w0;
        let a = lg_amplitude(&Position::new(w0, FRAC_PI_2, 0.0), &cfg.beam);
        let m = cfg.beam.omega_c0.rad_per_us() * (-1.0_f64).exp();
        assert_relative_eq!(a.norm(), m, max_relative = 1e-12);
        assert!(a.re.abs() < 1e-12 * m);
        assert_relative_eq!(a.im, m, max_relative = 1e-12);
    }

    #[test]
    fn eta_half_point_kappa_10() {
        let cfg = SystemConfig::default().with_kappa(10.0).unwrap();
        let r = eta_crossing_radius(&cfg, 1.0).unwrap();
        assert!((r / cfg.beam.waist_w0 - 0.101).abs() < 5e-4, "{r}");
        let eta = intensity_ratio_eta(&Position::new(0.101 * cfg.beam.waist_w0, 0.0, 0.0), &cfg);
        assert!((eta - 1.0).abs() < 0.01, "{eta}");
    }

    #[test]
    fn taylor_expansion_accuracy() {
        let cfg = SystemConfig::default().with_kappa(500.0).unwrap();
        let w0 = cfg.beam.waist_w0;
        assert_eq!(taylor_eta(0.0, &cfg).unwrap(), 0.0);
        let near = 0.01 * w0;
        let exact = eta_at_radius(near, &cfg);
        assert!((taylor_eta(near, &cfg).unwrap() - exact).abs() / exact < 1e-3);
        let far = 0.5 * w0;
        let exact = eta_at_radius(far, &cfg);
        assert!((taylor_eta(far, &cfg).unwrap() - exact).abs() / exact > 0.1);
    }

    #[test]
    fn taylor_rejects_higher_winding() {
        let cfg = SystemConfig::default().with_winding(2).unwrap();
        assert_eq!(taylor_eta(0.1, &cfg), Err(FieldError::WindingNotUnit(2)));
    }

    #[test]
    fn standing_wave_extremes() {
        let cfg = SystemConfig::default();
        let d = cfg.detuning;
        let lam = d.period;
        assert_relative_eq!(
            detuning_profile(0.75 * lam, &d).rad_per_us(),
            (d.delta_shift - d.delta_c0).rad_per_us(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            detuning_profile(0.25 * lam, &d).rad_per_us(),
            (d.delta_shift + d.delta_c0).rad_per_us(),
            epsilon = 1e-12
        );
    }
}
