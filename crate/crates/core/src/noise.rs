//! Seeded Monte-Carlo noise on the control amplitude and on the
//! standing-wave shift, averaged over trajectories.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::localization::{
    self, extract_fwhm_outermost, symmetric_coords, transverse_points, AntiblockadeMode, FwhmError,
    LocalizationError, ScanProfile, ShiftSettings,
};
use crate::units::{AngularFrequency, SystemConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("noise standard deviation must be finite and ≥ 0, got {0}")]
    BadStdDev(f64),
    #[error("trajectory count must be ≥ 1")]
    NoTrajectories,
    #[error("correlated noise is not supported (correlation length {0})")]
    Correlated(f64),
    #[error("{0}")]
    Scan(#[from] LocalizationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Offsets on `Ωc0` with standard deviation `relative_std · Ωc0`.
    Intensity { relative_std: f64 },
    /// Offsets on the standing-wave shift `δ`.
    Frequency { std: AngularFrequency },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub trajectories: usize,
    pub seed: u64,
    /// Spatial correlation length (µm); only white noise (0) is implemented.
    pub correlation_length: f64,
}

impl NoiseSpec {
    pub fn intensity(relative_std: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Intensity { relative_std },
            trajectories: 10,
            seed,
            correlation_length: 0.0,
        }
    }

    pub fn frequency(std: AngularFrequency, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Frequency { std },
            trajectories: 10,
            seed,
            correlation_length: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let sd = self.raw_std();
        if !(sd >= 0.0 && sd.is_finite()) {
            return Err(NoiseError::BadStdDev(sd));
        }
        if self.trajectories == 0 {
            return Err(NoiseError::NoTrajectories);
        }
        if self.correlation_length != 0.0 {
            return Err(NoiseError::Correlated(self.correlation_length));
        }
        Ok(())
    }

    fn raw_std(&self) -> f64 {
        match self.kind {
            NoiseKind::Intensity { relative_std } => relative_std,
            NoiseKind::Frequency { std } => std.rad_per_us(),
        }
    }

    pub fn is_silent(&self) -> bool {
        self.raw_std() == 0.0
    }
}

/// Generator for one trajectory: the master seed picks the key, the
/// trajectory index picks the stream.
pub fn trajectory_rng(seed: u64, trajectory: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory as u64);
    rng
}

fn normal_offsets(std: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect()
}

/// Perturbed control amplitudes at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityField {
    /// `Ω'c0` per position (rad/µs).
    pub offsets: Vec<f64>,
    /// `max(Ωc0 + Ω'c0, 0)` per position.
    pub amplitudes: Vec<AngularFrequency>,
    pub clamped: usize,
}

/// Independent normal offsets on `Ωc0`, one per position. The offsets are
/// all zero when the spec is silent or not an intensity spec.
pub fn sample_intensity_field(
    spec: &NoiseSpec,
    omega_c0: AngularFrequency,
    positions: usize,
    rng: &mut ChaCha8Rng,
) -> IntensityField {
    let std = match spec.kind {
        NoiseKind::Intensity { relative_std } => relative_std * omega_c0.rad_per_us(),
        NoiseKind::Frequency { .. } => 0.0,
    };
    let offsets = if std == 0.0 {
        vec![0.0; positions]
    } else {
        normal_offsets(std, positions, rng)
    };
    let mut clamped = 0;
    let amplitudes = offsets
        .iter()
        .map(|&o| {
            let total = omega_c0.rad_per_us() + o;
            if total < 0.0 {
                clamped += 1;
                AngularFrequency::ZERO
            } else {
                AngularFrequency::from_rad_per_us(total)
            }
        })
        .collect();
    IntensityField {
        offsets,
        amplitudes,
        clamped,
    }
}

/// Independent normal offsets on `δ`, one per position.
pub fn sample_frequency_offsets(
    spec: &NoiseSpec,
    positions: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<AngularFrequency> {
    let std = match spec.kind {
        NoiseKind::Frequency { std } => std.rad_per_us(),
        NoiseKind::Intensity { .. } => 0.0,
    };
    if std == 0.0 {
        return vec![AngularFrequency::ZERO; positions];
    }
    normal_offsets(std, positions, rng)
        .into_iter()
        .map(AngularFrequency::from_rad_per_us)
        .collect()
}

/// Trajectory-averaged transverse profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyProfile {
    /// Averaged σrr; `fwhm` is measured on this profile.
    pub profile: ScanProfile,
    /// Pointwise standard deviation across trajectories.
    pub spread: Vec<f64>,
    /// Amplitudes clamped at zero, summed over trajectories.
    pub clamped: usize,
    pub spec: NoiseSpec,
}

/// Transverse scan repeated per trajectory with pointwise noise, then
/// averaged. Shifts come from the unperturbed field. With a silent spec
/// the result equals [`localization::transverse_scan`].
pub fn noisy_transverse_scan(
    config: &SystemConfig,
    spec: &NoiseSpec,
    mode: AntiblockadeMode,
    x_max: f64,
    n_samples: usize,
    settings: &ShiftSettings,
) -> Result<NoisyProfile, NoiseError> {
    spec.validate()?;
    let base = localization::transverse_scan(config, mode, x_max, n_samples, settings)?;
    let coords = symmetric_coords(x_max, n_samples);
    let points = transverse_points(config, mode, &coords, settings)?;

    let runs = (0..spec.trajectories)
        .into_par_iter()
        .map(|t| {
            let mut rng = trajectory_rng(spec.seed, t);
            let field = sample_intensity_field(spec, config.beam.omega_c0, points.len(), &mut rng);
            let freq = sample_frequency_offsets(spec, points.len(), &mut rng);
            let sigma = points
                .iter()
                .zip(&field.amplitudes)
                .zip(&freq)
                .map(|((p, &amp), &df)| {
                    let mut cfg = *config;
                    cfg.beam.omega_c0 = amp;
                    localization::transverse_sigma(&cfg, p.x, p.s, p.delta_c + df)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((sigma, field.clamped))
        })
        .collect::<Result<Vec<_>, LocalizationError>>()?;

    // Running mean and variance in trajectory order.
    let n = points.len();
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    let mut clamped = 0;
    for (k, (sigma, c)) in runs.iter().enumerate() {
        clamped += c;
        let count = (k + 1) as f64;
        for i in 0..n {
            let delta = sigma[i] - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (sigma[i] - mean[i]);
        }
    }
    let spread = m2
        .iter()
        .map(|v| (v / spec.trajectories as f64).sqrt())
        .collect();

    let mut profile = base;
    if !spec.is_silent() {
        profile.fwhm = match extract_fwhm_outermost(&profile.coords, &mean, 0.5) {
            Ok(w) => Some(w),
            Err(FwhmError::NoCrossing { .. }) => None,
            Err(e) => return Err(LocalizationError::from(e).into()),
        };
        let (idx, peak) = mean
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty profile");
        profile.peak = peak;
        profile.peak_at = profile.coords[idx];
        profile.sigma = mean;
    }
    Ok(NoisyProfile {
        profile,
        spread,
        clamped,
        spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_spec_draws_zeros() {
        let spec = NoiseSpec::intensity(0.0, 3);
        let mut rng = trajectory_rng(3, 0);
        let f = sample_intensity_field(&spec, AngularFrequency::from_mhz(80.0), 50, &mut rng);
        assert!(f.offsets.iter().all(|&o| o == 0.0));
        assert_eq!(f.clamped, 0);
        let spec = NoiseSpec::frequency(AngularFrequency::ZERO, 3);
        assert!(sample_frequency_offsets(&spec, 50, &mut rng)
            .iter()
            .all(|&o| o == AngularFrequency::ZERO));
    }

    #[test]
    fn intensity_mean_within_clt_bound() {
        let spec = NoiseSpec::intensity(0.2, 11);
        let oc = AngularFrequency::from_mhz(80.0);
        let mut rng = trajectory_rng(11, 0);
        let f = sample_intensity_field(&spec, oc, 1_000_000, &mut rng);
        let mean = f.offsets.iter().sum::<f64>() / f.offsets.len() as f64;
        let sd = 0.2 * oc.rad_per_us();
        assert!(mean.abs() < 3.0 * sd / 1e3, "{mean}");
    }

    #[test]
    fn seeds_and_streams() {
        let spec = NoiseSpec::frequency(AngularFrequency::from_mhz(0.5), 1);
        let a = sample_frequency_offsets(&spec, 20, &mut trajectory_rng(1, 0));
        let b = sample_frequency_offsets(&spec, 20, &mut trajectory_rng(1, 0));
        let c = sample_frequency_offsets(&spec, 20, &mut trajectory_rng(2, 0));
        let d = sample_frequency_offsets(&spec, 20, &mut trajectory_rng(1, 1));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn strong_noise_clamps() {
        let spec = NoiseSpec::intensity(0.5, 5);
        let mut rng = trajectory_rng(5, 0);
        let f = sample_intensity_field(&spec, AngularFrequency::from_mhz(80.0), 10_000, &mut rng);
        // P(z < −2) ≈ 2.3%
        assert!(f.clamped > 100 && f.clamped < 400, "{}", f.clamped);
        assert!(f.amplitudes.iter().all(|a| a.rad_per_us() >= 0.0));
    }

    #[test]
    fn spec_validation() {
        assert!(NoiseSpec::intensity(-0.1, 0).validate().is_err());
        let mut s = NoiseSpec::intensity(0.1, 0);
        s.trajectories = 0;
        assert_eq!(s.validate(), Err(NoiseError::NoTrajectories));
        let mut s = NoiseSpec::intensity(0.1, 0);
        s.correlation_length = 0.1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn silent_noise_reproduces_scan() {
        let cfg = SystemConfig::default().with_kappa(180.0).unwrap();
        let set = ShiftSettings::scan_default(cfg.lambda_c());
        let det =
            localization::transverse_scan(&cfg, AntiblockadeMode::None, 0.03, 201, &set).unwrap();
        let noisy = noisy_transverse_scan(
            &cfg,
            &NoiseSpec::intensity(0.0, 7),
            AntiblockadeMode::None,
            0.03,
            201,
            &set,
        )
        .unwrap();
        assert_eq!(noisy.profile, det);
        assert!(noisy.spread.iter().all(|&s| s == 0.0));
    }
}
