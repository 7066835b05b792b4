//! σrr on a Cartesian grid around the localization point, with the
//! half-maximum level set as a cloud of cell-edge crossings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LocalizationError;
use crate::bloch::{self, LocalDrive};
use crate::meanfield::{self, linspace, MaskMode, QuadratureSpec};
use crate::units::{AngularFrequency, DetuningMode, Position, SystemConfig};

/// Offset of the standing-wave shift `δ` from `Δc0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaOffset {
    /// `δ − Δc0 = s0`
    #[default]
    Calibrated,
    /// `δ − Δc0 = 2 s0`
    Detuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Map3DSpec {
    /// Grid centre (µm).
    pub centre: [f64; 3],
    /// Half-widths along x, y, z (µm).
    pub half_extent: [f64; 3],
    /// Samples per axis, edges included.
    pub samples: [usize; 3],
    pub offset: DeltaOffset,
    /// Shift at the localization point.
    pub s0: AngularFrequency,
    /// Re-evaluates the shift at every voxel instead of freezing `s0`.
    pub per_voxel: Option<(QuadratureSpec, MaskMode)>,
    pub iso_level: f64,
}

impl Map3DSpec {
    /// Cube of `samples³` points centred on `(0, 0, 3λc/4)`.
    pub fn around_localization(
        config: &SystemConfig,
        half_extent: [f64; 3],
        samples: usize,
        offset: DeltaOffset,
        s0: AngularFrequency,
    ) -> Self {
        Self {
            centre: [0.0, 0.0, config.localized_z()],
            half_extent,
            samples: [samples; 3],
            offset,
            s0,
            per_voxel: None,
            iso_level: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Map3D {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    /// Row-major `[ix][iy][iz]`.
    pub values: Vec<f64>,
    pub iso_level: f64,
    pub offset: DeltaOffset,
    pub delta: AngularFrequency,
    pub peak: f64,
    pub peak_at: [f64; 3],
    /// Linear-interpolated crossings of the iso-level on grid edges.
    pub crossings: Vec<[f64; 3]>,
    /// Spread of the crossing cloud along x, y, z; `None` when no sample
    /// reaches the iso-level.
    pub extents: Option<[f64; 3]>,
    /// Some boundary sample reaches the iso-level, so extents are clipped.
    pub truncated: bool,
}

impl Map3D {
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.ys.len() + iy) * self.zs.len() + iz
    }

    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.index(ix, iy, iz)]
    }
}

fn shifted_config(config: &SystemConfig, spec: &Map3DSpec) -> SystemConfig {
    let factor = match spec.offset {
        DeltaOffset::Calibrated => 1.0,
        DeltaOffset::Detuned => 2.0,
    };
    (*config).with_delta_shift(config.detuning.delta_c0 + spec.s0 * factor)
}

/// σrr at one Cartesian point for the map's offset and shift settings.
pub fn map3d_value(
    config: &SystemConfig,
    spec: &Map3DSpec,
    point: [f64; 3],
) -> Result<f64, LocalizationError> {
    value_with(&shifted_config(config, spec), spec, point)
}

fn value_with(
    shifted: &SystemConfig,
    spec: &Map3DSpec,
    point: [f64; 3],
) -> Result<f64, LocalizationError> {
    let pos = Position::from_cartesian(point[0], point[1], point[2]);
    let s = match spec.per_voxel {
        None => spec.s0,
        Some((quad, mask)) => meanfield::shift_at(&pos, shifted, &quad, mask)?,
    };
    Ok(bloch::steady_sigma_rr(&LocalDrive::at(shifted, &pos, s))?)
}

pub fn map3d(config: &SystemConfig, spec: &Map3DSpec) -> Result<Map3D, LocalizationError> {
    if config.detuning.mode != DetuningMode::StandingWave {
        return Err(LocalizationError::NeedsStandingWave);
    }
    if spec.samples.iter().any(|&n| n < 2)
        || spec
            .half_extent
            .iter()
            .any(|h| !(*h > 0.0 && h.is_finite()))
    {
        return Err(LocalizationError::BadRange);
    }
    let shifted = shifted_config(config, spec);
    let axis = |k: usize| {
        linspace(
            spec.centre[k] - spec.half_extent[k],
            spec.centre[k] + spec.half_extent[k],
            spec.samples[k],
        )
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let planes = xs
        .par_iter()
        .map(|&x| {
            let mut plane = Vec::with_capacity(ys.len() * zs.len());
            for &y in &ys {
                for &z in &zs {
                    plane.push(value_with(&shifted, spec, [x, y, z])?);
                }
            }
            Ok(plane)
        })
        .collect::<Result<Vec<_>, LocalizationError>>()?;
    let values: Vec<f64> = planes.into_iter().flatten().collect();

    let mut map = Map3D {
        xs,
        ys,
        zs,
        values,
        iso_level: spec.iso_level,
        offset: spec.offset,
        delta: shifted.detuning.delta_shift,
        peak: 0.0,
        peak_at: [0.0; 3],
        crossings: Vec::new(),
        extents: None,
        truncated: false,
    };
    let (nx, ny, nz) = (map.xs.len(), map.ys.len(), map.zs.len());
    let peak_idx = map
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let (px, py, pz) = (peak_idx / (ny * nz), (peak_idx / nz) % ny, peak_idx % nz);
    map.peak = map.values[peak_idx];
    map.peak_at = [map.xs[px], map.ys[py], map.zs[pz]];

    let level = spec.iso_level;
    if map.peak >= level {
        let lines = [
            (
                'x',
                (0..nx).map(|i| map.value(i, py, pz)).collect::<Vec<_>>(),
            ),
            ('y', (0..ny).map(|j| map.value(px, j, pz)).collect()),
            ('z', (0..nz).map(|k| map.value(px, py, k)).collect()),
        ];
        for (axis, line) in lines {
            let samples = line.iter().filter(|&&v| v >= level).count();
            if samples < 4 {
                return Err(LocalizationError::GridTooCoarse { axis, samples });
            }
        }
    }

    map.crossings = crossings(&map, level);
    map.truncated = boundary_reaches(&map, level);
    if !map.crossings.is_empty() {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &map.crossings {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        map.extents = Some([hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]);
    }
    Ok(map)
}

fn crossings(map: &Map3D, level: f64) -> Vec<[f64; 3]> {
    let (nx, ny, nz) = (map.xs.len(), map.ys.len(), map.zs.len());
    let coord = |i: usize, j: usize, k: usize| [map.xs[i], map.ys[j], map.zs[k]];
    let mut out = Vec::new();
    let mut edge = |a: (usize, usize, usize), b: (usize, usize, usize)| {
        let va = map.value(a.0, a.1, a.2);
        let vb = map.value(b.0, b.1, b.2);
        if (va >= level) != (vb >= level) {
            let t = (level - va) / (vb - va);
            let (pa, pb) = (coord(a.0, a.1, a.2), coord(b.0, b.1, b.2));
            out.push([
                pa[0] + t * (pb[0] - pa[0]),
                pa[1] + t * (pb[1] - pa[1]),
                pa[2] + t * (pb[2] - pa[2]),
            ]);
        }
    };
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if i + 1 < nx {
                    edge((i, j, k), (i + 1, j, k));
                }
                if j + 1 < ny {
                    edge((i, j, k), (i, j + 1, k));
                }
                if k + 1 < nz {
                    edge((i, j, k), (i, j, k + 1));
                }
            }
        }
    }
    out
}

fn boundary_reaches(map: &Map3D, level: f64) -> bool {
    let (nx, ny, nz) = (map.xs.len(), map.ys.len(), map.zs.len());
    (0..nx).any(|i| {
        (0..ny).any(|j| {
            (0..nz).any(|k| {
                let on_face =
                    i == 0 || j == 0 || k == 0 || i + 1 == nx || j + 1 == ny || k + 1 == nz;
                on_face && map.value(i, j, k) >= level
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::{analytic_a_r, analytic_a_z};

    fn setup(kappa: f64) -> (SystemConfig, AngularFrequency) {
        (
            SystemConfig::default().with_kappa(kappa).unwrap(),
            AngularFrequency::from_mhz(1.15),
        )
    }

    #[test]
    fn calibrated_map_is_compact() {
        let (c, s0) = setup(100.0);
        let lam = c.lambda_c();
        let ar = analytic_a_r(100.0, 1.0).unwrap();
        let w = meanfield::local_linewidth(0.0, &c);
        let az = analytic_a_z(w, c.detuning.delta_c0, lam).unwrap();
        let spec = Map3DSpec::around_localization(
            &c,
            [1.5 * ar, 1.5 * ar, 1.5 * az],
            41,
            DeltaOffset::Calibrated,
            s0,
        );
        let m = map3d(&c, &spec).unwrap();
        assert!((m.peak - 1.0).abs() < 1e-9);
        assert!(!m.truncated);
        let e = m.extents.unwrap();
        assert!((e[0] / ar - 1.0).abs() < 0.1, "{e:?} {ar}");
        assert!((e[2] / az - 1.0).abs() < 0.1, "{e:?} {az}");
    }

    #[test]
    fn detuned_map_loses_peak() {
        let (c, s0) = setup(100.0);
        let spec =
            Map3DSpec::around_localization(&c, [0.02, 0.02, 0.05], 21, DeltaOffset::Detuned, s0);
        let m = map3d(&c, &spec).unwrap();
        assert!(m.peak < 0.5);
        assert!(m.extents.is_none());
    }

    #[test]
    fn rotational_symmetry() {
        let (c, s0) = setup(100.0);
        let spec = Map3DSpec::around_localization(&c, [0.02; 3], 5, DeltaOffset::Calibrated, s0);
        let z = c.localized_z() + 0.003;
        let (x, y) = (0.006_f64, -0.0043_f64);
        let a = map3d_value(&c, &spec, [x, y, z]).unwrap();
        let b = map3d_value(&c, &spec, [x.hypot(y), 0.0, z]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_rejected() {
        let (c, s0) = setup(100.0);
        let spec =
            Map3DSpec::around_localization(&c, [1.0, 1.0, 0.2], 11, DeltaOffset::Calibrated, s0);
        assert!(matches!(
            map3d(&c, &spec),
            Err(LocalizationError::GridTooCoarse { .. })
        ));
    }
}
