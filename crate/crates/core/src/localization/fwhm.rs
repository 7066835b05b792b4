//! Half-maximum crossings of sampled and continuous profiles.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FwhmError {
    #[error("profile never crosses the level {level}")]
    NoCrossing { level: f64 },
    #[error("profile has {regions} separate regions above {level}; restrict the window")]
    MultiplePeaks { regions: usize, level: f64 },
    #[error("coordinate and value arrays differ in length or are empty")]
    BadSamples,
}

const BISECTION_STEPS: usize = 200;

/// Level crossing of `f` inside `[inside, outside]`, where `f(inside) ≥ level`
/// and `f(outside) < level`. Bisects to floating-point resolution.
pub fn bisect_crossing<F>(f: F, mut inside: f64, mut outside: f64, level: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if f(mid) >= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Width of the region around `peak` where `f ≥ level`, searching outward
/// until `lo` and `hi`. Both ends must lie below the level.
pub fn fwhm_of_fn<F>(f: F, peak: f64, lo: f64, hi: f64, level: f64) -> Result<f64, FwhmError>
where
    F: Fn(f64) -> f64,
{
    if f(peak) < level || f(lo) >= level || f(hi) >= level {
        return Err(FwhmError::NoCrossing { level });
    }
    let right = bisect_crossing(&f, peak, hi, level);
    let left = bisect_crossing(&f, peak, lo, level);
    Ok(right - left)
}

fn check(coords: &[f64], values: &[f64]) -> Result<usize, FwhmError> {
    if coords.len() != values.len() || coords.is_empty() {
        return Err(FwhmError::BadSamples);
    }
    Ok(values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty"))
}

/// Linear-interpolated crossing between samples `i` (≥ level) and `j`.
fn interpolate(coords: &[f64], values: &[f64], i: usize, j: usize, level: f64) -> f64 {
    let (x0, x1, y0, y1) = (coords[i], coords[j], values[i], values[j]);
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

fn regions_above(values: &[f64], level: f64) -> usize {
    let mut regions = 0;
    let mut inside = false;
    for &v in values {
        let above = v >= level;
        if above && !inside {
            regions += 1;
        }
        inside = above;
    }
    regions
}

/// FWHM of a sampled profile with a single region above `level`.
pub fn extract_fwhm(coords: &[f64], values: &[f64], level: f64) -> Result<f64, FwhmError> {
    let peak = check(coords, values)?;
    let regions = regions_above(values, level);
    if regions > 1 {
        return Err(FwhmError::MultiplePeaks { regions, level });
    }
    edges(coords, values, peak, level, false)
}

/// FWHM of a noisy sampled profile: the outermost crossings on each side of
/// the maximum, so that interior dips below the level are bridged.
pub fn extract_fwhm_outermost(
    coords: &[f64],
    values: &[f64],
    level: f64,
) -> Result<f64, FwhmError> {
    let peak = check(coords, values)?;
    edges(coords, values, peak, level, true)
}

fn edges(
    coords: &[f64],
    values: &[f64],
    peak: usize,
    level: f64,
    outermost: bool,
) -> Result<f64, FwhmError> {
    let n = values.len();
    if values[peak] < level {
        return Err(FwhmError::NoCrossing { level });
    }
    let right = if outermost {
        (peak..n).rev().find(|&i| values[i] >= level)
    } else {
        (peak..n).take_while(|&i| values[i] >= level).last()
    }
    .expect("peak is above the level");
    let left = if outermost {
        (0..=peak).find(|&i| values[i] >= level)
    } else {
        (0..=peak).rev().take_while(|&i| values[i] >= level).last()
    }
    .expect("peak is above the level");
    if right + 1 >= n || left == 0 {
        return Err(FwhmError::NoCrossing { level });
    }
    let xr = interpolate(coords, values, right, right + 1, level);
    let xl = interpolate(coords, values, left, left - 1, level);
    Ok((xr - xl).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentzian(h: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..n)
            .map(|i| -10.0 + 20.0 * i as f64 / (n - 1) as f64)
            .collect();
        let ys = xs.iter().map(|x| 1.0 / (1.0 + (x / h).powi(2))).collect();
        (xs, ys)
    }

    #[test]
    fn lorentzian_samples() {
        let (xs, ys) = lorentzian(0.7, 4001);
        let w = extract_fwhm(&xs, &ys, 0.5).unwrap();
        assert!((w / 1.4 - 1.0).abs() < 1e-3, "{w}");
    }

    #[test]
    fn lorentzian_function() {
        let h = 0.7;
        let f = |x: f64| 1.0 / (1.0 + (x / h).powi(2));
        let w = fwhm_of_fn(f, 0.0, -10.0, 10.0, 0.5).unwrap();
        assert!((w - 2.0 * h).abs() < 1e-12);
    }

    #[test]
    fn monotone_profile_has_no_crossing() {
        let xs: Vec<f64> = (0..100).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x / 99.0).collect();
        assert_eq!(
            extract_fwhm(&xs, &ys, 0.5),
            Err(FwhmError::NoCrossing { level: 0.5 })
        );
    }

    #[test]
    fn two_peaks_flagged() {
        let xs: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 2.0).sin().powi(2)).collect();
        assert!(matches!(
            extract_fwhm(&xs, &ys, 0.5),
            Err(FwhmError::MultiplePeaks { .. })
        ));
    }

    #[test]
    fn outermost_bridges_dips() {
        let xs: Vec<f64> = (0..9).map(f64::from).collect();
        let ys = vec![0.0, 0.2, 0.6, 0.4, 1.0, 0.45, 0.7, 0.1, 0.0];
        let w = extract_fwhm_outermost(&xs, &ys, 0.5).unwrap();
        // left crossing 1.75, right 6.0 + 0.2/0.6
        assert!((w - (6.0 + 1.0 / 3.0 - 1.75)).abs() < 1e-12, "{w}");
        assert!(extract_fwhm(&xs, &ys, 0.5).is_err());
    }
}
