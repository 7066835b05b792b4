//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortex_localize::bloch::{self, BlochState, LocalDrive};
use vortex_localize::localization::{
    self, analytic_a_r, analytic_a_z, AntiblockadeMode, DeltaOffset, Map3DSpec, ShiftSettings,
};
use vortex_localize::meanfield::{self, MaskMode, QuadratureSpec};
use vortex_localize::noise::{self, NoiseSpec};
use vortex_localize::{AngularFrequency, Position, SystemConfig};

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, n: usize, title: &str, checks: Vec<(bool, String)>, started: Instant) {
        let ok = checks.iter().all(|c| c.0);
        if !ok {
            self.failures += 1;
        }
        let detail = checks
            .iter()
            .map(|(pass, msg)| format!("{}{msg}", if *pass { "" } else { "✗ " }))
            .collect::<Vec<_>>()
            .join("; ");
        println!(
            "{} criterion {n:>2} {title}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn cfg(kappa: f64) -> SystemConfig {
    SystemConfig::default().with_kappa(kappa).unwrap()
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value / target - 1.0).abs() <= rel
}

fn scan_settings() -> ShiftSettings {
    ShiftSettings::scan_default(SystemConfig::default().lambda_c())
}

fn paper_quadrature() -> QuadratureSpec {
    QuadratureSpec::standard(SystemConfig::default().lambda_c())
}

fn t_s(kappa: f64) -> f64 {
    let d = localization::half_max_drive(&cfg(kappa)).unwrap();
    bloch::steady_time(&d, 0.01, 400.0).unwrap()
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let c = cfg(500.0);
    let p = localization::transverse_scan(&c, AntiblockadeMode::None, 0.008, 201, &scan_settings())
        .unwrap();
    let mut checks = vec![(
        (p.fwhm.unwrap() * 1e3 - 4.0).abs() <= 1.0,
        format!("FWHM(κ=500) = {:.4} nm (4 ± 1)", p.fwhm.unwrap() * 1e3),
    )];
    for k in [50.0, 100.0, 200.0, 500.0] {
        let num = localization::transverse_fwhm(&cfg(k), AntiblockadeMode::None, &scan_settings())
            .unwrap();
        let ana = analytic_a_r(k, 1.0).unwrap();
        let rel = (ana - num).abs() / num;
        checks.push((
            rel < 0.05,
            format!("κ={k}: closed form vs numeric {:.2e}", rel),
        ));
    }
    r.line(1, "transverse resolution", checks, t);
}

fn criterion_2(r: &mut Report) {
    let t = Instant::now();
    let w = localization::transverse_fwhm(&cfg(180.0), AntiblockadeMode::None, &scan_settings())
        .unwrap();
    let ts = t_s(180.0);
    let checks = vec![
        (
            (w * 1e3 - 11.0).abs() <= 2.0,
            format!("FWHM = {:.3} nm (11 ± 2)", w * 1e3),
        ),
        (
            within(ts, 11.0, 0.2),
            format!("T_s = {ts:.3} µs (11 ± 20%)"),
        ),
    ];
    r.line(2, "κ=180 working point", checks, t);
}

fn criterion_3(r: &mut Report) {
    let t = Instant::now();
    let kappas = [10.0, 100.0, 180.0, 500.0];
    let times: Vec<f64> = kappas.iter().map(|&k| t_s(k)).collect();
    let monotone = times.windows(2).all(|w| w[1] > w[0]);
    let checks = vec![
        (
            within(times[3], 86.0, 0.2),
            format!("T_s(κ=500) = {:.2} µs (86 ± 20%)", times[3]),
        ),
        (
            monotone,
            format!(
                "monotone over κ ∈ {{10,100,180,500}}: {:?} µs",
                times
                    .iter()
                    .map(|v| (v * 100.0).round() / 100.0)
                    .collect::<Vec<_>>()
            ),
        ),
    ];
    r.line(3, "steady-time scaling", checks, t);
}

/// Calibrated s0 per κ on the paper lattice, shared by later criteria.
fn calibrations() -> Vec<(f64, meanfield::DeltaCalibration)> {
    [10.0, 100.0, 180.0, 500.0]
        .iter()
        .map(|&k| {
            let cal =
                meanfield::calibrate_delta(&cfg(k), &paper_quadrature(), MaskMode::Local).unwrap();
            (k, cal)
        })
        .collect()
}

fn criterion_4(r: &mut Report, cals: &[(f64, meanfield::DeltaCalibration)]) {
    let t = Instant::now();
    let paper = [(10.0, 37.77), (100.0, 31.15), (500.0, 30.063)];
    let mut checks = Vec::new();
    for (k, delta) in paper {
        let cal = &cals.iter().find(|c| c.0 == k).unwrap().1;
        let offset = cal.delta.mhz() - 30.0;
        let target = delta - 30.0;
        checks.push((
            within(offset, target, 0.02),
            format!(
                "κ={k}: δ/2π = {:.4} MHz, offset {:+.2}%",
                cal.delta.mhz(),
                100.0 * (offset / target - 1.0)
            ),
        ));
        let fast = QuadratureSpec::in_lambda(0.48, 100.0, 0.02);
        let quick = meanfield::calibrate_delta(&cfg(k), &fast, MaskMode::Local).unwrap();
        let rel = (quick.s0.rad_per_us() / cal.s0.rad_per_us() - 1.0).abs();
        checks.push((rel < 0.01, format!("κ={k} fast mode {rel:.1e}")));
    }
    r.line(4, "δ calibration", checks, t);
}

fn criterion_5(r: &mut Report, cals: &[(f64, meanfield::DeltaCalibration)]) {
    let t = Instant::now();
    let s0 = cals.iter().find(|c| c.0 == 180.0).unwrap().1.s0.mhz();
    let checks = vec![(
        within(s0, 0.42, 0.05),
        format!("s0/2π(κ=180) = {s0:.4} MHz (0.42 ± 5%)"),
    )];
    r.line(5, "s0 at κ=180", checks, t);
}

fn criterion_6(r: &mut Report) {
    let t = Instant::now();
    let widths = localization::oam_broadening_scan(&cfg(10.0), &[1, 2, 3, 4, 5]).unwrap();
    let l5 = widths[4].1;
    let checks = vec![
        (
            within(l5, 1.39, 0.05),
            format!("FWHM(l=5) = {l5:.4} µm (1.39 ± 5%)"),
        ),
        (
            widths.windows(2).all(|w| w[1].1 > w[0].1),
            format!(
                "increasing: {:?}",
                widths
                    .iter()
                    .map(|w| (w.1 * 1e4).round() / 1e4)
                    .collect::<Vec<_>>()
            ),
        ),
    ];
    r.line(6, "OAM broadening", checks, t);
}

fn criterion_7(r: &mut Report, cals: &[(f64, meanfield::DeltaCalibration)]) {
    let t = Instant::now();
    let mut checks = Vec::new();
    let mut widths = Vec::new();
    for k in [10.0, 100.0, 500.0] {
        let s0 = cals.iter().find(|c| c.0 == k).unwrap().1.s0;
        let c = cfg(k).with_delta_shift(AngularFrequency::from_mhz(30.0) + s0);
        let lam = c.lambda_c();
        let n = 801;
        let p = localization::longitudinal_scan(&c, (0.0, 2.0 * lam), n, s0).unwrap();
        let grid = 2.0 * lam / (n - 1) as f64;
        let peaks: Vec<f64> = (1..n - 1)
            .filter(|&i| {
                p.sigma[i] >= p.sigma[i - 1] && p.sigma[i] > p.sigma[i + 1] && p.sigma[i] > 0.5
            })
            .map(|i| p.coords[i])
            .collect();
        let placed = peaks.len() == 2
            && (peaks[0] - 0.75 * lam).abs() <= grid
            && (peaks[1] - 1.75 * lam).abs() <= grid;
        checks.push((
            placed,
            format!(
                "κ={k} peaks at {:?} λc",
                peaks.iter().map(|z| z / lam).collect::<Vec<_>>()
            ),
        ));
        let w = meanfield::local_linewidth(0.0, &c);
        let ana = analytic_a_z(w, c.detuning.delta_c0, lam).unwrap();
        let a_z = p.fwhm.unwrap();
        let rel = (a_z / ana - 1.0).abs();
        checks.push((
            rel < 0.05,
            format!("κ={k} a_z = {:.3} nm, closed form {rel:.1e}", a_z * 1e3),
        ));
        widths.push(a_z);
    }
    let az500 = widths[2] * 1e3;
    checks.push((
        (1.1..=4.4).contains(&az500),
        format!("a_z(κ=500) = {az500:.3} nm (2.2 nm within ×2)"),
    ));
    checks.push((
        widths[2] < widths[1] && widths[1] < widths[0],
        "decreasing in κ".into(),
    ));
    r.line(7, "longitudinal localization", checks, t);
}

fn criterion_8(r: &mut Report) {
    let t = Instant::now();
    let set = scan_settings();
    let mut checks = Vec::new();
    for k in [10.0, 100.0, 500.0] {
        let c = cfg(k).with_waist(5.0).unwrap();
        let partial = localization::transverse_fwhm(&c, AntiblockadeMode::Partial, &set).unwrap();
        let perfect = localization::transverse_fwhm(&c, AntiblockadeMode::Perfect, &set).unwrap();
        checks.push((
            partial < perfect,
            format!(
                "W0=5 κ={k}: partial {:.3} nm < perfect {:.3} nm",
                partial * 1e3,
                perfect * 1e3
            ),
        ));
    }
    for k in [10.0, 100.0, 500.0] {
        let c = cfg(k);
        let r_max = 4.0 / k;
        let p =
            localization::transverse_scan(&c, AntiblockadeMode::Partial, r_max, 201, &set).unwrap();
        let q =
            localization::transverse_scan(&c, AntiblockadeMode::Perfect, r_max, 201, &set).unwrap();
        let rel = p
            .sigma
            .iter()
            .zip(&q.sigma)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        checks.push((rel <= 0.01, format!("W0=1 κ={k}: max pointwise {rel:.1e}")));
    }
    r.line(8, "antiblockade ordering", checks, t);
}

fn criterion_9(r: &mut Report, cals: &[(f64, meanfield::DeltaCalibration)]) {
    let t = Instant::now();
    let mut checks = Vec::new();
    for k in [10.0, 100.0, 500.0] {
        let c = cfg(k);
        let s0 = cals.iter().find(|x| x.0 == k).unwrap().1.s0;
        let ar = analytic_a_r(k, c.beam.waist_w0).unwrap();
        let w = meanfield::local_linewidth(0.0, &c);
        let az = analytic_a_z(w, c.detuning.delta_c0, c.lambda_c()).unwrap();
        let half = [1.5 * ar, 1.5 * ar, 1.5 * az];
        let run = |offset| {
            localization::map3d(
                &c,
                &Map3DSpec::around_localization(&c, half, 101, offset, s0),
            )
            .unwrap()
        };
        let cal = run(DeltaOffset::Calibrated);
        let det = run(DeltaOffset::Detuned);
        let cal_ext = cal
            .extents
            .expect("calibrated map has a half-maximum surface");
        let broader = match det.extents {
            None => true,
            Some(e) => e.iter().zip(&cal_ext).all(|(d, c)| d > c),
        };
        checks.push((
            det.peak < 1.0 && broader,
            format!(
                "κ={k}: peak {:.4} → {:.4}, extents {:.2}×{:.2} nm → {}",
                cal.peak,
                det.peak,
                cal_ext[0] * 1e3,
                cal_ext[2] * 1e3,
                det.extents.map_or("none".to_string(), |e| format!(
                    "{:.2}×{:.2} nm",
                    e[0] * 1e3,
                    e[2] * 1e3
                ))
            ),
        ));
    }
    r.line(9, "3D map sensitivity", checks, t);
}

fn random_drive(rng: &mut ChaCha8Rng) -> LocalDrive {
    let gamma_e = rng.random_range(20.0..60.0);
    let dp = rng.random_range(-5.0..5.0);
    let s = rng.random_range(0.0..3.0);
    let residual = rng.random_range(-3.0..3.0);
    LocalDrive {
        omega_p: rng.random_range(2.0..10.0),
        omega_c: Complex64::from_polar(rng.random_range(5.0..30.0), rng.random_range(0.0..TAU)),
        delta_p: AngularFrequency::from_rad_per_us(dp),
        delta_c: AngularFrequency::from_rad_per_us(residual - dp + s),
        s_shift: AngularFrequency::from_rad_per_us(s),
        gamma: AngularFrequency::from_rad_per_us(gamma_e / 2.0),
        gamma_e: AngularFrequency::from_rad_per_us(gamma_e),
        gamma_r: AngularFrequency::ZERO,
    }
}

fn criterion_10(r: &mut Report) {
    let t = Instant::now();
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_ode, mut worst_trace) = (0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let d = random_drive(&mut rng);
        let traj =
            bloch::evolve_sampled(&BlochState::ground(), &d, 60.0, d.max_step(), 100).unwrap();
        for st in &traj.states {
            worst_trace = worst_trace.max((st.trace() - 1.0).abs());
        }
        let analytic = bloch::steady_sigma_rr(&d).unwrap();
        worst_ode = worst_ode.max((traj.last().sigma_rr - analytic).abs());
    }
    checks.push((
        worst_ode < 1e-6,
        format!("ODE vs closed form {worst_ode:.1e}"),
    ));
    checks.push((worst_trace < 1e-9, format!("trace {worst_trace:.1e}")));

    let c = cfg(100.0);
    let q = paper_quadrature();
    let atom = Position::on_axis(c.localized_z());
    let s = meanfield::shift_at(&atom, &c, &q, MaskMode::Local).unwrap();
    let s_half = meanfield::shift_at(&atom, &c, &q.halved(), MaskMode::Local).unwrap();
    let rel = (s.rad_per_us() / s_half.rad_per_us() - 1.0).abs();
    checks.push((rel < 0.01, format!("quadrature halving {rel:.1e}")));

    let c180 = cfg(180.0);
    let set = scan_settings();
    let det =
        localization::transverse_scan(&c180, AntiblockadeMode::None, 0.03, 201, &set).unwrap();
    let silent = noise::noisy_transverse_scan(
        &c180,
        &NoiseSpec::intensity(0.0, 7),
        AntiblockadeMode::None,
        0.03,
        201,
        &set,
    )
    .unwrap();
    let identical = det
        .sigma
        .iter()
        .zip(&silent.profile.sigma)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    checks.push((identical, "zero-noise reduction bit-identical".into()));

    let pool = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
    };
    let fast = QuadratureSpec::in_lambda(0.48, 100.0, 0.05);
    let work = || {
        let s = meanfield::shift_at(&atom, &c, &fast, MaskMode::Local).unwrap();
        let n = noise::noisy_transverse_scan(
            &c180,
            &NoiseSpec::intensity(0.3, 11),
            AntiblockadeMode::None,
            0.03,
            201,
            &set,
        )
        .unwrap();
        let spec =
            Map3DSpec::around_localization(&c, [0.03, 0.03, 0.03], 31, DeltaOffset::Calibrated, s);
        let m = localization::map3d(&c, &spec).unwrap();
        let mut bits: Vec<u64> = vec![s.rad_per_us().to_bits()];
        bits.extend(n.profile.sigma.iter().chain(&n.spread).map(|v| v.to_bits()));
        bits.extend(m.values.iter().map(|v| v.to_bits()));
        bits
    };
    let same = pool(1).install(work) == pool(4).install(work);
    checks.push((same, "1 vs 4 threads bit-identical".into()));

    let spec = NoiseSpec::frequency(AngularFrequency::from_mhz(0.5), 5);
    let w0 = c180.beam.waist_w0;
    let res =
        noise::noisy_transverse_scan(&c180, &spec, AntiblockadeMode::None, w0, 201, &set).unwrap();
    let (core, edge) = (res.spread[100], res.spread[200]);
    checks.push((
        core >= 5.0 * edge,
        format!("frequency-noise spread r=0 {core:.2e} vs r=W0 {edge:.2e}"),
    ));
    r.line(10, "property suites", checks, t);
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    let cals = calibrations();
    criterion_4(&mut report, &cals);
    criterion_5(&mut report, &cals);
    criterion_6(&mut report);
    criterion_7(&mut report, &cals);
    criterion_8(&mut report);
    criterion_9(&mut report, &cals);
    criterion_10(&mut report);
    println!("{} of 10 criteria failed", report.failures);
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
