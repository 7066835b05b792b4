use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use vortex_localize::bloch::{self, BlochState, LocalDrive};
use vortex_localize::fields;
use vortex_localize::{AngularFrequency, Position, SystemConfig};

fn cfg(kappa: f64) -> SystemConfig {
    SystemConfig::default().with_kappa(kappa).unwrap()
}

fn drive(op: f64, oc: f64, phase: f64, dp: f64, residual: f64, s: f64, ge: f64) -> LocalDrive {
    LocalDrive {
        omega_p: op,
        omega_c: Complex64::from_polar(oc, phase),
        delta_p: AngularFrequency::from_rad_per_us(dp),
        delta_c: AngularFrequency::from_rad_per_us(residual - dp + s),
        s_shift: AngularFrequency::from_rad_per_us(s),
        gamma: AngularFrequency::from_rad_per_us(ge / 2.0),
        gamma_e: AngularFrequency::from_rad_per_us(ge),
        gamma_r: AngularFrequency::ZERO,
    }
}

proptest! {
    #[test]
    fn mhz_round_trip(nu in -1e4_f64..1e4) {
        let back = AngularFrequency::from_mhz(nu).mhz();
        prop_assert!((back - nu).abs() <= 1e-12 * nu.abs().max(1.0));
    }

    #[test]
    fn cartesian_round_trip(x in -5.0_f64..5.0, y in -5.0_f64..5.0, z in -5.0_f64..5.0) {
        let (a, b, c) = Position::from_cartesian(x, y, z).to_cartesian();
        prop_assert!((a - x).abs() < 1e-12 && (b - y).abs() < 1e-12 && c == z);
    }

    #[test]
    fn sigma_is_azimuthally_symmetric(
        r in 0.0_f64..2.0,
        phi in 0.0_f64..TAU,
        z in 0.0_f64..1.0,
        s in 0.0_f64..10.0,
    ) {
        let c = cfg(100.0);
        let s = AngularFrequency::from_rad_per_us(s);
        let a = bloch::steady_sigma_rr(&LocalDrive::at(&c, &Position::new(r, phi, z), s)).unwrap();
        let b = bloch::steady_sigma_rr(&LocalDrive::at(&c, &Position::new(r, 0.0, z), s)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn eta_is_intensity_ratio(r in 0.0_f64..3.0, kappa in 3.0_f64..500.0) {
        let c = cfg(kappa);
        let pos = Position::new(r, 0.3, 0.0);
        let d = LocalDrive::at(&c, &pos, AngularFrequency::ZERO);
        let eta = fields::intensity_ratio_eta(&pos, &c);
        let ratio = d.control_intensity() / d.probe_intensity();
        prop_assert!((eta - ratio).abs() <= 1e-9 * ratio.max(1e-12));
    }

    #[test]
    fn resonant_antiblockade_gives_one_over_one_plus_eta(
        r in 0.0_f64..3.0,
        kappa in 3.0_f64..500.0,
        s in -20.0_f64..20.0,
    ) {
        let c = cfg(kappa);
        let pos = Position::new(r, 1.0, 0.2);
        let d = LocalDrive::at(&c, &pos, AngularFrequency::from_rad_per_us(s)).antiblockaded();
        let sigma = bloch::steady_sigma_rr(&d).unwrap();
        let expected = bloch::antiblockade_sigma(fields::intensity_ratio_eta(&pos, &c));
        prop_assert!((sigma - expected).abs() < 1e-12);
    }

    #[test]
    fn standing_wave_is_periodic(z in -2.0_f64..2.0, r in 0.0_f64..1.0) {
        let c = cfg(100.0);
        let lam = c.lambda_c();
        let s = AngularFrequency::from_mhz(1.0);
        let a = bloch::steady_sigma_rr(&LocalDrive::at(&c, &Position::new(r, 0.0, z), s)).unwrap();
        let b = bloch::steady_sigma_rr(&LocalDrive::at(&c, &Position::new(r, 0.0, z + lam), s))
            .unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ode_conserves_trace_and_reaches_closed_form(
        op in 2.0_f64..10.0,
        oc in 5.0_f64..30.0,
        phase in 0.0_f64..TAU,
        dp in -5.0_f64..5.0,
        residual in -3.0_f64..3.0,
        s in 0.0_f64..3.0,
        ge in 20.0_f64..60.0,
    ) {
        let d = drive(op, oc, phase, dp, residual, s, ge);
        let traj = bloch::evolve(&BlochState::ground(), &d, 60.0, d.max_step())
            .unwrap();
        for st in &traj.states {
            prop_assert!((st.trace() - 1.0).abs() < 1e-9);
            prop_assert!(st.sigma_rr >= -1e-9 && st.sigma_rr <= 1.0 + 1e-9);
        }
        let analytic = bloch::steady_sigma_rr(&d).unwrap();
        prop_assert!((traj.last().sigma_rr - analytic).abs() < 1e-6);
    }

    #[test]
    fn halving_the_step_changes_little(
        op in 2.0_f64..10.0,
        oc in 5.0_f64..30.0,
        dp in -5.0_f64..5.0,
        residual in -3.0_f64..3.0,
        ge in 20.0_f64..60.0,
    ) {
        let d = drive(op, oc, PI / 3.0, dp, residual, 1.0, ge);
        let dt = 2.0 / (2.0 / d.max_step()).ceil();
        let ground = BlochState::ground();
        let a = bloch::evolve_with(&ground, &d, 2.0, dt, |_, _| {}).unwrap().sigma_rr;
        let b = bloch::evolve_with(&ground, &d, 2.0, 0.5 * dt, |_, _| {}).unwrap().sigma_rr;
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}
