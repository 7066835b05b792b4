//! Single-superatom ladder dynamics and the closed-form steady state.
//!
//! The equations of motion cover σgg, σee and the three coherences; σrr
//! follows from trace conservation. Dephasings are `γge = γer = γ` and
//! `γgr = Γr/2`, which vanishes for the default `Γr = 0`.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use thiserror::Error;

use crate::fields;
use crate::units::{AngularFrequency, Position, SystemConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlochError {
    #[error("time step {dt} µs exceeds the stability limit {limit} µs")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("time step and end time must be positive and finite")]
    BadTimeGrid,
    #[error("state became non-finite at t = {t} µs")]
    NonFinite { t: f64 },
    #[error("population left [0, 1] by {excess:e} at t = {t} µs")]
    PopulationOutOfRange { t: f64, excess: f64 },
    #[error("steady-state denominator vanishes for this drive")]
    DegenerateDrive,
    #[error("no drive field: Ωp and Ωc are both zero")]
    ZeroField,
    #[error("relative tolerance must lie in (0, 0.1], got {0}")]
    BadTolerance(f64),
    #[error("no persistent steady band within the {budget} µs budget")]
    NotConverged { budget: f64 },
}

/// Density-matrix components of one (super)atom.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlochState {
    pub sigma_gg: f64,
    pub sigma_ee: f64,
    pub sigma_rr: f64,
    pub sigma_ge: Complex64,
    pub sigma_er: Complex64,
    pub sigma_gr: Complex64,
}

impl BlochState {
    pub fn ground() -> Self {
        Self {
            sigma_gg: 1.0,
            ..Self::default()
        }
    }

    pub fn trace(&self) -> f64 {
        self.sigma_gg + self.sigma_ee + self.sigma_rr
    }

    pub fn is_finite(&self) -> bool {
        [self.sigma_gg, self.sigma_ee, self.sigma_rr]
            .iter()
            .all(|v| v.is_finite())
            && [self.sigma_ge, self.sigma_er, self.sigma_gr]
                .iter()
                .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest distance of any population from `[0, 1]`.
    fn population_excess(&self) -> f64 {
        [self.sigma_gg, self.sigma_ee, self.sigma_rr]
            .iter()
            .map(|&p| (-p).max(p - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }
}

impl Add for BlochState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            sigma_gg: self.sigma_gg + o.sigma_gg,
            sigma_ee: self.sigma_ee + o.sigma_ee,
            sigma_rr: self.sigma_rr + o.sigma_rr,
            sigma_ge: self.sigma_ge + o.sigma_ge,
            sigma_er: self.sigma_er + o.sigma_er,
            sigma_gr: self.sigma_gr + o.sigma_gr,
        }
    }
}

impl Mul<f64> for BlochState {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            sigma_gg: self.sigma_gg * k,
            sigma_ee: self.sigma_ee * k,
            sigma_rr: self.sigma_rr * k,
            sigma_ge: self.sigma_ge * k,
            sigma_er: self.sigma_er * k,
            sigma_gr: self.sigma_gr * k,
        }
    }
}

/// Fields, detunings and rates acting on one atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDrive {
    pub omega_p: f64,
    pub omega_c: Complex64,
    pub delta_p: AngularFrequency,
    pub delta_c: AngularFrequency,
    pub s_shift: AngularFrequency,
    pub gamma: AngularFrequency,
    pub gamma_e: AngularFrequency,
    pub gamma_r: AngularFrequency,
}

impl LocalDrive {
    /// Drive at `pos` with the configured detuning profile and shift `s`.
    pub fn at(config: &SystemConfig, pos: &Position, s_shift: AngularFrequency) -> Self {
        let f = fields::sample(pos, config);
        Self {
            omega_p: f.omega_p,
            omega_c: f.omega_c,
            delta_p: config.probe.delta_p,
            delta_c: f.delta_c,
            s_shift,
            gamma: config.medium.dephasing(),
            gamma_e: config.medium.gamma_e,
            gamma_r: config.medium.gamma_r,
        }
    }

    /// Same drive with `Δc = s`, i.e. perfect antiblockade at this point.
    pub fn antiblockaded(mut self) -> Self {
        self.delta_c = self.s_shift;
        self
    }

    pub fn probe_intensity(&self) -> f64 {
        self.omega_p * self.omega_p
    }

    pub fn control_intensity(&self) -> f64 {
        self.omega_c.norm_sqr()
    }

    /// Two-photon detuning including the Rydberg shift, `Δp + Δc − s`.
    pub fn two_photon_detuning(&self) -> f64 {
        (self.delta_p + self.delta_c - self.s_shift).rad_per_us()
    }

    fn is_finite(&self) -> bool {
        self.omega_p.is_finite()
            && self.omega_c.re.is_finite()
            && self.omega_c.im.is_finite()
            && [
                self.delta_p,
                self.delta_c,
                self.s_shift,
                self.gamma,
                self.gamma_e,
                self.gamma_r,
            ]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Largest rate in the problem; sets the RK4 step limit.
    pub fn fastest_rate(&self) -> f64 {
        [
            self.omega_c.norm(),
            self.omega_p.abs(),
            self.gamma.rad_per_us(),
            self.gamma_e.rad_per_us(),
            self.delta_p.rad_per_us().abs(),
            (self.delta_c - self.s_shift).rad_per_us().abs(),
            self.two_photon_detuning().abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Largest step accepted by [`evolve`].
    pub fn max_step(&self) -> f64 {
        0.05 / self.fastest_rate()
    }
}

/// Time derivative of the state.
pub fn bloch_rhs(st: &BlochState, d: &LocalDrive) -> BlochState {
    let i = Complex64::i();
    let op = Complex64::new(d.omega_p, 0.0);
    let oc = d.omega_c;
    let g = d.gamma.rad_per_us();
    let ge_rate = d.gamma_e.rad_per_us();
    let gr_rate = d.gamma_r.rad_per_us();
    let g_gr = 0.5 * gr_rate;
    let dp = d.delta_p.rad_per_us();
    let dcs = (d.delta_c - d.s_shift).rad_per_us();

    let pump_p = 2.0 * (op.conj() * st.sigma_ge).im;
    let pump_c = 2.0 * (oc.conj() * st.sigma_er).im;

    let d_gg = ge_rate * st.sigma_ee - pump_p;
    let d_ee = gr_rate * st.sigma_rr - ge_rate * st.sigma_ee - pump_c + pump_p;
    let d_ge = Complex64::new(-g, dp) * st.sigma_ge
        + i * (oc.conj() * st.sigma_gr - op * (st.sigma_ee - st.sigma_gg));
    let d_er = Complex64::new(-g, dcs) * st.sigma_er
        - i * (op.conj() * st.sigma_gr + oc * (st.sigma_rr - st.sigma_ee));
    let d_gr =
        Complex64::new(-g_gr, dp + dcs) * st.sigma_gr + i * (oc * st.sigma_ge - op * st.sigma_er);

    BlochState {
        sigma_gg: d_gg,
        sigma_ee: d_ee,
        sigma_rr: -(d_gg + d_ee),
        sigma_ge: d_ge,
        sigma_er: d_er,
        sigma_gr: d_gr,
    }
}

/// One classical RK4 step.
pub fn rk4_step(st: &BlochState, d: &LocalDrive, dt: f64) -> BlochState {
    let k1 = bloch_rhs(st, d);
    let k2 = bloch_rhs(&(*st + k1 * (0.5 * dt)), d);
    let k3 = bloch_rhs(&(*st + k2 * (0.5 * dt)), d);
    let k4 = bloch_rhs(&(*st + k3 * dt), d);
    *st + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Sampled trajectory; `states[k]` is the state at `k·stride·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub stride: usize,
    pub states: Vec<BlochState>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        (k * self.stride) as f64 * self.dt
    }

    pub fn last(&self) -> &BlochState {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

const POPULATION_SLACK: f64 = 1e-6;

fn check_step(dt: f64, t_end: f64, drive: &LocalDrive) -> Result<usize, BlochError> {
    if !(dt > 0.0 && dt.is_finite() && t_end >= 0.0 && t_end.is_finite()) {
        return Err(BlochError::BadTimeGrid);
    }
    if !drive.is_finite() {
        return Err(BlochError::NonFinite { t: 0.0 });
    }
    let limit = drive.max_step();
    if dt > limit {
        return Err(BlochError::StepTooLarge { dt, limit });
    }
    Ok((t_end / dt).round() as usize)
}

/// Runs the integrator, handing every state (including the initial one) to
/// `observe(step, state)`.
pub fn evolve_with<F>(
    initial: &BlochState,
    drive: &LocalDrive,
    t_end: f64,
    dt: f64,
    mut observe: F,
) -> Result<BlochState, BlochError>
where
    F: FnMut(usize, &BlochState),
{
    let steps = check_step(dt, t_end, drive)?;
    let mut st = *initial;
    observe(0, &st);
    for k in 1..=steps {
        st = rk4_step(&st, drive, dt);
        let t = k as f64 * dt;
        if !st.is_finite() {
            return Err(BlochError::NonFinite { t });
        }
        let excess = st.population_excess();
        if excess > POPULATION_SLACK {
            return Err(BlochError::PopulationOutOfRange { t, excess });
        }
        observe(k, &st);
    }
    Ok(st)
}

/// Fixed-step RK4 integration keeping every `stride`-th state.
pub fn evolve_sampled(
    initial: &BlochState,
    drive: &LocalDrive,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory, BlochError> {
    let stride = stride.max(1);
    let mut states = Vec::new();
    evolve_with(initial, drive, t_end, dt, |k, st| {
        if k % stride == 0 {
            states.push(*st);
        }
    })?;
    Ok(Trajectory { dt, stride, states })
}

pub fn evolve(
    initial: &BlochState,
    drive: &LocalDrive,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, BlochError> {
    evolve_sampled(initial, drive, t_end, dt, 1)
}

/// Closed-form steady Rydberg population.
pub fn steady_sigma_rr(drive: &LocalDrive) -> Result<f64, BlochError> {
    let ip = drive.probe_intensity();
    let ic = drive.control_intensity();
    let dp = drive.delta_p.rad_per_us();
    let d2 = drive.two_photon_detuning();
    let g = drive.gamma.rad_per_us();
    let sum = ip + ic;
    let num = ip * sum;
    let den = sum * sum - 2.0 * dp * d2 * ic + (g * g + dp * dp + 2.0 * ip) * d2 * d2;
    if den == 0.0 || !den.is_finite() {
        return Err(BlochError::DegenerateDrive);
    }
    Ok(num / den)
}

/// `1/(1+η)`: the steady population under perfect antiblockade.
pub fn antiblockade_sigma(eta: f64) -> f64 {
    1.0 / (1.0 + eta)
}

/// Lorentzian form `1/(1 + (Δc − s)²/w²)` valid for `Ic ≪ Ip`.
pub fn approx_sigma(delta_c: AngularFrequency, s: AngularFrequency, w: AngularFrequency) -> f64 {
    let x = (delta_c - s).rad_per_us() / w.rad_per_us();
    1.0 / (1.0 + x * x)
}

/// Half-peak width `(Ip + Ic)/√(γ² + Δp² + 2Ip)` of the two-photon line.
pub fn linewidth_w(drive: &LocalDrive) -> AngularFrequency {
    let ip = drive.probe_intensity();
    let g = drive.gamma.rad_per_us();
    let dp = drive.delta_p.rad_per_us();
    AngularFrequency::from_rad_per_us(
        (ip + drive.control_intensity()) / (g * g + dp * dp + 2.0 * ip).sqrt(),
    )
}

/// Rydberg and ground amplitudes of the dark state `(Ωp|r⟩ − Ωc|g⟩)/N`.
pub fn dark_state_weights(
    omega_p: f64,
    omega_c: Complex64,
) -> Result<(Complex64, Complex64), BlochError> {
    let norm = (omega_p * omega_p + omega_c.norm_sqr()).sqrt();
    if norm == 0.0 {
        return Err(BlochError::ZeroField);
    }
    Ok((Complex64::new(omega_p / norm, 0.0), -omega_c / norm))
}

/// Time after which `σrr(t)` stays inside `±rel_tol·σrr(∞)` of the analytic
/// steady value, starting from the ground state.
///
/// The band must hold over the final quarter of `budget` for the result to
/// be accepted.
pub fn steady_time(drive: &LocalDrive, rel_tol: f64, budget: f64) -> Result<f64, BlochError> {
    if !(rel_tol > 0.0 && rel_tol <= 0.1) {
        return Err(BlochError::BadTolerance(rel_tol));
    }
    let target = steady_sigma_rr(drive)?;
    let band = rel_tol * target;
    let dt = drive.max_step();
    let mut last_out: Option<usize> = None;
    evolve_with(&BlochState::ground(), drive, budget, dt, |k, st| {
        if (st.sigma_rr - target).abs() > band {
            last_out = Some(k);
        }
    })?;
    let entered = match last_out {
        None => 0.0,
        Some(k) => (k + 1) as f64 * dt,
    };
    if entered > 0.75 * budget {
        return Err(BlochError::NotConverged { budget });
    }
    Ok(entered)
}
