//! Fixed-step RK4 integration of plant, filter and adaptation law, with
//! bisection localization of the band crossings `|phi(psi) + alpha| = delta`.
//!
//! The ODE state is `z = [x_0 .. x_{n-1}, xi1, xi2, theta_I]`; the phase and
//! the offset `C_theta` are the discrete part of the hybrid state and only
//! change at events. After an event the new phase is held for at least one
//! step (remainder of the current step plus the next one); if the gate still
//! disagrees with the phase at the following grid point, the event fires
//! there.

use std::fmt;

use crate::adapt::{configured_theta_p, s_delta, AdaptConfig, AdaptState, Phase, SwitchKind};
use crate::error::{Error, Result};
use crate::filter::{filter_rhs, FilterState};
use crate::multidim::EtaCurve;
use crate::plant::{closed_loop_rhs, Disturbance, FeedbackPhi, Plant};
use crate::trace::{Trace, TraceRow, FLAG_ENTER, FLAG_LEAVE};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_EVENT_TOL: f64 = 1e-7;
/// Per-step decrease of `theta0` tolerated by the monotonicity diagnostic.
pub const MONOTONE_TOL: f64 = 1e-7;
/// Switches resolved inside one step before the rest of the step is taken
/// without event detection.
pub const MAX_EVENTS_PER_STEP: usize = 16;

/// Initial condition of the derivative filter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FilterInit {
    #[default]
    Zero,
    /// Equilibrium for a constant input `psi(x0)`, so the filter output starts at zero.
    AtRest,
    Given(FilterState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
    pub event_tol: f64,
    pub x0: Vec<f64>,
    pub record_stride: usize,
    pub xi0: FilterInit,
    /// Radius used for the time-to-enter diagnostic; defaults to `epsilon + Delta / k`
    /// with `epsilon = 4 delta0 / k`.
    pub goal_radius: Option<f64>,
}

impl SimConfig {
    pub fn new(x0: Vec<f64>, t_end: f64) -> Self {
        SimConfig {
            dt: DEFAULT_DT,
            t0: 0.0,
            t_end,
            event_tol: DEFAULT_EVENT_TOL,
            x0,
            record_stride: 1,
            xi0: FilterInit::Zero,
            goal_radius: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::invalid("t_end must exceed t0"));
        }
        if self.t_end - self.t0 < self.dt * (1.0 - 1e-12) {
            return Err(Error::invalid(format!(
                "horizon {} shorter than one step dt = {}",
                self.t_end - self.t0,
                self.dt
            )));
        }
        if !(self.event_tol > 0.0 && self.event_tol < self.dt) {
            return Err(Error::invalid("event_tol must lie in (0, dt)"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride must be positive"));
        }
        if matches!(self.xi0, FilterInit::Given(s) if !s.is_finite()) {
            return Err(Error::invalid("initial filter state must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt + 1e-9).floor() as usize
    }
}

/// Everything a closed-loop run needs.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub plant: Plant,
    pub phi: FeedbackPhi,
    pub disturbance: Disturbance,
    pub adapt: AdaptConfig,
    pub sim: SimConfig,
    /// Lifting curve for `param_dim > 1`; `None` means the scalar estimate is the parameter.
    pub curve: Option<EtaCurve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub event_count: usize,
    pub goal_radius: f64,
    pub t_enter: Option<f64>,
    pub sup_x: f64,
    pub sup_u: f64,
    pub sup_abs_theta0: f64,
    /// Steps after the filter transient where `theta0` dropped by more than [`MONOTONE_TOL`].
    pub monotonicity_violations: usize,
    pub max_theta0_drop: f64,
    /// Largest `|theta0(t+) - theta0(t-)|` over all events.
    pub max_event_jump: f64,
    /// Largest gap between the chain-rule and error-model `psi'` over all steps.
    pub max_error_model_gap: f64,
    pub transient_end: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub trace: Trace,
    pub state: AdaptState,
    pub diagnostics: Diagnostics,
}

/// A run stopped by a numerical failure; carries everything up to the last good step.
#[derive(Debug, Clone)]
pub struct SimAbort {
    pub error: Error,
    pub trace: Trace,
    pub state: AdaptState,
}

impl fmt::Display for SimAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.trace.rows.last().map_or(f64::NAN, |r| r.t);
        write!(f, "{} (last good t = {t})", self.error)
    }
}

impl std::error::Error for SimAbort {}

/// One classical RK4 step.
pub fn rk4_step<F>(mut rhs: F, state: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { a.iter().zip(k).map(|(a, k)| a + h * k).collect() };
    let k1 = rhs(t, state)?;
    let k2 = rhs(t + 0.5 * dt, &axpy(state, &k1, 0.5 * dt))?;
    let k3 = rhs(t + 0.5 * dt, &axpy(state, &k2, 0.5 * dt))?;
    let k4 = rhs(t + dt, &axpy(state, &k3, dt))?;
    let next: Vec<f64> = (0..state.len())
        .map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteState { t: t + dt })
    }
}

/// Bisection for a sign change of `g` on `[t_lo, t_hi]`. Returns the right
/// end of the final bracket, where `g` has the sign of `g(t_hi)`.
pub fn locate_event(mut g: impl FnMut(f64) -> f64, t_lo: f64, t_hi: f64, event_tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (t_lo, t_hi);
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if (g_lo > 0.0) == (g_hi > 0.0) {
        return Err(Error::NoSignChange { t_lo, t_hi });
    }
    let left_positive = g_lo > 0.0;
    while hi - lo > event_tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if (g_mid > 0.0) == left_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

struct Law<'a> {
    cl: &'a ClosedLoop,
    n: usize,
}

struct Sample {
    psi: f64,
    alpha: f64,
    theta0: f64,
    theta: Vec<f64>,
}

impl<'a> Law<'a> {
    fn new(cl: &'a ClosedLoop) -> Self {
        Law {
            cl,
            n: cl.plant.state_dim,
        }
    }

    fn gamma(&self, st: &AdaptState) -> f64 {
        st.gamma_sign * self.cl.adapt.gamma
    }

    fn filter_state(&self, z: &[f64]) -> FilterState {
        FilterState {
            xi1: z[self.n],
            xi2: z[self.n + 1],
        }
    }

    fn sample(&self, z: &[f64], st: &AdaptState) -> Sample {
        let x = &z[..self.n];
        let psi = self.cl.plant.psi(x);
        let alpha = self.cl.adapt.filter.output(&self.filter_state(z));
        let theta_p = configured_theta_p(&self.cl.adapt, psi, alpha, &self.cl.phi);
        let gamma = self.gamma(st);
        let theta0 = gamma * (theta_p + z[self.n + 2] + st.c_theta_at(gamma, theta_p));
        let scalar = self.cl.adapt.lambda.eval(theta0);
        let theta = match &self.cl.curve {
            Some(c) => c.eval(scalar),
            None => vec![scalar],
        };
        Sample {
            psi,
            alpha,
            theta0,
            theta,
        }
    }

    fn rhs(&self, t: f64, z: &[f64], st: &AdaptState) -> Result<Vec<f64>> {
        let s = self.sample(z, st);
        let cl = self.cl;
        let out = closed_loop_rhs(&cl.plant, &z[..self.n], &s.theta, &cl.phi, t, &cl.disturbance)?;
        let (d1, d2) = filter_rhs(&cl.adapt.filter, &self.filter_state(z), s.psi);
        let mut dz = out.x_dot;
        dz.push(d1);
        dz.push(d2);
        dz.push(crate::adapt::theta_i_rhs(
            st.gate(),
            s.psi,
            cl.phi.eval(s.psi),
            s.alpha,
            z[self.n + 1],
            &cl.adapt.filter,
        ));
        Ok(dz)
    }

    /// `|phi(psi) + alpha| - delta`: positive inside the ACTIVE region.
    fn band(&self, z: &[f64]) -> f64 {
        let psi = self.cl.plant.psi(&z[..self.n]);
        let alpha = self.cl.adapt.filter.output(&self.filter_state(z));
        (self.cl.phi.eval(psi) + alpha).abs() - self.cl.adapt.delta()
    }

    fn consistent(&self, z: &[f64], st: &AdaptState) -> bool {
        (self.band(z) > 0.0) == (st.phase == Phase::Active)
    }

    fn step(&self, z: &[f64], t: f64, h: f64, st: &AdaptState) -> Result<Vec<f64>> {
        rk4_step(|tt, zz| self.rhs(tt, zz, st), z, t, h)
    }

    /// Applies the switch implied by the current phase at state `z`; returns the jump in `theta0`.
    fn fire(&self, z: &[f64], t: f64, st: &mut AdaptState) -> Result<f64> {
        let before = self.sample(z, st).theta0;
        let kind = match st.phase {
            Phase::Active => SwitchKind::Enter,
            Phase::Dormant => SwitchKind::Leave,
        };
        let psi = self.cl.plant.psi(&z[..self.n]);
        let alpha = self.cl.adapt.filter.output(&self.filter_state(z));
        let theta_p = configured_theta_p(&self.cl.adapt, psi, alpha, &self.cl.phi);
        st.theta_i = z[self.n + 2];
        let gamma = self.gamma(st);
        st.switch(kind, t, theta_p, st.theta_i, gamma)?;
        let after = self.sample(z, st).theta0;
        Ok((after - before).abs())
    }

    fn row(&self, t: f64, z: &[f64], st: &AdaptState, flag: u8) -> Result<(TraceRow, f64)> {
        let s = self.sample(z, st);
        let cl = self.cl;
        let x = &z[..self.n];
        let out = closed_loop_rhs(&cl.plant, x, &s.theta, &cl.phi, t, &cl.disturbance)?;
        let theta_p = configured_theta_p(&cl.adapt, s.psi, s.alpha, &cl.phi);
        let row = TraceRow {
            t,
            x: x.to_vec(),
            psi: s.psi,
            psi_dot_true: out.psi_dot_chain,
            u: out.u,
            alpha: s.alpha,
            theta0: s.theta0,
            theta_hat: s.theta,
            s_delta: st.gate(),
            theta_i: z[self.n + 2],
            c_theta: st.c_theta_at(self.gamma(st), theta_p),
            event_flag: flag,
        };
        Ok((row, (out.psi_dot_chain - out.psi_dot_error_model).abs()))
    }
}

impl ClosedLoop {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.adapt.validate()?;
        let p = &self.plant;
        if self.sim.x0.len() != p.state_dim {
            return Err(Error::invalid("x0 dimension mismatch"));
        }
        if !p.x0_box.contains(&self.sim.x0) {
            return Err(Error::invalid(format!(
                "x0 = {:?} outside the admissible box",
                self.sim.x0
            )));
        }
        match &self.curve {
            None if p.param_dim != 1 => Err(Error::invalid(
                "a lifting curve is required when the parameter is not scalar",
            )),
            Some(c) if c.dim != p.param_dim => Err(Error::invalid("curve dimension does not match the parameter")),
            Some(c) if c.lambda_lo != self.adapt.lambda.theta_lo || c.lambda_hi != self.adapt.lambda.theta_hi => {
                Err(Error::invalid("curve range must equal the lambda range"))
            }
            _ => Ok(()),
        }
    }

    pub fn initial_filter_state(&self) -> FilterState {
        match self.sim.xi0 {
            FilterInit::Zero => FilterState::default(),
            FilterInit::AtRest => self.adapt.filter.rest_state(self.plant.psi(&self.sim.x0)),
            FilterInit::Given(s) => s,
        }
    }

    pub fn goal_radius(&self) -> f64 {
        self.sim.goal_radius.unwrap_or_else(|| {
            let k = self.phi.k;
            4.0 * self.adapt.delta0 / k + self.adapt.disturbance_bound / k
        })
    }
}

/// Runs the closed loop over `[t0, t_end]`.
pub fn simulate(cl: &ClosedLoop) -> std::result::Result<SimOutput, Box<SimAbort>> {
    let law = Law::new(cl);
    let n = law.n;
    let sim = &cl.sim;
    let mut z: Vec<f64> = sim.x0.clone();
    let xi0 = cl.initial_filter_state();
    z.extend([xi0.xi1, xi0.xi2, 0.0]);
    let psi0 = cl.plant.psi(&sim.x0);
    let alpha0 = cl.adapt.filter.output(&xi0);
    let mut st = AdaptState::initial(&cl.adapt, psi0, alpha0, &cl.phi);
    let mut trace = Trace::new(n, cl.plant.param_dim);

    if let Err(e) = cl.validate() {
        return Err(Box::new(SimAbort {
            error: e,
            trace,
            state: st,
        }));
    }

    let steps = sim.steps();
    let dt = sim.dt;
    let transient_end = sim.t0 + 10.0 * cl.adapt.filter.time_constant();
    let mut diag = Diagnostics {
        steps,
        event_count: 0,
        goal_radius: cl.goal_radius(),
        t_enter: None,
        sup_x: 0.0,
        sup_u: 0.0,
        sup_abs_theta0: 0.0,
        monotonicity_violations: 0,
        max_theta0_drop: 0.0,
        max_event_jump: 0.0,
        max_error_model_gap: 0.0,
        transient_end,
    };

    macro_rules! bail {
        ($e:expr) => {
            return Err(Box::new(SimAbort {
                error: $e,
                trace,
                state: st,
            }))
        };
    }

    let observe = |t: f64,
                   z: &[f64],
                   st: &AdaptState,
                   flag: u8,
                   record: bool,
                   trace: &mut Trace,
                   diag: &mut Diagnostics|
     -> Result<f64> {
        let (row, gap) = law.row(t, z, st, flag)?;
        diag.sup_x = diag.sup_x.max(row.x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        diag.sup_u = diag.sup_u.max(row.u.abs());
        diag.sup_abs_theta0 = diag.sup_abs_theta0.max(row.theta0.abs());
        diag.max_error_model_gap = diag.max_error_model_gap.max(gap);
        let theta0 = row.theta0;
        if record {
            trace.rows.push(row);
        }
        Ok(theta0)
    };

    let mut prev_theta0 = match observe(sim.t0, &z, &st, 0, true, &mut trace, &mut diag) {
        Ok(v) => v,
        Err(e) => bail!(e),
    };
    let mut pending_flag = 0u8;

    for i in 0..steps {
        let t = sim.t0 + i as f64 * dt;
        let t_next = sim.t0 + (i + 1) as f64 * dt;

        if let Some(level) = cl.adapt.theta0_reflect_at {
            let th0 = law.sample(&z, &st).theta0;
            if st.phase == Phase::Active && th0.abs() >= level && th0.signum() == st.gamma_sign {
                let s = law.sample(&z, &st);
                st.theta_i = z[n + 2];
                let theta_p = configured_theta_p(&cl.adapt, s.psi, s.alpha, &cl.phi);
                st.reflect(cl.adapt.gamma, theta_p);
            }
        }

        if !law.consistent(&z, &st) {
            match law.fire(&z, t, &mut st) {
                Ok(j) => diag.max_event_jump = diag.max_event_jump.max(j),
                Err(e) => bail!(e),
            }
            pending_flag |= flag_of(st.switch_log.last().unwrap().kind);
        }

        let (mut t_cur, mut z_cur) = (t, z.clone());
        let mut fired = 0;
        let z_next = loop {
            let z_end = match law.step(&z_cur, t_cur, t_next - t_cur, &st) {
                Ok(v) => v,
                Err(e) => bail!(e),
            };
            if fired == MAX_EVENTS_PER_STEP || law.consistent(&z_end, &st) {
                break z_end;
            }
            if fired > 0 && !law.consistent(&z_cur, &st) {
                // grazing contact: the band came straight back within event_tol
                match law.fire(&z_cur, t_cur, &mut st) {
                    Ok(j) => diag.max_event_jump = diag.max_event_jump.max(j),
                    Err(e) => bail!(e),
                }
                pending_flag |= flag_of(st.switch_log.last().unwrap().kind);
                fired += 1;
                continue;
            }
            let st_ref = st.clone();
            let mut failed = None;
            let located = locate_event(
                |tau| {
                    if tau <= t_cur {
                        return law.band(&z_cur);
                    }
                    match law.step(&z_cur, t_cur, tau - t_cur, &st_ref) {
                        Ok(zz) => law.band(&zz),
                        Err(e) => {
                            failed = Some(e);
                            law.band(&z_cur)
                        }
                    }
                },
                t_cur,
                t_next,
                sim.event_tol,
            );
            if let Some(e) = failed {
                bail!(e);
            }
            // a sign change confirmed at the step end; a miss can only happen on an exact zero
            let tau = located.unwrap_or(t_next);
            let z_ev = if tau < t_next {
                match law.step(&z_cur, t_cur, tau - t_cur, &st) {
                    Ok(v) => v,
                    Err(e) => bail!(e),
                }
            } else {
                z_end
            };
            match law.fire(&z_ev, tau, &mut st) {
                Ok(j) => diag.max_event_jump = diag.max_event_jump.max(j),
                Err(e) => bail!(e),
            }
            pending_flag |= flag_of(st.switch_log.last().unwrap().kind);
            fired += 1;
            // roots closer than event_tol to a switch are not resolved separately
            let t_clear = (tau + sim.event_tol).min(t_next);
            if t_clear >= t_next {
                break match law.step(&z_ev, tau, t_next - tau, &st) {
                    Ok(v) if t_next > tau => v,
                    Ok(_) => z_ev,
                    Err(e) => bail!(e),
                };
            }
            z_cur = match law.step(&z_ev, tau, t_clear - tau, &st) {
                Ok(v) => v,
                Err(e) => bail!(e),
            };
            t_cur = t_clear;
        };

        z = z_next;
        let record = (i + 1) % sim.record_stride == 0 || i + 1 == steps;
        let flag = if record { std::mem::take(&mut pending_flag) } else { 0 };
        let theta0 = match observe(t_next, &z, &st, flag, record, &mut trace, &mut diag) {
            Ok(v) => v,
            Err(e) => bail!(e),
        };
        if t >= transient_end {
            let drop = prev_theta0 - theta0;
            if drop > MONOTONE_TOL {
                diag.monotonicity_violations += 1;
            }
            diag.max_theta0_drop = diag.max_theta0_drop.max(drop);
        }
        prev_theta0 = theta0;
    }
    st.theta_i = z[n + 2];
    trace.events = st.switch_log.clone();
    diag.event_count = st.switch_log.len();
    diag.t_enter = crate::analysis::dwell_in_radius(&trace, diag.goal_radius).t_enter;
    Ok(SimOutput {
        trace,
        state: st,
        diagnostics: diag,
    })
}

fn flag_of(kind: SwitchKind) -> u8 {
    match kind {
        SwitchKind::Enter => FLAG_ENTER,
        SwitchKind::Leave => FLAG_LEAVE,
    }
}

/// Gate value at the start of a run, for callers that need the initial phase.
pub fn initial_gate(cl: &ClosedLoop) -> u8 {
    let psi0 = cl.plant.psi(&cl.sim.x0);
    let alpha0 = cl.adapt.filter.output(&cl.initial_filter_state());
    s_delta(cl.phi.eval(psi0) + alpha0, cl.adapt.delta())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_decay_step() {
        let x = rk4_step(|_, x| Ok(vec![-x[0]]), &[1.0], 0.0, 0.1).unwrap();
        assert!((x[0] - 0.9048375).abs() < 1e-7);
        assert!((x[0] - (-0.1f64).exp()).abs() < 2e-7);
    }

    #[test]
    fn rk4_trivial_fields() {
        assert_eq!(
            rk4_step(|_, _| Ok(vec![0.0, 0.0]), &[1.5, -2.0], 0.0, 0.3).unwrap(),
            vec![1.5, -2.0]
        );
        assert_eq!(rk4_step(|_, _| Ok(vec![1.0]), &[2.0], 0.0, 0.5).unwrap(), vec![2.5]);
    }

    #[test]
    fn rk4_reports_blow_up() {
        let err = rk4_step(|_, _| Ok(vec![f64::INFINITY]), &[0.0], 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFiniteState { .. }));
    }

    #[test]
    fn bisection_on_linear_crossing() {
        let t = locate_event(|t| t - 1.25, 1.2, 1.3, 1e-6).unwrap();
        assert!((t - 1.25).abs() <= 1e-6);
        assert!(matches!(
            locate_event(|t| t + 1.0, 0.0, 1.0, 1e-6),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn bisection_on_tangency_accepts_endpoint() {
        // double root at 0.5 touches zero from above; bracket endpoints share a sign
        let g = |t: f64| (t - 0.5) * (t - 0.5);
        assert!(locate_event(g, 0.0, 1.0, 1e-6).is_err());
        let t = locate_event(g, 0.5, 1.0, 1e-6).unwrap();
        assert_eq!(t, 0.5);
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig::new(vec![0.0], 0.05);
        c.dt = 0.1;
        assert!(c.validate().is_err());
        c.t_end = 1.0;
        assert!(c.validate().is_ok());
        c.event_tol = 0.2;
        assert!(c.validate().is_err());
    }
}
