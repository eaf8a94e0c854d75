//! Hybrid finite-form adaptation law.
//!
//! The internal estimate is
//!
//! ```text
//! theta0    = gamma (theta_P + theta_I + C_theta)
//! theta_hat = lambda(theta0)
//! theta_P   = psi alpha + Phi(psi),           Phi' = phi
//! theta_I'  = S (phi (phi + alpha) - psi alpha')
//! ```
//!
//! where `alpha = c1 xi1` is the filtered derivative of `psi` and
//! `alpha' = c1 (xi2 + b1 psi)` is available from the filter state. Along
//! solutions `theta0' = gamma S (phi + psi')(phi + alpha)`, so the estimate
//! uses the true `psi'` without measuring it. `S` is the gate
//! `|phi + alpha| > delta`; on dormant intervals `C_theta` tracks `theta_P`
//! so that `theta0` is frozen, and at every switch the offset is rebased so
//! `theta0` stays continuous.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, FilterState};
use crate::plant::FeedbackPhi;

/// Gate `S_delta`: 1 iff `|phi(psi) + alpha| > delta`.
pub fn s_delta(phi_psi_plus_alpha: f64, delta: f64) -> u8 {
    u8::from(phi_psi_plus_alpha.abs() > delta)
}

/// Periodic surjection of the real line onto `[lo, hi]`:
/// `lambda(s) = lo + (hi - lo) (sin s + 1) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaWrap {
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl LambdaWrap {
    pub fn new(theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if !(theta_lo < theta_hi) {
            return Err(Error::invalid(format!(
                "lambda range needs lo < hi, got [{theta_lo}, {theta_hi}]"
            )));
        }
        Ok(LambdaWrap { theta_lo, theta_hi })
    }

    pub fn period(&self) -> f64 {
        2.0 * PI
    }

    pub fn eval(&self, s: f64) -> f64 {
        let v = self.theta_lo + (self.theta_hi - self.theta_lo) * 0.5 * (s.sin() + 1.0);
        v.clamp(self.theta_lo, self.theta_hi)
    }

    pub fn slope(&self, s: f64) -> f64 {
        (self.theta_hi - self.theta_lo) * 0.5 * s.cos()
    }

    /// A point of the principal branch `[-pi/2, pi/2]` mapping to `theta`.
    pub fn preimage(&self, theta: f64) -> Result<f64> {
        if !(theta >= self.theta_lo && theta <= self.theta_hi) {
            return Err(Error::invalid(format!("{theta} outside lambda range")));
        }
        let u = 2.0 * (theta - self.theta_lo) / (self.theta_hi - self.theta_lo) - 1.0;
        Ok(u.clamp(-1.0, 1.0).asin())
    }

    /// Sampled coverage: from every start `s`, every `theta` is reached
    /// within one period, up to the sampling resolution in `theta`.
    pub fn check_coverage(&self, s_starts: &[f64], thetas: &[f64], samples_per_period: usize) -> bool {
        let n = samples_per_period.max(16);
        let h = self.period() / n as f64;
        let resolution = (self.theta_hi - self.theta_lo) * 0.5 * h;
        s_starts.iter().all(|&s| {
            let vals: Vec<f64> = (1..=n).map(|i| self.eval(s + i as f64 * h)).collect();
            thetas.iter().all(|&th| {
                vals.windows(2).any(|w| {
                    let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                    th >= a - resolution && th <= b + resolution
                })
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Active,
    Dormant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchKind {
    /// The sum `phi + alpha` enters the band `|.| <= delta`.
    Enter,
    /// The sum leaves the band.
    Leave,
}

impl SwitchKind {
    pub fn label(&self) -> &'static str {
        match self {
            SwitchKind::Enter => "ENTER",
            SwitchKind::Leave => "LEAVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub t: f64,
    pub kind: SwitchKind,
}

/// Test hooks that deliberately break the law; used to show the verifier catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    FlipThetaPSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    pub gamma: f64,
    pub delta0: f64,
    /// `Delta`: bound on the disturbance (or on the curve residual).
    pub disturbance_bound: f64,
    pub lambda: LambdaWrap,
    pub filter: FilterConfig,
    /// Optional `|theta0|` level at which the sign of `gamma` is flipped.
    pub theta0_reflect_at: Option<f64>,
    /// Optional initial `theta0`; realized through `C_theta(t0)`.
    pub theta0_init: Option<f64>,
    pub mutation: Option<Mutation>,
}

impl AdaptConfig {
    pub fn new(
        gamma: f64,
        delta0: f64,
        disturbance_bound: f64,
        lambda: LambdaWrap,
        filter: FilterConfig,
    ) -> Result<Self> {
        let cfg = AdaptConfig {
            gamma,
            delta0,
            disturbance_bound,
            lambda,
            filter,
            theta0_reflect_at: None,
            theta0_init: None,
            mutation: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma must be positive"));
        }
        if !(self.delta0 > 0.0) {
            return Err(Error::invalid("delta0 must be positive"));
        }
        if !(self.disturbance_bound >= 0.0) {
            return Err(Error::invalid("disturbance bound must be non-negative"));
        }
        if let Some(r) = self.theta0_reflect_at {
            if !(r > 0.0) {
                return Err(Error::invalid("theta0_reflect_at must be positive"));
            }
        }
        Ok(())
    }

    /// Band half-width `delta = delta0 + Delta`.
    pub fn delta(&self) -> f64 {
        self.delta0 + self.disturbance_bound
    }
}

/// `delta0 = k epsilon / 4`, inside the `k epsilon / 3` requirement.
pub fn delta0_for_epsilon(k: f64, epsilon: f64) -> f64 {
    k * epsilon / 4.0
}

/// Proportional term `theta_P = psi alpha + Phi(psi)`; for `phi(psi) = psi`
/// this is `psi (alpha + psi / 2)`.
pub fn theta_p(psi_val: f64, alpha_val: f64, phi: &FeedbackPhi) -> f64 {
    psi_val * alpha_val + phi.primitive(psi_val)
}

/// Integral-term drift `S (phi (phi + alpha) - c1 psi (xi2 + b1 psi))`.
pub fn theta_i_rhs(gate: u8, psi_val: f64, phi_val: f64, alpha_val: f64, xi2: f64, filter: &FilterConfig) -> f64 {
    if gate == 0 {
        return 0.0;
    }
    let alpha_dot = filter.c1 * (xi2 + filter.b1 * psi_val);
    phi_val * (phi_val + alpha_val) - psi_val * alpha_dot
}

/// Hybrid memory of the law: integral term, switching offset, phase and the
/// switching sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptState {
    pub theta_i: f64,
    /// Offset in force on ACTIVE intervals.
    pub c_theta: f64,
    pub phase: Phase,
    pub initial_phase: Phase,
    pub theta0_at_last_enter: f64,
    pub thetap_at_last_enter: f64,
    pub thetai_at_last_enter: f64,
    pub switch_log: Vec<SwitchEvent>,
    /// Sign applied to `gamma`; flips only when reflection is configured.
    pub gamma_sign: f64,
    pub reflections: usize,
}

impl AdaptState {
    /// Initial state: `theta_I = 0`, `C_theta` chosen to realize
    /// `theta0_init` (zero by default), phase from the initial gate test.
    pub fn initial(cfg: &AdaptConfig, psi0: f64, alpha0: f64, phi: &FeedbackPhi) -> Self {
        let p0 = signed_theta_p(cfg, psi0, alpha0, phi);
        let c0 = cfg.theta0_init.map_or(0.0, |th0| th0 / cfg.gamma - p0);
        let phase = if s_delta(phi.eval(psi0) + alpha0, cfg.delta()) == 1 {
            Phase::Active
        } else {
            Phase::Dormant
        };
        AdaptState {
            theta_i: 0.0,
            c_theta: c0,
            phase,
            initial_phase: phase,
            theta0_at_last_enter: cfg.gamma * (p0 + c0),
            thetap_at_last_enter: p0,
            thetai_at_last_enter: 0.0,
            switch_log: Vec::new(),
            gamma_sign: 1.0,
            reflections: 0,
        }
    }

    pub fn gate(&self) -> u8 {
        u8::from(self.phase == Phase::Active)
    }

    /// `C_theta(t)`: constant on ACTIVE intervals, tracking `theta_P` on DORMANT ones.
    pub fn c_theta_at(&self, gamma: f64, theta_p_now: f64) -> f64 {
        match self.phase {
            Phase::Active => self.c_theta,
            Phase::Dormant => self.theta0_at_last_enter / gamma - self.thetai_at_last_enter - theta_p_now,
        }
    }

    /// Applies a switching event at time `t`. Fails if it repeats the previous kind.
    pub fn switch(&mut self, kind: SwitchKind, t: f64, theta_p_now: f64, theta_i_now: f64, gamma: f64) -> Result<()> {
        let expected = match self.phase {
            Phase::Active => SwitchKind::Enter,
            Phase::Dormant => SwitchKind::Leave,
        };
        if kind != expected {
            return Err(Error::EventOrderViolation(kind));
        }
        self.c_theta = c_theta_update(self, kind, theta_p_now, theta_i_now, gamma);
        match kind {
            SwitchKind::Enter => {
                self.theta0_at_last_enter = gamma * (theta_p_now + theta_i_now + self.c_theta);
                self.thetap_at_last_enter = theta_p_now;
                self.thetai_at_last_enter = theta_i_now;
                self.phase = Phase::Dormant;
            }
            SwitchKind::Leave => self.phase = Phase::Active,
        }
        self.switch_log.push(SwitchEvent { t, kind });
        Ok(())
    }

    /// Flips the sign of the effective gain, rebasing the offset so `theta0`
    /// is continuous. Only meaningful on ACTIVE intervals.
    pub fn reflect(&mut self, gamma: f64, theta_p_now: f64) {
        let theta0 = self.gamma_sign * gamma * (theta_p_now + self.theta_i + self.c_theta);
        self.gamma_sign = -self.gamma_sign;
        self.c_theta = theta0 / (self.gamma_sign * gamma) - theta_p_now - self.theta_i;
        self.reflections += 1;
    }
}

/// Offset after a switching event.
///
/// * `Enter` at `t_bar`: the ACTIVE offset is kept; from here on the DORMANT
///   branch `theta0(t_bar)/gamma - theta_I(t_bar) - theta_P(t)` applies.
/// * `Leave` at `t_low`: `C(t_bar) + theta_P(t_bar) - theta_P(t_low)`,
///   constant until the next `Enter`.
pub fn c_theta_update(state: &AdaptState, event: SwitchKind, theta_p_now: f64, _theta_i_now: f64, _gamma: f64) -> f64 {
    match event {
        SwitchKind::Enter => state.c_theta,
        SwitchKind::Leave => state.c_theta + state.thetap_at_last_enter - theta_p_now,
    }
}

fn signed_theta_p(cfg: &AdaptConfig, psi: f64, alpha: f64, phi: &FeedbackPhi) -> f64 {
    let p = theta_p(psi, alpha, phi);
    match cfg.mutation {
        Some(Mutation::FlipThetaPSign) => -p,
        None => p,
    }
}

/// Proportional term as used by the configured law (honours test mutations).
pub fn configured_theta_p(cfg: &AdaptConfig, psi: f64, alpha: f64, phi: &FeedbackPhi) -> f64 {
    signed_theta_p(cfg, psi, alpha, phi)
}

/// `(theta0, lambda(theta0))` for the current state.
pub fn theta_hat(cfg: &AdaptConfig, state: &AdaptState, psi_val: f64, alpha_val: f64, phi: &FeedbackPhi) -> (f64, f64) {
    let gamma = state.gamma_sign * cfg.gamma;
    let p = signed_theta_p(cfg, psi_val, alpha_val, phi);
    let c = state.c_theta_at(gamma, p);
    let theta0 = gamma * (p + state.theta_i + c);
    (theta0, cfg.lambda.eval(theta0))
}

/// Convenience: filter output for a state.
pub fn alpha_of(cfg: &AdaptConfig, s: &FilterState) -> f64 {
    cfg.filter.output(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64) -> AdaptConfig {
        AdaptConfig::new(
            gamma,
            0.1,
            0.0,
            LambdaWrap::new(-2.0, 2.0).unwrap(),
            FilterConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn gate_boundary_is_dormant() {
        assert_eq!(s_delta(0.5, 0.2), 1);
        assert_eq!(s_delta(0.2, 0.2), 0);
        assert_eq!(s_delta(-0.5, 0.2), 1);
    }

    #[test]
    fn lambda_values() {
        let w = LambdaWrap::new(-1.0, 1.0).unwrap();
        assert!((w.eval(PI / 2.0) - 1.0).abs() < 1e-15);
        assert!(w.eval(0.0).abs() < 1e-15);
        let w = LambdaWrap::new(2.0, 6.0).unwrap();
        assert!((w.eval(-PI / 2.0) - 2.0).abs() < 1e-15);
        assert!(LambdaWrap::new(1.0, 1.0).is_err());
    }

    #[test]
    fn lambda_covers_range_from_any_start() {
        let w = LambdaWrap::new(-2.0, 2.0).unwrap();
        let starts: Vec<f64> = (0..50).map(|i| -20.0 + 0.83 * i as f64).collect();
        let thetas: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
        assert!(w.check_coverage(&starts, &thetas, 2000));
        for th in [-2.0, -0.3, 1.7, 2.0] {
            assert!((w.eval(w.preimage(th).unwrap()) - th).abs() < 1e-12);
        }
    }

    #[test]
    fn proportional_term() {
        let phi = FeedbackPhi::linear(1.0).unwrap();
        assert_eq!(theta_p(0.0, 3.7, &phi), 0.0);
        assert_eq!(theta_p(2.0, 1.0, &phi), 4.0);
        assert_eq!(theta_p(-1.0, 0.5, &phi), 0.0);
    }

    #[test]
    fn integral_drift() {
        let f = FilterConfig::default();
        assert_eq!(theta_i_rhs(0, 1.0, 2.0, 3.0, 4.0, &f), 0.0);
        // psi = 1, phi = 1, xi2 = 0.5, b1 = 1 (alpha = 0, c1 = 1)
        assert_eq!(theta_i_rhs(1, 1.0, 1.0, 0.0, 0.5, &f), -0.5);
        assert_eq!(theta_i_rhs(1, 0.0, 0.0, 0.7, 0.5, &f), 0.0);
    }

    #[test]
    fn theta_hat_values() {
        let phi = FeedbackPhi::linear(1.0).unwrap();
        let c = cfg(1.0);
        let st = AdaptState::initial(&c, 0.0, 0.0, &phi);
        let (th0, th) = theta_hat(&c, &st, 0.0, 0.0, &phi);
        assert_eq!(th0, 0.0);
        assert_eq!(th, c.lambda.eval(0.0));

        // gamma = 2, theta_P = 4, theta_I = -0.5, C = 1  =>  theta0 = 9
        let c = cfg(2.0);
        let mut st = AdaptState::initial(&c, 2.0, 1.0, &phi);
        st.phase = Phase::Active;
        st.theta_i = -0.5;
        st.c_theta = 1.0;
        let (th0, th) = theta_hat(&c, &st, 2.0, 1.0, &phi);
        assert_eq!(th0, 9.0);
        assert!((-2.0..=2.0).contains(&th));
    }

    #[test]
    fn leave_with_equal_theta_p_keeps_offset() {
        let phi = FeedbackPhi::linear(1.0).unwrap();
        let c = cfg(1.0);
        let mut st = AdaptState::initial(&c, 0.0, 0.0, &phi);
        st.phase = Phase::Active;
        st.c_theta = 0.3;
        st.switch(SwitchKind::Enter, 1.0, 0.8, 0.1, 1.0).unwrap();
        st.switch(SwitchKind::Leave, 2.0, 0.8, 0.1, 1.0).unwrap();
        assert!((st.c_theta - 0.3).abs() < 1e-15);
    }

    #[test]
    fn repeated_event_kind_rejected() {
        let phi = FeedbackPhi::linear(1.0).unwrap();
        let c = cfg(1.0);
        let mut st = AdaptState::initial(&c, 0.0, 0.0, &phi);
        st.phase = Phase::Active;
        st.switch(SwitchKind::Enter, 1.0, 0.0, 0.0, 1.0).unwrap();
        let err = st.switch(SwitchKind::Enter, 1.5, 0.0, 0.0, 1.0).unwrap_err();
        assert_eq!(err, Error::EventOrderViolation(SwitchKind::Enter));
        assert_eq!(st.switch_log.len(), 1);
    }

    #[test]
    fn dormant_interval_freezes_theta0() {
        let phi = FeedbackPhi::linear(1.0).unwrap();
        let c = cfg(1.7);
        let mut st = AdaptState::initial(&c, 0.4, 0.2, &phi);
        st.phase = Phase::Active;
        st.theta_i = 0.25;
        st.c_theta = -0.6;
        let (before, _) = theta_hat(&c, &st, 0.4, 0.2, &phi);
        let p = theta_p(0.4, 0.2, &phi);
        st.switch(SwitchKind::Enter, 3.0, p, st.theta_i, c.gamma).unwrap();
        for (psi, alpha) in [(0.4, 0.2), (0.1, -0.3), (-0.7, 0.05), (1.3, 2.0)] {
            let (th0, _) = theta_hat(&c, &st, psi, alpha, &phi);
            assert!((th0 - before).abs() < 1e-12);
        }
        // continuity at the next leave
        let p_leave = theta_p(-0.7, 0.05, &phi);
        let (pre, _) = theta_hat(&c, &st, -0.7, 0.05, &phi);
        st.switch(SwitchKind::Leave, 4.0, p_leave, st.theta_i, c.gamma).unwrap();
        let (post, _) = theta_hat(&c, &st, -0.7, 0.05, &phi);
        assert!((post - pre).abs() < 1e-12);
    }

    #[test]
    fn reflection_keeps_theta0_continuous() {
        let phi = FeedbackPhi::linear(1.0).unwrap();
        let c = cfg(0.8);
        let mut st = AdaptState::initial(&c, 0.5, 0.1, &phi);
        st.phase = Phase::Active;
        st.theta_i = 2.0;
        let pre = theta_hat(&c, &st, 0.5, 0.1, &phi).0;
        st.reflect(c.gamma, theta_p(0.5, 0.1, &phi));
        let post = theta_hat(&c, &st, 0.5, 0.1, &phi).0;
        assert!((pre - post).abs() < 1e-12);
        assert_eq!(st.gamma_sign, -1.0);
    }

    #[test]
    fn delta_rule() {
        assert_eq!(delta0_for_epsilon(1.0, 0.1), 0.025);
        assert!(delta0_for_epsilon(2.0, 0.3) < 2.0 * 0.3 / 3.0);
    }
}
