//! Second-order filter estimating `psi'` from `psi`.
//!
//! ```text
//! xi1' = xi2 + b1 psi
//! xi2' = a1 xi1 + a2 xi2 + b2 psi
//! y    = c1 xi1
//! ```
//!
//! With `c1 b1 = -a1` and `b2 = a2 b1` the output tracks `psi'` with
//! asymptotic error at most `|a2 beta1 / a1|` whenever `|psi''| <= beta1`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
}

impl FilterConfig {
    /// Builds the tuned filter from `(a1, a2, b1)`; `b2` and `c1` follow from
    /// the tuning identities.
    pub fn tuned(a1: f64, a2: f64, b1: f64) -> Result<Self> {
        Self::from_parts(a1, a2, b1, a2 * b1, -a1 / b1)
    }

    /// Critically damped filter with natural frequency `omega`: double pole at `-omega`.
    pub fn critically_damped(omega: f64) -> Result<Self> {
        Self::tuned(-omega * omega, -2.0 * omega, 1.0)
    }

    pub fn from_parts(a1: f64, a2: f64, b1: f64, b2: f64, c1: f64) -> Result<Self> {
        if !(a1 < 0.0 && a2 < 0.0) {
            return Err(Error::invalid(format!("filter needs a1, a2 < 0 (got {a1}, {a2})")));
        }
        if b1 == 0.0 || !b1.is_finite() {
            return Err(Error::invalid("filter needs b1 != 0"));
        }
        let cfg = FilterConfig { a1, a2, b1, b2, c1 };
        // exact identities, up to the rounding of the division that produced c1
        if (c1 * b1 + a1).abs() > 1e-12 * a1.abs() || b2 != a2 * b1 {
            return Err(Error::invalid(format!(
                "filter violates c1 b1 = -a1, b2 = a2 b1: {cfg:?}"
            )));
        }
        Ok(cfg)
    }

    /// Eigenvalues of the companion matrix `[[0, 1], [a1, a2]]` as `(re, im)` pairs.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        // characteristic polynomial s^2 - a2 s - a1
        let disc = self.a2 * self.a2 + 4.0 * self.a1;
        if disc >= 0.0 {
            let r = disc.sqrt();
            [(0.5 * (self.a2 + r), 0.0), (0.5 * (self.a2 - r), 0.0)]
        } else {
            let i = (-disc).sqrt();
            [(0.5 * self.a2, 0.5 * i), (0.5 * self.a2, -0.5 * i)]
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.eigenvalues().iter().all(|(re, _)| *re < 0.0)
    }

    /// `1 / min |Re lambda|`, the slowest decay time of the filter transient.
    pub fn time_constant(&self) -> f64 {
        let slowest = self
            .eigenvalues()
            .iter()
            .map(|(re, _)| re.abs())
            .fold(f64::INFINITY, f64::min);
        1.0 / slowest
    }

    pub fn output(&self, s: &FilterState) -> f64 {
        self.c1 * s.xi1
    }

    /// Equilibrium for a constant input `psi`; the output there is zero.
    pub fn rest_state(&self, psi: f64) -> FilterState {
        let xi2 = -self.b1 * psi;
        FilterState {
            xi1: -(self.a2 * xi2 + self.b2 * psi) / self.a1,
            xi2,
        }
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            a1: -1.0,
            a2: -1.0,
            b1: 1.0,
            b2: -1.0,
            c1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterState {
    pub xi1: f64,
    pub xi2: f64,
}

impl FilterState {
    pub fn is_finite(&self) -> bool {
        self.xi1.is_finite() && self.xi2.is_finite()
    }
}

/// Filter right-hand side driven by `psi`.
pub fn filter_rhs(cfg: &FilterConfig, s: &FilterState, psi_val: f64) -> (f64, f64) {
    (
        s.xi2 + cfg.b1 * psi_val,
        cfg.a1 * s.xi1 + cfg.a2 * s.xi2 + cfg.b2 * psi_val,
    )
}

/// Equivalent form driven by `psi'` through the input vector `(0, b1)`.
pub fn filter_rhs_derivative_input(cfg: &FilterConfig, s: &FilterState, psi_dot: f64) -> (f64, f64) {
    (s.xi2, cfg.a1 * s.xi1 + cfg.a2 * s.xi2 + cfg.b1 * psi_dot)
}

/// Asymptotic bound `|a2 beta1 / a1|` on `|y - psi'|`; the exponentially
/// decaying transient is not included.
pub fn filter_error_bound(cfg: &FilterConfig, beta1: f64) -> f64 {
    (cfg.a2 * beta1 / cfg.a1).abs()
}

/// Deterministic tuning: `b1 = 1`, `a2 = -1`, `a1 = -4 beta1 / delta0`, so the
/// asymptotic bound equals `delta0 / 4`. A zero curvature bound gets the
/// default filter.
pub fn tune_filter(delta0: f64, beta1: f64) -> Result<FilterConfig> {
    if !(delta0 > 0.0) {
        return Err(Error::invalid("delta0 must be positive"));
    }
    if !(beta1 >= 0.0) {
        return Err(Error::invalid("beta1 must be non-negative"));
    }
    if beta1 == 0.0 {
        return Ok(FilterConfig::default());
    }
    FilterConfig::tuned(-4.0 * beta1 / delta0, -1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk4_filter(cfg: &FilterConfig, psi: impl Fn(f64) -> f64, t_end: f64, dt: f64) -> Vec<(f64, f64)> {
        let mut s = FilterState::default();
        let mut out = Vec::new();
        let steps = (t_end / dt).round() as usize;
        for i in 0..steps {
            let t = i as f64 * dt;
            let f = |t: f64, s: FilterState| filter_rhs(cfg, &s, psi(t));
            let k1 = f(t, s);
            let s2 = FilterState {
                xi1: s.xi1 + 0.5 * dt * k1.0,
                xi2: s.xi2 + 0.5 * dt * k1.1,
            };
            let k2 = f(t + 0.5 * dt, s2);
            let s3 = FilterState {
                xi1: s.xi1 + 0.5 * dt * k2.0,
                xi2: s.xi2 + 0.5 * dt * k2.1,
            };
            let k3 = f(t + 0.5 * dt, s3);
            let s4 = FilterState {
                xi1: s.xi1 + dt * k3.0,
                xi2: s.xi2 + dt * k3.1,
            };
            let k4 = f(t + dt, s4);
            s.xi1 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            s.xi2 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            out.push(((i + 1) as f64 * dt, cfg.output(&s)));
        }
        out
    }

    #[test]
    fn constant_input_equilibrium() {
        let cfg = FilterConfig::default();
        let c = 2.5;
        // A xi + b c = 0  =>  xi1 = 0, xi2 = -c
        let eq = FilterState { xi1: 0.0, xi2: -c };
        let (d1, d2) = filter_rhs(&cfg, &eq, c);
        assert_eq!((d1, d2), (0.0, 0.0));
        assert_eq!(cfg.output(&eq), 0.0);
    }

    #[test]
    fn ramp_is_differentiated_exactly() {
        let cfg = FilterConfig::default();
        // the start-up transient decays like exp(-t / 2) for this config
        let trace = rk4_filter(&cfg, |t| t, 40.0, 1e-3);
        let sup = trace
            .iter()
            .filter(|(t, _)| *t >= 30.0)
            .map(|(_, y)| (y - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-6, "sup = {sup}");
        let at20 = trace.iter().find(|(t, _)| *t >= 20.0).unwrap().1;
        assert!((at20 - 1.0).abs() > 1e-6);
    }

    #[test]
    fn sine_error_within_bound() {
        let cfg = FilterConfig::default();
        let omega = 2.0;
        let bound = filter_error_bound(&cfg, omega * omega);
        assert_eq!(bound, 4.0);
        let trace = rk4_filter(&cfg, |t| (omega * t).sin(), 40.0, 1e-3);
        let sup = trace
            .iter()
            .filter(|(t, _)| *t >= 20.0)
            .map(|(t, y)| (y - omega * (omega * t).cos()).abs())
            .fold(0.0, f64::max);
        assert!(sup <= bound + 1e-6, "sup = {sup}");
    }

    #[test]
    fn error_bound_values() {
        assert_eq!(filter_error_bound(&FilterConfig::default(), 0.0), 0.0);
        let cfg = FilterConfig::tuned(-10.0, -1.0, 1.0).unwrap();
        assert_eq!(filter_error_bound(&cfg, 5.0), 0.5);
    }

    #[test]
    fn tuning_rule() {
        let cfg = tune_filter(1.0, 10.0).unwrap();
        assert_eq!((cfg.a1, cfg.a2, cfg.b1, cfg.b2, cfg.c1), (-40.0, -1.0, 1.0, -1.0, 40.0));
        assert!(filter_error_bound(&cfg, 10.0) <= 0.25);
        let cfg = tune_filter(0.4, 1.0).unwrap();
        assert_eq!(cfg.a1, -10.0);
        assert!((filter_error_bound(&cfg, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(tune_filter(0.3, 0.0).unwrap(), FilterConfig::default());
    }

    #[test]
    fn companion_matrix_is_hurwitz() {
        for cfg in [
            FilterConfig::default(),
            tune_filter(0.025, 3.0).unwrap(),
            FilterConfig::critically_damped(20.0).unwrap(),
        ] {
            assert!(cfg.is_hurwitz());
            assert_eq!(cfg.c1 * cfg.b1, -cfg.a1);
            assert_eq!(cfg.b2, cfg.a2 * cfg.b1);
        }
    }

    #[test]
    fn rejects_untuned_parts() {
        assert!(FilterConfig::from_parts(-1.0, -1.0, 1.0, 0.0, 1.0).is_err());
        assert!(FilterConfig::from_parts(1.0, -1.0, 1.0, -1.0, -1.0).is_err());
        assert!(FilterConfig::tuned(-1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn critically_damped_time_constant() {
        let cfg = FilterConfig::critically_damped(20.0).unwrap();
        assert!((cfg.time_constant() - 0.05).abs() < 1e-12);
        assert!((FilterConfig::default().time_constant() - 2.0).abs() < 1e-12);
    }
}
