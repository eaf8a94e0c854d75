//! Browser bindings: closed-loop runs, the derivative filter, and the
//! lifting curve, each returned as flat arrays ready for plotting.

use finform::filter::{filter_rhs, FilterConfig, FilterState};
use finform::plant::FeedbackPhi;
use finform::scenarios::{lookup, NAMES};
use finform::sim::simulate;
use wasm_bindgen::prelude::*;

/// Series are thinned to at most this many points.
const MAX_POINTS: usize = 1500;

fn thin_indices(n: usize) -> impl Iterator<Item = usize> {
    let stride = n.div_ceil(MAX_POINTS).max(1);
    (0..n)
        .step_by(stride)
        .chain((n > 0 && !(n - 1).is_multiple_of(stride)).then_some(n - 1))
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    NAMES.join(",")
}

#[wasm_bindgen]
pub struct Run {
    t: Vec<f64>,
    psi: Vec<f64>,
    theta0: Vec<f64>,
    theta_hat: Vec<f64>,
    param_dim: usize,
    goal_radius: f64,
    summary: String,
}

#[wasm_bindgen]
impl Run {
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    pub fn psi(&self) -> Vec<f64> {
        self.psi.clone()
    }
    pub fn theta0(&self) -> Vec<f64> {
        self.theta0.clone()
    }
    /// Row-major, `param_dim` values per sample.
    pub fn theta_hat(&self) -> Vec<f64> {
        self.theta_hat.clone()
    }
    pub fn param_dim(&self) -> usize {
        self.param_dim
    }
    pub fn goal_radius(&self) -> f64 {
        self.goal_radius
    }
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Runs a built-in scenario with gain `k` (`delta0` follows as `k eps / 4`), rate `gamma`
/// and a coarser step to stay interactive.
#[wasm_bindgen]
pub fn run_scenario(name: &str, k: f64, gamma: f64, t_end: f64) -> Result<Run, JsError> {
    let mut sc = lookup(name)?;
    let cl = &mut sc.closed_loop;
    cl.phi = FeedbackPhi::linear(k)?;
    cl.adapt.gamma = gamma;
    cl.adapt.delta0 = finform::adapt::delta0_for_epsilon(k, sc.expected.epsilon);
    cl.sim.goal_radius = Some(finform::analysis::goal_radius(
        sc.expected.epsilon,
        k,
        cl.adapt.disturbance_bound,
    ));
    cl.sim.t_end = t_end;
    cl.sim.dt = 2e-3;
    cl.sim.record_stride = 5;
    cl.validate()?;
    let out = simulate(cl).map_err(|a| JsError::new(&a.error.to_string()))?;
    let rows = &out.trace.rows;
    let d = &out.diagnostics;
    let idx: Vec<usize> = thin_indices(rows.len()).collect();
    let summary = format!(
        "{}: goal radius {:.4}, residence from {}, {} events, sup|u| {:.3}, final theta_hat {:?}",
        sc.name,
        d.goal_radius,
        d.t_enter.map_or("never".into(), |t| format!("t = {t:.3}")),
        d.event_count,
        d.sup_u,
        rows.last()
            .map(|r| r.theta_hat.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>())
            .unwrap_or_default(),
    );
    Ok(Run {
        t: idx.iter().map(|&i| rows[i].t).collect(),
        psi: idx.iter().map(|&i| rows[i].psi).collect(),
        theta0: idx.iter().map(|&i| rows[i].theta0).collect(),
        theta_hat: idx.iter().flat_map(|&i| rows[i].theta_hat.iter().copied()).collect(),
        param_dim: out.trace.param_dim,
        goal_radius: d.goal_radius,
        summary,
    })
}

/// Filter response to `psi = sin(w t)`: rows of `(t, psi', y)` flattened, over `[0, t_end]`.
#[wasm_bindgen]
pub fn filter_response(a1: f64, a2: f64, w: f64, t_end: f64) -> Result<Vec<f64>, JsError> {
    let cfg = FilterConfig::tuned(a1, a2, 1.0)?;
    if !cfg.is_hurwitz() {
        return Err(JsError::new("filter is not Hurwitz"));
    }
    let dt = (1e-3f64).min(0.05 / w.abs().max(1.0));
    let n = (t_end / dt).ceil() as usize;
    let psi = |t: f64| (w * t).sin();
    let mut s = FilterState::default();
    let mut out = Vec::with_capacity(3 * MAX_POINTS + 3);
    let keep: std::collections::BTreeSet<usize> = thin_indices(n + 1).collect();
    for i in 0..=n {
        let t = i as f64 * dt;
        if keep.contains(&i) {
            out.extend([t, w * (w * t).cos(), cfg.output(&s)]);
        }
        let f = |t: f64, s: FilterState| filter_rhs(&cfg, &s, psi(t));
        let add = |s: FilterState, k: (f64, f64), h: f64| FilterState {
            xi1: s.xi1 + h * k.0,
            xi2: s.xi2 + h * k.1,
        };
        let k1 = f(t, s);
        let k2 = f(t + dt / 2.0, add(s, k1, dt / 2.0));
        let k3 = f(t + dt / 2.0, add(s, k2, dt / 2.0));
        let k4 = f(t + dt, add(s, k3, dt));
        s.xi1 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        s.xi2 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    Ok(out)
}

/// Error bound `|a2 w^2 / a1|` for the sine response.
#[wasm_bindgen]
pub fn filter_bound(a1: f64, a2: f64, w: f64) -> Result<f64, JsError> {
    let cfg = FilterConfig::tuned(a1, a2, 1.0)?;
    Ok(finform::filter::filter_error_bound(&cfg, w * w))
}

/// Lifting curve of a two-parameter scenario sampled along `theta0 in [0, s_end]`
/// through the periodic wrap: flattened `(theta0, lambda, eta_0, eta_1)` rows.
#[wasm_bindgen]
pub fn curve_samples(name: &str, s_end: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let sc = lookup(name)?;
    let cl = &sc.closed_loop;
    let curve = cl
        .curve
        .as_ref()
        .ok_or_else(|| JsError::new("scenario has a scalar parameter"))?;
    let n = n.clamp(2, 20_000);
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let s = s_end * i as f64 / (n - 1) as f64;
        let lambda = cl.adapt.lambda.eval(s);
        let p = curve.eval(lambda);
        out.extend([s, lambda, p[0], p[1]]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_endpoints() {
        let idx: Vec<usize> = thin_indices(10_001).collect();
        assert!(idx.len() <= MAX_POINTS + 1);
        assert_eq!(idx.first(), Some(&0));
        assert_eq!(idx.last(), Some(&10_000));
        assert_eq!(thin_indices(5).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn short_run_records_series() {
        let run = run_scenario("gauss1d", 1.0, 1.0, 20.0).ok().unwrap();
        assert_eq!(run.t().len(), run.psi().len());
        assert_eq!(run.theta_hat().len(), run.t().len() * run.param_dim());
        assert!(run.psi().last().unwrap().abs() <= run.goal_radius());
    }

    #[test]
    fn filter_tracks_derivative() {
        let rows = filter_response(-1.0, -1.0, 2.0, 40.0).ok().unwrap();
        let bound = filter_bound(-1.0, -1.0, 2.0).ok().unwrap();
        assert_eq!(bound, 4.0);
        let worst = rows
            .chunks(3)
            .filter(|r| r[0] >= 20.0)
            .map(|r| (r[1] - r[2]).abs())
            .fold(0.0, f64::max);
        assert!(worst <= bound);
    }

    #[test]
    fn curve_stays_on_parameter_box() {
        let rows = curve_samples("lissajous2d", 50.0, 500).ok().unwrap();
        assert_eq!(rows.len(), 2000);
        let domain = lookup("lissajous2d").unwrap().closed_loop.plant.theta_domain;
        for r in rows.chunks(4) {
            assert!(domain.contains(&r[2..4]), "{r:?}");
        }
    }
}
