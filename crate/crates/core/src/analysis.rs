//! Oracles and property metrics computed from traces.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::adapt::{AdaptConfig, SwitchEvent};
use crate::error::Result;
use crate::excitation::{class_members, distance_to_set};
use crate::plant::{FeedbackPhi, ScalarModel};
use crate::sim::{simulate, ClosedLoop, SimOutput};
use crate::trace::Trace;

/// Slack on the goal-set radius when counting excursions.
pub const DWELL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub sup_diff: f64,
    /// `theta0` obtained by integrating the differential form, one value per row.
    pub integrated: Vec<f64>,
}

/// Integrates `theta0' = gamma S (phi(psi) + psi') (phi(psi) + alpha)` along
/// the trace with the trapezoid rule, starting from the recorded `theta0(t0)`,
/// and compares with the recorded `theta0`. Steps containing events are split
/// at the event times, the ungated integrand being interpolated linearly.
pub fn differential_form_oracle(trace: &Trace, cfg: &AdaptConfig, phi: &FeedbackPhi) -> OracleReport {
    let rows = &trace.rows;
    if rows.is_empty() {
        return OracleReport {
            sup_diff: 0.0,
            integrated: Vec::new(),
        };
    }
    let h: Vec<f64> = rows
        .iter()
        .map(|r| {
            let p = phi.eval(r.psi);
            cfg.gamma * (p + r.psi_dot_true) * (p + r.alpha)
        })
        .collect();
    let mut gate = initial_gate(trace);
    let mut events = trace.events.iter().peekable();
    let mut acc = rows[0].theta0;
    let mut integrated = Vec::with_capacity(rows.len());
    integrated.push(acc);
    let mut sup: f64 = 0.0;
    for i in 1..rows.len() {
        let (ta, tb) = (rows[i - 1].t, rows[i].t);
        let interp = |t: f64| h[i - 1] + (h[i] - h[i - 1]) * (t - ta) / (tb - ta);
        let mut cursor = (ta, h[i - 1]);
        while let Some(e) = events.next_if(|e| e.t < tb) {
            let te = e.t.max(ta);
            let he = interp(te);
            if gate {
                acc += 0.5 * (cursor.1 + he) * (te - cursor.0);
            }
            cursor = (te, he);
            gate = !gate;
        }
        if gate {
            acc += 0.5 * (cursor.1 + h[i]) * (tb - cursor.0);
        }
        integrated.push(acc);
        sup = sup.max((acc - rows[i].theta0).abs());
    }
    OracleReport {
        sup_diff: sup,
        integrated,
    }
}

fn initial_gate(trace: &Trace) -> bool {
    // the first row is recorded before any event can fire
    trace.rows[0].s_delta == 1
}

/// Mean-value factor `F = int_0^1 grad_theta f(x, l theta + (1 - l) theta_hat) dl`
/// by Gauss-Legendre quadrature, so that `f(x, theta) - f(x, theta_hat) = F . (theta - theta_hat)`.
pub fn hadamard_factor(
    model: &dyn ScalarModel,
    x: &[f64],
    theta: &[f64],
    theta_hat: &[f64],
    quad_points: usize,
) -> Vec<f64> {
    let rule = GaussLegendre::new(NonZeroUsize::new(quad_points.max(1)).unwrap());
    let mut fac = vec![0.0; theta.len()];
    for &(node, weight) in rule.as_node_weight_pairs() {
        // nodes live on [-1, 1]
        let l = 0.5 * (node + 1.0);
        let p: Vec<f64> = theta
            .iter()
            .zip(theta_hat)
            .map(|(a, b)| l * a + (1.0 - l) * b)
            .collect();
        for (f, g) in fac.iter_mut().zip(model.grad_theta(x, &p)) {
            *f += 0.5 * weight * g;
        }
    }
    fac
}

/// `|f(x, theta) - f(x, theta_hat) - F . (theta - theta_hat)|`.
pub fn hadamard_residual(
    model: &dyn ScalarModel,
    x: &[f64],
    theta: &[f64],
    theta_hat: &[f64],
    quad_points: usize,
) -> f64 {
    let f = hadamard_factor(model, x, theta, theta_hat, quad_points);
    let lin: f64 = f
        .iter()
        .zip(theta.iter().zip(theta_hat))
        .map(|(fj, (a, b))| fj * (a - b))
        .sum();
    (model.eval(x, theta) - model.eval(x, theta_hat) - lin).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellReport {
    pub radius: f64,
    /// First time `|psi| <= radius`.
    pub first_entry: Option<f64>,
    /// Start of the final residence: from here on `|psi| <= radius + DWELL_TOL`.
    pub t_enter: Option<f64>,
    /// No excursion above `radius + DWELL_TOL` after the first entry.
    pub stays: bool,
    pub exits: usize,
    /// Largest `|psi| - radius` after the first entry (negative when strictly inside).
    pub max_excursion_after: f64,
    pub never_entered: bool,
}

/// Goal-set radius `epsilon + Delta / k`.
pub fn goal_radius(epsilon: f64, k: f64, delta: f64) -> f64 {
    epsilon + delta / k
}

pub fn dwell_metrics(trace: &Trace, epsilon: f64, k: f64, delta: f64) -> DwellReport {
    dwell_in_radius(trace, goal_radius(epsilon, k, delta))
}

pub fn dwell_in_radius(trace: &Trace, radius: f64) -> DwellReport {
    let rows = &trace.rows;
    let first = rows.iter().position(|r| r.psi.abs() <= radius);
    let last_out = rows.iter().rposition(|r| r.psi.abs() > radius + DWELL_TOL);
    let t_enter = match last_out {
        None => rows.first().map(|r| r.t),
        Some(i) => rows.get(i + 1).map(|r| r.t),
    };
    let (mut exits, mut excursion) = (0usize, f64::NEG_INFINITY);
    if let Some(f) = first {
        let mut inside = true;
        for r in &rows[f..] {
            let a = r.psi.abs();
            excursion = excursion.max(a - radius);
            if inside && a > radius + DWELL_TOL {
                exits += 1;
                inside = false;
            } else if !inside && a <= radius {
                inside = true;
            }
        }
    }
    DwellReport {
        radius,
        first_entry: first.map(|i| rows[i].t),
        t_enter,
        stays: first.is_some() && exits == 0,
        exits,
        max_excursion_after: excursion,
        never_entered: t_enter.is_none(),
    }
}

/// Monotonicity of `theta0` after `t_from`: per-step decreases and the growth
/// rate on ACTIVE rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub violations: usize,
    pub max_drop: f64,
    /// Smallest `theta0` increment per unit time over ACTIVE steps whose
    /// endpoints are both ACTIVE and event-free.
    pub min_active_rate: f64,
    pub active_steps: usize,
}

pub fn monotonicity(trace: &Trace, t_from: f64, tol: f64) -> MonotonicityReport {
    let mut rep = MonotonicityReport {
        violations: 0,
        max_drop: 0.0,
        min_active_rate: f64::INFINITY,
        active_steps: 0,
    };
    for w in trace.rows.windows(2) {
        if w[0].t < t_from {
            continue;
        }
        let d = w[1].theta0 - w[0].theta0;
        if -d > tol {
            rep.violations += 1;
        }
        rep.max_drop = rep.max_drop.max(-d);
        if w[0].s_delta == 1 && w[1].s_delta == 1 && w[1].event_flag == 0 {
            rep.active_steps += 1;
            rep.min_active_rate = rep.min_active_rate.min(d / (w[1].t - w[0].t));
        }
    }
    rep
}

/// Lower bound `gamma delta0^2 / 2` on the growth rate of `theta0` while ACTIVE.
pub fn active_rate_floor(cfg: &AdaptConfig) -> f64 {
    cfg.gamma * cfg.delta0 * cfg.delta0 / 2.0
}

/// Lengths `t_enter - t_leave` of the ACTIVE intervals in the switching log.
pub fn active_interval_lengths(events: &[SwitchEvent], initial_active: Option<f64>) -> Vec<f64> {
    use crate::adapt::SwitchKind;
    let mut out = Vec::new();
    let mut open = initial_active;
    for e in events {
        match e.kind {
            SwitchKind::Leave => open = Some(e.t),
            SwitchKind::Enter => {
                if let Some(t0) = open.take() {
                    out.push(e.t - t0);
                }
            }
        }
    }
    out
}

/// Whether the switching log strictly alternates and is strictly time-ordered.
pub fn events_alternate(events: &[SwitchEvent]) -> bool {
    events.windows(2).all(|w| w[0].kind != w[1].kind && w[1].t > w[0].t)
}

/// Mean of the last decile against the mean of the first decile.
pub fn decile_means(v: &[f64]) -> Option<(f64, f64)> {
    if v.len() < 10 {
        return None;
    }
    let k = v.len() / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&v[..k]), mean(&v[v.len() - k..])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub reached: bool,
    pub t_enter: Option<f64>,
    pub sup_u: f64,
    pub sup_f: f64,
    pub sup_psi: f64,
    /// `sup|u| <= (sup|f| + sup|L_f psi(theta_hat)|) / min|L_g psi| + k sup|psi| + Delta`, up to 1 %.
    pub bound_ok: bool,
    pub events: usize,
}

/// Horizon of a gain sweep run, in units of the closed-loop time constant `1 / k`.
pub const SWEEP_SETTLE: f64 = 20.0;

/// A run has reached the goal set when its final residence there
/// starts within this fraction of the horizon.
pub const REACH_FRACTION: f64 = 0.9;

/// Runs one closed loop per gain `k` with `phi = k psi` and `delta0 = k epsilon / 4`.
/// The horizon is stretched to `SWEEP_SETTLE / k` when that is longer.
pub fn non_domination_sweep(base: &ClosedLoop, epsilon: f64, k_list: &[f64]) -> Result<Vec<SweepRow>> {
    let runs: Vec<Result<ClosedLoop>> = k_list
        .iter()
        .map(|&k| {
            let mut cl = base.clone();
            cl.phi = FeedbackPhi::linear(k)?;
            cl.adapt.delta0 = crate::adapt::delta0_for_epsilon(k, epsilon);
            cl.sim.goal_radius = Some(goal_radius(epsilon, k, cl.adapt.disturbance_bound));
            cl.sim.t_end = cl.sim.t_end.max(cl.sim.t0 + SWEEP_SETTLE / k);
            Ok(cl)
        })
        .collect();
    let runs: Vec<ClosedLoop> = runs.into_iter().collect::<Result<_>>()?;
    run_sweep(&runs, k_list)
}

/// Runs prepared closed loops in parallel and tabulates them against `values`.
pub fn run_sweep(runs: &[ClosedLoop], values: &[f64]) -> Result<Vec<SweepRow>> {
    runs.par_iter()
        .zip(values.par_iter())
        .map(|(cl, &v)| {
            let out = simulate(cl).map_err(|a| a.error)?;
            Ok(sweep_row(cl, &out, v))
        })
        .collect()
}

pub fn sweep_row(cl: &ClosedLoop, out: &SimOutput, value: f64) -> SweepRow {
    let plant = &cl.plant;
    let mut sup_f: f64 = 0.0;
    let mut sup_fhat: f64 = 0.0;
    let mut min_lg = f64::INFINITY;
    let mut sup_psi: f64 = 0.0;
    for r in &out.trace.rows {
        sup_f = sup_f.max(plant.uncertainty(&r.x, &plant.theta_true).abs());
        sup_fhat = sup_fhat.max(plant.uncertainty(&r.x, &r.theta_hat).abs());
        min_lg = min_lg.min(plant.lg_psi(&r.x).abs());
        sup_psi = sup_psi.max(r.psi.abs());
    }
    let d = &out.diagnostics;
    let bound = sup_fhat / min_lg + cl.phi.k * sup_psi / min_lg + cl.disturbance.delta_bound / min_lg;
    let dwell = dwell_in_radius(&out.trace, d.goal_radius);
    SweepRow {
        value,
        reached: dwell
            .t_enter
            .is_some_and(|t| t <= cl.sim.t0 + REACH_FRACTION * (cl.sim.t_end - cl.sim.t0)),
        t_enter: dwell.t_enter,
        sup_u: d.sup_u,
        sup_f,
        sup_psi,
        bound_ok: d.sup_u <= bound * 1.01 + 1e-12,
        events: d.event_count,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// First time after which the distance stays below `epsilon`.
    pub t_conv: Option<f64>,
    pub terminal_distance: f64,
    pub class_size: usize,
}

/// Distance of the lifted estimate to `[theta_true]_Delta` over the trace.
pub fn parameter_convergence(
    trace: &Trace,
    model: &dyn ScalarModel,
    theta_true: &[f64],
    epsilon: f64,
    delta: f64,
    theta_grid: &[Vec<f64>],
    x_grid: &[Vec<f64>],
) -> ConvergenceReport {
    let members = class_members(model, theta_true, delta, theta_grid, x_grid);
    let dist: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| distance_to_set(&r.theta_hat, &members))
        .collect();
    let last_far = dist.iter().rposition(|&d| d >= epsilon);
    let t_conv = match last_far {
        None => trace.rows.first().map(|r| r.t),
        Some(i) => trace.rows.get(i + 1).map(|r| r.t),
    };
    ConvergenceReport {
        converged: t_conv.is_some(),
        t_conv,
        terminal_distance: dist.last().copied().unwrap_or(f64::NAN),
        class_size: members.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRow;

    fn row(t: f64, psi: f64) -> TraceRow {
        TraceRow {
            t,
            x: vec![psi],
            psi,
            psi_dot_true: 0.0,
            u: 0.0,
            alpha: 0.0,
            theta0: 0.0,
            theta_hat: vec![0.0],
            s_delta: 0,
            theta_i: 0.0,
            c_theta: 0.0,
            event_flag: 0,
        }
    }

    #[test]
    fn hadamard_square() {
        let f = |_: &[f64], th: &[f64]| th[0] * th[0];
        let fac = hadamard_factor(&f, &[0.0], &[1.3], &[-0.4], 64);
        assert!((fac[0] - 0.9).abs() < 1e-8);
        assert!(hadamard_residual(&f, &[0.0], &[1.3], &[-0.4], 64) < 1e-8);
    }

    #[test]
    fn hadamard_degenerate_and_linear() {
        let g = |x: &[f64], th: &[f64]| (-(x[0] - th[0]).powi(2)).exp();
        let fac = hadamard_factor(&g, &[0.5], &[0.2], &[0.2], 8);
        let grad = g.grad_theta(&[0.5], &[0.2]);
        assert!((fac[0] - grad[0]).abs() < 1e-9);
        let lin = |x: &[f64], th: &[f64]| th[0] * x[0] + th[1] * x[1];
        for (a, b) in [([1.0, 2.0], [0.0, -1.0]), ([3.0, -1.0], [0.5, 0.5])] {
            let fac = hadamard_factor(&lin, &[0.7, -2.0], &a, &b, 16);
            assert!((fac[0] - 0.7).abs() < 1e-8 && (fac[1] + 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dwell_of_the_zero_trace() {
        let mut tr = Trace::new(1, 1);
        tr.rows = (0..10).map(|i| row(i as f64, 0.0)).collect();
        let d = dwell_metrics(&tr, 0.1, 1.0, 0.0);
        assert_eq!(d.t_enter, Some(0.0));
        assert!(d.stays && !d.never_entered);
    }

    #[test]
    fn dwell_counts_exits() {
        let mut tr = Trace::new(1, 1);
        let psis = [1.0, 0.05, 0.2, 0.05, 0.0, 0.01];
        tr.rows = psis.iter().enumerate().map(|(i, &p)| row(i as f64, p)).collect();
        let d = dwell_in_radius(&tr, 0.1);
        assert_eq!(d.first_entry, Some(1.0));
        assert_eq!(d.t_enter, Some(3.0));
        assert_eq!(d.exits, 1);
        assert!(!d.stays);
        tr.rows.push(row(6.0, 0.5));
        let d = dwell_in_radius(&tr, 0.1);
        assert!(d.never_entered);
    }

    #[test]
    fn interval_lengths_and_deciles() {
        use crate::adapt::SwitchKind::*;
        let ev = |t, kind| SwitchEvent { t, kind };
        let events = vec![
            ev(1.0, Enter),
            ev(2.0, Leave),
            ev(2.5, Enter),
            ev(4.0, Leave),
            ev(4.1, Enter),
        ];
        assert!(events_alternate(&events));
        let lens = active_interval_lengths(&events, Some(0.0));
        assert_eq!(lens.len(), 3);
        for (a, b) in lens.iter().zip([1.0, 0.5, 0.1]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!events_alternate(&[ev(1.0, Enter), ev(2.0, Enter)]));
        let v: Vec<f64> = (0..20).map(|i| 20.0 - i as f64).collect();
        let (first, last) = decile_means(&v).unwrap();
        assert!(last < first);
    }
}
