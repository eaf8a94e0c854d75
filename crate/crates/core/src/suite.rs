//! Property suite run by `finform verify`.

use crate::analysis::{
    active_rate_floor, differential_form_oracle, dwell_in_radius, events_alternate, monotonicity, parameter_convergence,
};
use crate::error::Result;
use crate::excitation::{check_nonlinear_pe, PEQuery, PEReport};
use crate::scenarios::{self_check, Check, Scenario};
use crate::sim::{simulate, SimOutput, MONOTONE_TOL};

/// Largest tolerated gap between the finite-form estimate and the integrated rate law.
pub const ORACLE_TOL: f64 = 1e-4;
/// Largest tolerated jump of `theta0` across a switching event.
pub const EVENT_JUMP_TOL: f64 = 1e-8;
/// Measured ACTIVE growth rate must reach this fraction of `gamma delta0^2 / 2`.
pub const RATE_FRACTION: f64 = 0.9;

pub fn pe_report(sc: &Scenario, out: &SimOutput, m: f64, t1: f64, epsilon: f64) -> Result<PEReport> {
    let cl = &sc.closed_loop;
    let q = PEQuery {
        m,
        t1,
        epsilon,
        delta: sc.expected.class_delta,
        theta_true: &cl.plant.theta_true,
        theta_grid: &sc.expected.theta_grid,
        x_grid: &sc.expected.x_grid,
        trace: &out.trace,
    };
    check_nonlinear_pe(&cl.plant, &q)
}

/// Hypothesis checks followed by the run-time properties of one simulation.
pub fn verify_scenario(sc: &Scenario) -> Vec<Check> {
    let mut checks = self_check(sc);
    let cl = &sc.closed_loop;
    let e = &sc.expected;
    let out = match simulate(cl) {
        Ok(o) => o,
        Err(a) => {
            checks.push(Check::new("run completes", false, a.error.to_string()));
            return checks;
        }
    };
    let d = &out.diagnostics;
    checks.push(Check::new("run completes", true, format!("{} steps", d.steps)));

    let dwell = dwell_in_radius(&out.trace, e.dwell_radius);
    checks.push(Check::new(
        "goal-set dwell",
        dwell.t_enter.is_some_and(|t| t <= e.t_enter_ceiling),
        format!(
            "radius {}, t_enter {:?} (ceiling {}), first entry {:?}, exits after first entry {}",
            e.dwell_radius, dwell.t_enter, e.t_enter_ceiling, dwell.first_entry, dwell.exits
        ),
    ));
    checks.push(Check::new(
        "bounded trajectories",
        d.sup_x <= e.x_ceiling && d.sup_abs_theta0 <= e.theta0_ceiling,
        format!("sup |x| = {:.4}, sup |theta0| = {:.4}", d.sup_x, d.sup_abs_theta0),
    ));

    let mono = monotonicity(&out.trace, d.transient_end, MONOTONE_TOL);
    let floor = RATE_FRACTION * active_rate_floor(&cl.adapt);
    checks.push(Check::new(
        "theta0 non-decreasing",
        mono.violations == 0,
        format!(
            "{} violations after t = {}, max drop {:.3e}",
            mono.violations, d.transient_end, mono.max_drop
        ),
    ));
    checks.push(Check::new(
        "active growth rate",
        mono.active_steps == 0 || mono.min_active_rate >= floor,
        format!(
            "min rate {:.4e} over {} steps, floor {:.4e}",
            mono.min_active_rate, mono.active_steps, floor
        ),
    ));

    let oracle = differential_form_oracle(&out.trace, &cl.adapt, &cl.phi);
    checks.push(Check::new(
        "finite form matches rate law",
        oracle.sup_diff <= ORACLE_TOL,
        format!("sup diff {:.3e}", oracle.sup_diff),
    ));

    checks.push(Check::new(
        "events alternate",
        events_alternate(&out.trace.events),
        format!("{} events", out.trace.events.len()),
    ));
    checks.push(Check::new(
        "theta0 continuous at events",
        d.max_event_jump < EVENT_JUMP_TOL,
        format!("max jump {:.3e}", d.max_event_jump),
    ));

    if let Some(pe) = &e.pe {
        match pe_report(sc, &out, pe.m, pe.t1, pe.epsilon) {
            Ok(rep) => checks.push(Check::new(
                "persistent excitation",
                rep.satisfied,
                format!(
                    "min window max {:.4} vs M = {} over {} candidates",
                    rep.min_window_max, pe.m, rep.candidates
                ),
            )),
            Err(err) => checks.push(Check::new("persistent excitation", false, err.to_string())),
        }
        let conv = parameter_convergence(
            &out.trace,
            &cl.plant,
            &cl.plant.theta_true,
            pe.epsilon,
            e.class_delta,
            &e.theta_grid,
            &e.x_grid,
        );
        checks.push(Check::new(
            "parameter convergence",
            conv.converged && conv.terminal_distance < pe.epsilon,
            format!(
                "t_conv {:?}, terminal distance {:.4}",
                conv.t_conv, conv.terminal_distance
            ),
        ));
    }
    checks
}
