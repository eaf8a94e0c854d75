//! Built-in closed-loop problems with known ground truth.

use crate::adapt::{delta0_for_epsilon, AdaptConfig, LambdaWrap};
use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::multidim::{build_grid_curve, verify_assumption, EtaCurve};
use crate::plant::{
    check_psi_radial_unboundedness, linspace, tensor_grid, BoxRegion, Disturbance, FeedbackPhi, Plant, ScalarModel,
};
use crate::sim::{ClosedLoop, FilterInit, SimConfig};

/// Scenario filters are critically damped with this natural frequency.
pub const SCENARIO_FILTER_OMEGA: f64 = 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PeExpectation {
    pub m: f64,
    pub t1: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub epsilon: f64,
    /// `epsilon + Delta / k`.
    pub dwell_radius: f64,
    pub t_enter_ceiling: f64,
    pub x_ceiling: f64,
    pub theta0_ceiling: f64,
    pub pe: Option<PeExpectation>,
    /// Class tolerance for `[theta_true]_Delta` in convergence and PE checks.
    pub class_delta: f64,
    /// Parameter samples for class and PE computations.
    pub theta_grid: Vec<Vec<f64>>,
    /// State samples covering the reachable box.
    pub x_grid: Vec<Vec<f64>>,
    /// Level at which the lifting curve satisfies the approximation assumption.
    pub assumption_delta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub summary: String,
    pub closed_loop: ClosedLoop,
    pub expected: Expected,
}

pub const NAMES: [&str; 5] = ["gauss1d", "gauss1d_noise", "gauss1d_pe", "sincos2d", "lissajous2d"];

pub fn registry() -> Vec<Scenario> {
    NAMES.iter().map(|n| lookup(n).expect("built-in scenario")).collect()
}

pub fn lookup(name: &str) -> Result<Scenario> {
    match name {
        "gauss1d" => gauss1d(),
        "gauss1d_noise" => gauss1d_noise(),
        "gauss1d_pe" => gauss1d_pe(),
        "sincos2d" => sincos2d(),
        "lissajous2d" => lissajous2d(),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn gauss(x: f64, c: f64) -> f64 {
    (-(x - c).powi(2)).exp()
}

fn x_samples(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    linspace(lo, hi, n).into_iter().map(|v| vec![v]).collect()
}

fn scalar_grid(lo: f64, hi: f64, step: f64) -> Vec<Vec<f64>> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| vec![lo + step * i as f64]).collect()
}

/// Gaussian bump `f(x, theta) = exp(-(x - theta)^2)` under the goal `psi = x - r`.
pub fn gauss_plant(name: &str, theta_true: f64, setpoint: f64) -> Result<Plant> {
    Plant::builder(name, 1, 1)
        .drift(|x, th| vec![gauss(x[0], th[0])])
        .input(|_| vec![1.0])
        .goal(move |x| x[0] - setpoint, |_| vec![1.0])
        .theta_gradient(|x, th| vec![2.0 * (x[0] - th[0]) * gauss(x[0], th[0])])
        .theta_true(vec![theta_true])
        .theta_domain(BoxRegion::interval(-2.0, 2.0)?)
        .x0_box(BoxRegion::interval(-10.0, 10.0)?)
        .f_bound(1.0)
        .build()
}

fn scalar_loop(plant: Plant, k: f64, delta0: f64, disturbance: Disturbance, x0: f64, t_end: f64) -> Result<ClosedLoop> {
    let lo = plant.theta_domain.lo[0];
    let hi = plant.theta_domain.hi[0];
    let adapt = AdaptConfig::new(
        1.0,
        delta0,
        disturbance.delta_bound,
        LambdaWrap::new(lo, hi)?,
        FilterConfig::critically_damped(SCENARIO_FILTER_OMEGA)?,
    )?;
    Ok(ClosedLoop {
        plant,
        phi: FeedbackPhi::linear(k)?,
        disturbance,
        adapt,
        sim: SimConfig {
            xi0: FilterInit::AtRest,
            ..SimConfig::new(vec![x0], t_end)
        },
        curve: None,
    })
}

fn expected_for(cl: &ClosedLoop, epsilon: f64, theta_grid: Vec<Vec<f64>>, x_grid: Vec<Vec<f64>>) -> Expected {
    let k = cl.phi.k;
    Expected {
        epsilon,
        dwell_radius: epsilon + cl.adapt.disturbance_bound / k,
        t_enter_ceiling: 0.5 * cl.sim.t_end,
        x_ceiling: 10.0,
        theta0_ceiling: 1e3,
        pe: None,
        class_delta: 0.0,
        theta_grid,
        x_grid,
        assumption_delta: None,
    }
}

fn gauss1d() -> Result<Scenario> {
    let (k, epsilon) = (1.0, 0.1);
    let plant = gauss_plant("gauss1d", 0.7, 0.0)?;
    let cl = scalar_loop(
        plant,
        k,
        delta0_for_epsilon(k, epsilon),
        Disturbance::zero(),
        1.5,
        200.0,
    )?;
    let expected = expected_for(&cl, epsilon, scalar_grid(-2.0, 2.0, 0.05), x_samples(-3.0, 3.0, 601));
    Ok(Scenario {
        name: "gauss1d".into(),
        summary: "scalar Gaussian bump, exp(-(x - theta)^2), theta = 0.7, goal psi = x".into(),
        closed_loop: cl,
        expected,
    })
}

fn gauss1d_noise() -> Result<Scenario> {
    let (k, epsilon) = (1.0, 0.1);
    let plant = gauss_plant("gauss1d_noise", 0.7, 0.0)?;
    let noise = Disturbance::sine(0.05, 3.0);
    let cl = scalar_loop(plant, k, delta0_for_epsilon(k, epsilon), noise, 1.5, 200.0)?;
    let expected = expected_for(&cl, epsilon, scalar_grid(-2.0, 2.0, 0.05), x_samples(-3.0, 3.0, 601));
    Ok(Scenario {
        name: "gauss1d_noise".into(),
        summary: "gauss1d with the bounded input 0.05 sin(3 t)".into(),
        closed_loop: cl,
        expected,
    })
}

fn gauss1d_pe() -> Result<Scenario> {
    // Regulating x to the bump centre keeps the regressor where the bump is
    // most informative; delta0 is taken below k epsilon / 4 so that the PE
    // margin clears 2 delta0 + Delta.
    let (k, epsilon, delta0) = (1.0, 0.5, 0.05);
    let plant = gauss_plant("gauss1d_pe", 0.7, 0.7)?;
    let cl = scalar_loop(plant, k, delta0, Disturbance::zero(), 2.7, 200.0)?;
    let mut expected = expected_for(&cl, epsilon, scalar_grid(-2.0, 2.0, 0.1), x_samples(-4.0, 4.0, 801));
    expected.pe = Some(PeExpectation {
        m: 0.15,
        t1: 20.0,
        epsilon,
    });
    Ok(Scenario {
        name: "gauss1d_pe".into(),
        summary: "Gaussian bump regulated to x = 0.7, persistently exciting at the set point".into(),
        closed_loop: cl,
        expected,
    })
}

/// `f(x, theta) = sin(theta_1) tanh(x) + 0.5 cos(theta_2 tanh(x))`.
pub fn sincos_model(x: &[f64], th: &[f64]) -> f64 {
    let s = x[0].tanh();
    th[0].sin() * s + 0.5 * (th[1] * s).cos()
}

fn sincos_plant() -> Result<Plant> {
    Plant::builder("sincos2d", 1, 2)
        .drift(|x, th| vec![sincos_model(x, th)])
        .input(|_| vec![1.0])
        .goal(|x| x[0], |_| vec![1.0])
        .theta_gradient(|x, th| {
            let s = x[0].tanh();
            vec![th[0].cos() * s, -0.5 * s * (th[1] * s).sin()]
        })
        .theta_true(vec![1.0, 1.2])
        .theta_domain(BoxRegion::new(vec![0.0, -2.0], vec![std::f64::consts::PI, 2.0])?)
        .x0_box(BoxRegion::interval(-10.0, 10.0)?)
        .f_bound(1.5)
        .build()
}

/// Level verified for the sincos2d curve by the assumption oracle (see tests).
pub const SINCOS_DELTA: f64 = 0.04;
/// Level verified for the lissajous2d curve over its 9-point parameter grid.
pub const LISSAJOUS_DELTA: f64 = 0.07;

fn sincos_curve() -> Result<EtaCurve> {
    let pi = std::f64::consts::PI;
    let grid = tensor_grid(&[linspace(0.0, pi, 5), linspace(-2.0, 2.0, 5)]);
    let weights = vec![1u32; grid.len()];
    build_grid_curve(&grid, &weights, 0.0, 1.0)
}

fn curve_loop(
    plant: Plant,
    curve: EtaCurve,
    k: f64,
    epsilon: f64,
    delta: f64,
    x0: f64,
    t_end: f64,
) -> Result<ClosedLoop> {
    let adapt = AdaptConfig::new(
        1.0,
        delta0_for_epsilon(k, epsilon),
        delta,
        LambdaWrap::new(curve.lambda_lo, curve.lambda_hi)?,
        FilterConfig::critically_damped(SCENARIO_FILTER_OMEGA)?,
    )?;
    Ok(ClosedLoop {
        plant,
        phi: FeedbackPhi::linear(k)?,
        disturbance: Disturbance::zero(),
        adapt,
        sim: SimConfig {
            xi0: FilterInit::AtRest,
            ..SimConfig::new(vec![x0], t_end)
        },
        curve: Some(curve),
    })
}

fn sincos2d() -> Result<Scenario> {
    let (k, epsilon) = (1.0, 0.1);
    let plant = sincos_plant()?;
    let cl = curve_loop(plant, sincos_curve()?, k, epsilon, SINCOS_DELTA, 1.5, 200.0)?;
    let pi = std::f64::consts::PI;
    let theta_grid = tensor_grid(&[linspace(0.0, pi, 21), linspace(-2.0, 2.0, 21)]);
    let mut expected = expected_for(&cl, epsilon, theta_grid, x_samples(-3.0, 3.0, 301));
    expected.class_delta = SINCOS_DELTA;
    expected.assumption_delta = Some(SINCOS_DELTA);
    Ok(Scenario {
        name: "sincos2d".into(),
        summary: "two parameters, sin(theta_1) tanh(x) + 0.5 cos(theta_2 tanh(x)), grid curve".into(),
        closed_loop: cl,
        expected,
    })
}

/// `f(x, theta) = theta_2 exp(-(x - theta_1)^2)`.
pub fn scaled_gauss_model(x: &[f64], th: &[f64]) -> f64 {
    th[1] * gauss(x[0], th[0])
}

pub fn lissajous_grid() -> Vec<Vec<f64>> {
    tensor_grid(&[vec![-1.0, 0.0, 1.0], vec![0.5, 1.0, 1.5]])
}

pub fn lissajous_curve() -> Result<EtaCurve> {
    EtaCurve::lissajous([0.0, 1.0], [1.0, 0.5], 3.0, 4.0, 0.0, 1.0)
}

fn lissajous2d() -> Result<Scenario> {
    let (k, epsilon) = (1.0, 0.1);
    let plant = Plant::builder("lissajous2d", 1, 2)
        .drift(|x, th| vec![scaled_gauss_model(x, th)])
        .input(|_| vec![1.0])
        .goal(|x| x[0], |_| vec![1.0])
        .theta_gradient(|x, th| {
            let g = gauss(x[0], th[0]);
            vec![2.0 * th[1] * (x[0] - th[0]) * g, g]
        })
        .theta_true(vec![1.0, 1.5])
        .theta_domain(BoxRegion::new(vec![-1.0, 0.5], vec![1.0, 1.5])?)
        .x0_box(BoxRegion::interval(-10.0, 10.0)?)
        .f_bound(1.5)
        .build()?;
    let cl = curve_loop(plant, lissajous_curve()?, k, epsilon, LISSAJOUS_DELTA, 1.5, 200.0)?;
    let mut expected = expected_for(&cl, epsilon, lissajous_grid(), x_samples(-3.0, 3.0, 301));
    expected.class_delta = LISSAJOUS_DELTA;
    expected.assumption_delta = Some(LISSAJOUS_DELTA);
    Ok(Scenario {
        name: "lissajous2d".into(),
        summary: "scaled Gaussian bump over a 3x3 parameter grid, Lissajous curve 3:4".into(),
        closed_loop: cl,
        expected,
    })
}

/// One named hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Grid checks of the standing hypotheses for a scenario.
pub fn self_check(s: &Scenario) -> Vec<Check> {
    let cl = &s.closed_loop;
    let plant = &cl.plant;
    let e = &s.expected;
    let mut out = Vec::new();
    let theta_probe = plant.theta_domain.grid(if plant.param_dim == 1 { 81 } else { 21 });
    let fb = plant.check_f_bound(&e.x_grid, &theta_probe);
    out.push(Check::new(
        "f bounded",
        fb.ok,
        format!("max |f| = {:.6} <= {}", fb.max_abs, plant.f_bound),
    ));
    let phi_check = cl.phi.check_class(&linspace(-10.0, 10.0, 1001));
    out.push(Check::new(
        "phi in class",
        phi_check.ok,
        format!("worst sector margin {:.3e}", phi_check.worst_margin),
    ));
    let dc = cl.disturbance.check(0.0, cl.sim.t_end, 200_001);
    out.push(Check::new(
        "disturbance bounded",
        dc.ok && cl.disturbance.delta_bound <= cl.adapt.disturbance_bound + 1e-15,
        format!(
            "max |upsilon| = {:.4}, Delta = {}",
            dc.max_abs, cl.adapt.disturbance_bound
        ),
    ));
    let radial = check_psi_radial_unboundedness(plant, &plant.x0_box, 20);
    out.push(Check::new(
        "psi radially unbounded",
        radial.pass,
        match &radial.witness {
            Some(w) => format!("|psi| stays small near {w:?}"),
            None => format!(
                "shell minima grow to {:.4}",
                radial.shell_minima.last().copied().unwrap_or(0.0)
            ),
        },
    ));
    let lg = plant.min_lg_psi(&e.x_grid);
    out.push(Check::new(
        "L_g psi floor",
        lg >= plant.lg_psi_floor,
        format!("min |L_g psi| = {lg}"),
    ));
    let gmax = plant.max_input_gain(&e.x_grid);
    out.push(Check::new("g bounded", gmax.is_finite(), format!("max |g| = {gmax}")));
    out.push(Check::new(
        "x0 admissible",
        plant.x0_box.contains(&cl.sim.x0),
        format!("{:?}", cl.sim.x0),
    ));
    out.push(Check::new(
        "filter Hurwitz",
        cl.adapt.filter.is_hurwitz(),
        format!("time constant {}", cl.adapt.filter.time_constant()),
    ));
    out.push(Check::new(
        "delta0 below k eps / 3",
        cl.adapt.delta0 < cl.phi.k * e.epsilon / 3.0,
        format!(
            "delta0 = {}, k eps / 3 = {}",
            cl.adapt.delta0,
            cl.phi.k * e.epsilon / 3.0
        ),
    ));
    if let Some(pe) = &e.pe {
        let floor = 2.0 * cl.adapt.delta0 + cl.adapt.disturbance_bound;
        out.push(Check::new(
            "PE margin above 2 delta0 + Delta",
            pe.m > floor,
            format!("M = {}, floor = {floor}", pe.m),
        ));
    }
    if let (Some(curve), Some(level)) = (&cl.curve, e.assumption_delta) {
        out.push(Check::new(
            "curve inside domain",
            curve.inside(&plant.theta_domain, 4001),
            curve.label.clone(),
        ));
        let sm = curve.smoothness(2000);
        out.push(Check::new(
            "curve C1",
            sm.ok,
            format!("second differences {:.3} / {:.3}", sm.coarse, sm.fine),
        ));
        let rep = assumption_report(s, level);
        out.push(Check::new(
            "approximation assumption",
            rep.ok,
            format!("achieved Delta = {:.5} at {:?}", rep.achieved_delta, rep.worst_theta),
        ));
    }
    out
}

/// Runs the assumption oracle for a curve scenario at `level`: the true
/// parameter plus the scenario's parameter grid (for the Lissajous case the
/// 9 grid points are the whole parameter set).
pub fn assumption_report(s: &Scenario, level: f64) -> crate::multidim::AssumptionReport {
    let cl = &s.closed_loop;
    let curve = cl.curve.as_ref().expect("curve scenario");
    let plant: &dyn ScalarModel = &cl.plant;
    let mut thetas = vec![cl.plant.theta_true.clone()];
    if s.name == "lissajous2d" {
        thetas.extend(lissajous_grid());
    }
    let lambda_grid = linspace(curve.lambda_lo, curve.lambda_hi, 8001);
    verify_assumption(plant, curve, level, &thetas, &s.expected.x_grid, &lambda_grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_scenario_is_bounded_by_one() {
        let s = lookup("gauss1d").unwrap();
        assert_eq!(s.closed_loop.plant.f_bound, 1.0);
        assert!(matches!(lookup("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn registry_passes_self_checks() {
        for s in registry() {
            for c in self_check(&s) {
                assert!(c.pass, "{}: {} ({})", s.name, c.name, c.detail);
            }
        }
    }
}
