//! Plant, goal function, feedback class and the certainty-equivalence control law.
//!
//! The plant is `x' = F(x, theta) + G(x) u` with goal `psi(x) = 0`. The scalar
//! uncertainty seen by the adaptation law is the Lie derivative
//! `f(x, theta) = grad psi(x) . F(x, theta)`; with the control law below the
//! closed loop reduces to the error model
//! `psi' = f(x, theta) - f(x, theta_hat) - phi(psi) + upsilon(t)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type VectorField = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type StateMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ParamGradient = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Step used for central finite differences of config-defined functions.
pub const FD_STEP: f64 = 1e-6;

/// Default floor on `|L_g psi|`.
pub const DEFAULT_LG_PSI_FLOOR: f64 = 1e-6;

/// Default number of probe points per axis for grid checks.
pub const DEFAULT_PROBE_POINTS: usize = 1001;

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("box bounds must be non-empty and of equal length"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::invalid(format!("box bounds not ordered: {lo:?} .. {hi:?}")));
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        BoxRegion {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Tensor grid with `per_axis` points on every axis (endpoints included).
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| linspace(self.lo[i], self.hi[i], per_axis))
            .collect();
        tensor_grid(&axes)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub(crate) fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for v in axis {
                let mut p = prefix.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// A scalar function of state and parameters: the uncertainty `f(x, theta)`.
pub trait ScalarModel: Sync {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64;

    /// Gradient with respect to `theta`; central differences unless overridden.
    fn grad_theta(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut th = theta.to_vec();
        (0..theta.len())
            .map(|i| {
                let orig = th[i];
                th[i] = orig + FD_STEP;
                let up = self.eval(x, &th);
                th[i] = orig - FD_STEP;
                let down = self.eval(x, &th);
                th[i] = orig;
                (up - down) / (2.0 * FD_STEP)
            })
            .collect()
    }
}

impl<F> ScalarModel for F
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        self(x, theta)
    }
}

/// The uncertain system together with its goal function and known bounds.
#[derive(Clone)]
pub struct Plant {
    pub name: String,
    pub state_dim: usize,
    pub param_dim: usize,
    drift: VectorField,
    input: StateMap,
    psi: ScalarMap,
    grad_psi: StateMap,
    /// Optional analytic `d f / d theta` of the composed scalar uncertainty.
    theta_gradient: Option<ParamGradient>,
    pub theta_true: Vec<f64>,
    pub theta_domain: BoxRegion,
    /// Admissible initial conditions.
    pub x0_box: BoxRegion,
    /// Known bound on `|L_f psi|`.
    pub f_bound: f64,
    pub lg_psi_floor: f64,
}

impl fmt::Debug for Plant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plant")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("param_dim", &self.param_dim)
            .field("theta_true", &self.theta_true)
            .field("theta_domain", &self.theta_domain)
            .field("x0_box", &self.x0_box)
            .field("f_bound", &self.f_bound)
            .field("lg_psi_floor", &self.lg_psi_floor)
            .finish_non_exhaustive()
    }
}

pub struct PlantBuilder {
    name: String,
    state_dim: usize,
    param_dim: usize,
    drift: Option<VectorField>,
    input: Option<StateMap>,
    psi: Option<ScalarMap>,
    grad_psi: Option<StateMap>,
    theta_gradient: Option<ParamGradient>,
    theta_true: Option<Vec<f64>>,
    theta_domain: Option<BoxRegion>,
    x0_box: Option<BoxRegion>,
    f_bound: f64,
    lg_psi_floor: f64,
}

impl PlantBuilder {
    pub fn drift(mut self, f: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.drift = Some(Arc::new(f));
        self
    }

    pub fn input(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.input = Some(Arc::new(g));
        self
    }

    /// Goal function with its analytic gradient.
    pub fn goal(
        mut self,
        psi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.psi = Some(Arc::new(psi));
        self.grad_psi = Some(Arc::new(grad));
        self
    }

    /// Goal function whose gradient is taken by central differences.
    pub fn goal_fd(mut self, psi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let psi: ScalarMap = Arc::new(psi);
        let p = psi.clone();
        self.grad_psi = Some(Arc::new(move |x: &[f64]| {
            let mut xs = x.to_vec();
            (0..x.len())
                .map(|i| {
                    let orig = xs[i];
                    xs[i] = orig + FD_STEP;
                    let up = p(&xs);
                    xs[i] = orig - FD_STEP;
                    let down = p(&xs);
                    xs[i] = orig;
                    (up - down) / (2.0 * FD_STEP)
                })
                .collect()
        }));
        self.psi = Some(psi);
        self
    }

    pub fn theta_gradient(mut self, g: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.theta_gradient = Some(Arc::new(g));
        self
    }

    pub fn theta_true(mut self, theta: Vec<f64>) -> Self {
        self.theta_true = Some(theta);
        self
    }

    pub fn theta_domain(mut self, b: BoxRegion) -> Self {
        self.theta_domain = Some(b);
        self
    }

    pub fn x0_box(mut self, b: BoxRegion) -> Self {
        self.x0_box = Some(b);
        self
    }

    pub fn f_bound(mut self, v: f64) -> Self {
        self.f_bound = v;
        self
    }

    pub fn lg_psi_floor(mut self, v: f64) -> Self {
        self.lg_psi_floor = v;
        self
    }

    pub fn build(self) -> Result<Plant> {
        let missing = |what: &str| Error::invalid(format!("plant `{}`: missing {what}", self.name));
        let drift = self.drift.clone().ok_or_else(|| missing("drift field"))?;
        let input = self.input.clone().ok_or_else(|| missing("input field"))?;
        let psi = self.psi.clone().ok_or_else(|| missing("goal function"))?;
        let grad_psi = self.grad_psi.clone().ok_or_else(|| missing("goal gradient"))?;
        let theta_true = self.theta_true.clone().ok_or_else(|| missing("true parameter"))?;
        let theta_domain = self.theta_domain.clone().ok_or_else(|| missing("parameter domain"))?;
        let x0_box = self
            .x0_box
            .clone()
            .unwrap_or_else(|| BoxRegion::symmetric(self.state_dim, 10.0));
        if self.state_dim == 0 || self.param_dim == 0 {
            return Err(Error::invalid("state and parameter dimensions must be positive"));
        }
        if theta_true.len() != self.param_dim || theta_domain.dim() != self.param_dim {
            return Err(Error::invalid("parameter dimension mismatch"));
        }
        if x0_box.dim() != self.state_dim {
            return Err(Error::invalid("initial-condition box dimension mismatch"));
        }
        if !theta_domain.contains(&theta_true) {
            return Err(Error::invalid(format!(
                "true parameter {theta_true:?} outside domain {:?} .. {:?}",
                theta_domain.lo, theta_domain.hi
            )));
        }
        if !(self.lg_psi_floor > 0.0) {
            return Err(Error::invalid("lg_psi_floor must be positive"));
        }
        if !(self.f_bound > 0.0) || !self.f_bound.is_finite() {
            return Err(Error::invalid("f_bound must be positive and finite"));
        }
        Ok(Plant {
            name: self.name,
            state_dim: self.state_dim,
            param_dim: self.param_dim,
            drift,
            input,
            psi,
            grad_psi,
            theta_gradient: self.theta_gradient,
            theta_true,
            theta_domain,
            x0_box,
            f_bound: self.f_bound,
            lg_psi_floor: self.lg_psi_floor,
        })
    }
}

impl Plant {
    pub fn builder(name: impl Into<String>, state_dim: usize, param_dim: usize) -> PlantBuilder {
        PlantBuilder {
            name: name.into(),
            state_dim,
            param_dim,
            drift: None,
            input: None,
            psi: None,
            grad_psi: None,
            theta_gradient: None,
            theta_true: None,
            theta_domain: None,
            x0_box: None,
            f_bound: f64::INFINITY,
            lg_psi_floor: DEFAULT_LG_PSI_FLOOR,
        }
    }

    pub fn drift(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        (self.drift)(x, theta)
    }

    pub fn input_gain(&self, x: &[f64]) -> Vec<f64> {
        (self.input)(x)
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        (self.psi)(x)
    }

    pub fn grad_psi(&self, x: &[f64]) -> Vec<f64> {
        (self.grad_psi)(x)
    }

    /// `L_F psi (x, theta)`, the scalar uncertainty of the error model.
    pub fn uncertainty(&self, x: &[f64], theta: &[f64]) -> f64 {
        dot(&self.grad_psi(x), &self.drift(x, theta))
    }

    pub fn lg_psi(&self, x: &[f64]) -> f64 {
        dot(&self.grad_psi(x), &self.input_gain(x))
    }

    pub fn with_theta_true(&self, theta: Vec<f64>) -> Result<Plant> {
        if theta.len() != self.param_dim || !self.theta_domain.contains(&theta) {
            return Err(Error::invalid(format!("parameter {theta:?} outside domain")));
        }
        let mut p = self.clone();
        p.theta_true = theta;
        Ok(p)
    }

    /// Checks `|L_f psi| <= f_bound` on the tensor product of `x_probe` and the parameter grid.
    pub fn check_f_bound(&self, x_probe: &[Vec<f64>], theta_probe: &[Vec<f64>]) -> BoundCheck {
        let mut worst = BoundCheck {
            ok: true,
            max_abs: 0.0,
            witness_x: Vec::new(),
            witness_theta: Vec::new(),
        };
        for th in theta_probe {
            for x in x_probe {
                let v = self.uncertainty(x, th).abs();
                if !(v <= worst.max_abs) {
                    worst.max_abs = v;
                    worst.witness_x = x.clone();
                    worst.witness_theta = th.clone();
                }
            }
        }
        worst.ok = worst.max_abs <= self.f_bound;
        worst
    }

    /// Minimum of `|L_g psi|` over the probe points.
    pub fn min_lg_psi(&self, x_probe: &[Vec<f64>]) -> f64 {
        x_probe
            .iter()
            .map(|x| self.lg_psi(x).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|G(x)|` over the probe points (boundedness of the input field).
    pub fn max_input_gain(&self, x_probe: &[Vec<f64>]) -> f64 {
        x_probe.iter().map(|x| norm(&self.input_gain(x))).fold(0.0, f64::max)
    }
}

impl ScalarModel for Plant {
    fn eval(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.uncertainty(x, theta)
    }

    fn grad_theta(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        match &self.theta_gradient {
            Some(g) => g(x, theta),
            None => {
                let model = |x: &[f64], th: &[f64]| self.uncertainty(x, th);
                ScalarModel::grad_theta(&model, x, theta)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub ok: bool,
    pub max_abs: f64,
    pub witness_x: Vec<f64>,
    pub witness_theta: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Shape of the feedback `phi` beyond its linear part `k psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiShape {
    /// `phi(psi) = k psi`
    Linear,
    /// `phi(psi) = k psi + c psi^3`, `c >= 0`
    Cubic { c: f64 },
    /// `phi(psi) = k psi + a tanh(psi)`, `a >= 0`
    TanhBoost { a: f64 },
}

/// Feedback `phi` from the class `phi(psi) psi >= k psi^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackPhi {
    pub k: f64,
    pub shape: PhiShape,
}

impl FeedbackPhi {
    pub fn linear(k: f64) -> Result<Self> {
        Self::new(k, PhiShape::Linear)
    }

    pub fn new(k: f64, shape: PhiShape) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::invalid(format!("feedback gain k must be positive, got {k}")));
        }
        match shape {
            PhiShape::Cubic { c } if c < 0.0 => Err(Error::invalid("cubic coefficient must be >= 0")),
            PhiShape::TanhBoost { a } if a < 0.0 => Err(Error::invalid("tanh coefficient must be >= 0")),
            _ => Ok(FeedbackPhi { k, shape }),
        }
    }

    pub fn eval(&self, psi: f64) -> f64 {
        self.k * psi
            + match self.shape {
                PhiShape::Linear => 0.0,
                PhiShape::Cubic { c } => c * psi * psi * psi,
                PhiShape::TanhBoost { a } => a * psi.tanh(),
            }
    }

    /// `Phi(psi) = integral_0^psi phi(s) ds`.
    pub fn primitive(&self, psi: f64) -> f64 {
        0.5 * self.k * psi * psi
            + match self.shape {
                PhiShape::Linear => 0.0,
                PhiShape::Cubic { c } => 0.25 * c * psi.powi(4),
                PhiShape::TanhBoost { a } => a * psi.cosh().ln(),
            }
    }

    pub fn slope(&self, psi: f64) -> f64 {
        self.k
            + match self.shape {
                PhiShape::Linear => 0.0,
                PhiShape::Cubic { c } => 3.0 * c * psi * psi,
                PhiShape::TanhBoost { a } => {
                    let th = psi.tanh();
                    a * (1.0 - th * th)
                }
            }
    }

    /// Membership check on a probe grid: the sector condition and a bounded
    /// finite-difference slope.
    pub fn check_class(&self, psi_grid: &[f64]) -> ClassCheck {
        let mut sector_ok = true;
        let mut worst_margin = f64::INFINITY;
        for &p in psi_grid {
            let margin = self.eval(p) * p - self.k * p * p;
            worst_margin = worst_margin.min(margin);
            if margin < -1e-12 * (1.0 + p * p) {
                sector_ok = false;
            }
        }
        let mut max_slope: f64 = 0.0;
        for w in psi_grid.windows(2) {
            let h = w[1] - w[0];
            if h > 0.0 {
                max_slope = max_slope.max(((self.eval(w[1]) - self.eval(w[0])) / h).abs());
            }
        }
        ClassCheck {
            sector_ok,
            worst_margin,
            max_fd_slope: max_slope,
            ok: sector_ok && max_slope.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassCheck {
    pub ok: bool,
    pub sector_ok: bool,
    pub worst_margin: f64,
    pub max_fd_slope: f64,
}

/// Bounded auxiliary input / disturbance `upsilon(t)` with `|upsilon| <= delta_bound`.
#[derive(Clone)]
pub struct Disturbance {
    upsilon: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub delta_bound: f64,
    pub upsilon_dot_bound: f64,
    pub label: String,
}

impl fmt::Debug for Disturbance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Disturbance")
            .field("label", &self.label)
            .field("delta_bound", &self.delta_bound)
            .field("upsilon_dot_bound", &self.upsilon_dot_bound)
            .finish()
    }
}

impl Disturbance {
    pub fn zero() -> Self {
        Disturbance {
            upsilon: Arc::new(|_| 0.0),
            delta_bound: 0.0,
            upsilon_dot_bound: 0.0,
            label: "none".into(),
        }
    }

    /// `upsilon(t) = amplitude sin(omega t)`.
    pub fn sine(amplitude: f64, omega: f64) -> Self {
        Disturbance {
            upsilon: Arc::new(move |t| amplitude * (omega * t).sin()),
            delta_bound: amplitude.abs(),
            upsilon_dot_bound: (amplitude * omega).abs(),
            label: format!("{amplitude} sin({omega} t)"),
        }
    }

    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        delta_bound: f64,
        upsilon_dot_bound: f64,
    ) -> Self {
        Disturbance {
            upsilon: Arc::new(f),
            delta_bound,
            upsilon_dot_bound,
            label: label.into(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.upsilon)(t)
    }

    /// Checks `|upsilon| <= delta_bound` and the finite-difference derivative
    /// bound on a uniform grid of `[t0, t1]`.
    pub fn check(&self, t0: f64, t1: f64, points: usize) -> DisturbanceCheck {
        let ts = linspace(t0, t1, points.max(2));
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();
        let max_abs = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut max_dot: f64 = 0.0;
        for i in 1..ts.len() {
            max_dot = max_dot.max(((vals[i] - vals[i - 1]) / (ts[i] - ts[i - 1])).abs());
        }
        DisturbanceCheck {
            ok: max_abs <= self.delta_bound + 1e-12 && max_dot <= self.upsilon_dot_bound * (1.0 + 1e-9) + 1e-12,
            max_abs,
            max_fd_dot: max_dot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceCheck {
    pub ok: bool,
    pub max_abs: f64,
    pub max_fd_dot: f64,
}

/// The control law `u = (L_g psi)^-1 (-L_f(x, theta_hat) psi - phi(psi) + upsilon)`.
pub fn eval_control(plant: &Plant, x: &[f64], theta_hat: &[f64], phi: &FeedbackPhi, upsilon_val: f64) -> Result<f64> {
    let lg = plant.lg_psi(x);
    if !(lg.abs() >= plant.lg_psi_floor) {
        return Err(Error::SingularControlDirection {
            x: x.to_vec(),
            lg_psi: lg.abs(),
            floor: plant.lg_psi_floor,
        });
    }
    let psi = plant.psi(x);
    Ok((-plant.uncertainty(x, theta_hat) - phi.eval(psi) + upsilon_val) / lg)
}

/// Closed-loop vector field, with `psi'` computed along the chain rule and
/// from the error model for cross-checking.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRhs {
    pub x_dot: Vec<f64>,
    pub u: f64,
    pub psi_dot_chain: f64,
    pub psi_dot_error_model: f64,
}

pub fn closed_loop_rhs(
    plant: &Plant,
    x: &[f64],
    theta_hat: &[f64],
    phi: &FeedbackPhi,
    t: f64,
    upsilon: &Disturbance,
) -> Result<ClosedLoopRhs> {
    let ups = upsilon.eval(t);
    let u = eval_control(plant, x, theta_hat, phi, ups)?;
    let drift = plant.drift(x, &plant.theta_true);
    let gain = plant.input_gain(x);
    let x_dot: Vec<f64> = drift.iter().zip(&gain).map(|(f, g)| f + g * u).collect();
    let grad = plant.grad_psi(x);
    let psi_dot_chain = dot(&grad, &x_dot);
    let psi = plant.psi(x);
    let psi_dot_error_model = dot(&grad, &drift) - plant.uncertainty(x, theta_hat) - phi.eval(psi) + ups;
    Ok(ClosedLoopRhs {
        x_dot,
        u,
        psi_dot_chain,
        psi_dot_error_model,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialReport {
    pub pass: bool,
    /// Minimum `|psi|` on each shell, innermost first.
    pub shell_minima: Vec<f64>,
    /// A point on the outermost failing shell where `|psi|` is smallest.
    pub witness: Option<Vec<f64>>,
}

/// Heuristic surrogate for `psi(x) bounded => x bounded`: on nested shells
/// `||x||_inf = r_j` filling `sample_box`, the minimum of `|psi|` must grow
/// strictly from shell to shell.
pub fn check_psi_radial_unboundedness(plant: &Plant, sample_box: &BoxRegion, shells: usize) -> RadialReport {
    let n = plant.state_dim;
    let center: Vec<f64> = sample_box
        .lo
        .iter()
        .zip(&sample_box.hi)
        .map(|(l, h)| 0.5 * (l + h))
        .collect();
    let half: Vec<f64> = sample_box
        .lo
        .iter()
        .zip(&sample_box.hi)
        .map(|(l, h)| 0.5 * (h - l))
        .collect();
    let shells = shells.max(2);
    let face_points = if n == 1 { 1 } else { 21 };
    let mut minima = Vec::with_capacity(shells);
    let mut argmins = Vec::with_capacity(shells);
    for j in 1..=shells {
        let frac = j as f64 / shells as f64;
        let mut best = f64::INFINITY;
        let mut arg = center.clone();
        for p in shell_points(&center, &half, frac, face_points) {
            let v = plant.psi(&p).abs();
            if v < best {
                best = v;
                arg = p;
            }
        }
        minima.push(best);
        argmins.push(arg);
    }
    let mut witness = None;
    for j in 1..minima.len() {
        if !(minima[j] > minima[j - 1]) {
            witness = Some(argmins[j].clone());
        }
    }
    RadialReport {
        pass: witness.is_none(),
        shell_minima: minima,
        witness,
    }
}

/// Points on the surface of the scaled box `center +- frac * half`.
fn shell_points(center: &[f64], half: &[f64], frac: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    if n == 1 {
        return vec![vec![center[0] - frac * half[0]], vec![center[0] + frac * half[0]]];
    }
    let unit = linspace(-1.0, 1.0, per_axis | 1);
    let mut out = Vec::new();
    for face in 0..n {
        for sign in [-1.0, 1.0] {
            let axes: Vec<Vec<f64>> = (0..n)
                .map(|i| if i == face { vec![sign] } else { unit.clone() })
                .collect();
            for u in tensor_grid(&axes) {
                out.push(
                    u.iter()
                        .enumerate()
                        .map(|(i, v)| center[i] + frac * half[i] * v)
                        .collect(),
                );
            }
        }
    }
    out
}
