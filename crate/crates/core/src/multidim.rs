//! Reduction of a d-dimensional parameter to the scalar law through a curve
//! `eta: [lo, hi] -> R^d`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plant::{linspace, BoxRegion, ScalarModel};

type CurveFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct EtaCurve {
    eta: CurveFn,
    pub dim: usize,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub label: String,
    /// Parameter values of the interpolation knots (grid curves only).
    pub knots: Vec<f64>,
}

impl fmt::Debug for EtaCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EtaCurve")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("range", &(self.lambda_lo, self.lambda_hi))
            .finish_non_exhaustive()
    }
}

impl EtaCurve {
    pub fn from_fn(
        label: impl Into<String>,
        dim: usize,
        lambda_lo: f64,
        lambda_hi: f64,
        eta: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lambda_lo < lambda_hi) {
            return Err(Error::invalid("curve range needs lo < hi"));
        }
        if dim == 0 {
            return Err(Error::invalid("curve dimension must be positive"));
        }
        Ok(EtaCurve {
            eta: Arc::new(eta),
            dim,
            lambda_lo,
            lambda_hi,
            label: label.into(),
            knots: Vec::new(),
        })
    }

    pub fn identity(lo: f64, hi: f64) -> Result<Self> {
        Self::from_fn("identity", 1, lo, hi, |l| vec![l])
    }

    /// `(c0 + a0 sin(p s), c1 + a1 sin(q s))` with `s = 2 pi (lambda - lo) / (hi - lo)`.
    pub fn lissajous(center: [f64; 2], amplitude: [f64; 2], p: f64, q: f64, lo: f64, hi: f64) -> Result<Self> {
        let span = hi - lo;
        Self::from_fn(format!("lissajous({p}:{q})"), 2, lo, hi, move |l| {
            let s = 2.0 * PI * (l - lo) / span;
            vec![
                center[0] + amplitude[0] * (p * s).sin(),
                center[1] + amplitude[1] * (q * s).sin(),
            ]
        })
    }

    /// Value at `lambda`, clamped to the range.
    pub fn eval(&self, lambda: f64) -> Vec<f64> {
        (self.eta)(lambda.clamp(self.lambda_lo, self.lambda_hi))
    }

    pub fn samples(&self, n: usize) -> Vec<(f64, Vec<f64>)> {
        linspace(self.lambda_lo, self.lambda_hi, n.max(2))
            .into_iter()
            .map(|l| (l, self.eval(l)))
            .collect()
    }

    /// Whether every sampled point lies in `domain`.
    pub fn inside(&self, domain: &BoxRegion, n: usize) -> bool {
        self.samples(n).iter().all(|(_, p)| domain.contains(p))
    }

    /// Largest second divided difference at resolution `n` and `2n`. A C1
    /// curve with bounded curvature keeps it bounded under refinement; a
    /// corner makes it double.
    pub fn smoothness(&self, n: usize) -> SmoothnessReport {
        let coarse = self.max_second_difference(n);
        let fine = self.max_second_difference(2 * n);
        SmoothnessReport {
            coarse,
            fine,
            ok: fine.is_finite() && fine <= 1.5 * coarse.max(1e-12),
        }
    }

    fn max_second_difference(&self, n: usize) -> f64 {
        let h = (self.lambda_hi - self.lambda_lo) / n as f64;
        let pts: Vec<Vec<f64>> = (0..=n).map(|i| self.eval(self.lambda_lo + i as f64 * h)).collect();
        pts.windows(3)
            .map(|w| {
                (0..self.dim)
                    .map(|j| ((w[2][j] - 2.0 * w[1][j] + w[0][j]) / (h * h)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub coarse: f64,
    pub fine: f64,
    pub ok: bool,
}

/// Parameter fed to the control law for a scalar estimate.
pub fn lift_adaptation(curve: &EtaCurve, scalar_theta_hat: f64) -> Vec<f64> {
    curve.eval(scalar_theta_hat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub ok: bool,
    pub achieved_delta: f64,
    pub worst_theta: Vec<f64>,
    /// For each probed parameter: the best `lambda` and its residual.
    pub per_theta: Vec<(Vec<f64>, f64, f64)>,
    pub grid_sizes: (usize, usize, usize),
}

/// Grid check of `min_lambda max_x |f(x, theta) - f(x, eta(lambda))| <= delta_cap`
/// for each `theta` of the grid.
pub fn verify_assumption(
    model: &dyn ScalarModel,
    curve: &EtaCurve,
    delta_cap: f64,
    theta_grid: &[Vec<f64>],
    x_grid: &[Vec<f64>],
    lambda_grid: &[f64],
) -> AssumptionReport {
    let lifted: Vec<Vec<f64>> = lambda_grid.iter().map(|&l| curve.eval(l)).collect();
    let per_theta: Vec<(Vec<f64>, f64, f64)> = theta_grid
        .par_iter()
        .map(|theta| {
            let truth: Vec<f64> = x_grid.iter().map(|x| model.eval(x, theta)).collect();
            let mut best = (f64::NAN, f64::INFINITY);
            for (l, eta) in lambda_grid.iter().zip(&lifted) {
                let mut worst: f64 = 0.0;
                for (x, ft) in x_grid.iter().zip(&truth) {
                    worst = worst.max((ft - model.eval(x, eta)).abs());
                    if worst >= best.1 {
                        break;
                    }
                }
                if worst < best.1 {
                    best = (*l, worst);
                }
            }
            (theta.clone(), best.0, best.1)
        })
        .collect();
    let (worst_theta, achieved) =
        per_theta.iter().fold(
            (Vec::new(), 0.0f64),
            |(wt, wd), (th, _, d)| if *d >= wd { (th.clone(), *d) } else { (wt, wd) },
        );
    AssumptionReport {
        ok: achieved <= delta_cap,
        achieved_delta: achieved,
        worst_theta,
        per_theta,
        grid_sizes: (theta_grid.len(), lambda_grid.len(), x_grid.len()),
    }
}

/// Visit order: smooth weighted round robin, so a point of weight `w` appears
/// `w` times per period and heavy points are spread out.
pub fn visit_schedule(weights: &[u32]) -> Vec<usize> {
    let total: i64 = weights.iter().map(|&w| w as i64).sum();
    let mut current = vec![0i64; weights.len()];
    let mut order = Vec::with_capacity(total as usize);
    for _ in 0..total {
        for (c, w) in current.iter_mut().zip(weights) {
            *c += *w as i64;
        }
        let mut pick = 0;
        for i in 1..current.len() {
            if current[i] > current[pick] {
                pick = i;
            }
        }
        current[pick] -= total;
        order.push(pick);
    }
    order
}

/// Closed curve through `grid_points`, each visited `weights[i]` times per
/// period, on the range `[lo, hi]`.
///
/// Segments are cubic Hermite pieces with zero end tangents, so the curve is
/// C1, periodic, and never leaves the convex hull of the grid.
pub fn build_grid_curve(grid_points: &[Vec<f64>], weights: &[u32], lo: f64, hi: f64) -> Result<EtaCurve> {
    if grid_points.len() < 2 {
        return Err(Error::invalid("grid curve needs at least two points"));
    }
    if weights.len() != grid_points.len() || weights.contains(&0) {
        return Err(Error::invalid("one positive weight per grid point required"));
    }
    let dim = grid_points[0].len();
    if dim == 0 || grid_points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("grid points must share a positive dimension"));
    }
    if grid_points.iter().all(|p| p == &grid_points[0]) {
        return Err(Error::DegenerateGrid);
    }
    if !(lo < hi) {
        return Err(Error::invalid("curve range needs lo < hi"));
    }
    let seq: Vec<Vec<f64>> = visit_schedule(weights)
        .into_iter()
        .map(|i| grid_points[i].clone())
        .collect();
    let m = seq.len();
    let span = hi - lo;
    let knots: Vec<f64> = (0..m).map(|j| lo + span * j as f64 / m as f64).collect();
    let seq = Arc::new(seq);
    let eta = move |l: f64| {
        let u = ((l - lo) / span * m as f64).clamp(0.0, m as f64);
        let j = (u.floor() as usize).min(m - 1);
        let s = u - j as f64;
        let w = s * s * (3.0 - 2.0 * s);
        let a = &seq[j];
        let b = &seq[(j + 1) % m];
        a.iter().zip(b).map(|(p, q)| p + (q - p) * w).collect()
    };
    let mut curve = EtaCurve::from_fn(format!("grid({m} visits)"), dim, lo, hi, eta)?;
    curve.knots = knots;
    Ok(curve)
}

/// Number of strict local minima of `|eta(lambda) - point|` over one period.
pub fn count_visits(curve: &EtaCurve, point: &[f64], samples: usize, radius: f64) -> usize {
    let d: Vec<f64> = curve
        .samples(samples)
        .iter()
        .map(|(_, p)| p.iter().zip(point).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    // the closed curve repeats its first sample at the end
    let n = d.len() - 1;
    (0..n)
        .filter(|&i| {
            let prev = d[(i + n - 1) % n];
            let next = d[(i + 1) % n];
            d[i] <= radius && d[i] < prev && d[i] <= next
        })
        .count()
}
