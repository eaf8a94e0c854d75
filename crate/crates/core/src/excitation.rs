//! Equivalence classes `[theta]_Delta` and persistent-excitation checks on traces.

use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plant::ScalarModel;
use crate::trace::Trace;

/// `max_x |f(x, theta) - f(x, theta')|` over the grid.
pub fn class_distance(model: &dyn ScalarModel, theta: &[f64], theta_prime: &[f64], x_grid: &[Vec<f64>]) -> f64 {
    x_grid
        .iter()
        .map(|x| (model.eval(x, theta) - model.eval(x, theta_prime)).abs())
        .fold(0.0, f64::max)
}

/// Grid members of `[theta]_Delta`; `theta` itself is always included.
pub fn class_members(
    model: &dyn ScalarModel,
    theta: &[f64],
    delta: f64,
    theta_grid: &[Vec<f64>],
    x_grid: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let mut members: Vec<Vec<f64>> = theta_grid
        .par_iter()
        .filter(|c| class_distance(model, theta, c, x_grid) <= delta)
        .cloned()
        .collect();
    if !members.iter().any(|m| m.as_slice() == theta) {
        members.insert(0, theta.to_vec());
    }
    members
}

/// Euclidean distance from `p` to the nearest member.
pub fn distance_to_set(p: &[f64], members: &[Vec<f64>]) -> f64 {
    members
        .iter()
        .map(|m| m.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy)]
pub struct PEQuery<'a> {
    pub m: f64,
    pub t1: f64,
    pub epsilon: f64,
    /// Class tolerance `Delta` defining `[theta_true]_Delta`.
    pub delta: f64,
    pub theta_true: &'a [f64],
    pub theta_grid: &'a [Vec<f64>],
    pub x_grid: &'a [Vec<f64>],
    pub trace: &'a Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PEReport {
    pub satisfied: bool,
    /// Smallest windowed maximum of the mismatch over all windows and candidates.
    pub min_window_max: f64,
    /// `min_window_max - M`.
    pub margin: f64,
    pub worst_theta_hat: Vec<f64>,
    /// Window start where the worst candidate is least excited, and the delay of the
    /// best sample in that window.
    pub worst_window: (f64, f64),
    /// Per candidate: smallest windowed maximum.
    pub margin_map: Vec<(Vec<f64>, f64)>,
    pub candidates: usize,
    pub windows: usize,
}

/// Windowed check of `exists tau in (0, T1): |f(x(t+tau), theta) - f(x(t+tau), theta_hat)| > M`
/// for every window start on the trace grid and every candidate outside the
/// open `epsilon`-neighbourhood of the true class.
pub fn check_nonlinear_pe(model: &dyn ScalarModel, q: &PEQuery<'_>) -> Result<PEReport> {
    let tr = q.trace;
    if !(q.t1 > 0.0) {
        return Err(Error::invalid("T1 must be positive"));
    }
    if tr.duration() < q.t1 {
        return Err(Error::InsufficientTrace {
            needed: q.t1,
            available: tr.duration(),
        });
    }
    let members = class_members(model, q.theta_true, q.delta, q.theta_grid, q.x_grid);
    let candidates: Vec<&Vec<f64>> = q
        .theta_grid
        .iter()
        .filter(|c| distance_to_set(c, &members) >= q.epsilon)
        .collect();
    let times = tr.times();
    let truth: Vec<f64> = tr.rows.iter().map(|r| model.eval(&r.x, q.theta_true)).collect();
    let t_last = *times.last().unwrap();
    let starts = times.iter().take_while(|&&t| t + q.t1 <= t_last + 1e-12).count();

    let per: Vec<(Vec<f64>, f64, usize, usize)> = candidates
        .par_iter()
        .map(|c| {
            let mis: Vec<f64> = tr
                .rows
                .iter()
                .zip(&truth)
                .map(|(r, ft)| (ft - model.eval(&r.x, c)).abs())
                .collect();
            let (worst, at, arg) = min_of_window_max(&times, &mis, q.t1, starts);
            ((*c).clone(), worst, at, arg)
        })
        .collect();

    let mut report = PEReport {
        satisfied: true,
        min_window_max: f64::INFINITY,
        margin: f64::INFINITY,
        worst_theta_hat: Vec::new(),
        worst_window: (f64::NAN, f64::NAN),
        margin_map: Vec::with_capacity(per.len()),
        candidates: per.len(),
        windows: starts,
    };
    for (c, worst, at, arg) in per {
        if worst < report.min_window_max {
            report.min_window_max = worst;
            report.worst_theta_hat = c.clone();
            report.worst_window = (times[at], times[arg] - times[at]);
        }
        report.margin_map.push((c, worst));
    }
    report.margin = report.min_window_max - q.m;
    report.satisfied = report.min_window_max > q.m;
    Ok(report)
}

/// For window starts `0..starts`, the maximum of `v` over samples with
/// `t_j < t < t_j + T1`; returns the smallest such maximum, its window start
/// index and the argmax index.
fn min_of_window_max(times: &[f64], v: &[f64], t1: f64, starts: usize) -> (f64, usize, usize) {
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut hi = 0usize;
    let mut best = (f64::INFINITY, 0, 0);
    for j in 0..starts {
        let end = times[j] + t1;
        while hi < times.len() && times[hi] < end {
            while dq.back().is_some_and(|&b| v[b] <= v[hi]) {
                dq.pop_back();
            }
            dq.push_back(hi);
            hi += 1;
        }
        while dq.front().is_some_and(|&f| f <= j) {
            dq.pop_front();
        }
        let (m, arg) = match dq.front() {
            Some(&f) => (v[f], f),
            None => (f64::NEG_INFINITY, j),
        };
        if m < best.0 {
            best = (m, j, arg);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPEReport {
    pub satisfied: bool,
    pub min_eigenvalue: f64,
    /// `(window start, smallest eigenvalue of the window Gram integral)`.
    pub profile: Vec<(f64, f64)>,
}

/// Checks `int_t^{t+T} x x^T > rho I` for every window start on the grid, by
/// trapezoid quadrature with a linearly interpolated partial last interval.
pub fn check_linear_pe(trace: &Trace, t_window: f64, rho: f64) -> Result<LinearPEReport> {
    let regressors: Vec<Vec<f64>> = trace.rows.iter().map(|r| r.x.clone()).collect();
    check_linear_pe_on(&trace.times(), &regressors, t_window, rho)
}

pub fn check_linear_pe_on(times: &[f64], regressors: &[Vec<f64>], t_window: f64, rho: f64) -> Result<LinearPEReport> {
    if !(t_window > 0.0) {
        return Err(Error::invalid("window length must be positive"));
    }
    let available = match (times.first(), times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if available < t_window {
        return Err(Error::InsufficientTrace {
            needed: t_window,
            available,
        });
    }
    let n = regressors[0].len();
    let outer = |x: &[f64]| DMatrix::from_fn(n, n, |i, j| x[i] * x[j]);
    let grams: Vec<DMatrix<f64>> = regressors.iter().map(|x| outer(x)).collect();
    // cumulative trapezoid integrals
    let mut cum = Vec::with_capacity(times.len());
    cum.push(DMatrix::zeros(n, n));
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let next = &cum[i - 1] + (&grams[i - 1] + &grams[i]) * (0.5 * h);
        cum.push(next);
    }
    let integral_to = |t: f64| -> DMatrix<f64> {
        let k = times.partition_point(|&s| s <= t).saturating_sub(1);
        if k + 1 >= times.len() || times[k] == t {
            return cum[k].clone();
        }
        let s = (t - times[k]) / (times[k + 1] - times[k]);
        let g_t = &grams[k] * (1.0 - s) + &grams[k + 1] * s;
        &cum[k] + (&grams[k] + g_t) * (0.5 * (t - times[k]))
    };
    let t_last = *times.last().unwrap();
    let mut profile = Vec::new();
    let mut min_eig = f64::INFINITY;
    for (j, &t) in times.iter().enumerate() {
        if t + t_window > t_last + 1e-12 {
            break;
        }
        let w = integral_to(t + t_window) - &cum[j];
        let e = SymmetricEigen::new(w).eigenvalues.min();
        min_eig = min_eig.min(e);
        profile.push((t, e));
    }
    Ok(LinearPEReport {
        satisfied: min_eig > rho,
        min_eigenvalue: min_eig,
        profile,
    })
}

/// Mismatch margin implied by a linear PE certificate `(T, rho)` for
/// `f = theta^T x` and candidates at distance at least `epsilon`:
/// the window mean of the squared mismatch is at least `rho epsilon^2 / T`,
/// so the window max exceeds `epsilon sqrt(rho / T)`. This is `>= rho epsilon / T`
/// whenever `rho <= T`.
pub fn linear_pe_implied_margin(rho: f64, t_window: f64, epsilon: f64) -> f64 {
    let r = rho / t_window;
    epsilon * r.min(r.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::linspace;
    use crate::trace::TraceRow;

    fn gauss(x: &[f64], th: &[f64]) -> f64 {
        (-(x[0] - th[0]).powi(2)).exp()
    }

    fn xs(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
        linspace(lo, hi, n).into_iter().map(|v| vec![v]).collect()
    }

    fn trace_of(times: &[f64], x: impl Fn(f64) -> Vec<f64>) -> Trace {
        let n = x(0.0).len();
        let mut tr = Trace::new(n, 1);
        for &t in times {
            tr.rows.push(TraceRow {
                t,
                x: x(t),
                psi: 0.0,
                psi_dot_true: 0.0,
                u: 0.0,
                alpha: 0.0,
                theta0: 0.0,
                theta_hat: vec![0.0],
                s_delta: 0,
                theta_i: 0.0,
                c_theta: 0.0,
                event_flag: 0,
            });
        }
        tr
    }

    #[test]
    fn gaussian_class_distance() {
        assert_eq!(class_distance(&gauss, &[0.4], &[0.4], &xs(-5.0, 5.0, 101)), 0.0);
        let d = class_distance(&gauss, &[0.0], &[3.0], &xs(-5.0, 5.0, 1001));
        assert!((d - 0.99988).abs() < 5e-5, "{d}");
    }

    #[test]
    fn sine_class_is_not_a_singleton() {
        let f = |x: &[f64], th: &[f64]| th[0].sin() * x[0].tanh();
        let th = 0.4;
        let d = class_distance(&f, &[th], &[std::f64::consts::PI - th], &xs(-5.0, 5.0, 201));
        assert!(d < 1e-15);
    }

    #[test]
    fn constant_trajectory_excites_the_gaussian() {
        let times = linspace(0.0, 10.0, 1001);
        let tr = trace_of(&times, |_| vec![0.0]);
        let grid: Vec<Vec<f64>> = (0..=60).map(|i| vec![-3.0 + 0.1 * i as f64]).collect();
        let xg = xs(-3.0, 3.0, 601);
        let q = PEQuery {
            m: 0.2,
            t1: 1.0,
            epsilon: 0.5,
            delta: 0.0,
            theta_true: &[0.0],
            theta_grid: &grid,
            x_grid: &xg,
            trace: &tr,
        };
        let r = check_nonlinear_pe(&gauss, &q).unwrap();
        assert!(r.satisfied, "{r:?}");
        // the open 0.5 ball leaves +-0.5 as the worst candidates
        assert!((r.min_window_max - (1.0 - (-0.25f64).exp())).abs() < 1e-9);
        assert!((r.min_window_max - 0.2212).abs() < 1e-4);
        let r = check_nonlinear_pe(&gauss, &PEQuery { m: 1e9, ..q }).unwrap();
        assert!(!r.satisfied);
        assert!(matches!(
            check_nonlinear_pe(&gauss, &PEQuery { t1: 20.0, ..q }),
            Err(Error::InsufficientTrace { .. })
        ));
    }

    #[test]
    fn parameter_free_model_never_excites() {
        let times = linspace(0.0, 5.0, 501);
        let tr = trace_of(&times, |t| vec![t.sin()]);
        let flat = |_: &[f64], th: &[f64]| th[0] * 0.0;
        let grid: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64]).collect();
        let xg = xs(-1.0, 1.0, 21);
        let q = PEQuery {
            m: 1e-9,
            t1: 1.0,
            epsilon: 0.5,
            delta: 0.0,
            theta_true: &[0.0],
            theta_grid: &grid,
            x_grid: &xg,
            trace: &tr,
        };
        // every candidate is in the true class, so none is left to test;
        // with a positive class tolerance excluded, still nothing excites
        let r = check_nonlinear_pe(&flat, &q).unwrap();
        assert_eq!(r.candidates, 0);
        let members = class_members(&flat, &[0.0], 0.0, &grid, &xg);
        assert_eq!(members.len(), grid.len());
    }

    #[test]
    fn linear_pe_examples() {
        let times = linspace(0.0, 3.0, 3001);
        let tr = trace_of(&times, |_| vec![1.0]);
        let r = check_linear_pe(&tr, 1.0, 0.99).unwrap();
        assert!(r.satisfied);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);

        let times = linspace(0.0, 20.0, 20_001);
        let tr = trace_of(&times, |t| vec![t.sin(), t.cos()]);
        let r = check_linear_pe(&tr, 2.0 * std::f64::consts::PI, 3.0).unwrap();
        assert!(r.satisfied);
        for (_, e) in &r.profile {
            assert!((e - std::f64::consts::PI).abs() < 1e-6, "{e}");
        }
        assert!(!check_linear_pe(&tr, 2.0 * std::f64::consts::PI, 3.2).unwrap().satisfied);

        let tr = trace_of(&times, |t| vec![t.sin(), t.sin()]);
        let r = check_linear_pe(&tr, 2.0 * std::f64::consts::PI, 1e-9).unwrap();
        assert!(!r.satisfied);
        assert!(r.min_eigenvalue.abs() < 1e-9);
    }

    #[test]
    fn implied_margin_matches_short_window_rule() {
        assert_eq!(linear_pe_implied_margin(0.5, 2.0, 0.4), 0.5 * 0.4 / 2.0);
        assert!((linear_pe_implied_margin(8.0, 2.0, 0.1) - 0.2).abs() < 1e-15);
    }
}
