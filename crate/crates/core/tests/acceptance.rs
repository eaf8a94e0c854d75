//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::thread;
use std::time::{Duration, Instant};

use finform::adapt::SwitchKind;
use finform::analysis::{
    active_rate_floor, differential_form_oracle, dwell_in_radius, events_alternate, monotonicity, non_domination_sweep,
    parameter_convergence,
};
use finform::filter::FilterConfig;
use finform::scenarios::{assumption_report, lookup, Scenario, LISSAJOUS_DELTA, NAMES};
use finform::sim::{simulate, SimOutput, MONOTONE_TOL};
use finform::suite::pe_report;
use finform::trace::Trace;

struct Outcome {
    id: usize,
    title: &'static str,
    pass: bool,
    lines: Vec<String>,
}

fn run(name: &str, tweak: impl FnOnce(&mut Scenario)) -> (Scenario, SimOutput, Duration) {
    let mut sc = lookup(name).expect("built-in scenario");
    tweak(&mut sc);
    let t = Instant::now();
    let out = simulate(&sc.closed_loop).unwrap_or_else(|a| panic!("{name}: {}", a.error));
    (sc, out, t.elapsed())
}

/// Final residence in the closed ball of `radius`, computed straight from the rows.
struct Dwell {
    first_entry: Option<f64>,
    t_enter: Option<f64>,
    excursions_after_enter: usize,
    first_entry_exits: usize,
}

fn dwell_oracle(trace: &Trace, radius: f64) -> Dwell {
    let tol = 1e-6;
    let mut first_entry = None;
    let mut t_enter = None;
    let mut first_entry_exits = 0;
    let mut inside = false;
    for r in &trace.rows {
        let a = r.psi.abs();
        if a <= radius && first_entry.is_none() {
            first_entry = Some(r.t);
        }
        if first_entry.is_some() {
            if inside && a > radius + tol {
                first_entry_exits += 1;
            }
            inside = a <= radius || (inside && a <= radius + tol);
        }
        if a > radius + tol {
            t_enter = None;
        } else if t_enter.is_none() && a <= radius {
            t_enter = Some(r.t);
        }
    }
    let excursions_after_enter = match t_enter {
        Some(te) => trace
            .rows
            .iter()
            .filter(|r| r.t >= te && r.psi.abs() > radius + tol)
            .count(),
        None => 0,
    };
    Dwell {
        first_entry,
        t_enter,
        excursions_after_enter,
        first_entry_exits,
    }
}

fn dwell_criterion(id: usize, title: &'static str, sc: &Scenario, out: &SimOutput, radius: f64) -> Outcome {
    let t_end = sc.closed_loop.sim.t_end;
    let o = dwell_oracle(&out.trace, radius);
    let lib = dwell_in_radius(&out.trace, radius);
    let agree = lib.t_enter == o.t_enter && lib.first_entry == o.first_entry;
    let pass = agree && o.t_enter.is_some_and(|t| t <= 0.5 * t_end) && o.excursions_after_enter == 0;
    Outcome {
        id,
        title,
        pass,
        lines: vec![
            format!(
                "{}: radius {radius}, residence from t = {:?} (ceiling {}), excursions after it {}",
                sc.name,
                o.t_enter,
                0.5 * t_end,
                o.excursions_after_enter
            ),
            format!(
                "strict reading: first entry t = {:?}, exits after first entry {}, max excursion {:.3e}",
                o.first_entry, o.first_entry_exits, lib.max_excursion_after
            ),
            format!("library dwell agrees: {agree}"),
        ],
    }
}

/// Trapezoid integral of the gated rate law, split at logged events.
fn integrate_rate_law(sc: &Scenario, trace: &Trace) -> f64 {
    let cl = &sc.closed_loop;
    let g = |i: usize| {
        let r = &trace.rows[i];
        let p = cl.phi.eval(r.psi);
        cl.adapt.gamma * (p + r.alpha) * (p + r.psi_dot_true)
    };
    let mut active = trace.rows[0].s_delta == 1;
    let mut ev = 0;
    let mut theta0 = trace.rows[0].theta0;
    let mut sup: f64 = 0.0;
    for i in 1..trace.rows.len() {
        let (t0, t1) = (trace.rows[i - 1].t, trace.rows[i].t);
        let (g0, g1) = (g(i - 1), g(i));
        let at = |t: f64| g0 + (g1 - g0) * (t - t0) / (t1 - t0);
        let mut from = t0;
        while ev < trace.events.len() && trace.events[ev].t < t1 {
            let te = trace.events[ev].t.max(t0);
            if active {
                theta0 += 0.5 * (at(from) + at(te)) * (te - from);
            }
            active = !active;
            from = te;
            ev += 1;
        }
        if active {
            theta0 += 0.5 * (at(from) + g1) * (t1 - from);
        }
        sup = sup.max((theta0 - trace.rows[i].theta0).abs());
    }
    sup
}

/// Active intervals `[LEAVE, ENTER]` starting at or after `t_from`.
fn active_intervals(trace: &Trace, t_from: f64) -> Vec<f64> {
    let mut open = (trace.rows[0].s_delta == 1).then_some(trace.rows[0].t);
    let mut out = Vec::new();
    for e in &trace.events {
        match e.kind {
            SwitchKind::Leave => open = Some(e.t),
            SwitchKind::Enter => {
                if let Some(s) = open.take() {
                    if s >= t_from {
                        out.push(e.t - s);
                    }
                }
            }
        }
    }
    out
}

fn deciles(v: &[f64]) -> (f64, f64) {
    let k = v.len() / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&v[..k]), mean(&v[v.len() - k..]))
}

/// Plain RK4 on the filter equations `xi1' = xi2 + b1 psi`, `xi2' = a1 xi1 + a2 xi2 + b2 psi`.
fn filter_error(cfg: &FilterConfig, psi: impl Fn(f64) -> f64, dpsi: impl Fn(f64) -> f64, t_end: f64, from: f64) -> f64 {
    let dt = 1e-3;
    let f = |t: f64, x: [f64; 2]| {
        let p = psi(t);
        [x[1] + cfg.b1 * p, cfg.a1 * x[0] + cfg.a2 * x[1] + cfg.b2 * p]
    };
    let mut x = [0.0; 2];
    let mut sup: f64 = 0.0;
    let n = (t_end / dt).round() as usize;
    for i in 0..n {
        let t = i as f64 * dt;
        let k1 = f(t, x);
        let k2 = f(t + dt / 2.0, [x[0] + dt / 2.0 * k1[0], x[1] + dt / 2.0 * k1[1]]);
        let k3 = f(t + dt / 2.0, [x[0] + dt / 2.0 * k2[0], x[1] + dt / 2.0 * k2[1]]);
        let k4 = f(t + dt, [x[0] + dt * k3[0], x[1] + dt * k3[1]]);
        for j in 0..2 {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let tn = (i + 1) as f64 * dt;
        if tn >= from - 1e-9 {
            sup = sup.max((cfg.c1 * x[0] - dpsi(tn)).abs());
        }
    }
    sup
}

fn criterion_3_4_9(runs: &[(Scenario, SimOutput, Duration)], long: &[(Scenario, SimOutput, Duration)]) -> Vec<Outcome> {
    let mut c3 = Outcome {
        id: 3,
        title: "theta0 monotone with active growth rate",
        pass: true,
        lines: vec![],
    };
    let mut c4 = Outcome {
        id: 4,
        title: "finite form matches the integrated rate law",
        pass: true,
        lines: vec![],
    };
    let mut c9 = Outcome {
        id: 9,
        title: "event continuity, alternation and shrinking active intervals",
        pass: true,
        lines: vec![],
    };
    for (sc, out, _) in runs {
        let d = &out.diagnostics;
        let m = monotonicity(&out.trace, d.transient_end, MONOTONE_TOL);
        let floor = 0.9 * active_rate_floor(&sc.closed_loop.adapt);
        let ok = m.violations == 0 && m.max_drop < MONOTONE_TOL && m.active_steps > 0 && m.min_active_rate >= floor;
        c3.pass &= ok;
        c3.lines.push(format!(
            "{}: violations {} (max drop {:.2e}) after t = {:.4}, min active rate {:.4e} >= {:.4e} over {} steps",
            sc.name, m.violations, m.max_drop, d.transient_end, m.min_active_rate, floor, m.active_steps
        ));

        let own = integrate_rate_law(sc, &out.trace);
        let lib = differential_form_oracle(&out.trace, &sc.closed_loop.adapt, &sc.closed_loop.phi).sup_diff;
        c4.pass &= own <= 1e-4 && lib <= 1e-4;
        c4.lines.push(format!(
            "{}: sup diff {own:.3e} (library oracle {lib:.3e}), tolerance 1e-4",
            sc.name
        ));

        let ev = &out.trace.events;
        let alternate = ev.windows(2).all(|w| w[0].kind != w[1].kind && w[0].t < w[1].t);
        let ok = alternate && events_alternate(ev) && d.max_event_jump < 1e-8;
        c9.pass &= ok;
        c9.lines.push(format!(
            "{}: {} events, alternating {alternate}, max theta0 jump {:.2e}",
            sc.name,
            ev.len(),
            d.max_event_jump
        ));
    }
    for (sc, out, _) in long {
        let d = &out.diagnostics;
        let iv = active_intervals(&out.trace, d.transient_end);
        if iv.len() < 10 {
            c9.lines.push(format!(
                "{}: {} active intervals over 500 t.u., trend N/A",
                sc.name,
                iv.len()
            ));
            continue;
        }
        let (first, last) = deciles(&iv);
        let ok = last < first && d.max_event_jump < 1e-8 && events_alternate(&out.trace.events);
        c9.pass &= ok;
        c9.lines.push(format!(
            "{}: {} active intervals over 500 t.u.; first-decile mean {first:.4e}, last-decile mean {last:.4e}",
            sc.name,
            iv.len()
        ));
    }
    vec![c3, c4, c9]
}

fn criterion_5() -> Outcome {
    let cfg = FilterConfig::tuned(-1.0, -1.0, 1.0).expect("filter");
    let t = Instant::now();
    let sine = filter_error(&cfg, |t| (2.0 * t).sin(), |t| 2.0 * (2.0 * t).cos(), 40.0, 20.0);
    let t_sine = t.elapsed();
    let t = Instant::now();
    let ramp = filter_error(&cfg, |t| t, |_| 1.0, 40.0, 30.0);
    let t_ramp = t.elapsed();
    let ramp_from_20 = filter_error(&cfg, |t| t, |_| 1.0, 40.0, 20.0);
    let bound = (cfg.a2 * 4.0 / cfg.a1).abs();
    let fast = t_sine < Duration::from_secs(1) && t_ramp < Duration::from_secs(1);
    Outcome {
        id: 5,
        title: "filter error bound",
        pass: sine <= bound + 1e-4 && ramp <= 1e-6 && fast,
        lines: vec![
            format!(
                "sin(2t): sup error on [20, 40] = {sine:.6} <= {} ({t_sine:.2?})",
                bound + 1e-4
            ),
            format!("ramp: sup error on [30, 40] = {ramp:.3e} <= 1e-6 ({t_ramp:.2?})"),
            format!("ramp on [20, 40] for reference: {ramp_from_20:.3e} (start-up transient decays like exp(-t/2))"),
        ],
    }
}

fn criterion_6() -> Outcome {
    let sc = lookup("gauss1d").expect("gauss1d");
    let ks = [1.0, 0.1, 0.01];
    let rows = non_domination_sweep(&sc.closed_loop, sc.expected.epsilon, &ks).expect("sweep");
    let sup_u: Vec<f64> = rows.iter().map(|r| r.sup_u).collect();
    let spread =
        sup_u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - sup_u.iter().cloned().fold(f64::INFINITY, f64::min);
    let sup_f = rows.iter().map(|r| r.sup_f).fold(0.0, f64::max);
    let reached = rows.iter().all(|r| r.reached);
    let mut lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "k = {}: reached {}, residence from t = {:?}, sup|u| = {:.4}, sup|f| = {:.4}",
                r.value, r.reached, r.t_enter, r.sup_u, r.sup_f
            )
        })
        .collect();
    lines.push(format!("sup|u| spread {spread:.4} < sup|f| + 1 = {:.4}", sup_f + 1.0));
    Outcome {
        id: 6,
        title: "non-domination gain sweep",
        pass: reached && spread < sup_f + 1.0,
        lines,
    }
}

fn criterion_7(pe_run: &(Scenario, SimOutput, Duration), control: &(Scenario, SimOutput, Duration)) -> Outcome {
    let (sc, out, _) = pe_run;
    let pe = sc.expected.pe.clone().expect("excitation expectation");
    let rep = pe_report(sc, out, pe.m, pe.t1, pe.epsilon).expect("excitation check");
    let e = &sc.expected;
    let conv = parameter_convergence(
        &out.trace,
        &sc.closed_loop.plant,
        &sc.closed_loop.plant.theta_true,
        pe.epsilon,
        e.class_delta,
        &e.theta_grid,
        &e.x_grid,
    );
    let (csc, cout, _) = control;
    let ce = &csc.expected;
    let cconv = parameter_convergence(
        &cout.trace,
        &csc.closed_loop.plant,
        &csc.closed_loop.plant.theta_true,
        pe.epsilon,
        ce.class_delta,
        &ce.theta_grid,
        &ce.x_grid,
    );
    let cd = &cout.diagnostics;
    let bounded = cd.sup_x <= ce.x_ceiling && cd.sup_abs_theta0 <= ce.theta0_ceiling;
    Outcome {
        id: 7,
        title: "parameter convergence under excitation",
        pass: rep.satisfied && conv.converged && conv.terminal_distance < pe.epsilon && bounded,
        lines: vec![
            format!(
                "{}: excitation M = {}, T1 = {}, eps = {}: min window max {:.4} over {} candidates, satisfied {}",
                sc.name, pe.m, pe.t1, pe.epsilon, rep.min_window_max, rep.candidates, rep.satisfied
            ),
            format!("{}: distance below eps from t = {:?}, terminal distance {:.4}", sc.name, conv.t_conv, conv.terminal_distance),
            format!(
                "negative control {}: sup|x| = {:.3}, sup|theta0| = {:.3}, terminal distance {:.4} (convergence not required)",
                csc.name, cd.sup_x, cd.sup_abs_theta0, cconv.terminal_distance
            ),
        ],
    }
}

fn criterion_8(run: &(Scenario, SimOutput, Duration)) -> Outcome {
    let (sc, out, _) = run;
    let rep = assumption_report(sc, LISSAJOUS_DELTA);
    let k = sc.closed_loop.phi.k;
    let radius = sc.expected.epsilon + rep.achieved_delta.max(sc.closed_loop.adapt.disturbance_bound) / k;
    let mut o = dwell_criterion(8, "lifted run dwells with the verified level", sc, out, radius);
    o.pass &= rep.ok;
    o.lines.insert(
        0,
        format!(
            "approximation level {} verified: {} (achieved {:.5})",
            LISSAJOUS_DELTA, rep.ok, rep.achieved_delta
        ),
    );
    o
}

fn criterion_10() -> Outcome {
    let base = lookup("gauss1d").expect("gauss1d");
    let dt = base.closed_loop.sim.dt;
    let runs: Vec<Trace> = thread::scope(|s| {
        let hs: Vec<_> = [1usize, 2, 4]
            .iter()
            .map(|&m| {
                s.spawn(move || {
                    run("gauss1d", |sc| {
                        sc.closed_loop.sim.dt = dt / m as f64;
                        sc.closed_loop.sim.record_stride = m;
                    })
                    .1
                    .trace
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().expect("run")).collect()
    });
    let diff = |a: &Trace, b: &Trace| {
        assert_eq!(a.rows.len(), b.rows.len());
        a.rows
            .iter()
            .zip(&b.rows)
            .map(|(x, y)| {
                assert!((x.t - y.t).abs() < 1e-9);
                (x.psi - y.psi).abs()
            })
            .fold(0.0, f64::max)
    };
    let d1 = diff(&runs[0], &runs[1]);
    let d2 = diff(&runs[1], &runs[2]);
    let ratio = d1 / d2;
    Outcome {
        id: 10,
        title: "numerical order under dt halving",
        pass: ratio >= 8.0,
        lines: vec![format!(
            "sup|psi(dt) - psi(dt/2)| = {d1:.3e}, sup|psi(dt/2) - psi(dt/4)| = {d2:.3e}, ratio {ratio:.2} >= 8"
        )],
    }
}

fn main() {
    let wall = Instant::now();
    // timed alone so the runtime bound is not distorted by the parallel runs below
    let (sc1, out1, t1) = run("gauss1d", |_| {});
    let c1 = {
        let mut o = dwell_criterion(1, "goal-set dwell", &sc1, &out1, sc1.expected.dwell_radius);
        o.lines.push(format!("runtime {t1:.2?} (< 10 s)"));
        o.pass &= t1 < Duration::from_secs(10);
        o
    };
    let c5 = criterion_5();

    let (runs, long, c6, c10) = thread::scope(|s| {
        let c6 = s.spawn(criterion_6);
        let c10 = s.spawn(criterion_10);
        let runs: Vec<_> = NAMES
            .iter()
            .filter(|&&n| n != "gauss1d")
            .map(|&n| s.spawn(move || run(n, |_| {})))
            .collect();
        let long: Vec<_> = NAMES
            .iter()
            .map(|&n| s.spawn(move || run(n, |sc| sc.closed_loop.sim.t_end = 500.0)))
            .collect();
        let mut runs: Vec<_> = runs.into_iter().map(|h| h.join().expect("run")).collect();
        runs.insert(0, (sc1.clone(), out1.clone(), t1));
        let long: Vec<_> = long.into_iter().map(|h| h.join().expect("run")).collect();
        (runs, long, c6.join().expect("sweep"), c10.join().expect("order"))
    });
    let by_name = |n: &str| runs.iter().find(|r| r.0.name == n).expect("run");

    let noise = by_name("gauss1d_noise");
    let c2 = dwell_criterion(
        2,
        "dwell under bounded disturbance",
        &noise.0,
        &noise.1,
        noise.0.expected.dwell_radius,
    );
    let mut outcomes = vec![c1, c2, c5, c6, c10];
    outcomes.extend(criterion_3_4_9(&runs, &long));
    outcomes.push(criterion_7(by_name("gauss1d_pe"), by_name("gauss1d")));
    outcomes.push(criterion_8(by_name("lissajous2d")));
    outcomes.sort_by_key(|o| o.id);

    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{} criterion {:>2}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.id,
            o.title
        );
        for l in &o.lines {
            println!("      {l}");
        }
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria pass ({:.1?})",
        outcomes.len() - failed,
        outcomes.len(),
        wall.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
