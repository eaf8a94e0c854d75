//! Run configuration files.
//!
//! Flat `key = value` text with the sections `[plant] [phi] [disturbance]
//! [adapt] [sim] [expected]`. `#` starts a comment. Unknown sections and
//! keys are errors carrying the line number.
//!
//! ```text
//! [plant]
//! builtin = gauss1d
//!
//! [sim]
//! t_end = 50
//! ```
//!
//! Without `builtin` the plant is assembled from expressions (see
//! [`crate::expr`]): `drift`, `input` (or `drift0`, `drift1`, ... when the
//! state has several components) and `psi`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::adapt::{delta0_for_epsilon, AdaptConfig, LambdaWrap};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::filter::{FilterConfig, FilterState};
use crate::multidim::{build_grid_curve, EtaCurve};
use crate::plant::{linspace, tensor_grid, BoxRegion, Disturbance, FeedbackPhi, PhiShape, Plant};
use crate::scenarios::{lookup, Expected, PeExpectation, Scenario, SCENARIO_FILTER_OMEGA};
use crate::sim::{ClosedLoop, FilterInit, SimConfig};

const SECTIONS: [&str; 6] = ["plant", "phi", "disturbance", "adapt", "sim", "expected"];

const PLANT_KEYS: &[&str] = &[
    "builtin",
    "name",
    "state_dim",
    "param_dim",
    "drift",
    "input",
    "psi",
    "theta_true",
    "theta_lo",
    "theta_hi",
    "x0_lo",
    "x0_hi",
    "f_bound",
    "lg_psi_floor",
    "curve",
    "curve_center",
    "curve_amp",
    "curve_freq",
    "curve_grid",
];
const PHI_KEYS: &[&str] = &["k", "shape", "coeff"];
const DISTURBANCE_KEYS: &[&str] = &["kind", "amplitude", "omega"];
const ADAPT_KEYS: &[&str] = &[
    "gamma",
    "delta0",
    "epsilon",
    "filter_omega",
    "a1",
    "a2",
    "b1",
    "theta0_reflect_at",
    "theta0_init",
];
const SIM_KEYS: &[&str] = &[
    "dt",
    "t0",
    "t_end",
    "event_tol",
    "x0",
    "record_stride",
    "xi0",
    "goal_radius",
];
const EXPECTED_KEYS: &[&str] = &[
    "epsilon",
    "dwell_radius",
    "t_enter_ceiling",
    "x_ceiling",
    "theta0_ceiling",
    "pe_m",
    "pe_t1",
    "pe_epsilon",
    "class_delta",
    "assumption_delta",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed but uninterpreted configuration: section -> key -> value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| perr(ln, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(perr(ln, format!("unknown section [{name}]")));
                }
                if raw.sections.contains_key(name) {
                    return Err(perr(ln, format!("section [{name}] appears twice")));
                }
                raw.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| perr(ln, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let section = current.as_deref().ok_or_else(|| perr(ln, "key outside any section"))?;
            if !allowed(section, key) {
                return Err(perr(ln, format!("unknown key `{key}` in [{section}]")));
            }
            if value.is_empty() {
                return Err(perr(ln, format!("empty value for `{key}`")));
            }
            let map = raw.sections.get_mut(section).expect("section inserted above");
            if map.contains_key(key) {
                return Err(perr(ln, format!("duplicate key `{key}`")));
            }
            map.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: ln,
                },
            );
        }
        Ok(raw)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|m| m.get(key))
    }

    fn str(&self, section: &str, key: &str) -> Option<&str> {
        self.get(section, key).map(|e| e.value.as_str())
    }

    fn num(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key).map(|e| number(&e.value, e.line)).transpose()
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(section, key)
            .map(|e| e.value.split(',').map(|p| number(p.trim(), e.line)).collect())
            .transpose()
    }

    fn count(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.get(section, key)
            .map(|e| {
                e.value
                    .parse::<usize>()
                    .map_err(|_| perr(e.line, format!("`{key}` must be a non-negative integer")))
            })
            .transpose()
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.get(section, key).map_or(0, |e| e.line)
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }
}

fn allowed(section: &str, key: &str) -> bool {
    let keys = match section {
        "plant" => PLANT_KEYS,
        "phi" => PHI_KEYS,
        "disturbance" => DISTURBANCE_KEYS,
        "adapt" => ADAPT_KEYS,
        "sim" => SIM_KEYS,
        _ => EXPECTED_KEYS,
    };
    if keys.contains(&key) {
        return true;
    }
    // indexed expression keys for vector fields
    section == "plant"
        && ["drift", "input"].iter().any(|p| {
            key.strip_prefix(p)
                .is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()))
        })
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| perr(line, format!("`{s}` is not a decimal number")))?;
    if !v.is_finite() {
        return Err(perr(line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    build(&RawConfig::parse(text)?)
}

pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn build(raw: &RawConfig) -> Result<Scenario> {
    if !raw.has_section("plant") {
        return Err(perr(1, "missing [plant] section"));
    }
    let mut sc = match raw.str("plant", "builtin") {
        Some(name) => {
            if let Some(k) = raw.sections["plant"].keys().find(|k| *k != "builtin") {
                return Err(perr(
                    raw.line_of("plant", k),
                    format!("`{k}` cannot be combined with `builtin`"),
                ));
            }
            lookup(name).map_err(|e| match e {
                Error::UnknownScenario(_) => perr(raw.line_of("plant", "builtin"), e.to_string()),
                other => other,
            })?
        }
        None => expression_scenario(raw)?,
    };
    apply_overrides(raw, &mut sc)?;
    sc.closed_loop.validate()?;
    Ok(sc)
}

fn require<T>(v: Option<T>, raw: &RawConfig, section: &str, key: &str) -> Result<T> {
    v.ok_or_else(|| perr(raw.line_of(section, "").max(1), format!("[{section}] needs `{key}`")))
}

fn checked_expr(raw: &RawConfig, key: &str, n: usize, d: usize, allow_param: bool) -> Result<Expr> {
    let e = raw.get("plant", key).expect("caller checked presence");
    let ex = Expr::parse(&e.value).map_err(|err| perr(e.line, format!("`{key}`: {err}")))?;
    let fp = ex.footprint();
    if fp.max_state.is_some_and(|i| i >= n) {
        return Err(perr(e.line, format!("`{key}` uses a state beyond x{}", n - 1)));
    }
    if let Some(i) = fp.max_param {
        if !allow_param {
            return Err(perr(e.line, format!("`{key}` may not depend on parameters")));
        }
        if i >= d {
            return Err(perr(e.line, format!("`{key}` uses a parameter beyond th{}", d - 1)));
        }
    }
    if fp.uses_time {
        return Err(perr(e.line, format!("`{key}` may not depend on time")));
    }
    Ok(ex)
}

fn field_exprs(raw: &RawConfig, base: &str, n: usize, d: usize, allow_param: bool) -> Result<Vec<Expr>> {
    if raw.get("plant", base).is_some() {
        if n != 1 {
            let line = raw.line_of("plant", base);
            return Err(perr(
                line,
                format!("use `{base}0` .. `{base}{}` for a {n}-dimensional state", n - 1),
            ));
        }
        return Ok(vec![checked_expr(raw, base, n, d, allow_param)?]);
    }
    (0..n)
        .map(|i| {
            let key = format!("{base}{i}");
            if raw.get("plant", &key).is_none() {
                return Err(perr(raw.line_of("plant", "").max(1), format!("[plant] needs `{key}`")));
            }
            checked_expr(raw, &key, n, d, allow_param)
        })
        .collect()
}

fn expression_scenario(raw: &RawConfig) -> Result<Scenario> {
    let n = raw.count("plant", "state_dim")?.unwrap_or(1);
    let d = raw.count("plant", "param_dim")?.unwrap_or(1);
    if n == 0 || d == 0 {
        return Err(perr(raw.line_of("plant", "state_dim"), "dimensions must be positive"));
    }
    let name = raw.str("plant", "name").unwrap_or("custom").to_string();
    let drift = Arc::new(field_exprs(raw, "drift", n, d, true)?);
    let input = Arc::new(field_exprs(raw, "input", n, d, false)?);
    if raw.get("plant", "psi").is_none() {
        return Err(perr(1, "[plant] needs `psi`"));
    }
    let psi = Arc::new(checked_expr(raw, "psi", n, d, false)?);
    let theta_true = require(raw.list("plant", "theta_true")?, raw, "plant", "theta_true")?;
    let lo = require(raw.list("plant", "theta_lo")?, raw, "plant", "theta_lo")?;
    let hi = require(raw.list("plant", "theta_hi")?, raw, "plant", "theta_hi")?;
    let f_bound = require(raw.num("plant", "f_bound")?, raw, "plant", "f_bound")?;
    let theta_domain = BoxRegion::new(lo, hi)?;
    let x0_box = match (raw.list("plant", "x0_lo")?, raw.list("plant", "x0_hi")?) {
        (Some(lo), Some(hi)) => BoxRegion::new(lo, hi)?,
        (None, None) => BoxRegion::symmetric(n, 10.0),
        _ => {
            return Err(perr(
                raw.line_of("plant", "x0_lo").max(raw.line_of("plant", "x0_hi")),
                "give both `x0_lo` and `x0_hi`",
            ))
        }
    };

    let eval_all = |es: &[Expr], x: &[f64], th: &[f64]| -> Vec<f64> {
        let b = Bindings { x, theta: th, t: 0.0 };
        es.iter().map(|e| e.eval(&b)).collect()
    };
    let (dr, inp, ps) = (drift.clone(), input.clone(), psi.clone());
    let mut builder = Plant::builder(name.clone(), n, d)
        .drift(move |x, th| eval_all(&dr, x, th))
        .input(move |x| eval_all(&inp, x, &[]))
        .goal_fd(move |x| ps.eval(&Bindings { x, theta: &[], t: 0.0 }))
        .theta_true(theta_true)
        .theta_domain(theta_domain.clone())
        .x0_box(x0_box.clone())
        .f_bound(f_bound);
    if let Some(v) = raw.num("plant", "lg_psi_floor")? {
        builder = builder.lg_psi_floor(v);
    }
    let plant = builder.build()?;

    let curve = if d > 1 {
        Some(config_curve(raw, &theta_domain)?)
    } else {
        if let Some(k) = ["curve", "curve_center", "curve_amp", "curve_freq", "curve_grid"]
            .iter()
            .find(|k| raw.get("plant", k).is_some())
        {
            return Err(perr(raw.line_of("plant", k), "a lifting curve needs param_dim > 1"));
        }
        None
    };

    let epsilon = raw
        .num("adapt", "epsilon")?
        .or(raw.num("expected", "epsilon")?)
        .unwrap_or(0.1);
    let adapt = AdaptConfig::new(
        1.0,
        delta0_for_epsilon(1.0, epsilon),
        0.0,
        LambdaWrap::new(0.0, 1.0)?,
        FilterConfig::critically_damped(SCENARIO_FILTER_OMEGA)?,
    )?;
    let x0 = x0_box.lo.iter().zip(&x0_box.hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let closed_loop = ClosedLoop {
        plant,
        phi: FeedbackPhi::linear(1.0)?,
        disturbance: Disturbance::zero(),
        adapt,
        sim: SimConfig {
            xi0: FilterInit::AtRest,
            ..SimConfig::new(x0, 100.0)
        },
        curve,
    };
    let (theta_grid, x_grid) = default_grids(&theta_domain, &x0_box);
    let expected = Expected {
        epsilon,
        dwell_radius: epsilon,
        t_enter_ceiling: 50.0,
        x_ceiling: 10.0,
        theta0_ceiling: 1e3,
        pe: None,
        class_delta: 0.0,
        theta_grid,
        x_grid,
        assumption_delta: None,
    };
    Ok(Scenario {
        name,
        summary: "plant defined in a configuration file".into(),
        closed_loop,
        expected,
    })
}

fn default_grids(theta: &BoxRegion, x: &BoxRegion) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let per_axis = |dim: usize, one: usize, two: usize| match dim {
        1 => one,
        2 => two,
        _ => 7,
    };
    (
        grid_of(theta, per_axis(theta.dim(), 81, 21)),
        grid_of(x, per_axis(x.dim(), 401, 41)),
    )
}

fn grid_of(b: &BoxRegion, per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> =
        b.lo.iter()
            .zip(&b.hi)
            .map(|(&l, &h)| linspace(l, h, per_axis))
            .collect();
    tensor_grid(&axes)
}

fn config_curve(raw: &RawConfig, domain: &BoxRegion) -> Result<EtaCurve> {
    let line = raw.line_of("plant", "curve").max(1);
    match raw.str("plant", "curve") {
        Some("lissajous") => {
            if domain.dim() != 2 {
                return Err(perr(line, "a lissajous curve needs param_dim = 2"));
            }
            let c = require(raw.list("plant", "curve_center")?, raw, "plant", "curve_center")?;
            let a = require(raw.list("plant", "curve_amp")?, raw, "plant", "curve_amp")?;
            let f = require(raw.list("plant", "curve_freq")?, raw, "plant", "curve_freq")?;
            if c.len() != 2 || a.len() != 2 || f.len() != 2 {
                return Err(perr(
                    line,
                    "curve_center, curve_amp and curve_freq take two values each",
                ));
            }
            if !(f[0] > 0.0 && f[1] > 0.0) {
                return Err(perr(raw.line_of("plant", "curve_freq"), "curve_freq must be positive"));
            }
            EtaCurve::lissajous([c[0], c[1]], [a[0], a[1]], f[0], f[1], 0.0, 1.0)
        }
        Some("grid") => {
            let m = raw.count("plant", "curve_grid")?.unwrap_or(5);
            if m < 2 {
                return Err(perr(
                    raw.line_of("plant", "curve_grid"),
                    "curve_grid must be at least 2",
                ));
            }
            let points = grid_of(domain, m);
            let weights = vec![1u32; points.len()];
            build_grid_curve(&points, &weights, 0.0, 1.0)
        }
        Some(other) => Err(perr(line, format!("unknown curve `{other}` (lissajous, grid)"))),
        None => Err(perr(1, "param_dim > 1 needs a `curve` in [plant]")),
    }
}

fn apply_overrides(raw: &RawConfig, sc: &mut Scenario) -> Result<()> {
    let cl = &mut sc.closed_loop;

    if raw.has_section("phi") {
        let k = raw.num("phi", "k")?.unwrap_or(cl.phi.k);
        let coeff = raw.num("phi", "coeff")?;
        let shape = match raw.str("phi", "shape") {
            None => match coeff {
                None => cl.phi.shape,
                Some(_) => return Err(perr(raw.line_of("phi", "coeff"), "`coeff` needs a `shape`")),
            },
            Some("linear") => PhiShape::Linear,
            Some("cubic") => PhiShape::Cubic {
                c: coeff.unwrap_or(1.0),
            },
            Some("tanh") => PhiShape::TanhBoost {
                a: coeff.unwrap_or(1.0),
            },
            Some(o) => {
                return Err(perr(
                    raw.line_of("phi", "shape"),
                    format!("unknown shape `{o}` (linear, cubic, tanh)"),
                ))
            }
        };
        cl.phi = FeedbackPhi::new(k, shape).map_err(|e| perr(raw.line_of("phi", "k").max(1), e.to_string()))?;
    }

    if raw.has_section("disturbance") {
        let amp = raw.num("disturbance", "amplitude")?;
        let omega = raw.num("disturbance", "omega")?;
        cl.disturbance = match raw.str("disturbance", "kind") {
            Some("none") => Disturbance::zero(),
            Some("sine") | None => Disturbance::sine(
                require(amp, raw, "disturbance", "amplitude")?,
                require(omega, raw, "disturbance", "omega")?,
            ),
            Some(o) => {
                return Err(perr(
                    raw.line_of("disturbance", "kind"),
                    format!("unknown kind `{o}` (none, sine)"),
                ))
            }
        };
        cl.adapt.disturbance_bound = cl.disturbance.delta_bound;
    }

    let is_builtin = raw.str("plant", "builtin").is_some();
    let epsilon = raw
        .num("adapt", "epsilon")?
        .or(raw.num("expected", "epsilon")?)
        .unwrap_or(sc.expected.epsilon);
    if let Some(g) = raw.num("adapt", "gamma")? {
        cl.adapt.gamma = g;
    }
    match raw.num("adapt", "delta0")? {
        Some(d) => cl.adapt.delta0 = d,
        None if !is_builtin || raw.get("phi", "k").is_some() || raw.get("adapt", "epsilon").is_some() => {
            cl.adapt.delta0 = delta0_for_epsilon(cl.phi.k, epsilon);
        }
        None => {}
    }
    if !is_builtin {
        let d = &cl.plant.theta_domain;
        cl.adapt.lambda = if cl.plant.param_dim == 1 {
            LambdaWrap::new(d.lo[0], d.hi[0])?
        } else {
            LambdaWrap::new(0.0, 1.0)?
        };
    }
    let (a1, a2, b1) = (
        raw.num("adapt", "a1")?,
        raw.num("adapt", "a2")?,
        raw.num("adapt", "b1")?,
    );
    match (raw.num("adapt", "filter_omega")?, a1, a2, b1) {
        (Some(w), None, None, None) => cl.adapt.filter = FilterConfig::critically_damped(w)?,
        (None, Some(a1), Some(a2), b1) => cl.adapt.filter = FilterConfig::tuned(a1, a2, b1.unwrap_or(1.0))?,
        (None, None, None, None) => {}
        _ => {
            return Err(perr(
                raw.line_of("adapt", "filter_omega")
                    .max(raw.line_of("adapt", "a1"))
                    .max(1),
                "give either `filter_omega` or both `a1` and `a2` (optionally `b1`)",
            ))
        }
    }
    if let Some(v) = raw.num("adapt", "theta0_reflect_at")? {
        cl.adapt.theta0_reflect_at = Some(v);
    }
    if let Some(v) = raw.num("adapt", "theta0_init")? {
        cl.adapt.theta0_init = Some(v);
    }
    cl.adapt
        .validate()
        .map_err(|e| perr(first_line(raw, "adapt"), e.to_string()))?;

    if let Some(v) = raw.num("sim", "dt")? {
        cl.sim.dt = v;
    }
    if let Some(v) = raw.num("sim", "t0")? {
        cl.sim.t0 = v;
    }
    if let Some(v) = raw.num("sim", "t_end")? {
        cl.sim.t_end = v;
    }
    if let Some(v) = raw.num("sim", "event_tol")? {
        cl.sim.event_tol = v;
    }
    if let Some(v) = raw.list("sim", "x0")? {
        cl.sim.x0 = v;
    }
    if let Some(v) = raw.count("sim", "record_stride")? {
        cl.sim.record_stride = v;
    }
    if let Some(v) = raw.num("sim", "goal_radius")? {
        cl.sim.goal_radius = Some(v);
    }
    if let Some(e) = raw.get("sim", "xi0") {
        cl.sim.xi0 = match e.value.as_str() {
            "zero" => FilterInit::Zero,
            "rest" => FilterInit::AtRest,
            _ => {
                let v = raw.list("sim", "xi0")?.expect("present");
                if v.len() != 2 {
                    return Err(perr(e.line, "`xi0` is `zero`, `rest` or two numbers"));
                }
                FilterInit::Given(FilterState { xi1: v[0], xi2: v[1] })
            }
        };
    }
    cl.sim
        .validate()
        .map_err(|e| perr(first_line(raw, "sim"), e.to_string()))?;

    let ex = &mut sc.expected;
    ex.epsilon = epsilon;
    ex.dwell_radius = raw
        .num("expected", "dwell_radius")?
        .unwrap_or(epsilon + cl.adapt.disturbance_bound / cl.phi.k);
    if let Some(v) = raw.num("expected", "t_enter_ceiling")? {
        ex.t_enter_ceiling = v;
    } else if raw.get("sim", "t_end").is_some() || !is_builtin {
        ex.t_enter_ceiling = 0.5 * (cl.sim.t_end - cl.sim.t0);
    }
    if let Some(v) = raw.num("expected", "x_ceiling")? {
        ex.x_ceiling = v;
    }
    if let Some(v) = raw.num("expected", "theta0_ceiling")? {
        ex.theta0_ceiling = v;
    }
    if let Some(v) = raw.num("expected", "class_delta")? {
        ex.class_delta = v;
    }
    if let Some(v) = raw.num("expected", "assumption_delta")? {
        ex.assumption_delta = Some(v);
    }
    match (raw.num("expected", "pe_m")?, raw.num("expected", "pe_t1")?) {
        (Some(m), Some(t1)) => {
            ex.pe = Some(PeExpectation {
                m,
                t1,
                epsilon: raw.num("expected", "pe_epsilon")?.unwrap_or(epsilon),
            })
        }
        (None, None) => {}
        _ => return Err(perr(first_line(raw, "expected"), "give both `pe_m` and `pe_t1`")),
    }
    Ok(())
}

fn first_line(raw: &RawConfig, section: &str) -> usize {
    raw.sections
        .get(section)
        .and_then(|m| m.values().map(|e| e.line).min())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_with_overrides() {
        let sc = parse_config("[plant]\nbuiltin = gauss1d\n[sim]\nt_end = 5\n[phi]\nk = 2\n").unwrap();
        assert_eq!(sc.closed_loop.sim.t_end, 5.0);
        assert_eq!(sc.closed_loop.phi.k, 2.0);
        assert!((sc.closed_loop.adapt.delta0 - 0.05).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("[plant]\nbuiltin = gauss1d\n\n[sim]\nspeed = 3\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 5,
                msg: "unknown key `speed` in [sim]".into()
            }
        );
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_config("[plant\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("k = 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_config("[plant]\nbuiltin gauss1d\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("[plant]\nbuiltin = nope\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("[plant]\nbuiltin = gauss1d\n[sim]\ndt = 1e-3x\n"),
            Err(Error::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn expression_plant_matches_builtin() {
        let text = "\
[plant]
name = bump
drift = exp(-(x0 - th0)^2)
input = 1
psi = x0
theta_true = 0.7
theta_lo = -2
theta_hi = 2
f_bound = 1
[sim]
x0 = 1.5
t_end = 2
";
        let sc = parse_config(text).unwrap();
        let b = lookup("gauss1d").unwrap();
        for x in [-1.0, 0.3, 2.0] {
            for th in [-1.5, 0.7] {
                let a = sc.closed_loop.plant.uncertainty(&[x], &[th]);
                let e = b.closed_loop.plant.uncertainty(&[x], &[th]);
                assert!((a - e).abs() < 1e-8, "{a} vs {e}");
            }
        }
        assert_eq!(sc.closed_loop.adapt.lambda.theta_lo, -2.0);
    }

    #[test]
    fn expression_footprint_checked() {
        let text =
            "[plant]\ndrift = x1\ninput = 1\npsi = x0\ntheta_true = 0\ntheta_lo = -1\ntheta_hi = 1\nf_bound = 1\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn step_validation_is_reported() {
        let err = parse_config("[plant]\nbuiltin = gauss1d\n[sim]\ndt = 0.1\nt_end = 0.05\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }
}
