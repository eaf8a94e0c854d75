//! Plain-text run reports: one `key = value` line per metric.
//!
//! Floats use shortest round-trip formatting, so [`parse_report`] recovers
//! the in-memory diagnostics exactly.

use std::collections::BTreeMap;

use crate::analysis::{differential_form_oracle, dwell_in_radius};
use crate::error::{Error, Result};
use crate::scenarios::Scenario;
use crate::sim::SimOutput;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_opt(&mut self, key: &str, value: Option<f64>) {
        self.push(key, value.map_or("none".to_string(), |v| v.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# finform run report\n");
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Report for a completed run of `sc`.
pub fn run_report(sc: &Scenario, out: &SimOutput) -> Report {
    let cl = &sc.closed_loop;
    let d = &out.diagnostics;
    let mut r = Report::default();
    r.push("scenario", &sc.name);
    r.push("status", "completed");
    r.push("steps", d.steps);
    r.push("dt", cl.sim.dt);
    r.push("t_end", cl.sim.t_end);
    r.push("k", cl.phi.k);
    r.push("gamma", cl.adapt.gamma);
    r.push("delta0", cl.adapt.delta0);
    r.push("disturbance_bound", cl.adapt.disturbance_bound);
    r.push("goal_radius", d.goal_radius);
    r.push_opt("t_enter", d.t_enter);
    let dwell = dwell_in_radius(&out.trace, d.goal_radius);
    r.push_opt("first_entry", dwell.first_entry);
    r.push("exits_after_first_entry", dwell.exits);
    r.push("event_count", d.event_count);
    r.push("sup_x", d.sup_x);
    r.push("sup_u", d.sup_u);
    r.push("sup_abs_theta0", d.sup_abs_theta0);
    r.push("transient_end", d.transient_end);
    r.push("monotonicity_violations", d.monotonicity_violations);
    r.push("max_theta0_drop", d.max_theta0_drop);
    r.push("max_event_jump", d.max_event_jump);
    r.push("max_error_model_gap", d.max_error_model_gap);
    r.push(
        "oracle_sup_diff",
        differential_form_oracle(&out.trace, &cl.adapt, &cl.phi).sup_diff,
    );
    if let Some(last) = out.trace.rows.last() {
        r.push("final_psi", last.psi);
        r.push("final_theta0", last.theta0);
        r.push("final_theta_hat", list(&last.theta_hat));
    }
    r.push("theta_true", list(&cl.plant.theta_true));
    r
}

/// Report for a run that stopped early.
pub fn abort_report(sc: &Scenario, error: &Error, t_last: Option<f64>) -> Report {
    let mut r = Report::default();
    r.push("scenario", &sc.name);
    r.push("status", "aborted");
    r.push("error", error);
    r.push_opt("t_last", t_last);
    r
}

pub fn parse_report(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once(" = ").ok_or(Error::Parse {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}
