//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, configuration or validation error,
//! 2 goal set never entered (`simulate`) or excitation not satisfied
//! (`check-pe`), 3 numerical abort.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::adapt::{delta0_for_epsilon, Mutation};
use crate::analysis::{goal_radius, non_domination_sweep, run_sweep, SweepRow};
use crate::config::load_config;
use crate::error::Error;
use crate::excitation::class_members;
use crate::report::{abort_report, run_report};
use crate::scenarios::{lookup, registry, Scenario};
use crate::sim::{simulate, SimOutput};
use crate::suite::{pe_report, verify_scenario};
use crate::svg::{Band, Plot, Series};
use crate::trace::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_MET: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_ENV: &str = "FINFORM_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "finform",
    version,
    about = "Finite-form adaptive control: simulate, verify, sweep"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    K,
    Gamma,
    Delta0,
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    FlipThetaP,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trace.csv, report.txt, psi.svg and theta.svg.
    Simulate {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        scenario: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; overrides FINFORM_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Run the property suite and print one PASS/FAIL line per check.
    Verify {
        #[arg(long, conflicts_with_all = ["all", "config"], required_unless_present_any = ["all", "config"])]
        scenario: Option<String>,
        #[arg(long)]
        all: bool,
        #[arg(long, conflicts_with = "all")]
        config: Option<PathBuf>,
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutationArg>,
    },
    /// Run one scenario per value of a parameter and print a CSV table.
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        /// Also write the table to `<out>/sweep.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and test the windowed excitation condition on its trace.
    CheckPe {
        #[arg(long)]
        scenario: String,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long = "T1")]
        t1: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let env_out = std::env::var_os(OUT_ENV).map(PathBuf::from);
    match cli.command {
        Command::Simulate {
            scenario,
            config,
            out: dir,
            dt,
            t_end,
        } => cmd_simulate(
            scenario.as_deref(),
            config.as_deref(),
            dir.or(env_out),
            dt,
            t_end,
            out,
            err,
        ),
        Command::Verify {
            scenario,
            all,
            config,
            mutate,
        } => cmd_verify(scenario.as_deref(), all, config.as_deref(), mutate, out, err),
        Command::Sweep {
            scenario,
            param,
            values,
            out: dir,
        } => cmd_sweep(&scenario, param, &values, dir.or(env_out), out, err),
        Command::CheckPe {
            scenario,
            m,
            t1,
            epsilon,
        } => cmd_check_pe(&scenario, m, t1, epsilon, out, err),
    }
}

fn load(scenario: Option<&str>, config: Option<&Path>) -> Result<Scenario, Error> {
    match (scenario, config) {
        (_, Some(path)) => load_config(path),
        (Some(name), None) => lookup(name),
        (None, None) => Err(Error::invalid("either --scenario or --config is required")),
    }
}

/// Default output directory, unique per run.
fn default_out(name: &str) -> PathBuf {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    PathBuf::from("finform-runs").join(format!("{name}-{stamp}-{}", std::process::id()))
}

fn psi_plot(sc: &Scenario, trace: &Trace, radius: f64) -> Plot {
    Plot {
        title: format!("{}: |psi|", sc.name),
        x_label: "t".into(),
        y_label: "|psi|".into(),
        series: vec![Series {
            label: "|psi|".into(),
            points: trace.rows.iter().map(|r| (r.t, r.psi.abs())).collect(),
        }],
        bands: vec![Band {
            label: format!("goal set, radius {radius}"),
            lo: 0.0,
            hi: radius,
        }],
    }
}

fn theta_plot(sc: &Scenario, trace: &Trace) -> Plot {
    let cl = &sc.closed_loop;
    let e = &sc.expected;
    let d = cl.plant.param_dim;
    let members = class_members(&cl.plant, &cl.plant.theta_true, e.class_delta, &e.theta_grid, &e.x_grid);
    let members = if members.is_empty() {
        vec![cl.plant.theta_true.clone()]
    } else {
        members
    };
    let pad = e.pe.as_ref().map_or(0.0, |p| p.epsilon);
    let bands = (0..d)
        .map(|i| {
            let lo = members.iter().map(|m| m[i]).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|m| m[i]).fold(f64::NEG_INFINITY, f64::max);
            Band {
                label: format!("class of theta, component {i}"),
                lo: lo - pad,
                hi: hi + pad,
            }
        })
        .collect();
    Plot {
        title: format!("{}: parameter estimate", sc.name),
        x_label: "t".into(),
        y_label: "theta_hat".into(),
        series: (0..d)
            .map(|i| Series {
                label: format!("theta_hat{i}"),
                points: trace.rows.iter().map(|r| (r.t, r.theta_hat[i])).collect(),
            })
            .collect(),
        bands,
    }
}

fn write_outputs(dir: &Path, sc: &Scenario, trace: &Trace, report: &str, radius: f64) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = std::io::BufWriter::new(fs::File::create(dir.join("trace.csv"))?);
    trace.write_to(&mut w)?;
    w.flush()?;
    fs::write(dir.join("report.txt"), report)?;
    fs::write(dir.join("psi.svg"), psi_plot(sc, trace, radius).render())?;
    fs::write(dir.join("theta.svg"), theta_plot(sc, trace).render())?;
    Ok(())
}

pub fn cmd_simulate(
    scenario: Option<&str>,
    config: Option<&Path>,
    dir: Option<PathBuf>,
    dt: Option<f64>,
    t_end: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut sc = match load(scenario, config) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    if let Some(dt) = dt {
        sc.closed_loop.sim.dt = dt;
    }
    if let Some(t) = t_end {
        sc.closed_loop.sim.t_end = t;
    }
    if let Err(e) = sc.closed_loop.validate() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_ERROR;
    }
    let dir = dir.unwrap_or_else(|| default_out(&sc.name));
    let radius = sc.closed_loop.goal_radius();
    let (trace, report, code) = match simulate(&sc.closed_loop) {
        Ok(o) => {
            let code = if o.diagnostics.t_enter.is_some() {
                EXIT_OK
            } else {
                EXIT_NOT_MET
            };
            let rep = run_report(&sc, &o).render();
            (o.trace, rep, code)
        }
        Err(a) => {
            let t_last = a.trace.rows.last().map(|r| r.t);
            let rep = abort_report(&sc, &a.error, t_last).render();
            let _ = writeln!(err, "numerical abort: {}", a.error);
            (a.trace, rep, EXIT_ABORT)
        }
    };
    if let Err(e) = write_outputs(&dir, &sc, &trace, &report, radius) {
        let _ = writeln!(err, "error: cannot write {}: {e}", dir.display());
        return EXIT_ERROR;
    }
    let _ = write!(out, "{report}");
    if code == EXIT_NOT_MET {
        let _ = writeln!(err, "goal set of radius {radius} never entered for good");
    }
    let _ = writeln!(out, "wrote {}", dir.display());
    code
}

pub fn cmd_verify(
    scenario: Option<&str>,
    all: bool,
    config: Option<&Path>,
    mutate: Option<MutationArg>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let scenarios = if all {
        registry()
    } else {
        match load(scenario, config) {
            Ok(s) => vec![s],
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_ERROR;
            }
        }
    };
    let mut failed = 0usize;
    for mut sc in scenarios {
        if let Some(MutationArg::FlipThetaP) = mutate {
            sc.closed_loop.adapt.mutation = Some(Mutation::FlipThetaPSign);
        }
        let _ = writeln!(out, "== {}", sc.name);
        for c in verify_scenario(&sc) {
            failed += usize::from(!c.pass);
            let _ = writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if failed == 0 {
        EXIT_OK
    } else {
        let _ = writeln!(out, "{failed} check(s) failed");
        EXIT_NOT_MET
    }
}

fn param_name(p: SweepParam) -> &'static str {
    match p {
        SweepParam::K => "k",
        SweepParam::Gamma => "gamma",
        SweepParam::Delta0 => "delta0",
        SweepParam::Epsilon => "epsilon",
    }
}

pub fn sweep_rows(sc: &Scenario, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>, Error> {
    if values.is_empty() {
        return Err(Error::invalid("empty value list"));
    }
    let base = &sc.closed_loop;
    if param == SweepParam::K {
        return non_domination_sweep(base, sc.expected.epsilon, values);
    }
    let runs = values
        .iter()
        .map(|&v| {
            let mut cl = base.clone();
            let k = cl.phi.k;
            let delta = cl.adapt.disturbance_bound;
            match param {
                SweepParam::Gamma => cl.adapt.gamma = v,
                SweepParam::Delta0 => {
                    cl.adapt.delta0 = v;
                    cl.sim.goal_radius = Some(4.0 * v / k + delta / k);
                }
                SweepParam::Epsilon => {
                    cl.adapt.delta0 = delta0_for_epsilon(k, v);
                    cl.sim.goal_radius = Some(goal_radius(v, k, delta));
                }
                SweepParam::K => unreachable!(),
            }
            cl.validate()?;
            Ok(cl)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    run_sweep(&runs, values)
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut s = String::from("param,value,reached,t_enter,sup_u,sup_f,sup_psi,bound_ok,events\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            param_name(param),
            r.value,
            r.reached,
            r.t_enter.map_or("none".to_string(), |t| t.to_string()),
            r.sup_u,
            r.sup_f,
            r.sup_psi,
            r.bound_ok,
            r.events
        ));
    }
    s
}

pub fn cmd_sweep(
    scenario: &str,
    param: SweepParam,
    values: &[f64],
    dir: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let sc = match lookup(scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let rows = match sweep_rows(&sc, param, values) {
        Ok(r) => r,
        Err(e @ (Error::InvalidConfig(_) | Error::Parse { .. })) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
        Err(e) => {
            let _ = writeln!(err, "numerical abort: {e}");
            return EXIT_ABORT;
        }
    };
    let csv = sweep_csv(param, &rows);
    if let Some(dir) = dir {
        if let Err(e) = fs::create_dir_all(&dir).and_then(|_| fs::write(dir.join("sweep.csv"), &csv)) {
            let _ = writeln!(err, "error: cannot write {}: {e}", dir.display());
            return EXIT_ERROR;
        }
    }
    let _ = write!(out, "{csv}");
    EXIT_OK
}

fn run_or_abort(sc: &Scenario, err: &mut dyn Write) -> Result<SimOutput, i32> {
    simulate(&sc.closed_loop).map_err(|a| {
        let _ = writeln!(err, "numerical abort: {}", a.error);
        EXIT_ABORT
    })
}

pub fn cmd_check_pe(
    scenario: &str,
    m: Option<f64>,
    t1: Option<f64>,
    epsilon: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let sc = match lookup(scenario) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let pe = sc.expected.pe.as_ref();
    let (Some(m), Some(t1), Some(epsilon)) = (
        m.or(pe.map(|p| p.m)),
        t1.or(pe.map(|p| p.t1)),
        epsilon.or(pe.map(|p| p.epsilon)),
    ) else {
        let _ = writeln!(
            err,
            "error: scenario `{scenario}` has no excitation defaults; pass --M, --T1 and --epsilon"
        );
        return EXIT_ERROR;
    };
    let o = match run_or_abort(&sc, err) {
        Ok(o) => o,
        Err(code) => return code,
    };
    let rep = match pe_report(&sc, &o, m, t1, epsilon) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let _ = writeln!(out, "scenario = {}", sc.name);
    let _ = writeln!(out, "M = {m}, T1 = {t1}, epsilon = {epsilon}");
    let _ = writeln!(out, "candidates = {}, windows = {}", rep.candidates, rep.windows);
    let _ = writeln!(out, "min_window_max = {}", rep.min_window_max);
    let _ = writeln!(out, "margin = {}", rep.margin);
    let _ = writeln!(
        out,
        "worst_theta_hat = {:?} at window {:?}",
        rep.worst_theta_hat, rep.worst_window
    );
    let _ = writeln!(
        out,
        "verdict = {}",
        if rep.satisfied { "satisfied" } else { "not satisfied" }
    );
    if rep.satisfied {
        EXIT_OK
    } else {
        EXIT_NOT_MET
    }
}
