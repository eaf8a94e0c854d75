//! Run record and its text format.
//!
//! ```text
//! # finform-trace v1
//! t,x0,...,psi,psi_dot_true,u,alpha,theta0,theta_hat0,...,S_delta,theta_I,C_theta,event_flag
//! # event ENTER t=1.2345
//! ...
//! ```
//! Floats are written in shortest round-trip form, so parsing a written
//! trace reproduces it bit for bit.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::adapt::{SwitchEvent, SwitchKind};
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "# finform-trace v1";

pub const FLAG_ENTER: u8 = 1;
pub const FLAG_LEAVE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub psi: f64,
    pub psi_dot_true: f64,
    pub u: f64,
    pub alpha: f64,
    pub theta0: f64,
    pub theta_hat: Vec<f64>,
    pub s_delta: u8,
    pub theta_i: f64,
    pub c_theta: f64,
    /// Bit 1: ENTER since the previous row, bit 2: LEAVE since the previous row.
    pub event_flag: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub state_dim: usize,
    pub param_dim: usize,
    pub rows: Vec<TraceRow>,
    pub events: Vec<SwitchEvent>,
}

impl Trace {
    pub fn new(state_dim: usize, param_dim: usize) -> Self {
        Trace {
            state_dim,
            param_dim,
            rows: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        let mut c = vec!["t".to_string()];
        c.extend((0..self.state_dim).map(|i| format!("x{i}")));
        c.extend(["psi", "psi_dot_true", "u", "alpha", "theta0"].map(String::from));
        c.extend((0..self.param_dim).map(|i| format!("theta_hat{i}")));
        c.extend(["S_delta", "theta_I", "C_theta", "event_flag"].map(String::from));
        c
    }

    pub fn duration(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        writeln!(w, "{}", self.columns().join(","))?;
        let mut ev = self.events.iter().peekable();
        let mut line = String::new();
        for row in &self.rows {
            while let Some(e) = ev.next_if(|e| e.t <= row.t) {
                writeln!(w, "# event {} t={}", e.kind.label(), e.t)?;
            }
            line.clear();
            let _ = write!(line, "{}", row.t);
            for v in &row.x {
                let _ = write!(line, ",{v}");
            }
            let _ = write!(
                line,
                ",{},{},{},{},{}",
                row.psi, row.psi_dot_true, row.u, row.alpha, row.theta0
            );
            for v in &row.theta_hat {
                let _ = write!(line, ",{v}");
            }
            let _ = write!(
                line,
                ",{},{},{},{}",
                row.s_delta, row.theta_i, row.c_theta, row.event_flag
            );
            writeln!(w, "{line}")?;
        }
        for e in ev {
            writeln!(w, "# event {} t={}", e.kind.label(), e.t)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_from(r: impl BufRead) -> Result<Trace> {
        let mut lines = r.lines().enumerate();
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let next = |lines: &mut std::iter::Enumerate<io::Lines<_>>| -> Result<Option<(usize, String)>> {
            match lines.next() {
                None => Ok(None),
                Some((i, Ok(s))) => Ok(Some((i + 1, s))),
                Some((i, Err(e))) => Err(perr(i + 1, e.to_string())),
            }
        };
        match next(&mut lines)? {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => return Err(perr(1, format!("expected `{TRACE_HEADER}`"))),
        }
        let (_, cols) = next(&mut lines)?.ok_or_else(|| perr(2, "missing column line".into()))?;
        let cols: Vec<&str> = cols.trim().split(',').collect();
        let n = cols.iter().filter(|c| is_indexed(c, "x")).count();
        let d = cols.iter().filter(|c| is_indexed(c, "theta_hat")).count();
        let mut trace = Trace::new(n, d);
        let expected = trace.columns();
        if cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(perr(2, format!("unexpected columns; expected {}", expected.join(","))));
        }
        while let Some((ln, line)) = next(&mut lines)? {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                trace.events.push(parse_event(rest.trim()).map_err(|m| perr(ln, m))?);
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|e| perr(ln, format!("bad number `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != expected.len() {
                return Err(perr(
                    ln,
                    format!("expected {} fields, got {}", expected.len(), vals.len()),
                ));
            }
            let mut it = vals.into_iter();
            let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
            let t = take(1)[0];
            let x = take(n);
            let m = take(5);
            let theta_hat = take(d);
            let tail = take(4);
            let row = TraceRow {
                t,
                x,
                psi: m[0],
                psi_dot_true: m[1],
                u: m[2],
                alpha: m[3],
                theta0: m[4],
                theta_hat,
                s_delta: flag(tail[0], ln)?,
                theta_i: tail[1],
                c_theta: tail[2],
                event_flag: flag(tail[3], ln)?,
            };
            if let Some(prev) = trace.rows.last() {
                if !(row.t > prev.t) {
                    return Err(perr(ln, "time column not strictly increasing".into()));
                }
            }
            trace.rows.push(row);
        }
        Ok(trace)
    }

    pub fn parse_str(s: &str) -> Result<Trace> {
        Self::read_from(s.as_bytes())
    }
}

fn is_indexed(col: &str, prefix: &str) -> bool {
    col.strip_prefix(prefix)
        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
}

fn flag(v: f64, line: usize) -> Result<u8> {
    if v.fract() == 0.0 && (0.0..=3.0).contains(&v) {
        Ok(v as u8)
    } else {
        Err(Error::Parse {
            line,
            msg: format!("flag value {v} out of range"),
        })
    }
}

fn parse_event(s: &str) -> std::result::Result<SwitchEvent, String> {
    let rest = s
        .strip_prefix("event ")
        .ok_or_else(|| format!("unknown comment `{s}`"))?;
    let (kind, t) = rest.split_once(" t=").ok_or("event needs `KIND t=<time>`")?;
    let kind = match kind {
        "ENTER" => SwitchKind::Enter,
        "LEAVE" => SwitchKind::Leave,
        other => return Err(format!("unknown event kind `{other}`")),
    };
    let t = t.parse::<f64>().map_err(|e| e.to_string())?;
    Ok(SwitchEvent { t, kind })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trace {
        let mut tr = Trace::new(1, 1);
        for i in 0..4 {
            tr.rows.push(TraceRow {
                t: i as f64 * 0.1,
                x: vec![1.0 / (i as f64 + 3.0)],
                psi: 0.1 * i as f64,
                psi_dot_true: -0.3,
                u: 2.0e-9,
                alpha: f64::MIN_POSITIVE,
                theta0: 1.0 / 7.0,
                theta_hat: vec![0.25],
                s_delta: (i % 2) as u8,
                theta_i: -0.0,
                c_theta: 3.5,
                event_flag: if i == 2 { FLAG_LEAVE } else { 0 },
            });
        }
        tr.events.push(SwitchEvent {
            t: 0.15000000000000002,
            kind: SwitchKind::Leave,
        });
        tr
    }

    #[test]
    fn round_trip_is_exact() {
        let tr = sample();
        let s = tr.to_csv_string();
        assert!(s.starts_with(TRACE_HEADER));
        assert!(s.contains("# event LEAVE t=0.15000000000000002"));
        let back = Trace::parse_str(&s).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Trace::parse_str("t,x0\n").is_err());
        let s = sample().to_csv_string().replace(",3.5,", ",abc,");
        assert!(matches!(Trace::parse_str(&s), Err(Error::Parse { .. })));
    }

    #[test]
    fn column_layout() {
        let tr = Trace::new(2, 2);
        assert_eq!(
            tr.columns().join(","),
            "t,x0,x1,psi,psi_dot_true,u,alpha,theta0,theta_hat0,theta_hat1,S_delta,theta_I,C_theta,event_flag"
        );
    }
}
