use thiserror::Error;

use crate::adapt::SwitchKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular control direction at x = {x:?}: |L_g psi| = {lg_psi:.3e} < floor {floor:.3e}")]
    SingularControlDirection { x: Vec<f64>, lg_psi: f64, floor: f64 },

    #[error("switching events out of order: two consecutive {0:?} events")]
    EventOrderViolation(SwitchKind),

    #[error("event function does not change sign on [{t_lo}, {t_hi}]")]
    NoSignChange { t_lo: f64, t_hi: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("degenerate grid: all curve points coincide")]
    DegenerateGrid,

    #[error("trace too short: need {needed} time units, have {available}")]
    InsufficientTrace { needed: f64, available: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
