use std::path::PathBuf;

use thiserror::Error;

/// Faults raised while building parameters or advancing a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Fault {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("spring over-deflected at t = {t:.6} s: deflection {delta_l:.6} rad exceeds the {limit:.6} rad limit")]
    Overdeflection { t: f64, delta_l: f64, limit: f64 },

    #[error("non-finite state at t = {t:.6} s")]
    NonFinite { t: f64 },

    #[error("scripted torque queried at t = {t} s outside table range [{start}, {end}]")]
    ScriptedTorqueOutOfRange { t: f64, start: f64, end: f64 },

    #[error("no static equilibrium within the deflection range around q_eq = {q_eq:.6} rad")]
    NoStaticEquilibrium { q_eq: f64 },

    #[error("{what} did not complete within {limit} s")]
    Timeout { what: &'static str, limit: f64 },

    #[error("invalid scenario: {0}")]
    Script(String),

    #[error("phase {index} ({phase}): {source}")]
    Phase {
        index: usize,
        phase: String,
        #[source]
        source: Box<Fault>,
    },
}

/// Errors raised while loading configuration or scenario files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Params(#[from] Fault),
}
