use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented invariant (bad parameters, bad config).
    #[error("config error: {0}")]
    Config(String),

    /// A value is outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The membrane potential left the finite range during integration.
    #[error("numerical blow-up at t={time} ms (neuron {neuron}, node {node}): V={value}")]
    BlowUp {
        time: f64,
        neuron: usize,
        node: usize,
        value: f64,
    },

    /// The two ends of a bifurcation sweep do not carry the required labels.
    #[error("bracket error: expected stationary at I0={lo} and periodic at I0={hi}, got {lo_label} and {hi_label}")]
    Bracket {
        lo: f64,
        hi: f64,
        lo_label: String,
        hi_label: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
