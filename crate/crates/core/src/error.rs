use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An intermediate or final magnitude left the representable f64 range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Newton refinement did not converge from the given seed.
    #[error("root refinement did not converge from seed {seed_re}{seed_im:+}i: {reason}")]
    Convergence {
        seed_re: f64,
        seed_im: f64,
        reason: String,
    },

    /// The argument-principle count disagrees with the number of accepted roots.
    #[error("missed roots for l={l}: contour count {expected}, accepted {found}")]
    MissedRoot { l: u32, expected: i64, found: usize },

    /// A query fell outside the band covered by a mode table.
    #[error("out of range: {0}")]
    Range(String),

    /// The emitter/cavity pair is strongly coupled; the Markovian rate is invalid.
    #[error("strong coupling (margin {margin:.3e}): the weak-coupling rate does not apply")]
    Regime { margin: f64 },

    /// Malformed table or curve data.
    #[error("invalid data: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(e.to_string())
    }
}
