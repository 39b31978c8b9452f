use thiserror::Error;

use crate::seq::Flip;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("flip [{c},{d}] is outside the domain [{lo},{hi}]")]
    Range { c: i64, d: i64, lo: i64, hi: i64 },

    #[error("contract violated: {0}")]
    Contract(String),

    /// A procedure tried to emit a flip that is not valid in the current state.
    /// `context` is the annotation stack at the time, outermost first.
    #[error("construction bug in [{}]: {reason}{}", context.join(" > "), flip.map(|f| format!(" (flip {f})")).unwrap_or_default())]
    Construction {
        context: Vec<String>,
        flip: Option<Flip>,
        reason: String,
    },

    #[error("refused: {0}")]
    Refused(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
