use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A rational, linear form, or tuple literal failed to parse. `pos` is a
    /// byte offset into the input.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A reduction loop exceeded its step budget. Both reductions are proven
    /// to terminate, so hitting this means a bug, not a hard input.
    #[error("iteration cap of {limit} steps exceeded")]
    IterationCap { limit: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no real root of {poly} in [{lo}, {hi}]")]
    NoRoot {
        poly: String,
        lo: String,
        hi: String,
    },
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }

    /// Shift the position of a parse error by `offset`; other variants pass
    /// through unchanged.
    pub fn offset(self, offset: usize) -> Self {
        match self {
            Error::Parse { pos, msg } => Error::Parse {
                pos: pos + offset,
                msg,
            },
            e => e,
        }
    }
}
