use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for tensor ops, layers, data loading and training.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible tensor shapes for an operation. Names both shapes.
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Operation called out of order, e.g. backward without a forward.
    #[error("invalid state: {0}")]
    State(String),

    /// Error raised inside a model layer, tagged with its position.
    #[error("layer {index} ({kind}): {source}")]
    AtLayer {
        index: usize,
        kind: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// A file whose header or structure is not what was expected.
    #[error("{}: format error: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    /// A file that declares more content than it holds, or holds garbage.
    #[error("{}: corrupt: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },

    /// Training produced a NaN/Inf loss; aborting is the only safe option.
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Self {
        Error::ShapeMismatch {
            op,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        }
    }

    pub(crate) fn at_layer(index: usize, kind: &'static str, source: Error) -> Self {
        Error::AtLayer {
            index,
            kind,
            source: Box::new(source),
        }
    }
}
