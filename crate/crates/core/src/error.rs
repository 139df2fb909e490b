use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} index {index} out of range (extent {extent})")]
    Range {
        what: &'static str,
        index: i64,
        extent: usize,
    },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("affine is singular or not finite")]
    DegenerateAffine,
    #[error("orientation is ambiguous: {0}")]
    DegenerateOrientation(String),
    #[error("slice must be at least 3x3, got {width}x{height}")]
    SliceTooSmall { width: usize, height: usize },
    #[error("intensity distribution has fewer than two distinct levels")]
    UnimodalInput,
    #[error("extraction produced an empty mask; try a lower threshold offset")]
    EmptyExtraction,
    #[error("label {label} is absent from endpoint slice {index}")]
    EmptyEndpoint { label: u16, index: usize },
    #[error("no slices strictly between {a} and {b}")]
    NothingToFill { a: usize, b: usize },
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("nothing to {0}")]
    EmptyHistory(&'static str),
}

impl Error {
    pub(crate) fn range(what: &'static str, index: i64, extent: usize) -> Self {
        Error::Range {
            what,
            index,
            extent,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
