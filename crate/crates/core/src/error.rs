use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// A NaN or infinity showed up; the payload names where.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("class {0} has no labeled nodes")]
    EmptyClass(usize),

    #[error("label {0} has no prototype in the semantic table")]
    MissingPrototype(usize),

    #[error("no unlabeled candidate nodes available for expansion")]
    EmptyCandidatePool,
}

impl Error {
    pub(crate) fn dims(op: &'static str, detail: String) -> Self {
        Error::DimensionMismatch { op, detail }
    }

    /// True for failures caused by numeric breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
