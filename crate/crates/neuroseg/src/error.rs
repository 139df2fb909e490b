use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] neuroseg_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported NIfTI datatype code {0} (supported: 2 uint8, 4 int16, 8 int32, 16 float32, 64 float64, 512 uint16)")]
    UnsupportedDtype(i16),
    #[error("unsupported NRRD encoding {0:?} (supported: raw, gzip)")]
    UnsupportedEncoding(String),
    #[error("truncated data: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("source volume {sha256} not found at {path:?}; re-save the project with embedded volumes or restore the file")]
    MissingVolume { sha256: String, path: Option<PathBuf> },
    #[error("corrupt project archive: {0}")]
    CorruptArchive(String),
    #[error("project format version {found} is newer than supported version {supported}")]
    Version { found: u32, supported: u32 },
    #[error("integrity check failed for archive member {0}")]
    Integrity(String),
    #[error("no slot {slot} (session has {slots})")]
    NoSlot { slot: usize, slots: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
