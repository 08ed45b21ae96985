use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] wlmetric_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("missing file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{} is empty", .0.display())]
    EmptyFile(PathBuf),
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: index {index} outside 1..={max}", path.display())]
    IndexOutOfRange { path: PathBuf, line: usize, index: i64, max: usize },
    #[error("pair ({0}, {1}) failed: {2}")]
    Pair(usize, usize, #[source] wlmetric_core::Error),
    #[error("fold {fold} has no training example of class {class}")]
    DegenerateFold { fold: usize, class: i64 },
    #[error("{0}")]
    InvalidArgument(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            HarnessError::MissingFile(path)
        } else {
            HarnessError::Io { path, source }
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        HarnessError::Parse { path: path.into(), line, message: message.into() }
    }

    /// Process exit code: 3 for I/O failures, 2 for everything the input got wrong.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Io { .. } | HarnessError::MissingFile(_) => 3,
            _ => 2,
        }
    }
}
