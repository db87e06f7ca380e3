use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nagi_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: parse error at line {line}, column {column} (byte {offset}): {message}")]
    Parse { path: PathBuf, line: usize, column: usize, offset: usize, message: String },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Maps a JSON error on `text` to a located parse error.
    pub fn json(path: &Path, text: &str, e: serde_json::Error) -> Self {
        let (line, column) = (e.line(), e.column());
        let offset = text
            .split_inclusive('\n')
            .take(line.saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + column.saturating_sub(1);
        CliError::Parse { path: path.to_path_buf(), line, column, offset: offset.min(text.len()), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Core(nagi_core::Error::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}
