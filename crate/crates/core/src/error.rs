use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller supplied something outside an operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Relative gain against a zero single-task score.
    #[error("relative gain undefined: single-task F1 is zero")]
    UndefinedGain,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    /// A grid job failed; `job` names the task or pair.
    #[error("{job}: {source}")]
    Job {
        job: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attaches the file the error arose in.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
