use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(dgapost_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("vtk error: {0}")]
    Vtk(String),
    #[error("{0} self-check(s) failed")]
    Check(usize),
}

impl Error {
    /// Process exit code: 2 for configuration errors, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Solver(_) => 3,
            Error::Io(_) | Error::Csv(_) | Error::Vtk(_) | Error::Check(_) => 1,
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
