use std::fmt;

/// Process exit status classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Usage = 1,
    Data = 2,
    Numeric = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { status: Status::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { status: Status::Data, message: message.into() }
    }

    pub fn context(mut self, prefix: impl fmt::Display) -> Self {
        self.message = format!("{prefix}: {}", self.message);
        self
    }

    pub fn code(&self) -> u8 {
        self.status as u8
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<cp3::Error> for CliError {
    fn from(e: cp3::Error) -> Self {
        let status = if e.is_numeric() {
            Status::Numeric
        } else if matches!(e, cp3::Error::InvalidScene(_)) {
            // A scene that fails validation is a configuration mistake.
            Status::Usage
        } else {
            Status::Data
        };
        CliError { status, message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a frame or file context to core errors.
pub trait Context<T> {
    fn context(self, prefix: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn context(self, prefix: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| e.into().context(prefix))
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}
