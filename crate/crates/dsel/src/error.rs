use std::fmt;

/// Invalid or unreadable configuration (exit code 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub msg: String,
}

impl ConfigError {
    pub fn plain(msg: String) -> Self {
        Self {
            line: None,
            field: None,
            msg,
        }
    }

    pub fn at(line: usize, msg: String) -> Self {
        Self {
            line: Some(line),
            field: None,
            msg,
        }
    }

    pub fn field(line: usize, field: &str, msg: String) -> Self {
        Self {
            line: Some(line),
            field: Some(field.to_string()),
            msg,
        }
    }

    pub fn named(field: &str, msg: String) -> Self {
        Self {
            line: None,
            field: Some(field.to_string()),
            msg,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.msg)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] dsel_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// Process exit code: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            _ => 2,
        }
    }
}
