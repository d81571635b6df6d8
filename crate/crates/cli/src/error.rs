use std::fmt;

/// Failure classes of the command-line tool, each with its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Io,
    Config,
    Data,
    Divergence,
    NotConverged,
    GradcheckFailed,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Io => 1,
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Divergence => 4,
            Kind::NotConverged => 5,
            Kind::GradcheckFailed => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Io => "io",
            Kind::Config => "config",
            Kind::Data => "data",
            Kind::Divergence => "divergence",
            Kind::NotConverged => "not-converged",
            Kind::GradcheckFailed => "gradcheck-failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Kind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(Kind::Data, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(Kind::Io, message)
    }

    /// `error[<kind>]: <message>` on one line.
    pub fn diagnostic(&self) -> String {
        let flat: String = self
            .message
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        format!("error[{}]: {}", self.kind.name(), flat)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.diagnostic())
    }
}

impl std::error::Error for CliError {}

impl From<maxent_cluster::Error> for CliError {
    fn from(e: maxent_cluster::Error) -> Self {
        use maxent_cluster::Error as E;
        let kind = match &e {
            E::Config { .. } => Kind::Config,
            E::Input(_) | E::Parse { .. } | E::Validation(_) | E::Model { .. } | E::Csv(_) => {
                Kind::Data
            }
            E::Divergence { .. } => Kind::Divergence,
            E::Io { .. } => Kind::Io,
        };
        CliError::new(kind, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
