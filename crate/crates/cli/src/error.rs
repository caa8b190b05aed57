use std::fmt;
use std::path::Path;

/// Exit classes: configuration and IO problems exit with 2, numerical
/// failures inside a run exit with 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Io,
    Module,
}

#[derive(Debug)]
pub struct AppError {
    pub kind: Kind,
    pub message: String,
}

impl AppError {
    pub fn config_msg(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, message: message.into() }
    }

    /// Input-validation errors from the core map to configuration errors,
    /// everything else is a module failure.
    pub fn config(e: zs_core::Error) -> Self {
        Self::from(e)
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self { kind: Kind::Io, message: format!("{}: {e}", path.display()) }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Config | Kind::Io => 2,
            Kind::Module => 1,
        }
    }
}

impl From<zs_core::Error> for AppError {
    fn from(e: zs_core::Error) -> Self {
        use zs_core::Error as E;
        let kind = match e {
            E::InvalidParameter(_)
            | E::RhoOutOfRange { .. }
            | E::OrderNegative { .. }
            | E::InvalidFamily(_)
            | E::DimensionMismatch(_)
            | E::UnknownSuite(_)
            | E::InsufficientSpectrum { .. }
            | E::NotUnitNormal { .. } => Kind::Config,
            _ => Kind::Module,
        };
        Self { kind, message: e.to_string() }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Config => "configuration error",
            Kind::Io => "io error",
            Kind::Module => "error",
        };
        write!(f, "{label}: {}", self.message)
    }
}

impl std::error::Error for AppError {}
