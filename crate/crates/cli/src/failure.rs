use std::fmt;

use steerdial_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    Model,
    Service,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 2,
            Kind::Data => 3,
            Kind::Model => 4,
            Kind::Service => 5,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Kind::Usage => "usage",
            Kind::Data => "data",
            Kind::Model => "model",
            Kind::Service => "service",
        }
    }
}

/// A command failure, printed as one `error[<code>]: <message>` line.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Kind::Usage, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(Kind::Data, message)
    }

    pub fn model(message: impl Into<String>) -> Self {
        Self::new(Kind::Model, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {}", self.kind.code(), one_line)
    }
}

fn kind_of(e: &Error) -> Kind {
    match e {
        Error::Config(_) => Kind::Usage,
        Error::Service(_) => Kind::Service,
        Error::Diverged { .. } | Error::Format(_) | Error::ConfigMismatch(_) => Kind::Model,
        Error::InDialogue { source, .. } => kind_of(source),
        _ => Kind::Data,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(kind_of(&e), e.to_string())
    }
}
