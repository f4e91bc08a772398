//! Process exit codes and the error type that carries them.

use std::fmt;
use std::process::ExitCode;

use ensep::solver::Outcome;

pub const SEPARABLE: u8 = 0;
pub const ENTANGLED: u8 = 1;
pub const INCONCLUSIVE: u8 = 2;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
pub const NO_INPUT: u8 = 66;
pub const CANT_CREATE: u8 = 73;
pub const IO: u8 = 74;

pub fn outcome_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::SeparableWithinKappa => SEPARABLE,
        Outcome::EntangledSignal => ENTANGLED,
        Outcome::Inconclusive => INCONCLUSIVE,
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    NoInput(String),
    CantCreate(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => USAGE,
            Self::Data(_) => DATA,
            Self::NoInput(_) => NO_INPUT,
            Self::CantCreate(_) => CANT_CREATE,
            Self::Io(_) => IO,
        }
    }

    pub fn data(e: ensep::Error) -> Self {
        Self::Data(e.to_string())
    }

    pub fn io(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }

    pub fn context(self, prefix: &str) -> Self {
        let wrap = |m: String| format!("{prefix}: {m}");
        match self {
            Self::Usage(m) => Self::Usage(wrap(m)),
            Self::Data(m) => Self::Data(wrap(m)),
            Self::NoInput(m) => Self::NoInput(wrap(m)),
            Self::CantCreate(m) => Self::CantCreate(wrap(m)),
            Self::Io(m) => Self::Io(wrap(m)),
        }
    }

    pub fn exit(&self) -> ExitCode {
        eprintln!("ensep: {self}");
        ExitCode::from(self.code())
    }
}

impl From<ensep::Error> for CliError {
    fn from(e: ensep::Error) -> Self {
        match e {
            ensep::Error::InvalidArgument(m) => Self::Usage(m),
            ensep::Error::Sink(e) => Self::io(e),
            other => Self::data(other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::NoInput(m) | Self::CantCreate(m) | Self::Io(m) => f.write_str(m),
        }
    }
}
