//! Command implementations and the HTTP service behind the `glyphctl`
//! binary.

pub mod args;
pub mod commands;
pub mod server;

use std::fmt;
use std::path::Path;

/// Process exit status. The set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Status {
    Ok = 0,
    /// Unreadable input or unwritable output.
    Io = 1,
    /// Instructions or arguments that fail parsing or validation.
    Invalid = 2,
    /// Input data that is malformed or inconsistent with its companions.
    Data = 3,
}

/// A failed command: the exit status and a one-line explanation.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            status: Status::Io,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            status: Status::Invalid,
            message: message.into(),
        }
    }

    pub fn data(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            status: Status::Data,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CmdResult = Result<(), Failure>;
