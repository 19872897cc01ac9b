//! Scenario files, result emission and the verification suite behind the
//! `retroimaging` binary.

pub mod config;
pub mod output;
pub mod verify;

use crate::error::Error;

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::DarkConditional { .. } => 2,
        // A sweep is dark only if every failing position was dark.
        Error::Sweep(failures) if failures.iter().all(|(_, e)| exit_code(e) == 2) => 2,
        _ => 1,
    }
}

/// Exit code when `verify` finds a discrepancy.
pub const EXIT_VERIFICATION_FAILED: u8 = 3;
