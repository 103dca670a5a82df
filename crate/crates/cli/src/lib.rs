//! Helpers shared by the `segment` and `synthgen` binaries.

use std::process::ExitCode;

use cbseg::Error;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_IO: u8 = 2;

/// Maps an engine error to the process exit status: file and data problems
/// exit with 2, everything else with 1.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_io() || matches!(err, Error::DimensionMismatch { .. }) {
        EXIT_IO
    } else {
        EXIT_CONFIG
    }
}

/// Prints `err` to stderr and converts it to an exit status.
pub fn fail(program: &str, err: &Error) -> ExitCode {
    eprintln!("{program}: {err}");
    ExitCode::from(exit_code(err))
}

/// Parses command-line arguments, sending usage errors to exit status 1.
pub fn parse_args<T: clap::Parser>() -> Result<T, ExitCode> {
    T::try_parse().map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            ExitCode::from(EXIT_CONFIG)
        } else {
            ExitCode::SUCCESS
        }
    })
}
