//! JSON document formats and the command implementations behind the
//! `monodromy` binary.

pub mod codec;
mod commands;
pub mod doc;
mod error;

pub use commands::{read_input, run, Cli, Command, Common, ModeArg, Outcome};
pub use doc::{canonical, Envelope, Kind, FORMAT_VERSION};
pub use error::{CliError, CliResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_UNDETERMINED: i32 = 4;

/// Report document for a failed command.
pub fn error_document(err: &CliError) -> Envelope {
    Envelope::new(
        Kind::Report,
        serde_json::json!({
            "error": { "reason": err.reason(), "message": err.to_string() },
        }),
    )
}
