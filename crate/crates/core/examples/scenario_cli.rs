//! Drives the command-line front end on a shipped scenario, as the
//! `geoaction` binary would: `cargo run --example scenario_cli -- verify`.

use std::process::ExitCode;

fn main() -> ExitCode {
    let command = std::env::args().nth(1).unwrap_or_else(|| "verify".into());
    let scenario = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/double_well.toml");
    geoaction::cli::main_with_args(["geoaction", &command, "--scenario", scenario])
}
