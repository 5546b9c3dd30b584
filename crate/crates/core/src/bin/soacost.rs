//! Binary entry point; all behavior lives in the library's `cli` module.

use std::env;
use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(soa_cost::cli::run(env::args_os()))
}
