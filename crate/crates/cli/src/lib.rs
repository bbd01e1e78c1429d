//! Command-line front end for `teamlq`: JSON problem documents in, solver
//! reports out.
//!
//! | exit code | meaning |
//! |-----------|---------|
//! | 0 | optimal or feasible |
//! | 2 | infeasible or undetermined |
//! | 3 | input error |
//! | 4 | numerical failure |

pub mod commands;
pub mod error;
pub mod report;
pub mod schema;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::Cli;
pub use error::{CliError, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};

/// Parses `argv` (program name first), runs the command and returns its
/// exit code. Reports go to `out` unless `--out` is given; diagnostics go
/// to standard error.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Installs the logger, reading the level from `TEAMLQ_LOG`.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("TEAMLQ_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
