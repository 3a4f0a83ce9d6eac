// Validation guards are written `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod emit;

use clap::Parser;

fn main() {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() {
                commands::EXIT_CONFIG
            } else {
                commands::EXIT_OK
            };
            std::process::exit(code);
        }
    };
    std::process::exit(commands::dispatch(cli));
}
