use std::process::ExitCode;

fn main() -> ExitCode {
    fluxbalance::cli::main_from_args(std::env::args_os())
}
