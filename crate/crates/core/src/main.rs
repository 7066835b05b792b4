use std::process::ExitCode;

fn main() -> ExitCode {
    vortex_localize::cli::main_with(std::env::args_os())
}
