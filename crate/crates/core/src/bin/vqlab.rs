use std::process::ExitCode;

fn main() -> ExitCode {
    vqlab::cli::main_with_args(std::env::args_os())
}
