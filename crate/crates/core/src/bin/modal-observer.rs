use std::process::ExitCode;

fn main() -> ExitCode {
    modal_observer::cli::main_with(std::env::args_os())
}
