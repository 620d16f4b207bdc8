use std::process::ExitCode;

fn main() -> ExitCode {
    tabletop_lfd::cli::main_with_args(std::env::args_os())
}
