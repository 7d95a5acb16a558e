use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(grafdict::cli::run(std::env::args_os()))
}
