use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(nearherm_cli::app::run_cli(std::env::args_os()))
}
