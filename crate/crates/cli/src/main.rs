use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(banditlb_cli::run(std::env::args_os()))
}
