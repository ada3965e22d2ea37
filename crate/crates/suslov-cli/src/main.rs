use std::process::ExitCode;

fn main() -> ExitCode {
    suslov_cli::run()
}
