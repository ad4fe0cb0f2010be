use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let result = twotime_cli::run_command(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(u8::try_from(result.exit_code).unwrap_or(1))
}
