use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let result = waylab::cli::run(std::env::args_os());
    let text = result.summary.trim_end();
    // a closed pipe is not worth a panic
    let _ = if result.exit_code == 0 {
        writeln!(std::io::stdout(), "{text}")
    } else {
        writeln!(std::io::stderr(), "{text}")
    };
    ExitCode::from(result.exit_code as u8)
}
