use std::process::ExitCode;

use adfilter_cli::CliError;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    match adfilter_cli::run(std::env::args_os(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = err.exit_code() as u8;
            match err {
                CliError::Usage(e) => {
                    let _ = e.print();
                }
                other => eprintln!("adfilter: {other}"),
            }
            ExitCode::from(code)
        }
    }
}
