use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    match pfdist::cli::run(std::env::args_os(), &mut stdout.lock()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
