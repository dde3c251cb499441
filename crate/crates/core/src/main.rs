use std::panic;
use std::process::ExitCode;

use clap::Parser;
use framecut::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = panic::catch_unwind(|| run(cli, &mut std::io::stdout().lock()));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        // assertion failures inside the solvers are invariant violations
        Err(_) => ExitCode::from(3),
    }
}
