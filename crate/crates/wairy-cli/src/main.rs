use clap::Parser;
use wairy_cli::commands::{run, Cli, CliError};

fn main() {
    let cli = Cli::parse();
    let output = cli.output.clone();
    match run(cli) {
        Ok(outcome) => {
            match output {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, outcome.body.as_bytes()) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        std::process::exit(3);
                    }
                }
                None => print!("{}", outcome.body),
            }
            std::process::exit(outcome.exit);
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    }
}
