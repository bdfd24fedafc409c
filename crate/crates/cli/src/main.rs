use clap::Parser;
use skyseek_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = execute(cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}
