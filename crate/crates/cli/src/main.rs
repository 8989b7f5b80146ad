use clap::Parser;
use fauxpas_cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("fauxpas: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
