use clap::Parser;
use mcm::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = run(cli, &mut stdout.lock()) {
        eprintln!("mcm: {e}");
        std::process::exit(e.exit_code());
    }
}
