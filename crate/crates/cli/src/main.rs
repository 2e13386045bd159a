use clap::Parser;
use iphfit_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = iphfit_cli::run(&cli) {
        eprintln!("iphfit: {e}");
        std::process::exit(e.exit_code());
    }
}
