use clap::Parser;
use wordverify_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = wordverify_cli::run(&cli) {
        eprintln!("wordverify: {e}");
        std::process::exit(e.exit_code());
    }
}
