use clap::Parser;

fn main() {
    let cli = uphill_cli::Cli::parse();
    std::process::exit(uphill_cli::run(&cli));
}
