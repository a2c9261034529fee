use clap::Parser;

fn main() {
    let cli = maxent_cli::Cli::parse();
    std::process::exit(maxent_cli::run(cli));
}
