use clap::Parser;

fn main() {
    let cli = osculum::cli::Cli::parse();
    std::process::exit(osculum::cli::run(cli));
}
