use clap::Parser;

fn main() {
    let cli = ctgen_cli::app::Cli::parse();
    std::process::exit(ctgen_cli::app::run(&cli));
}
