use clap::Parser;

fn main() {
    std::process::exit(gldiv_cli::run(gldiv_cli::Cli::parse()));
}
