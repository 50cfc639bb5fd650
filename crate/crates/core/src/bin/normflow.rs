use clap::Parser;

fn main() {
    env_logger::init();
    std::process::exit(normflow::cli::main_with(normflow::cli::Cli::parse()));
}
