use clap::Parser;

fn main() {
    oneill_lab::init_threads();
    let cli = oneill_lab::Cli::parse();
    std::process::exit(oneill_lab::run(cli));
}
