use clap::Parser;

fn main() {
    let cli = siss::cli::Cli::parse();
    if let Err(error) = siss::cli::run(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
