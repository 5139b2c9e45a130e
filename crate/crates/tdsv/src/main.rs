use clap::Parser;

fn main() {
    let cli = tdsv::cli::Cli::parse();
    if let Err(e) = tdsv::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
