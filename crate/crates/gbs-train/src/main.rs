use clap::Parser;

fn main() {
    let cli = gbs_train::cli::Cli::parse();
    if let Err(e) = gbs_train::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(gbs_train::cli::exit_code(&e));
    }
}
