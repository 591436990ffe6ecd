use clap::Parser;

fn main() {
    let cli = fdbscan_cli::Cli::parse();
    if let Err(e) = fdbscan_cli::run(cli) {
        if !matches!(e, fdbscan_cli::CliError::VerifyFailed) {
            eprintln!("error: {e}");
        }
        std::process::exit(e.exit_code());
    }
}
