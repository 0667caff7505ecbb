use clap::Parser;

fn main() {
    let cli = pvaudit_cli::Cli::parse();
    if let Err(e) = pvaudit_cli::run(cli) {
        eprintln!("pvaudit: {e}");
        std::process::exit(e.exit_code());
    }
}
