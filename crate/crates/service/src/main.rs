use clap::Parser;
use navrl_service::cli::Cli;
use navrl_service::{exit_code, run};

#[tokio::main]
async fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli).await {
        eprintln!("navrl: {e}");
        std::process::exit(exit_code(&e));
    }
}
