//! Process-level glue for navrl: command-line entry points, run manifests,
//! and the WebSocket session server used to record expert demonstrations.

pub mod cli;
pub mod commands;
pub mod manifest;
pub mod server;
pub mod session;
pub mod wire;

use navrl_core::{NavError, Result};

use crate::cli::{Cli, Command};

/// Runs one parsed command line.
pub async fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTree(a) => report_dir(commands::gen_tree(&a)),
        Command::SampleTargets(a) => report_dir(commands::sample_targets_cmd(&a)),
        Command::Record(a) => commands::record(&a).await,
        Command::SynthDemos(a) => report_dir(commands::synth_demos(&a)),
        Command::TrainIrl(a) => report_dir(blocking(move || commands::train_irl_cmd(&a)).await),
        Command::TrainSac(a) => report_dir(blocking(move || commands::train_sac_cmd(&a)).await),
        Command::Evaluate(a) => {
            let r = commands::evaluate_cmd(&a)?;
            println!("success {}%  path ratio {}%  procedure time {:?} s", r.success_rate, r.path_ratio, r.procedure_time);
            Ok(())
        }
        Command::Report(a) => report_dir(commands::report(&a)),
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T> + Send + 'static) -> Result<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| NavError::Usage(format!("worker panicked: {e}")))?
}

fn report_dir(r: Result<std::path::PathBuf>) -> Result<()> {
    println!("{}", r?.display());
    Ok(())
}

/// Process exit status for an error: 2 for usage errors, 1 otherwise.
pub fn exit_code(e: &NavError) -> i32 {
    match e {
        NavError::Usage(_) => 2,
        _ => 1,
    }
}
