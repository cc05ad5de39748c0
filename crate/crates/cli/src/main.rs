use std::process::ExitCode;

use clap::Parser;

use pbmor_cli::{resolve, run, thread_count, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            anyhow::bail!("thread count must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (cfg, force) = resolve(cli.command)?;
    let outcome = run(&cfg, force)?;
    for (stage, summary) in &outcome.stages {
        println!("{}: {}", stage.name(), summary);
    }
    println!("run written to {} ({})", outcome.dir.display(), if outcome.passed { "passed" } else { "checks failed" });
    Ok(outcome.passed)
}
