//! Command implementations behind the `commex` binary.

pub mod args;
mod beacon;
mod classify;
mod fetch;
mod input;
pub mod output;
mod reduce;
mod simulate;

use anyhow::{Context, Result};

pub use args::{Cli, Command, Format};
pub use fetch::plan as fetch_plan;

pub fn run(cli: &Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.into()).build().context("starting worker pool")?;
    let out = output::OutDir::create(&cli.output)?;
    pool.install(|| match &cli.command {
        Command::Fetch(a) => fetch::cmd_fetch(a, &out),
        Command::Classify(a) => classify::cmd_classify(a, cli.format, &out),
        Command::Beacon(a) => beacon::cmd_beacon(a, &out),
        Command::Reduce(a) => reduce::cmd_reduce(a, cli.format, &out),
        Command::Simulate(a) => simulate::cmd_simulate(a, cli.format, &out),
    })
}
