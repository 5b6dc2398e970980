use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use wsn_cli::{
    cmd_compare, cmd_run, cmd_sweep, cmd_topology, parse_override, parse_seeds, parse_sweep,
};
use wsn_core::{parse_config, SimConfig};

#[derive(Parser)]
#[command(
    name = "wsnsim",
    version,
    about = "Wireless sensor network congestion-control simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replication.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write trace.txt with one line per event.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep one config key over several values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1..11")]
        seeds: String,
        /// KEY=v1,v2,...
        #[arg(
            long = "sweep",
            default_value = "ratio_threshold=0.5,1.0,1.5,2.0,2.5,3.0"
        )]
        spec: String,
    },
    /// Paired runs with rate control on and off.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1..11")]
        seeds: String,
    },
    /// Write the topology only.
    Topology {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    no_rate_control: bool,
    /// Override a config key, e.g. `--set queue_capacity=16`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<SimConfig> {
        let mut overrides = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<Result<Vec<_>>>()?;
        if self.no_rate_control {
            overrides.push(("rate_control_enabled".into(), "false".into()));
        }
        Ok(parse_config(self.config.as_deref(), &overrides)?)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            common,
            seed,
            trace,
        } => {
            for path in cmd_run(&common.config()?, seed, &common.out, trace)? {
                println!("{}", path.display());
            }
        }
        Command::Sweep {
            common,
            seeds,
            spec,
        } => {
            let (key, values) = parse_sweep(&spec)?;
            let path = cmd_sweep(
                &common.config()?,
                &parse_seeds(&seeds)?,
                &key,
                &values,
                &common.out,
            )?;
            println!("{}", path.display());
        }
        Command::Compare { common, seeds } => {
            let path = cmd_compare(&common.config()?, &parse_seeds(&seeds)?, &common.out)?;
            println!("{}", path.display());
        }
        Command::Topology { common, seed } => {
            println!(
                "{}",
                cmd_topology(&common.config()?, seed, &common.out)?.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
