//! Command-line driver for the defense experiment.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use battle_histories::episodes::{Mode, SCENARIOS};
use battle_histories::experiment::{run_experiment, run_scenario_to, summarize_dir, ExperimentConfig, SummaryRow};

#[derive(Parser)]
#[command(name = "histories", version, about = "Battle episodes, analogical generalization and learned limit points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded games under one or both conditions.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to one condition.
        #[arg(long)]
        condition: Option<Mode>,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a hand-scripted battle and archive its cases.
    Scenario {
        #[arg(long)]
        name: String,
        #[arg(long)]
        condition: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute summary tables from a finished run directory.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn print_summary(rows: &[SummaryRow]) {
    println!("{}", SummaryRow::HEADER.join("\t"));
    for r in rows {
        println!(
            "{}\t{}\t{}\t{:.1}\t{:.2}\t{:.1}\t{:.2}\t{:.1}",
            r.condition, r.games, r.episodes, r.mean_facts, r.mean_cities, r.mean_gold, r.final_cities, r.final_gold
        );
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, condition, seed_offset, out } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
                None => ExperimentConfig::shipped(),
            };
            if let Some(c) = condition {
                cfg.conditions = vec![c];
            }
            for s in &mut cfg.seeds {
                *s = s.wrapping_add(seed_offset);
            }
            let Some(out) = out.or_else(|| cfg.output.clone()) else {
                bail!("no output directory: pass --out or set `output` in the config");
            };
            let result = run_experiment(&cfg, &out)?;
            for (c, g, e) in &result.failures {
                eprintln!("run {c} game {g} aborted: {e}");
            }
            print_summary(&result.summary);
        }
        Command::Scenario { name, condition, out } => {
            if !SCENARIOS.contains(&name.as_str()) {
                bail!("unknown scenario {name:?}; known: {}", SCENARIOS.join(", "));
            }
            let cases = run_scenario_to(&name, condition, &out)?;
            for c in &cases {
                let outcome = c.outcome.map_or("none", |o| o.name());
                println!("{}\t{}\t{} facts", c.event, outcome, c.fact_count());
            }
        }
        Command::Summarize { input } => print_summary(&summarize_dir(&input)?),
    }
    Ok(())
}
