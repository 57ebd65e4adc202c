use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coinlab::harness::{self, Environment, ExperimentConfig, RewardKind};
use coinlab::leader_follower::{GuessInit, TensorKind};
use coinlab::Error;

#[derive(Parser)]
#[command(name = "coinlab", version, about = "Collective-intelligence simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded batch experiment and write world_reward.csv and summary.json
    Simulate(SimulateArgs),
    /// Exhaustive factoredness, intelligence and learnability diagnostics on a small instance
    Diagnose(DiagnoseArgs),
}

/// Overrides shared by both subcommands. Command-line values win over the file.
#[derive(Args)]
struct Common {
    /// Flat TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// bar | leader_follower
    #[arg(long, alias = "environment")]
    experiment: Option<String>,
    #[arg(long)]
    nights: Option<usize>,
    /// Bar: number of agents
    #[arg(long)]
    agents: Option<usize>,
    /// Bar: capacity c
    #[arg(long)]
    capacity: Option<f64>,
    /// Bar: `uniform`, `single_night`, or comma-separated weights
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    num_leaders: Option<usize>,
    /// worst_case | random
    #[arg(long)]
    tensor: Option<String>,
    /// Worst-case tensor penalty B (> 1)
    #[arg(long)]
    penalty: Option<f64>,
    /// correct | none_followers | random
    #[arg(long)]
    guessed_sets: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// UD | G | WL
    #[arg(long)]
    reward: Option<String>,
    #[arg(long)]
    weeks: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    macrolearning_week: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    temp_initial: Option<f64>,
    #[arg(long)]
    temp_decay_time: Option<f64>,
    #[arg(long)]
    temp_floor: Option<f64>,
    #[arg(long)]
    convergence_fraction: Option<f64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: Common,
}

fn parse_named<T: serde::de::DeserializeOwned>(field: &'static str, value: &str) -> Result<T, Error> {
    serde_json::from_value(serde_json::Value::String(value.to_string())).map_err(|_| Error::Config {
        field,
        reason: format!("unrecognised value `{value}`"),
    })
}

fn parse_alpha(value: &str) -> Result<harness::AlphaSpec, Error> {
    if let Ok(preset) = parse_named("alpha", value) {
        return Ok(harness::AlphaSpec::Preset(preset));
    }
    value
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map(harness::AlphaSpec::Explicit)
        .map_err(|_| Error::Config {
            field: "alpha",
            reason: format!("expected a preset or comma-separated numbers, got `{value}`"),
        })
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(e) = &self.experiment {
            cfg.environment = e.parse::<Environment>()?;
        }
        if let Some(v) = self.nights {
            cfg.nights = v;
        }
        if let Some(v) = self.agents {
            cfg.agents = v;
        }
        if let Some(v) = self.capacity {
            cfg.capacity = v;
        }
        if let Some(v) = &self.alpha {
            cfg.alpha = parse_alpha(v)?;
        }
        if let Some(v) = self.num_leaders {
            cfg.num_leaders = v;
        }
        if let Some(v) = &self.tensor {
            cfg.tensor = parse_named::<TensorKind>("tensor", v)?;
        }
        if let Some(v) = self.penalty {
            cfg.penalty = v;
        }
        if let Some(v) = &self.guessed_sets {
            cfg.guessed_sets = parse_named::<GuessInit>("guessed_sets", v)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    if let Some(r) = &args.reward {
        cfg.reward = r.parse::<RewardKind>()?;
    }
    if let Some(v) = args.weeks {
        cfg.weeks = v;
    }
    if let Some(v) = args.runs {
        cfg.runs = v;
    }
    if let Some(v) = args.macrolearning_week {
        cfg.macrolearning_week = Some(v);
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.temp_initial {
        cfg.temp_initial = v;
    }
    if let Some(v) = args.temp_decay_time {
        cfg.temp_decay_time = v;
    }
    if let Some(v) = args.temp_floor {
        cfg.temp_floor = v;
    }
    if let Some(v) = args.convergence_fraction {
        cfg.convergence_fraction = v;
    }
    cfg.validate()?;
    let (results, stats) = harness::run_and_aggregate(&cfg)?;
    let paths = harness::emit_outputs(&stats, &cfg, &results, &args.out)?;
    println!("wrote {} and {}", paths.csv.display(), paths.summary.display());
    if let Some(last) = stats.mean.last() {
        println!(
            "final mean world reward {:.6} of optimum {:.6}; convergence week {}",
            last,
            stats.optimum,
            stats.convergence_week.map_or("none".to_string(), |w| w.to_string())
        );
    }
    Ok(())
}

fn diagnose(args: &DiagnoseArgs) -> Result<(), Error> {
    let mut cfg = args.common.load()?;
    // small exhaustive defaults unless overridden
    if args.common.agents.is_none() && args.common.config.is_none() {
        cfg.agents = 4;
    }
    if args.common.nights.is_none() && args.common.config.is_none() {
        cfg.nights = 3;
        if args.common.alpha.is_none() {
            cfg.alpha = harness::AlphaSpec::Explicit(vec![1.0, 1.0, 1.0]);
        }
    }
    if args.common.num_leaders.is_none() && args.common.config.is_none() {
        cfg.num_leaders = 2;
    }
    if args.common.guessed_sets.is_none() && args.common.config.is_none() {
        cfg.guessed_sets = GuessInit::Correct;
    }
    let report = coinlab::diagnose::diagnose(&cfg)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Encode {
        what: "report",
        reason: e.to_string(),
    })?;
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
