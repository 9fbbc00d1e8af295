mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig, KEYS};

/// Synthetic parallel data by morphologically informed lexical replacement.
///
/// Every flag can also be set through the environment variable shown in
/// brackets. Command-line values override the config file.
#[derive(Parser, Debug)]
#[command(name = "lexaug", version)]
struct Cli {
    /// Run configuration (flat TOML).
    #[arg(long, global = true, env = "LEXAUG_CONFIG")]
    config: Option<PathBuf>,
    /// Global random seed.
    #[arg(long, global = true, env = "LEXAUG_SEED")]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "LEXAUG_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true, env = "LEXAUG_STRATEGY", value_parser = ["informed", "naive"])]
    strategy: Option<String>,
    /// Selection mode.
    #[arg(long, global = true, env = "LEXAUG_MODE", value_parser = ["filtered", "random"])]
    mode: Option<String>,
    /// Tier sizes, e.g. `5K,10K,50K`.
    #[arg(long, global = true, env = "LEXAUG_TIERS")]
    tiers: Option<String>,
    /// Output directory.
    #[arg(long, global = true, env = "LEXAUG_OUT")]
    out: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Word-align the seed corpus.
    Align,
    /// Train the n-gram language model(s).
    TrainLm,
    /// Generate candidate pools.
    Augment,
    /// Score candidates and select the tiers.
    Filter,
    /// Write the tagged tiers, the untagged baseline and the manifest.
    Emit,
    /// align, train-lm, augment, filter and emit in one go.
    Build,
    /// Per-tier size, seed and vocabulary report.
    Stats,
    /// Corpus BLEU of a hypothesis file against a reference file.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Add-one smoothing for 2- to 4-gram precisions.
        #[arg(long)]
        smooth: bool,
    },
    /// Check the config and print the resolved settings.
    Validate {
        /// List the documented config keys instead.
        #[arg(long)]
        keys: bool,
    },
}

fn fail(kind: &str, msg: &str) -> ExitCode {
    let one_line: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("lexaug: error[{kind}]: {one_line}");
    ExitCode::from(if kind == "config" || kind == "usage" { 2 } else { 1 })
}

fn load_config(cli: &Cli) -> lexaug::Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| lexaug::Error::Config("--config is required for this command".into()))?;
    let overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        strategy: cli.strategy.clone(),
        mode: cli.mode.clone(),
        tiers: cli.tiers.clone(),
        out: cli.out.clone(),
    };
    RunConfig::load(path, &overrides)
}

fn run(cli: &Cli) -> lexaug::Result<()> {
    if let Command::Bleu { hyp, reference, smooth } = &cli.command {
        println!("{}", commands::cmd_bleu(hyp, reference, *smooth)?);
        return Ok(());
    }
    if let Command::Validate { keys: true } = &cli.command {
        for (k, d) in KEYS {
            println!("{k:22} {d}");
        }
        return Ok(());
    }
    let cfg = load_config(cli)?;
    if let Some(n) = cfg.workers {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let written = match &cli.command {
        Command::Align => commands::cmd_align(&cfg)?,
        Command::TrainLm => commands::cmd_train_lm(&cfg)?,
        Command::Augment => commands::cmd_augment(&cfg)?,
        Command::Filter => commands::cmd_filter(&cfg)?,
        Command::Emit => commands::cmd_emit(&cfg)?,
        Command::Build => commands::cmd_build(&cfg)?,
        Command::Stats => {
            for (label, s) in commands::cmd_stats(&cfg)? {
                println!("tier={label}\t{s}");
            }
            return Ok(());
        }
        Command::Validate { .. } => {
            println!("{}", cfg.describe());
            println!("ok");
            return Ok(());
        }
        Command::Bleu { .. } => unreachable!(),
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            return fail("usage", first.trim_start_matches("error: "));
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
