use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zge::commands;
use zge::config::{parse_seeds, parse_variants};
use zge::error::{exit, CliError, CliResult};
use zge::RunConfig;
use zge_core::pipeline::Variant;

#[derive(Parser, Debug)]
#[command(name = "zge", version, about = "Zero-shot graph embedding with prototypical GCNs and label expansion")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory with edges.txt, features.txt and labels.txt.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Label rate, or a comma list for a grid.
    #[arg(long, global = true)]
    label_rate: Option<String>,
    /// Number of unseen classes.
    #[arg(long, global = true)]
    unseen: Option<usize>,
    /// Comma list of rect-l, sl, sul, sul-star, sl-sul, sl-sul-star.
    #[arg(long, global = true)]
    variants: Option<String>,
    /// Seeds as `a..b` or a comma list.
    #[arg(long, global = true)]
    seeds: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// Feature reduction rank.
    #[arg(long, global = true)]
    rank: Option<usize>,
    #[arg(long, global = true)]
    hidden: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent seeds.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Extra `key=value` overrides for any configuration key.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce features and build the propagation matrix (cached).
    Prepare,
    /// Evaluate every variant over the label-rate grid and seeds.
    Run {
        /// Re-run the configuration embedded in an earlier report.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Vary the number of seen classes.
    SweepSeen {
        /// Comma list of seen-class counts.
        #[arg(long)]
        seen_counts: Option<String>,
    },
    /// Empirical risk terms and the proxy domain distance.
    Diagnose,
    /// Dump an expanded label set.
    Expand {
        /// sl, sul or sul-star.
        #[arg(long, default_value = "sl")]
        strategy: String,
    },
    /// Dump the embedding of a variant.
    Embed {
        #[arg(long, default_value = "rect-l")]
        variant: String,
    },
}

fn apply_flags(cfg: &mut RunConfig, f: &Flags) -> CliResult<()> {
    if let Some(d) = &f.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(r) = &f.label_rate {
        cfg.set("label_rates", r)?;
    }
    if let Some(u) = f.unseen {
        cfg.n_unseen = u;
    }
    if let Some(v) = &f.variants {
        cfg.variants = parse_variants(v)?;
    }
    if let Some(s) = &f.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(e) = f.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = f.lr {
        cfg.lr = lr;
    }
    if let Some(r) = f.rank {
        cfg.rank = r;
    }
    if let Some(h) = f.hidden {
        cfg.hidden = h;
    }
    if let Some(o) = &f.out {
        cfg.out = o.clone();
    }
    if let Some(t) = f.threads {
        cfg.threads = t;
    }
    for kv in &f.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match (&cli.command, &cli.flags.config) {
        (Command::Run { replay: Some(path) }, _) => commands::config_from_report(path)?,
        (_, Some(path)) => RunConfig::from_file(path)?,
        _ => RunConfig::default(),
    };
    apply_flags(&mut cfg, &cli.flags)?;
    if let Command::SweepSeen { seen_counts: Some(c) } = &cli.command {
        cfg.set("seen_counts", c)?;
    }
    cfg.validate()?;
    log::info!("config hash {}", cfg.hash());
    let files = match cli.command {
        Command::Prepare => {
            let p = commands::cmd_prepare(&cfg)?;
            vec![p.dir]
        }
        Command::Run { .. } => commands::cmd_run(&cfg)?.1.files,
        Command::SweepSeen { .. } => commands::cmd_sweep_seen(&cfg)?.1.files,
        Command::Diagnose => commands::cmd_diagnose(&cfg)?.1.files,
        Command::Expand { strategy } => commands::cmd_expand(&cfg, commands::parse_strategy(&strategy)?)?.files,
        Command::Embed { variant } => {
            let v = Variant::parse(&variant).ok_or_else(|| CliError::Config(format!("unknown variant `{variant}`")))?;
            commands::cmd_embed(&cfg, v)?.files
        }
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
