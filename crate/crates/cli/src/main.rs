use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use heurlab::domains::DomainKind;
use heurlab::experiment::commands::{
    cmd_bootstrap, cmd_counterexample, cmd_curriculum, cmd_evaluate, cmd_generate, cmd_make_dataset, cmd_solve,
    cmd_train,
};
use heurlab::experiment::{EvalReport, ExperimentConfig, LossKind};
use heurlab::losses::MonotoneDirection;
use heurlab::search::TieBreak;

/// Train and evaluate learned A* heuristics on mazes with teleports and Sokoban.
#[derive(Debug, Parser)]
#[command(name = "heurlab", version)]
struct Cli {
    /// TOML file with experiment settings; flags override it.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Where outputs are written.
    #[arg(long, short, global = true, env = "HEURLAB_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Master seed for generation, initialization and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    domain: Option<DomainKind>,
    /// Expansion budget per search.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true)]
    loss: Option<LossKind>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    margin: Option<f64>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    tie_break: Option<TieBreak>,
    #[arg(long, global = true)]
    monotone_direction: Option<MonotoneDirection>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write seeded train and test instances to <output>/instances.
    Generate {
        #[arg(long)]
        train_count: Option<usize>,
        #[arg(long)]
        test_count: Option<usize>,
    },
    /// Solve instances with the base heuristic (or a model) and write solve.csv.
    Solve {
        /// Instance files or directories.
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Build a training dataset from base-heuristic searches.
    MakeDataset {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        /// Skip cost-to-go labelling (enough for the ranking loss).
        #[arg(long)]
        no_labels: bool,
    },
    /// Train a model on a dataset; writes model.ckpt and train_log.csv.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Start from this checkpoint instead of a fresh model.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Evaluate a model; writes eval.csv and eval_summary.csv.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        instances: Vec<PathBuf>,
    },
    /// One curriculum round: add solved test instances and fine-tune.
    Curriculum {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(required = true)]
        instances: Vec<PathBuf>,
    },
    /// Alternate solving and training from an untrained model; writes bootstrap.csv.
    Bootstrap {
        #[arg(required = true)]
        instances: Vec<PathBuf>,
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Run the two hand-built graphs that show where cost regression misleads A*.
    Counterexample,
}

fn config_from(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(cli.config.as_deref())?;
    let o = &cli.overrides;
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(v) = o.seed {
        config.seed = v;
    }
    if let Some(v) = o.domain {
        config.domain = v;
    }
    if let Some(v) = o.budget {
        config.budget = v;
    }
    if let Some(v) = o.loss {
        config.loss = v;
    }
    if let Some(v) = o.epochs {
        config.epochs = v;
    }
    if let Some(v) = o.margin {
        config.margin = v;
    }
    if let Some(v) = o.lr {
        config.lr = v;
    }
    if let Some(v) = o.tie_break {
        config.tie_break = v;
    }
    if let Some(v) = o.monotone_direction {
        config.monotone_direction = v;
    }
    if let Command::Generate { train_count, test_count } = &cli.command {
        config.train_count = train_count.unwrap_or(config.train_count);
        config.test_count = test_count.unwrap_or(config.test_count);
    }
    config.validate()?;
    Ok(config)
}

fn print_summary(report: &EvalReport) {
    println!(
        "instances {}  solved {}  coverage {:.3}  mean expanded {:.1}  mean gap {}",
        report.rows.len(),
        report.solved(),
        report.coverage(),
        report.mean_expanded(),
        report.mean_gap().map_or_else(|| "n/a".to_string(), |g| format!("{g:.2}"))
    );
}

fn run(cli: Cli) -> Result<()> {
    let config = config_from(&cli)?;
    match cli.command {
        Command::Generate { .. } => {
            let out = cmd_generate(&config)?;
            println!("wrote {} train and {} test instances", out.train.len(), out.test.len());
        }
        Command::Solve { instances, model } => print_summary(&cmd_solve(&config, &instances, model.as_deref())?),
        Command::MakeDataset { instances, no_labels } => {
            let path = cmd_make_dataset(&config, &instances, !no_labels)?;
            println!("wrote {}", path.display());
        }
        Command::Train { dataset, init } => {
            let out = cmd_train(&config, &dataset, init.as_deref())?;
            if let Some(last) = out.epochs.last() {
                println!(
                    "epoch {}  loss {:.6}  term1 {:.4}  term2 {:.4}",
                    last.epoch, last.loss, last.term1_hard, last.term2_hard
                );
            }
            println!("wrote {}", out.checkpoint.display());
        }
        Command::Evaluate { model, instances } => print_summary(&cmd_evaluate(&config, &model, &instances)?),
        Command::Curriculum { model, dataset, instances } => {
            let out = cmd_curriculum(&config, &model, &dataset, &instances)?;
            println!("added {}  coverage {:.3} -> {:.3}", out.added, out.before.coverage(), out.after.coverage());
        }
        Command::Bootstrap { instances, init } => {
            for row in cmd_bootstrap(&config, &instances, init.as_deref())? {
                println!("epoch {}  coverage {:.3}  mean expanded {:.1}", row.epoch, row.coverage, row.mean_expanded);
            }
        }
        Command::Counterexample => {
            let r = cmd_counterexample(&config)?;
            let order: Vec<String> = r.a_pop_order.iter().map(|s| format!("s{s}")).collect();
            println!("graph A pop order: {}", order.join(" "));
            println!("graph A term1 (hard) = {:.4}", r.a_term1_hard);
            let open: Vec<String> = r.b_open_f.iter().map(|(s, f)| format!("f(s{s}) = {f}")).collect();
            println!("graph B open after s0: {}", open.join(", "));
            for (policy, ties, expanded) in &r.b_tie_pops {
                println!("graph B {policy:?}: tie pops {ties}, expanded {expanded}");
            }
            if !r.holds() {
                bail!("counterexample properties do not hold");
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli).context("heurlab") {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
