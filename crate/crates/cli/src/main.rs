use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fqlab::harness::{
    emit_barplot, emit_summary_tables, emit_training_curves, load_archived_qhat, load_run_records,
    run_dirs, run_experiment, GameEntry, OUTPUT_ENV, SHOWCASE_TYPE,
};
use fqlab::{
    enumerate_joint_actions, true_q_table, ExperimentConfig, GameId, GameSpec, JointType, Method,
};

#[derive(Parser)]
#[command(
    name = "fqlab",
    version,
    about = "Factored action-value experiments on one-shot cooperative games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in games with their sizes.
    ListGames,
    /// Print the exact reward table of a game as CSV.
    DumpQ {
        /// Game name (ignored when --spec is given).
        game: Option<String>,
        /// JSON game spec to use instead of a built-in game.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Only this joint type (e.g. NFNFNFN) for firefighting.
        #[arg(long = "type")]
        joint_type: Option<String>,
    },
    /// Run an experiment grid described by a JSON config.
    Run(RunArgs),
    /// Write bar plots for one run directory or every run below a root.
    Plot {
        run_dir: PathBuf,
        /// Joint types to plot for firefighting runs.
        #[arg(long = "type", default_value = SHOWCASE_TYPE)]
        types: Vec<String>,
    },
    /// Rebuild the training-curve CSVs from archived runs.
    Curves {
        run_dir: PathBuf,
        /// Output directory (defaults to RUN_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild summary.csv/summary.json from archived runs and print it.
    Table {
        run_dir: PathBuf,
        /// Output directory (defaults to RUN_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON). Omitted fields take their defaults.
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Training samples per run.
    #[arg(long)]
    samples: Option<usize>,
    /// Boltzmann temperature.
    #[arg(long)]
    temperature: Option<f64>,
    /// Comma-separated method labels, e.g. F1,F2C,JOINT.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated game names.
    #[arg(long, value_delimiter = ',')]
    games: Option<Vec<String>>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long, env = OUTPUT_ENV)]
    output_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<io::Error>()
        .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ListGames => list_games()?,
        Command::DumpQ {
            game,
            spec,
            joint_type,
        } => dump_q(game, spec, joint_type)?,
        Command::Run(args) => return run(args),
        Command::Plot { run_dir, types } => plot(&run_dir, &types)?,
        Command::Curves { run_dir, out } => {
            let records = load_run_records(&run_dir)?;
            let out = out.unwrap_or(run_dir);
            emit_training_curves(&records, &out)?;
            writeln!(
                io::stdout().lock(),
                "wrote curves for {} runs to {}",
                records.len(),
                out.display()
            )?;
        }
        Command::Table { run_dir, out } => table(&run_dir, out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn list_games() -> Result<()> {
    writeln!(
        io::stdout().lock(),
        "{:<26} {:>2} {:>4} {:>6} {:>6}",
        "game",
        "n",
        "|Ai|",
        "|A|",
        "types"
    )?;
    for id in GameId::ALL {
        let s = id.default_spec();
        writeln!(
            io::stdout().lock(),
            "{:<26} {:>2} {:>4} {:>6} {:>6}",
            id.name(),
            s.n,
            s.actions_per_agent,
            s.joint_action_count(),
            s.type_space_size()
        )?;
    }
    Ok(())
}

fn dump_q(game: Option<String>, spec: Option<PathBuf>, joint_type: Option<String>) -> Result<()> {
    let spec: GameSpec = match (spec, game) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(name)) => name.parse::<GameId>()?.default_spec(),
        (None, None) => bail!("give a game name or --spec"),
    };
    spec.validate()?;
    let table = true_q_table(&spec);
    let types: Vec<usize> = match joint_type {
        Some(t) if spec.bayesian() => vec![JointType::parse(&t)?.index()],
        Some(_) => bail!("{} has no joint types", spec.game_id),
        None => (0..spec.type_space_size()).collect(),
    };
    let actions = enumerate_joint_actions(&spec);
    writeln!(io::stdout().lock(), "type,action_index,action,q")?;
    for t in types {
        let label = if spec.bayesian() {
            JointType::from_index(t, spec.type_len()).to_string()
        } else {
            String::new()
        };
        for (i, a) in actions.iter().enumerate() {
            let action: Vec<String> = a.0.iter().map(usize::to_string).collect();
            writeln!(
                io::stdout().lock(),
                "{label},{i},{},{}",
                action.join("-"),
                table.get(t, i) + 0.0
            )?;
        }
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(samples) = args.samples {
        config.train.samples = samples;
    }
    if let Some(t) = args.temperature {
        config.temperature = t;
    }
    if let Some(methods) = &args.methods {
        config.methods = methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<fqlab::Result<_>>()?;
    }
    if let Some(games) = &args.games {
        config.games = games
            .iter()
            .map(|g| g.parse::<GameId>().map(GameEntry::Id))
            .collect::<fqlab::Result<_>>()?;
    }
    if let Some(r) = args.repetitions {
        config.repetitions = r;
    }
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }

    let cells = config.cells().len();
    eprintln!(
        "running {cells} cells into {} (config {})",
        config.output_dir.display(),
        config.config_hash()
    );
    let outcome = run_experiment(&config)?;
    for f in &outcome.failures {
        let kind = if f.skipped { "skipped" } else { "error" };
        eprintln!(
            "{kind}: {}/{}/rep{}: {}",
            f.game, f.method, f.repetition, f.message
        );
    }
    eprintln!(
        "{} runs written, {} failures",
        outcome.results.len(),
        outcome.failures.len()
    );
    Ok(if outcome.has_errors() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn plot(dir: &Path, types: &[String]) -> Result<()> {
    let dirs = if dir.join("qhat.json").is_file() {
        vec![dir.to_path_buf()]
    } else {
        run_dirs(dir)?
    };
    if dirs.is_empty() {
        bail!("no runs found under {}", dir.display());
    }
    for d in dirs {
        let archived = load_archived_qhat(&d)?;
        for path in emit_barplot(&d, &archived, types)? {
            writeln!(io::stdout().lock(), "{}", path.display())?;
        }
    }
    Ok(())
}

fn table(dir: &Path, out: Option<PathBuf>) -> Result<()> {
    let records = load_run_records(dir)?;
    if records.is_empty() {
        bail!("no runs found under {}", dir.display());
    }
    let out = out.unwrap_or_else(|| dir.to_path_buf());
    let rows = emit_summary_tables(&records, &out)?;
    writeln!(
        io::stdout().lock(),
        "{:<26} {:<6} {:>4} {:>10} {:>10} {:>8} {:>10} {:>10} {:>8} {:>8}",
        "game",
        "method",
        "runs",
        "mse_all",
        "mse_opt",
        "opt_pres",
        "value_loss",
        "boltzmann",
        "ranked",
        "tau_b"
    )?;
    for r in rows {
        let m = r.mean;
        writeln!(
            io::stdout().lock(),
            "{:<26} {:<6} {:>4} {:>10.4} {:>10.4} {:>8.3} {:>10.4} {:>10.4} {:>8.3} {:>8.3}",
            r.game,
            r.method,
            r.runs,
            m[0],
            m[1],
            m[2],
            m[3],
            m[4],
            m[5],
            m[6]
        )?;
    }
    Ok(())
}
