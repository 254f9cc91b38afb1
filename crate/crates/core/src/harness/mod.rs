//! Experiment grid runner: games x methods x repetitions, with archived
//! per-run artifacts, summary tables, training curves and bar plots.
//!
//! Layout under `output_dir`:
//!
//! ```text
//! manifest.json                      timestamps, failures, config hash
//! summary.csv / summary.json         mean and standard error per (game, method)
//! curves_all.csv / curves_all_mean.csv
//! <game>/<method>/curves.csv, curves_mean.csv
//! <game>/<method>/<seed>/factorization.json
//!                        qhat.json
//!                        bank.json
//!                        metrics.csv, metrics.json
//!                        curve.csv
//!                        barplot.csv, barplot.svg  (barplot_<type>.* for firefighting)
//! ```

mod artifacts;
mod plot;
mod summary;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{build_factorization, Factorization, SchemeKind};
use crate::games::{true_q_table, GameId, GameSpec, JointType};
use crate::metrics::{evaluate, MetricsReport, DEFAULT_TEMPERATURE};
use crate::seed::{derive_seed, hex_digest, SeedPart};
use crate::training::{
    train, BankSnapshot, LearningRule, ReconstructedQ, TrainConfig, TrainingCurve,
};

pub use artifacts::{
    load_archived_qhat, load_run_records, run_dirs, write_run, ArchivedQHat, RunRecord,
    CSV_SCHEMA_VERSION, METRICS_CSV_HEADER,
};
pub use plot::{barplot_rows, emit_barplot, render_barplot_svg, BarRow};
pub use summary::{
    emit_summary_tables, emit_training_curves, standard_error, summarize, SummaryRow,
};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_ENV: &str = "FQLAB_OUTPUT_DIR";

/// Joint type shown in firefighting bar plots by default.
pub const SHOWCASE_TYPE: &str = "NFNFNFN";

/// A factorization scheme paired with a learning rule, e.g. `F2C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub scheme: SchemeKind,
    pub f: usize,
    pub rule: LearningRule,
}

impl Method {
    pub const JOINT_LABEL: &'static str = "JOINT";

    pub fn joint() -> Self {
        Method {
            scheme: SchemeKind::Joint,
            f: 0,
            rule: LearningRule::FactoredQ,
        }
    }

    /// The fourteen factored methods followed by the joint learner.
    pub fn all() -> Vec<Method> {
        let mut out = Vec::new();
        for rule in [LearningRule::MixtureOfExperts, LearningRule::FactoredQ] {
            out.push(Method {
                scheme: SchemeKind::SingleAgent,
                f: 1,
                rule,
            });
        }
        for scheme in [
            SchemeKind::RandomPartition,
            SchemeKind::Overlapping,
            SchemeKind::Complete,
        ] {
            for rule in [LearningRule::MixtureOfExperts, LearningRule::FactoredQ] {
                for f in [2, 3] {
                    out.push(Method { scheme, f, rule });
                }
            }
        }
        out.push(Method::joint());
        out
    }

    pub fn label(&self) -> String {
        let rule = match self.rule {
            LearningRule::MixtureOfExperts => 'M',
            LearningRule::FactoredQ => 'F',
        };
        match self.scheme {
            SchemeKind::Joint => Self::JOINT_LABEL.to_string(),
            SchemeKind::SingleAgent => format!("{rule}1"),
            SchemeKind::RandomPartition => format!("{rule}{}R", self.f),
            SchemeKind::Overlapping => format!("{rule}{}O", self.f),
            SchemeKind::Complete => format!("{rule}{}C", self.f),
        }
    }

    /// Position in [`Method::all`], used to order tables.
    pub fn order_key(label: &str) -> usize {
        Method::all()
            .iter()
            .position(|m| m.label() == label)
            .unwrap_or(usize::MAX)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let label = s.trim().to_ascii_uppercase();
        if label == Self::JOINT_LABEL {
            return Ok(Method::joint());
        }
        let bad = || Error::Config(format!("unknown method label '{s}'"));
        let mut chars = label.chars();
        let rule = match chars.next() {
            Some('M') => LearningRule::MixtureOfExperts,
            Some('F') => LearningRule::FactoredQ,
            _ => return Err(bad()),
        };
        let rest: String = chars.collect();
        let method = match rest.as_str() {
            "1" => Method {
                scheme: SchemeKind::SingleAgent,
                f: 1,
                rule,
            },
            _ if rest.len() == 2 => {
                let f = rest[..1].parse::<usize>().map_err(|_| bad())?;
                let scheme = match &rest[1..] {
                    "R" => SchemeKind::RandomPartition,
                    "O" => SchemeKind::Overlapping,
                    "C" => SchemeKind::Complete,
                    _ => return Err(bad()),
                };
                if !(2..=3).contains(&f) {
                    return Err(bad());
                }
                Method { scheme, f, rule }
            }
            _ => return Err(bad()),
        };
        Ok(method)
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.label()
    }
}

/// A game given by name (default instance) or as a full spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameEntry {
    Id(GameId),
    Spec(GameSpec),
}

impl GameEntry {
    pub fn spec(&self) -> GameSpec {
        match self {
            GameEntry::Id(id) => id.default_spec(),
            GameEntry::Spec(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub games: Vec<GameEntry>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// `rule` and `seed` are overridden per cell.
    pub train: TrainConfig,
    pub temperature: f64,
    /// Factor count of the overlapping schemes.
    pub overlapping_factors: usize,
    /// Joint types drawn in firefighting bar plots.
    pub showcase_types: Vec<String>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            games: GameId::ALL.iter().map(|&g| GameEntry::Id(g)).collect(),
            methods: Method::all(),
            repetitions: 10,
            base_seed: 0,
            train: TrainConfig::default(),
            temperature: DEFAULT_TEMPERATURE,
            overlapping_factors: 6,
            showcase_types: vec![SHOWCASE_TYPE.to_string()],
            output_dir: PathBuf::from("runs"),
            parallelism: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.games.is_empty() || self.methods.is_empty() {
            return Err(Error::Config(
                "need at least one game and one method".into(),
            ));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        for g in &self.games {
            g.spec().validate()?;
        }
        let mut labels: Vec<String> = self.methods.iter().map(Method::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.methods.len() {
            return Err(Error::Config("duplicate method labels".into()));
        }
        for t in &self.showcase_types {
            JointType::parse(t)?;
        }
        self.train.validate()
    }

    /// Hash over every field that affects results (not the output location
    /// or thread count).
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        canonical.parallelism = 0;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex_digest(&json)[..16].to_string()
    }

    /// Seed of one (game, method, repetition) cell.
    pub fn cell_seed(&self, game: GameId, method: &Method, repetition: usize) -> u64 {
        derive_seed(&[
            SeedPart::U64(self.base_seed),
            SeedPart::Str(game.name()),
            SeedPart::Str(&method.label()),
            SeedPart::U64(repetition as u64),
        ])
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for game in &self.games {
            let spec = game.spec();
            for method in &self.methods {
                for repetition in 0..self.repetitions {
                    out.push(Cell {
                        seed: self.cell_seed(spec.game_id, method, repetition),
                        spec: spec.clone(),
                        method: *method,
                        repetition,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub spec: GameSpec,
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
}

impl Cell {
    pub fn describe(&self) -> String {
        format!(
            "{}/{}/rep{} (seed {})",
            self.spec.game_id,
            self.method.label(),
            self.repetition,
            self.seed
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub spec: GameSpec,
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
    pub config_hash: String,
    pub factorization: Factorization,
    pub metrics: MetricsReport,
    pub curve: TrainingCurve,
    pub q_hat: ReconstructedQ,
    pub bank: BankSnapshot,
}

impl RunResult {
    pub fn record(&self) -> RunRecord {
        RunRecord {
            game: self.spec.game_id.name().to_string(),
            method: self.method.label(),
            repetition: self.repetition,
            seed: self.seed,
            metrics: self.metrics.headline(),
            correctly_ranked_count: self.metrics.correctly_ranked_count,
            config_hash: self.config_hash.clone(),
            curve: self.curve.checkpoints.clone(),
        }
    }

    pub fn archived_qhat(&self) -> ArchivedQHat {
        ArchivedQHat {
            config_hash: self.config_hash.clone(),
            spec: self.spec.clone(),
            method: self.method.label(),
            repetition: self.repetition,
            seed: self.seed,
            reconstructed: self.q_hat.clone(),
        }
    }

    pub fn run_dir(&self, root: &Path) -> PathBuf {
        root.join(self.spec.game_id.name())
            .join(self.method.label())
            .join(self.seed.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellFailure {
    pub game: String,
    pub method: String,
    pub repetition: usize,
    pub seed: u64,
    /// Infeasible configurations are skipped; anything else is an error.
    pub skipped: bool,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct ExperimentOutcome {
    pub results: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
}

impl ExperimentOutcome {
    /// True when some cell failed for a reason other than infeasibility.
    pub fn has_errors(&self) -> bool {
        self.failures.iter().any(|f| !f.skipped)
    }
}

/// Trains and scores one cell. Does not touch the filesystem.
pub fn run_cell(config: &ExperimentConfig, cell: &Cell, config_hash: &str) -> Result<RunResult> {
    let spec = &cell.spec;
    let method = cell.method;
    let factorization = build_factorization(
        method.scheme,
        spec.n,
        spec.actions_per_agent,
        method.f,
        Some(config.overlapping_factors),
        cell.seed,
    )?;
    let train_cfg = TrainConfig {
        rule: method.rule,
        seed: cell.seed,
        ..config.train.clone()
    };
    let (bank, q_hat, curve) = train(spec, &factorization, &train_cfg)?;
    let truth = true_q_table(spec);
    let metrics = evaluate(&truth, &q_hat.table, config.temperature)?;
    Ok(RunResult {
        spec: spec.clone(),
        method,
        repetition: cell.repetition,
        seed: cell.seed,
        config_hash: config_hash.to_string(),
        factorization,
        metrics,
        curve,
        q_hat,
        bank: bank.snapshot(),
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    config_hash: &'a str,
    started_unix: u64,
    finished_unix: u64,
    runs: usize,
    failures: &'a [CellFailure],
    config: &'a ExperimentConfig,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs every cell of the grid, archives each run under `output_dir`, then
/// writes summary tables, training curves and the manifest.
///
/// Infeasible cells are recorded as skipped; other failures are recorded as
/// errors. Only I/O problems on the shared outputs abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let started = unix_now();
    let root = config.output_dir.clone();
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let hash = config.config_hash();
    let cells = config.cells();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<std::result::Result<RunResult, CellFailure>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let fail = |err: Error| CellFailure {
                    game: cell.spec.game_id.name().to_string(),
                    method: cell.method.label(),
                    repetition: cell.repetition,
                    seed: cell.seed,
                    skipped: matches!(err, Error::Config(_)),
                    message: err.to_string(),
                };
                let result = run_cell(config, cell, &hash).map_err(fail)?;
                let dir = write_run(&root, &result).map_err(fail)?;
                emit_barplot(&dir, &result.archived_qhat(), &config.showcase_types)
                    .map_err(fail)?;
                Ok(result)
            })
            .collect()
    });

    let mut outcome = ExperimentOutcome::default();
    for o in outcomes {
        match o {
            Ok(r) => outcome.results.push(r),
            Err(f) => outcome.failures.push(f),
        }
    }
    let records: Vec<RunRecord> = outcome.results.iter().map(RunResult::record).collect();
    emit_summary_tables(&records, &root)?;
    emit_training_curves(&records, &root)?;

    let manifest = Manifest {
        schema_version: CSV_SCHEMA_VERSION,
        config_hash: &hash,
        started_unix: started,
        finished_unix: unix_now(),
        runs: outcome.results.len(),
        failures: &outcome.failures,
        config,
    };
    let path = root.join("manifest.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)
        .map_err(|e| Error::io(&path, e))?;
    Ok(outcome)
}
