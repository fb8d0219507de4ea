//! Config-driven runner binding every module into reproducible pipelines.
//!
//! Each subcommand writes CSV tables, a JSON report per stage and `manifest.json` with the config hash,
//! the grids, the PASS/FAIL verdicts and any error record. Exit codes: 0 pass, 1 criteria failure,
//! 2 usage or configuration error, 3 numerical error.

pub mod config;
pub mod output;
pub mod stages;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, FamilySpec, Recipe, TwinName};
pub use output::{ErrorRecord, Manifest, OutputDir, StageGrid, Table};
pub use stages::{Criterion, StageReport};

#[derive(Clone, Debug, Parser)]
#[command(
    name = "minsurf",
    version,
    about = "Minimal-surface inverse-problem lab"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Manufactured-solution convergence, trivial cases and area/DN duality.
    Forward,
    /// Linearizations against finite differences of the nonlinear solver.
    Linearize,
    /// Residuals of the second- and third-order integral identities.
    Identities,
    /// CGO construction, decay and stationary-phase sweeps.
    Cgo,
    /// Twin-experiment recovery and the trace-algebra check.
    Recover,
    /// Every stage in order.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stage {
    Forward,
    Linearize,
    Identities,
    Cgo,
    Recover,
}

impl Stage {
    const ALL: [Stage; 5] = [
        Stage::Forward,
        Stage::Linearize,
        Stage::Identities,
        Stage::Cgo,
        Stage::Recover,
    ];

    fn name(self) -> &'static str {
        match self {
            Stage::Forward => "forward",
            Stage::Linearize => "linearize",
            Stage::Identities => "identities",
            Stage::Cgo => "cgo",
            Stage::Recover => "recover",
        }
    }
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::All => "all",
            Command::Forward => "forward",
            Command::Linearize => "linearize",
            Command::Identities => "identities",
            Command::Cgo => "cgo",
            Command::Recover => "recover",
        }
    }

    fn stages(self) -> Vec<Stage> {
        match self {
            Command::Forward => vec![Stage::Forward],
            Command::Linearize => vec![Stage::Linearize],
            Command::Identities => vec![Stage::Identities],
            Command::Cgo => vec![Stage::Cgo],
            Command::Recover => vec![Stage::Recover],
            Command::All => Stage::ALL.to_vec(),
        }
    }
}

/// Verdicts of one run.
#[derive(Debug, Default)]
struct Outcome {
    grids: Vec<StageGrid>,
    criteria: Vec<Criterion>,
    warnings: Vec<String>,
}

impl Outcome {
    fn record<R: StageReport>(
        &mut self,
        stage: Stage,
        report: &R,
        out: &mut OutputDir,
    ) -> Result<()> {
        for table in report.tables() {
            out.write_table(&table)?;
        }
        out.write_json(&format!("{}.json", stage.name()), report)?;
        self.grids.push(StageGrid {
            stage: stage.name().to_owned(),
            nodes: report.grid(),
        });
        self.criteria.extend(report.criteria());
        self.warnings.extend(report.warnings());
        Ok(())
    }
}

fn run_stage(
    stage: Stage,
    config: &ExperimentConfig,
    out: &mut OutputDir,
    outcome: &mut Outcome,
) -> Result<()> {
    match stage {
        Stage::Forward => {
            let report = stages::run_forward(&config.forward, config.seed)?;
            outcome.record(stage, &report, out)
        }
        Stage::Linearize => outcome.record(stage, &stages::run_linearize(&config.linearize)?, out),
        Stage::Identities => {
            outcome.record(stage, &stages::run_identities(&config.identities)?, out)
        }
        Stage::Cgo => outcome.record(stage, &stages::run_cgo(&config.cgo)?, out),
        Stage::Recover => {
            let report = stages::run_recover(&config.recover, config.seed)?;
            outcome.record(stage, &report, out)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.threads == Some(0) {
        return Err(Error::ConfigInvalid("--threads must be positive".into()));
    }
    Ok(config)
}

/// Runs one subcommand and returns the process exit code.
///
/// A configuration that fails to load or validate leaves no outputs behind; every later failure still
/// produces `manifest.json` with the error record.
pub fn execute(cli: &Cli) -> i32 {
    let config = match load_config(cli) {
        Ok(config) => config,
        Err(e) => {
            let record = ErrorRecord::new(&e, None);
            eprintln!(
                "{}",
                serde_json::to_string(&record).unwrap_or_else(|_| e.to_string())
            );
            return e.exit_code();
        }
    };
    let mut out = match OutputDir::create(&cli.out) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("cannot create {}: {e}", cli.out.display());
            return e.exit_code();
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("cannot start worker threads: {e}");
            return 3;
        }
    };

    let mut outcome = Outcome::default();
    let mut error = None;
    if let Err(e) = out.write_json("config.json", &config) {
        error = Some(ErrorRecord::new(&e, None));
    }
    for stage in cli.command.stages() {
        if error.is_some() {
            break;
        }
        let start = Instant::now();
        eprintln!("{}: running", stage.name());
        let result = pool.install(|| run_stage(stage, &config, &mut out, &mut outcome));
        eprintln!("{}: {:.1} s", stage.name(), start.elapsed().as_secs_f64());
        if let Err(e) = result {
            eprintln!("{}: {e}", stage.name());
            error = Some(ErrorRecord::new(&e, Some(stage.name())));
        }
    }
    for c in &outcome.criteria {
        eprintln!(
            "criterion {:>2} {:<32} {}  {}",
            c.id,
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }

    let exit_code = match &error {
        Some(record) => record.exit_code,
        None if outcome.criteria.iter().any(|c| !c.pass) => 1,
        None if cli.strict && !outcome.warnings.is_empty() => 1,
        None => 0,
    };
    let mut artifacts = out.written.clone();
    artifacts.push("manifest.json".to_owned());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_owned(),
        config_sha256: config.hash(),
        seed: config.seed,
        strict: cli.strict,
        grids: outcome.grids,
        artifacts,
        criteria: outcome.criteria,
        warnings: outcome.warnings,
        error,
        exit_code,
    };
    if let Err(e) = out.write_json("manifest.json", &manifest) {
        eprintln!("cannot write manifest: {e}");
        return e.exit_code();
    }
    exit_code
}
