//! Command-line experiment runner: `synth` simulates source/target domain
//! pairs from the structural generator, `tabular` splits and perturbs a
//! CSV table, and `gen` writes a generator-sampled table for the tabular
//! pipeline. Runs are fully seeded; identical invocations produce
//! byte-identical output files.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairshift_core::data::{load_csv, parse_schema, serialize_csv, serialize_schema, stored_specs};
use fairshift_core::experiment::{
    run_synthetic_experiment, run_tabular_experiment, serialize_replicates, serialize_summary,
    ExperimentError, ExperimentOutput, Mode,
};
use fairshift_core::graph::parse_graph;
use fairshift_core::scm::{generate_domain, sample_coefficients, ScmConfig};

use config::FileConfig;

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Parser)]
#[command(
    name = "fairshift",
    version,
    about = "Domain-shift experiment runner: linear classifiers over invariant \
feature subsets with optional equal-opportunity constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate seeded source/target domain pairs and evaluate the
    /// four-variant classifier grid on each target.
    Synth(RunArgs),
    /// Split a CSV table into source and held-out target per replicate,
    /// apply the configured perturbations, and evaluate the grid.
    Tabular(RunArgs),
    /// Write a generator-sampled table (data.csv + data.schema) suitable
    /// for the tabular pipeline.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for replicates.csv and summary.txt.
    #[arg(long)]
    out: PathBuf,
    /// Override the configured replicate count.
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    /// Synthetic-mode TOML configuration ([scm] section supplies the
    /// generator settings; scm.c1 picks the table's context value).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for data.csv and data.schema.
    #[arg(long)]
    out: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} message={:?}", e.kind, e.message);
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Tabular(a) => run_tabular(a),
        Command::Gen(a) => run_gen(a),
    }
}

fn run_synth(a: RunArgs) -> Result<(), CliError> {
    let (file, _) = FileConfig::load(&a.config)?;
    let cfg = file.experiment_config(a.replicates, a.seed)?;
    let out = run_synthetic_experiment(&cfg).map_err(experiment_err)?;
    write_outputs(&a.out, &out)
}

fn run_tabular(a: RunArgs) -> Result<(), CliError> {
    let (file, base) = FileConfig::load(&a.config)?;
    let cfg = file.experiment_config(a.replicates, a.seed)?;
    let specs = parse_schema(&read(&file.resolve_path(&base, "schema", &file.schema)?)?)
        .map_err(|e| CliError { kind: "data", message: e.to_string() })?;
    let dataset = load_csv(&read(&file.resolve_path(&base, "data", &file.data)?)?, &specs)
        .map_err(|e| CliError { kind: "data", message: e.to_string() })?;
    let graph = parse_graph(&read(&file.resolve_path(&base, "graph", &file.graph)?)?)
        .map_err(|e| CliError { kind: "graph", message: e.to_string() })?;
    let out = run_tabular_experiment(&cfg, &dataset, &graph).map_err(experiment_err)?;
    write_outputs(&a.out, &out)
}

fn run_gen(a: GenArgs) -> Result<(), CliError> {
    let (file, _) = FileConfig::load(&a.config)?;
    if file.mode()? != Mode::Synthetic {
        return Err(CliError {
            kind: "config",
            message: "gen needs a synthetic-mode config".to_string(),
        });
    }
    let s = file.scm_section()?;
    let seed = a.seed.unwrap_or(file.master_seed);
    let coefficients = file.coefficients()?.unwrap_or_else(|| sample_coefficients(seed));
    let scm = ScmConfig { coefficients, gamma: s.gamma, n: s.n, seed };
    let ds = generate_domain(&scm, s.c1);
    fs::create_dir_all(&a.out).map_err(|e| io_err(&a.out, e))?;
    write_file(&a.out.join("data.csv"), &serialize_csv(&ds))?;
    write_file(&a.out.join("data.schema"), &serialize_schema(&stored_specs(&ds)))?;
    Ok(())
}

fn write_outputs(dir: &Path, out: &ExperimentOutput) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_file(&dir.join("replicates.csv"), &serialize_replicates(&out.records))?;
    write_file(&dir.join("summary.txt"), &serialize_summary(&out.summary))?;
    if !out.failures.is_empty() {
        let mut text = String::new();
        for f in &out.failures {
            text.push_str(&format!("{} {}\n", f.replicate, f.message));
        }
        write_file(&dir.join("failures.txt"), &text)?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError { kind: "io", message: format!("{}: {e}", path.display()) }
}

fn experiment_err(e: ExperimentError) -> CliError {
    let kind = match e {
        ExperimentError::Config(_) => "config",
        _ => "run",
    };
    CliError { kind, message: e.to_string() }
}
