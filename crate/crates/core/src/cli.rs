//! Command-line front end: `generate`, `cluster`, `sweep` and `report`.
//!
//! [`run`] parses arguments and executes one subcommand, returning the
//! process exit code. It never panics on bad input and never calls
//! `std::process::exit`, so it can be driven from tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::elbow::{elbow_of_curve, ElbowReport, ElbowThresholds};
use crate::error::{Error, Result};
use crate::fleet_data::{load_fleet_csv, validate_fleet, FleetDataset};
use crate::meta_validation::{read_curve_csv, SweepConfig, DEFAULT_QUANTILES, DEFAULT_SEED, DEFAULT_SPLIT};
use crate::pipeline::{analyze, FleetNetwork, GroupMembers};
use crate::regression::BasisSpec;
use crate::synthgen::{generate_scenario, ScenarioConfig, ScenarioKind};

/// Exit code for runtime failures. Usage errors exit with 2.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fleetnet", version, about = "Group fleet entities by behavior")]
pub struct Cli {
    /// Print the resolved configuration as JSON before running.
    #[arg(long, global = true)]
    pub show_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic fleet with known grouping (fleet.csv, labels.csv, meta.json).
    Generate(GenerateArgs),
    /// Threshold the dissimilarity matrix at one λ and detect communities.
    Cluster(ClusterArgs),
    /// Sweep λ, score each grouping and locate the elbow of the accuracy curve.
    Sweep(SweepArgs),
    /// Re-evaluate an accuracy curve (curve.csv) against elbow thresholds.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    /// Scenario: none, fuzzy or clear.
    #[arg(long, value_parser = parse_kind)]
    pub kind: ScenarioKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    /// Fleet CSV, or a directory containing fleet.csv.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Fleet CSV, or a directory containing fleet.csv.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[arg(long, default_value_t = DEFAULT_QUANTILES)]
    pub quantiles: usize,
    /// Training share of each entity's observations.
    #[arg(long, default_value_t = DEFAULT_SPLIT)]
    pub split: f64,
    /// Seed of the train/validation split.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// curve.csv, or a directory containing it.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// Optional directory to write elbow.json into.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.5)]
    pub elbow_clear: f64,
    #[arg(long, default_value_t = 0.15)]
    pub elbow_fuzzy: f64,
}

impl ThresholdArgs {
    pub fn thresholds(&self) -> ElbowThresholds {
        ElbowThresholds {
            clear: self.elbow_clear,
            fuzzy: self.elbow_fuzzy,
        }
    }
}

fn parse_kind(s: &str) -> std::result::Result<ScenarioKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Contents of elbow.json.
#[derive(Debug, Clone, Serialize)]
pub struct ElbowSummary {
    #[serde(flatten)]
    pub report: ElbowReport,
    pub thresholds: ElbowThresholds,
    pub groups: Vec<GroupMembers>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    if cli.show_config {
        println!("{}", config_json(&cli.command)?);
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn config_json(command: &Command) -> Result<String> {
    let (name, args) = match command {
        Command::Generate(a) => ("generate", serde_json::to_value(a)?),
        Command::Cluster(a) => ("cluster", serde_json::to_value(a)?),
        Command::Sweep(a) => ("sweep", serde_json::to_value(a)?),
        Command::Report(a) => ("report", serde_json::to_value(a)?),
    };
    Ok(serde_json::to_string_pretty(&serde_json::json!({ "subcommand": name, "options": args }))?)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let scenario = generate_scenario(&ScenarioConfig::new(args.kind, args.seed))?;
    scenario.save(&args.out)?;
    println!(
        "wrote {} entities ({} scenario, seed {}) to {}",
        scenario.fleet.len(),
        args.kind,
        args.seed,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    if !args.lambda.is_finite() {
        return Err(Error::InvalidConfig("--lambda must be finite".into()));
    }
    let basis = BasisSpec::new(args.degree);
    let fleet = load_checked(&args.input, &basis)?;
    let network = FleetNetwork::build(&fleet, &basis)?;
    let graph = network.graph(args.lambda);
    let partition = crate::community::detect_communities(&graph)?;

    std::fs::create_dir_all(&args.out)?;
    let ids = &network.dissimilarity.entity_ids;
    network.dissimilarity.save_csv(args.out.join("rprime.csv"))?;
    partition.save_csv(ids, args.out.join("partition.csv"))?;
    write_edges(ids, &graph.edges(), &args.out.join("edges.csv"))?;

    println!("lambda = {}", args.lambda);
    println!("edges = {}", graph.edge_count());
    println!("communities = {}", partition.k);
    println!("modularity Q = {:.6}", partition.modularity_q);
    Ok(())
}

fn write_edges(ids: &[String], edges: &[(usize, usize)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["source", "target"])?;
    for &(i, j) in edges {
        w.write_record([&ids[i], &ids[j]])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let thresholds = args.thresholds.thresholds();
    thresholds.validate()?;
    let basis = BasisSpec::new(args.degree);
    let fleet = load_checked(&args.input, &basis)?;
    let config = SweepConfig {
        quantiles: args.quantiles,
        fraction: args.split,
        seed: args.seed,
        ..SweepConfig::default()
    };
    let analysis = analyze(&fleet, &basis, &config, &thresholds)?;

    std::fs::create_dir_all(&args.out)?;
    analysis.network.dissimilarity.save_csv(args.out.join("rprime.csv"))?;
    analysis.sweep.save_csv(args.out.join("sweep.csv"))?;
    let curve = std::fs::File::create(args.out.join("curve.csv"))?;
    analysis.sweep.write_curve_csv(std::io::BufWriter::new(curve))?;
    let summary = ElbowSummary {
        report: analysis.elbow.clone(),
        thresholds,
        groups: analysis.chosen_groups(),
    };
    write_json(&summary, &args.out.join("elbow.json"))?;
    if let Some(p) = analysis.chosen_partition() {
        p.save_csv(&analysis.network.dissimilarity.entity_ids, args.out.join("partition.csv"))?;
    }

    println!("lambda values = {}", analysis.sweep.records.len());
    print_curve(&analysis.sweep.accuracy_curve());
    print_elbow(&analysis.elbow);

    let failed: Vec<_> = analysis.sweep.records.iter().filter(|r| r.failed()).collect();
    if let Some(first) = failed.first() {
        return Err(Error::RecordFailures {
            failed: failed.len(),
            total: analysis.sweep.records.len(),
            detail: format!("λ = {}: {}", first.lambda, first.failure.as_deref().unwrap_or("")),
        });
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let path = resolve(&args.input, "curve.csv");
    let curve = read_curve_csv(&path)?;
    let thresholds = args.thresholds.thresholds();
    let report = elbow_of_curve(&curve, &thresholds)?;
    print_curve(&curve);
    print_elbow(&report);
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
        let summary = ElbowSummary {
            report,
            thresholds,
            groups: Vec::new(),
        };
        write_json(&summary, &out.join("elbow.json"))?;
    }
    Ok(())
}

fn resolve(input: &Path, default_name: &str) -> PathBuf {
    if input.is_dir() {
        input.join(default_name)
    } else {
        input.to_path_buf()
    }
}

fn load_checked(input: &Path, basis: &BasisSpec) -> Result<FleetDataset> {
    let path = resolve(input, "fleet.csv");
    let fleet = load_fleet_csv(&path)?;
    info!("loaded {} entities from {}", fleet.len(), path.display());
    let issues = validate_fleet(&fleet, basis);
    if !issues.is_empty() {
        let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        return Err(Error::InvalidFleet(text.join("; ")));
    }
    Ok(fleet)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn print_curve(curve: &[(usize, f64)]) {
    println!("k\teta");
    for (k, eta) in curve {
        println!("{k}\t{eta:.4}");
    }
}

fn print_elbow(report: &ElbowReport) {
    match report.k_star {
        Some(k) => println!(
            "verdict = {} (k* = {k}, score = {:.4})",
            report.verdict, report.curvature_score
        ),
        None => println!("verdict = {} (score = {:.4})", report.verdict, report.curvature_score),
    }
}

