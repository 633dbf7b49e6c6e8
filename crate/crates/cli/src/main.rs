//! `ess`: run samplers on benchmark targets, compare them on an equal
//! density-evaluation budget and export plot-ready marginals.

mod config;
mod error;
mod image;

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use ensemble_slice::chain_io::{read_chain_file, write_chain_file, ChainHeader, FORMAT_VERSION};
use ensemble_slice::diagnostics::{build_report, histogram, RunReport};
use ensemble_slice::run;

use config::{load_compare_configs, load_run_config, Overrides, RunConfig};
use error::CliError;

pub const CHAIN_FILE: &str = "chain.bin";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

#[derive(Debug, Parser)]
#[command(name = "ess", version, about = "Ensemble slice sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one sampler and write chain, report and summary.
    Run(Overrides),
    /// Run a list of configs; baselines get the ESS run's evaluation count as budget.
    Compare(Overrides),
    /// Post-burn-in histogram of one parameter from a chain file.
    ExportMarginal {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 0)]
        param: usize,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value_t = 0.5)]
        burn_in: f64,
        /// Histogram range; the data span when omitted.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
        range: Option<Vec<f64>>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate an object-detection image (grid plus JSON sidecar).
    SimulateImage {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    config: &'a RunConfig,
    chain_file: &'a str,
    chain_sha256: &'a str,
    report: &'a RunReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Outcome of one run whose outputs were written.
struct RunRecord {
    report: RunReport,
    error: Option<CliError>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

const SUMMARY_HEADER: &str =
    "target,sampler,move,dim,n_walkers,iterations,seed,status,mean_iat,iat_reliable,n_eff,evaluations,efficiency,chain_sha256";

fn summary_row(cfg: &RunConfig, report: &RunReport, sha: &str) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.target,
        report.sampler,
        report.move_kind,
        report.dim,
        report.n_walkers,
        report.n_recorded,
        cfg.seed,
        csv_field(&report.status),
        report.mean_iat,
        report.iat_reliable,
        report.n_eff,
        report.n_density_evaluations,
        report.efficiency,
        sha
    )
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Validates, samples and writes the three outputs. A sampler failure still
/// writes the partial chain and a report marked failed.
fn run_experiment(cfg: &RunConfig) -> Result<RunRecord, CliError> {
    cfg.validate()?;
    let target = cfg.build_target()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(format!("{}: {e}", cfg.out.display())))?;
    let mut sampler = cfg.build_sampler(target.as_ref())?;
    log::info!(
        "{} on {} (D = {}, {} walkers, {} iterations)",
        cfg.sampler,
        cfg.target,
        cfg.dim,
        cfg.n_walkers(),
        cfg.iterations
    );

    let (chain, report, error) = match run(target.as_ref(), sampler.as_mut(), &cfg.run_options()) {
        Ok(out) => (out.chain, out.report, None),
        Err(failure) => {
            let mut report = build_report(&failure.chain, cfg.burn_in, target.as_ref(), sampler.as_ref());
            report.status = format!("failed: {}", failure.error);
            (
                failure.chain,
                report,
                Some(CliError::sampler(failure.error.to_string())),
            )
        }
    };

    let header = ChainHeader {
        version: FORMAT_VERSION,
        dim: chain.dim,
        n_walkers: chain.n_walkers,
        n_iterations: chain.n_recorded(),
        seed: cfg.seed,
        move_kind: report.move_kind.clone(),
        target_id: report.target_id.clone(),
        mu_final: chain.mu_final(),
        sampler: report.sampler.clone(),
        status: if error.is_some() {
            report.status.clone()
        } else {
            "complete".into()
        },
    };
    let chain_path = cfg.out.join(CHAIN_FILE);
    write_chain_file(&chain_path, &header, &chain).map_err(|e| CliError::io(e.to_string()))?;
    let sha = sha256_file(&chain_path)?;

    let file = ReportFile {
        config: cfg,
        chain_file: CHAIN_FILE,
        chain_sha256: &sha,
        report: &report,
        error: error.as_ref().map(|e| e.message.as_str()),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| CliError::io(e.to_string()))?;
    std::fs::write(cfg.out.join(REPORT_FILE), json + "\n")?;
    std::fs::write(
        cfg.out.join(SUMMARY_FILE),
        format!("{SUMMARY_HEADER}\n{}\n", summary_row(cfg, &report, &sha)),
    )?;
    Ok(RunRecord { report, error })
}

fn cmd_run(ov: &Overrides) -> Result<(), CliError> {
    let cfg = load_run_config(ov)?;
    let record = run_experiment(&cfg)?;
    if let Some(e) = record.error {
        return Err(e);
    }
    let r = &record.report;
    println!(
        "{} {} on {}: mean IAT {:.3}{}, n_eff {:.1}, {} evaluations, efficiency {:.3e}",
        r.sampler,
        r.move_kind,
        r.target_id,
        r.mean_iat,
        if r.iat_reliable {
            ""
        } else {
            " (chain shorter than 1000 IATs)"
        },
        r.n_eff,
        r.n_density_evaluations,
        r.efficiency
    );
    println!("outputs in {}", cfg.out.display());
    Ok(())
}

#[derive(Debug, Clone)]
struct CompareRow {
    index: usize,
    target: String,
    sampler: String,
    move_kind: String,
    status: String,
    mean_iat: f64,
    n_eff: f64,
    evaluations: u64,
    efficiency: f64,
}

const COMPARISON_HEADER: &str = "index,target,sampler,move,status,mean_iat,n_eff,evaluations,efficiency";

fn budget_key(cfg: &RunConfig) -> (String, usize) {
    (cfg.target.clone(), cfg.dim)
}

fn cmd_compare(ov: &Overrides) -> Result<(), CliError> {
    let configs = load_compare_configs(ov)?;
    let root = ov.out.clone().unwrap_or_else(|| PathBuf::from("ess-compare"));
    std::fs::create_dir_all(&root).map_err(|e| CliError::io(format!("{}: {e}", root.display())))?;

    let mut order: Vec<usize> = (0..configs.len()).filter(|&i| configs[i].is_ess()).collect();
    order.extend((0..configs.len()).filter(|&i| !configs[i].is_ess()));

    let mut budgets: HashMap<(String, usize), u64> = HashMap::new();
    let mut rows: Vec<CompareRow> = Vec::with_capacity(configs.len());
    for i in order {
        let mut cfg = configs[i].clone();
        cfg.out = root.join(format!("run-{i:02}-{}", cfg.sampler));
        if !cfg.is_ess() && cfg.max_evaluations.is_none() {
            if let Some(&budget) = budgets.get(&budget_key(&cfg)) {
                cfg.max_evaluations = Some(budget);
                let per_iteration = cfg.n_walkers().max(1) as u64;
                cfg.iterations = cfg.iterations.max((budget.div_ceil(per_iteration) + 1) as usize);
            }
        }
        let mut row = CompareRow {
            index: i,
            target: cfg.target.clone(),
            sampler: cfg.sampler.clone(),
            move_kind: if cfg.is_ess() {
                cfg.move_kind.clone()
            } else {
                String::new()
            },
            status: "failed".into(),
            mean_iat: f64::NAN,
            n_eff: f64::NAN,
            evaluations: 0,
            efficiency: f64::NAN,
        };
        match run_experiment(&cfg) {
            Ok(RunRecord { report, error: None }) => {
                if cfg.is_ess() {
                    budgets.entry(budget_key(&cfg)).or_insert(report.n_density_evaluations);
                }
                row.status = report.status.clone();
                row.mean_iat = report.mean_iat;
                row.n_eff = report.n_eff;
                row.evaluations = report.n_density_evaluations;
                row.efficiency = report.efficiency;
            }
            Ok(RunRecord { error: Some(e), .. }) | Err(e) => {
                log::warn!("run {i} failed: {}", e.message);
            }
        }
        rows.push(row);
    }
    rows.sort_by_key(|r| r.index);

    let mut csv = String::from(COMPARISON_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.index,
            r.target,
            r.sampler,
            r.move_kind,
            csv_field(&r.status),
            r.mean_iat,
            r.n_eff,
            r.evaluations,
            r.efficiency
        ));
    }
    std::fs::write(root.join(COMPARISON_FILE), csv)?;

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:>3}  {:<16} {:<10} {:<12} {:>10} {:>12} {:>12} {:>12}  status",
        "#", "target", "sampler", "move", "IAT", "n_eff", "evals", "efficiency"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>3}  {:<16} {:<10} {:<12} {:>10.3} {:>12.1} {:>12} {:>12.4e}  {}",
            r.index, r.target, r.sampler, r.move_kind, r.mean_iat, r.n_eff, r.evaluations, r.efficiency, r.status
        )?;
    }
    Ok(())
}

fn cmd_export_marginal(
    chain_path: &Path,
    param: usize,
    bins: usize,
    burn_in: f64,
    range: Option<&[f64]>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(CliError::config(format!("burn_in must lie in [0, 1), got {burn_in}")));
    }
    let (_, chain) = read_chain_file(chain_path).map_err(|e| CliError::io(format!("{}: {e}", chain_path.display())))?;
    if param >= chain.dim {
        return Err(CliError::config(format!(
            "parameter index {param} out of range for a {}-dimensional chain",
            chain.dim
        )));
    }
    let start = (burn_in * chain.n_recorded() as f64).floor() as usize;
    let values: Vec<f64> = chain.walker_series(param, start).concat();
    let range = range.map(|r| (r[0], r[1]));
    let hist = histogram(&values, bins, range).map_err(|e| CliError::config(e.to_string()))?;
    let mut csv = String::from("bin_lower,bin_upper,probability\n");
    for (i, p) in hist.probabilities.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", hist.edges[i], hist.edges[i + 1], p));
    }
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn cmd_simulate_image(seed: u64, out: &Path) -> Result<(), CliError> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let (img, objects) = image::simulated_image(seed);
    image::write_image(out, &img, &image::default_sidecar(seed, objects))?;
    println!("wrote {} and {}", out.display(), image::sidecar_path(out).display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.kind.exit_code() as u8);
        }
    };
    let result = match &cli.command {
        Command::Run(ov) => cmd_run(ov),
        Command::Compare(ov) => cmd_compare(ov),
        Command::ExportMarginal {
            chain,
            param,
            bins,
            burn_in,
            range,
            out,
        } => cmd_export_marginal(chain, *param, *bins, *burn_in, range.as_deref(), out.as_deref()),
        Command::SimulateImage { seed, out } => cmd_simulate_image(*seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
