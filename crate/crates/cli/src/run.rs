use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use drsfr_core::engine::{check_run, load_scenario, simulate, Scenario, ScenarioConfig};
use drsfr_core::metrics::{MeanSd, MetricsReport, CSV_HEADER};

use crate::{io_error, CliError};

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: PathBuf,
    /// Seeds `rng_seed .. rng_seed + seeds`.
    pub seeds: u64,
    pub out: PathBuf,
    pub jobs: usize,
}

struct SeedResult {
    seed: u64,
    report: MetricsReport,
    problems: Vec<String>,
}

/// Runs every seed and writes `<out>/<name>/` with one directory per seed,
/// `runs.csv`, `summary.csv` and the resolved `config.toml`.
pub fn cmd_run(m: &RunManifest) -> Result<(), CliError> {
    let cfg = ScenarioConfig::load(&m.config)?;
    let scenario = load_scenario(&cfg)?;
    let dir = m.out.join(&cfg.name);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;

    let first = cfg.params.rng_seed;
    let seeds: Vec<u64> = (0..m.seeds).map(|i| first.wrapping_add(i)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(m.jobs.max(1))
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let results: Vec<Result<SeedResult, CliError>> =
        pool.install(|| seeds.par_iter().map(|&s| run_seed(&cfg, &scenario, s, &dir)).collect());
    let results: Vec<SeedResult> = results.into_iter().collect::<Result<_, _>>()?;

    write_runs(&dir.join("runs.csv"), &results)?;
    write_summary(&dir.join("summary.csv"), &results)?;
    let resolved = toml::to_string(&cfg).map_err(|e| CliError::Failed(e.to_string()))?;
    fs::write(dir.join("config.toml"), resolved).map_err(|e| io_error(&dir, e))?;

    let problems: Vec<String> = results
        .iter()
        .flat_map(|r| r.problems.iter().map(move |p| format!("seed {}: {p}", r.seed)))
        .collect();
    let means = summary_of(&results);
    println!(
        "{}: {} seed(s), {} requests, {} taxis, pickup {:.1} s, distance {:.0} m",
        cfg.name,
        results.len(),
        results.first().map_or(0, |r| r.report.requests),
        results.first().map_or(0, |r| r.report.vehicles),
        means[8].mean,
        means[2].mean,
    );
    if problems.is_empty() {
        Ok(())
    } else {
        fs::write(dir.join("violations.txt"), problems.join("\n") + "\n").map_err(|e| io_error(&dir, e))?;
        Err(CliError::Failed(format!("{} invariant violation(s), first: {}", problems.len(), problems[0])))
    }
}

fn run_seed(cfg: &ScenarioConfig, scenario: &Scenario, seed: u64, dir: &Path) -> Result<SeedResult, CliError> {
    let mut cfg = cfg.clone();
    cfg.params.rng_seed = seed;
    let out = simulate(&cfg, scenario)?;
    let mut problems = check_run(&out);
    problems.extend(out.audit.violations.iter().cloned());

    let sd = dir.join(format!("seed-{seed}"));
    fs::create_dir_all(&sd).map_err(|e| io_error(&sd, e))?;
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| CliError::Failed(e.to_string()))?;
    fs::write(sd.join("report.json"), json).map_err(|e| io_error(&sd, e))?;
    let mut w = csv::Writer::from_path(sd.join("report.csv")).map_err(|e| io_error(&sd, e))?;
    w.write_record(CSV_HEADER).map_err(|e| io_error(&sd, e))?;
    w.write_record(out.report.csv_row().iter().map(|x| x.to_string()))
        .map_err(|e| io_error(&sd, e))?;
    w.flush().map_err(|e| io_error(&sd, e))?;

    let path = sd.join("events.jsonl");
    let mut f = std::io::BufWriter::new(fs::File::create(&path).map_err(|e| io_error(&path, e))?);
    for e in &out.log.events {
        serde_json::to_writer(&mut f, e).map_err(|e| io_error(&path, e))?;
        f.write_all(b"\n").map_err(|e| io_error(&path, e))?;
    }
    f.flush().map_err(|e| io_error(&path, e))?;
    Ok(SeedResult {
        seed,
        report: out.report,
        problems,
    })
}

fn write_runs(path: &Path, results: &[SeedResult]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(std::iter::once("seed").chain(CSV_HEADER)).map_err(|e| io_error(path, e))?;
    for r in results {
        let row = std::iter::once(r.seed.to_string()).chain(r.report.csv_row().into_iter().map(|x| x.to_string()));
        w.write_record(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

/// Mean and population SD of every report column across seeds.
fn summary_of(results: &[SeedResult]) -> Vec<MeanSd> {
    let rows: Vec<Vec<f64>> = results.iter().map(|r| r.report.csv_row()).collect();
    (0..CSV_HEADER.len())
        .map(|c| MeanSd::of(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect()
}

fn write_summary(path: &Path, results: &[SeedResult]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    let header: Vec<String> = CSV_HEADER
        .iter()
        .flat_map(|h| [format!("{h}_mean"), format!("{h}_sd")])
        .collect();
    w.write_record(std::iter::once("runs".to_string()).chain(header))
        .map_err(|e| io_error(path, e))?;
    let row: Vec<String> = std::iter::once(results.len().to_string())
        .chain(summary_of(results).iter().flat_map(|m| [m.mean.to_string(), m.sd.to_string()]))
        .collect();
    w.write_record(row).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}
