use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use drsfr_core::engine::{Algorithm, ScenarioConfig};

use crate::{io_error, svg, CliError};

/// Report columns compared across runs, with display names.
pub const COLUMNS: [(&str, &str); 10] = [
    ("distance_driven_m", "Distance (m)"),
    ("elapsed_ns", "Elapsed (ns)"),
    ("time_to_pair_s", "Time to pair (s)"),
    ("time_to_pair_taxi_s", "Time to pair with taxi (s)"),
    ("time_to_pickup_s", "Time to pickup (s)"),
    ("delay_s", "Delay (s)"),
    ("cumulative_delay_s", "Cumulative delay (s)"),
    ("driver_profit_usd", "Driver profit ($)"),
    ("platform_profit_usd", "Platform profit ($)"),
    ("frictions_s", "Frictions (s)"),
];

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub config: ScenarioConfig,
    /// Mean over seeds of each entry of [`COLUMNS`].
    pub values: Vec<f64>,
}

fn read_summary(dir: &Path) -> Result<Option<RunSummary>, CliError> {
    let (summary, config) = (dir.join("summary.csv"), dir.join("config.toml"));
    if !summary.is_file() || !config.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&config).map_err(|e| io_error(&config, e))?;
    let cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| io_error(&config, e.message()))?;
    let mut r = csv::Reader::from_path(&summary).map_err(|e| io_error(&summary, e))?;
    let header = r.headers().map_err(|e| io_error(&summary, e))?.clone();
    let row = r
        .records()
        .next()
        .ok_or_else(|| io_error(&summary, "no summary row"))?
        .map_err(|e| io_error(&summary, e))?;
    let fields: BTreeMap<&str, f64> = header
        .iter()
        .zip(row.iter())
        .filter_map(|(h, v)| Some((h, v.parse().ok()?)))
        .collect();
    let values = COLUMNS
        .iter()
        .map(|(c, _)| {
            fields
                .get(format!("{c}_mean").as_str())
                .copied()
                .ok_or_else(|| io_error(&summary, format!("missing column {c}_mean")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(RunSummary {
        label: cfg.name.clone(),
        config: cfg,
        values,
    }))
}

/// Completed runs under `dir`, ordered by algorithm, runs without
/// relocation first.
pub fn collect_runs(dir: &Path) -> Result<Vec<RunSummary>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let mut runs = Vec::new();
    for d in dirs {
        if let Some(r) = read_summary(&d)? {
            runs.push(r);
        }
    }
    let rank = |a: Algorithm| Algorithm::ALL.iter().position(|&x| x == a).unwrap_or(usize::MAX);
    runs.sort_by(|a, b| {
        (rank(a.config.algorithm), a.config.relocation.is_some(), &a.label).cmp(&(
            rank(b.config.algorithm),
            b.config.relocation.is_some(),
            &b.label,
        ))
    });
    Ok(runs)
}

/// Percentage change of `x` against `base`.
pub fn relative(x: f64, base: f64) -> String {
    if x == base {
        "0.00%".into()
    } else if base == 0.0 {
        "n/a".into()
    } else {
        format!("{:+.2}%", 100.0 * (x - base) / base.abs())
    }
}

/// Every row relative to the first one.
pub fn comparison_rows(runs: &[RunSummary]) -> Vec<Vec<String>> {
    let Some(base) = runs.first() else {
        return Vec::new();
    };
    runs.iter()
        .map(|r| {
            let cells = r.values.iter().zip(&base.values).map(|(&x, &b)| relative(x, b));
            std::iter::once(r.label.clone()).chain(cells).collect()
        })
        .collect()
}

/// Mean values over seeds.
pub fn value_rows(runs: &[RunSummary]) -> Vec<Vec<String>> {
    runs.iter()
        .map(|r| std::iter::once(r.label.clone()).chain(r.values.iter().map(|x| format!("{x:.2}"))).collect())
        .collect()
}

/// Runs with relocation against the same setup without it.
pub fn relocation_rows(runs: &[RunSummary]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in runs.iter().filter(|r| r.config.relocation.is_some()) {
        let same = |b: &&RunSummary| {
            b.config.relocation.is_none()
                && b.config.algorithm == r.config.algorithm
                && b.config.fleet == r.config.fleet
                && b.config.fleet_multiplier == r.config.fleet_multiplier
        };
        if let Some(base) = runs.iter().find(same) {
            let cells = r.values.iter().zip(&base.values).map(|(&x, &b)| relative(x, b));
            rows.push(
                [r.label.clone(), base.label.clone()]
                    .into_iter()
                    .chain(cells)
                    .collect(),
            );
        }
    }
    rows
}

fn markdown(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn write_table(dir: &Path, stem: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
    w.write_record(header).map_err(|e| io_error(&path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_error(&path, e))?;
    }
    w.flush().map_err(|e| io_error(&path, e))?;
    let md = markdown(header, rows);
    let path = dir.join(format!("{stem}.md"));
    fs::write(&path, &md).map_err(|e| io_error(&path, e))?;
    Ok(md)
}

pub fn cmd_report(dir: &Path) -> Result<(), CliError> {
    let runs = collect_runs(dir)?;
    if runs.is_empty() {
        return Err(CliError::Failed(format!(
            "no completed runs under {} (expected subdirectories with summary.csv and config.toml)",
            dir.display()
        )));
    }
    let names: Vec<&str> = COLUMNS.iter().map(|c| c.1).collect();
    let header: Vec<&str> = std::iter::once("Run").chain(names.iter().copied()).collect();
    write_table(dir, "values", &header, &value_rows(&runs))?;
    let md = write_table(dir, "comparison", &header, &comparison_rows(&runs))?;
    println!("{md}");

    let gains = relocation_rows(&runs);
    if !gains.is_empty() {
        let header: Vec<&str> = ["Run", "Baseline"].into_iter().chain(names.iter().copied()).collect();
        let md = write_table(dir, "relocation", &header, &gains)?;
        println!("{md}");
    }

    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| io_error(&plots, e))?;
    let labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    for (k, (key, title)) in COLUMNS.iter().enumerate() {
        let values: Vec<f64> = runs.iter().map(|r| r.values[k]).collect();
        let path = plots.join(format!("{key}.svg"));
        fs::write(&path, svg::bar_chart(title, &labels, &values)).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}
