use std::path::Path;

use chrono::{NaiveDateTime, Timelike};

use drsfr_core::engine::compute_base_fleet;
use drsfr_core::ingest::{clean, load_trips, Region};
use drsfr_core::model::SimParams;

use crate::CliError;

const MULTIPLIERS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

fn parse_datetime(s: &str) -> Result<NaiveDateTime, CliError> {
    ["%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s.trim(), f).ok())
        .ok_or_else(|| CliError::Config(format!("bad date-time `{s}`, expected YYYY-MM-DDTHH:MM")))
}

pub fn cmd_base_fleet(data: &Path, region: &str, from: &str, to: &str) -> Result<(), CliError> {
    let region = Region::named(region).map_err(|e| CliError::Config(e.to_string()))?;
    let (from, to) = (parse_datetime(from)?, parse_datetime(to)?);
    if from >= to {
        return Err(CliError::Config("--from must precede --to".into()));
    }
    let params = SimParams::default();
    let empty = std::fs::metadata(data).map(|m| m.len() == 0).unwrap_or(false);
    let base = if empty {
        0
    } else {
        let (raw, stats) = load_trips(data, Some(&region), Some(from.date()..=to.date()))
            .map_err(|e| CliError::from(drsfr_core::engine::EngineError::from(e)))?;
        if stats.skipped > 0 {
            eprintln!("skipped {} malformed row(s) of {}", stats.skipped, stats.rows);
        }
        let epoch = from.date().and_hms_opt(0, 0, 0).expect("midnight");
        let start = from.hour() * 60 + from.minute();
        let end = start + (to - from).num_minutes() as u32;
        let requests: Vec<_> = clean(&raw, &region, epoch, &params)
            .into_iter()
            .filter(|r| (start..end).contains(&r.t_open.minute()))
            .collect();
        compute_base_fleet(&requests, &params)
    };
    println!("base fleet: {base}");
    println!("multiplier\ttaxis");
    for m in MULTIPLIERS {
        println!("{m:.1}\t{}", drsfr_core::engine::scaled_fleet(base, m));
    }
    Ok(())
}
