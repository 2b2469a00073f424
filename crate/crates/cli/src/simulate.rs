use std::time::Instant;

use ega_core::simstudy::{aggregate, rollup, run_condition, Outcome, ReplicationRecord, RollupLevel};
use serde::Serialize;

use crate::args::SimulateArgs;
use crate::config::{resolve, StudyParameters};
use crate::error::Result;
use crate::io::{csv_text, ensure_dir, exact, fixed, write_json, write_text};

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "n_factors",
    "items_per_factor",
    "n",
    "corr",
    "method",
    "n_reps",
    "acc_mean",
    "acc_sd",
    "mbe_mean",
    "mbe_sd",
    "mae_mean",
    "mae_sd",
    "failures",
];

#[derive(Debug, Serialize)]
struct Manifest {
    version: &'static str,
    seed: u64,
    parameters: StudyParameters,
    files: Vec<&'static str>,
    wall_time_seconds: f64,
}

pub fn run(a: &SimulateArgs) -> Result<()> {
    let study = resolve(a)?;
    let start = Instant::now();
    let mut records: Vec<ReplicationRecord> = Vec::with_capacity(study.conditions.len() * study.reps);
    for cond in &study.conditions {
        records.extend(run_condition(cond, &study.settings, study.reps, study.seed)?);
    }
    let elapsed = start.elapsed().as_secs_f64();

    let dir = ensure_dir(&study.out_dir)?;
    write_text(Some(&dir.join("summary.csv")), &summary_csv(&records))?;
    write_text(Some(&dir.join("rollup.csv")), &rollup_csv(&records))?;
    write_text(Some(&dir.join("replications.csv")), &replications_csv(&records))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: study.seed,
        parameters: study.parameters(),
        files: vec!["summary.csv", "rollup.csv", "replications.csv"],
        wall_time_seconds: elapsed,
    };
    write_json(Some(&dir.join("manifest.json")), &manifest)
}

fn stats_cells(
    n_reps: usize,
    acc: (f64, f64),
    mbe: (Option<f64>, Option<f64>),
    mae: (Option<f64>, Option<f64>),
    failures: usize,
) -> Vec<String> {
    vec![
        n_reps.to_string(),
        fixed(Some(acc.0)),
        fixed(Some(acc.1)),
        fixed(mbe.0),
        fixed(mbe.1),
        fixed(mae.0),
        fixed(mae.1),
        failures.to_string(),
    ]
}

/// One row per (condition, method), in design order then method order.
pub fn summary_csv(records: &[ReplicationRecord]) -> String {
    let rows: Vec<Vec<String>> = aggregate(records)
        .iter()
        .map(|s| {
            let c = &s.condition;
            let mut row = vec![
                c.n_factors.to_string(),
                c.items_per_factor.to_string(),
                c.sample_size.to_string(),
                exact(c.factor_corr),
                s.method.to_string(),
            ];
            row.extend(stats_cells(
                s.n_reps,
                (s.accuracy_mean, s.accuracy_sd),
                (s.mbe_mean, s.mbe_sd),
                (s.mae_mean, s.mae_sd),
                s.failure_count,
            ));
            row
        })
        .collect();
    csv_text(&SUMMARY_COLUMNS, &rows)
}

/// Pooled rows per factor count and one other design factor (correlation,
/// sample size, items per factor), plus per factor count alone. Pooled
/// columns are left empty.
pub fn rollup_csv(records: &[ReplicationRecord]) -> String {
    let levels = [
        (
            "corr",
            RollupLevel {
                n_factors: true,
                factor_corr: true,
                ..Default::default()
            },
        ),
        (
            "n",
            RollupLevel {
                n_factors: true,
                sample_size: true,
                ..Default::default()
            },
        ),
        (
            "items",
            RollupLevel {
                n_factors: true,
                items_per_factor: true,
                ..Default::default()
            },
        ),
        (
            "total",
            RollupLevel {
                n_factors: true,
                ..Default::default()
            },
        ),
    ];
    let mut rows = Vec::new();
    for (name, level) in levels {
        for s in rollup(records, level) {
            let k = &s.key;
            let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
            let mut row = vec![
                name.to_string(),
                opt(k.n_factors),
                opt(k.items_per_factor),
                opt(k.sample_size),
                k.factor_corr.map_or(String::new(), exact),
                s.method.to_string(),
            ];
            row.extend(stats_cells(
                s.n_reps,
                (s.accuracy_mean, s.accuracy_sd),
                (s.mbe_mean, s.mbe_sd),
                (s.mae_mean, s.mae_sd),
                s.failure_count,
            ));
            rows.push(row);
        }
    }
    let mut header = vec!["level"];
    header.extend(SUMMARY_COLUMNS);
    csv_text(&header, &rows)
}

/// Every estimate of every replication.
pub fn replications_csv(records: &[ReplicationRecord]) -> String {
    let mut rows = Vec::new();
    for rec in records {
        let c = &rec.condition;
        for (method, outcome) in &rec.outcomes {
            let (k_hat, error) = match outcome {
                Outcome::Estimate(k) => (k.to_string(), String::new()),
                Outcome::Failure(msg) => (String::new(), msg.clone()),
            };
            rows.push(vec![
                c.n_factors.to_string(),
                c.items_per_factor.to_string(),
                c.sample_size.to_string(),
                exact(c.factor_corr),
                rec.rep_index.to_string(),
                rec.seed.to_string(),
                method.to_string(),
                k_hat,
                error,
            ]);
        }
    }
    csv_text(
        &[
            "n_factors",
            "items_per_factor",
            "n",
            "corr",
            "rep",
            "seed",
            "method",
            "k_hat",
            "error",
        ],
        &rows,
    )
}
