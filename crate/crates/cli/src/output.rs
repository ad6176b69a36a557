use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::CliError;
use crate::runner::{Episode, RunOutput, SummaryRow};

fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    if rows.is_empty() {
        w.write_record(HEADER).map_err(csv_error)?;
    }
    w.into_inner().map_err(csv_error)
}

const HEADER: [&str; 12] = [
    "replication",
    "algorithm",
    "case",
    "T",
    "alg_value",
    "benchmark_value",
    "regret",
    "relative_regret",
    "max_violation",
    "tau",
    "W_theta",
    "wall_ms",
];

/// Sample mean and standard error; the error is absent for a single value.
pub fn mean_se(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Long format: one row per `(algorithm, case, T, metric)`. Optional
/// metrics are averaged over the rows that have them.
pub fn aggregate_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, CliError> {
    let mut groups: BTreeMap<(String, String, usize), Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.algorithm.clone(), r.case.clone(), r.horizon))
            .or_default()
            .push(r);
    }
    type Metric = (&'static str, fn(&SummaryRow) -> Option<f64>);
    let metrics: [Metric; 8] = [
        ("alg_value", |r| Some(r.alg_value)),
        ("benchmark_value", |r| Some(r.benchmark_value)),
        ("regret", |r| Some(r.regret)),
        ("relative_regret", |r| r.relative_regret),
        ("max_violation", |r| Some(r.max_violation)),
        ("tau", |r| Some(r.tau as f64)),
        ("W_theta", |r| r.w_theta.map(|w| w as f64)),
        ("wall_ms", |r| Some(r.wall_ms as f64)),
    ];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algorithm", "case", "T", "metric", "n", "mean", "se"])
        .map_err(csv_error)?;
    for ((alg, case, t), group) in &groups {
        for (name, get) in metrics {
            let values: Vec<f64> = group.iter().filter_map(|r| get(r)).collect();
            if values.is_empty() {
                continue;
            }
            let (mean, se) = mean_se(&values);
            let se = se.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([
                alg,
                case,
                &t.to_string(),
                name,
                &values.len().to_string(),
                &mean.to_string(),
                &se,
            ])
            .map_err(csv_error)?;
        }
    }
    w.into_inner().map_err(csv_error)
}

/// Per-period series: budget, chosen constraint (index `m` is the dummy
/// expert, empty after termination), costs, cumulative usage and service levels.
pub fn trajectory_csv(ep: &Episode, m: usize) -> Result<Vec<u8>, CliError> {
    let dim_c = ep.log.records.first().map_or(0, |r| r.c.len());
    let mut header = vec!["t".to_string()];
    if dim_c == 1 {
        header.push("c_t".into());
    } else {
        header.extend((1..=dim_c).map(|k| format!("c_t_{k}")));
    }
    header.extend(["i_t", "f_t", "p_t"].map(String::from));
    header.extend((1..=m).map(|i| format!("g_{i}")));
    header.extend((1..=m).map(|i| format!("service_level_{i}")));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_error)?;
    let mut cum = vec![0.0; m];
    for rec in &ep.log.records {
        for (c, g) in cum.iter_mut().zip(&rec.g) {
            *c += g;
        }
        let mut line = vec![rec.t.to_string()];
        line.extend(rec.c.iter().map(f64::to_string));
        line.push(rec.i.map(|i| i.to_string()).unwrap_or_default());
        line.push(rec.f.to_string());
        line.push(rec.p.to_string());
        line.extend(cum.iter().map(f64::to_string));
        line.extend(cum.iter().map(|g| (g / rec.t as f64).to_string()));
        w.write_record(&line).map_err(csv_error)?;
    }
    w.into_inner().map_err(csv_error)
}

/// Renders every file first, then writes them, so a failure while rendering
/// leaves the directory untouched.
pub fn write_all(dir: &Path, out: &RunOutput) -> Result<Vec<String>, CliError> {
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for (k, (bench, rows)) in out.summaries.iter().enumerate() {
        let suffix = if k == 0 {
            String::new()
        } else {
            format!("_{bench}")
        };
        files.push((format!("summary{suffix}.csv"), summary_csv(rows)?));
        files.push((format!("aggregate{suffix}.csv"), aggregate_csv(rows)?));
    }
    for ep in &out.episodes {
        files.push((
            format!("trajectory_{}_{}.csv", ep.algorithm, ep.replication),
            trajectory_csv(ep, out.beta.len())?,
        ));
    }
    let io = |e: std::io::Error| CliError::Config(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes).map_err(io)?;
    }
    Ok(files.into_iter().map(|(n, _)| n).collect())
}
