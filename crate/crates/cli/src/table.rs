use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Reference relative regrets (%) for cases a-d.
pub const REFERENCE: [(&str, [f64; 4]); 2] = [
    ("dal", [3.43, 8.26, 8.26, 11.02]),
    ("ial", [3.45, 5.84, 5.86, 6.54]),
];

const CASES: [&str; 4] = ["a", "b", "c", "d"];

/// `summary.csv` in `dir` and in each immediate subdirectory.
pub fn summary_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Config(format!("{}: {e}", dir.display()));
    let mut out = Vec::new();
    let top = dir.join("summary.csv");
    if top.is_file() {
        out.push(top);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    out.extend(
        subdirs
            .into_iter()
            .map(|d| d.join("summary.csv"))
            .filter(|p| p.is_file()),
    );
    Ok(out)
}

/// Mean relative regret in percent per `(algorithm, case)`.
pub fn collect(files: &[PathBuf]) -> Result<BTreeMap<(String, String), f64>, CliError> {
    let mut acc: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for path in files {
        let err = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(err)?;
        let headers = r.headers().map_err(err)?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::Config(format!("{}: no `{name}` column", path.display())))
        };
        let (ia, ic, ir) = (col("algorithm")?, col("case")?, col("relative_regret")?);
        for rec in r.records() {
            let rec = rec.map_err(err)?;
            let Ok(v) = rec[ir].parse::<f64>() else {
                continue;
            };
            let e = acc
                .entry((rec[ia].to_string(), rec[ic].to_string()))
                .or_insert((0.0, 0));
            e.0 += 100.0 * v;
            e.1 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect())
}

pub fn render(means: &BTreeMap<(String, String), f64>) -> Result<String, CliError> {
    let mut out = String::from("relative regret (%), measured [reference, deviation]\n");
    out.push_str(&format!("{:<5}", ""));
    for c in CASES {
        out.push_str(&format!("{:>24}", format!("case {c}")));
    }
    out.push('\n');
    for (alg, reference) in REFERENCE {
        out.push_str(&format!("{:<5}", alg.to_uppercase()));
        for (k, c) in CASES.iter().enumerate() {
            let v = means
                .get(&(alg.to_string(), c.to_string()))
                .ok_or_else(|| CliError::Config(format!("missing case data: {alg} case {c}")))?;
            out.push_str(&format!(
                "{:>24}",
                format!("{v:.2} [{:.2}, {:+.2}]", reference[k], v - reference[k])
            ));
        }
        out.push('\n');
    }
    Ok(out)
}
