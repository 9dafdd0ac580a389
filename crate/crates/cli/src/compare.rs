//! Compare two result files of the same kind.
//!
//! Density series (`tau,x,u`) are compared by the L1 distance of `u` at every
//! time present in both files, using the rectangle rule on the file's own `x`
//! spacing. Other tables are compared column by column, summaries key by key,
//! both by maximum absolute difference.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Result};

use crate::output::{Summary, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub passed: bool,
    /// Largest distance found, in the metric described above.
    pub distance: f64,
    pub lines: Vec<String>,
}

pub fn compare_files(a: &Path, b: &Path, tolerance: f64) -> Result<Comparison> {
    let is_toml = |p: &Path| p.extension().is_some_and(|e| e == "toml");
    match (is_toml(a), is_toml(b)) {
        (true, true) => compare_summaries(&Summary::read(a)?, &Summary::read(b)?, tolerance),
        (false, false) => compare_tables(&Table::read(a)?, &Table::read(b)?, tolerance),
        _ => bail!("cannot compare a summary with a table: {} vs {}", a.display(), b.display()),
    }
}

fn column_mismatch(a: &[String], b: &[String]) -> String {
    let (sa, sb): (BTreeSet<_>, BTreeSet<_>) = (a.iter().collect(), b.iter().collect());
    let only_a: Vec<_> = sa.difference(&sb).collect();
    let only_b: Vec<_> = sb.difference(&sa).collect();
    if only_a.is_empty() && only_b.is_empty() {
        format!("columns in different order: {a:?} vs {b:?}")
    } else {
        format!("columns differ: only in first {only_a:?}, only in second {only_b:?}")
    }
}

fn finish(distance: f64, tolerance: f64, mut lines: Vec<String>) -> Comparison {
    let passed = distance <= tolerance;
    lines.push(format!("{} max distance {distance:e} (tolerance {tolerance:e})", if passed { "PASS" } else { "FAIL" }));
    Comparison { passed, distance, lines }
}

pub fn compare_tables(a: &Table, b: &Table, tolerance: f64) -> Result<Comparison> {
    if a.columns != b.columns {
        bail!("schema mismatch: {}", column_mismatch(&a.columns, &b.columns));
    }
    if a.columns == ["tau", "x", "u"] {
        return compare_series(a, b, tolerance);
    }
    if a.rows.len() != b.rows.len() {
        bail!("schema mismatch: {} rows vs {} rows", a.rows.len(), b.rows.len());
    }
    let mut lines = Vec::new();
    let mut worst = 0.0f64;
    for (j, name) in a.columns.iter().enumerate() {
        let d = a.rows.iter().zip(&b.rows).map(|(ra, rb)| abs_diff(ra[j], rb[j])).fold(0.0, f64::max);
        lines.push(format!("{name}: max |diff| {d:e}"));
        worst = worst.max(d);
    }
    Ok(finish(worst, tolerance, lines))
}

/// `|a - b|`, treating two NaNs as equal.
fn abs_diff(a: f64, b: f64) -> f64 {
    if a.is_nan() && b.is_nan() {
        0.0
    } else {
        (a - b).abs()
    }
}

type Snapshots = BTreeMap<u64, (f64, Vec<(f64, f64)>)>;

fn snapshots(t: &Table) -> Snapshots {
    let mut out: Snapshots = BTreeMap::new();
    for row in &t.rows {
        out.entry(row[0].to_bits()).or_insert_with(|| (row[0], Vec::new())).1.push((row[1], row[2]));
    }
    out
}

fn compare_series(a: &Table, b: &Table, tolerance: f64) -> Result<Comparison> {
    let (sa, sb) = (snapshots(a), snapshots(b));
    let common: Vec<_> = sa.keys().filter(|k| sb.contains_key(k)).collect();
    if common.is_empty() {
        bail!("no common tau values between the two series");
    }
    let mut lines = Vec::new();
    let mut worst = 0.0f64;
    for key in common {
        let (tau, pa) = &sa[key];
        let pb = &sb[key].1;
        let same_x = pa.len() == pb.len() && pa.iter().zip(pb).all(|(p, q)| (p.0 - q.0).abs() <= 1e-12 * p.0.abs().max(1.0));
        if !same_x {
            bail!("x columns differ at tau = {tau}");
        }
        let dx = if pa.len() > 1 { pa[1].0 - pa[0].0 } else { 1.0 };
        let l1 = dx * pa.iter().zip(pb).map(|(p, q)| (p.1 - q.1).abs()).sum::<f64>();
        lines.push(format!("tau = {tau}: L1 {l1:e}"));
        worst = worst.max(l1);
    }
    Ok(finish(worst, tolerance, lines))
}

pub fn compare_summaries(a: &Summary, b: &Summary, tolerance: f64) -> Result<Comparison> {
    if a.experiment != b.experiment {
        bail!("experiment kinds differ: {} vs {}", a.experiment, b.experiment);
    }
    let ka: Vec<String> = a.values.keys().cloned().collect();
    let kb: Vec<String> = b.values.keys().cloned().collect();
    if ka != kb {
        bail!("schema mismatch: {}", column_mismatch(&ka, &kb));
    }
    let mut lines = Vec::new();
    let mut worst = 0.0f64;
    for (key, va) in &a.values {
        let d = abs_diff(*va, b.values[key]);
        lines.push(format!("{key}: |diff| {d:e}"));
        worst = worst.max(d);
    }
    Ok(finish(worst, tolerance, lines))
}
