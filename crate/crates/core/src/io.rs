//! File formats: distance-matrix CSV, point-cloud JSON, and weighted edge
//! lists (closed under shortest paths on load).

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

#[derive(Deserialize)]
struct PointCloud {
    points: Vec<Vec<f64>>,
    #[serde(default = "default_p")]
    p: f64,
}

fn default_p() -> f64 {
    2.0
}

/// Load a metric from a file, dispatching on extension: `.csv` is an n x n
/// matrix, `.json` a point cloud `{"points": [[..], ..], "p": 2}`, anything
/// else a whitespace-separated `u v w` edge list.
pub fn load_metric(path: &Path) -> Result<MetricSpace> {
    let text = fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let mut m = match ext {
        "csv" => parse_matrix_csv(&text),
        "json" => parse_point_cloud(&text),
        _ => parse_edge_list(&text),
    }?;
    m.provenance = Some(path.display().to_string());
    Ok(m)
}

pub fn parse_matrix_csv(text: &str) -> Result<MetricSpace> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| {
            Error::MalformedInput(format!("line {}: {e}", lineno + 1))
        })?);
    }
    MetricSpace::from_matrix(rows)
}

pub fn parse_point_cloud(text: &str) -> Result<MetricSpace> {
    let cloud: PointCloud = serde_json::from_str(text)?;
    MetricSpace::from_points(&cloud.points, cloud.p)
}

/// Edge list `u v w` per line, 0-based ids; n is 1 + the largest id seen.
pub fn parse_edge_list(text: &str) -> Result<MetricSpace> {
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::MalformedInput(format!(
                "line {}: expected 'u v w'",
                lineno + 1
            )));
        }
        let bad = |e: &dyn std::fmt::Display| Error::MalformedInput(format!("line {}: {e}", lineno + 1));
        let u: usize = fields[0].parse().map_err(|e| bad(&e))?;
        let v: usize = fields[1].parse().map_err(|e| bad(&e))?;
        let w: f64 = fields[2].parse().map_err(|e| bad(&e))?;
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    if n == 0 {
        return Err(Error::MalformedInput("empty edge list".into()));
    }
    MetricSpace::from_edges(n, &edges)
}

/// Write the full matrix as CSV with shortest unambiguous float formatting.
pub fn write_matrix_csv(m: &MetricSpace, path: &Path) -> Result<()> {
    fs::write(path, matrix_csv_string(m))?;
    Ok(())
}

pub fn matrix_csv_string(m: &MetricSpace) -> String {
    let mut out = String::new();
    for i in 0..m.n() {
        for j in 0..m.n() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(m.dist(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Shortest decimal that round-trips (Rust's default f64 Display).
fn format_f64(x: f64) -> String {
    format!("{x}")
}
