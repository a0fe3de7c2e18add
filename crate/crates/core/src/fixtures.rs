//! Deterministic fixture families used by tests and the CLI generator.
//!
//! The two seeded families are pinned down algorithmically so that a spec plus
//! seed always reproduces the same matrix:
//! - `Planar`: n points drawn uniformly from the unit square with ChaCha8
//!   (x then y per point, in id order), under the Euclidean metric.
//! - `Graph`: a random spanning tree (each node i >= 1 picks parent
//!   `gen_range(0..i)`) plus n extra random edges, weights uniform in [1, 2),
//!   closed under all-pairs shortest paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FixtureSpec {
    /// All off-diagonal distances 1.
    Uniform { n: usize },
    /// Path 0..n with unit spacing: d(i,j) = |i-j|.
    Path { n: usize },
    /// k clusters of m points; distance 1 inside a cluster, s across.
    Clusters { k: usize, m: usize, s: f64 },
    /// Seeded random points in the unit square, Euclidean.
    Planar { n: usize, seed: u64 },
    /// Seeded random connected weighted graph, shortest-path metric.
    Graph { n: usize, seed: u64 },
}

impl FixtureSpec {
    /// Parse a compact descriptor: `U16`, `L64`, `C2x2x10`, `planar16s7`,
    /// `graph64s1`.
    pub fn parse(s: &str) -> Result<FixtureSpec> {
        let bad = || Error::UnknownFixture(s.to_string());
        if let Some(rest) = s.strip_prefix("planar") {
            let (n, seed) = rest.split_once('s').ok_or_else(bad)?;
            return Ok(FixtureSpec::Planar {
                n: n.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            });
        }
        if let Some(rest) = s.strip_prefix("graph") {
            let (n, seed) = rest.split_once('s').ok_or_else(bad)?;
            return Ok(FixtureSpec::Graph {
                n: n.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            });
        }
        match s.split_at(1) {
            ("U", n) => Ok(FixtureSpec::Uniform { n: n.parse().map_err(|_| bad())? }),
            ("L", n) => Ok(FixtureSpec::Path { n: n.parse().map_err(|_| bad())? }),
            ("C", rest) => {
                let parts: Vec<&str> = rest.split('x').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(FixtureSpec::Clusters {
                    k: parts[0].parse().map_err(|_| bad())?,
                    m: parts[1].parse().map_err(|_| bad())?,
                    s: parts[2].parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FixtureSpec::Uniform { n } => format!("U{n}"),
            FixtureSpec::Path { n } => format!("L{n}"),
            FixtureSpec::Clusters { k, m, s } => format!("C{k}x{m}x{s}"),
            FixtureSpec::Planar { n, seed } => format!("planar{n}s{seed}"),
            FixtureSpec::Graph { n, seed } => format!("graph{n}s{seed}"),
        }
    }
}

pub fn generate(spec: &FixtureSpec) -> Result<MetricSpace> {
    let mut m = match *spec {
        FixtureSpec::Uniform { n } => {
            check_n(n)?;
            let rows = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect();
            MetricSpace::from_matrix(rows)
        }
        FixtureSpec::Path { n } => {
            check_n(n)?;
            let rows = (0..n)
                .map(|i| (0..n).map(|j| (i as f64 - j as f64).abs()).collect())
                .collect();
            MetricSpace::from_matrix(rows)
        }
        FixtureSpec::Clusters { k, m, s } => {
            check_n(k.checked_mul(m).unwrap_or(0))?;
            if s < 1.0 {
                return Err(Error::InvalidParameters(format!(
                    "cluster separation {s} must be >= intra-distance 1"
                )));
            }
            let n = k * m;
            let rows = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                0.0
                            } else if i / m == j / m {
                                1.0
                            } else {
                                s
                            }
                        })
                        .collect()
                })
                .collect();
            MetricSpace::from_matrix(rows)
        }
        FixtureSpec::Planar { n, seed } => {
            check_n(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let x: f64 = rng.gen();
                    let y: f64 = rng.gen();
                    vec![x, y]
                })
                .collect();
            MetricSpace::from_points(&pts, 2.0)
        }
        FixtureSpec::Graph { n, seed } => {
            check_n(n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::with_capacity(2 * n);
            for i in 1..n {
                let p = rng.gen_range(0..i);
                let w: f64 = 1.0 + rng.gen::<f64>();
                edges.push((p, i, w));
            }
            for _ in 0..n {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                let w: f64 = 1.0 + rng.gen::<f64>();
                if u != v {
                    edges.push((u.min(v), u.max(v), w));
                }
            }
            if n == 1 {
                MetricSpace::from_edges(1, &[])
            } else {
                MetricSpace::from_edges(n, &edges)
            }
        }
    }?;
    m.provenance = Some(spec.describe());
    Ok(m)
}

/// Seeded per-point integer weights in `1..=hi`, as floats.
pub fn seeded_weights(n: usize, hi: u64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(1..=hi) as f64).collect()
}

/// A seeded random metric on n points: shortest-path closure of a random
/// complete graph with edge lengths in [1, 2). Used by oracle-equivalence
/// tests at small n.
pub fn random_metric(n: usize, seed: u64) -> Result<MetricSpace> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j, 1.0 + rng.gen::<f64>()));
        }
    }
    MetricSpace::from_edges(n, &edges)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameters("fixture needs n >= 1".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform() {
        let m = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.dist(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn clusters_c22() {
        let m = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        assert_eq!(m.dist(0, 1), 1.0);
        assert_eq!(m.dist(2, 3), 1.0);
        assert_eq!(m.dist(0, 2), 10.0);
        assert_eq!(m.dist(1, 3), 10.0);
    }

    #[test]
    fn path_l8() {
        let m = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        assert_eq!(m.dist(0, 7), 7.0);
        assert_eq!(m.diameter(), 7.0);
    }

    #[test]
    fn seeded_families_are_reproducible_and_metric() {
        for spec in [
            FixtureSpec::Planar { n: 16, seed: 7 },
            FixtureSpec::Graph { n: 16, seed: 7 },
        ] {
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            for i in 0..16 {
                for j in 0..16 {
                    assert_eq!(a.dist(i, j), b.dist(i, j));
                }
            }
            a.validate_triangle().unwrap();
        }
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["U16", "L64", "C2x2x10", "planar16s7", "graph64s1"] {
            let spec = FixtureSpec::parse(s).unwrap();
            assert_eq!(spec.describe(), s);
        }
        assert!(FixtureSpec::parse("Z9").is_err());
    }

    #[test]
    fn random_metric_valid() {
        let m = random_metric(6, 3).unwrap();
        m.validate_triangle().unwrap();
        assert_eq!(m.n(), 6);
    }
}
