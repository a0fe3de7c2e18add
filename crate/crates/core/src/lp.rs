//! Experimental multi-scale coordinate embedding: one padded partition
//! bundle per distance scale, clusters tagged with binary codewords, one
//! coordinate per (round, codeword bit). Deterministic throughout; the
//! hard guarantees are the Lipschitz and expansion bounds, distortion is
//! reported rather than promised.

use serde::{Deserialize, Serialize};

use crate::bundle::{build_partition_bundle, PartitionBundle};
use crate::error::{Error, Result};
use crate::metric::{set_distance, MetricSpace, WeightFunction};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleMeta {
    pub delta_hat: f64,
    pub rounds: usize,
    pub codeword_len: usize,
    /// multiplier applied to the whole scale block
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub scale: usize,
    pub round: usize,
    pub bit: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoordinateEmbedding {
    /// row per point, already normalized
    pub coords: Vec<Vec<f64>>,
    pub p: f64,
    pub scales: Vec<ScaleMeta>,
    pub columns: Vec<ColumnMeta>,
}

const REL_EPS: f64 = 1e-9;

pub fn deterministic_lp_embed(
    x: &MetricSpace,
    p: f64,
    delta: f64,
) -> Result<CoordinateEmbedding> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidNorm(p));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidFraction(delta));
    }
    let n = x.n();
    let mut emb = CoordinateEmbedding {
        coords: vec![Vec::new(); n],
        p,
        scales: Vec::new(),
        columns: Vec::new(),
    };
    if n < 2 {
        return Ok(emb);
    }
    let w = WeightFunction::unit(n);
    let diam = x.diameter();
    let num_scales = x.aspect_ratio().log2().ceil().max(0.0) as usize + 1;

    for j in 0..num_scales {
        let delta_hat = diam / 2f64.powi(j as i32);
        let bundle = build_partition_bundle(x, &w, delta_hat, delta)?;
        append_scale(x, &mut emb, j, &bundle)?;
    }
    check_lipschitz(x, &emb)?;
    Ok(emb)
}

/// One coordinate per (round, bit): the bit of the cluster's codeword
/// gates the distance to the cluster's complement in the whole space,
/// capped at the scale.
fn append_scale(
    x: &MetricSpace,
    emb: &mut CoordinateEmbedding,
    scale_idx: usize,
    bundle: &PartitionBundle,
) -> Result<()> {
    let n = x.n();
    let rounds = bundle.rounds.len();
    let max_clusters = bundle.max_clusters();
    let codeword_len = ((max_clusters as f64).log2().ceil() as usize).max(1);
    let norm = ((rounds * codeword_len) as f64).powf(-1.0 / emb.p);
    let all: Vec<usize> = (0..n).collect();
    for (b, round) in bundle.rounds.iter().enumerate() {
        // cluster index per point, in the round's deterministic order
        let mut cluster_of = vec![usize::MAX; n];
        for (ci, c) in round.clusters.iter().enumerate() {
            for m in c.members.iter() {
                cluster_of[m] = ci;
            }
        }
        for bit in 0..codeword_len {
            emb.columns.push(ColumnMeta { scale: scale_idx, round: b, bit });
            for point in 0..n {
                let ci = cluster_of[point];
                let value = if ci == usize::MAX {
                    // point retired before this round: its cluster is the
                    // whole space by convention, codeword 0
                    0.0
                } else {
                    let code_bit = (ci >> (codeword_len - 1 - bit)) & 1;
                    if code_bit == 0 {
                        0.0
                    } else {
                        let cluster = &round.clusters[ci].members;
                        let complement: Vec<usize> =
                            all.iter().copied().filter(|m| !cluster.contains(*m)).collect();
                        if complement.is_empty() {
                            bundle.delta_hat
                        } else {
                            set_distance(x, &[point], &complement).min(bundle.delta_hat)
                        }
                    }
                };
                emb.coords[point].push(value * norm);
            }
        }
    }
    emb.scales.push(ScaleMeta { delta_hat: bundle.delta_hat, rounds, codeword_len, norm });
    Ok(())
}

/// Per-coordinate Lipschitz factor 2 (before normalization), and expansion
/// at most 2 * scales^(1/p) overall.
fn check_lipschitz(x: &MetricSpace, emb: &CoordinateEmbedding) -> Result<()> {
    let n = x.n();
    let num_scales = emb.scales.len() as f64;
    let cap = 2.0 * num_scales.powf(1.0 / emb.p);
    // column -> its scale's normalization, to undo it for the raw bound
    let norms: Vec<f64> = emb.columns.iter().map(|c| emb.scales[c.scale].norm).collect();
    for a in 0..n {
        for b in a + 1..n {
            let d = x.dist(a, b);
            for (c, &norm) in norms.iter().enumerate() {
                let diff = (emb.coords[a][c] - emb.coords[b][c]).abs() / norm;
                if diff > 2.0 * d * (1.0 + REL_EPS) {
                    return Err(Error::guarantee(
                        format!("coordinate {c} Lipschitz |f(x)-f(y)| <= 2 d(x,y)"),
                        diff,
                        2.0 * d,
                    ));
                }
            }
            let dist = emb.distance(a, b);
            if dist > cap * d * (1.0 + REL_EPS) {
                return Err(Error::guarantee("expansion <= 2 scales^(1/p)", dist / d, cap));
            }
        }
    }
    Ok(())
}

impl CoordinateEmbedding {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let mut acc = 0.0;
        for (u, v) in self.coords[a].iter().zip(&self.coords[b]) {
            acc += (u - v).abs().powf(self.p);
        }
        acc.powf(1.0 / self.p)
    }

    /// Worst pair ratios: (max expansion, max contraction factor) plus the
    /// product, the usual two-sided distortion.
    pub fn measured_distortion(&self, x: &MetricSpace) -> (f64, f64, f64) {
        let n = x.n();
        let mut expand: f64 = 0.0;
        let mut contract: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                let r = self.distance(a, b) / x.dist(a, b);
                expand = expand.max(r);
                contract = contract.max(1.0 / r);
            }
        }
        (expand, contract, expand * contract)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in &self.coords {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn manifest_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "dim": self.dim(),
            "scales": self.scales,
            "columns": self.columns,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureSpec};

    #[test]
    fn two_points_exact() {
        let x = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = deterministic_lp_embed(&x, 2.0, 0.5).unwrap();
        assert_eq!(e.scales.len(), 1);
        assert!((e.distance(0, 1) - 1.0).abs() < 1e-12, "{}", e.distance(0, 1));
    }

    #[test]
    fn single_point_empty() {
        let x = generate(&FixtureSpec::Uniform { n: 1 }).unwrap();
        let e = deterministic_lp_embed(&x, 2.0, 0.5).unwrap();
        assert_eq!(e.dim(), 0);
    }

    #[test]
    fn u4_finite_distortion() {
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        let e = deterministic_lp_embed(&x, 2.0, 0.5).unwrap();
        let (expand, contract, total) = e.measured_distortion(&x);
        assert!(expand.is_finite() && contract.is_finite());
        assert!(total >= 1.0);
    }

    #[test]
    fn l8_bounds() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        for p in [1.0, 2.0] {
            let e = deterministic_lp_embed(&x, p, 0.5).unwrap();
            assert!(e.dim() > 0);
            let (_, _, total) = e.measured_distortion(&x);
            assert!(total.is_finite());
            // dimension cap: scales * max rounds * ceil(log2 n)
            let max_rounds = e.scales.iter().map(|s| s.rounds).max().unwrap();
            assert!(e.dim() <= e.scales.len() * max_rounds * 3);
        }
    }

    #[test]
    fn rejects_bad_params() {
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        assert!(matches!(deterministic_lp_embed(&x, 0.5, 0.5), Err(Error::InvalidNorm(_))));
        assert!(deterministic_lp_embed(&x, 2.0, 1.0).is_err());
    }

    #[test]
    fn csv_shape() {
        let x = generate(&FixtureSpec::Path { n: 4 }).unwrap();
        let e = deterministic_lp_embed(&x, 2.0, 0.5).unwrap();
        let csv = e.to_csv_string();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), e.dim());
    }
}
