//! Covers by ultrametrics and the constant-time approximate distance
//! oracle built on them. A cover iterates the whole-space embedding on the
//! points whose core guarantee has not yet been met; the oracle answers a
//! pair from the deepest layer containing both points.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{ramsey_embed_within, RamseyEmbedding};
use crate::error::{Error, Result};
use crate::hst::LcaIndex;
use crate::metric::{MetricSpace, Subspace, WeightFunction};
use crate::ramsey::{partial_t, RamseyParams};
use crate::schedule::ScalingSchedule;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum CoverBuilder {
    Basic { t: usize },
    Partial { delta: f64, eps: f64 },
    Scaling { delta: f64, schedule: ScalingSchedule },
}

impl CoverBuilder {
    pub fn params(&self) -> RamseyParams {
        match *self {
            CoverBuilder::Basic { t } => RamseyParams::Basic { t },
            CoverBuilder::Partial { delta, eps } => {
                RamseyParams::Partial { delta, eps, t_p: partial_t(delta, eps) }
            }
            CoverBuilder::Scaling { delta, schedule } => RamseyParams::Scaling { delta, schedule },
        }
    }

    /// Pair-independent stretch ceiling: for the scaling builder this is
    /// the worst case over pairs, attained at the coarsest scale level.
    pub fn alpha(&self) -> f64 {
        match *self {
            CoverBuilder::Basic { t } => 16.0 * t as f64,
            CoverBuilder::Partial { delta, eps } => 16.0 * partial_t(delta, eps) as f64,
            CoverBuilder::Scaling { delta, schedule } => {
                let level = (2.0f64.ln() / (1.0 / delta).ln()).max(1.0);
                (16.0 * schedule.theta(level).ceil()).max(4.0)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoverLayer {
    pub members: Subspace,
    pub embedding: RamseyEmbedding,
}

#[derive(Clone, Debug)]
pub struct RamseyCover {
    pub layers: Vec<CoverLayer>,
    /// layer index whose core first captured each point
    pub home: Vec<usize>,
    pub builder: CoverBuilder,
}

pub fn build_cover(x: &MetricSpace, w: &WeightFunction, builder: CoverBuilder) -> Result<RamseyCover> {
    let n = x.n();
    let mut alive = Subspace::full(n);
    let mut layers = Vec::new();
    let mut home = vec![usize::MAX; n];
    while !alive.is_empty() {
        let emb = ramsey_embed_within(x, w, &alive, builder.params())?;
        if emb.core.is_empty() {
            return Err(Error::guarantee("cover layer core nonempty", 0.0, 1.0));
        }
        for p in emb.core.iter() {
            home[p] = layers.len();
        }
        let next = alive.minus(&emb.core);
        layers.push(CoverLayer { members: alive, embedding: emb });
        alive = next;
    }
    Ok(RamseyCover { layers, home, builder })
}

impl RamseyCover {
    /// Sum of layer sizes, the oracle's space measure.
    pub fn space(&self) -> usize {
        self.layers.iter().map(|l| l.members.len()).sum()
    }
}

pub struct DistanceOracle {
    pub cover: RamseyCover,
    pub alpha: f64,
    indexes: Vec<LcaIndex>,
    /// handles[i][p] = leaf of point p in layer i, or MAX when absent
    handles: Vec<Vec<usize>>,
}

/// Fixed probe budget of one query: two home reads, two handle reads, the
/// constant-probe LCA, one label read.
pub const QUERY_PROBES: u32 = 2 + 2 + crate::hst::LCA_PROBES + 1;

pub fn oracle_build(
    x: &MetricSpace,
    w: &WeightFunction,
    builder: CoverBuilder,
) -> Result<DistanceOracle> {
    let cover = build_cover(x, w, builder)?;
    DistanceOracle::from_cover(cover)
}

impl DistanceOracle {
    pub fn from_cover(cover: RamseyCover) -> Result<DistanceOracle> {
        let n = cover.home.len();
        let mut indexes = Vec::with_capacity(cover.layers.len());
        let mut handles = Vec::with_capacity(cover.layers.len());
        for layer in &cover.layers {
            indexes.push(LcaIndex::build(&layer.embedding.tree));
            let mut h = vec![usize::MAX; n];
            for p in layer.members.iter() {
                h[p] = layer.embedding.tree.leaf_of_point(p)?;
            }
            handles.push(h);
        }
        let alpha = cover.builder.alpha();
        Ok(DistanceOracle { cover, alpha, indexes, handles })
    }

    pub fn n(&self) -> usize {
        self.cover.home.len()
    }

    pub fn query(&self, a: usize, b: usize) -> Result<f64> {
        self.query_counted(a, b).map(|(d, _)| d)
    }

    /// Answer plus the number of structure probes spent, which is the same
    /// constant for every distinct pair.
    pub fn query_counted(&self, a: usize, b: usize) -> Result<(f64, u32)> {
        let n = self.n();
        if a >= n {
            return Err(Error::UnknownPoint(a));
        }
        if b >= n {
            return Err(Error::UnknownPoint(b));
        }
        if a == b {
            return Ok((0.0, 0));
        }
        let i = self.cover.home[a].min(self.cover.home[b]);
        let (la, lb) = (self.handles[i][a], self.handles[i][b]);
        let (lca, lca_probes) = self.indexes[i].lca_counted(la, lb);
        let d = self.cover.layers[i].embedding.tree.node(lca).label;
        Ok((d, 2 + 2 + lca_probes + 1))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleStats {
    pub n: usize,
    pub layers: usize,
    pub space: usize,
    pub alpha: f64,
    pub max_stretch: f64,
    pub avg_stretch: f64,
    /// counts of pairs with stretch in [2^i, 2^(i+1))
    pub stretch_histogram: Vec<usize>,
}

/// Exact all-pairs statistics; O(n^2) queries.
pub fn oracle_stats(oracle: &DistanceOracle, x: &MetricSpace) -> Result<OracleStats> {
    let n = oracle.n();
    let mut max: f64 = 1.0;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    let mut hist: Vec<usize> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let ans = oracle.query(a, b)?;
            let s = ans / x.dist(a, b);
            max = max.max(s);
            sum += s;
            pairs += 1;
            let bucket = s.log2().floor().max(0.0) as usize;
            if hist.len() <= bucket {
                hist.resize(bucket + 1, 0);
            }
            hist[bucket] += 1;
        }
    }
    Ok(OracleStats {
        n,
        layers: oracle.cover.layers.len(),
        space: oracle.cover.space(),
        alpha: oracle.alpha,
        max_stretch: max,
        avg_stretch: if pairs > 0 { sum / pairs as f64 } else { 1.0 },
        stretch_histogram: hist,
    })
}

#[derive(Serialize, Deserialize)]
struct OracleManifest {
    n: usize,
    layers: usize,
    alpha: f64,
    builder: CoverBuilder,
}

/// Directory layout: manifest.json, layer_<i>.json (embedding plus member
/// list), homes.bin (n little-endian u32 homes, then per layer n u32 leaf
/// handles, 0xffffffff for absent).
pub fn save_oracle(oracle: &DistanceOracle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = OracleManifest {
        n: oracle.n(),
        layers: oracle.cover.layers.len(),
        alpha: oracle.alpha,
        builder: oracle.cover.builder,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    for (i, layer) in oracle.cover.layers.iter().enumerate() {
        let mut v = layer.embedding.to_json();
        v.as_object_mut()
            .unwrap()
            .insert("members".into(), serde_json::json!(layer.members.ids()));
        fs::write(dir.join(format!("layer_{i}.json")), serde_json::to_string(&v)?)?;
    }
    let mut bin = Vec::with_capacity(4 * oracle.n() * (1 + oracle.cover.layers.len()));
    let push = |bin: &mut Vec<u8>, v: usize| {
        let v: u32 = if v == usize::MAX { u32::MAX } else { v as u32 };
        bin.extend_from_slice(&v.to_le_bytes());
    };
    for &h in &oracle.cover.home {
        push(&mut bin, h);
    }
    for layer in &oracle.handles {
        for &h in layer {
            push(&mut bin, h);
        }
    }
    fs::write(dir.join("homes.bin"), bin)?;
    Ok(())
}

pub fn load_oracle(dir: &Path) -> Result<DistanceOracle> {
    let manifest: OracleManifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let mut layers = Vec::with_capacity(manifest.layers);
    for i in 0..manifest.layers {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join(format!("layer_{i}.json")))?)?;
        let embedding = RamseyEmbedding::from_json(&v)?;
        let members: Vec<usize> = serde_json::from_value(
            v.get("members")
                .cloned()
                .ok_or_else(|| Error::MalformedInput("missing field members".into()))?,
        )?;
        layers.push(CoverLayer { members: Subspace::new(members), embedding });
    }
    let bin = fs::read(dir.join("homes.bin"))?;
    let expect = 4 * manifest.n * (1 + manifest.layers);
    if bin.len() != expect {
        return Err(Error::MalformedInput(format!(
            "homes.bin has {} bytes, expected {expect}",
            bin.len()
        )));
    }
    let word = |i: usize| -> usize {
        let v = u32::from_le_bytes(bin[4 * i..4 * i + 4].try_into().unwrap());
        if v == u32::MAX {
            usize::MAX
        } else {
            v as usize
        }
    };
    let home: Vec<usize> = (0..manifest.n).map(word).collect();
    let mut handles = Vec::with_capacity(manifest.layers);
    for i in 0..manifest.layers {
        let off = manifest.n * (1 + i);
        handles.push((0..manifest.n).map(|p| word(off + p)).collect());
    }
    let indexes = layers.iter().map(|l| LcaIndex::build(&l.embedding.tree)).collect();
    let cover = RamseyCover { layers, home, builder: manifest.builder };
    Ok(DistanceOracle { cover, alpha: manifest.alpha, indexes, handles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureSpec};

    #[test]
    fn c22_single_layer() {
        let x = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        let o = oracle_build(&x, &WeightFunction::unit(4), CoverBuilder::Basic { t: 2 }).unwrap();
        assert_eq!(o.cover.layers.len(), 1);
        assert_eq!(o.cover.space(), 4);
        assert_eq!(o.query(0, 2).unwrap(), 10.0);
        assert_eq!(o.query(0, 1).unwrap(), 1.0);
        assert_eq!(o.query(3, 3).unwrap(), 0.0);
    }

    #[test]
    fn singleton_cover() {
        let x = generate(&FixtureSpec::Uniform { n: 1 }).unwrap();
        let o = oracle_build(&x, &WeightFunction::unit(1), CoverBuilder::Basic { t: 2 }).unwrap();
        assert_eq!(o.cover.layers.len(), 1);
        assert_eq!(o.cover.space(), 1);
    }

    #[test]
    fn l8_bounds_and_agreement() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        let o = oracle_build(&x, &WeightFunction::unit(8), CoverBuilder::Basic { t: 2 }).unwrap();
        let sizes: Vec<usize> = o.cover.layers.iter().map(|l| l.members.len()).collect();
        assert!(sizes.windows(2).all(|w| w[1] < w[0]));
        // space <= 2 * 8^(3/2), exactly: space^2 <= 4 * 8^3
        let space = o.cover.space() as u128;
        assert!(space * space <= 4 * 8u128.pow(3));
        let mut probes = None;
        for a in 0..8 {
            for b in a + 1..8 {
                let (ans, k) = o.query_counted(a, b).unwrap();
                let d = x.dist(a, b);
                assert!(ans >= d && ans <= 32.0 * d, "pair ({a},{b}): {ans} vs {d}");
                assert_eq!(*probes.get_or_insert(k), k, "probe count varies");
                // agreement with the walk-to-root reference in the same layer
                let i = o.cover.home[a].min(o.cover.home[b]);
                let t = &o.cover.layers[i].embedding.tree;
                let naive = t
                    .naive_distance(t.leaf_of_point(a).unwrap(), t.leaf_of_point(b).unwrap())
                    .unwrap();
                assert_eq!(ans, naive);
            }
        }
        assert_eq!(probes.unwrap(), QUERY_PROBES);
        let stats = oracle_stats(&o, &x).unwrap();
        assert_eq!(stats.space, o.cover.space());
        assert!(stats.max_stretch <= 32.0);
        assert_eq!(stats.stretch_histogram.iter().sum::<usize>(), 28);
    }

    #[test]
    fn partial_and_scaling_builders() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        let w = WeightFunction::unit(8);
        let po = oracle_build(&x, &w, CoverBuilder::Partial { delta: 0.5, eps: 0.1 }).unwrap();
        assert!(po.query(0, 7).unwrap() >= 7.0);
        let so = oracle_build(
            &x,
            &w,
            CoverBuilder::Scaling { delta: 0.5, schedule: ScalingSchedule::Square },
        )
        .unwrap();
        assert!(so.query(0, 7).unwrap() >= 7.0);
        assert_eq!(so.alpha, 16.0);
    }

    #[test]
    fn persistence_roundtrip() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        let o = oracle_build(&x, &WeightFunction::unit(8), CoverBuilder::Basic { t: 2 }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_oracle(&o, dir.path()).unwrap();
        let back = load_oracle(dir.path()).unwrap();
        assert_eq!(back.n(), 8);
        assert_eq!(back.alpha, o.alpha);
        for a in 0..8 {
            for b in 0..8 {
                assert_eq!(o.query(a, b).unwrap(), back.query(a, b).unwrap());
            }
        }
    }
}
