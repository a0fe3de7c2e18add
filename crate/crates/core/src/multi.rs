//! Multi-embeddings into ultrametrics: each point maps to a set of leaves,
//! duplicated along the recursion so that path lengths through the tree
//! track path lengths in the metric. Leaf count stays near-linear.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::decompose_half;
use crate::error::{Error, Result};
use crate::hst::{HstTree, LcaIndex, TreeBuilder};
use crate::metric::{MetricSpace, Subspace, WeightFunction};

/// One recursion split, recorded for the structural audit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitRecord {
    pub z_size: usize,
    pub q_size: usize,
    pub lambda: f64,
    pub diam_q: f64,
    /// separation between P and the rest of the searched half, the quantity
    /// the decomposition guarantees
    pub gap: f64,
    /// d(P, Z \ Q) against the whole node; reported, not asserted, since
    /// far-half boundary points can sit arbitrarily close
    pub outer_gap: f64,
}

#[derive(Clone, Debug)]
pub struct MultiEmbedding {
    pub tree: HstTree,
    /// point id -> sorted leaf handles
    pub images: BTreeMap<usize, Vec<usize>>,
    pub epsilon: f64,
    pub t: usize,
    pub splits: Vec<SplitRecord>,
}

const REL_EPS: f64 = 1e-9;

/// Split off a low-diameter half Q, recurse on Q and on everything outside
/// the inner core P; the band Q minus P lands in both branches.
pub fn build_multi_embedding(
    x: &MetricSpace,
    w: &WeightFunction,
    eps: f64,
) -> Result<MultiEmbedding> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidFraction(eps));
    }
    let n = x.n();
    if n == 0 || w.len() != n {
        return Err(Error::InvalidParameters("weights must match the space".into()));
    }
    // the decomposition needs t >= 2; clamping only strengthens every bound
    let t = ((1.0 / eps).ceil() as usize).max(2);

    enum Frame {
        Enter(Subspace),
        Combine { z: Subspace, q_size: usize, diam_q: f64, gap: f64, outer_gap: f64 },
    }
    let mut builder = TreeBuilder::new();
    let mut frames = vec![Frame::Enter(Subspace::full(n))];
    let mut done: Vec<usize> = Vec::new();
    let mut splits = Vec::new();

    while let Some(frame) = frames.pop() {
        match frame {
            Frame::Enter(z) => {
                if z.len() == 1 {
                    done.push(builder.leaf(z.ids()[0]));
                    continue;
                }
                let diam = x.diameter_of(z.ids())?;
                let dec = decompose_half(x, w, &z, diam / 4.0, t)?;
                let diam_q = x.diameter_of(dec.q.ids())?;
                let zbar_p = z.minus(&dec.p);
                let gap = dec.realized_padding;
                let outside = z.minus(&dec.q);
                let outer_gap = if outside.is_empty() {
                    f64::INFINITY
                } else {
                    crate::metric::set_distance(x, dec.p.ids(), outside.ids())
                };
                audit_split(eps, diam, z.len(), dec.q.len(), diam_q, gap)?;
                frames.push(Frame::Combine { z, q_size: dec.q.len(), diam_q, gap, outer_gap });
                frames.push(Frame::Enter(zbar_p));
                frames.push(Frame::Enter(dec.q));
            }
            Frame::Combine { z, q_size, diam_q, gap, outer_gap } => {
                let right = done.pop().expect("child result");
                let left = done.pop().expect("child result");
                let lambda = x.diameter_of(z.ids())?;
                done.push(builder.internal(lambda, vec![left, right]));
                splits.push(SplitRecord { z_size: z.len(), q_size, lambda, diam_q, gap, outer_gap });
            }
        }
    }
    let root = done.pop().expect("root result");
    debug_assert!(done.is_empty());
    let tree = builder.finish(root, 1.0);
    let mut images = BTreeMap::new();
    for p in 0..n {
        let leaves = tree
            .leaves_of_point(p)
            .ok_or_else(|| Error::guarantee("every point imaged", 0.0, 1.0))?;
        images.insert(p, leaves.to_vec());
    }
    Ok(MultiEmbedding { tree, images, epsilon: eps, t, splits })
}

fn audit_split(
    eps: f64,
    lambda: f64,
    z_size: usize,
    q_size: usize,
    diam_q: f64,
    gap: f64,
) -> Result<()> {
    if 2 * q_size > z_size {
        return Err(Error::guarantee("|Q| <= |Z|/2", q_size as f64, z_size as f64 / 2.0));
    }
    if diam_q > lambda / 4.0 * (1.0 + REL_EPS) {
        return Err(Error::guarantee("diam(Q) <= lambda/4", diam_q, lambda / 4.0));
    }
    let floor = eps / 64.0 * lambda;
    if gap < floor * (1.0 - REL_EPS) {
        return Err(Error::guarantee("gap >= (eps/64) lambda", gap, floor));
    }
    Ok(())
}

impl MultiEmbedding {
    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    /// Cheapest image-to-image traversal cost of a path of point ids, by
    /// dynamic programming over image sets in handle order.
    pub fn min_image_path_length(&self, index: &LcaIndex, path: &[usize]) -> Result<f64> {
        if path.len() < 2 {
            return Err(Error::EmptyPath);
        }
        let imgs = |p: usize| -> Result<&[usize]> {
            self.images
                .get(&p)
                .map(|v| v.as_slice())
                .ok_or(Error::UnknownPoint(p))
        };
        let mut cost: Vec<f64> = vec![0.0; imgs(path[0])?.len()];
        let mut prev_leaves = imgs(path[0])?;
        for &p in &path[1..] {
            let cur_leaves = imgs(p)?;
            let mut cur = vec![f64::INFINITY; cur_leaves.len()];
            for (j, &leaf) in cur_leaves.iter().enumerate() {
                for (i, &prev) in prev_leaves.iter().enumerate() {
                    let hop = if prev == leaf {
                        0.0
                    } else {
                        self.tree.node(index.lca(prev, leaf)).label
                    };
                    let c = cost[i] + hop;
                    if c < cur[j] {
                        cur[j] = c;
                    }
                }
            }
            cost = cur;
            prev_leaves = cur_leaves;
        }
        Ok(cost.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.tree.to_json();
        let obj = v.as_object_mut().unwrap();
        let images: serde_json::Map<String, serde_json::Value> = self
            .images
            .iter()
            .map(|(p, l)| (p.to_string(), serde_json::json!(l)))
            .collect();
        obj.insert("images".into(), serde_json::Value::Object(images));
        obj.insert("epsilon".into(), serde_json::json!(self.epsilon));
        obj.insert("t".into(), serde_json::json!(self.t));
        obj.insert("splits".into(), serde_json::to_value(&self.splits).unwrap());
        v
    }

    pub fn from_json(v: &serde_json::Value) -> Result<MultiEmbedding> {
        let tree = HstTree::from_json(v)?;
        let get = |k: &str| {
            v.get(k).cloned().ok_or_else(|| Error::MalformedInput(format!("missing field {k}")))
        };
        let raw: serde_json::Map<String, serde_json::Value> =
            serde_json::from_value(get("images")?)?;
        let mut images = BTreeMap::new();
        for (k, val) in raw {
            let p: usize =
                k.parse().map_err(|_| Error::MalformedInput(format!("bad point id {k}")))?;
            images.insert(p, serde_json::from_value(val)?);
        }
        Ok(MultiEmbedding {
            tree,
            images,
            epsilon: serde_json::from_value(get("epsilon")?)?,
            t: serde_json::from_value(get("t")?)?,
            splits: serde_json::from_value(get("splits")?)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathReport {
    pub paths: usize,
    pub max_ratio: f64,
    pub avg_ratio: f64,
    /// counts of ratios in [2^i, 2^(i+1))
    pub histogram: Vec<usize>,
}

/// Seeded random walks compared against their cheapest image paths. Also
/// re-runs the structural audit over every recorded split.
pub fn path_distortion_report(
    me: &MultiEmbedding,
    x: &MetricSpace,
    count: usize,
    max_len: usize,
    seed: u64,
) -> Result<PathReport> {
    for s in &me.splits {
        audit_split(me.epsilon, s.lambda, s.z_size, s.q_size, s.diam_q, s.gap)?;
    }
    let n = x.n();
    let index = LcaIndex::build(&me.tree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max: f64 = 1.0;
    let mut sum = 0.0;
    let mut hist: Vec<usize> = Vec::new();
    let mut paths = 0usize;
    if n < 2 {
        return Ok(PathReport { paths: 0, max_ratio: 1.0, avg_ratio: 1.0, histogram: hist });
    }
    for _ in 0..count {
        let len = rng.gen_range(2..=max_len.max(2));
        let mut path = Vec::with_capacity(len);
        path.push(rng.gen_range(0..n));
        while path.len() < len {
            let next = rng.gen_range(0..n);
            if next != *path.last().unwrap() {
                path.push(next);
            }
        }
        let true_len: f64 = path.windows(2).map(|p| x.dist(p[0], p[1])).sum();
        let dp = me.min_image_path_length(&index, &path)?;
        let ratio = dp / true_len;
        if ratio < 1.0 - REL_EPS {
            return Err(Error::guarantee("path length non-contraction", dp, true_len));
        }
        max = max.max(ratio);
        sum += ratio;
        paths += 1;
        let bucket = ratio.log2().floor().max(0.0) as usize;
        if hist.len() <= bucket {
            hist.resize(bucket + 1, 0);
        }
        hist[bucket] += 1;
    }
    Ok(PathReport {
        paths,
        max_ratio: max,
        avg_ratio: if paths > 0 { sum / paths as f64 } else { 1.0 },
        histogram: hist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureSpec};

    #[test]
    fn c22_flat_star() {
        let x = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        let me = build_multi_embedding(&x, &WeightFunction::unit(4), 0.5).unwrap();
        // every split here has P = Q, so no duplication
        assert_eq!(me.leaf_count(), 4);
        assert!(me.leaf_count() as u128 <= 8); // 4^(3/2) = 8
        let index = LcaIndex::build(&me.tree);
        let dp = me.min_image_path_length(&index, &[0, 2, 1]).unwrap();
        assert_eq!(dp, 20.0);
    }

    #[test]
    fn singleton() {
        let x = generate(&FixtureSpec::Uniform { n: 1 }).unwrap();
        let me = build_multi_embedding(&x, &WeightFunction::unit(1), 0.5).unwrap();
        assert_eq!(me.leaf_count(), 1);
        assert_eq!(me.images[&0].len(), 1);
    }

    #[test]
    fn two_points() {
        let x = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let me = build_multi_embedding(&x, &WeightFunction::unit(2), 0.5).unwrap();
        assert_eq!(me.leaf_count(), 2);
        assert_eq!(me.tree.root_label(), 1.0);
        let index = LcaIndex::build(&me.tree);
        assert_eq!(me.min_image_path_length(&index, &[0, 1]).unwrap(), 1.0);
    }

    #[test]
    fn uniform_exact_paths() {
        let x = generate(&FixtureSpec::Uniform { n: 6 }).unwrap();
        let me = build_multi_embedding(&x, &WeightFunction::unit(6), 0.5).unwrap();
        let r = path_distortion_report(&me, &x, 50, 5, 1).unwrap();
        assert_eq!(r.max_ratio, 1.0);
    }

    #[test]
    fn l8_leaf_bound_and_guardrail() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        for eps in [0.25, 0.5, 1.0] {
            let me = build_multi_embedding(&x, &WeightFunction::unit(8), eps).unwrap();
            let t = (1.0f64 / eps).ceil() as u32;
            // leaves <= ceil(n^(1+1/t)), exactly: (leaves - 1)^t < n^(t+1)
            let leaves = me.leaf_count() as u128;
            assert!((leaves - 1).pow(t) < 8u128.pow(t + 1), "{leaves} leaves at eps={eps}");
            let r = path_distortion_report(&me, &x, 100, 5, 1).unwrap();
            assert!(r.max_ratio >= 1.0);
            assert!(r.max_ratio <= 256.0 * 3.0 / eps);
        }
    }

    #[test]
    fn rejects_bad_eps() {
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        assert!(build_multi_embedding(&x, &WeightFunction::unit(4), 0.0).is_err());
        assert!(build_multi_embedding(&x, &WeightFunction::unit(4), 1.5).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let x = generate(&FixtureSpec::Path { n: 6 }).unwrap();
        let me = build_multi_embedding(&x, &WeightFunction::unit(6), 0.5).unwrap();
        let j = me.to_json();
        let back = MultiEmbedding::from_json(&j).unwrap();
        assert_eq!(back.to_json(), j);
    }
}
