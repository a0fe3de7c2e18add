//! Recursive construction of large subspaces that embed into ultrametrics
//! with bounded distortion, in three flavors: a fixed worst-case bound, a
//! partial bound holding on all but an epsilon fraction of pairs, and a
//! scaling bound improving with the weight-rank of the pair.

use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose, Decomposition};
use crate::error::{Error, Result};
use crate::hst::{HstTree, TreeBuilder};
use crate::metric::{spherical_weight, MetricSpace, Subspace, WeightFunction};
use crate::schedule::ScalingSchedule;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum RamseyParams {
    Basic { t: usize },
    Partial { delta: f64, eps: f64, t_p: usize },
    Scaling { delta: f64, schedule: ScalingSchedule },
}

/// One internal recursion node's bookkeeping, in completion order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeRecord {
    /// |Z| entering the node
    pub size: usize,
    /// |S(Z)| kept
    pub selected: usize,
    pub t: usize,
    pub delta: f64,
    pub padding: f64,
    pub star: bool,
}

#[derive(Clone, Debug)]
pub struct RamseyResult {
    pub tree: HstTree,
    pub subspace: Subspace,
    pub psi: f64,
    pub params: RamseyParams,
    pub per_node: Vec<NodeRecord>,
    /// frozen-star member sets (partial variant only)
    pub stars: Vec<Subspace>,
}

/// Worst-case variant: a subspace S with sum of w^(1-1/t) over S at least
/// w(X)^(1-1/t), every pair stretched by at most 8t in the tree.
pub fn ramsey_subspace(
    x: &MetricSpace,
    w: &WeightFunction,
    t: usize,
) -> Result<RamseyResult> {
    if t < 2 {
        return Err(Error::InvalidParameters(format!("t={t} must be >= 2")));
    }
    build(x, w, RamseyParams::Basic { t })
}

pub fn partial_t(delta: f64, eps: f64) -> usize {
    let l = (1.0 / eps).ln() / (1.0 / delta).ln();
    (l.ceil() as usize).max(2)
}

/// Partial variant: clusters lighter than eps * w(X) freeze into stars;
/// pairs outside stars are stretched by at most 8 * t_p.
pub fn partial_ramsey(
    x: &MetricSpace,
    w: &WeightFunction,
    delta: f64,
    eps: f64,
) -> Result<RamseyResult> {
    check_fraction(delta)?;
    check_fraction(eps)?;
    let t_p = partial_t(delta, eps);
    build(x, w, RamseyParams::Partial { delta, eps, t_p })
}

/// Scaling variant: the per-node t grows with the node's depth in weight
/// scale, following the schedule.
pub fn scaling_ramsey(
    x: &MetricSpace,
    w: &WeightFunction,
    delta: f64,
    schedule: ScalingSchedule,
) -> Result<RamseyResult> {
    check_fraction(delta)?;
    schedule.validate()?;
    build(x, w, RamseyParams::Scaling { delta, schedule })
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidFraction(f))
    }
}

/// Recursion scale of a cluster: how many powers of 1/delta separate the
/// total weight from the cluster's spherical weight, floored at 1.
pub fn scale_level(total_w: f64, bsize: f64, delta: f64) -> f64 {
    ((total_w / bsize).ln() / (1.0 / delta).ln()).max(1.0)
}

enum Frame {
    Enter(Subspace),
    Combine { z: Subspace, dec: Decomposition, t: usize },
}

fn build(x: &MetricSpace, w: &WeightFunction, params: RamseyParams) -> Result<RamseyResult> {
    let n = x.n();
    if n == 0 || w.len() != n {
        return Err(Error::InvalidParameters("weights must match the space".into()));
    }
    let total_w = w.total();
    let mut builder = TreeBuilder::new();
    let mut frames = vec![Frame::Enter(Subspace::full(n))];
    let mut done: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut per_node = Vec::new();
    let mut stars = Vec::new();

    while let Some(frame) = frames.pop() {
        match frame {
            Frame::Enter(z) => {
                if z.len() == 1 {
                    let node = builder.leaf(z.ids()[0]);
                    done.push((z.ids().to_vec(), node));
                    continue;
                }
                if let RamseyParams::Partial { eps, .. } = params {
                    if w.of(z.ids()) <= eps * total_w {
                        let diam = x.diameter_of(z.ids())?;
                        let leaves: Vec<usize> = z.iter().map(|p| builder.leaf(p)).collect();
                        let node = builder.internal(diam, leaves);
                        per_node.push(NodeRecord {
                            size: z.len(),
                            selected: z.len(),
                            t: 0,
                            delta: diam,
                            padding: f64::INFINITY,
                            star: true,
                        });
                        stars.push(z.clone());
                        done.push((z.ids().to_vec(), node));
                        continue;
                    }
                }
                let t = match params {
                    RamseyParams::Basic { t } => t,
                    RamseyParams::Partial { t_p, .. } => t_p,
                    RamseyParams::Scaling { delta, schedule } => {
                        let bsize = spherical_weight(x, w, z.ids(), None)?;
                        let level = scale_level(total_w, bsize, delta);
                        (schedule.theta(level).ceil() as usize).max(2)
                    }
                };
                let diam = x.diameter_of(z.ids())?;
                let dec = decompose(x, w, &z, &z, diam / 2.0, t)?;
                let qbar = dec.qbar.clone();
                let p = dec.p.clone();
                frames.push(Frame::Combine { z, dec, t });
                frames.push(Frame::Enter(qbar));
                frames.push(Frame::Enter(p));
            }
            Frame::Combine { z, dec, t } => {
                let (s_qbar, node_qbar) = done.pop().expect("child result");
                let (s_p, node_p) = done.pop().expect("child result");
                let mut s = s_p;
                s.extend_from_slice(&s_qbar);
                s.sort_unstable();
                let label = x.diameter_of(&s)?;
                let node = builder.internal(label, vec![node_p, node_qbar]);
                check_node_invariant(x, w, &params, &z, &s, t, total_w)?;
                per_node.push(NodeRecord {
                    size: z.len(),
                    selected: s.len(),
                    t,
                    delta: dec.delta,
                    padding: dec.realized_padding,
                    star: false,
                });
                done.push((s, node));
            }
        }
    }

    let (s, root) = done.pop().expect("root result");
    debug_assert!(done.is_empty());
    let psi = match params {
        RamseyParams::Basic { t } => 1.0 - 1.0 / t as f64,
        RamseyParams::Partial { t_p, .. } => 1.0 - 1.0 / t_p as f64,
        RamseyParams::Scaling { .. } => 1.0,
    };
    Ok(RamseyResult {
        tree: builder.finish(root, 1.0),
        subspace: Subspace::new_sorted(s),
        psi,
        params,
        per_node,
        stars,
    })
}

const REL_EPS: f64 = 1e-9;

/// Per-node selection-size accounting. The worst-case variant's bound is a
/// consequence of the telescoping shell ratios; the scaling variant's bound
/// integrates the schedule from the node's scale level outward.
fn check_node_invariant(
    x: &MetricSpace,
    w: &WeightFunction,
    params: &RamseyParams,
    z: &Subspace,
    s: &[usize],
    t: usize,
    total_w: f64,
) -> Result<()> {
    match *params {
        RamseyParams::Basic { .. } | RamseyParams::Partial { .. } => {
            // for partial this is informative only at non-star nodes, with
            // the same algebra as the worst-case variant
            let psi = 1.0 - 1.0 / t as f64;
            let bsize = spherical_weight(x, w, z.ids(), None)?;
            let lhs = w.pow_of(s, psi);
            let rhs = w.of(z.ids()) * bsize.powf(-1.0 / t as f64);
            if matches!(params, RamseyParams::Basic { .. }) && lhs < rhs * (1.0 - REL_EPS) {
                return Err(Error::guarantee("node size: sum w^psi(S) >= w(Z) bsize(Z)^(-1/t)", lhs, rhs));
            }
        }
        RamseyParams::Scaling { delta, schedule } => {
            let bsize = spherical_weight(x, w, z.ids(), None)?;
            let level = scale_level(total_w, bsize, delta);
            let rhs = w.of(z.ids()) * delta.powf(schedule.tail(level));
            let lhs = w.of(s);
            if lhs < rhs * (1.0 - REL_EPS) {
                return Err(Error::guarantee(
                    "node size: w(S) >= w(Z) delta^tail(level)",
                    lhs,
                    rhs,
                ));
            }
        }
    }
    Ok(())
}

/// Checks sum over S of w^psi against w(X)^psi; the detail of a failed check
/// is returned in the error value.
pub fn verify_weighted_certificate(
    result: &RamseyResult,
    w: &WeightFunction,
    psi: f64,
) -> Result<()> {
    let lhs = w.pow_of(result.subspace.ids(), psi);
    let rhs = w.total().powf(psi);
    if lhs < rhs * (1.0 - REL_EPS) {
        return Err(Error::guarantee("weighted certificate sum w^psi(S) >= w(X)^psi", lhs, rhs));
    }
    Ok(())
}

impl RamseyResult {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.tree.to_json();
        let obj = v.as_object_mut().unwrap();
        obj.insert("subspace".into(), serde_json::json!(self.subspace.ids()));
        obj.insert("psi".into(), serde_json::json!(self.psi));
        obj.insert("params".into(), serde_json::to_value(&self.params).unwrap());
        obj.insert("per_node".into(), serde_json::to_value(&self.per_node).unwrap());
        obj.insert("stars".into(), serde_json::to_value(&self.stars).unwrap());
        v
    }

    pub fn from_json(v: &serde_json::Value) -> Result<RamseyResult> {
        let tree = HstTree::from_json(v)?;
        let get = |k: &str| {
            v.get(k).cloned().ok_or_else(|| Error::MalformedInput(format!("missing field {k}")))
        };
        Ok(RamseyResult {
            tree,
            subspace: serde_json::from_value(get("subspace")?)?,
            psi: serde_json::from_value(get("psi")?)?,
            params: serde_json::from_value(get("params")?)?,
            per_node: serde_json::from_value(get("per_node")?)?,
            stars: serde_json::from_value(get("stars")?)?,
        })
    }

    /// True when the pair lies inside one frozen star (excluded from the
    /// partial guarantee).
    pub fn pair_in_star(&self, a: usize, b: usize) -> bool {
        self.stars.iter().any(|s| s.contains(a) && s.contains(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, seeded_weights, FixtureSpec};
    use crate::hst::LcaIndex;

    fn exhaustive_max_stretch(x: &MetricSpace, r: &RamseyResult) -> f64 {
        let idx = LcaIndex::build(&r.tree);
        let mut worst: f64 = 1.0;
        let ids = r.subspace.ids();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let du = r.tree.point_distance(&idx, a, b).unwrap();
                let d = x.dist(a, b);
                assert!(du >= d, "contraction on ({a},{b}): {du} < {d}");
                worst = worst.max(du / d);
            }
        }
        worst
    }

    #[test]
    fn c22_exact_tree() {
        let x = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        let r = ramsey_subspace(&x, &WeightFunction::unit(4), 2).unwrap();
        assert_eq!(r.subspace.ids(), &[0, 1, 2, 3]);
        assert_eq!(r.tree.root_label(), 10.0);
        let idx = LcaIndex::build(&r.tree);
        assert_eq!(r.tree.point_distance(&idx, 0, 1).unwrap(), 1.0);
        assert_eq!(r.tree.point_distance(&idx, 2, 3).unwrap(), 1.0);
        assert_eq!(r.tree.point_distance(&idx, 0, 3).unwrap(), 10.0);
        assert_eq!(exhaustive_max_stretch(&x, &r), 1.0);
    }

    #[test]
    fn u4_all_kept() {
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        let r = ramsey_subspace(&x, &WeightFunction::unit(4), 2).unwrap();
        assert_eq!(r.subspace.len(), 4);
        assert_eq!(exhaustive_max_stretch(&x, &r), 1.0);
    }

    #[test]
    fn two_points() {
        let x = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = ramsey_subspace(&x, &WeightFunction::unit(2), 2).unwrap();
        assert_eq!(r.subspace.len(), 2);
        assert_eq!(r.tree.root_label(), 1.0);
    }

    #[test]
    fn l8_size_and_stretch() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        for t in [2, 3, 4] {
            let r = ramsey_subspace(&x, &WeightFunction::unit(8), t).unwrap();
            // |S| >= n^(1-1/t), checked in exact integer arithmetic
            let s = r.subspace.len() as u128;
            assert!(s.pow(t as u32) >= 8u128.pow(t as u32 - 1));
            assert!(exhaustive_max_stretch(&x, &r) <= 8.0 * t as f64);
            assert!(r.tree.validate(1.0).is_empty());
        }
    }

    #[test]
    fn weighted_certificate_holds() {
        let x = generate(&FixtureSpec::Path { n: 16 }).unwrap();
        let w = WeightFunction::new(seeded_weights(16, 16, 5)).unwrap();
        for t in [2, 3] {
            let r = ramsey_subspace(&x, &w, t).unwrap();
            verify_weighted_certificate(&r, &w, 1.0 - 1.0 / t as f64).unwrap();
        }
    }

    #[test]
    fn certificate_detects_fabricated_result() {
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        let w = WeightFunction::unit(4);
        let mut r = ramsey_subspace(&x, &w, 2).unwrap();
        r.subspace = Subspace::new(vec![]);
        assert!(verify_weighted_certificate(&r, &w, 0.5)
            .unwrap_err()
            .is_guarantee_violation());
        // psi = 0 always passes
        r.subspace = Subspace::new(vec![0]);
        verify_weighted_certificate(&r, &w, 0.0).unwrap();
    }

    #[test]
    fn partial_u4_star() {
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        let r = partial_ramsey(&x, &WeightFunction::unit(4), 0.5, 0.5).unwrap();
        assert_eq!(r.subspace.len(), 4);
        assert_eq!(exhaustive_max_stretch(&x, &r), 1.0);
        // the half-weight remainder freezes into a star
        assert!(r.per_node.iter().any(|n| n.star));
        assert!(r.stars.iter().any(|s| s.ids() == [2, 3]));
    }

    #[test]
    fn partial_tiny_eps_matches_basic() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        let w = WeightFunction::unit(8);
        let eps = 0.01;
        let delta = 0.5;
        let tp = partial_t(delta, eps);
        let basic = ramsey_subspace(&x, &w, tp).unwrap();
        let partial = partial_ramsey(&x, &w, delta, 0.01).unwrap();
        // eps * w(X) < 1 so no star can trigger
        assert!(partial.stars.is_empty());
        assert_eq!(partial.subspace, basic.subspace);
        assert_eq!(partial.tree.to_json(), basic.tree.to_json());
    }

    #[test]
    fn partial_c22_no_exclusions() {
        let x = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        let r = partial_ramsey(&x, &WeightFunction::unit(4), 0.5, 0.25).unwrap();
        if let RamseyParams::Partial { t_p, .. } = r.params {
            assert_eq!(t_p, 2);
        } else {
            panic!("wrong params");
        }
        assert_eq!(r.subspace.len(), 4);
        assert!(r.stars.iter().all(|s| s.len() < 2));
        assert_eq!(exhaustive_max_stretch(&x, &r), 1.0);
    }

    #[test]
    fn scaling_c22() {
        let x = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        let r = scaling_ramsey(&x, &WeightFunction::unit(4), 0.5, ScalingSchedule::Square).unwrap();
        assert_eq!(r.subspace.len(), 4);
        assert_eq!(exhaustive_max_stretch(&x, &r), 1.0);
        // level at the root: bsize(C22)=2, w=4 -> log_2(2)=1 -> t=2
        assert_eq!(r.per_node.last().unwrap().t, 2);
    }

    #[test]
    fn scaling_singleton() {
        let x = generate(&FixtureSpec::Uniform { n: 1 }).unwrap();
        let r = scaling_ramsey(&x, &WeightFunction::unit(1), 0.5, ScalingSchedule::Square).unwrap();
        assert_eq!(r.subspace.len(), 1);
        assert!(r.per_node.is_empty());
    }

    #[test]
    fn json_roundtrip() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        let r = partial_ramsey(&x, &WeightFunction::unit(8), 0.25, 0.1).unwrap();
        let j = r.to_json();
        let back = RamseyResult::from_json(&j).unwrap();
        assert_eq!(back.to_json(), j);
    }
}
