//! Ultrametric embeddings of the whole space, not just a subspace: every
//! point becomes a leaf, and a distinguished core subspace has bounded
//! distortion against everything. Same three flavors as the subspace
//! construction.

use serde::{Deserialize, Serialize};

use crate::decomposition::decompose;
use crate::error::{Error, Result};
use crate::hst::{HstTree, TreeBuilder};
use crate::metric::{set_distance, spherical_weight, MetricSpace, Subspace, WeightFunction};
use crate::ramsey::{partial_t, scale_level, RamseyParams};
use crate::schedule::ScalingSchedule;

/// Bookkeeping for one internal split, in completion order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbedNode {
    pub size: usize,
    pub core_size: usize,
    pub selected: usize,
    pub t: usize,
    pub eta: f64,
    pub delta: f64,
    pub padding: f64,
    pub star: bool,
}

#[derive(Clone, Debug)]
pub struct RamseyEmbedding {
    /// leaves are exactly the whole point set
    pub tree: HstTree,
    pub core: Subspace,
    pub params: RamseyParams,
    pub per_node: Vec<EmbedNode>,
    /// frozen-star member sets (partial variant only)
    pub stars: Vec<Subspace>,
}

/// Worst-case variant: core of at least n^(1-1/t) points (unit weights),
/// and every (core, anything) pair stretched by at most 16t.
pub fn ramsey_embed(x: &MetricSpace, w: &WeightFunction, t: usize) -> Result<RamseyEmbedding> {
    if t < 2 {
        return Err(Error::InvalidParameters(format!("t={t} must be >= 2")));
    }
    build(x, w, &Subspace::full(x.n()), RamseyParams::Basic { t })
}

/// Restriction of the construction to a subset of the space, used by covers:
/// leaves are exactly `within`, weights and thresholds are taken over it.
pub fn ramsey_embed_within(
    x: &MetricSpace,
    w: &WeightFunction,
    within: &Subspace,
    params: RamseyParams,
) -> Result<RamseyEmbedding> {
    match params {
        RamseyParams::Basic { t } if t < 2 => {
            return Err(Error::InvalidParameters(format!("t={t} must be >= 2")))
        }
        RamseyParams::Partial { delta, eps, .. } => {
            check_fraction(delta)?;
            check_fraction(eps)?;
        }
        RamseyParams::Scaling { delta, schedule } => {
            check_fraction(delta)?;
            schedule.validate()?;
        }
        _ => {}
    }
    build(x, w, within, params)
}

pub fn partial_ramsey_embed(
    x: &MetricSpace,
    w: &WeightFunction,
    delta: f64,
    eps: f64,
) -> Result<RamseyEmbedding> {
    check_fraction(delta)?;
    check_fraction(eps)?;
    let t_p = partial_t(delta, eps);
    build(x, w, &Subspace::full(x.n()), RamseyParams::Partial { delta, eps, t_p })
}

pub fn scaling_ramsey_embed(
    x: &MetricSpace,
    w: &WeightFunction,
    delta: f64,
    schedule: ScalingSchedule,
) -> Result<RamseyEmbedding> {
    check_fraction(delta)?;
    schedule.validate()?;
    build(x, w, &Subspace::full(x.n()), RamseyParams::Scaling { delta, schedule })
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidFraction(f))
    }
}

const REL_EPS: f64 = 1e-9;

enum Frame {
    Enter {
        z: Subspace,
        core: Subspace,
    },
    Combine {
        z: Subspace,
        core: Subspace,
        p: Subspace,
        qbar: Subspace,
        rbar: Subspace,
        t: usize,
        eta: f64,
        delta: f64,
        padding: f64,
    },
}

/// Recursion state is a pair (Z, C): the set being split and the core whose
/// points still carry the distortion guarantee. Splits cut Z along the
/// padded band around P: the near side keeps core P, the far side keeps the
/// surviving part of the old core outside Q. A branch whose core has been
/// exhausted is still refined (every point must end as a leaf) but selects
/// nothing.
fn build(
    x: &MetricSpace,
    w: &WeightFunction,
    within: &Subspace,
    params: RamseyParams,
) -> Result<RamseyEmbedding> {
    let n = x.n();
    if n == 0 || w.len() != n {
        return Err(Error::InvalidParameters("weights must match the space".into()));
    }
    if within.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let total_w = w.of(within.ids());
    let mut builder = TreeBuilder::new();
    let mut frames = vec![Frame::Enter { z: within.clone(), core: within.clone() }];
    let mut done: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut per_node = Vec::new();
    let mut stars = Vec::new();

    while let Some(frame) = frames.pop() {
        match frame {
            Frame::Enter { z, core } => {
                if z.len() == 1 {
                    let node = builder.leaf(z.ids()[0]);
                    done.push((core.ids().to_vec(), node));
                    continue;
                }
                if let RamseyParams::Partial { eps, .. } = params {
                    if w.of(z.ids()) <= eps * total_w {
                        let diam = x.diameter_of(z.ids())?;
                        let leaves: Vec<usize> = z.iter().map(|p| builder.leaf(p)).collect();
                        let node = builder.internal(diam, leaves);
                        per_node.push(EmbedNode {
                            size: z.len(),
                            core_size: core.len(),
                            selected: core.len(),
                            t: 0,
                            eta: 0.0,
                            delta: diam,
                            padding: f64::INFINITY,
                            star: true,
                        });
                        stars.push(z.clone());
                        done.push((core.ids().to_vec(), node));
                        continue;
                    }
                }
                let t = node_t(x, w, &params, &z, &core, total_w)?;
                let eta = 1.0 / (4.0 * t as f64);
                let diam = x.diameter_of(z.ids())?;
                let delta = diam / 2.0;
                // an exhausted core still needs the tree refined; run the
                // plain decomposition for structure only
                let dec_core = if core.is_empty() { &z } else { &core };
                let dec = decompose(x, w, &z, dec_core, delta, t)?;
                let band = eta * delta / 2.0;
                let r_ids: Vec<usize> =
                    z.iter().filter(|&m| set_distance(x, &[m], dec.p.ids()) <= band).collect();
                let r = Subspace::new_sorted(r_ids);
                let rbar = z.minus(&r);
                let left_core = if core.is_empty() { Subspace::new(vec![]) } else { dec.p.clone() };
                let right_core = dec.qbar.intersect(&core);
                frames.push(Frame::Combine {
                    z,
                    core,
                    p: dec.p,
                    qbar: dec.qbar,
                    rbar: rbar.clone(),
                    t,
                    eta,
                    delta,
                    padding: dec.realized_padding,
                });
                frames.push(Frame::Enter { z: rbar, core: right_core });
                frames.push(Frame::Enter { z: r, core: left_core });
            }
            Frame::Combine { z, core, p, qbar, rbar, t, eta, delta, padding } => {
                let (s_right, node_right) = done.pop().expect("child result");
                let (s_left, node_left) = done.pop().expect("child result");
                check_separation(x, &p, &qbar, &rbar, &z, eta, delta, padding)?;
                debug_assert!(s_left.iter().all(|&m| p.contains(m)));
                debug_assert!(s_right.iter().all(|&m| qbar.contains(m)));
                let mut s = s_left;
                s.extend_from_slice(&s_right);
                s.sort_unstable();
                let label = x.diameter_of(z.ids())?;
                let node = builder.internal(label, vec![node_left, node_right]);
                check_node_invariant(x, w, &params, &z, &core, &s, t, total_w)?;
                per_node.push(EmbedNode {
                    size: z.len(),
                    core_size: core.len(),
                    selected: s.len(),
                    t,
                    eta,
                    delta,
                    padding,
                    star: false,
                });
                done.push((s, node));
            }
        }
    }

    let (s, root) = done.pop().expect("root result");
    debug_assert!(done.is_empty());
    let tree = builder.finish(root, 1.0);
    if tree.leaf_count() != within.len() {
        return Err(Error::guarantee(
            "one leaf per point",
            tree.leaf_count() as f64,
            within.len() as f64,
        ));
    }
    Ok(RamseyEmbedding {
        tree,
        core: Subspace::new_sorted(s),
        params,
        per_node,
        stars,
    })
}

fn node_t(
    x: &MetricSpace,
    w: &WeightFunction,
    params: &RamseyParams,
    z: &Subspace,
    core: &Subspace,
    total_w: f64,
) -> Result<usize> {
    Ok(match *params {
        RamseyParams::Basic { t } => t,
        RamseyParams::Partial { t_p, .. } => t_p,
        RamseyParams::Scaling { delta, schedule } => {
            let bsize = if core.is_empty() {
                spherical_weight(x, w, z.ids(), None)?
            } else {
                spherical_weight(x, &w.restricted_to(core), z.ids(), None)?
            };
            let level = scale_level(total_w, bsize, delta);
            (schedule.theta(level).ceil() as usize).max(2)
        }
    })
}

/// Both halves of the split argument: the near side is within band distance
/// of P so everything beyond the cut is at least the band away from P, and
/// the far core Q-bar clears the near side by the padding minus the band.
fn check_separation(
    x: &MetricSpace,
    p: &Subspace,
    qbar: &Subspace,
    rbar: &Subspace,
    z: &Subspace,
    eta: f64,
    delta: f64,
    padding: f64,
) -> Result<()> {
    let band = eta * delta / 2.0;
    if !rbar.is_empty() {
        let sep = set_distance(x, p.ids(), rbar.ids());
        if sep < band * (1.0 - REL_EPS) {
            return Err(Error::guarantee("split separation d(P, Z\\R) >= eta*delta/2", sep, band));
        }
    }
    let r = z.minus(rbar);
    let sep = set_distance(x, qbar.ids(), r.ids());
    let floor = (padding - band).max(band);
    if sep < floor * (1.0 - REL_EPS) {
        return Err(Error::guarantee(
            "split separation d(Qbar, R) >= d(P,Qbar) - eta*delta/2",
            sep,
            floor,
        ));
    }
    Ok(())
}

/// Selection accounting in the core-restricted weight, mirroring the
/// subspace construction's per-node bound.
fn check_node_invariant(
    x: &MetricSpace,
    w: &WeightFunction,
    params: &RamseyParams,
    z: &Subspace,
    core: &Subspace,
    s: &[usize],
    t: usize,
    total_w: f64,
) -> Result<()> {
    if core.is_empty() {
        return Ok(());
    }
    let wc = w.restricted_to(core);
    match *params {
        RamseyParams::Basic { .. } | RamseyParams::Partial { .. } => {
            let psi = 1.0 - 1.0 / t as f64;
            let bsize = spherical_weight(x, &wc, z.ids(), None)?;
            let lhs = wc.pow_of(s, psi);
            let rhs = wc.of(z.ids()) * bsize.powf(-1.0 / t as f64);
            if matches!(params, RamseyParams::Basic { .. }) && lhs < rhs * (1.0 - REL_EPS) {
                return Err(Error::guarantee(
                    "core size: sum w_C^psi(S) >= w_C(Z) bsize_C(Z)^(-1/t)",
                    lhs,
                    rhs,
                ));
            }
        }
        RamseyParams::Scaling { delta, schedule } => {
            let bsize = spherical_weight(x, &wc, z.ids(), None)?;
            let level = scale_level(total_w, bsize, delta);
            let rhs = wc.of(z.ids()) * delta.powf(schedule.tail(level));
            let lhs = wc.of(s);
            if lhs < rhs * (1.0 - REL_EPS) {
                return Err(Error::guarantee(
                    "core size: w_C(S) >= w_C(Z) delta^tail(level)",
                    lhs,
                    rhs,
                ));
            }
        }
    }
    Ok(())
}

impl RamseyEmbedding {
    /// Distortion ceiling the construction promises on (core, anything)
    /// pairs; for the scaling variant this is the pair-independent worst
    /// case at level 1.
    pub fn bound(&self) -> f64 {
        match self.params {
            RamseyParams::Basic { t } => 16.0 * t as f64,
            RamseyParams::Partial { t_p, .. } => 16.0 * t_p as f64,
            RamseyParams::Scaling { .. } => f64::INFINITY,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = self.tree.to_json();
        let obj = v.as_object_mut().unwrap();
        obj.insert("core".into(), serde_json::json!(self.core.ids()));
        obj.insert("params".into(), serde_json::to_value(&self.params).unwrap());
        obj.insert("per_node".into(), serde_json::to_value(&self.per_node).unwrap());
        obj.insert("stars".into(), serde_json::to_value(&self.stars).unwrap());
        v
    }

    pub fn from_json(v: &serde_json::Value) -> Result<RamseyEmbedding> {
        let tree = HstTree::from_json(v)?;
        let get = |k: &str| {
            v.get(k).cloned().ok_or_else(|| Error::MalformedInput(format!("missing field {k}")))
        };
        Ok(RamseyEmbedding {
            tree,
            core: serde_json::from_value(get("core")?)?,
            params: serde_json::from_value(get("params")?)?,
            per_node: serde_json::from_value(get("per_node")?)?,
            stars: serde_json::from_value(get("stars")?)?,
        })
    }

    pub fn pair_in_star(&self, a: usize, b: usize) -> bool {
        self.stars.iter().any(|s| s.contains(a) && s.contains(b))
    }
}
