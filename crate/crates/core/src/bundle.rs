//! Padded partition bundles: a short sequence of partitions at one scale
//! such that every point is, in some round, deep inside its own cluster.
//! Rounds peel low-diameter clusters off the alive set; a cluster's padded
//! core retires from later rounds.

use serde::{Deserialize, Serialize};

use crate::decomposition::decompose_relaxed;
use crate::error::{Error, Result};
use crate::metric::{set_distance, MetricSpace, Subspace, WeightFunction};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleCluster {
    pub members: Subspace,
    /// members at distance >= eta * delta_hat from everything outside
    pub core: Subspace,
    pub eta: f64,
    /// realized d(core, complement among that round's alive set)
    pub padding: f64,
    pub terminal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleRound {
    pub clusters: Vec<BundleCluster>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionBundle {
    pub delta_hat: f64,
    pub delta: f64,
    pub rounds: Vec<BundleRound>,
}

const REL_EPS: f64 = 1e-9;
const ETA_CAP: f64 = 0.125;

/// One scale of the multi-scale machinery. The per-cluster padding
/// parameter adapts to the local weight growth: dense balls get a small
/// eta (finer shells), sparse ones the full cap.
pub fn build_partition_bundle(
    x: &MetricSpace,
    w: &WeightFunction,
    delta_hat: f64,
    delta: f64,
) -> Result<PartitionBundle> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidFraction(delta));
    }
    if !(delta_hat > 0.0 && delta_hat.is_finite()) {
        return Err(Error::InvalidDelta(delta_hat));
    }
    let n = x.n();
    if n == 0 || w.len() != n {
        return Err(Error::InvalidParameters("weights must match the space".into()));
    }
    let max_rounds = (2.0 * (n as f64).ln() / delta).ceil() as usize + 1;
    let mut alive = Subspace::full(n);
    let mut rounds = Vec::new();

    while !alive.is_empty() {
        if rounds.len() >= max_rounds {
            return Err(Error::guarantee(
                "bundle round count <= ceil(2 ln n / delta) + 1",
                rounds.len() as f64 + 1.0,
                max_rounds as f64,
            ));
        }
        let mut rem = alive.clone();
        let mut clusters = Vec::new();
        loop {
            let diam = x.diameter_of(rem.ids())?;
            // strict: a remainder spread over exactly delta_hat still splits
            if rem.len() == 1 || diam < delta_hat {
                // remainder fits in one cluster; its padding is whatever
                // distance the round's other clusters left it
                let outside = alive.minus(&rem);
                let padding = if outside.is_empty() {
                    f64::INFINITY
                } else {
                    set_distance(x, rem.ids(), outside.ids())
                };
                let eta = (padding / delta_hat).min(ETA_CAP);
                clusters.push(BundleCluster {
                    members: rem.clone(),
                    core: rem.clone(),
                    eta,
                    padding,
                    terminal: true,
                });
                break;
            }
            // local growth ratio at the best center, with the same rule the
            // decomposition will apply
            let mut ratio = f64::INFINITY;
            for v in rem.iter() {
                let outer = w.of(&x.ball_in(v, delta_hat / 2.0, rem.ids()));
                let inner = w.of(&x.ball_in(v, delta_hat / 4.0, rem.ids()));
                ratio = ratio.min(outer / inner);
            }
            let eta = ((1.0 / delta).log2() / ratio.log2().max(1.0)).min(ETA_CAP);
            let t = ((1.0 / (4.0 * eta)).ceil() as usize).max(2);
            let dec = decompose_relaxed(x, w, &rem, &rem, delta_hat, t)?;
            let eta_c = 1.0 / (4.0 * t as f64);
            let outside = alive.minus(&dec.q);
            let floor = eta_c * delta_hat;
            let core_ids: Vec<usize> = dec
                .p
                .iter()
                .filter(|&m| set_distance(x, &[m], outside.ids()) >= floor * (1.0 - REL_EPS))
                .collect();
            let core = Subspace::new_sorted(core_ids);
            let padding = if core.is_empty() {
                0.0
            } else {
                set_distance(x, core.ids(), outside.ids())
            };
            clusters.push(BundleCluster { members: dec.q.clone(), core, eta: eta_c, padding, terminal: false });
            rem = rem.minus(&dec.q);
            if rem.is_empty() {
                break;
            }
        }
        let mut retired = Subspace::new(vec![]);
        for c in &clusters {
            retired = retired.union(&c.core);
        }
        if retired.is_empty() {
            return Err(Error::guarantee("bundle round retires a point", 0.0, 1.0));
        }
        alive = alive.minus(&retired);
        rounds.push(BundleRound { clusters });
    }
    let bundle = PartitionBundle { delta_hat, delta, rounds };
    verify_bundle(x, &bundle, n)?;
    Ok(bundle)
}

/// Re-derive the bundle invariants from the serialized form alone.
pub fn verify_bundle(x: &MetricSpace, bundle: &PartitionBundle, n: usize) -> Result<()> {
    let mut alive = Subspace::full(n);
    let mut padded = vec![false; n];
    for round in &bundle.rounds {
        let mut seen = Subspace::new(vec![]);
        for c in &round.clusters {
            let diam = x.diameter_of(c.members.ids())?;
            if diam > bundle.delta_hat * (1.0 + REL_EPS) {
                return Err(Error::guarantee("cluster diameter <= delta_hat", diam, bundle.delta_hat));
            }
            if !c.core.is_subset_of(&c.members) || !c.members.is_subset_of(&alive) {
                return Err(Error::MalformedInput("cluster outside its round's alive set".into()));
            }
            if seen.intersect(&c.members).len() > 0 {
                return Err(Error::MalformedInput("overlapping clusters in a round".into()));
            }
            seen = seen.union(&c.members);
            let outside = alive.minus(&c.members);
            let floor = c.eta * bundle.delta_hat;
            for m in c.core.iter() {
                let d = if outside.is_empty() {
                    f64::INFINITY
                } else {
                    set_distance(x, &[m], outside.ids())
                };
                if d < floor * (1.0 - REL_EPS) {
                    return Err(Error::guarantee("core padding >= eta * delta_hat", d, floor));
                }
                padded[m] = true;
            }
        }
        if seen != alive {
            return Err(Error::MalformedInput("round clusters do not partition alive set".into()));
        }
        let mut retired = Subspace::new(vec![]);
        for c in &round.clusters {
            retired = retired.union(&c.core);
        }
        alive = alive.minus(&retired);
    }
    if !alive.is_empty() {
        return Err(Error::MalformedInput("bundle leaves points alive".into()));
    }
    if let Some(m) = padded.iter().position(|&p| !p) {
        return Err(Error::guarantee(format!("point {m} padded in some round"), 0.0, 1.0));
    }
    Ok(())
}

impl PartitionBundle {
    /// Largest number of clusters in any round, the codeword-length driver
    /// for the coordinate embedding.
    pub fn max_clusters(&self) -> usize {
        self.rounds.iter().map(|r| r.clusters.len()).max().unwrap_or(0)
    }
}
