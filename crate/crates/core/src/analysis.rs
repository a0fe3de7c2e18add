//! Distortion measurement over all pairs: worst case, averages, l_q
//! statistics, partial (order-statistic) bounds, per-pair scaling
//! thresholds, k-local distortion, and a brute-force replay of the
//! decomposition rules used as a test oracle.

use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose, Decomposition};
use crate::error::{Error, Result};
use crate::metric::{set_distance, MetricSpace, Subspace, WeightFunction};

const REL_EPS: f64 = 1e-9;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionReport {
    pub pairs: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// max per-pair distortion; in general mode this already folds in
    /// contraction (per-pair max(ratio, 1/ratio))
    pub worst_case: f64,
    pub avg: f64,
    /// (q, l_q) for each requested exponent, in request order
    pub lq: Vec<(f64, f64)>,
    pub non_contractive: bool,
}

/// q-th power mean of a distortion list.
fn power_mean(dists: &[f64], q: f64) -> f64 {
    if dists.is_empty() {
        return 1.0;
    }
    if q.is_infinite() {
        return dists.iter().cloned().fold(0.0, f64::max);
    }
    let s: f64 = dists.iter().map(|d| d.powf(q)).sum();
    (s / dists.len() as f64).powf(1.0 / q)
}

fn pair_distortions(
    x: &MetricSpace,
    mapped: &dyn Fn(usize, usize) -> f64,
    non_contractive: bool,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = x.n();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    let mut max_ratio: f64 = f64::NEG_INFINITY;
    let mut min_ratio: f64 = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let d = x.dist(a, b);
            if d <= 0.0 {
                return Err(Error::ZeroDistancePair { i: a, j: b });
            }
            let r = mapped(a, b) / d;
            max_ratio = max_ratio.max(r);
            min_ratio = min_ratio.min(r);
            dists.push(if non_contractive { r } else { r.max(1.0 / r) });
        }
    }
    Ok((dists, max_ratio, min_ratio))
}

pub fn distortion_report(
    x: &MetricSpace,
    mapped: &dyn Fn(usize, usize) -> f64,
    qs: &[f64],
    non_contractive: bool,
) -> Result<DistortionReport> {
    let (dists, max_ratio, min_ratio) = pair_distortions(x, mapped, non_contractive)?;
    let worst = power_mean(&dists, f64::INFINITY);
    let mut lq = Vec::with_capacity(qs.len());
    for &q in qs {
        lq.push((q, power_mean(&dists, q)));
    }
    // power means are nondecreasing in q
    let mut sorted: Vec<(f64, f64)> = lq.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        if w[1].1 < w[0].1 * (1.0 - REL_EPS) {
            return Err(Error::guarantee(
                format!("l_q monotone: l_{} <= l_{}", w[0].0, w[1].0),
                w[1].1,
                w[0].1,
            ));
        }
    }
    Ok(DistortionReport {
        pairs: dists.len(),
        max_ratio,
        min_ratio,
        worst_case: worst,
        avg: power_mean(&dists, 1.0),
        lq,
        non_contractive,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialReport {
    pub eps: f64,
    /// distortion of the best (1-eps) fraction of pairs
    pub achieved: f64,
    pub excluded_pairs: usize,
    pub pairs: usize,
}

/// Order statistic: the ceil((1-eps) |pairs|)-th smallest distortion.
pub fn partial_report(
    x: &MetricSpace,
    mapped: &dyn Fn(usize, usize) -> f64,
    eps: f64,
    non_contractive: bool,
) -> Result<PartialReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidFraction(eps));
    }
    let (mut dists, _, _) = pair_distortions(x, mapped, non_contractive)?;
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pairs = dists.len();
    let keep = ((1.0 - eps) * pairs as f64).ceil() as usize;
    let achieved = if keep == 0 { 1.0 } else { dists[keep - 1] };
    Ok(PartialReport { eps, achieved, excluded_pairs: pairs - keep, pairs })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingPair {
    pub a: usize,
    pub b: usize,
    /// largest eps for which this pair is in the coarse good set G_eps
    pub threshold: f64,
    pub distortion: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingCurve {
    /// sorted ascending by threshold
    pub records: Vec<ScalingPair>,
}

/// Per-pair scaling thresholds from the coarse rule: (a,b) lies in G_eps
/// exactly when d(a,b) >= both endpoints' radius capturing an eps/2 weight
/// fraction, so the threshold is twice the smaller captured fraction at
/// radius d(a,b).
pub fn scaling_curve(
    x: &MetricSpace,
    w: &WeightFunction,
    mapped: &dyn Fn(usize, usize) -> f64,
    non_contractive: bool,
) -> Result<ScalingCurve> {
    let n = x.n();
    let total = w.total();
    let mut records = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let d = x.dist(a, b);
            if d <= 0.0 {
                return Err(Error::ZeroDistancePair { i: a, j: b });
            }
            let mass = |u: usize| -> f64 {
                (0..n).filter(|&v| x.dist(u, v) <= d).map(|v| w.get(v)).sum()
            };
            let threshold = (2.0 * (mass(a) / total).min(mass(b) / total)).min(1.0);
            let r = mapped(a, b) / d;
            let distortion = if non_contractive { r } else { r.max(1.0 / r) };
            records.push(ScalingPair { a, b, threshold, distortion });
        }
    }
    records.sort_by(|p, q| {
        p.threshold
            .partial_cmp(&q.threshold)
            .unwrap()
            .then(p.a.cmp(&q.a))
            .then(p.b.cmp(&q.b))
    });
    Ok(ScalingCurve { records })
}

impl ScalingCurve {
    /// Worst distortion among the pairs of G_eps (threshold >= eps).
    pub fn eval(&self, eps: f64) -> f64 {
        self.records
            .iter()
            .filter(|p| p.threshold >= eps)
            .map(|p| p.distortion)
            .fold(1.0, f64::max)
    }
}

/// Smallest alpha with mapped(x,y) >= min(d(x,y), r_k(x)) / alpha over
/// x in the core and y anywhere; the map must be non-expansive.
pub fn local_distortion(
    x: &MetricSpace,
    mapped: &dyn Fn(usize, usize) -> f64,
    core: &Subspace,
    k: usize,
) -> Result<f64> {
    let n = x.n();
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut alpha: f64 = 1.0;
    for a in core.iter() {
        let rk = x.knn_radius(a, k)?;
        for b in 0..n {
            if a == b {
                continue;
            }
            let m = mapped(a, b);
            if m > x.dist(a, b) * (1.0 + REL_EPS) {
                return Err(Error::NotNonExpansive { i: a, j: b, mapped: m, d: x.dist(a, b) });
            }
            let need = x.dist(a, b).min(rk);
            if need <= 0.0 {
                continue;
            }
            if m <= 0.0 {
                return Ok(f64::INFINITY);
            }
            alpha = alpha.max(need / m);
        }
    }
    Ok(alpha)
}

/// Exhaustive replay of the decomposition's selection rules with an
/// independent implementation, compared field by field, plus brute-force
/// verification of its inequalities.
pub fn brute_force_check(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    delta: f64,
    t: usize,
) -> Result<()> {
    if z.len() > 8 {
        return Err(Error::InvalidParameters("brute force limited to n <= 8".into()));
    }
    let got = decompose(x, w, z, z, delta, t)?;

    // center: scan every candidate, recomputing ball weights by raw loops
    let ratio_at = |v: usize| -> f64 {
        let mut outer = 0.0;
        let mut inner = 0.0;
        for u in z.iter() {
            if x.dist(u, v) <= delta / 2.0 {
                outer += w.get(u);
            }
            if x.dist(u, v) <= delta / 4.0 {
                inner += w.get(u);
            }
        }
        outer / inner
    };
    let mut center = usize::MAX;
    let mut best = f64::INFINITY;
    for v in z.iter() {
        let r = ratio_at(v);
        if r < best {
            best = r;
            center = v;
        }
    }
    if center != got.center {
        return Err(Error::guarantee("replay center", got.center as f64, center as f64));
    }

    let shell_members = |i: usize| -> Vec<usize> {
        let r = (1.0 + i as f64 / t as f64) * delta / 4.0;
        z.iter().filter(|&u| x.dist(u, center) <= r).collect()
    };
    let shell_w = |i: usize| -> f64 { shell_members(i).iter().map(|&u| w.get(u)).sum() };
    let mut index = 0;
    let mut best = f64::INFINITY;
    for i in 1..=t {
        let r = shell_w(i) / shell_w(i - 1);
        if r < best {
            best = r;
            index = i;
        }
    }
    if index != got.index {
        return Err(Error::guarantee("replay shell index", got.index as f64, index as f64));
    }
    let q = Subspace::new(shell_members(index));
    let p = Subspace::new(shell_members(index - 1));
    if q != got.q || p != got.p {
        return Err(Error::MalformedInput("replay Q/P mismatch".into()));
    }

    // inequalities, each recomputed from raw loops
    let mut diam_q = 0.0f64;
    for a in q.iter() {
        for b in q.iter() {
            diam_q = diam_q.max(x.dist(a, b));
        }
    }
    if diam_q > delta {
        return Err(Error::guarantee("replay diam(Q) <= delta", diam_q, delta));
    }
    if !got.qbar.is_empty() {
        let pad = set_distance(x, p.ids(), got.qbar.ids());
        let floor = delta / (4.0 * t as f64);
        if pad < floor * (1.0 - REL_EPS) {
            return Err(Error::guarantee("replay padding >= delta/(4t)", pad, floor));
        }
    }
    let bsize = |set: &Subspace| -> f64 {
        let mut diam = 0.0f64;
        for a in set.iter() {
            for b in set.iter() {
                diam = diam.max(x.dist(a, b));
            }
        }
        let mut best = 0.0f64;
        for c in set.iter() {
            let mass: f64 = set
                .iter()
                .filter(|&u| x.dist(u, c) <= diam / 4.0)
                .map(|u| w.get(u))
                .sum();
            best = best.max(mass);
        }
        best
    };
    let lhs = w.of(p.ids());
    let rhs = w.of(q.ids()) * (bsize(z) / bsize(&q)).powf(-1.0 / t as f64);
    if lhs < rhs * (1.0 - REL_EPS) {
        return Err(Error::guarantee("replay weight bound", lhs, rhs));
    }
    Ok(())
}

/// Convenience wrapper tying the replay to a finished decomposition.
pub fn replay_matches(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    d: &Decomposition,
) -> Result<()> {
    brute_force_check(x, w, z, d.delta, d.t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, random_metric, FixtureSpec};
    use crate::hst::LcaIndex;
    use crate::ramsey::ramsey_subspace;

    #[test]
    fn identity_all_ones() {
        let x = generate(&FixtureSpec::Path { n: 5 }).unwrap();
        let id = |a: usize, b: usize| x.dist(a, b);
        let r = distortion_report(&x, &id, &[1.0, 2.0, f64::INFINITY], false).unwrap();
        assert_eq!(r.worst_case, 1.0);
        assert_eq!(r.avg, 1.0);
        assert!(r.lq.iter().all(|&(_, v)| v == 1.0));
    }

    #[test]
    fn power_mean_formulas() {
        let d = [1.0, 2.0];
        assert_eq!(power_mean(&d, 1.0), 1.5);
        assert!((power_mean(&d, 2.0) - 2.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(power_mean(&d, f64::INFINITY), 2.0);
    }

    #[test]
    fn c22_tree_is_exact() {
        let x = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        let r = ramsey_subspace(&x, &WeightFunction::unit(4), 2).unwrap();
        let idx = LcaIndex::build(&r.tree);
        let acc = |a: usize, b: usize| r.tree.point_distance(&idx, a, b).unwrap();
        let rep = distortion_report(&x, &acc, &[1.0, 2.0], true).unwrap();
        assert_eq!(rep.worst_case, 1.0);
        assert_eq!(rep.min_ratio, 1.0);
    }

    #[test]
    fn partial_order_statistic() {
        // 4 points, 6 pairs; blow up exactly one pair
        let x = generate(&FixtureSpec::Uniform { n: 4 }).unwrap();
        let acc = |a: usize, b: usize| {
            if (a, b) == (0, 1) {
                100.0 * x.dist(a, b)
            } else {
                x.dist(a, b)
            }
        };
        let r = partial_report(&x, &acc, 1.0 / 6.0, true).unwrap();
        assert_eq!(r.achieved, 1.0);
        assert_eq!(r.excluded_pairs, 1);
        let tight = partial_report(&x, &acc, 0.01, true).unwrap();
        assert_eq!(tight.achieved, 100.0);
    }

    #[test]
    fn scaling_thresholds_match_knn() {
        let x = generate(&FixtureSpec::Path { n: 8 }).unwrap();
        let w = WeightFunction::unit(8);
        let id = |a: usize, b: usize| x.dist(a, b);
        let curve = scaling_curve(&x, &w, &id, true).unwrap();
        assert_eq!(curve.eval(0.5), 1.0);
        // unit weights: the captured fraction at radius d is |B(u,d)|/n,
        // consistent with weight_radius and knn_radius
        for rec in &curve.records {
            let d = x.dist(rec.a, rec.b);
            for u in [rec.a, rec.b] {
                let k = (0..8).filter(|&v| x.dist(u, v) <= d).count();
                assert!(x.knn_radius(u, k).unwrap() <= d);
                assert_eq!(x.weight_radius(&w, u, k as f64 / 8.0).unwrap() <= d, true);
            }
        }
        // near pairs enter the good set at smaller eps caps than far pairs
        let near = curve.records.iter().find(|r| (r.a, r.b) == (0, 1)).unwrap();
        let far = curve.records.iter().find(|r| (r.a, r.b) == (0, 7)).unwrap();
        assert!(near.threshold < far.threshold);
    }

    #[test]
    fn local_distortion_modes() {
        let x = generate(&FixtureSpec::Path { n: 5 }).unwrap();
        let core = Subspace::full(5);
        let id = |a: usize, b: usize| x.dist(a, b);
        assert_eq!(local_distortion(&x, &id, &core, 5).unwrap(), 1.0);
        let half = |a: usize, b: usize| x.dist(a, b) / 2.0;
        assert_eq!(local_distortion(&x, &half, &core, 5).unwrap(), 2.0);
        // r_1 = 0 makes every requirement vacuous
        assert_eq!(local_distortion(&x, &half, &core, 1).unwrap(), 1.0);
        let k1_zero = |_: usize, _: usize| 0.0;
        assert_eq!(local_distortion(&x, &k1_zero, &core, 1).unwrap(), 1.0);
        let expand = |a: usize, b: usize| 2.0 * x.dist(a, b);
        assert!(matches!(
            local_distortion(&x, &expand, &core, 2),
            Err(Error::NotNonExpansive { .. })
        ));
    }

    #[test]
    fn brute_force_agrees_on_fixtures() {
        let c22 = generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap();
        brute_force_check(&c22, &WeightFunction::unit(4), &Subspace::full(4), 5.0, 2).unwrap();
        let l4 = generate(&FixtureSpec::Path { n: 4 }).unwrap();
        brute_force_check(&l4, &WeightFunction::unit(4), &Subspace::full(4), 1.5, 2).unwrap();
    }

    #[test]
    fn brute_force_agrees_on_random() {
        for seed in 0..20 {
            let x = random_metric(6, seed).unwrap();
            let z = Subspace::full(6);
            for t in [2, 3] {
                brute_force_check(&x, &WeightFunction::unit(6), &z, x.diameter() / 2.0, t)
                    .unwrap();
            }
        }
    }
}
