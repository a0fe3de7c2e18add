//! The core decomposition primitive: split a space into a small-diameter
//! cluster Q with a heavy, padded core P and the remainder.
//!
//! Every call re-checks its own guarantees and fails with a
//! `GuaranteeViolation` rather than returning a silently broken split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{set_distance, MetricSpace, Subspace, WeightFunction};

/// Result of one decomposition step on a set Z.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Decomposition {
    /// chosen ball center
    pub center: usize,
    /// chosen shell index, in 1..=t
    pub index: usize,
    pub q: Subspace,
    pub qbar: Subspace,
    pub p: Subspace,
    pub delta: f64,
    pub t: usize,
    /// d(P, Q̄); infinite when Q̄ is empty
    pub realized_padding: f64,
}

// Relative slack for floating-point re-checks of exact inequalities. The
// underlying arguments are exact; the slack only absorbs rounding in powf
// and in subtraction of nearly equal sums.
const REL_EPS: f64 = 1e-9;

/// Strict form: requires delta <= diam(Z)/2 and guarantees all invariants,
/// with weights counted only on `core` (pass core = z for the plain form).
pub fn decompose(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    core: &Subspace,
    delta: f64,
    t: usize,
) -> Result<Decomposition> {
    decompose_inner(x, w, z, core, delta, t, false)
}

/// Relaxed form used by partition bundles: admits delta up to diam(Z), where
/// the cluster may swallow Z whole (empty remainder) and the spherical-weight
/// inequality is not guaranteed. Diameter and padding guarantees still hold.
pub fn decompose_relaxed(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    core: &Subspace,
    delta: f64,
    t: usize,
) -> Result<Decomposition> {
    decompose_inner(x, w, z, core, delta, t, true)
}

fn decompose_inner(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    core: &Subspace,
    delta: f64,
    t: usize,
    relaxed: bool,
) -> Result<Decomposition> {
    if z.is_empty() {
        return Err(Error::EmptySubspace);
    }
    if t < 2 {
        return Err(Error::InvalidParameters(format!("t={t} must be >= 2")));
    }
    let diam = x.diameter_of(z.ids())?;
    let max_delta = if relaxed { diam } else { diam / 2.0 };
    if !(delta > 0.0) || delta > max_delta {
        return Err(Error::DeltaOutOfRange { delta, max: max_delta });
    }
    let candidates: Vec<usize> = z.iter().filter(|&v| core.contains(v)).collect();
    if candidates.is_empty() {
        return Err(Error::EmptyCore);
    }
    let w_on = |ids: &[usize]| -> f64 {
        ids.iter().filter(|&&i| core.contains(i)).map(|&i| w.get(i)).sum()
    };

    // (1) center minimizing the half/quarter ball weight ratio, smallest id
    // on ties; each candidate's inner ball contains itself, so the ratio is
    // always defined
    let mut center = candidates[0];
    let mut best_ratio = f64::INFINITY;
    for &v in &candidates {
        let outer = w_on(&x.ball_in(v, delta / 2.0, z.ids()));
        let inner = w_on(&x.ball_in(v, delta / 4.0, z.ids()));
        let ratio = outer / inner;
        if ratio < best_ratio {
            best_ratio = ratio;
            center = v;
        }
    }

    // (2) concentric shells, (3) shell index minimizing the consecutive
    // weight ratio, smallest index on ties
    let shell = |i: usize| -> Vec<usize> {
        x.ball_in(center, (1.0 + i as f64 / t as f64) * delta / 4.0, z.ids())
    };
    let mut prev = shell(0);
    let mut prev_w = w_on(&prev);
    let w0 = prev_w;
    let mut best = (f64::INFINITY, 0usize, Vec::new(), Vec::new());
    let mut last_w = prev_w;
    for i in 1..=t {
        let cur = shell(i);
        let cur_w = w_on(&cur);
        let ratio = cur_w / prev_w;
        if ratio < best.0 {
            best = (ratio, i, cur.clone(), prev.clone());
        }
        prev = cur;
        prev_w = cur_w;
        last_w = cur_w;
    }
    let (ratio, index, q_ids, p_outer) = best;

    // the chosen ratio cannot exceed the geometric mean of all t ratios
    let mean = (last_w / w0).powf(1.0 / t as f64);
    if ratio > mean * (1.0 + REL_EPS) {
        return Err(Error::guarantee("shell ratio vs geometric mean", ratio, mean));
    }

    let q = Subspace::new_sorted(q_ids);
    let p = Subspace::new_sorted(p_outer.into_iter().filter(|&i| core.contains(i)).collect());
    let qbar = z.minus(&q);
    let realized_padding = if qbar.is_empty() {
        f64::INFINITY
    } else {
        set_distance(x, p.ids(), qbar.ids())
    };

    let d = Decomposition { center, index, q, qbar, p, delta, t, realized_padding };
    verify_decomposition(x, w, z, core, &d, relaxed)?;
    Ok(d)
}

/// Re-derive every invariant of a finished decomposition from scratch.
pub fn verify_decomposition(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    core: &Subspace,
    d: &Decomposition,
    relaxed: bool,
) -> Result<()> {
    if !d.p.is_subset_of(&d.q) {
        return Err(Error::guarantee("P subset of Q", d.p.len() as f64, d.q.len() as f64));
    }
    if d.q.union(&d.qbar).len() != z.len() || !d.q.intersect(&d.qbar).is_empty() {
        return Err(Error::guarantee(
            "Q and Q̄ partition Z",
            (d.q.len() + d.qbar.len()) as f64,
            z.len() as f64,
        ));
    }
    let diam_q = x.diameter_of(d.q.ids())?;
    if diam_q > d.delta {
        return Err(Error::guarantee("diam(Q) <= delta", diam_q, d.delta));
    }
    let floor = d.delta / (4.0 * d.t as f64);
    if d.realized_padding < floor * (1.0 - REL_EPS) {
        return Err(Error::guarantee("padding >= delta/(4t)", d.realized_padding, floor));
    }
    if !relaxed {
        let wc = |ids: &[usize]| -> f64 {
            ids.iter().filter(|&&i| core.contains(i)).map(|&i| w.get(i)).sum()
        };
        let bz = restricted_bsize(x, w, z, core, z.ids())?;
        let bq = restricted_bsize(x, w, z, core, d.q.ids()).unwrap_or(0.0);
        if bq > 0.0 {
            let bound = wc(d.q.ids()) * (bz / bq).powf(-1.0 / d.t as f64);
            let wp = wc(d.p.ids());
            if wp < bound * (1.0 - REL_EPS) {
                return Err(Error::guarantee("w(P) >= w(Q)(bsize(Z)/bsize(Q))^(-1/t)", wp, bound));
            }
        }
    }
    Ok(())
}

/// Spherical weight of `s` with centers restricted to the core, balls taken
/// inside `s`, and weight counted only on the core.
fn restricted_bsize(
    x: &MetricSpace,
    w: &WeightFunction,
    _z: &Subspace,
    core: &Subspace,
    s: &[usize],
) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let r = x.diameter_of(s)? / 4.0;
    let mut best: f64 = 0.0;
    for &c in s.iter().filter(|&&c| core.contains(c)) {
        let mass: f64 = s
            .iter()
            .copied()
            .filter(|&u| core.contains(u) && x.dist(u, c) <= r)
            .map(|u| w.get(u))
            .sum();
        best = best.max(mass);
    }
    Ok(best)
}

/// Half-size variant: additionally guarantees |Q| <= |Z|/2 by confining the
/// search to one side of a diameter pair. The delta/(4t) padding floor holds
/// within the searched half; against the full complement only the realized
/// value is reported (boundary points of the far half can sit closer).
pub fn decompose_half(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &Subspace,
    delta: f64,
    t: usize,
) -> Result<Decomposition> {
    if z.len() < 2 {
        return Err(Error::EmptySubspace);
    }
    let diam = x.diameter_of(z.ids())?;
    if !(delta > 0.0) || delta > diam / 4.0 {
        return Err(Error::DeltaOutOfRange { delta, max: diam / 4.0 });
    }
    let (u, v, _) = x.diameter_pair(z.ids())?;
    // one of the open balls of radius diam/2 around u, v holds at most half
    // the points (they are disjoint); try u first
    let open_ball = |c: usize| -> Vec<usize> {
        z.iter().filter(|&p| x.dist(p, c) < diam / 2.0).collect()
    };
    let bu = open_ball(u);
    let (endpoint, b) = if 2 * bu.len() <= z.len() { (u, bu) } else { (v, open_ball(v)) };
    if 2 * b.len() > z.len() {
        return Err(Error::guarantee("open half-ball size", b.len() as f64, z.len() as f64 / 2.0));
    }
    let b = Subspace::new_sorted(b);
    let outside = z.minus(&b);
    // id-smallest nearest neighbor of the endpoint outside the ball
    let mut nn = outside.ids()[0];
    for p in outside.iter() {
        if x.dist(p, endpoint) < x.dist(nn, endpoint) {
            nn = p;
        }
    }
    let xprime = b.union(&Subspace::new_sorted(vec![nn]));
    // diam(X') >= diam/2 >= 2*delta, so the strict form applies
    let inner = decompose(x, w, &xprime, &xprime, delta, t)?;

    let q = inner.q;
    let p = inner.p;
    let qbar = z.minus(&q);
    // padding carried over from the inner run: d(P, X' \ Q) >= delta/(4t)
    let realized_padding = inner.realized_padding;
    if 2 * q.len() > z.len() {
        return Err(Error::guarantee("|Q| <= |Z|/2", q.len() as f64, z.len() as f64 / 2.0));
    }
    Ok(Decomposition {
        center: inner.center,
        index: inner.index,
        q,
        qbar,
        p,
        delta,
        t,
        realized_padding,
    })
}
