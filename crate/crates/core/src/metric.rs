//! Finite metric spaces backed by a dense distance matrix, plus the ball,
//! radius and spherical-weight primitives everything else is built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite metric space on points `0..n`, stored as a dense symmetric matrix.
///
/// Immutable after construction; all queries take `&self` and are safe to run
/// concurrently.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    pub provenance: Option<String>,
}

/// Per-point positive weights. The default is the constant function 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightFunction(Vec<f64>);

/// A sorted, duplicate-free set of point ids drawn from one [`MetricSpace`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subspace(Vec<usize>);

impl MetricSpace {
    /// Build from a full `n x n` matrix, validating symmetry, the zero
    /// diagonal and positivity of off-diagonal entries. The O(n^3) triangle
    /// inequality check is separate (`validate_triangle`) and opt-in.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::MalformedInput(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = rows[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::NegativeDistance { i, j, d });
                }
                if i == j && d != 0.0 {
                    return Err(Error::NonzeroDiagonal { i, d });
                }
                if i != j && d == 0.0 {
                    return Err(Error::ZeroDistancePair { i, j });
                }
                if j < i {
                    let dji = rows[j][i];
                    if d != dji {
                        return Err(Error::AsymmetricInput { i, j, dij: d, dji });
                    }
                }
                dist[i * n + j] = d;
            }
        }
        Ok(MetricSpace { n, dist, provenance: None })
    }

    /// Metric induced by an l_p norm on a point cloud. `p >= 1`; `p = f64::INFINITY`
    /// gives the max norm.
    pub fn from_points(points: &[Vec<f64>], p: f64) -> Result<Self> {
        if p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        let n = points.len();
        let dim = points.first().map_or(0, |v| v.len());
        if points.iter().any(|v| v.len() != dim) {
            return Err(Error::MalformedInput("ragged point cloud".into()));
        }
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = lp_dist(&points[i], &points[j], p);
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        Self::from_matrix(rows)
    }

    /// Shortest-path closure of a weighted undirected graph given as
    /// `(u, v, w)` edges on `0..n`. Errors if the graph is disconnected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let inf = f64::INFINITY;
        let mut d = vec![inf; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::MalformedInput(format!("edge ({u},{v}) out of range")));
            }
            if w <= 0.0 || !w.is_finite() {
                return Err(Error::NegativeDistance { i: u, j: v, d: w });
            }
            if u == v {
                continue;
            }
            if w < d[u * n + v] {
                d[u * n + v] = w;
                d[v * n + u] = w;
            }
        }
        // Floyd-Warshall
        for k in 0..n {
            for i in 0..n {
                let dik = d[i * n + k];
                if dik == inf {
                    continue;
                }
                for j in 0..n {
                    let c = dik + d[k * n + j];
                    if c < d[i * n + j] {
                        d[i * n + j] = c;
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if d[i * n + j] == inf {
                    return Err(Error::DisconnectedGraph { i, j });
                }
            }
        }
        let rows = (0..n).map(|i| d[i * n..(i + 1) * n].to_vec()).collect();
        Self::from_matrix(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn check_point(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::UnknownPoint(i))
        }
    }

    /// Full O(n^3) triangle inequality check. Allows one part in 10^12 of
    /// relative slack so shortest-path closures, whose sums are re-associated
    /// during the closure, pass.
    pub fn validate_triangle(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let dij = self.dist(i, j);
                for k in 0..self.n {
                    let sum = dij + self.dist(j, k);
                    if self.dist(i, k) > sum * (1.0 + 1e-12) {
                        return Err(Error::TriangleViolation {
                            i,
                            j,
                            k,
                            dik: self.dist(i, k),
                            sum,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Closed ball `{u : d(u,v) <= r}` over the whole space.
    pub fn ball(&self, v: usize, r: f64) -> Result<Subspace> {
        self.check_point(v)?;
        Ok(Subspace::new_sorted(
            (0..self.n).filter(|&u| self.dist(u, v) <= r).collect(),
        ))
    }

    /// Closed ball restricted to `members` (which must be sorted).
    pub fn ball_in(&self, v: usize, r: f64, members: &[usize]) -> Vec<usize> {
        members.iter().copied().filter(|&u| self.dist(u, v) <= r).collect()
    }

    /// Max pairwise distance over `members`; 0 for a singleton.
    pub fn diameter_of(&self, members: &[usize]) -> Result<f64> {
        if members.is_empty() {
            return Err(Error::EmptySubspace);
        }
        let mut best = 0.0f64;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = self.dist(i, j);
                if d > best {
                    best = d;
                }
            }
        }
        Ok(best)
    }

    /// The id-lexicographically smallest pair realizing the diameter of `members`.
    pub fn diameter_pair(&self, members: &[usize]) -> Result<(usize, usize, f64)> {
        if members.len() < 2 {
            return Err(Error::EmptySubspace);
        }
        let mut best = (members[0], members[1], -1.0f64);
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let d = self.dist(i, j);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        Ok(best)
    }

    pub fn diameter(&self) -> f64 {
        let all: Vec<usize> = (0..self.n).collect();
        self.diameter_of(&all).unwrap_or(0.0)
    }

    /// Ratio of the largest to the smallest positive pairwise distance.
    pub fn aspect_ratio(&self) -> f64 {
        let mut max = 0.0f64;
        let mut min = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.dist(i, j);
                if d > max {
                    max = d;
                }
                if d < min {
                    min = d;
                }
            }
        }
        if min.is_infinite() {
            1.0
        } else {
            max / min
        }
    }

    /// The k-th smallest distance from `x`, counting `x` itself at 0; this is
    /// the minimum r with `|B(x,r)| >= k`.
    pub fn knn_radius(&self, x: usize, k: usize) -> Result<f64> {
        self.check_point(x)?;
        if k < 1 || k > self.n {
            return Err(Error::KOutOfRange { k, n: self.n });
        }
        let mut ds: Vec<f64> = (0..self.n).map(|u| self.dist(x, u)).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ds[k - 1])
    }

    /// Minimum r such that `w(B(u,r)) >= eps * w(X)`; always a realized
    /// distance (or 0).
    pub fn weight_radius(&self, w: &WeightFunction, u: usize, eps: f64) -> Result<f64> {
        self.check_point(u)?;
        if eps <= 0.0 || eps > 1.0 {
            return Err(Error::InvalidFraction(eps));
        }
        let target = eps * w.total();
        let mut by_dist: Vec<(f64, usize)> = (0..self.n).map(|v| (self.dist(u, v), v)).collect();
        by_dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = 0.0;
        let mut i = 0;
        while i < by_dist.len() {
            let r = by_dist[i].0;
            // absorb all points at the same radius before testing
            while i < by_dist.len() && by_dist[i].0 == r {
                acc += w.get(by_dist[i].1);
                i += 1;
            }
            if acc >= target {
                return Ok(r);
            }
        }
        // total weight >= eps * total always holds for eps <= 1
        Ok(by_dist.last().map_or(0.0, |p| p.0))
    }
}

fn lp_dist(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    } else {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Spherical weight of `z`: the maximum over members of the weight of the
/// closed ball of radius `diam(z)/4`, with the ball taken inside `ambient`
/// and weight counted through `w` (pre-restricted for the `w_C` variant).
pub fn spherical_weight(
    x: &MetricSpace,
    w: &WeightFunction,
    z: &[usize],
    ambient: Option<&[usize]>,
) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let ambient = ambient.unwrap_or(z);
    let r = x.diameter_of(z)? / 4.0;
    let mut best = 0.0f64;
    for &c in z {
        let mass: f64 = ambient
            .iter()
            .copied()
            .filter(|&u| x.dist(u, c) <= r)
            .map(|u| w.get(u))
            .sum();
        if mass > best {
            best = mass;
        }
    }
    Ok(best)
}

impl WeightFunction {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameters("weights must be positive and finite".into()));
        }
        Ok(WeightFunction(w))
    }

    pub fn unit(n: usize) -> Self {
        WeightFunction(vec![1.0; n])
    }

    /// `w_C`: the same weights with everything outside `core` zeroed out.
    /// Not a valid standalone weight function (zeros allowed); used only as
    /// the restricted measure inside decompositions.
    pub fn restricted_to(&self, core: &Subspace) -> WeightFunction {
        let mut w = vec![0.0; self.0.len()];
        for &i in core.ids() {
            w[i] = self.0[i];
        }
        WeightFunction(w)
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn of(&self, ids: &[usize]) -> f64 {
        ids.iter().map(|&i| self.0[i]).sum()
    }

    /// `w^psi(Z) = sum over members of w(x)^psi`.
    pub fn pow_of(&self, ids: &[usize], psi: f64) -> f64 {
        ids.iter().map(|&i| self.0[i].powf(psi)).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&x| x == 1.0)
    }
}

impl Subspace {
    /// Canonicalize: sort ascending and drop duplicates.
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Subspace(ids)
    }

    /// The caller guarantees `ids` is sorted and duplicate-free.
    pub fn new_sorted(ids: Vec<usize>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Subspace(ids)
    }

    pub fn full(n: usize) -> Self {
        Subspace((0..n).collect())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        Subspace::new_sorted(self.0.iter().copied().filter(|&i| other.contains(i)).collect())
    }

    pub fn minus(&self, other: &Subspace) -> Subspace {
        Subspace::new_sorted(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    pub fn union(&self, other: &Subspace) -> Subspace {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Subspace::new(v)
    }

    pub fn is_subset_of(&self, other: &Subspace) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }
}

impl From<Vec<usize>> for Subspace {
    fn from(v: Vec<usize>) -> Self {
        Subspace::new(v)
    }
}

/// Minimum distance between two nonempty point sets.
pub fn set_distance(x: &MetricSpace, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &i in a {
        for &j in b {
            let d = x.dist(i, j);
            if d < best {
                best = d;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{generate, FixtureSpec};

    fn l4() -> MetricSpace {
        generate(&FixtureSpec::Path { n: 4 }).unwrap()
    }

    fn u4() -> MetricSpace {
        generate(&FixtureSpec::Uniform { n: 4 }).unwrap()
    }

    fn c22() -> MetricSpace {
        generate(&FixtureSpec::Clusters { k: 2, m: 2, s: 10.0 }).unwrap()
    }

    #[test]
    fn matrix_roundtrip_and_validation() {
        let m = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.dist(0, 1), 1.0);

        let asym = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(asym, Err(Error::AsymmetricInput { .. })));
    }

    #[test]
    fn graph_closure_path() {
        let m = MetricSpace::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(m.dist(0, 2), 2.0);
        let disc = MetricSpace::from_edges(3, &[(0, 1, 1.0)]);
        assert!(matches!(disc, Err(Error::DisconnectedGraph { .. })));
    }

    #[test]
    fn balls() {
        let x = l4();
        assert_eq!(x.ball(0, 1.0).unwrap().ids(), &[0, 1]);
        assert_eq!(x.ball(2, 0.0).unwrap().ids(), &[2]);
        let u = u4();
        assert_eq!(u.ball(0, 2.0).unwrap().ids(), &[0, 1, 2, 3]);
    }

    #[test]
    fn ball_monotone_in_radius() {
        let x = c22();
        for v in 0..x.n() {
            let mut prev = 0;
            for r in [0.0, 0.5, 1.0, 5.0, 10.0, 20.0] {
                let b = x.ball(v, r).unwrap();
                assert!(b.len() >= prev);
                assert!(b.contains(v));
                prev = b.len();
            }
        }
    }

    #[test]
    fn diameter_and_aspect() {
        let x = l4();
        assert_eq!(x.diameter(), 3.0);
        assert_eq!(x.aspect_ratio(), 3.0);
    }

    #[test]
    fn knn_radius_matches_sorted_distances() {
        let x = l4();
        assert_eq!(x.knn_radius(0, 2).unwrap(), 1.0);
        assert_eq!(x.knn_radius(0, 1).unwrap(), 0.0);
        assert_eq!(x.knn_radius(3, 1).unwrap(), 0.0);
        assert!(matches!(x.knn_radius(0, 5), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn weight_radius_c22() {
        let x = c22();
        let w = WeightFunction::unit(4);
        // ball around 0 must reach weight 2 of total 4
        assert_eq!(x.weight_radius(&w, 0, 0.5).unwrap(), 1.0);
        assert_eq!(x.weight_radius(&w, 0, 0.25).unwrap(), 0.0);
        assert_eq!(x.weight_radius(&w, 0, 1.0).unwrap(), 10.0);
    }

    #[test]
    fn spherical_weight_examples() {
        let x = c22();
        let w = WeightFunction::unit(4);
        let all = Subspace::full(4);
        assert_eq!(spherical_weight(&x, &w, all.ids(), None).unwrap(), 2.0);
        // singleton
        assert_eq!(spherical_weight(&x, &w, &[2], None).unwrap(), 1.0);
        let u = u4();
        let wu = WeightFunction::unit(4);
        assert_eq!(spherical_weight(&u, &wu, Subspace::full(4).ids(), None).unwrap(), 1.0);
    }

    #[test]
    fn spherical_weight_at_most_total() {
        for m in [l4(), u4(), c22()] {
            let w = WeightFunction::unit(m.n());
            let all = Subspace::full(m.n());
            assert!(spherical_weight(&m, &w, all.ids(), None).unwrap() <= w.total());
        }
    }

    #[test]
    fn subspace_ops() {
        let a = Subspace::new(vec![3, 1, 2, 2]);
        assert_eq!(a.ids(), &[1, 2, 3]);
        let b = Subspace::new(vec![2, 4]);
        assert_eq!(a.intersect(&b).ids(), &[2]);
        assert_eq!(a.minus(&b).ids(), &[1, 3]);
        assert_eq!(a.union(&b).ids(), &[1, 2, 3, 4]);
    }
}
