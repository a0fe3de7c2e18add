//! Property-based checks on seeded random metrics: construction invariants
//! that must hold for every input, not just the fixture corpus.

use proptest::prelude::*;

use ramsey_core::cover::{oracle_build, CoverBuilder, QUERY_PROBES};
use ramsey_core::decomposition::{decompose, decompose_half};
use ramsey_core::embedding::ramsey_embed;
use ramsey_core::fixtures::random_metric;
use ramsey_core::hst::LcaIndex;
use ramsey_core::metric::{Subspace, WeightFunction};
use ramsey_core::multi::build_multi_embedding;
use ramsey_core::ramsey::ramsey_subspace;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn decompose_invariants(seed in 0u64..5000, n in 3usize..10, t in 2usize..5) {
        let x = random_metric(n, seed).unwrap();
        let z = Subspace::full(n);
        let w = WeightFunction::unit(n);
        let delta = x.diameter() / 2.0;
        // verify_decomposition re-derives every invariant internally
        let d = decompose(&x, &w, &z, &z, delta, t).unwrap();
        prop_assert!(x.diameter_of(d.q.ids()).unwrap() <= delta);
        prop_assert!(d.p.is_subset_of(&d.q));
        prop_assert_eq!(d.q.len() + d.qbar.len(), n);
        prop_assert!(d.realized_padding >= delta / (4.0 * t as f64) * (1.0 - 1e-9));
    }

    #[test]
    fn decompose_half_bounds(seed in 0u64..5000, n in 4usize..10, t in 2usize..4) {
        let x = random_metric(n, seed).unwrap();
        let z = Subspace::full(n);
        let w = WeightFunction::unit(n);
        let delta = x.diameter() / 4.0;
        let d = decompose_half(&x, &w, &z, delta, t).unwrap();
        prop_assert!(2 * d.q.len() <= n);
        prop_assert!(x.diameter_of(d.q.ids()).unwrap() <= delta);
        prop_assert!(d.realized_padding >= delta / (4.0 * t as f64) * (1.0 - 1e-9));
    }

    #[test]
    fn subspace_tree_is_valid_ultrametric(seed in 0u64..5000, n in 2usize..11, t in 2usize..4) {
        let x = random_metric(n, seed).unwrap();
        let r = ramsey_subspace(&x, &WeightFunction::unit(n), t).unwrap();
        prop_assert!(r.tree.validate(1.0).is_empty());
        let idx = LcaIndex::build(&r.tree);
        let ids = r.subspace.ids();
        prop_assert!((ids.len() as u128).pow(t as u32) >= (n as u128).pow(t as u32 - 1));
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let du = r.tree.point_distance(&idx, a, b).unwrap();
                let d = x.dist(a, b);
                prop_assert!(du >= d);
                prop_assert!(du <= 8.0 * t as f64 * d);
            }
        }
    }

    #[test]
    fn embedding_core_bound(seed in 0u64..5000, n in 2usize..10) {
        let x = random_metric(n, seed).unwrap();
        let e = ramsey_embed(&x, &WeightFunction::unit(n), 2).unwrap();
        prop_assert_eq!(e.tree.leaf_count(), n);
        let idx = LcaIndex::build(&e.tree);
        for a in e.core.iter() {
            for b in 0..n {
                if a == b { continue; }
                let du = e.tree.point_distance(&idx, a, b).unwrap();
                let d = x.dist(a, b);
                prop_assert!(du >= d && du <= 32.0 * d);
            }
        }
    }

    #[test]
    fn oracle_sandwich(seed in 0u64..5000, n in 2usize..12) {
        let x = random_metric(n, seed).unwrap();
        let o = oracle_build(&x, &WeightFunction::unit(n), CoverBuilder::Basic { t: 2 }).unwrap();
        for a in 0..n {
            for b in a + 1..n {
                let (ans, k) = o.query_counted(a, b).unwrap();
                let d = x.dist(a, b);
                prop_assert!(ans >= d && ans <= 32.0 * d);
                prop_assert_eq!(k, QUERY_PROBES);
            }
        }
    }

    #[test]
    fn multi_images_cover_every_point(seed in 0u64..5000, n in 2usize..10) {
        let x = random_metric(n, seed).unwrap();
        let me = build_multi_embedding(&x, &WeightFunction::unit(n), 0.5).unwrap();
        prop_assert_eq!(me.images.len(), n);
        for (_, imgs) in &me.images {
            prop_assert!(!imgs.is_empty());
        }
        prop_assert!(((me.leaf_count() - 1) as u128).pow(2) < (n as u128).pow(3));
    }
}
