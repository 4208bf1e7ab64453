use std::collections::BTreeSet;

use clustercache::content::{hit_ratio, select_top_k, ContentCatalog};
use clustercache::effcap::{EffCapEngine, Quantizer, RadioParams};
use clustercache::energy::PowerModel;
use clustercache::games::{
    hedonic_rrh_association, nested_allocate, shapley_values, ClusterInstance, InstanceSpec,
    NestedConfig, ShapleyMethod,
};
use clustercache::simkit::{check_nash_stable, enumerate_partitions};
use proptest::prelude::*;

fn engine(beta: f64) -> EffCapEngine {
    EffCapEngine::new(
        RadioParams::default().with_beta(beta),
        Quantizer::geometric(512, 1e-6, 1e9).unwrap(),
    )
    .unwrap()
}

fn instance(seed: u64, rrhs: usize, contents: usize) -> ClusterInstance {
    let spec = InstanceSpec {
        rrhs,
        users: 2 * rrhs,
        contents,
        cache_size: contents / 2,
        quantizer_intervals: 512,
        ..InstanceSpec::default()
    };
    ClusterInstance::random(&spec, RadioParams::default(), PowerModel::default(), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eff_cap_is_nonnegative_and_decreasing_in_theta(
        beta in 2.5f64..8.0,
        d in 5.0f64..400.0,
        t1 in 1e-3f64..1.0,
        t2 in 1e-3f64..1.0,
    ) {
        let e = engine(beta);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let a = e.eff_cap_user_value(lo, d, 5e-6).unwrap();
        let b = e.eff_cap_user_value(hi, d, 5e-6).unwrap();
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn eff_cap_decreases_with_distance(beta in 2.5f64..8.0, d in 5.0f64..300.0, extra in 1.0f64..200.0) {
        let e = engine(beta);
        let near = e.eff_cap_user_value(0.1, d, 5e-6).unwrap();
        let far = e.eff_cap_user_value(0.1, d + extra, 5e-6).unwrap();
        prop_assert!(far <= near * (1.0 + 1e-12));
    }

    #[test]
    fn outage_is_a_distribution(g1 in 0.0f64..1e4, g2 in 0.0f64..1e4, d in 1.0f64..500.0) {
        let e = engine(4.0);
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let a = e.outage(lo, d, 5e-6).unwrap();
        let b = e.outage(hi, d, 5e-6).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b);
    }

    #[test]
    fn hit_ratio_grows_with_cache(count in 1usize..30, s in 0.0f64..3.0, k in 0usize..30) {
        let catalog = ContentCatalog::zipf(count, s, 1.0).unwrap();
        let k = k.min(count);
        let smaller = hit_ratio(&select_top_k(&catalog, k.saturating_sub(1)).unwrap(), &catalog).unwrap();
        let larger = hit_ratio(&select_top_k(&catalog, k).unwrap(), &catalog).unwrap();
        prop_assert!(smaller <= larger && larger <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hedonic_output_is_a_nash_stable_partition(seed in any::<u64>(), rrhs in 2usize..7, contents in 1usize..4) {
        let inst = instance(seed, rrhs, contents);
        let ctx = inst.table(1).unwrap();
        let all: Vec<usize> = (0..contents).collect();
        let part = hedonic_rrh_association(&all, &ctx, None).unwrap();
        let mut seen = BTreeSet::new();
        for c in &part.coalitions {
            for &r in c {
                prop_assert!(seen.insert(r));
            }
        }
        prop_assert_eq!(seen.len(), rrhs);
        prop_assert!(check_nash_stable(&part, &ctx).stable);
    }

    #[test]
    fn nested_welfare_strictly_increases(seed in any::<u64>(), rrhs in 2usize..6, contents in 1usize..5) {
        let inst = instance(seed, rrhs, contents);
        let alloc = nested_allocate(&inst, None, NestedConfig::default()).unwrap();
        prop_assert!(alloc.log.windows(2).all(|w| w[1].welfare > w[0].welfare));
        let covered: BTreeSet<usize> = alloc.rru.coalitions().iter().flatten().copied().collect();
        prop_assert_eq!(covered.len(), contents);
    }

    #[test]
    fn exact_shapley_is_efficient(seed in any::<u64>(), rrhs in 2usize..7, contents in 1usize..4) {
        let inst = instance(seed, rrhs, contents);
        let table = shapley_values(&inst, ShapleyMethod::Exact, 0).unwrap();
        let ctx = inst.table(contents).unwrap();
        let grand: BTreeSet<usize> = (0..rrhs).collect();
        for c in 0..contents {
            let total: f64 = table.values[c].iter().sum();
            let want = ctx.coalition_eff_cap(&grand, c);
            prop_assert!((total - want).abs() <= 1e-9 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn partition_counts_are_bell_numbers() {
    let bell = [1usize, 1, 2, 5, 15, 52, 203, 877, 4140];
    for (n, &b) in bell.iter().enumerate() {
        let items: Vec<usize> = (0..n).collect();
        let parts: Vec<_> = enumerate_partitions(&items).unwrap().collect();
        assert_eq!(parts.len(), b, "n = {n}");
        let distinct: BTreeSet<_> = parts.iter().cloned().collect();
        assert_eq!(distinct.len(), b);
    }
}
