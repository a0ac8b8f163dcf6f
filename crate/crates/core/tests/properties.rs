use fedimb::data::{self, SynthConfig};
use fedimb::fed::{aggregate, ClientUpdate};
use fedimb::metrics::{self, LabelDistribution};
use fedimb::partition::{build_partition, parse_plan, serialize_plan, ScenarioConfig};
use fedimb::{ModelParams, ModelSpec};
use proptest::prelude::*;

fn counts(classes: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..500, classes)
        .prop_filter("at least one sample", |v| v.iter().any(|&c| c > 0))
}

fn federation() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (2usize..8).prop_flat_map(|c| prop::collection::vec(counts(c), 1..12))
}

fn dists(raw: &[Vec<u64>]) -> Vec<LabelDistribution> {
    raw.iter()
        .map(|c| LabelDistribution::from_counts(c.clone()).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn mid_is_bounded_and_scale_free(c in counts(6), k in 1u64..100) {
        let d = LabelDistribution::from_counts(c).unwrap();
        let mid = metrics::mid(&d).unwrap();
        prop_assert!((0.0..=1.0).contains(&mid));
        prop_assert!((metrics::mid(&d.scaled(k)).unwrap() - mid).abs() < 1e-12);
        let lrid = metrics::lrid(&d).unwrap();
        let scaled = metrics::lrid(&d.scaled(k)).unwrap();
        prop_assert!((scaled - k as f64 * lrid).abs() <= 1e-9 * scaled.max(1.0));
    }

    #[test]
    fn metrics_ignore_class_order(mut c in counts(5), rot in 0usize..5) {
        let d = LabelDistribution::from_counts(c.clone()).unwrap();
        c.rotate_left(rot);
        let r = LabelDistribution::from_counts(c).unwrap();
        prop_assert!((metrics::lrid(&d).unwrap() - metrics::lrid(&r).unwrap()).abs() < 1e-9);
        prop_assert_eq!(metrics::imbalance_ratio(&d).unwrap(), metrics::imbalance_ratio(&r).unwrap());
    }

    #[test]
    fn wcs_between_norm_ratio_and_one(raw in federation()) {
        let locals: Vec<LabelDistribution> =
            dists(&raw).into_iter().filter(|l| !l.is_empty()).collect();
        prop_assume!(!locals.is_empty());
        let global = metrics::global_distribution(&locals).unwrap();
        let g: Vec<f64> = global.counts().iter().map(|&c| c as f64).collect();
        let lower = g.iter().map(|x| x * x).sum::<f64>().sqrt() / g.iter().sum::<f64>();
        let w = metrics::wcs(&locals).unwrap();
        prop_assert!(w >= lower - 1e-12 && w <= 1.0, "wcs {} lower {}", w, lower);
        let m = metrics::mcs(&locals).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn wcs_ignores_client_order(raw in federation()) {
        let mut locals: Vec<LabelDistribution> =
            dists(&raw).into_iter().filter(|l| !l.is_empty()).collect();
        prop_assume!(locals.len() > 1);
        let a = metrics::wcs(&locals).unwrap();
        locals.reverse();
        prop_assert!((metrics::wcs(&locals).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn single_class_clients_hit_the_lower_bound(sizes in prop::collection::vec(1u64..200, 4)) {
        let locals: Vec<LabelDistribution> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut c = vec![0; 4];
                c[i] = n;
                LabelDistribution::from_counts(c).unwrap()
            })
            .collect();
        let g: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        let bound = g.iter().map(|x| x * x).sum::<f64>().sqrt() / g.iter().sum::<f64>();
        prop_assert!((metrics::wcs(&locals).unwrap() - bound).abs() < 1e-12);
    }

    #[test]
    fn aggregation_ignores_update_order(
        deltas in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 6), 1usize..50), 1..6),
    ) {
        let spec = ModelSpec::logistic(2, 2, 0);
        let global = ModelParams::zeros(spec).unwrap();
        let mut updates: Vec<ClientUpdate> = deltas
            .iter()
            .enumerate()
            .map(|(client, (v, n))| ClientUpdate {
                client,
                params: ModelParams::new(spec, v.clone()).unwrap(),
                samples: *n,
                loss: 0.0,
            })
            .collect();
        let a = aggregate(&global, &updates, 1.0).unwrap();
        updates.reverse();
        let b = aggregate(&global, &updates, 1.0).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plans_are_deterministic_and_round_trip(
        scenario in 1u8..=4,
        clients in 2usize..12,
        s in 1usize..=5,
        seed in any::<u64>(),
    ) {
        let synth = SynthConfig { classes: 5, per_class: 60, dim: 3, spread: 0.1, seed: 1 };
        let data = data::synth_blobs(&synth).unwrap();
        let cfg = match scenario {
            1 => ScenarioConfig::balanced(clients, seed),
            2 => ScenarioConfig::global_imbalance(clients, 4.0, seed),
            3 => ScenarioConfig::local_imbalance(clients, s, seed),
            _ => ScenarioConfig::both(clients, 4.0, s, seed),
        };
        let cfg = ScenarioConfig { minority_classes: vec![0, 3], ..cfg };
        let Ok(plan) = build_partition(&data, &cfg) else {
            // Too few clients to cover every class, or too few samples per holder.
            return Ok(());
        };
        let again = build_partition(&data, &cfg).unwrap();
        prop_assert_eq!(&plan, &again);
        let bytes = serialize_plan(&plan).unwrap();
        prop_assert_eq!(&parse_plan(&bytes).unwrap(), &plan);
        let union = plan.union();
        prop_assert!(union.windows(2).all(|w| w[0] < w[1]), "an index is assigned twice");
        if scenario == 1 {
            prop_assert_eq!(union.len(), data.len());
        }
    }
}
