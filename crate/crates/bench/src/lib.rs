//! Fixtures shared by the benchmarks.

use fedimb::data::{self, SynthConfig};
use fedimb::metrics::LabelDistribution;
use fedimb::rng::{self, Domain};
use fedimb::Dataset;
use rand::Rng;

/// `clients` random label distributions over `classes` classes.
pub fn random_federation(clients: usize, classes: usize, seed: u64) -> Vec<LabelDistribution> {
    let mut rng = rng::stream(seed, Domain::Synth, clients as u64, classes as u64);
    (0..clients)
        .map(|_| {
            let counts = (0..classes).map(|_| rng.random_range(1..1000)).collect();
            LabelDistribution::from_counts(counts).unwrap()
        })
        .collect()
}

pub fn blobs(classes: usize, per_class: usize, dim: usize) -> Dataset {
    data::synth_blobs(&SynthConfig {
        classes,
        per_class,
        dim,
        spread: 0.15,
        seed: 1,
    })
    .unwrap()
}
