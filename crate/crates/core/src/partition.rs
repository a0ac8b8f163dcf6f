//! Deterministic client partitions for the four class-imbalance scenarios.
//!
//! | scenario | global imbalance | local label mix            |
//! |----------|------------------|----------------------------|
//! | 1        | none             | every client mirrors global |
//! | 2        | minority classes downsampled | every client mirrors global |
//! | 3        | none             | `S` classes per client     |
//! | 4        | minority classes downsampled | `S` classes per client |
//!
//! Randomness comes from child streams of the plan seed: one per class for
//! downsampling, one per class for the order in which its samples are dealt
//! out, and one for the class-selection design (or one per client in random
//! selection mode).

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Fingerprint};
use crate::error::{Error, Result};
use crate::metrics::{label_distribution, LabelDistribution, MetricReport};
use crate::rng::{self, Domain};

pub const PLAN_VERSION: u32 = 1;

/// Classes treated as minority when none are given.
pub const DEFAULT_MINORITY: [usize; 4] = [0, 1, 3, 6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Every class is picked by the same number of clients (`P S / C`, up to
    /// one when that does not divide).
    Balanced,
    /// Each client picks `S` distinct classes independently and uniformly.
    Random,
}

/// Reference size that the imbalance ratio is applied to when shrinking a
/// minority class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownsampleBase {
    /// Keep `⌊(N / C) / Γ⌋` samples: the ratio is taken against the mean class
    /// size, so every minority class ends up the same size.
    MeanClassSize,
    /// Keep `⌊n_c / Γ⌋` samples of each minority class `c`.
    ClassCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: u8,
    pub clients: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_minority")]
    pub minority_classes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_client_classes: Option<usize>,
    #[serde(default = "default_selection")]
    pub selection: Selection,
    #[serde(default = "default_base")]
    pub downsample_base: DownsampleBase,
    pub seed: u64,
}

fn default_minority() -> Vec<usize> {
    DEFAULT_MINORITY.to_vec()
}

fn default_selection() -> Selection {
    Selection::Balanced
}

fn default_base() -> DownsampleBase {
    DownsampleBase::MeanClassSize
}

impl ScenarioConfig {
    /// Scenario 1: balanced globally and locally.
    pub fn balanced(clients: usize, seed: u64) -> Self {
        Self {
            scenario: 1,
            clients,
            gamma: None,
            minority_classes: default_minority(),
            per_client_classes: None,
            selection: Selection::Balanced,
            downsample_base: DownsampleBase::MeanClassSize,
            seed,
        }
    }

    /// Scenario 2: minority classes downsampled by `gamma`.
    pub fn global_imbalance(clients: usize, gamma: f64, seed: u64) -> Self {
        Self {
            scenario: 2,
            gamma: Some(gamma),
            ..Self::balanced(clients, seed)
        }
    }

    /// Scenario 3: `s` classes per client.
    pub fn local_imbalance(clients: usize, s: usize, seed: u64) -> Self {
        Self {
            scenario: 3,
            per_client_classes: Some(s),
            ..Self::balanced(clients, seed)
        }
    }

    /// Scenario 4: downsampling followed by `s` classes per client.
    pub fn both(clients: usize, gamma: f64, s: usize, seed: u64) -> Self {
        Self {
            scenario: 4,
            gamma: Some(gamma),
            per_client_classes: Some(s),
            ..Self::balanced(clients, seed)
        }
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if !(1..=4).contains(&self.scenario) {
            return Err(Error::config(format!(
                "scenario must be 1-4, got {}",
                self.scenario
            )));
        }
        if self.clients == 0 {
            return Err(Error::config("at least one client is required"));
        }
        let downsampled = matches!(self.scenario, 2 | 4);
        let skewed = matches!(self.scenario, 3 | 4);
        match self.gamma {
            None if downsampled => {
                return Err(Error::config(format!(
                    "scenario {} requires gamma",
                    self.scenario
                )))
            }
            Some(g) if !(g >= 1.0 && g.is_finite()) => {
                return Err(Error::config(format!("gamma must be >= 1, got {g}")))
            }
            _ => {}
        }
        match self.per_client_classes {
            None if skewed => {
                return Err(Error::config(format!(
                    "scenario {} requires per_client_classes",
                    self.scenario
                )))
            }
            Some(s) if s == 0 || s > classes => {
                return Err(Error::config(format!(
                    "per_client_classes must be in 1..={classes}, got {s}"
                )))
            }
            _ => {}
        }
        if downsampled {
            if let Some(&bad) = self.minority_classes.iter().find(|&&c| c >= classes) {
                return Err(Error::config(format!(
                    "minority class {bad} out of range for {classes} classes"
                )));
            }
        }
        Ok(())
    }
}

/// A deterministic client → sample assignment with its certified metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionPlan {
    pub version: u32,
    pub dataset: Fingerprint,
    pub config: ScenarioConfig,
    pub assignments: Vec<Vec<usize>>,
    pub metrics: MetricReport,
    pub per_client_counts: Vec<LabelDistribution>,
}

impl PartitionPlan {
    pub fn clients(&self) -> usize {
        self.assignments.len()
    }

    /// Samples held by client `p`.
    pub fn client_size(&self, p: usize) -> usize {
        self.assignments[p].len()
    }

    /// Every assigned index, ascending.
    pub fn union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.assignments.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// Structural checks that need no access to the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.version != PLAN_VERSION {
            return Err(Error::format(format!(
                "plan version {} is not supported (expected {PLAN_VERSION})",
                self.version
            )));
        }
        if self.dataset.sha256.len() != 64
            || !self.dataset.sha256.bytes().all(|b| b.is_ascii_hexdigit())
        {
            return Err(Error::format("dataset fingerprint is missing or malformed"));
        }
        self.config
            .validate(self.dataset.classes)
            .map_err(|e| Error::format(e.to_string()))?;
        if self.assignments.is_empty() {
            return Err(Error::format("plan has no clients"));
        }
        if self.assignments.len() != self.per_client_counts.len() {
            return Err(Error::format(format!(
                "{} assignment lists but {} per-client counts",
                self.assignments.len(),
                self.per_client_counts.len()
            )));
        }
        let mut seen = vec![false; self.dataset.n];
        for (p, (list, counts)) in self
            .assignments
            .iter()
            .zip(&self.per_client_counts)
            .enumerate()
        {
            if list.is_empty() {
                return Err(Error::format(format!("client {p} has no samples")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format(format!(
                    "client {p} indices are not strictly ascending"
                )));
            }
            for &i in list {
                match seen.get_mut(i) {
                    None => {
                        return Err(Error::format(format!(
                            "client {p} index {i} out of range for {} samples",
                            self.dataset.n
                        )))
                    }
                    Some(true) => {
                        return Err(Error::format(format!("index {i} assigned twice")))
                    }
                    Some(slot) => *slot = true,
                }
            }
            if counts.classes() != self.dataset.classes || counts.total() != list.len() as u64 {
                return Err(Error::format(format!(
                    "client {p} counts do not match its {} samples",
                    list.len()
                )));
            }
        }
        let recomputed = MetricReport::compute(&self.per_client_counts)?;
        if !same_report(&recomputed, &self.metrics) {
            return Err(Error::format(
                "stored metrics differ from metrics recomputed from client counts",
            ));
        }
        Ok(())
    }

    /// Confirm that this plan was built from `dataset`.
    pub fn verify_dataset(&self, dataset: &Dataset) -> Result<()> {
        let fp = dataset.fingerprint();
        if fp != self.dataset {
            return Err(Error::Integrity(format!(
                "plan was built for {} (n={}, sha256 {}), dataset is {} (n={}, sha256 {})",
                self.dataset.name, self.dataset.n, self.dataset.sha256, fp.name, fp.n, fp.sha256
            )));
        }
        Ok(())
    }
}

fn same_report(a: &MetricReport, b: &MetricReport) -> bool {
    let same = |x: f64, y: f64| x == y || (x.is_infinite() && y.is_infinite());
    same(a.gamma, b.gamma)
        && same(a.lrid, b.lrid)
        && same(a.mid, b.mid)
        && same(a.mcs, b.mcs)
        && same(a.wcs, b.wcs)
}

/// Shrink each minority class to `1 / gamma` of its reference size by
/// sampling without replacement. Other classes are kept whole. `gamma = 1`
/// keeps everything. Returns ascending dataset indices.
pub fn downsample_minority(
    dataset: &Dataset,
    minority: &[usize],
    gamma: f64,
    base: DownsampleBase,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma must be >= 1, got {gamma}")));
    }
    let classes = dataset.classes();
    let minority: BTreeSet<usize> = minority.iter().copied().collect();
    if let Some(&bad) = minority.iter().find(|&&c| c >= classes) {
        return Err(Error::config(format!(
            "minority class {bad} out of range for {classes} classes"
        )));
    }
    let mean_size = dataset.len() as f64 / classes as f64;
    let mut kept = Vec::with_capacity(dataset.len());
    for c in 0..classes {
        let members = dataset.class_indices(c);
        if !minority.contains(&c) || gamma == 1.0 {
            kept.extend(members);
            continue;
        }
        if members.is_empty() {
            return Err(Error::config(format!(
                "minority class {c} has no samples to downsample"
            )));
        }
        let reference = match base {
            DownsampleBase::MeanClassSize => mean_size,
            DownsampleBase::ClassCount => members.len() as f64,
        };
        let target = ((reference / gamma).floor() as usize).clamp(1, members.len());
        let mut rng = rng::stream(seed, Domain::Downsample, c as u64, 0);
        let picked = index::sample(&mut rng, members.len(), target);
        kept.extend(picked.into_iter().map(|i| members[i]));
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Deal `indices` out to `recipients` (ascending ids) in contiguous chunks;
/// the first `len % k` recipients get one extra sample.
fn deal(indices: &[usize], recipients: &[usize], assignments: &mut [Vec<usize>]) {
    let k = recipients.len();
    let (q, r) = (indices.len() / k, indices.len() % k);
    let mut start = 0;
    for (slot, &p) in recipients.iter().enumerate() {
        let take = q + usize::from(slot < r);
        assignments[p].extend_from_slice(&indices[start..start + take]);
        start += take;
    }
}

/// Indices of class `c` among `pool`, in a seeded random order.
fn shuffled_class(dataset: &Dataset, pool: &[usize], c: usize, seed: u64) -> Vec<usize> {
    let mut members: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| dataset.labels()[i] == c)
        .collect();
    let mut rng = rng::stream(seed, Domain::ClassShuffle, c as u64, 0);
    members.shuffle(&mut rng);
    members
}

/// Seeded balanced class-selection design: client `p` gets `S` distinct
/// classes and class `c` is picked by `⌊P S / C⌋` or `⌈P S / C⌉` clients.
///
/// Starts from a cyclic design (a random class order laid out in runs, slot
/// `j` going to client `j mod P`), then randomizes it with degree-preserving
/// swaps between pairs of clients.
pub fn balanced_selection(clients: usize, classes: usize, s: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if s == 0 || s > classes {
        return Err(Error::config(format!(
            "per_client_classes must be in 1..={classes}, got {s}"
        )));
    }
    if clients * s < classes {
        return Err(Error::config(format!(
            "{clients} clients with {s} classes each cannot cover {classes} classes"
        )));
    }
    let mut rng = rng::stream(seed, Domain::ClassSelection, 0, 0);
    let mut order: Vec<usize> = (0..classes).collect();
    order.shuffle(&mut rng);
    let slots = clients * s;
    let (q, r) = (slots / classes, slots % classes);
    let mut sets = vec![Vec::with_capacity(s); clients];
    let mut j = 0;
    for (rank, &c) in order.iter().enumerate() {
        for _ in 0..q + usize::from(rank < r) {
            sets[j % clients].push(c);
            j += 1;
        }
    }
    if clients > 1 && s < classes {
        for _ in 0..20 * slots {
            let a = rng.random_range(0..clients);
            let b = rng.random_range(0..clients);
            if a == b {
                continue;
            }
            let ia = rng.random_range(0..s);
            let ib = rng.random_range(0..s);
            let (x, y) = (sets[a][ia], sets[b][ib]);
            if x == y || sets[a].contains(&y) || sets[b].contains(&x) {
                continue;
            }
            sets[a][ia] = y;
            sets[b][ib] = x;
        }
    }
    for set in &mut sets {
        set.sort_unstable();
    }
    Ok(sets)
}

/// Each client independently draws `S` distinct classes.
pub fn random_selection(clients: usize, classes: usize, s: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if s == 0 || s > classes {
        return Err(Error::config(format!(
            "per_client_classes must be in 1..={classes}, got {s}"
        )));
    }
    Ok((0..clients)
        .map(|p| {
            let mut rng = rng::stream(seed, Domain::ClassSelection, 1, p as u64);
            let mut set = index::sample(&mut rng, classes, s).into_vec();
            set.sort_unstable();
            set
        })
        .collect())
}

/// Materialize the configured scenario over `dataset`.
pub fn build_partition(dataset: &Dataset, cfg: &ScenarioConfig) -> Result<PartitionPlan> {
    let classes = dataset.classes();
    cfg.validate(classes)?;
    let pool: Vec<usize> = match cfg.scenario {
        2 | 4 => downsample_minority(
            dataset,
            &cfg.minority_classes,
            cfg.gamma.expect("validated"),
            cfg.downsample_base,
            cfg.seed,
        )?,
        _ => (0..dataset.len()).collect(),
    };

    let p = cfg.clients;
    let mut assignments = vec![Vec::new(); p];
    match cfg.scenario {
        1 | 2 => {
            let everyone: Vec<usize> = (0..p).collect();
            for c in 0..classes {
                let members = shuffled_class(dataset, &pool, c, cfg.seed);
                if members.is_empty() {
                    continue;
                }
                if members.len() < p {
                    return Err(Error::config(format!(
                        "class {c} has {} samples, fewer than {p} clients",
                        members.len()
                    )));
                }
                deal(&members, &everyone, &mut assignments);
            }
        }
        _ => {
            let s = cfg.per_client_classes.expect("validated");
            let sets = match cfg.selection {
                Selection::Balanced => balanced_selection(p, classes, s, cfg.seed)?,
                Selection::Random => random_selection(p, classes, s, cfg.seed)?,
            };
            for c in 0..classes {
                let holders: Vec<usize> = (0..p).filter(|&q| sets[q].contains(&c)).collect();
                if holders.is_empty() {
                    continue;
                }
                let members = shuffled_class(dataset, &pool, c, cfg.seed);
                if members.len() < holders.len() {
                    return Err(Error::config(format!(
                        "class {c} has {} samples for {} selecting clients",
                        members.len(),
                        holders.len()
                    )));
                }
                deal(&members, &holders, &mut assignments);
            }
        }
    }

    if let Some(empty) = assignments.iter().position(Vec::is_empty) {
        return Err(Error::config(format!("client {empty} would receive no samples")));
    }
    for list in &mut assignments {
        list.sort_unstable();
    }
    let per_client_counts = client_distributions(dataset, &assignments)?;
    let metrics = MetricReport::compute(&per_client_counts)?;
    Ok(PartitionPlan {
        version: PLAN_VERSION,
        dataset: dataset.fingerprint(),
        config: cfg.clone(),
        assignments,
        metrics,
        per_client_counts,
    })
}

fn client_distributions(dataset: &Dataset, assignments: &[Vec<usize>]) -> Result<Vec<LabelDistribution>> {
    assignments
        .iter()
        .map(|list| {
            let labels: Vec<usize> = list.iter().map(|&i| dataset.labels()[i]).collect();
            label_distribution(&labels, dataset.classes())
        })
        .collect()
}

/// Recompute global and per-client metrics of `plan` from `dataset` labels.
pub fn plan_metrics(plan: &PartitionPlan, dataset: &Dataset) -> Result<MetricReport> {
    plan.verify_dataset(dataset)?;
    if let Some(bad) = plan.assignments.iter().flatten().find(|&&i| i >= dataset.len()) {
        return Err(Error::Integrity(format!("index {bad} out of range")));
    }
    MetricReport::compute(&client_distributions(dataset, &plan.assignments)?)
}

/// Canonical JSON: sorted keys, no insignificant whitespace.
pub fn serialize_plan(plan: &PartitionPlan) -> Result<Vec<u8>> {
    let value = serde_json::to_value(plan).map_err(|e| Error::format(e.to_string()))?;
    serde_json::to_vec(&value).map_err(|e| Error::format(e.to_string()))
}

pub fn parse_plan(bytes: &[u8]) -> Result<PartitionPlan> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::format(format!("plan JSON: {e}")))?;
    match value.get("version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(PLAN_VERSION) => {}
        Some(v) => {
            return Err(Error::format(format!(
                "plan version {v} is not supported (expected {PLAN_VERSION})"
            )))
        }
        None => return Err(Error::format("plan has no version")),
    }
    if value.get("dataset").is_none() {
        return Err(Error::format("plan has no dataset fingerprint"));
    }
    let plan: PartitionPlan =
        serde_json::from_value(value).map_err(|e| Error::format(format!("plan schema: {e}")))?;
    plan.validate()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Features are irrelevant to partitioning; give each class `counts[c]` rows.
    fn labelled(counts: &[usize]) -> Dataset {
        let labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
            .collect();
        let n = labels.len();
        Dataset::new("toy", vec![0.5; n], labels, 1, counts.len()).unwrap()
    }

    #[test]
    fn downsample_keeps_a_tenth() {
        let ds = labelled(&[6000, 6000]);
        let kept = downsample_minority(&ds, &[1], 10.0, DownsampleBase::ClassCount, 3).unwrap();
        let d = label_distribution(
            &kept.iter().map(|&i| ds.labels()[i]).collect::<Vec<_>>(),
            2,
        )
        .unwrap();
        assert_eq!(d.counts(), &[6000, 600]);
        let kept = downsample_minority(&ds, &[1], 10.0, DownsampleBase::MeanClassSize, 3).unwrap();
        assert_eq!(kept.len(), 6600);
    }

    #[test]
    fn downsample_identity_cases() {
        let ds = labelled(&[30, 10, 20]);
        let all: Vec<usize> = (0..60).collect();
        for base in [DownsampleBase::ClassCount, DownsampleBase::MeanClassSize] {
            assert_eq!(downsample_minority(&ds, &[0, 1], 1.0, base, 9).unwrap(), all);
            assert_eq!(downsample_minority(&ds, &[], 7.0, base, 9).unwrap(), all);
        }
    }

    #[test]
    fn downsample_floors_at_one_and_rejects_empty_minority() {
        let ds = labelled(&[5, 3, 0]);
        let kept = downsample_minority(&ds, &[1], 100.0, DownsampleBase::ClassCount, 0).unwrap();
        assert_eq!(kept.len(), 6);
        assert!(matches!(
            downsample_minority(&ds, &[2], 2.0, DownsampleBase::ClassCount, 0),
            Err(Error::Config(_))
        ));
        assert!(downsample_minority(&ds, &[1], 0.5, DownsampleBase::ClassCount, 0).is_err());
    }

    #[test]
    fn deal_gives_remainder_to_low_ids() {
        let mut a = vec![Vec::new(); 4];
        deal(&[10, 11, 12, 13, 14], &[1, 2, 3], &mut a);
        assert_eq!(a, vec![vec![], vec![10, 11], vec![12, 13], vec![14]]);
    }

    #[test]
    fn balanced_design_has_equal_class_degrees() {
        for (p, c, s) in [(100, 10, 1), (100, 10, 2), (100, 10, 5), (10, 10, 3), (7, 10, 4), (3, 3, 3)] {
            let sets = balanced_selection(p, c, s, 11).unwrap();
            let mut degree = vec![0usize; c];
            for set in &sets {
                assert_eq!(set.len(), s);
                assert!(set.windows(2).all(|w| w[0] < w[1]), "duplicate class in {set:?}");
                for &k in set {
                    degree[k] += 1;
                }
            }
            let lo = p * s / c;
            assert!(degree.iter().all(|&d| d == lo || d == lo + 1), "{degree:?}");
            assert_eq!(degree.iter().sum::<usize>(), p * s);
        }
        assert!(matches!(balanced_selection(3, 10, 2, 0), Err(Error::Config(_))));
    }

    #[test]
    fn random_selection_is_per_client_and_distinct() {
        let sets = random_selection(50, 10, 3, 4).unwrap();
        assert!(sets.iter().all(|s| s.len() == 3 && s.windows(2).all(|w| w[0] < w[1])));
        assert_eq!(sets, random_selection(50, 10, 3, 4).unwrap());
    }

    #[test]
    fn single_client_owns_everything() {
        let ds = labelled(&[7, 3, 5]);
        let plan = build_partition(&ds, &ScenarioConfig::balanced(1, 0)).unwrap();
        assert_eq!(plan.assignments, vec![(0..15).collect::<Vec<_>>()]);
        assert_eq!(plan.metrics.wcs, 1.0);
        assert_eq!(plan.metrics.mid, crate::metrics::mid(&ds.label_distribution()).unwrap());
    }

    #[test]
    fn scenario_one_is_exactly_parallel_when_divisible() {
        let ds = labelled(&[40, 40, 40]);
        let plan = build_partition(&ds, &ScenarioConfig::balanced(10, 5)).unwrap();
        assert!(plan.per_client_counts.iter().all(|d| d.counts() == [4, 4, 4]));
        assert!((plan.metrics.wcs - 1.0).abs() < 1e-12);
        assert_eq!(plan.metrics.mid, 0.0);
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let ds = labelled(&[5, 5]);
        assert!(matches!(
            build_partition(&ds, &ScenarioConfig::balanced(6, 0)),
            Err(Error::Config(_))
        ));
        let mut cfg = ScenarioConfig::global_imbalance(2, 2.0, 0);
        cfg.gamma = None;
        assert!(build_partition(&ds, &cfg).is_err());
        cfg.minority_classes = vec![0];
        cfg.gamma = Some(2.0);
        assert!(build_partition(&ds, &cfg).is_ok());
        assert!(build_partition(&ds, &ScenarioConfig::local_imbalance(2, 3, 0)).is_err());
        assert!(build_partition(&ds, &ScenarioConfig::local_imbalance(1, 1, 0)).is_err());
        cfg.scenario = 5;
        assert!(build_partition(&ds, &cfg).is_err());
    }

    #[test]
    fn plan_serialization_is_canonical() {
        let ds = labelled(&[20, 20, 20, 20]);
        let mut cfg = ScenarioConfig::both(8, 4.0, 2, 1);
        cfg.minority_classes = vec![1];
        let plan = build_partition(&ds, &cfg).unwrap();
        let a = serialize_plan(&plan).unwrap();
        let b = serialize_plan(&plan).unwrap();
        assert_eq!(a, b);
        let text = std::str::from_utf8(&a).unwrap();
        assert!(!text.contains(' ') && !text.contains('\n'));
        let keys = ["\"assignments\"", "\"config\"", "\"dataset\"", "\"metrics\"", "\"per_client_counts\"", "\"version\""];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "keys not sorted: {text}");
        assert_eq!(parse_plan(&a).unwrap(), plan);
    }

    fn tamper(plan: &PartitionPlan, f: impl FnOnce(&mut serde_json::Value)) -> Vec<u8> {
        let mut v = serde_json::to_value(plan).unwrap();
        f(&mut v);
        serde_json::to_vec(&v).unwrap()
    }

    #[test]
    fn tampered_plans_are_rejected() {
        let ds = labelled(&[10, 10]);
        let plan = build_partition(&ds, &ScenarioConfig::balanced(2, 0)).unwrap();
        let cases = [
            tamper(&plan, |v| v["assignments"][0][0] = 99.into()),
            tamper(&plan, |v| v["version"] = 2.into()),
            tamper(&plan, |v| {
                v.as_object_mut().unwrap().remove("dataset");
            }),
            tamper(&plan, |v| v["dataset"]["sha256"] = "".into()),
            tamper(&plan, |v| v["metrics"]["wcs"] = 0.5.into()),
            tamper(&plan, |v| v["extra"] = 1.into()),
            tamper(&plan, |v| {
                let first = v["assignments"][0][0].clone();
                v["assignments"][1][0] = first;
            }),
        ];
        for bytes in cases {
            let err = parse_plan(&bytes).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "{err}");
        }
        assert!(parse_plan(b"{").is_err());
    }

    #[test]
    fn plan_metrics_checks_fingerprint() {
        let ds = labelled(&[10, 10]);
        let plan = build_partition(&ds, &ScenarioConfig::balanced(2, 0)).unwrap();
        assert_eq!(plan_metrics(&plan, &ds).unwrap(), plan.metrics);
        let other = labelled(&[10, 11]);
        assert!(matches!(plan_metrics(&plan, &other), Err(Error::Integrity(_))));
    }
}
