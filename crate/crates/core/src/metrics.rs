//! Class-imbalance measures for a single dataset and for a federation of
//! client datasets.
//!
//! Global imbalance is summarized by the majority/minority ratio, the
//! likelihood-ratio imbalance degree (LRID) and its size-normalized form
//! (MID). The mismatch between local and global label distributions is
//! summarized by the mean cosine similarity (MCS) and the sample-weighted
//! cosine similarity (WCS).
//!
//! All quantities use natural logarithms, `0 ln 0 = 0`, double precision and
//! summation in class-index order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-class sample counts of one client or of a whole dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelDistribution {
    counts: Vec<u64>,
}

impl LabelDistribution {
    /// Wrap raw counts. At least two classes are required.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::input(format!(
                "a label distribution needs at least 2 classes, got {}",
                counts.len()
            )));
        }
        Ok(Self { counts })
    }

    /// An all-zero distribution over `classes` classes.
    pub fn empty(classes: usize) -> Result<Self> {
        Self::from_counts(vec![0; classes])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Multiply every count by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        Self {
            counts: self.counts.iter().map(|&c| c * k).collect(),
        }
    }

    fn l1(&self) -> f64 {
        self.total() as f64
    }

    fn l2(&self) -> f64 {
        self.counts
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    }

    fn dot(&self, other: &Self) -> f64 {
        self.counts
            .iter()
            .zip(&other.counts)
            .map(|(&a, &b)| (a as f64) * (b as f64))
            .sum()
    }

    fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::input("label distribution has no samples"))
        } else {
            Ok(())
        }
    }
}

/// The full set of imbalance measures for a partitioned dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Majority/minority ratio of the global distribution; `+inf` when a
    /// class is absent. Serialized as `null` in that case.
    #[serde(with = "gamma_serde")]
    pub gamma: f64,
    pub lrid: f64,
    pub mid: f64,
    pub mcs: f64,
    pub wcs: f64,
}

impl MetricReport {
    /// Global measures of `L = Σ locals` together with MCS and WCS.
    pub fn compute(locals: &[LabelDistribution]) -> Result<Self> {
        let global = global_distribution(locals)?;
        Ok(Self {
            gamma: imbalance_ratio(&global)?,
            lrid: lrid(&global)?,
            mid: mid(&global)?,
            mcs: mcs(locals)?,
            wcs: wcs(locals)?,
        })
    }
}

mod gamma_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Count label occurrences.
pub fn label_distribution(labels: &[usize], classes: usize) -> Result<LabelDistribution> {
    let mut dist = LabelDistribution::empty(classes)?;
    for &label in labels {
        if label >= classes {
            return Err(Error::input(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        dist.counts[label] += 1;
    }
    Ok(dist)
}

/// Largest class count divided by the smallest.
pub fn imbalance_ratio(d: &LabelDistribution) -> Result<f64> {
    d.require_non_empty()?;
    let max = *d.counts.iter().max().expect("at least two classes");
    let min = *d.counts.iter().min().expect("at least two classes");
    if min == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(max as f64 / min as f64)
}

/// Likelihood-ratio imbalance degree, `2 Σ n_c ln(C n_c / N)`.
pub fn lrid(d: &LabelDistribution) -> Result<f64> {
    d.require_non_empty()?;
    let n = d.l1();
    let c = d.classes() as f64;
    let sum: f64 = d
        .counts
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let k = k as f64;
            k * (c * k / n).ln()
        })
        .sum();
    // Rounding can push a perfectly balanced sum a hair below zero.
    Ok((2.0 * sum).max(0.0))
}

/// Multiclass imbalance degree: LRID over its single-class extreme `2 N ln C`.
pub fn mid(d: &LabelDistribution) -> Result<f64> {
    let lrid = lrid(d)?;
    let extreme = 2.0 * d.l1() * (d.classes() as f64).ln();
    Ok((lrid / extreme).clamp(0.0, 1.0))
}

pub fn cosine_similarity(a: &LabelDistribution, b: &LabelDistribution) -> Result<f64> {
    if a.classes() != b.classes() {
        return Err(Error::input(format!(
            "class count mismatch: {} vs {}",
            a.classes(),
            b.classes()
        )));
    }
    a.require_non_empty()?;
    b.require_non_empty()?;
    Ok((a.dot(b) / (a.l2() * b.l2())).min(1.0))
}

/// Elementwise sum of the client distributions.
pub fn global_distribution(locals: &[LabelDistribution]) -> Result<LabelDistribution> {
    let first = locals
        .first()
        .ok_or_else(|| Error::input("no client distributions"))?;
    let mut global = LabelDistribution::empty(first.classes())?;
    for (i, local) in locals.iter().enumerate() {
        if local.classes() != global.classes() {
            return Err(Error::input(format!(
                "client {i} has {} classes, expected {}",
                local.classes(),
                global.classes()
            )));
        }
        for (g, &c) in global.counts.iter_mut().zip(&local.counts) {
            *g += c;
        }
    }
    Ok(global)
}

fn check_locals(locals: &[LabelDistribution]) -> Result<LabelDistribution> {
    let global = global_distribution(locals)?;
    if let Some(i) = locals.iter().position(LabelDistribution::is_empty) {
        return Err(Error::input(format!("client {i} has no samples")));
    }
    Ok(global)
}

/// Unweighted mean over clients of `cos(L, l_i)`.
pub fn mcs(locals: &[LabelDistribution]) -> Result<f64> {
    let global = check_locals(locals)?;
    let mut sum = 0.0;
    for local in locals {
        sum += cosine_similarity(&global, local)?;
    }
    Ok(sum / locals.len() as f64)
}

/// Sample-share weighted sum over clients of `cos(L, l_i)`.
pub fn wcs(locals: &[LabelDistribution]) -> Result<f64> {
    let global = check_locals(locals)?;
    let total = global.l1();
    let mut sum = 0.0;
    for local in locals {
        sum += local.l1() / total * cosine_similarity(&global, local)?;
    }
    Ok(sum.min(1.0))
}
