//! Softmax classifiers with hand-written backward passes.
//!
//! Parameters live in one flat `f64` vector. Layouts (row-major matrices):
//!
//! - logistic: `W[C][d]`, `b[C]`
//! - mlp: `W1[h][d]`, `b1[h]`, `W2[C][h]`, `b2[C]`, tanh hidden layer
//!
//! The loss is mean softmax cross-entropy evaluated with log-sum-exp.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    /// Ignored for logistic regression.
    #[serde(default)]
    pub hidden_dim: usize,
    pub classes: usize,
    #[serde(default)]
    pub init_seed: u64,
}

impl ModelSpec {
    pub fn logistic(input_dim: usize, classes: usize, init_seed: u64) -> Self {
        Self {
            kind: ModelKind::Logistic,
            input_dim,
            hidden_dim: 0,
            classes,
            init_seed,
        }
    }

    pub fn mlp(input_dim: usize, hidden_dim: usize, classes: usize, init_seed: u64) -> Self {
        Self {
            kind: ModelKind::Mlp,
            input_dim,
            hidden_dim,
            classes,
            init_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("input_dim must be at least 1"));
        }
        if self.classes < 2 {
            return Err(Error::config("a classifier needs at least 2 classes"));
        }
        if self.kind == ModelKind::Mlp && self.hidden_dim == 0 {
            return Err(Error::config("hidden_dim must be at least 1 for an MLP"));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        let (d, h, c) = (self.input_dim, self.hidden_dim, self.classes);
        match self.kind {
            ModelKind::Logistic => d * c + c,
            ModelKind::Mlp => d * h + h + h * c + c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    values: Vec<f64>,
    spec: ModelSpec,
}

impl ModelParams {
    pub fn new(spec: ModelSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.param_count() {
            return Err(Error::input(format!(
                "{} values for a model with {} parameters",
                values.len(),
                spec.param_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("parameter vector has non-finite entries".into()));
        }
        Ok(Self { values, spec })
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        Self::new(spec, vec![0.0; spec.param_count()])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.spec, values)
    }
}

/// A borrowed mini-batch: `labels.len()` rows of width `dim`.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    features: &'a [f32],
    labels: &'a [usize],
    dim: usize,
}

impl<'a> Batch<'a> {
    pub fn new(features: &'a [f32], labels: &'a [usize], dim: usize) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::input(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn row(&self, i: usize) -> &'a [f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

/// Weights uniform in `±1/√fan_in` from the spec's seed, biases zero.
pub fn init_params(spec: &ModelSpec) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = rng::stream(spec.init_seed, Domain::ModelInit, 0, 0);
    let mut uniform = |n: usize, fan_in: usize, out: &mut Vec<f64>| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        out.extend((0..n).map(|_| rng.random_range(-bound..=bound)));
    };
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.classes);
    let mut values = Vec::with_capacity(spec.param_count());
    match spec.kind {
        ModelKind::Logistic => {
            uniform(c * d, d, &mut values);
            values.extend(std::iter::repeat_n(0.0, c));
        }
        ModelKind::Mlp => {
            uniform(h * d, d, &mut values);
            values.extend(std::iter::repeat_n(0.0, h));
            uniform(c * h, h, &mut values);
            values.extend(std::iter::repeat_n(0.0, c));
        }
    }
    ModelParams::new(*spec, values)
}

fn check_batch(params: &ModelParams, batch: &Batch<'_>) -> Result<()> {
    let spec = params.spec();
    if batch.is_empty() {
        return Err(Error::input("empty batch"));
    }
    if batch.dim != spec.input_dim {
        return Err(Error::input(format!(
            "batch has {} features, model expects {}",
            batch.dim, spec.input_dim
        )));
    }
    if let Some(&bad) = batch.labels.iter().find(|&&l| l >= spec.classes) {
        return Err(Error::input(format!(
            "label {bad} out of range for {} classes",
            spec.classes
        )));
    }
    Ok(())
}

/// `out = bias + W x` for a row-major `W[rows][x.len()]`.
fn affine<X: Copy + Into<f64>>(w: &[f64], bias: &[f64], x: &[X], out: &mut [f64]) {
    let cols = x.len();
    for (k, o) in out.iter_mut().enumerate() {
        let row = &w[k * cols..(k + 1) * cols];
        let mut acc = bias[k];
        for (wk, &xv) in row.iter().zip(x) {
            acc += wk * xv.into();
        }
        *o = acc;
    }
}

/// Overwrite `logits` with softmax probabilities; returns log-sum-exp.
fn softmax_in_place(logits: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
    max + sum.ln()
}

struct Workspace {
    hidden: Vec<f64>,
    logits: Vec<f64>,
    back: Vec<f64>,
}

impl Workspace {
    fn new(spec: &ModelSpec) -> Self {
        Self {
            hidden: vec![0.0; spec.hidden_dim],
            logits: vec![0.0; spec.classes],
            back: vec![0.0; spec.hidden_dim],
        }
    }
}

/// Forward pass for one row; leaves raw logits in `ws.logits`.
fn forward(params: &ModelParams, x: &[f32], ws: &mut Workspace) {
    let spec = params.spec();
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.classes);
    let v = params.values();
    match spec.kind {
        ModelKind::Logistic => affine(&v[..c * d], &v[c * d..], x, &mut ws.logits),
        ModelKind::Mlp => {
            let (w1, rest) = v.split_at(h * d);
            let (b1, rest) = rest.split_at(h);
            let (w2, b2) = rest.split_at(c * h);
            affine(w1, b1, x, &mut ws.hidden);
            for a in ws.hidden.iter_mut() {
                *a = a.tanh();
            }
            affine(w2, b2, &ws.hidden, &mut ws.logits);
        }
    }
}

/// Mean loss and, when `grad` is given, its exact gradient.
fn loss_and_grad(params: &ModelParams, batch: &Batch<'_>, mut grad: Option<&mut [f64]>) -> Result<f64> {
    check_batch(params, batch)?;
    let spec = *params.spec();
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.classes);
    let scale = 1.0 / batch.len() as f64;
    let mut ws = Workspace::new(&spec);
    let mut total = 0.0;
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    for i in 0..batch.len() {
        let x = batch.row(i);
        let y = batch.labels[i];
        forward(params, x, &mut ws);
        let true_logit = ws.logits[y];
        let lse = softmax_in_place(&mut ws.logits);
        total += lse - true_logit;

        let Some(g) = grad.as_deref_mut() else {
            continue;
        };
        // ws.logits now holds probabilities; turn them into dL/dlogits.
        ws.logits[y] -= 1.0;
        for p in ws.logits.iter_mut() {
            *p *= scale;
        }
        match spec.kind {
            ModelKind::Logistic => {
                let (gw, gb) = g.split_at_mut(c * d);
                for (k, &delta) in ws.logits.iter().enumerate() {
                    gb[k] += delta;
                    for (gw_kj, &xj) in gw[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *gw_kj += delta * f64::from(xj);
                    }
                }
            }
            ModelKind::Mlp => {
                let w2 = &params.values()[h * d + h..h * d + h + c * h];
                let (gw1, rest) = g.split_at_mut(h * d);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(c * h);
                ws.back.fill(0.0);
                for (k, &delta) in ws.logits.iter().enumerate() {
                    gb2[k] += delta;
                    let row = k * h..(k + 1) * h;
                    for ((gw, &a), (&w, back)) in gw2[row.clone()]
                        .iter_mut()
                        .zip(&ws.hidden)
                        .zip(w2[row].iter().zip(ws.back.iter_mut()))
                    {
                        *gw += delta * a;
                        *back += delta * w;
                    }
                }
                for (j, (&a, &back)) in ws.hidden.iter().zip(&ws.back).enumerate() {
                    let dz = back * (1.0 - a * a);
                    gb1[j] += dz;
                    for (gw, &xk) in gw1[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *gw += dz * f64::from(xk);
                    }
                }
            }
        }
    }
    Ok(total * scale)
}

/// Mean softmax cross-entropy over the batch.
pub fn loss(params: &ModelParams, batch: &Batch<'_>) -> Result<f64> {
    loss_and_grad(params, batch, None)
}

/// Analytic gradient of [`loss`].
pub fn gradient(params: &ModelParams, batch: &Batch<'_>) -> Result<Vec<f64>> {
    let mut g = vec![0.0; params.values().len()];
    loss_and_grad(params, batch, Some(&mut g))?;
    Ok(g)
}

/// Loss and gradient from a single pass.
pub fn loss_with_gradient(params: &ModelParams, batch: &Batch<'_>) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; params.values().len()];
    let l = loss_and_grad(params, batch, Some(&mut g))?;
    Ok((l, g))
}

/// Central differences `(f(x + εe_i) − f(x − εe_i)) / 2ε` for every coordinate.
pub fn central_difference<F>(f: F, point: &[f64], epsilon: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::input("epsilon must be positive"));
    }
    let mut x = point.to_vec();
    let mut out = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        x[i] = point[i] + epsilon;
        let plus = f(&x)?;
        x[i] = point[i] - epsilon;
        let minus = f(&x)?;
        x[i] = point[i];
        out.push((plus - minus) / (2.0 * epsilon));
    }
    Ok(out)
}

/// Finite-difference estimate of [`gradient`], evaluated through [`loss`] only.
pub fn finite_diff_gradient(params: &ModelParams, batch: &Batch<'_>, epsilon: f64) -> Result<Vec<f64>> {
    check_batch(params, batch)?;
    let spec = *params.spec();
    central_difference(
        |v| {
            let p = ModelParams {
                values: v.to_vec(),
                spec,
            };
            loss(&p, batch)
        },
        params.values(),
        epsilon,
    )
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`, or 0 when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// `values − lr · grad`.
pub fn sgd_step(params: &ModelParams, grad: &[f64], lr: f64) -> Result<ModelParams> {
    if grad.len() != params.values().len() {
        return Err(Error::input(format!(
            "gradient has {} entries, model has {}",
            grad.len(),
            params.values().len()
        )));
    }
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::input(format!("learning rate must be >= 0, got {lr}")));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("gradient has non-finite entries".into()));
    }
    let values = params
        .values()
        .iter()
        .zip(grad)
        .map(|(w, g)| w - lr * g)
        .collect();
    params.with_values(values)
}

/// Raw logits for every row of `features`.
pub fn logits(params: &ModelParams, features: &[f32]) -> Result<Vec<Vec<f64>>> {
    let spec = params.spec();
    if !features.len().is_multiple_of(spec.input_dim) {
        return Err(Error::input(format!(
            "{} feature values are not rows of width {}",
            features.len(),
            spec.input_dim
        )));
    }
    let mut ws = Workspace::new(spec);
    Ok(features
        .chunks(spec.input_dim)
        .map(|x| {
            forward(params, x, &mut ws);
            ws.logits.clone()
        })
        .collect())
}

/// Argmax class per row; ties go to the lowest class index.
pub fn predict(params: &ModelParams, features: &[f32]) -> Result<Vec<usize>> {
    Ok(logits(params, features)?
        .into_iter()
        .map(|z| {
            let mut best = 0;
            for (k, &v) in z.iter().enumerate().skip(1) {
                if v > z[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FIMBCKPT";
const CHECKPOINT_VERSION: u32 = 1;

/// Binary checkpoint: magic, version, spec, then values as little-endian f64.
pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = params.spec();
    let mut buf = Vec::with_capacity(64 + 8 * params.values().len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend(CHECKPOINT_VERSION.to_le_bytes());
    buf.push(match spec.kind {
        ModelKind::Logistic => 0,
        ModelKind::Mlp => 1,
    });
    for v in [
        spec.input_dim as u64,
        spec.hidden_dim as u64,
        spec.classes as u64,
        spec.init_seed,
        params.values().len() as u64,
    ] {
        buf.extend(v.to_le_bytes());
    }
    for v in params.values() {
        buf.extend(v.to_le_bytes());
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = 8 + 4 + 1 + 5 * 8;
    if bytes.len() < header || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::format(format!("{}: not a checkpoint", path.display())));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(format!("checkpoint version {version} unsupported")));
    }
    let kind = match bytes[12] {
        0 => ModelKind::Logistic,
        1 => ModelKind::Mlp,
        k => return Err(Error::format(format!("unknown model kind {k}"))),
    };
    let spec = ModelSpec {
        kind,
        input_dim: u64_at(13) as usize,
        hidden_dim: u64_at(21) as usize,
        classes: u64_at(29) as usize,
        init_seed: u64_at(37),
    };
    let count = u64_at(45) as usize;
    if bytes.len() != header + 8 * count {
        return Err(Error::format(format!(
            "{}: expected {count} values",
            path.display()
        )));
    }
    let values = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ModelParams::new(spec, values).map_err(|e| Error::format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity() {
        assert_eq!(ModelSpec::mlp(4, 3, 2, 0).param_count(), 23);
        assert_eq!(ModelSpec::logistic(4, 3, 0).param_count(), 15);
        assert!(init_params(&ModelSpec::mlp(4, 0, 2, 0)).is_err());
        assert!(init_params(&ModelSpec::logistic(4, 1, 0)).is_err());
    }

    #[test]
    fn init_is_seeded_with_zero_bias() {
        let spec = ModelSpec::logistic(5, 3, 17);
        let a = init_params(&spec).unwrap();
        assert_eq!(a, init_params(&spec).unwrap());
        assert!(a.values()[15..].iter().all(|&b| b == 0.0));
        let bound = 1.0 / 5f64.sqrt();
        assert!(a.values()[..15].iter().all(|w| w.abs() <= bound));
        assert!(a.values()[..15].iter().any(|&w| w != 0.0));

        let m = init_params(&ModelSpec::mlp(4, 3, 2, 1)).unwrap();
        let v = m.values();
        assert!(v[12..15].iter().all(|&b| b == 0.0));
        assert!(v[21..23].iter().all(|&b| b == 0.0));
        assert!(v[15..21].iter().all(|w| w.abs() <= 1.0 / 3f64.sqrt()));
    }

    #[test]
    fn zero_model_loss_is_ln_c() {
        let params = ModelParams::zeros(ModelSpec::logistic(3, 10, 0)).unwrap();
        let x = [0.1f32, 0.7, 0.3, 0.9, 0.0, 0.5];
        let batch = Batch::new(&x, &[4, 9], 3).unwrap();
        assert!((loss(&params, &batch).unwrap() - 10f64.ln()).abs() < 1e-15);
        assert_eq!(predict(&params, &x).unwrap(), vec![0, 0]);
    }

    #[test]
    fn hand_computed_two_class_loss() {
        // logits: z0 = 0.5 + 1*0.5 - 2*0.25 = 0.5, z1 = -0.25 + 3*0.5 + 0.5*0.25 = 1.375
        let spec = ModelSpec::logistic(2, 2, 0);
        let params = ModelParams::new(spec, vec![1.0, -2.0, 3.0, 0.5, 0.5, -0.25]).unwrap();
        let x = [0.5f32, 0.25];
        let batch = Batch::new(&x, &[0], 2).unwrap();
        let expected = (0.5f64.exp() + 1.375f64.exp()).ln() - 0.5;
        assert!((loss(&params, &batch).unwrap() - expected).abs() < 1e-12);
        assert_eq!(predict(&params, &x).unwrap(), vec![1]);
    }

    #[test]
    fn large_margin_drives_loss_to_zero() {
        let spec = ModelSpec::logistic(1, 2, 0);
        let x = [1.0f32];
        let batch = Batch::new(&x, &[1], 1).unwrap();
        let mut last = f64::INFINITY;
        for m in [1.0, 3.0, 10.0, 100.0, 1000.0] {
            let params = ModelParams::new(spec, vec![-m, m, 0.0, 0.0]).unwrap();
            let l = loss(&params, &batch).unwrap();
            assert!(l.is_finite() && l >= 0.0 && l <= last);
            last = l;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = [0.2f32, 0.9, 0.4, 0.1, 0.6, 0.3, 0.8, 0.5, 0.7];
        let y = [2, 0, 1];
        let batch = Batch::new(&x, &y, 3).unwrap();
        for spec in [ModelSpec::logistic(3, 3, 5), ModelSpec::mlp(3, 4, 3, 5)] {
            let params = init_params(&spec).unwrap();
            let g = gradient(&params, &batch).unwrap();
            let fd = finite_diff_gradient(&params, &batch, 1e-5).unwrap();
            assert!(relative_error(&g, &fd) < 1e-7, "{:?}", spec.kind);
        }
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let x = [0.2f32, 0.9, 0.4, 0.1];
        let xx = [0.2f32, 0.9, 0.4, 0.1, 0.2, 0.9, 0.4, 0.1];
        let params = init_params(&ModelSpec::mlp(2, 3, 2, 9)).unwrap();
        let g1 = gradient(&params, &Batch::new(&x, &[0, 1], 2).unwrap()).unwrap();
        let g2 = gradient(&params, &Batch::new(&xx, &[0, 1, 0, 1], 2).unwrap()).unwrap();
        assert!(relative_error(&g1, &g2) < 1e-14);
    }

    #[test]
    fn central_difference_calibration() {
        let f = |v: &[f64]| Ok(v.iter().map(|x| x * x).sum());
        let point = [1.5, -2.0, 0.25];
        let g = central_difference(f, &point, 1e-4).unwrap();
        for (gi, xi) in g.iter().zip(point) {
            assert!((gi - 2.0 * xi).abs() < 1e-8);
        }
        assert!(central_difference(f, &point, 0.0).is_err());
    }

    #[test]
    fn finite_difference_error_is_second_order() {
        // sin has a non-vanishing third derivative, so the truncation error
        // of the central difference shrinks by 4 when epsilon halves.
        let f = |v: &[f64]| Ok(v[0].sin());
        let exact = 0.7f64.cos();
        let e1 = (central_difference(f, &[0.7], 1e-2).unwrap()[0] - exact).abs();
        let e2 = (central_difference(f, &[0.7], 5e-3).unwrap()[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn empty_batch_and_dim_mismatch() {
        let params = ModelParams::zeros(ModelSpec::logistic(2, 2, 0)).unwrap();
        let empty = Batch::new(&[], &[], 2).unwrap();
        assert!(matches!(finite_diff_gradient(&params, &empty, 1e-5), Err(Error::Input(_))));
        assert!(loss(&params, &empty).is_err());
        let wide = Batch::new(&[0.0; 3], &[0], 3).unwrap();
        assert!(matches!(gradient(&params, &wide), Err(Error::Input(_))));
        assert!(predict(&params, &[0.0; 3]).is_err());
        assert!(Batch::new(&[0.0; 3], &[0], 2).is_err());
    }

    #[test]
    fn sgd_step_cases() {
        let spec = ModelSpec::logistic(1, 2, 0);
        let params = ModelParams::new(spec, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let grad = [1.0, -1.0, 0.0, 0.0];
        let stepped = sgd_step(&params, &grad, 0.1).unwrap();
        assert_eq!(stepped.values(), &[0.9, 1.1, 0.0, 0.0]);
        assert_eq!(sgd_step(&params, &grad, 0.0).unwrap(), params);
        assert!(matches!(
            sgd_step(&params, &[f64::NAN, 0.0, 0.0, 0.0], 0.1),
            Err(Error::Numeric(_))
        ));
        assert!(sgd_step(&params, &grad[..2], 0.1).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let params = init_params(&ModelSpec::mlp(3, 2, 4, 8)).unwrap();
        save_checkpoint(&params, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), params);
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format(_))));
    }
}
