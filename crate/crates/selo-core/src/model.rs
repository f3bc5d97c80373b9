//! Fully connected classifier: ReLU hidden layers, softmax output,
//! cross-entropy loss, mini-batch Adam.
//!
//! Labels are `+1` / `-1` and map to class columns 1 / 0, so the positive
//! probability is always column 1 of the softmax output. Training is
//! single-threaded and bitwise deterministic for fixed seeds.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SeloError};

/// Hidden layer widths of the standard classifier.
pub const HIDDEN_DIMS: [usize; 3] = [32, 32, 16];

/// Parameters of the feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layer_dims: Vec<usize>,
    /// One `(fan_in, fan_out)` matrix per layer.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 512,
            epochs: 100,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            shuffle_seed: 0,
        }
    }
}

/// Trained parameters plus the per-epoch mean loss trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MlpParams,
    pub epoch_losses: Vec<f64>,
}

/// Initializes the standard `[input, 32, 32, 16, 2]` network.
pub fn init(input_dim: usize, seed: u64) -> Result<MlpParams> {
    let mut dims = vec![input_dim];
    dims.extend_from_slice(&HIDDEN_DIMS);
    dims.push(2);
    init_with_dims(&dims, seed)
}

/// Initializes a network with explicit layer dimensions. Weights are uniform
/// in `[-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero.
pub fn init_with_dims(dims: &[usize], seed: u64) -> Result<MlpParams> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(SeloError::Argument(format!(
            "bad layer dimensions {dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_in, fan_out), |_| {
            rng.gen_range(-bound..bound)
        }));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(MlpParams {
        layer_dims: dims.to_vec(),
        weights,
        biases,
        seed,
    })
}

impl MlpParams {
    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    fn num_layers(&self) -> usize {
        self.weights.len()
    }
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Post-activation values of every layer, input included.
struct ForwardPass {
    activations: Vec<Array2<f64>>,
    probs: Array2<f64>,
}

fn forward_cached(p: &MlpParams, x: &Array2<f64>) -> Result<ForwardPass> {
    if x.ncols() != p.input_dim() {
        return Err(SeloError::Argument(format!(
            "batch width {} does not match input dim {}",
            x.ncols(),
            p.input_dim()
        )));
    }
    let mut activations = Vec::with_capacity(p.num_layers() + 1);
    activations.push(x.clone());
    for l in 0..p.num_layers() {
        let z = activations[l].dot(&p.weights[l]) + &p.biases[l];
        if l + 1 < p.num_layers() {
            activations.push(z.mapv(|v| v.max(0.0)));
        } else {
            let probs = softmax_rows(&z);
            return Ok(ForwardPass { activations, probs });
        }
    }
    unreachable!("network has at least one layer");
}

/// Class-probability matrix for a batch; each row sums to one.
pub fn forward(p: &MlpParams, x: &Array2<f64>) -> Result<Array2<f64>> {
    Ok(forward_cached(p, x)?.probs)
}

/// Smallest |pre-activation| over all hidden units for a batch.
fn min_hidden_preactivation(p: &MlpParams, x: &Array2<f64>) -> f64 {
    let mut min = f64::INFINITY;
    let mut a = x.clone();
    for l in 0..p.num_layers() - 1 {
        let z = a.dot(&p.weights[l]) + &p.biases[l];
        for v in z.iter() {
            min = min.min(v.abs());
        }
        a = z.mapv(|v| v.max(0.0));
    }
    min
}

/// Probability of the positive class for each row of a batch.
pub fn predict_proba_batch(p: &MlpParams, x: &Array2<f64>) -> Result<Vec<f64>> {
    if p.layer_dims.last() != Some(&2) {
        return Err(SeloError::Argument(format!(
            "positive-class probability needs a binary head, network ends in {:?}",
            p.layer_dims.last()
        )));
    }
    Ok(forward(p, x)?.column(1).to_vec())
}

/// Probability of the positive class for one feature vector.
pub fn predict_proba(p: &MlpParams, features: &[f64]) -> Result<f64> {
    let x = Array2::from_shape_vec((1, features.len()), features.to_vec())
        .map_err(|e| SeloError::Argument(e.to_string()))?;
    Ok(predict_proba_batch(p, &x)?[0])
}

/// Hard label from a positive-class probability.
pub fn hard_label(proba: f64) -> i8 {
    if proba >= 0.5 {
        1
    } else {
        -1
    }
}

struct Gradients {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Mean cross-entropy of a batch and its parameter gradients.
fn loss_and_grads(p: &MlpParams, x: &Array2<f64>, classes: &[usize]) -> Result<(f64, Gradients)> {
    let pass = forward_cached(p, x)?;
    let n = x.nrows() as f64;

    let mut loss = 0.0;
    let mut delta = pass.probs.clone();
    for (row, &class) in classes.iter().enumerate() {
        loss -= pass.probs[(row, class)].max(f64::MIN_POSITIVE).ln();
        delta[(row, class)] -= 1.0;
    }
    loss /= n;
    delta.mapv_inplace(|v| v / n);

    let layers = p.num_layers();
    let mut w_grads = vec![Array2::zeros((0, 0)); layers];
    let mut b_grads = vec![Array1::zeros(0); layers];
    let mut upstream = delta;
    for l in (0..layers).rev() {
        w_grads[l] = pass.activations[l].t().dot(&upstream);
        b_grads[l] = upstream.sum_axis(Axis(0));
        if l > 0 {
            let mut da = upstream.dot(&p.weights[l].t());
            // ReLU derivative through the stored post-activation values
            da.zip_mut_with(&pass.activations[l], |d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            upstream = da;
        }
    }
    Ok((
        loss,
        Gradients {
            weights: w_grads,
            biases: b_grads,
        },
    ))
}

struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    step: u64,
}

impl AdamState {
    fn new(p: &MlpParams) -> Self {
        AdamState {
            m_w: p.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_w: p.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_b: p.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_b: p.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            step: 0,
        }
    }

    fn update(&mut self, p: &mut MlpParams, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.adam_beta1.powi(t);
        let bc2 = 1.0 - cfg.adam_beta2.powi(t);
        for l in 0..p.weights.len() {
            adam_apply(
                p.weights[l].as_slice_mut().unwrap(),
                grads.weights[l].as_slice().unwrap(),
                self.m_w[l].as_slice_mut().unwrap(),
                self.v_w[l].as_slice_mut().unwrap(),
                cfg,
                bc1,
                bc2,
            );
            adam_apply(
                p.biases[l].as_slice_mut().unwrap(),
                grads.biases[l].as_slice().unwrap(),
                self.m_b[l].as_slice_mut().unwrap(),
                self.v_b[l].as_slice_mut().unwrap(),
                cfg,
                bc1,
                bc2,
            );
        }
    }
}

fn adam_apply(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..param.len() {
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

fn classes_from_labels(labels: &[i8]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|&l| match l {
            1 => Ok(1usize),
            -1 => Ok(0usize),
            other => Err(SeloError::Argument(format!(
                "label {other} must be +1 or -1"
            ))),
        })
        .collect()
}

/// Trains by mini-batch Adam on softmax cross-entropy. Samples are shuffled
/// once per epoch from `shuffle_seed`; the final epoch's parameters are
/// returned together with the per-epoch mean loss trace.
pub fn train(
    p: &MlpParams,
    features: &Array2<f64>,
    labels: &[i8],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if features.nrows() == 0 {
        return Err(SeloError::Argument("empty training set".to_string()));
    }
    if features.nrows() != labels.len() {
        return Err(SeloError::Argument(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if cfg.batch_size == 0 {
        return Err(SeloError::Argument("batch size must be positive".to_string()));
    }
    let classes = classes_from_labels(labels)?;

    let mut params = p.clone();
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..features.nrows()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = features.select(Axis(0), chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| classes[i]).collect();
            let (loss, grads) = loss_and_grads(&params, &x, &y)?;
            if !loss.is_finite() {
                return Err(SeloError::Numeric(format!(
                    "non-finite loss at epoch {epoch}"
                )));
            }
            epoch_loss += loss * chunk.len() as f64;
            adam.update(&mut params, &grads, cfg);
        }
        epoch_losses.push(epoch_loss / features.nrows() as f64);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

/// Largest relative disagreement between the analytic gradients and central
/// finite differences (step `1e-5`) over every parameter of a freshly
/// initialized network, on a random batch jittered away from ReLU kinks.
/// Relative errors are floored at `1e-6` so near-zero gradients of inactive
/// units do not register as noise. Diagnostic used by the verification suite.
pub fn gradient_check(dims: &[usize], seed: u64) -> Result<f64> {
    let p = init_with_dims(dims, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(86));
    let batch = 6;
    // resample until every hidden pre-activation sits well away from the
    // ReLU kink, where finite differences are meaningless
    let mut x = Array2::zeros((batch, dims[0]));
    for attempt in 0..200 {
        x = Array2::from_shape_fn((batch, dims[0]), |_| rng.gen_range(-1.0..1.0) + 0.013);
        if min_hidden_preactivation(&p, &x) > 1e-3 {
            break;
        }
        if attempt == 199 {
            return Err(SeloError::Numeric(
                "could not find a batch clear of ReLU kinks".to_string(),
            ));
        }
    }
    let classes: Vec<usize> = (0..batch).map(|i| i % 2).collect();
    let (_, grads) = loss_and_grads(&p, &x, &classes)?;

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut probe = |l: usize, idx: usize, bias: bool, analytic: f64| -> Result<()> {
        let mut plus = p.clone();
        let mut minus = p.clone();
        if bias {
            plus.biases[l][idx] += h;
            minus.biases[l][idx] -= h;
        } else {
            plus.weights[l].as_slice_mut().unwrap()[idx] += h;
            minus.weights[l].as_slice_mut().unwrap()[idx] -= h;
        }
        let lp = loss_and_grads(&plus, &x, &classes)?.0;
        let lm = loss_and_grads(&minus, &x, &classes)?.0;
        let numeric = (lp - lm) / (2.0 * h);
        let denom = numeric.abs().max(analytic.abs()).max(1e-6);
        worst = worst.max((numeric - analytic).abs() / denom);
        Ok(())
    };
    for l in 0..p.weights.len() {
        for idx in 0..p.weights[l].len() {
            probe(l, idx, false, grads.weights[l].as_slice().unwrap()[idx])?;
        }
        for idx in 0..p.biases[l].len() {
            probe(l, idx, true, grads.biases[l][idx])?;
        }
    }
    Ok(worst)
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    layer_dims: Vec<usize>,
    seed: u64,
    config_hash: String,
    blob_len: usize,
}

fn params_blob(p: &MlpParams) -> Vec<u8> {
    let mut blob = Vec::new();
    for l in 0..p.weights.len() {
        for v in p.weights[l].iter() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        for v in p.biases[l].iter() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    blob
}

fn config_hash(dims: &[usize], seed: u64) -> String {
    let mut hasher = Sha256::new();
    for d in dims {
        hasher.update((*d as u64).to_le_bytes());
    }
    hasher.update(seed.to_le_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes a checkpoint: a one-line JSON header followed by the raw
/// little-endian parameter blob. Round-trips bit-exactly.
pub fn save_checkpoint(p: &MlpParams, path: &Path) -> Result<()> {
    let blob = params_blob(p);
    let header = CheckpointHeader {
        layer_dims: p.layer_dims.clone(),
        seed: p.seed,
        config_hash: config_hash(&p.layer_dims, p.seed),
        blob_len: blob.len(),
    };
    let file = File::create(path).map_err(|e| SeloError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(
            out,
            "selo-model-v1 {}",
            serde_json::to_string(&header).expect("header serializes")
        )?;
        out.write_all(&blob)
    };
    write().map_err(|e| SeloError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<MlpParams> {
    let file = File::open(path).map_err(|e| SeloError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    reader
        .read_line(&mut line)
        .map_err(|e| SeloError::io(path, e))?;
    let json = line
        .strip_prefix("selo-model-v1 ")
        .ok_or_else(|| SeloError::Data(format!("{}: not a model checkpoint", path.display())))?;
    let header: CheckpointHeader = serde_json::from_str(json.trim_end())
        .map_err(|e| SeloError::Data(format!("{}: bad header: {e}", path.display())))?;
    if header.config_hash != config_hash(&header.layer_dims, header.seed) {
        return Err(SeloError::Data(format!(
            "{}: header hash mismatch",
            path.display()
        )));
    }
    let mut blob = Vec::new();
    reader
        .read_to_end(&mut blob)
        .map_err(|e| SeloError::io(path, e))?;
    if blob.len() != header.blob_len {
        return Err(SeloError::Data(format!(
            "{}: blob length {} does not match header {}",
            path.display(),
            blob.len(),
            header.blob_len
        )));
    }

    let dims = header.layer_dims;
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    let mut offset = 0usize;
    let mut take = |count: usize| -> Vec<f64> {
        let vals = blob[offset..offset + 8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        offset += 8 * count;
        vals
    };
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        weights.push(
            Array2::from_shape_vec((fan_in, fan_out), take(fan_in * fan_out))
                .expect("shape matches blob layout"),
        );
        biases.push(Array1::from_vec(take(fan_out)));
    }
    Ok(MlpParams {
        layer_dims: dims,
        weights,
        biases,
        seed: header.seed,
    })
}
