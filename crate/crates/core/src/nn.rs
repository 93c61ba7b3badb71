//! Minimal dense feed-forward engine: forward pass, reverse-mode gradients
//! for the fixed MLP graph, Adam updates, and finite-difference checking.
//!
//! All arithmetic is 64-bit. Batch gradient accumulation fans out over
//! fixed-size chunks and reduces them in index order, so results are
//! bit-identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Classifier probabilities are kept strictly inside (0, 1) so downstream
/// log terms are always finite.
pub const SCORE_CLAMP: (f64, f64) = (1e-7, 1.0 - 1e-7);

const GRAD_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Sigmoid output in (0, 1): the qualification gate.
    Classifier,
    /// Identity output: log-price prediction.
    Regressor,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Classifier => "classifier",
            Role::Regressor => "regressor",
        }
    }
}

/// Dense MLP with ReLU hidden layers and a single output unit whose
/// activation is fixed by `role`.
///
/// `weights[l]` is row-major `dims[l+1] x dims[l]`; `biases[l]` has length
/// `dims[l+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub role: Role,
}

/// Post-activation values per layer, `activations[0]` being the input.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.activations.last().expect("nonempty cache")[0]
    }
}

/// Per-layer weight and bias gradients, shape-congruent with a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl MlpModel {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases,
    /// bit-deterministic per seed.
    pub fn init(layer_dims: &[usize], role: Role, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::BadDims("need at least input and output dims".into()));
        }
        if layer_dims.contains(&0) {
            return Err(Error::BadDims("layer dims must be positive".into()));
        }
        if *layer_dims.last().unwrap() != 1 {
            return Err(Error::BadDims(format!(
                "output dim must be 1, got {}",
                layer_dims.last().unwrap()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(layer_dims.len() - 1);
        let mut biases = Vec::with_capacity(layer_dims.len() - 1);
        for l in 0..layer_dims.len() - 1 {
            let fan_in = layer_dims[l];
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * layer_dims[l + 1])
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; layer_dims[l + 1]]);
        }
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            role,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Affine + activation composition; returns the scalar output and the
    /// cache needed by [`MlpModel::backward`].
    pub fn forward(&self, x: &[f64]) -> Result<(f64, ForwardCache)> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let n_layers = self.n_layers();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(x.to_vec());
        for l in 0..n_layers {
            let in_dim = self.layer_dims[l];
            let out_dim = self.layer_dims[l + 1];
            let prev = &activations[l];
            let mut out = Vec::with_capacity(out_dim);
            for j in 0..out_dim {
                let row = &self.weights[l][j * in_dim..(j + 1) * in_dim];
                let z = self.biases[l][j]
                    + row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                let a = if l + 1 < n_layers {
                    z.max(0.0)
                } else {
                    match self.role {
                        Role::Classifier => sigmoid(z).clamp(SCORE_CLAMP.0, SCORE_CLAMP.1),
                        Role::Regressor => z,
                    }
                };
                out.push(a);
            }
            activations.push(out);
        }
        let cache = ForwardCache { activations };
        Ok((cache.output(), cache))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.forward(x).map(|(out, _)| out)
    }

    /// Exact gradients of a scalar loss with respect to every parameter,
    /// given d(loss)/d(output) at the model's (post-activation) output.
    pub fn backward(&self, cache: &ForwardCache, d_output: f64) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(cache, d_output, &mut grads)?;
        Ok(grads)
    }

    /// Accumulating variant used for mini-batch sums.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        d_output: f64,
        grads: &mut Gradients,
    ) -> Result<()> {
        let n_layers = self.n_layers();
        if cache.activations.len() != n_layers + 1
            || cache
                .activations
                .iter()
                .zip(&self.layer_dims)
                .any(|(a, &d)| a.len() != d)
        {
            return Err(Error::StaleCache);
        }
        // Through the output activation.
        let out = cache.output();
        let mut delta = match self.role {
            Role::Classifier => vec![d_output * out * (1.0 - out)],
            Role::Regressor => vec![d_output],
        };
        for l in (0..n_layers).rev() {
            let in_dim = self.layer_dims[l];
            let prev = &cache.activations[l];
            for (j, &dz) in delta.iter().enumerate() {
                let wrow = &mut grads.weights[l][j * in_dim..(j + 1) * in_dim];
                for (g, a) in wrow.iter_mut().zip(prev) {
                    *g += dz * a;
                }
                grads.biases[l][j] += dz;
            }
            if l == 0 {
                break;
            }
            // ReLU mask: post-activation > 0 iff pre-activation > 0.
            let mut prev_delta = vec![0.0; in_dim];
            for (j, &dz) in delta.iter().enumerate() {
                let wrow = &self.weights[l][j * in_dim..(j + 1) * in_dim];
                for (pd, w) in prev_delta.iter_mut().zip(wrow) {
                    *pd += dz * w;
                }
            }
            for (pd, a) in prev_delta.iter_mut().zip(prev) {
                if *a <= 0.0 {
                    *pd = 0.0;
                }
            }
            delta = prev_delta;
        }
        Ok(())
    }

    /// Parallel forward over many rows; outputs (and caches) in row order.
    pub fn batch_forward(&self, rows: &[&[f64]]) -> Result<(Vec<f64>, Vec<ForwardCache>)> {
        let results: Vec<(f64, ForwardCache)> = rows
            .par_iter()
            .map(|row| self.forward(row))
            .collect::<Result<Vec<_>>>()?;
        Ok(results.into_iter().unzip())
    }

    /// Parallel forward when caches are not needed.
    pub fn batch_outputs(&self, rows: &[&[f64]]) -> Result<Vec<f64>> {
        rows.par_iter().map(|row| self.predict(row)).collect()
    }

    /// Summed parameter gradients over a batch given per-sample output
    /// gradients. Chunked in fixed order for bit determinism.
    pub fn batch_gradients(
        &self,
        caches: &[ForwardCache],
        d_outputs: &[f64],
    ) -> Result<Gradients> {
        if caches.len() != d_outputs.len() {
            return Err(Error::DimensionMismatch {
                context: "batch gradients",
                expected: caches.len(),
                got: d_outputs.len(),
            });
        }
        let chunk_grads: Vec<Gradients> = caches
            .par_chunks(GRAD_CHUNK)
            .zip(d_outputs.par_chunks(GRAD_CHUNK))
            .map(|(cc, dd)| {
                let mut acc = Gradients::zeros_like(self);
                for (cache, &d) in cc.iter().zip(dd) {
                    self.backward_into(cache, d, &mut acc)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = Gradients::zeros_like(self);
        for g in &chunk_grads {
            total.add_assign(g);
        }
        Ok(total)
    }
}

/// Bias-corrected Adam state for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Gradients,
    pub v: Gradients,
}

impl AdamState {
    pub fn new(model: &MlpModel, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    /// One update: m,v moment tracking, bias correction, then
    /// theta -= lr * m_hat / (sqrt(v_hat) + eps).
    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        let layers = model.weights.len();
        if grads.weights.len() != layers || grads.biases.len() != layers {
            return Err(Error::ShapeMismatch(layers));
        }
        for l in 0..layers {
            if grads.weights[l].len() != model.weights[l].len()
                || grads.biases[l].len() != model.biases[l].len()
            {
                return Err(Error::ShapeMismatch(l));
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let update = |theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..theta.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                theta[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        };
        for l in 0..layers {
            update(
                &mut model.weights[l],
                &grads.weights[l],
                &mut self.m.weights[l],
                &mut self.v.weights[l],
            );
            update(
                &mut model.biases[l],
                &grads.biases[l],
                &mut self.m.biases[l],
                &mut self.v.biases[l],
            );
        }
        Ok(())
    }
}

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub n_params: usize,
    pub passed: bool,
}

/// Compare [`MlpModel::backward`] against central finite differences
/// (h = 1e-5) of `loss_fn` composed with the forward pass. `loss_fn` maps
/// the model output to (loss, d_loss/d_output).
pub fn grad_check<F>(model: &MlpModel, loss_fn: F, x: &[f64], tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(f64) -> (f64, f64),
{
    const H: f64 = 1e-5;
    let (out, cache) = model.forward(x)?;
    let (_, d_out) = loss_fn(out);
    let analytic = model.backward(&cache, d_out)?;

    let mut probe = model.clone();
    let mut max_rel_error: f64 = 0.0;
    let mut n_params = 0;
    let layers = model.weights.len();
    for l in 0..layers {
        for is_bias in [false, true] {
            let len = if is_bias {
                model.biases[l].len()
            } else {
                model.weights[l].len()
            };
            for i in 0..len {
                let original = if is_bias {
                    probe.biases[l][i]
                } else {
                    probe.weights[l][i]
                };
                let mut eval_at = |value: f64| -> Result<f64> {
                    if is_bias {
                        probe.biases[l][i] = value;
                    } else {
                        probe.weights[l][i] = value;
                    }
                    let out = probe.predict(x)?;
                    Ok(loss_fn(out).0)
                };
                let plus = eval_at(original + H)?;
                let minus = eval_at(original - H)?;
                if is_bias {
                    probe.biases[l][i] = original;
                } else {
                    probe.weights[l][i] = original;
                }
                let numeric = (plus - minus) / (2.0 * H);
                let a = if is_bias {
                    analytic.biases[l][i]
                } else {
                    analytic.weights[l][i]
                };
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
                max_rel_error = max_rel_error.max(rel);
                n_params += 1;
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_error,
        n_params,
        passed: max_rel_error < tolerance,
    })
}
