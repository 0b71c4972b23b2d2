//! Minimal feed-forward networks with exact reverse-mode gradients.
//!
//! Parameters live in a single flat vector so that the same values can be
//! updated by Adam and sampled by the cross-entropy method. The flat order is
//! layer-major; within a layer the weight matrix comes first in row-major
//! order (`W[out][in]`), followed by the biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
    /// `bound * tanh(z)`, used for actor outputs.
    ScaledTanh {
        bound: f64,
    },
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
            Activation::ScaledTanh { bound } => bound * z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
            Activation::ScaledTanh { bound } => {
                let t = y / bound;
                bound * (1.0 - t * t)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_size: usize,
    pub output_size: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_size: usize, output_size: usize, activation: Activation) -> Self {
        Self {
            input_size,
            output_size,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.input_size * self.output_size + self.output_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = Self { layers };
        spec.validate()?;
        Ok(spec)
    }

    /// Fully connected chain `input -> hidden... -> output`.
    pub fn mlp(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 2 == sizes.len() {
                    output_activation
                } else {
                    hidden_activation
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect();
        Self::new(layers)
    }

    /// Deterministic policy: tanh hidden layers and a `bound * tanh` output.
    pub fn actor(obs_dim: usize, action_dim: usize, hidden: &[usize], bound: f64) -> Result<Self> {
        Self::mlp(
            obs_dim,
            hidden,
            action_dim,
            Activation::Tanh,
            Activation::ScaledTanh { bound },
        )
    }

    /// Q-function over the concatenation `[observation, action]`.
    pub fn critic(obs_dim: usize, action_dim: usize, hidden: &[usize]) -> Result<Self> {
        Self::mlp(
            obs_dim + action_dim,
            hidden,
            1,
            Activation::Tanh,
            Activation::Linear,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Spec("network needs at least one layer".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.input_size == 0 || layer.output_size == 0 {
                return Err(Error::Spec(format!("layer {i} has a zero dimension")));
            }
            if let Activation::ScaledTanh { bound } = layer.activation {
                if !(bound > 0.0 && bound.is_finite()) {
                    return Err(Error::Spec(format!(
                        "layer {i}: scaled_tanh bound must be positive, got {bound}"
                    )));
                }
            }
        }
        for (i, pair) in self.layers.windows(2).enumerate() {
            if pair[0].output_size != pair[1].input_size {
                return Err(Error::Spec(format!(
                    "layer {} outputs {} values but layer {} expects {}",
                    i,
                    pair[0].output_size,
                    i + 1,
                    pair[1].input_size
                )));
            }
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].input_size
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].output_size
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    fn widest(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.input_size.max(l.output_size))
            .max()
            .unwrap_or(0)
    }
}

/// Network weights and biases as one flat vector plus the shape that reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    spec: NetworkSpec,
}

/// Uniform `±1/sqrt(fan_in)` weights, zero biases.
pub fn init_network(spec: &NetworkSpec, seed: u64) -> Result<ParamVector> {
    spec.validate()?;
    let mut rng = crate::seed::rng(seed);
    let mut values = Vec::with_capacity(spec.param_count());
    for layer in &spec.layers {
        let bound = 1.0 / (layer.input_size as f64).sqrt();
        for _ in 0..layer.input_size * layer.output_size {
            values.push(rng.random_range(-bound..=bound));
        }
        values.extend(std::iter::repeat_n(0.0, layer.output_size));
    }
    Ok(ParamVector {
        values,
        spec: spec.clone(),
    })
}

impl ParamVector {
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            values: vec![0.0; spec.param_count()],
            spec: spec.clone(),
        })
    }

    /// Rebuilds parameters from a flat array in layer-major order.
    pub fn unflatten(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.param_count() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                spec.param_count(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            spec: spec.clone(),
        })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Overwrites the values in place, keeping the network shape.
    pub fn assign(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                self.values.len(),
                values.len()
            )));
        }
        self.values.copy_from_slice(values);
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let width = self.spec.widest();
        let mut cur = Vec::with_capacity(width);
        cur.extend_from_slice(input);
        let mut next = Vec::with_capacity(width);
        let mut offset = 0;
        for layer in &self.spec.layers {
            layer_forward(&self.values[offset..], layer, &cur, &mut next);
            offset += layer.param_count();
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Reverse-mode gradients of `output_grad · f(input)`.
    ///
    /// Returns `(param_grad, input_grad)`. `param_grad` has the flat layout of
    /// the parameter vector.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grad = vec![0.0; self.values.len()];
        let input_grad = self.backward_accumulate(input, output_grad, &mut grad)?;
        Ok((grad, input_grad))
    }

    /// Like [`ParamVector::backward`] but adds the parameter gradient into
    /// `grad_acc`, which lets minibatch losses accumulate without temporaries.
    pub fn backward_accumulate(
        &self,
        input: &[f64],
        output_grad: &[f64],
        grad_acc: &mut [f64],
    ) -> Result<Vec<f64>> {
        self.backward_impl(input, output_grad, Some(grad_acc))
    }

    /// Gradient of `output_grad · f(input)` with respect to the input only.
    pub fn input_gradient(&self, input: &[f64], output_grad: &[f64]) -> Result<Vec<f64>> {
        self.backward_impl(input, output_grad, None)
    }

    fn backward_impl(
        &self,
        input: &[f64],
        output_grad: &[f64],
        mut grad_acc: Option<&mut [f64]>,
    ) -> Result<Vec<f64>> {
        self.check_input(input)?;
        if output_grad.len() != self.spec.output_size() {
            return Err(Error::Input(format!(
                "output gradient has {} entries, network outputs {}",
                output_grad.len(),
                self.spec.output_size()
            )));
        }
        if let Some(acc) = grad_acc.as_deref() {
            if acc.len() != self.values.len() {
                return Err(Error::Input(format!(
                    "gradient buffer has {} entries, network has {} parameters",
                    acc.len(),
                    self.values.len()
                )));
            }
        }

        // activations[0] is the input, activations[l + 1] the output of layer l
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.spec.layers.len() + 1);
        activations.push(input.to_vec());
        let mut offsets = Vec::with_capacity(self.spec.layers.len());
        let mut offset = 0;
        for layer in &self.spec.layers {
            offsets.push(offset);
            let mut out = Vec::with_capacity(layer.output_size);
            layer_forward(
                &self.values[offset..],
                layer,
                activations.last().expect("non-empty"),
                &mut out,
            );
            activations.push(out);
            offset += layer.param_count();
        }

        let mut upstream = output_grad.to_vec();
        for (l, layer) in self.spec.layers.iter().enumerate().rev() {
            let x = &activations[l];
            let y = &activations[l + 1];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(y)
                .map(|(g, &yo)| g * layer.activation.derivative_from_output(yo))
                .collect();
            let base = offsets[l];
            let (n_in, n_out) = (layer.input_size, layer.output_size);
            let weights = &self.values[base..base + n_in * n_out];
            let mut down = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = o * n_in;
                let w_row = &weights[row..row + n_in];
                for (acc, w) in down.iter_mut().zip(w_row) {
                    *acc += w * d;
                }
                if let Some(acc) = grad_acc.as_deref_mut() {
                    let g_row = &mut acc[base + row..base + row + n_in];
                    for (g, xi) in g_row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if let Some(acc) = grad_acc.as_deref_mut() {
                let bias_grad = &mut acc[base + n_in * n_out..base + n_in * n_out + n_out];
                for (b, d) in bias_grad.iter_mut().zip(&delta) {
                    *b += d;
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_size() {
            return Err(Error::Input(format!(
                "network expects {} inputs, got {}",
                self.spec.input_size(),
                input.len()
            )));
        }
        Ok(())
    }
}

fn layer_forward(params: &[f64], layer: &LayerSpec, input: &[f64], out: &mut Vec<f64>) {
    let (n_in, n_out) = (layer.input_size, layer.output_size);
    let weights = &params[..n_in * n_out];
    let biases = &params[n_in * n_out..n_in * n_out + n_out];
    out.clear();
    for o in 0..n_out {
        let row = &weights[o * n_in..(o + 1) * n_in];
        out.push(layer.activation.apply(biases[o] + dot(row, input)));
    }
}

/// Dot product with four independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (a4, b4) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (a4.remainder(), b4.remainder());
    for (x, y) in a4.zip(b4) {
        for k in 0..4 {
            lanes[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// `(1 - tau) * target + tau * source`, componentwise.
pub fn polyak_blend(target: &ParamVector, source: &ParamVector, tau: f64) -> Result<ParamVector> {
    let mut out = target.clone();
    polyak_blend_in_place(&mut out, source, tau)?;
    Ok(out)
}

pub fn polyak_blend_in_place(
    target: &mut ParamVector,
    source: &ParamVector,
    tau: f64,
) -> Result<()> {
    if target.spec != source.spec {
        return Err(Error::Input(
            "polyak blend between different network specs".into(),
        ));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Input(format!("tau must lie in [0, 1], got {tau}")));
    }
    for (t, s) in target.values.iter_mut().zip(&source.values) {
        *t = (1.0 - tau) * *t + tau * s;
    }
    Ok(())
}

/// Moment estimates for bias-corrected Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self::with_betas(len, 0.9, 0.999, 1e-8).expect("default Adam constants are valid")
    }

    pub fn with_betas(len: usize, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if !(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0) {
            return Err(Error::Spec(format!(
                "Adam betas must lie in (0, 1), got {beta1} and {beta2}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Spec(format!(
                "Adam epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
            beta1,
            beta2,
            epsilon,
        })
    }

    pub fn reset(&mut self) {
        self.first_moment.iter_mut().for_each(|m| *m = 0.0);
        self.second_moment.iter_mut().for_each(|v| *v = 0.0);
        self.step_count = 0;
    }

    /// One descent step `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// Gradients containing NaN or infinity are refused and leave both the
    /// parameters and the optimizer state untouched.
    pub fn step(&mut self, params: &mut ParamVector, grads: &[f64], lr: f64) -> Result<()> {
        if grads.len() != params.len() || self.first_moment.len() != params.len() {
            return Err(Error::Input(format!(
                "Adam length mismatch: params {}, grads {}, state {}",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient at index {i}; update refused"
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .values
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(
    params: &ParamVector,
    grads: &[f64],
    state: &AdamState,
    lr: f64,
) -> Result<(ParamVector, AdamState)> {
    let mut p = params.clone();
    let mut s = state.clone();
    s.step(&mut p, grads, lr)?;
    Ok((p, s))
}
