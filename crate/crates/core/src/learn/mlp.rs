//! Dense feed-forward network with hand-written reverse mode.
//!
//! Parameters live in one flat buffer: for every layer, the `outputs x inputs`
//! weight matrix (row-major) followed by the bias vector. Gradients and
//! optimizer state share that layout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GragError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and output `a`.
    #[inline]
    fn derivative<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - a * a,
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl LayerShape {
    fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    fn param_len(&self) -> usize {
        self.weight_len() + self.outputs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    shapes: Vec<LayerShape>,
    offsets: Vec<usize>,
    params: Vec<T>,
}

/// Per-layer values kept by [`Mlp::forward_cached`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        self.activations.last().expect("at least one layer")
    }
}

/// Result of [`Mlp::eval_with_loss`].
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub outputs: Vec<T>,
    pub loss: T,
    pub gradients: Vec<T>,
}

fn offsets_for(shapes: &[LayerShape]) -> Vec<usize> {
    let mut acc = 0;
    shapes
        .iter()
        .map(|s| {
            let o = acc;
            acc += s.param_len();
            o
        })
        .collect()
}

fn chain_shapes(sizes: &[usize], hidden: Activation) -> Result<Vec<LayerShape>> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(GragError::InvalidConfig(format!("bad layer sizes {sizes:?}")));
    }
    let last = sizes.len() - 2;
    Ok(sizes
        .windows(2)
        .enumerate()
        .map(|(l, w)| LayerShape {
            inputs: w[0],
            outputs: w[1],
            activation: if l == last { Activation::Identity } else { hidden },
        })
        .collect())
}

impl<T: Scalar> Mlp<T> {
    /// Uniform fan-in initialization (He scaling for ReLU layers), zero biases,
    /// linear output layer.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden)?;
        for l in 0..net.shapes.len() {
            let shape = net.shapes[l];
            let gain = if shape.activation == Activation::Relu { 6.0 } else { 3.0 };
            let bound = (gain / shape.inputs as f64).sqrt();
            let off = net.offsets[l];
            for w in &mut net.params[off..off + shape.weight_len()] {
                *w = T::lit(rng.gen_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self> {
        let shapes = chain_shapes(sizes, hidden)?;
        let offsets = offsets_for(&shapes);
        let total = shapes.iter().map(LayerShape::param_len).sum();
        Ok(Self { shapes, offsets, params: vec![T::zero(); total] })
    }

    /// Assembles a network from per-layer weights and biases.
    pub fn from_layers(layers: Vec<(LayerShape, Vec<T>, Vec<T>)>) -> Result<Self> {
        if layers.is_empty() {
            return Err(GragError::InvalidConfig("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].0.outputs != pair[1].0.inputs {
                return Err(GragError::DimensionMismatch { expected: pair[0].0.outputs, got: pair[1].0.inputs });
            }
        }
        let shapes: Vec<LayerShape> = layers.iter().map(|l| l.0).collect();
        let offsets = offsets_for(&shapes);
        let mut params = Vec::with_capacity(shapes.iter().map(LayerShape::param_len).sum());
        for (shape, w, b) in layers {
            if w.len() != shape.weight_len() {
                return Err(GragError::DimensionMismatch { expected: shape.weight_len(), got: w.len() });
            }
            if b.len() != shape.outputs {
                return Err(GragError::DimensionMismatch { expected: shape.outputs, got: b.len() });
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(GragError::NumericalFault("non-finite parameter".into()));
            }
            params.extend(w);
            params.extend(b);
        }
        Ok(Self { shapes, offsets, params })
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn input_dim(&self) -> usize {
        self.shapes[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.shapes.last().expect("non-empty").outputs
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn weights(&self, layer: usize) -> &[T] {
        let off = self.offsets[layer];
        &self.params[off..off + self.shapes[layer].weight_len()]
    }

    pub fn biases(&self, layer: usize) -> &[T] {
        let s = self.shapes[layer];
        let off = self.offsets[layer] + s.weight_len();
        &self.params[off..off + s.outputs]
    }

    /// Multiplies one layer's weights and biases by `factor`.
    pub fn scale_layer(&mut self, layer: usize, factor: T) {
        let off = self.offsets[layer];
        for p in &mut self.params[off..off + self.shapes[layer].param_len()] {
            *p *= factor;
        }
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            shapes: self.shapes.clone(),
            offsets: self.offsets.clone(),
            params: self.params.iter().map(|&p| U::lit(p.to_f64_lossy())).collect(),
        }
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(GragError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        Ok(())
    }

    fn layer_forward(&self, l: usize, input: &[T], pre: &mut Vec<T>, out: &mut Vec<T>) {
        let shape = self.shapes[l];
        let w = self.weights(l);
        let b = self.biases(l);
        pre.clear();
        out.clear();
        for j in 0..shape.outputs {
            let row = &w[j * shape.inputs..(j + 1) * shape.inputs];
            let z = row.iter().zip(input).fold(b[j], |acc, (&wi, &xi)| acc + wi * xi);
            pre.push(z);
            out.push(shape.activation.apply(z));
        }
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut pre = Vec::new();
        let mut out = Vec::new();
        for l in 0..self.shapes.len() {
            self.layer_forward(l, &cur, &mut pre, &mut out);
            std::mem::swap(&mut cur, &mut out);
        }
        if cur.iter().any(|v| !v.is_finite()) {
            return Err(GragError::NumericalFault("non-finite network output".into()));
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: &[T]) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.shapes.len() + 1);
        let mut pres = Vec::with_capacity(self.shapes.len());
        activations.push(x.to_vec());
        for l in 0..self.shapes.len() {
            let mut pre = Vec::new();
            let mut out = Vec::new();
            self.layer_forward(l, &activations[l], &mut pre, &mut out);
            pres.push(pre);
            activations.push(out);
        }
        let cache = ForwardCache { activations, pre: pres };
        if cache.output().iter().any(|v| !v.is_finite()) {
            return Err(GragError::NumericalFault("non-finite network output".into()));
        }
        Ok(cache)
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    /// Zero entries of `d_out` are skipped, so one-hot output gradients are cheap.
    pub fn backward(&self, cache: &ForwardCache<T>, d_out: &[T], grads: &mut [T]) {
        assert_eq!(grads.len(), self.params.len(), "gradient buffer shape");
        assert_eq!(d_out.len(), self.output_dim(), "output gradient shape");
        let mut delta = d_out.to_vec();
        for l in (0..self.shapes.len()).rev() {
            let shape = self.shapes[l];
            let pre = &cache.pre[l];
            let post = &cache.activations[l + 1];
            for j in 0..shape.outputs {
                if delta[j] != T::zero() {
                    delta[j] *= shape.activation.derivative(pre[j], post[j]);
                }
            }
            let input = &cache.activations[l];
            let off = self.offsets[l];
            let (gw, gb) = grads[off..off + shape.param_len()].split_at_mut(shape.weight_len());
            for j in (0..shape.outputs).filter(|&j| delta[j] != T::zero()) {
                gb[j] += delta[j];
                let row = &mut gw[j * shape.inputs..(j + 1) * shape.inputs];
                for (g, &xi) in row.iter_mut().zip(input) {
                    *g += delta[j] * xi;
                }
            }
            if l > 0 {
                let w = self.weights(l);
                let mut next = vec![T::zero(); shape.inputs];
                for j in (0..shape.outputs).filter(|&j| delta[j] != T::zero()) {
                    let row = &w[j * shape.inputs..(j + 1) * shape.inputs];
                    for (nd, &wi) in next.iter_mut().zip(row) {
                        *nd += wi * delta[j];
                    }
                }
                delta = next;
            }
        }
    }

    /// Forward pass, then the caller's loss `(value, d value / d output)`,
    /// then exact gradients of that loss with respect to every parameter.
    pub fn eval_with_loss<F>(&self, x: &[T], loss: F) -> Result<Evaluation<T>>
    where
        F: FnOnce(&[T]) -> (T, Vec<T>),
    {
        let cache = self.forward_cached(x)?;
        let (value, d_out) = loss(cache.output());
        if !value.is_finite() {
            return Err(GragError::NumericalFault("non-finite loss".into()));
        }
        if d_out.len() != self.output_dim() {
            return Err(GragError::DimensionMismatch { expected: self.output_dim(), got: d_out.len() });
        }
        let mut gradients = vec![T::zero(); self.params.len()];
        self.backward(&cache, &d_out, &mut gradients);
        Ok(Evaluation { outputs: cache.output().to_vec(), loss: value, gradients })
    }
}
