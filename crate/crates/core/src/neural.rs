//! Dense feed-forward networks with exact reverse-mode gradients, Adam and
//! Polyak averaging: exactly the substrate a TD3 actor/critic pair needs.
//!
//! Parameters live in one flat vector, layer by layer, each layer storing
//! its `out × in` weight matrix row-major followed by its bias vector. The
//! optimizer, target averaging and checkpoints all work on that vector.

use alloc::vec;
use alloc::vec::Vec;

use libm::{sqrt, tanh};
use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputActivation {
    Linear,
    /// `scale · tanh(z)`.
    TanhScaled(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    dims: Vec<usize>,
    params: Vec<f64>,
    output: OutputActivation,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::invalid("a network needs at least two non-empty layers"));
    }
    Ok(())
}

impl DenseNet {
    /// Network with all parameters zero.
    pub fn zeros(dims: &[usize], output: OutputActivation) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
            output,
        })
    }

    /// Weights and biases uniform in `±1/√fan_in` per layer.
    pub fn new_random<R: Rng + ?Sized>(dims: &[usize], output: OutputActivation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims, output)?;
        let mut offset = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / sqrt(w[0] as f64);
            let n = w[0] * w[1] + w[1];
            for p in &mut net.params[offset..offset + n] {
                *p = rng.random_range(-bound..=bound);
            }
            offset += n;
        }
        Ok(net)
    }

    pub fn from_parts(dims: &[usize], params: Vec<f64>, output: OutputActivation) -> Result<Self> {
        check_dims(dims)?;
        let expected = param_count(dims);
        if params.len() != expected {
            return Err(Error::ShapeMismatch {
                what: "parameter vector",
                expected,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::numeric("non-finite network parameter"));
        }
        Ok(Self {
            dims: dims.to_vec(),
            params,
            output,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn layer_offset(&self, layer: usize) -> usize {
        param_count(&self.dims[..=layer])
    }

    /// `(weights, biases)` of `layer`; weights are `out × in` row-major.
    pub fn layer(&self, layer: usize) -> (&[f64], &[f64]) {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let off = self.layer_offset(layer);
        let (w, rest) = self.params[off..].split_at(i * o);
        (w, &rest[..o])
    }

    pub fn layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let off = self.layer_offset(layer);
        let (w, rest) = self.params[off..].split_at_mut(i * o);
        (w, &mut rest[..o])
    }

    pub fn same_architecture(&self, other: &DenseNet) -> bool {
        self.dims == other.dims && self.output == other.output
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                what: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Forward pass keeping every layer's activation for [`Self::backward_trace`].
    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_input(input)?;
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(input.to_vec());
        let last = self.num_layers() - 1;
        let mut offset = 0;
        for l in 0..self.num_layers() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let x = &acts[l];
            let mut z: Vec<f64> = w
                .chunks_exact(n_in)
                .zip(b)
                .map(|(row, &bias)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias)
                .collect();
            if l == last {
                if let OutputActivation::TanhScaled(scale) = self.output {
                    z.iter_mut().for_each(|v| *v = scale * tanh(*v));
                }
            } else {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        Ok(Trace { acts })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input)?.into_output())
    }

    /// Accumulates into `grads` the parameter gradient of `output_grad · f(x)`
    /// and returns the gradient with respect to the input.
    pub fn backward_trace(&self, trace: &Trace, output_grad: &[f64], grads: &mut Gradients) -> Result<Vec<f64>> {
        if output_grad.len() != self.output_dim() {
            return Err(Error::ShapeMismatch {
                what: "output gradient",
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }
        if grads.0.len() != self.params.len() {
            return Err(Error::ShapeMismatch {
                what: "gradient buffer",
                expected: self.params.len(),
                got: grads.0.len(),
            });
        }
        let last = self.num_layers() - 1;
        let out = &trace.acts[last + 1];
        let mut delta: Vec<f64> = match self.output {
            OutputActivation::Linear => output_grad.to_vec(),
            OutputActivation::TanhScaled(scale) => output_grad
                .iter()
                .zip(out)
                .map(|(g, a)| {
                    let t = if scale != 0.0 { a / scale } else { 0.0 };
                    g * scale * (1.0 - t * t)
                })
                .collect(),
        };
        for l in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let off = self.layer_offset(l);
            let x = &trace.acts[l];
            let (gw, gb) = grads.0[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            for ((grow, gbias), &d) in gw.chunks_exact_mut(n_in).zip(gb.iter_mut()).zip(&delta) {
                if d != 0.0 {
                    grow.iter_mut().zip(x).for_each(|(g, xi)| *g += d * xi);
                }
                *gbias += d;
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut dx = vec![0.0; n_in];
            for (row, &d) in w.chunks_exact(n_in).zip(&delta) {
                if d != 0.0 {
                    dx.iter_mut().zip(row).for_each(|(g, wi)| *g += d * wi);
                }
            }
            if l > 0 {
                // ReLU: pass gradient only where the unit was active.
                dx.iter_mut().zip(x).for_each(|(g, a)| {
                    if *a <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            delta = dx;
        }
        Ok(delta)
    }

    /// Parameter and input gradients of `output_grad · f(input)`.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let trace = self.forward_trace(input)?;
        let mut grads = Gradients::zeros_like(self);
        let dx = self.backward_trace(&trace, output_grad, &mut grads)?;
        Ok((grads, dx))
    }

    /// `self ← τ·online + (1−τ)·self`.
    pub fn polyak_update(&mut self, online: &DenseNet, tau: f64) -> Result<()> {
        if !self.same_architecture(online) {
            return Err(Error::invalid("polyak update between different architectures"));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid("polyak coefficient must lie in [0, 1]"));
        }
        if tau == 1.0 {
            self.params.copy_from_slice(&online.params);
        } else if tau != 0.0 {
            for (t, o) in self.params.iter_mut().zip(&online.params) {
                *t = tau * o + (1.0 - tau) * *t;
            }
        }
        Ok(())
    }

    /// Squared Euclidean distance between two parameter vectors.
    pub fn distance_sq(&self, other: &DenseNet) -> f64 {
        self.params.iter().zip(&other.params).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// Activations recorded by [`DenseNet::forward_trace`].
#[derive(Debug, Clone)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.acts.pop().unwrap_or_default()
    }
}

/// Gradient vector laid out like [`DenseNet::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self(vec![0.0; net.params.len()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scale(&mut self, k: f64) {
        self.0.iter_mut().for_each(|g| *g *= k);
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_net(net: &DenseNet, learning_rate: f64) -> Self {
        Self::new(net.params.len(), learning_rate)
    }
}

/// One bias-corrected Adam step (gradient descent on `grads`).
pub fn adam_step(net: &mut DenseNet, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let n = net.params.len();
    for (what, len) in [
        ("gradient", grads.0.len()),
        ("adam first moment", state.first_moment.len()),
        ("adam second moment", state.second_moment.len()),
    ] {
        if len != n {
            return Err(Error::ShapeMismatch {
                what,
                expected: n,
                got: len,
            });
        }
    }
    if !grads.is_finite() {
        return Err(Error::numeric("non-finite gradient"));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - libm::pow(b1, t as f64);
    let c2 = 1.0 - libm::pow(b2, t as f64);
    let lr = state.learning_rate;
    for (((p, &g), m), v) in net
        .params
        .iter_mut()
        .zip(&grads.0)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (sqrt(v_hat) + state.epsilon);
    }
    Ok(())
}

const NET_MAGIC: &[u8; 8] = b"THZNET\0\0";
const ADAM_MAGIC: &[u8; 8] = b"THZADAM\0";
const FORMAT_VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("unexpected end of data".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        if self.take(8)? != magic {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(Error::Checkpoint(alloc::format!("unsupported version {v}")));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if !self.buf.is_empty() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(())
    }
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        out.extend_from_slice(&x.to_bits().to_le_bytes());
    }
}

/// Binary checkpoint: magic, version, seed, output activation, layer dims
/// and the raw parameter bits (little endian). Round-trips bit-exactly.
pub fn encode_checkpoint(net: &DenseNet, seed: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * net.params.len());
    out.extend_from_slice(NET_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    let (tag, scale) = match net.output {
        OutputActivation::Linear => (0u8, 0.0),
        OutputActivation::TanhScaled(s) => (1u8, s),
    };
    out.push(tag);
    out.extend_from_slice(&scale.to_bits().to_le_bytes());
    out.extend_from_slice(&(net.dims.len() as u32).to_le_bytes());
    for &d in &net.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    put_f64s(&mut out, &net.params);
    out
}

/// Inverse of [`encode_checkpoint`]; returns the network and its seed.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<(DenseNet, u64)> {
    let mut r = Reader { buf: bytes };
    r.header(NET_MAGIC)?;
    let seed = r.u64()?;
    let output = match (r.u8()?, r.f64()?) {
        (0, _) => OutputActivation::Linear,
        (1, s) => OutputActivation::TanhScaled(s),
        (t, _) => return Err(Error::Checkpoint(alloc::format!("unknown activation tag {t}"))),
    };
    let n_dims = r.u32()? as usize;
    if n_dims > 64 {
        return Err(Error::Checkpoint("implausible layer count".into()));
    }
    let dims = (0..n_dims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let n_params = r.u64()? as usize;
    if n_params > r.buf.len() / 8 {
        return Err(Error::Checkpoint("parameter count exceeds data".into()));
    }
    let params = r.f64s(n_params)?;
    r.finish()?;
    let net = DenseNet::from_parts(&dims, params, output).map_err(|e| Error::Checkpoint(alloc::format!("{e}")))?;
    Ok((net, seed))
}

pub fn encode_adam(state: &AdamState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ADAM_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&state.step_count.to_le_bytes());
    put_f64s(&mut out, &[state.learning_rate, state.beta1, state.beta2, state.epsilon]);
    out.extend_from_slice(&(state.first_moment.len() as u64).to_le_bytes());
    put_f64s(&mut out, &state.first_moment);
    put_f64s(&mut out, &state.second_moment);
    out
}

pub fn decode_adam(bytes: &[u8]) -> Result<AdamState> {
    let mut r = Reader { buf: bytes };
    r.header(ADAM_MAGIC)?;
    let step_count = r.u64()?;
    let h = r.f64s(4)?;
    let n = r.u64()? as usize;
    if n > r.buf.len() / 16 {
        return Err(Error::Checkpoint("moment count exceeds data".into()));
    }
    let first_moment = r.f64s(n)?;
    let second_moment = r.f64s(n)?;
    r.finish()?;
    Ok(AdamState {
        first_moment,
        second_moment,
        step_count,
        learning_rate: h[0],
        beta1: h[1],
        beta2: h[2],
        epsilon: h[3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent evaluator: nested loops over explicit (o, i) indices.
    fn reference_forward(net: &DenseNet, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for l in 0..net.num_layers() {
            let (w, b) = net.layer(l);
            let n_in = net.dims()[l];
            let mut y = vec![0.0; net.dims()[l + 1]];
            for o in 0..y.len() {
                let mut s = b[o];
                for i in 0..n_in {
                    s += w[o * n_in + i] * x[i];
                }
                y[o] = if l + 1 < net.num_layers() {
                    if s > 0.0 {
                        s
                    } else {
                        0.0
                    }
                } else {
                    match net.output_activation() {
                        OutputActivation::Linear => s,
                        OutputActivation::TanhScaled(k) => k * s.tanh(),
                    }
                };
            }
            x = y;
        }
        x
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = DenseNet::zeros(&[3, 5, 2], OutputActivation::Linear).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let mut net = DenseNet::zeros(&[3, 3], OutputActivation::Linear).unwrap();
        let (w, _) = net.layer_mut(0);
        for k in 0..3 {
            w[k * 3 + k] = 1.0;
        }
        assert_eq!(net.forward(&[0.5, -7.0, 2.0]).unwrap(), vec![0.5, -7.0, 2.0]);
    }

    #[test]
    fn forward_matches_reference_evaluator() {
        let mut rng = seeded(2024);
        let net = DenseNet::new_random(&[3, 16, 8, 3], OutputActivation::TanhScaled(2.5), &mut rng).unwrap();
        let input = [0.3, -0.9, 0.45];
        let got = net.forward(&input).unwrap();
        let want = reference_forward(&net, &input);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-14);
            assert!(g.abs() <= 2.5);
        }
    }

    #[test]
    fn shape_errors() {
        let net = DenseNet::zeros(&[3, 4, 1], OutputActivation::Linear).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::ShapeMismatch { .. })));
        assert!(net.backward(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(DenseNet::zeros(&[3], OutputActivation::Linear).is_err());
        assert!(DenseNet::from_parts(&[2, 2], vec![0.0; 5], OutputActivation::Linear).is_err());
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let mut rng = seeded(1);
        let net = DenseNet::new_random(&[3, 8, 2], OutputActivation::Linear, &mut rng).unwrap();
        let (g, dx) = net.backward(&[0.1, 0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert!(g.0.iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer_weight_gradient_is_outer_product() {
        let mut rng = seeded(3);
        let net = DenseNet::new_random(&[4, 1], OutputActivation::Linear, &mut rng).unwrap();
        let x = [0.5, -1.0, 2.0, 0.25];
        let (g, dx) = net.backward(&x, &[3.0]).unwrap();
        for (gi, xi) in g.0.iter().zip(&x) {
            assert_eq!(*gi, 3.0 * xi);
        }
        assert_eq!(g.0[4], 3.0);
        let (w, _) = net.layer(0);
        for (d, wi) in dx.iter().zip(w) {
            assert_eq!(*d, 3.0 * wi);
        }
    }

    fn finite_difference_check(dims: &[usize], output: OutputActivation, seed: u64) {
        let mut rng = seeded(seed);
        let net = DenseNet::new_random(dims, output, &mut rng).unwrap();
        let x: Vec<f64> = (0..dims[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let og: Vec<f64> = (0..*dims.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |n: &DenseNet, x: &[f64]| -> f64 { n.forward(x).unwrap().iter().zip(&og).map(|(a, b)| a * b).sum() };
        let (g, dx) = net.backward(&x, &og).unwrap();
        let h = 1e-5;
        let check = |analytic: f64, numeric: f64, what: &str| {
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            assert!((analytic - numeric).abs() / denom < 1e-4, "{what}: {analytic} vs {numeric}");
        };
        for k in 0..net.params().len() {
            let mut plus = net.clone();
            plus.params_mut()[k] += h;
            let mut minus = net.clone();
            minus.params_mut()[k] -= h;
            check(g.0[k], (f(&plus, &x) - f(&minus, &x)) / (2.0 * h), "param");
        }
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            check(dx[i], (f(&net, &xp) - f(&net, &xm)) / (2.0 * h), "input");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..12 {
            finite_difference_check(&[3, 8, 4, 1], OutputActivation::Linear, seed);
            finite_difference_check(&[8, 16, 8, 2], OutputActivation::TanhScaled(1.5), seed + 100);
        }
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut rng = seeded(4);
        let mut net = DenseNet::new_random(&[2, 3, 1], OutputActivation::Linear, &mut rng).unwrap();
        let before = net.clone();
        let mut st = AdamState::for_net(&net, 1e-3);
        let zero = Gradients::zeros_like(&net);
        adam_step(&mut net, &zero, &mut st).unwrap();
        assert_eq!(net, before);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn adam_first_step_closed_form() {
        let mut net = DenseNet::from_parts(&[1, 1], vec![0.5, -0.25], OutputActivation::Linear).unwrap();
        let mut st = AdamState::for_net(&net, 0.01);
        let g = Gradients(vec![0.3, -2.0]);
        adam_step(&mut net, &g, &mut st).unwrap();
        // after bias correction m̂ = g, v̂ = g², so Δ = -lr·g/(|g|+ε)
        let d0 = -0.01 * 0.3 / (0.3 + 1e-8);
        let d1 = -0.01 * -2.0 / (2.0 + 1e-8);
        assert!((net.params()[0] - (0.5 + d0)).abs() < 1e-15);
        assert!((net.params()[1] - (-0.25 + d1)).abs() < 1e-15);
    }

    #[test]
    fn adam_minimizes_square() {
        let mut net = DenseNet::from_parts(&[1, 1], vec![1.0, 0.0], OutputActivation::Linear).unwrap();
        let mut st = AdamState::for_net(&net, 0.01);
        for _ in 0..100 {
            let w = net.params()[0];
            adam_step(&mut net, &Gradients(vec![2.0 * w, 0.0]), &mut st).unwrap();
        }
        assert!(net.params()[0].abs() < 0.5);
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut net = DenseNet::zeros(&[1, 1], OutputActivation::Linear).unwrap();
        let mut st = AdamState::for_net(&net, 0.01);
        let r = adam_step(&mut net, &Gradients(vec![f64::NAN, 0.0]), &mut st);
        assert!(matches!(r, Err(Error::Numeric(_))));
        assert_eq!(st.step_count, 0);
    }

    #[test]
    fn polyak_examples() {
        let mut rng = seeded(8);
        let online = DenseNet::new_random(&[2, 4, 1], OutputActivation::Linear, &mut rng).unwrap();
        let original = DenseNet::new_random(&[2, 4, 1], OutputActivation::Linear, &mut rng).unwrap();

        let mut t = original.clone();
        t.polyak_update(&online, 1.0).unwrap();
        assert_eq!(t, online);

        let mut t = original.clone();
        t.polyak_update(&online, 0.0).unwrap();
        assert_eq!(t, original);

        let ones = DenseNet::from_parts(&[1, 1], vec![1.0, 1.0], OutputActivation::Linear).unwrap();
        let mut zero = DenseNet::zeros(&[1, 1], OutputActivation::Linear).unwrap();
        zero.polyak_update(&ones, 0.01).unwrap();
        assert_eq!(zero.params(), &[0.01, 0.01]);

        let other = DenseNet::zeros(&[2, 5, 1], OutputActivation::Linear).unwrap();
        assert!(t.polyak_update(&other, 0.5).is_err());
        assert!(t.clone().polyak_update(&online, 1.5).is_err());
    }

    #[test]
    fn polyak_contracts_geometrically() {
        let mut rng = seeded(9);
        let online = DenseNet::new_random(&[3, 6, 2], OutputActivation::Linear, &mut rng).unwrap();
        let mut target = DenseNet::new_random(&[3, 6, 2], OutputActivation::Linear, &mut rng).unwrap();
        let tau = 0.05;
        let mut d = libm::sqrt(target.distance_sq(&online));
        for _ in 0..50 {
            target.polyak_update(&online, tau).unwrap();
            let next = libm::sqrt(target.distance_sq(&online));
            assert!((next / d - (1.0 - tau)).abs() < 1e-9);
            d = next;
        }
    }

    #[test]
    fn initialization_is_seeded_and_bounded() {
        let a = DenseNet::new_random(&[4, 10, 3], OutputActivation::Linear, &mut seeded(77)).unwrap();
        let b = DenseNet::new_random(&[4, 10, 3], OutputActivation::Linear, &mut seeded(77)).unwrap();
        assert_eq!(a, b);
        let (w0, _) = a.layer(0);
        assert!(w0.iter().all(|w| w.abs() <= 0.5));
        let (w1, b1) = a.layer(1);
        let bound = 1.0 / libm::sqrt(10.0);
        assert!(w1.iter().chain(b1).all(|w| w.abs() <= bound));
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let net = DenseNet::new_random(&[3, 4, 1], OutputActivation::Linear, &mut seeded(1)).unwrap();
        let bytes = encode_checkpoint(&net, 5);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_checkpoint(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(decode_checkpoint(&long).is_err());
    }

    proptest! {
        #[test]
        fn checkpoint_round_trips_bit_exactly(
            seed in any::<u64>(),
            hidden in 1usize..12,
            scale in proptest::option::of(0.1f64..20.0),
        ) {
            let out = scale.map_or(OutputActivation::Linear, OutputActivation::TanhScaled);
            let net = DenseNet::new_random(&[3, hidden, 2], out, &mut seeded(seed)).unwrap();
            let (back, s) = decode_checkpoint(&encode_checkpoint(&net, seed)).unwrap();
            prop_assert_eq!(s, seed);
            prop_assert_eq!(back.dims(), net.dims());
            prop_assert_eq!(back.output_activation(), net.output_activation());
            for (a, b) in back.params().iter().zip(net.params()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }

            let mut st = AdamState::for_net(&net, 1e-4);
            st.first_moment.iter_mut().enumerate().for_each(|(i, m)| *m = i as f64 * 0.1);
            st.step_count = seed % 1000;
            prop_assert_eq!(decode_adam(&encode_adam(&st)).unwrap(), st);
        }
    }
}
