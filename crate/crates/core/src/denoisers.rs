//! Slope fields: an analytic Gaussian oracle and a small trainable denoiser.

use std::path::Path;

use crate::error::{format_err, invalid, Result};
use crate::io::{self, Manifest};
use crate::rng::Rng;
use crate::solvers::{ClosedForm, SlopeField};
use crate::tensor::{LatentSequence, Tensor};

/// Probability-flow slope for data drawn from `N(0, variance)` per dimension.
///
/// `f(x, s) = -s x / (v + s^2)`, with exact trajectory
/// `x(s1) = x(s0) sqrt((v + s1^2) / (v + s0^2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianOracle {
    pub variance: f64,
}

impl Default for GaussianOracle {
    fn default() -> Self {
        Self { variance: 1.0 }
    }
}

impl GaussianOracle {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(invalid("oracle variance must be positive"));
        }
        Ok(Self { variance })
    }

    pub fn slope_of(&self, x: &Tensor, sigma: f64) -> Tensor {
        let c = -sigma / (self.variance + sigma * sigma);
        let data = x.data().iter().map(|v| (c * *v as f64) as f32).collect();
        Tensor::new(x.shape().to_vec(), data).expect("same shape")
    }
}

impl SlopeField for GaussianOracle {
    fn slope(&self, x: &Tensor, t: f64, _first_frame: usize) -> Result<Tensor> {
        if t < 0.0 {
            return Err(invalid(format!("negative noise level {t}")));
        }
        Ok(self.slope_of(x, t))
    }
}

impl ClosedForm for GaussianOracle {
    fn exact_f64(&self, x0: &Tensor, t0: f64, t1: f64) -> Vec<f64> {
        let v = self.variance;
        let ratio = ((v + t1 * t1) / (v + t0 * t0)).sqrt();
        x0.data().iter().map(|x| *x as f64 * ratio).collect()
    }
}

/// The constant-zero field, whose trajectories are constant.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroField;

impl SlopeField for ZeroField {
    fn slope(&self, x: &Tensor, _t: f64, _first_frame: usize) -> Result<Tensor> {
        Ok(Tensor::zeros(x.shape().to_vec()))
    }
}

impl ClosedForm for ZeroField {
    fn exact_f64(&self, x0: &Tensor, _t0: f64, _t1: f64) -> Vec<f64> {
        x0.data().iter().map(|v| *v as f64).collect()
    }
}

/// Elementwise nonlinearity between affine maps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Activation {
    #[default]
    Tanh,
    /// `x / (1 + |x|)`
    SoftSign,
}

impl Activation {
    pub fn id(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::SoftSign => "softsign",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "tanh" => Ok(Activation::Tanh),
            "softsign" => Ok(Activation::SoftSign),
            _ => Err(format_err(format!("unknown nonlinearity `{id}`"))),
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::SoftSign => z / (1.0 + z.abs()),
        }
    }

    /// Derivative expressed through the pre-activation.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::SoftSign => {
                let a = 1.0 + z.abs();
                1.0 / (a * a)
            }
        }
    }
}

/// `y = W x + b` with `W` stored `[out, in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Affine {
    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    /// `W x + b` accumulated in f64.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let k = self.inputs();
        self.weight
            .data()
            .chunks_exact(k)
            .zip(self.bias.data())
            .map(|(row, b)| {
                row.iter().zip(x).fold(*b as f64, |acc, (w, v)| acc + *w as f64 * v)
            })
            .collect()
    }

    /// `W^T g`.
    pub fn backward_input(&self, g: &[f64]) -> Vec<f64> {
        let k = self.inputs();
        let mut out = vec![0.0; k];
        for (row, gi) in self.weight.data().chunks_exact(k).zip(g) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += *w as f64 * gi;
            }
        }
        out
    }
}

/// Per-frame MLP producing a slope estimate.
///
/// Input is the concatenation of the latent frame, the mask channel, the
/// masked-context channel and the scalar embedding `ln(1 + sigma)`; output has
/// the latent dimension. Every layer but the last is followed by the
/// activation.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyDenoiser {
    dim: usize,
    activation: Activation,
    seed: u64,
    layers: Vec<Affine>,
}

/// Something that maps one conditioned latent frame to a slope.
pub trait FrameDenoiser: Sync {
    fn dim(&self) -> usize;

    /// Slope for one frame, unrounded.
    fn forward_frame(&self, x: &[f32], mask: &[f32], ctx: &[f32], sigma: f64) -> Vec<f64>;
}

pub fn noise_embedding(sigma: f64) -> f64 {
    sigma.ln_1p()
}

/// Builds the network input vector for one frame.
pub fn frame_input(x: &[f32], mask: &[f32], ctx: &[f32], sigma: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(3 * x.len() + 1);
    v.extend(x.iter().map(|&a| a as f64));
    v.extend(mask.iter().map(|&a| a as f64));
    v.extend(ctx.iter().map(|&a| a as f64));
    v.push(noise_embedding(sigma));
    v
}

impl ToyDenoiser {
    pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
    pub fn new(dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if dim == 0 || hidden.contains(&0) {
            return Err(invalid("layer sizes must be positive"));
        }
        let mut rng = Rng::new(seed);
        let mut sizes = vec![3 * dim + 1];
        sizes.extend_from_slice(hidden);
        sizes.push(dim);
        let layers = sizes
            .windows(2)
            .map(|p| {
                let (k, n) = (p[0], p[1]);
                let bound = 1.0 / (k as f64).sqrt();
                let w = (0..n * k).map(|_| rng.uniform_in(-bound, bound) as f32).collect();
                Affine {
                    weight: Tensor::new(vec![n, k], w).expect("sized"),
                    bias: Tensor::zeros(vec![n]),
                }
            })
            .collect();
        let model = Self { dim, activation, seed, layers };
        if model.parameter_count() >= 100_000 {
            return Err(invalid(format!(
                "toy denoiser limited to 1e5 parameters, requested {}",
                model.parameter_count()
            )));
        }
        Ok(model)
    }

    pub fn with_zero_output(mut self) -> Self {
        let last = self.layers.last_mut().unwrap();
        last.weight.data_mut().fill(0.0);
        last.bias.data_mut().fill(0.0);
        self
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Affine] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Affine] {
        &mut self.layers
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs()).collect()
    }

    pub fn input_len(&self) -> usize {
        3 * self.dim + 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Checksum over every weight and bias.
    pub fn checksum(&self) -> u64 {
        self.layers
            .iter()
            .fold(0u64, |h, l| h.rotate_left(7) ^ l.weight.checksum() ^ l.bias.checksum().rotate_left(3))
    }

    /// Runs the network on a prepared input vector.
    pub fn forward_input(&self, input: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut h = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i != last {
                h.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        h
    }

    /// Rounded single-frame forward with shape checks.
    pub fn toy_forward(&self, x: &[f32], mask: &[f32], ctx: &[f32], sigma: f64) -> Result<Tensor> {
        if x.len() != self.dim || mask.len() != self.dim || ctx.len() != self.dim {
            return Err(invalid(format!(
                "frame inputs of length {}/{}/{} for dimension {}",
                x.len(),
                mask.len(),
                ctx.len(),
                self.dim
            )));
        }
        let out = self.forward_frame(x, mask, ctx, sigma);
        Tensor::new(vec![self.dim], out.into_iter().map(|v| v as f32).collect())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let mut m = Manifest::new();
        m.set("kind", "toy-denoiser")
            .set("dim", self.dim)
            .set("hidden", join(&self.hidden()))
            .set("seed", self.seed)
            .set("nonlinearity", self.activation.id());
        let mut named = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            named.push((format!("layer{i}.weight"), &l.weight));
            named.push((format!("layer{i}.bias"), &l.bias));
        }
        io::write_tensor_dir(dir, &m, &named)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let m = io::read_manifest(dir)?;
        if m.get("kind") != Some("toy-denoiser") {
            return Err(format_err("not a toy-denoiser checkpoint"));
        }
        let dim: usize = m.parse_value("dim")?;
        let hidden = split(m.require("hidden")?)?;
        let seed: u64 = m.parse_value("seed")?;
        let activation = Activation::from_id(m.require("nonlinearity")?)?;
        let mut model = Self::new(dim, &hidden, activation, seed)?;
        for (i, l) in model.layers.iter_mut().enumerate() {
            let w = io::read_named(dir, &format!("layer{i}.weight"))?;
            let b = io::read_named(dir, &format!("layer{i}.bias"))?;
            if w.shape() != l.weight.shape() || b.shape() != l.bias.shape() {
                return Err(format_err(format!("layer {i} has unexpected shape")));
            }
            l.weight = w;
            l.bias = b;
        }
        Ok(model)
    }
}

pub(crate) fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn split(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format_err(format!("bad size list `{s}`"))))
        .collect()
}

impl FrameDenoiser for ToyDenoiser {
    fn dim(&self) -> usize {
        self.dim
    }

    fn forward_frame(&self, x: &[f32], mask: &[f32], ctx: &[f32], sigma: f64) -> Vec<f64> {
        self.forward_input(&frame_input(x, mask, ctx, sigma))
    }
}

/// A frame denoiser turned into a slope field over a conditioned sequence.
///
/// Row `j` of a window starting at frame `first_frame` is conditioned on
/// mask row and context row `first_frame + j`. Context entries (mask 0) get
/// a zero slope, so the context stays at its encoded value for the whole
/// trajectory, as it does in every training state.
pub struct ConditionedField<'a, M: FrameDenoiser + ?Sized> {
    model: &'a M,
    mask: &'a LatentSequence,
    ctx: &'a LatentSequence,
}

impl<'a, M: FrameDenoiser + ?Sized> ConditionedField<'a, M> {
    pub fn new(model: &'a M, mask: &'a LatentSequence, ctx: &'a LatentSequence) -> Result<Self> {
        if mask.dim() != model.dim() || ctx.dim() != model.dim() || mask.frames() != ctx.frames() {
            return Err(invalid("conditioning channels do not match the model"));
        }
        Ok(Self { model, mask, ctx })
    }
}

impl<M: FrameDenoiser + ?Sized> SlopeField for ConditionedField<'_, M> {
    fn slope(&self, x: &Tensor, t: f64, first_frame: usize) -> Result<Tensor> {
        let d = self.model.dim();
        if x.rank() != 2 || x.shape()[1] != d {
            return Err(invalid(format!("state shape {:?} for dimension {d}", x.shape())));
        }
        let rows = x.shape()[0];
        if first_frame + rows > self.mask.frames() {
            return Err(invalid("window extends past the conditioning channels"));
        }
        let mut out = Vec::with_capacity(rows * d);
        for j in 0..rows {
            let k = first_frame + j;
            let y = self.model.forward_frame(x.row(j), self.mask.frame(k), self.ctx.frame(k), t);
            out.extend(y.into_iter().zip(self.mask.frame(k)).map(|(v, m)| if *m == 1.0 { v as f32 } else { 0.0 }));
        }
        Tensor::new(x.shape().to_vec(), out)
    }
}
