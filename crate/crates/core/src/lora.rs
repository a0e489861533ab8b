//! Low-rank residual adapters on the toy denoiser's affine maps.
//!
//! An adapter on a weight `W` of shape `d x k` holds factors `A` (`r x k`) and
//! `B` (`d x r`). The adapted weight is `W + scale * B A`. `A` starts uniform
//! in `[-1/sqrt(k), 1/sqrt(k)]` and `B` starts at zero, so a freshly attached
//! adapter leaves the model unchanged.

use std::path::Path;

use crate::denoisers::{frame_input, join, split, Affine, FrameDenoiser, ToyDenoiser};
use crate::error::{format_err, invalid, Result};
use crate::io::{self, Manifest};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const DEFAULT_RANK: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct LoraAdapter {
    pub layer: usize,
    pub a: Tensor,
    pub b: Tensor,
    pub scale: f32,
}

impl LoraAdapter {
    /// Fresh adapter for a `d x k` weight.
    pub fn new(layer: usize, d: usize, k: usize, rank: usize, rng: &mut Rng) -> Result<Self> {
        if rank == 0 || rank > d.min(k) {
            return Err(invalid(format!("rank {rank} must be in 1..={}", d.min(k))));
        }
        let bound = 1.0 / (k as f64).sqrt();
        let a = (0..rank * k).map(|_| rng.uniform_in(-bound, bound) as f32).collect();
        Ok(Self {
            layer,
            a: Tensor::new(vec![rank, k], a)?,
            b: Tensor::zeros(vec![d, rank]),
            scale: 1.0,
        })
    }

    pub fn from_factors(layer: usize, a: Tensor, b: Tensor) -> Result<Self> {
        let ok = a.rank() == 2 && b.rank() == 2 && a.shape()[0] == b.shape()[1];
        if !ok {
            return Err(invalid(format!("factor shapes {:?} and {:?}", a.shape(), b.shape())));
        }
        let r = a.shape()[0];
        if r == 0 || r > a.shape()[1].min(b.shape()[0]) {
            return Err(invalid(format!("rank {r} exceeds min(d, k)")));
        }
        Ok(Self { layer, a, b, scale: 1.0 })
    }

    pub fn rank(&self) -> usize {
        self.a.shape()[0]
    }

    pub fn inputs(&self) -> usize {
        self.a.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.b.shape()[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.rank() * (self.inputs() + self.outputs())
    }

    /// `scale * B A` as a `d x k` tensor.
    pub fn delta(&self) -> Tensor {
        let (d, k, r) = (self.outputs(), self.inputs(), self.rank());
        let (a, b) = (self.a.data(), self.b.data());
        let s = self.scale as f64;
        Tensor::from_fn(vec![d, k], |e| {
            let (i, j) = (e / k, e % k);
            let v: f64 = (0..r).map(|q| b[i * r + q] as f64 * a[q * k + j] as f64).sum();
            (s * v) as f32
        })
    }

    /// `A h`.
    pub fn project(&self, h: &[f64]) -> Vec<f64> {
        let k = self.inputs();
        self.a
            .data()
            .chunks_exact(k)
            .map(|row| row.iter().zip(h).map(|(a, v)| *a as f64 * v).sum())
            .collect()
    }

    /// Adds `scale * B p` to `out`, where `p = A h`.
    pub fn expand_into(&self, p: &[f64], out: &mut [f64]) {
        let r = self.rank();
        let s = self.scale as f64;
        for (o, row) in out.iter_mut().zip(self.b.data().chunks_exact(r)) {
            *o += s * row.iter().zip(p).map(|(b, v)| *b as f64 * v).sum::<f64>();
        }
    }
}

/// `W + scale * B A`, rounded to f32 once per element.
pub fn merge(adapter: &LoraAdapter, base: &Tensor) -> Result<Tensor> {
    if base.shape() != [adapter.outputs(), adapter.inputs()] {
        return Err(invalid(format!(
            "adapter for {}x{} cannot merge into {:?}",
            adapter.outputs(),
            adapter.inputs(),
            base.shape()
        )));
    }
    let (d, k, r) = (adapter.outputs(), adapter.inputs(), adapter.rank());
    let (a, b) = (adapter.a.data(), adapter.b.data());
    let s = adapter.scale as f64;
    Ok(Tensor::from_fn(vec![d, k], |e| {
        let (i, j) = (e / k, e % k);
        let v: f64 = (0..r).map(|q| b[i * r + q] as f64 * a[q * k + j] as f64).sum();
        (base.data()[e] as f64 + s * v) as f32
    }))
}

/// A frozen [`ToyDenoiser`] with adapters on some of its layers.
///
/// The base network is only reachable by shared reference, so nothing that
/// works through this handle can change it.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedDenoiser {
    base: ToyDenoiser,
    adapters: Vec<Option<LoraAdapter>>,
    merged: Option<Vec<Affine>>,
}

impl AdaptedDenoiser {
    pub fn attach(base: ToyDenoiser, layers: &[usize], rank: usize, rng: &mut Rng) -> Result<Self> {
        let n = base.layers().len();
        let mut adapters: Vec<Option<LoraAdapter>> = vec![None; n];
        for &l in layers {
            let layer = base
                .layers()
                .get(l)
                .ok_or_else(|| invalid(format!("no layer {l}; model has {n}")))?;
            if adapters[l].is_some() {
                return Err(invalid(format!("layer {l} listed twice")));
            }
            adapters[l] = Some(LoraAdapter::new(l, layer.outputs(), layer.inputs(), rank, rng)?);
        }
        Ok(Self { base, adapters, merged: None })
    }

    /// Adapters on every affine map.
    pub fn attach_all(base: ToyDenoiser, rank: usize, rng: &mut Rng) -> Result<Self> {
        let layers: Vec<usize> = (0..base.layers().len()).collect();
        Self::attach(base, &layers, rank, rng)
    }

    pub fn base(&self) -> &ToyDenoiser {
        &self.base
    }

    pub fn adapters(&self) -> impl Iterator<Item = &LoraAdapter> {
        self.adapters.iter().flatten()
    }

    /// One slot per base layer.
    pub(crate) fn adapter_slots(&self) -> &[Option<LoraAdapter>] {
        &self.adapters
    }

    pub fn adapter(&self, layer: usize) -> Option<&LoraAdapter> {
        self.adapters.get(layer).and_then(|a| a.as_ref())
    }

    pub fn adapter_mut(&mut self, layer: usize) -> Option<&mut LoraAdapter> {
        self.merged = None;
        self.adapters.get_mut(layer).and_then(|a| a.as_mut())
    }

    pub fn target_layers(&self) -> Vec<usize> {
        self.adapters().map(|a| a.layer).collect()
    }

    pub fn rank(&self) -> Option<usize> {
        self.adapters().next().map(|a| a.rank())
    }

    pub fn adapter_parameter_count(&self) -> usize {
        self.adapters().map(|a| a.parameter_count()).sum()
    }

    pub fn is_merged(&self) -> bool {
        self.merged.is_some()
    }

    /// Precomputes `W + scale * B A` for every adapted layer. The originals
    /// are kept, so [`unmerge`](Self::unmerge) is exact.
    pub fn merge(&mut self) -> Result<()> {
        let mut layers = self.base.layers().to_vec();
        for a in self.adapters.iter().flatten() {
            layers[a.layer].weight = merge(a, &self.base.layers()[a.layer].weight)?;
        }
        self.merged = Some(layers);
        Ok(())
    }

    pub fn unmerge(&mut self) {
        self.merged = None;
    }

    /// Effective layers: merged weights when merged, base weights otherwise.
    pub fn effective_layers(&self) -> &[Affine] {
        self.merged.as_deref().unwrap_or(self.base.layers())
    }

    /// The trainable set: `A` and `B` of each adapter, in layer order.
    pub fn trainable_params(&self) -> Vec<(String, &Tensor)> {
        let mut v = Vec::new();
        for a in self.adapters() {
            v.push((format!("layer{}.A", a.layer), &a.a));
            v.push((format!("layer{}.B", a.layer), &a.b));
        }
        v
    }

    pub fn trainable_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        self.merged = None;
        let mut v = Vec::new();
        for a in self.adapters.iter_mut().flatten() {
            v.push((format!("layer{}.A", a.layer), &mut a.a));
            v.push((format!("layer{}.B", a.layer), &mut a.b));
        }
        v
    }

    pub fn forward_input(&self, input: &[f64]) -> Vec<f64> {
        let act = self.base.activation();
        let layers = self.effective_layers();
        let last = layers.len() - 1;
        let mut h = input.to_vec();
        for (i, layer) in layers.iter().enumerate() {
            let mut z = layer.forward(&h);
            if self.merged.is_none() {
                if let Some(a) = &self.adapters[i] {
                    a.expand_into(&a.project(&h), &mut z);
                }
            }
            if i != last {
                z.iter_mut().for_each(|v| *v = act.apply(*v));
            }
            h = z;
        }
        h
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.base.save(dir.join("base"))?;
        let mut m = Manifest::new();
        m.set("kind", "lora")
            .set("rank", self.rank().unwrap_or(0))
            .set("targets", join(&self.target_layers()));
        let named: Vec<(String, &Tensor)> = self.trainable_params();
        io::write_tensor_dir(dir.join("lora"), &m, &named)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let base = ToyDenoiser::load(dir.join("base"))?;
        let ldir = dir.join("lora");
        let m = io::read_manifest(&ldir)?;
        if m.get("kind") != Some("lora") {
            return Err(format_err("not a lora checkpoint"));
        }
        let rank: usize = m.parse_value("rank")?;
        let targets = split(m.require("targets")?)?;
        let mut adapters = vec![None; base.layers().len()];
        for l in targets {
            if l >= adapters.len() {
                return Err(format_err(format!("adapter target {l} out of range")));
            }
            let a = io::read_named(&ldir, &format!("layer{l}.A"))?;
            let b = io::read_named(&ldir, &format!("layer{l}.B"))?;
            let layer = &base.layers()[l];
            if a.shape() != [rank, layer.inputs()] || b.shape() != [layer.outputs(), rank] {
                return Err(format_err(format!("adapter {l} has unexpected shape")));
            }
            adapters[l] = Some(LoraAdapter::from_factors(l, a, b)?);
        }
        Ok(Self { base, adapters, merged: None })
    }
}

impl FrameDenoiser for AdaptedDenoiser {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn forward_frame(&self, x: &[f32], mask: &[f32], ctx: &[f32], sigma: f64) -> Vec<f64> {
        self.forward_input(&frame_input(x, mask, ctx, sigma))
    }
}
