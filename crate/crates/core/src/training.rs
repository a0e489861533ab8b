//! Dual-region loss, analytic gradients and the training loops.
//!
//! A training sample is one synthetic clip, one mask and one noise level `t`
//! drawn from the schedule (the terminal zero excluded). Its latent state keeps
//! clean context where the mask is 0 and follows the straight interpolation
//! `(1 - t) z + t e` inside the hole; the model sees that state together with
//! the mask channel and the encoded masked frames. A single Euler step to zero,
//! `z_hat = z_t + t f`, is decoded and compared with the clean clip:
//!
//! ```text
//! L_masked   = sum_t || M_t (x_hat_t - x_t) ||^2
//! L_unmasked = sum_t || (1 - M_t) (x_hat_t - x_t) ||^2
//! L          = lambda L_masked + (1 - lambda) L_unmasked
//! ```

use crate::codec::Codec;
use crate::denoisers::{frame_input, Activation, Affine, FrameDenoiser, ToyDenoiser};
use crate::error::{invalid, Error, Result};
use crate::lora::{AdaptedDenoiser, LoraAdapter};
use crate::masks::{apply_mask, sample_border_mask, sample_interior_mask, MaskVolume};
use crate::rng::Rng;
use crate::schedule::NoiseSchedule;
use crate::video::Video;

pub const DEFAULT_LAMBDA: f64 = 0.9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DualLoss {
    pub total: f64,
    pub masked: f64,
    pub unmasked: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

fn split_loss(pred: &[f64], target: &[f32], mask: &[f32], lambda: f64) -> DualLoss {
    let (mut masked, mut unmasked) = (0.0, 0.0);
    for ((p, t), m) in pred.iter().zip(target).zip(mask) {
        let e = p - *t as f64;
        if *m == 1.0 {
            masked += e * e;
        } else {
            unmasked += e * e;
        }
    }
    DualLoss { total: lambda * masked + (1.0 - lambda) * unmasked, masked, unmasked }
}

/// Sums over all frames and pixels.
pub fn dual_loss(pred: &Video, target: &Video, mask: &MaskVolume, lambda: f64) -> Result<DualLoss> {
    check_lambda(lambda)?;
    pred.same_geometry(target)?;
    pred.same_geometry(mask.values())?;
    let p: Vec<f64> = pred.data().iter().map(|&v| v as f64).collect();
    Ok(split_loss(&p, target.data(), mask.values().data(), lambda))
}

/// One moving square on a black background.
///
/// Positions wrap around the frame edges, so the square is always fully
/// present (possibly split across an edge).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticClipSpec {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub size: usize,
    /// Rows and columns moved per frame.
    pub velocity: (i64, i64),
    pub intensity: f32,
    /// Top-left corner in frame 0.
    pub origin: (usize, usize),
}

pub fn make_synthetic_clip(spec: &SyntheticClipSpec) -> Result<Video> {
    if spec.size == 0 || spec.size > spec.height || spec.size > spec.width {
        return Err(invalid(format!(
            "square of side {} does not fit a {}x{} frame",
            spec.size, spec.height, spec.width
        )));
    }
    if !(0.0..=1.0).contains(&spec.intensity) {
        return Err(invalid("intensity must lie in [0, 1]"));
    }
    let mut v = Video::zeros(spec.frames, spec.height, spec.width)?;
    let (h, w) = (spec.height as i64, spec.width as i64);
    for t in 0..spec.frames {
        let top = (spec.origin.0 as i64 + spec.velocity.0 * t as i64).rem_euclid(h);
        let left = (spec.origin.1 as i64 + spec.velocity.1 * t as i64).rem_euclid(w);
        for dy in 0..spec.size as i64 {
            for dx in 0..spec.size as i64 {
                let y = ((top + dy) % h) as usize;
                let x = ((left + dx) % w) as usize;
                v.set(t, y, x, spec.intensity);
            }
        }
    }
    Ok(v)
}

/// Random moving-square clips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClipDistribution {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub size: (usize, usize),
    pub max_speed: i64,
    pub intensity: (f32, f32),
}

impl Default for ClipDistribution {
    fn default() -> Self {
        Self { frames: 4, height: 8, width: 8, size: (2, 4), max_speed: 1, intensity: (0.5, 1.0) }
    }
}

impl ClipDistribution {
    pub fn sample(&self, rng: &mut Rng) -> SyntheticClipSpec {
        let size = rng.int_in(self.size.0 as i64, self.size.1 as i64) as usize;
        SyntheticClipSpec {
            frames: self.frames,
            height: self.height,
            width: self.width,
            size,
            velocity: (rng.int_in(-self.max_speed, self.max_speed), rng.int_in(-self.max_speed, self.max_speed)),
            intensity: rng.uniform_in(self.intensity.0 as f64, self.intensity.1 as f64) as f32,
            origin: (rng.below(self.height), rng.below(self.width)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MaskMix {
    /// Border or interior with probability one half each.
    #[default]
    Alternate,
    Border,
    Interior,
    /// Every pixel is a hole; plain unconditional denoising.
    Full,
}

impl MaskMix {
    pub fn name(self) -> &'static str {
        match self {
            MaskMix::Alternate => "alternate",
            MaskMix::Border => "border",
            MaskMix::Interior => "interior",
            MaskMix::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alternate" => Ok(MaskMix::Alternate),
            "border" => Ok(MaskMix::Border),
            "interior" => Ok(MaskMix::Interior),
            "full" => Ok(MaskMix::Full),
            _ => Err(invalid(format!("unknown mask mix `{s}`"))),
        }
    }

    pub fn sample(self, rng: &mut Rng, height: usize, width: usize, frames: usize) -> Result<MaskVolume> {
        match self {
            MaskMix::Alternate => {
                if rng.coin() {
                    sample_border_mask(rng, height, width, frames)
                } else {
                    sample_interior_mask(rng, height, width, frames)
                }
            }
            MaskMix::Border => sample_border_mask(rng, height, width, frames),
            MaskMix::Interior => sample_interior_mask(rng, height, width, frames),
            MaskMix::Full => MaskVolume::ones(frames, height, width),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub clip: Video,
    pub mask: MaskVolume,
    pub level: f64,
    /// Standard normal noise of latent size.
    pub noise: Vec<f32>,
}

pub fn draw_sample(
    data: &ClipDistribution,
    mix: MaskMix,
    schedule: &NoiseSchedule,
    codec: Codec,
    rng: &mut Rng,
) -> Result<TrainingSample> {
    let clip = make_synthetic_clip(&data.sample(rng))?;
    let mask = mix.sample(rng, data.height, data.width, data.frames)?;
    let levels = &schedule.levels()[..schedule.steps()];
    let level = levels[rng.below(levels.len())];
    let (lh, lw) = codec.latent_size(data.height, data.width)?;
    let noise = rng.normal_vec(data.frames * lh * lw);
    Ok(TrainingSample { clip, mask, level, noise })
}

/// Model inputs for one sample, all in latent space.
#[derive(Clone, Debug)]
struct Prepared {
    state: Vec<f32>,
    mask: Vec<f32>,
    ctx: Vec<f32>,
    frames: usize,
    dim: usize,
    latent: (usize, usize),
}

fn prepare(sample: &TrainingSample, codec: Codec) -> Result<Prepared> {
    let z = codec.encode(&sample.clip)?;
    let ctx = codec.encode(&apply_mask(&sample.clip, &sample.mask)?)?;
    let m = codec.encode_mask(&sample.mask)?;
    if sample.noise.len() != z.data().len() {
        return Err(invalid("noise length does not match the latent clip"));
    }
    let t = sample.level;
    let state = z
        .data()
        .iter()
        .zip(m.values().data())
        .zip(&sample.noise)
        .map(|((zv, mv), e)| {
            if *mv == 1.0 {
                ((1.0 - t) * *zv as f64 + t * *e as f64) as f32
            } else {
                *zv
            }
        })
        .collect();
    Ok(Prepared {
        state,
        mask: m.values().data().to_vec(),
        ctx: ctx.data().to_vec(),
        frames: z.frames(),
        dim: z.frame_len(),
        latent: (z.height(), z.width()),
    })
}

/// Unrounded decoded one-step reconstruction.
fn reconstruct_f64<M: FrameDenoiser + ?Sized>(model: &M, p: &Prepared, level: f64, codec: Codec) -> Vec<f64> {
    let d = p.dim;
    let mut zhat = Vec::with_capacity(p.frames * d);
    for f in 0..p.frames {
        let r = f * d..(f + 1) * d;
        let y = model.forward_frame(&p.state[r.clone()], &p.mask[r.clone()], &p.ctx[r.clone()], level);
        zhat.extend(p.state[r].iter().zip(y).map(|(s, k)| *s as f64 + level * k));
    }
    codec.decode_f64(&zhat, p.frames, p.latent.0, p.latent.1)
}

/// The decoded one-step reconstruction `x_hat` for a sample.
pub fn reconstruct<M: FrameDenoiser + ?Sized>(model: &M, sample: &TrainingSample, codec: Codec) -> Result<Video> {
    if model.dim() != codec.latent_size(sample.clip.height(), sample.clip.width()).map(|(h, w)| h * w)? {
        return Err(invalid("model dimension does not match the sample"));
    }
    let p = prepare(sample, codec)?;
    let x = reconstruct_f64(model, &p, sample.level, codec);
    let c = &sample.clip;
    Video::new(c.frames(), c.height(), c.width(), x.into_iter().map(|v| v as f32).collect())
}

/// Dual loss of the one-step reconstruction, computed without intermediate rounding.
pub fn sample_loss<M: FrameDenoiser + ?Sized>(
    model: &M,
    sample: &TrainingSample,
    lambda: f64,
    codec: Codec,
) -> Result<DualLoss> {
    check_lambda(lambda)?;
    let p = prepare(sample, codec)?;
    let x = reconstruct_f64(model, &p, sample.level, codec);
    Ok(split_loss(&x, sample.clip.data(), sample.mask.values().data(), lambda))
}

/// Gradients keyed like [`AdaptedDenoiser::trainable_params`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub entries: Vec<(String, Vec<f64>)>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, g)| g.as_slice())
    }
}

struct LayerGrads {
    weight: Vec<f64>,
    bias: Vec<f64>,
}

struct AdapterGrads {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Reverse-mode pass through one frame's forward computation.
struct Backprop<'a> {
    layers: &'a [Affine],
    adapters: &'a [Option<LoraAdapter>],
    activation: Activation,
    base: Option<Vec<LayerGrads>>,
    lora: Vec<Option<AdapterGrads>>,
}

impl<'a> Backprop<'a> {
    fn new(layers: &'a [Affine], adapters: &'a [Option<LoraAdapter>], activation: Activation, want_base: bool) -> Self {
        let base = want_base.then(|| {
            layers
                .iter()
                .map(|l| LayerGrads { weight: vec![0.0; l.weight.len()], bias: vec![0.0; l.bias.len()] })
                .collect()
        });
        let lora = adapters
            .iter()
            .map(|a| a.as_ref().map(|a| AdapterGrads { a: vec![0.0; a.a.len()], b: vec![0.0; a.b.len()] }))
            .collect();
        Self { layers, adapters, activation, base, lora }
    }

    /// Forward with caches, then accumulate gradients for output gradient `dy`.
    /// `dy` is produced from the forward output by `out_grad`.
    fn frame(&mut self, input: Vec<f64>, out_grad: impl FnOnce(&[f64]) -> Vec<f64>) {
        let n = self.layers.len();
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut proj: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
        let mut h = input;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(&h);
            let p = self.adapters.get(i).and_then(|a| a.as_ref()).map(|a| {
                let p = a.project(&h);
                a.expand_into(&p, &mut z);
                p
            });
            inputs.push(h);
            proj.push(p);
            h = if i + 1 == n { z.clone() } else { z.iter().map(|v| self.activation.apply(*v)).collect() };
            pre.push(z);
        }
        let mut dz = out_grad(&h);
        for i in (0..n).rev() {
            let hin = &inputs[i];
            let layer = &self.layers[i];
            if let Some(base) = &mut self.base {
                let g = &mut base[i];
                let k = layer.inputs();
                for (r, d) in dz.iter().enumerate() {
                    g.bias[r] += d;
                    for (gw, x) in g.weight[r * k..(r + 1) * k].iter_mut().zip(hin) {
                        *gw += d * x;
                    }
                }
            }
            let mut dh = if i > 0 { layer.backward_input(&dz) } else { Vec::new() };
            if let (Some(ad), Some(p)) = (self.adapters.get(i).and_then(|a| a.as_ref()), &proj[i]) {
                let g = self.lora[i].as_mut().expect("slot");
                let (r, k, s) = (ad.rank(), ad.inputs(), ad.scale as f64);
                let b = ad.b.data();
                // u = s B^T dz
                let mut u = vec![0.0; r];
                for (row, d) in b.chunks_exact(r).zip(&dz) {
                    for (uq, bv) in u.iter_mut().zip(row) {
                        *uq += s * *bv as f64 * d;
                    }
                }
                for (row, d) in g.b.chunks_exact_mut(r).zip(&dz) {
                    for (gb, pq) in row.iter_mut().zip(p) {
                        *gb += s * d * pq;
                    }
                }
                for (q, uq) in u.iter().enumerate() {
                    for (ga, x) in g.a[q * k..(q + 1) * k].iter_mut().zip(hin) {
                        *ga += uq * x;
                    }
                }
                if i > 0 {
                    let a = ad.a.data();
                    for (q, uq) in u.iter().enumerate() {
                        for (o, av) in dh.iter_mut().zip(&a[q * k..(q + 1) * k]) {
                            *o += uq * *av as f64;
                        }
                    }
                }
            }
            if i > 0 {
                dz = dh
                    .iter()
                    .zip(&pre[i - 1])
                    .map(|(g, z)| g * self.activation.derivative(*z))
                    .collect();
            }
        }
    }
}

/// Loss and its gradient for the whole sample; the output-gradient chain is
/// `dL/dx_hat -> decoder adjoint -> times t -> network`.
fn backprop_sample(bp: &mut Backprop<'_>, p: &Prepared, sample: &TrainingSample, lambda: f64, codec: Codec) -> DualLoss {
    let t = sample.level;
    // forward pass once to get x_hat for the loss and its gradient
    let d = p.dim;
    let mut outputs = Vec::with_capacity(p.frames);
    let mut zhat = Vec::with_capacity(p.frames * d);
    for f in 0..p.frames {
        let r = f * d..(f + 1) * d;
        let input = frame_input(&p.state[r.clone()], &p.mask[r.clone()], &p.ctx[r.clone()], t);
        let y = forward_plain(bp.layers, bp.adapters, bp.activation, &input);
        zhat.extend(p.state[r].iter().zip(&y).map(|(s, k)| *s as f64 + t * k));
        outputs.push(input);
    }
    let (fh, lh, lw) = (p.frames, p.latent.0, p.latent.1);
    let xhat = codec.decode_f64(&zhat, fh, lh, lw);
    let target = sample.clip.data();
    let mask = sample.mask.values().data();
    let loss = split_loss(&xhat, target, mask, lambda);
    let gx: Vec<f64> = xhat
        .iter()
        .zip(target)
        .zip(mask)
        .map(|((xh, x), m)| {
            let w = if *m == 1.0 { lambda } else { 1.0 - lambda };
            2.0 * w * (xh - *x as f64)
        })
        .collect();
    let gz = codec.decode_adjoint(&gx, fh, sample.clip.height(), sample.clip.width());
    for (f, input) in outputs.into_iter().enumerate() {
        let g: Vec<f64> = gz[f * d..(f + 1) * d].iter().map(|v| t * v).collect();
        bp.frame(input, move |_| g);
    }
    loss
}

fn forward_plain(layers: &[Affine], adapters: &[Option<LoraAdapter>], act: Activation, input: &[f64]) -> Vec<f64> {
    let n = layers.len();
    let mut h = input.to_vec();
    for (i, layer) in layers.iter().enumerate() {
        let mut z = layer.forward(&h);
        if let Some(a) = adapters.get(i).and_then(|a| a.as_ref()) {
            a.expand_into(&a.project(&h), &mut z);
        }
        if i + 1 != n {
            z.iter_mut().for_each(|v| *v = act.apply(*v));
        }
        h = z;
    }
    h
}

/// Gradient of the dual loss for the adapter factors only.
pub fn grad_dual_loss(
    model: &AdaptedDenoiser,
    sample: &TrainingSample,
    lambda: f64,
    codec: Codec,
) -> Result<(DualLoss, Gradients)> {
    check_lambda(lambda)?;
    if model.is_merged() {
        return Err(invalid("gradients need an unmerged model"));
    }
    let p = prepare(sample, codec)?;
    if p.dim != model.dim() {
        return Err(invalid("model dimension does not match the sample"));
    }
    let mut bp = Backprop::new(model.base().layers(), model.adapter_slots(), model.base().activation(), false);
    let loss = backprop_sample(&mut bp, &p, sample, lambda, codec);
    let mut entries = Vec::new();
    for (slot, g) in model.adapter_slots().iter().zip(bp.lora) {
        if let (Some(a), Some(g)) = (slot, g) {
            entries.push((format!("layer{}.A", a.layer), g.a));
            entries.push((format!("layer{}.B", a.layer), g.b));
        }
    }
    Ok((loss, Gradients { entries }))
}

/// Gradient of the dual loss for every weight and bias of a bare model,
/// keyed `layer<i>.weight` / `layer<i>.bias`.
pub fn grad_base(model: &ToyDenoiser, sample: &TrainingSample, lambda: f64, codec: Codec) -> Result<(DualLoss, Gradients)> {
    check_lambda(lambda)?;
    let p = prepare(sample, codec)?;
    if p.dim != model.dim() {
        return Err(invalid("model dimension does not match the sample"));
    }
    let mut bp = Backprop::new(model.layers(), &[], model.activation(), true);
    let loss = backprop_sample(&mut bp, &p, sample, lambda, codec);
    let mut entries = Vec::new();
    for (i, g) in bp.base.expect("requested").into_iter().enumerate() {
        entries.push((format!("layer{i}.weight"), g.weight));
        entries.push((format!("layer{i}.bias"), g.bias));
    }
    Ok((loss, Gradients { entries }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub steps: usize,
    pub lr: f64,
    /// Heavy-ball coefficient; 0 is plain SGD.
    pub momentum: f64,
    pub mask_mix: MaskMix,
    pub data: ClipDistribution,
    /// Noise levels are drawn from this schedule's non-zero levels.
    pub schedule: NoiseSchedule,
    pub codec: Codec,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            steps: 500,
            lr: 1e-2,
            momentum: 0.0,
            mask_mix: MaskMix::Alternate,
            data: ClipDistribution::default(),
            schedule: NoiseSchedule::default(),
            codec: Codec::Identity,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.lr > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid("momentum must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRow {
    pub step: usize,
    pub loss: DualLoss,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub rows: Vec<LossRow>,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,total,masked,unmasked\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", r.step, r.loss.total, r.loss.masked, r.loss.unmasked));
        }
        s
    }
}

fn sgd_update(params: Vec<&mut crate::tensor::Tensor>, grads: &[Vec<f64>], velocity: &mut [Vec<f64>], lr: f64, momentum: f64) {
    for ((p, g), v) in params.into_iter().zip(grads).zip(velocity.iter_mut()) {
        for ((w, gi), vi) in p.data_mut().iter_mut().zip(g).zip(v.iter_mut()) {
            *vi = momentum * *vi + gi;
            *w = (*w as f64 - lr * *vi) as f32;
        }
    }
}

/// SGD on the adapter factors. The base network is never touched.
pub fn train(model: &mut AdaptedDenoiser, cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(model, cfg, |rng| draw_sample(&cfg.data, cfg.mask_mix, &cfg.schedule, cfg.codec, rng))
}

/// [`train`] on samples from a caller-supplied generator; `cfg.data` and
/// `cfg.mask_mix` are ignored.
pub fn train_with(
    model: &mut AdaptedDenoiser,
    cfg: &TrainConfig,
    mut next: impl FnMut(&mut Rng) -> Result<TrainingSample>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let mut velocity: Vec<Vec<f64>> = model.trainable_params().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
    let mut report = TrainReport::default();
    for step in 0..cfg.steps {
        let sample = next(&mut rng)?;
        let (loss, grads) = grad_dual_loss(model, &sample, cfg.lambda, cfg.codec)?;
        if !loss.total.is_finite() || grads.entries.iter().any(|(_, g)| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { step });
        }
        let g: Vec<Vec<f64>> = grads.entries.into_iter().map(|(_, g)| g).collect();
        let params = model.trainable_params_mut().into_iter().map(|(_, t)| t).collect();
        sgd_update(params, &g, &mut velocity, cfg.lr, cfg.momentum);
        if model.trainable_params().iter().any(|(_, t)| !t.is_finite()) {
            return Err(Error::Diverged { step });
        }
        report.rows.push(LossRow { step, loss });
    }
    Ok(report)
}

/// Full-parameter SGD on a bare model, used to give the frozen base a
/// denoising ability before adapters are attached.
pub fn pretrain_base(model: &mut ToyDenoiser, cfg: &TrainConfig) -> Result<TrainReport> {
    pretrain_base_with(model, cfg, |rng| draw_sample(&cfg.data, cfg.mask_mix, &cfg.schedule, cfg.codec, rng))
}

pub fn pretrain_base_with(
    model: &mut ToyDenoiser,
    cfg: &TrainConfig,
    mut next: impl FnMut(&mut Rng) -> Result<TrainingSample>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let mut velocity: Vec<Vec<f64>> = model
        .layers()
        .iter()
        .flat_map(|l| [vec![0.0; l.weight.len()], vec![0.0; l.bias.len()]])
        .collect();
    let mut report = TrainReport::default();
    for step in 0..cfg.steps {
        let sample = next(&mut rng)?;
        let (loss, grads) = grad_base(model, &sample, cfg.lambda, cfg.codec)?;
        if !loss.total.is_finite() {
            return Err(Error::Diverged { step });
        }
        let g: Vec<Vec<f64>> = grads.entries.into_iter().map(|(_, g)| g).collect();
        let params = model.layers_mut().iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect();
        sgd_update(params, &g, &mut velocity, cfg.lr, cfg.momentum);
        if model.layers().iter().any(|l| !l.weight.is_finite() || !l.bias.is_finite()) {
            return Err(Error::Diverged { step });
        }
        report.rows.push(LossRow { step, loss });
    }
    Ok(report)
}

/// Mean squared error per pixel inside and outside the hole.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegionMse {
    pub masked: f64,
    pub unmasked: f64,
}

/// One-step reconstruction error over a fixed set of samples.
pub fn evaluate_regions<M: FrameDenoiser + ?Sized>(model: &M, samples: &[TrainingSample], codec: Codec) -> Result<RegionMse> {
    let (mut sm, mut nm, mut su, mut nu) = (0.0, 0usize, 0.0, 0usize);
    for s in samples {
        let l = sample_loss(model, s, 0.5, codec)?;
        let holes = s.mask.hole_count();
        sm += l.masked;
        nm += holes;
        su += l.unmasked;
        nu += s.mask.values().data().len() - holes;
    }
    Ok(RegionMse {
        masked: if nm > 0 { sm / nm as f64 } else { 0.0 },
        unmasked: if nu > 0 { su / nu as f64 } else { 0.0 },
    })
}

/// Mean dual loss over a fixed set of samples.
pub fn mean_loss<M: FrameDenoiser + ?Sized>(model: &M, samples: &[TrainingSample], lambda: f64, codec: Codec) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += sample_loss(model, s, lambda, codec)?.total;
    }
    Ok(total / samples.len().max(1) as f64)
}
