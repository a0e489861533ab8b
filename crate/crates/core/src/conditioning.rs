//! Mask-conditioned inpainting and outpainting.
//!
//! Both tasks run through one path. Outpainting zero-pads the frames and uses
//! the padded border as the hole, after which it is an inpainting request.
//! The hole starts from noise at the schedule's top level, the context region
//! starts from the encoded masked frames, and the encoded masked frames are
//! also fed to the model as a fixed conditioning channel. After the last step
//! every context pixel is copied back from the input.

use crate::codec::Codec;
use crate::denoisers::{ConditionedField, FrameDenoiser};
use crate::error::{invalid, Result};
use crate::masks::{apply_mask, pad_for_outpaint, MaskVolume, PadSpec};
use crate::orchestrator::{codenoise, CoDenoiseConfig, RunStats};
use crate::rng::Rng;
use crate::tensor::LatentSequence;
use crate::video::Video;

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    Inpaint(MaskVolume),
    Outpaint(PadSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EditRequest {
    pub frames: Video,
    pub task: Task,
    pub config: CoDenoiseConfig,
    pub codec: Codec,
    pub seed: u64,
}

/// Encoded context and the masks in both spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct EditContext {
    /// Pixel frames the output is built on (padded for outpainting).
    pub source: Video,
    pub pixel_mask: MaskVolume,
    pub latent_mask: MaskVolume,
    /// Encoded masked frames.
    pub context: Video,
}

impl EditRequest {
    pub fn inpaint(frames: Video, mask: MaskVolume, config: CoDenoiseConfig, seed: u64) -> Self {
        Self { frames, task: Task::Inpaint(mask), config, codec: Codec::Identity, seed }
    }

    pub fn outpaint(frames: Video, pad: PadSpec, config: CoDenoiseConfig, seed: u64) -> Self {
        Self { frames, task: Task::Outpaint(pad), config, codec: Codec::Identity, seed }
    }

    pub fn with_codec(mut self, codec: Codec) -> Self {
        self.codec = codec;
        self
    }
}

pub fn build_context(req: &EditRequest) -> Result<EditContext> {
    let (source, pixel_mask) = match &req.task {
        Task::Inpaint(mask) => {
            let mask = mask.repeat_to(req.frames.frames())?;
            req.frames.same_geometry(mask.values())?;
            (req.frames.clone(), mask)
        }
        Task::Outpaint(spec) => pad_for_outpaint(&req.frames, spec)?,
    };
    req.codec.latent_size(source.height(), source.width())?;
    let context = req.codec.encode(&apply_mask(&source, &pixel_mask)?)?;
    let latent_mask = req.codec.encode_mask(&pixel_mask)?;
    Ok(EditContext { source, pixel_mask, latent_mask, context })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EditOutput {
    pub frames: Video,
    pub mask: MaskVolume,
    /// Decoded model output before context pixels are restored.
    pub raw: Video,
    pub stats: RunStats,
}

/// Initial latent state: noise scaled by `t_max` in the hole, context elsewhere.
pub fn initial_state(ctx: &EditContext, t_max: f64, seed: u64) -> LatentSequence {
    let mut rng = Rng::new(seed);
    let z = ctx.context.to_latents();
    let m = ctx.latent_mask.values().to_latents();
    let noise = rng.normal_vec(z.as_tensor().len());
    let data = z
        .as_tensor()
        .data()
        .iter()
        .zip(m.as_tensor().data())
        .zip(&noise)
        .map(|((zv, mv), e)| if *mv == 1.0 { (t_max * *e as f64) as f32 } else { *zv })
        .collect();
    LatentSequence::new(z.frames(), z.dim(), data).expect("same size")
}

pub fn run_edit<M: FrameDenoiser + ?Sized>(req: &EditRequest, model: &M) -> Result<EditOutput> {
    let ctx = build_context(req)?;
    let (lh, lw) = (ctx.context.height(), ctx.context.width());
    if model.dim() != lh * lw {
        return Err(invalid(format!(
            "model dimension {} does not match latent frames {lh}x{lw}",
            model.dim()
        )));
    }
    let cfg = req.config.fitted_to(ctx.source.frames());
    let init = initial_state(&ctx, cfg.schedule.t_max(), req.seed);
    let mask_seq = ctx.latent_mask.values().to_latents();
    let ctx_seq = ctx.context.to_latents();
    let field = ConditionedField::new(model, &mask_seq, &ctx_seq)?;
    let (z0, stats) = codenoise(init, &field, &cfg)?;
    let raw = req.codec.decode(&Video::from_latents(&z0, lh, lw)?)?;
    let mut frames = raw.clone();
    for ((o, s), m) in frames
        .data_mut()
        .iter_mut()
        .zip(ctx.source.data())
        .zip(ctx.pixel_mask.values().data())
    {
        if *m == 0.0 {
            *o = *s;
        }
    }
    Ok(EditOutput { frames, mask: ctx.pixel_mask, raw, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::MaskKind;

    fn clip() -> Video {
        Video::new(2, 4, 4, (0..32).map(|i| i as f32 / 32.0).collect()).unwrap()
    }

    #[test]
    fn empty_mask_context_is_input() {
        let req = EditRequest::inpaint(clip(), MaskVolume::zeros(2, 4, 4).unwrap(), CoDenoiseConfig::default(), 0);
        let ctx = build_context(&req).unwrap();
        assert_eq!(ctx.context, clip());
    }

    #[test]
    fn checkerboard_context() {
        let m: Vec<f32> = (0..16).map(|i| ((i / 4 + i % 4) % 2) as f32).collect();
        let mask = MaskVolume::replicate(MaskKind::User, &m, 4, 4, 2).unwrap();
        let req = EditRequest::inpaint(clip(), mask, CoDenoiseConfig::default(), 0);
        let ctx = build_context(&req).unwrap();
        for (i, v) in ctx.context.data().iter().enumerate() {
            let expected = if m[i % 16] == 1.0 { 0.0 } else { clip().data()[i] };
            assert_eq!(*v, expected);
        }
    }

    #[test]
    fn outpaint_context_counts() {
        let x = Video::new(1, 4, 4, vec![0.5; 16]).unwrap();
        let req = EditRequest::outpaint(x, PadSpec::centered(4, 4, 8, 8).unwrap(), CoDenoiseConfig::default(), 0);
        let ctx = build_context(&req).unwrap();
        assert_eq!(ctx.context.data().iter().filter(|&&v| v == 0.0).count(), 48);
        assert_eq!(ctx.latent_mask.hole_count(), 48);
    }

    #[test]
    fn mask_geometry_mismatch() {
        let req = EditRequest::inpaint(clip(), MaskVolume::zeros(2, 4, 5).unwrap(), CoDenoiseConfig::default(), 0);
        assert!(build_context(&req).is_err());
    }
}
