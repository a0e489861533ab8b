//! Binary masks for training and inference.
//!
//! Polarity: `1` marks pixels to synthesize, `0` marks preserved context.

use crate::error::{invalid, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::video::Video;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    /// Everything outside a central rectangle.
    Border,
    /// A union of rectangles inside the frame.
    Interior,
    /// Supplied by a user or derived from padding.
    User,
}

impl MaskKind {
    pub fn name(self) -> &'static str {
        match self {
            MaskKind::Border => "border",
            MaskKind::Interior => "interior",
            MaskKind::User => "user",
        }
    }
}

/// Per-frame binary masks of one spatial size.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskVolume {
    kind: MaskKind,
    values: Video,
}

pub const BORDER_ALPHA: (f64, f64) = (0.5, 0.8);
pub const INTERIOR_RECTS: (i64, i64) = (1, 4);
pub const INTERIOR_SIDE: (f64, f64) = (0.1, 0.5);

/// A rectangle `[top, top + height) x [left, left + width)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl MaskVolume {
    /// Wraps a video of 0/1 values; anything else is rejected.
    pub fn new(kind: MaskKind, values: Video) -> Result<Self> {
        if values.data().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(invalid("mask values must be exactly 0 or 1"));
        }
        Ok(Self { kind, values })
    }

    pub fn zeros(frames: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(MaskKind::User, Video::zeros(frames, height, width)?)
    }

    pub fn ones(frames: usize, height: usize, width: usize) -> Result<Self> {
        let v = Video::new(frames, height, width, vec![1.0; frames * height * width])?;
        Self::new(MaskKind::User, v)
    }

    /// The same frame mask repeated over `frames`.
    pub fn replicate(kind: MaskKind, frame: &[f32], height: usize, width: usize, frames: usize) -> Result<Self> {
        let data = frame.repeat(frames);
        Self::new(kind, Video::new(frames, height, width, data)?)
    }

    /// Thresholds an 8-bit image per frame: values `>= 128` become 1.
    pub fn from_gray(frames: &[Vec<u8>], height: usize, width: usize) -> Result<Self> {
        let data = frames
            .iter()
            .flat_map(|f| f.iter().map(|&p| if p >= 128 { 1.0 } else { 0.0 }))
            .collect();
        Self::new(MaskKind::User, Video::new(frames.len(), height, width, data)?)
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: MaskKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn values(&self) -> &Video {
        &self.values
    }

    pub fn frames(&self) -> usize {
        self.values.frames()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        self.values.frame(t)
    }

    pub fn is_hole(&self, t: usize, y: usize, x: usize) -> bool {
        self.values.at(t, y, x) == 1.0
    }

    pub fn hole_count(&self) -> usize {
        self.values.data().iter().filter(|&&v| v == 1.0).count()
    }

    pub fn hole_fraction(&self) -> f64 {
        self.hole_count() as f64 / self.values.data().len() as f64
    }

    /// Serializable `[T, H, W]` tensor of 0.0/1.0.
    pub fn to_tensor(&self) -> Tensor {
        self.values.to_tensor()
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        Self::new(MaskKind::User, Video::from_tensor(t)?)
    }

    /// Frames restricted to `frames` (used when the mask is given for one frame only).
    pub fn repeat_to(&self, frames: usize) -> Result<Self> {
        if self.frames() == frames {
            return Ok(self.clone());
        }
        if self.frames() != 1 {
            return Err(invalid(format!(
                "mask has {} frames, cannot stretch to {frames}",
                self.frames()
            )));
        }
        Self::replicate(self.kind, self.frame(0), self.height(), self.width(), frames)
    }

    /// 8-bit rendering of one frame: holes 255, context 0.
    pub fn frame_gray(&self, t: usize) -> Vec<u8> {
        self.frame(t).iter().map(|&v| if v == 1.0 { 255 } else { 0 }).collect()
    }
}

fn check_size(height: usize, width: usize, frames: usize) -> Result<()> {
    if height < 4 || width < 4 || frames == 0 {
        return Err(invalid(format!("mask size {height}x{width}x{frames} too small")));
    }
    Ok(())
}

/// Border mask with the preserved rectangle covering `floor(alpha_h H) x floor(alpha_w W)`,
/// centered.
pub fn border_mask(height: usize, width: usize, frames: usize, alpha_h: f64, alpha_w: f64) -> Result<MaskVolume> {
    check_size(height, width, frames)?;
    if !(0.0..=1.0).contains(&alpha_h) || !(0.0..=1.0).contains(&alpha_w) {
        return Err(invalid("border fractions must lie in [0, 1]"));
    }
    let h = (alpha_h * height as f64).floor() as usize;
    let w = (alpha_w * width as f64).floor() as usize;
    let (top, left) = ((height - h) / 2, (width - w) / 2);
    let mut frame = vec![1.0f32; height * width];
    for y in top..top + h {
        frame[y * width + left..y * width + left + w].fill(0.0);
    }
    MaskVolume::replicate(MaskKind::Border, &frame, height, width, frames)
}

/// Draws one `alpha` per spatial axis uniformly in `[0.5, 0.8]`.
pub fn sample_border_mask(rng: &mut Rng, height: usize, width: usize, frames: usize) -> Result<MaskVolume> {
    check_size(height, width, frames)?;
    let ah = rng.uniform_in(BORDER_ALPHA.0, BORDER_ALPHA.1);
    let aw = rng.uniform_in(BORDER_ALPHA.0, BORDER_ALPHA.1);
    border_mask(height, width, frames, ah, aw)
}

/// Union of the given rectangles, clipped to the frame.
pub fn interior_mask(height: usize, width: usize, frames: usize, rects: &[Rect]) -> Result<MaskVolume> {
    check_size(height, width, frames)?;
    let mut frame = vec![0.0f32; height * width];
    for r in rects {
        for y in r.top..(r.top + r.height).min(height) {
            for x in r.left..(r.left + r.width).min(width) {
                frame[y * width + x] = 1.0;
            }
        }
    }
    MaskVolume::replicate(MaskKind::Interior, &frame, height, width, frames)
}

/// One rectangle with sides uniform in `[0.1, 0.5]` of each axis at a uniform position.
pub fn sample_rect(rng: &mut Rng, height: usize, width: usize) -> Rect {
    let side = |rng: &mut Rng, n: usize| {
        let u = rng.uniform_in(INTERIOR_SIDE.0, INTERIOR_SIDE.1);
        ((u * n as f64).floor() as usize).max(1)
    };
    let h = side(rng, height);
    let w = side(rng, width);
    let top = rng.below(height - h + 1);
    let left = rng.below(width - w + 1);
    Rect { top, left, height: h, width: w }
}

/// `m` uniform in `{1, 2, 3, 4}` rectangles, static over all frames.
pub fn sample_interior_mask(rng: &mut Rng, height: usize, width: usize, frames: usize) -> Result<MaskVolume> {
    check_size(height, width, frames)?;
    let m = rng.int_in(INTERIOR_RECTS.0, INTERIOR_RECTS.1) as usize;
    let rects: Vec<Rect> = (0..m).map(|_| sample_rect(rng, height, width)).collect();
    interior_mask(height, width, frames, &rects)
}

/// Border or interior with probability one half each.
pub fn sample_training_mask(rng: &mut Rng, height: usize, width: usize, frames: usize) -> Result<MaskVolume> {
    if rng.coin() {
        sample_border_mask(rng, height, width, frames)
    } else {
        sample_interior_mask(rng, height, width, frames)
    }
}

/// `(1 - M) * x`.
pub fn apply_mask(x: &Video, mask: &MaskVolume) -> Result<Video> {
    x.same_geometry(mask.values())?;
    let data = x
        .data()
        .iter()
        .zip(mask.values().data())
        .map(|(v, m)| if *m == 1.0 { 0.0 } else { *v })
        .collect();
    Video::new(x.frames(), x.height(), x.width(), data)
}

/// Target size and placement of the source inside it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PadSpec {
    pub height: usize,
    pub width: usize,
    pub top: usize,
    pub left: usize,
}

impl PadSpec {
    /// Source placed in the middle, rounding offsets down.
    pub fn centered(src_h: usize, src_w: usize, height: usize, width: usize) -> Result<Self> {
        if height < src_h || width < src_w {
            return Err(invalid("pad target is smaller than the source"));
        }
        Ok(Self { height, width, top: (height - src_h) / 2, left: (width - src_w) / 2 })
    }

    pub fn check(&self, src_h: usize, src_w: usize) -> Result<()> {
        if self.top + src_h > self.height || self.left + src_w > self.width {
            return Err(invalid(format!(
                "{src_h}x{src_w} source at ({}, {}) does not fit in {}x{}",
                self.top, self.left, self.height, self.width
            )));
        }
        Ok(())
    }
}

/// Zero-pads every frame and returns the mask of the padded region.
pub fn pad_for_outpaint(z: &Video, spec: &PadSpec) -> Result<(Video, MaskVolume)> {
    spec.check(z.height(), z.width())?;
    let mut out = Video::zeros(z.frames(), spec.height, spec.width)?;
    let mut mask = Video::new(
        z.frames(),
        spec.height,
        spec.width,
        vec![1.0; z.frames() * spec.height * spec.width],
    )?;
    for t in 0..z.frames() {
        for y in 0..z.height() {
            for x in 0..z.width() {
                out.set(t, spec.top + y, spec.left + x, z.at(t, y, x));
                mask.set(t, spec.top + y, spec.left + x, 0.0);
            }
        }
    }
    Ok((out, MaskVolume::new(MaskKind::User, mask)?))
}

/// Inverse of [`pad_for_outpaint`] for the same spec.
pub fn crop(z: &Video, top: usize, left: usize, height: usize, width: usize) -> Result<Video> {
    if top + height > z.height() || left + width > z.width() {
        return Err(invalid("crop window outside the frame"));
    }
    let mut out = Video::zeros(z.frames(), height, width)?;
    for t in 0..z.frames() {
        for y in 0..height {
            for x in 0..width {
                out.set(t, y, x, z.at(t, top + y, left + x));
            }
        }
    }
    Ok(out)
}
