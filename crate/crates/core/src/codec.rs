//! Stand-ins for the encoder/decoder pair between pixel frames and latents.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::masks::{MaskKind, MaskVolume};
use crate::video::Video;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Codec {
    /// Latents are the pixels.
    #[default]
    Identity,
    /// 2x2 average pooling down, nearest-neighbour upsampling back.
    Pool2,
}

impl Codec {
    pub fn name(self) -> &'static str {
        match self {
            Codec::Identity => "identity",
            Codec::Pool2 => "pool2",
        }
    }

    pub fn latent_size(self, height: usize, width: usize) -> Result<(usize, usize)> {
        match self {
            Codec::Identity => Ok((height, width)),
            Codec::Pool2 => {
                if !height.is_multiple_of(2) || !width.is_multiple_of(2) {
                    return Err(invalid(format!("pool2 needs even frame sizes, got {height}x{width}")));
                }
                Ok((height / 2, width / 2))
            }
        }
    }

    pub fn encode(self, x: &Video) -> Result<Video> {
        match self {
            Codec::Identity => Ok(x.clone()),
            Codec::Pool2 => {
                let (h, w) = self.latent_size(x.height(), x.width())?;
                let mut out = Video::zeros(x.frames(), h, w)?;
                for t in 0..x.frames() {
                    for y in 0..h {
                        for c in 0..w {
                            let s = x.at(t, 2 * y, 2 * c) as f64
                                + x.at(t, 2 * y, 2 * c + 1) as f64
                                + x.at(t, 2 * y + 1, 2 * c) as f64
                                + x.at(t, 2 * y + 1, 2 * c + 1) as f64;
                            out.set(t, y, c, (s * 0.25) as f32);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn decode(self, z: &Video) -> Result<Video> {
        match self {
            Codec::Identity => Ok(z.clone()),
            Codec::Pool2 => {
                let mut out = Video::zeros(z.frames(), 2 * z.height(), 2 * z.width())?;
                for t in 0..z.frames() {
                    for y in 0..out.height() {
                        for c in 0..out.width() {
                            out.set(t, y, c, z.at(t, y / 2, c / 2));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// [`decode`](Self::decode) on an unrounded latent buffer of `frames x h x w`.
    pub fn decode_f64(self, z: &[f64], frames: usize, h: usize, w: usize) -> Vec<f64> {
        match self {
            Codec::Identity => z.to_vec(),
            Codec::Pool2 => {
                let (ph, pw) = (2 * h, 2 * w);
                let mut out = Vec::with_capacity(frames * ph * pw);
                for t in 0..frames {
                    for y in 0..ph {
                        for c in 0..pw {
                            out.push(z[(t * h + y / 2) * w + c / 2]);
                        }
                    }
                }
                out
            }
        }
    }

    /// Adjoint of [`decode`](Self::decode) applied to a pixel-space gradient.
    pub fn decode_adjoint(self, g: &[f64], frames: usize, height: usize, width: usize) -> Vec<f64> {
        match self {
            Codec::Identity => g.to_vec(),
            Codec::Pool2 => {
                let (h, w) = (height / 2, width / 2);
                let mut out = vec![0.0; frames * h * w];
                for t in 0..frames {
                    for y in 0..height {
                        for c in 0..width {
                            out[(t * h + y / 2) * w + c / 2] += g[(t * height + y) * width + c];
                        }
                    }
                }
                out
            }
        }
    }

    /// The mask in latent space: pooled, then `>= 0.5` becomes a hole.
    pub fn encode_mask(self, m: &MaskVolume) -> Result<MaskVolume> {
        match self {
            Codec::Identity => Ok(m.clone()),
            Codec::Pool2 => {
                let pooled = self.encode(m.values())?;
                let data = pooled.data().iter().map(|&v| if v >= 0.5 { 1.0 } else { 0.0 }).collect();
                let v = Video::new(pooled.frames(), pooled.height(), pooled.width(), data)?;
                Ok(MaskVolume::new(MaskKind::User, v)?.with_kind(m.kind()))
            }
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Codec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Codec::Identity),
            "pool2" => Ok(Codec::Pool2),
            _ => Err(invalid(format!("unknown codec `{s}`"))),
        }
    }
}
