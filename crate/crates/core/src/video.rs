//! Grayscale frame stacks.

use crate::error::{invalid, Result};
use crate::tensor::{LatentSequence, Tensor};

/// `frames` grayscale images of `height x width`, row-major, frame-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    frames: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Video {
    pub fn new(frames: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(invalid("video dimensions must be positive"));
        }
        if data.len() != frames * height * width {
            return Err(invalid(format!(
                "{}x{}x{} video needs {} values, got {}",
                frames,
                height,
                width,
                frames * height * width,
                data.len()
            )));
        }
        Ok(Self { frames, height, width, data })
    }

    pub fn zeros(frames: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(frames, height, width, vec![0.0; frames * height * width])
    }

    pub fn from_frames(height: usize, width: usize, frames: &[Vec<f32>]) -> Result<Self> {
        let data = frames.concat();
        Self::new(frames.len(), height, width, data)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        let n = self.frame_len();
        &mut self.data[t * n..(t + 1) * n]
    }

    pub fn at(&self, t: usize, y: usize, x: usize) -> f32 {
        self.data[(t * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, t: usize, y: usize, x: usize, v: f32) {
        self.data[(t * self.height + y) * self.width + x] = v;
    }

    pub fn same_geometry(&self, other: &Video) -> Result<()> {
        if (self.frames, self.height, self.width) == (other.frames, other.height, other.width) {
            Ok(())
        } else {
            Err(invalid(format!(
                "geometry {}x{}x{} vs {}x{}x{}",
                self.frames, self.height, self.width, other.frames, other.height, other.width
            )))
        }
    }

    /// Flattens each frame into one latent row.
    pub fn to_latents(&self) -> LatentSequence {
        LatentSequence::new(self.frames, self.frame_len(), self.data.clone()).expect("non-empty")
    }

    pub fn from_latents(seq: &LatentSequence, height: usize, width: usize) -> Result<Self> {
        if seq.dim() != height * width {
            return Err(invalid(format!(
                "latent dim {} is not {height}x{width}",
                seq.dim()
            )));
        }
        Self::new(seq.frames(), height, width, seq.as_tensor().data().to_vec())
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.frames, self.height, self.width], self.data.clone()).expect("sized")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match *t.shape() {
            [f, h, w] => Self::new(f, h, w, t.data().to_vec()),
            _ => Err(invalid(format!("expected [T, H, W], got {:?}", t.shape()))),
        }
    }
}
