//! Dense row-major `f32` arrays.

use crate::error::{invalid, Error, Result};

/// A dense row-major array of `f32` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    /// Builds a tensor, checking that the payload length matches the shape.
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(invalid(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn full(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![value; n] }
    }

    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> f32) -> Self {
        let n: usize = shape.iter().product();
        Self { data: (0..n).map(&mut f).collect(), shape }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Number of elements in one slice along the leading axis.
    pub fn row_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let n = self.row_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        let n = self.row_len();
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Fails with a numeric error naming `context` if any element is NaN or infinite.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric { context: context.to_string() })
        }
    }

    pub fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape, other.shape
            )))
        }
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a as f64 - *b as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| (*v as f64).abs()).fold(0.0, f64::max)
    }

    /// FNV-1a over the raw bit patterns; used to detect any change in a weight buffer.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.data {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// The full latent buffer: `frames` rows of `dim` values each.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentSequence {
    buffer: Tensor,
}

impl LatentSequence {
    pub fn new(frames: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if frames == 0 || dim == 0 {
            return Err(invalid("latent sequence needs at least one frame and one dimension"));
        }
        Ok(Self { buffer: Tensor::new(vec![frames, dim], data)? })
    }

    pub fn zeros(frames: usize, dim: usize) -> Result<Self> {
        Self::new(frames, dim, vec![0.0; frames * dim])
    }

    /// Wraps a rank-2 tensor `[T, d]`.
    pub fn from_tensor(t: Tensor) -> Result<Self> {
        match *t.shape() {
            [frames, dim] if frames > 0 && dim > 0 => Ok(Self { buffer: t }),
            _ => Err(invalid(format!("expected a [T, d] tensor, got {:?}", t.shape()))),
        }
    }

    pub fn frames(&self) -> usize {
        self.buffer.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.buffer.shape()[1]
    }

    pub fn frame(&self, k: usize) -> &[f32] {
        self.buffer.row(k)
    }

    pub fn frame_mut(&mut self, k: usize) -> &mut [f32] {
        self.buffer.row_mut(k)
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.buffer
    }

    pub fn into_tensor(self) -> Tensor {
        self.buffer
    }

    /// Reverses the frame axis.
    pub fn reversed(&self) -> Self {
        let (t, d) = (self.frames(), self.dim());
        let mut data = Vec::with_capacity(t * d);
        for k in (0..t).rev() {
            data.extend_from_slice(self.frame(k));
        }
        Self { buffer: Tensor::new(vec![t, d], data).expect("same size") }
    }
}
