//! Overlapping temporal windows and Hamming-weighted overlap blending.
//!
//! A buffer of `T` frames is covered by windows of length `W` whose starts
//! advance by `W - O`. Window `i` (1-based) starts at `1 + (i-1)(W-O)`, and
//! the plan holds `ceil((T-W)/(W-O)) + 1` windows. When that last start would
//! run past `T` it is pulled back to `T - W + 1`, so every window stays inside
//! the buffer. Per-window outputs are merged frame by frame as a weighted
//! average, each window contributing with the taper weight of the frame's
//! position inside it.

use std::ops::Range;

use crate::error::{invalid, Result};
use crate::tensor::{LatentSequence, Tensor};

pub const HAMMING_ALPHA: f64 = 0.54;
pub const HAMMING_BETA: f64 = 0.46;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowPlan {
    frames: usize,
    window: usize,
    overlap: usize,
    /// 1-based start index of each window.
    starts: Vec<usize>,
}

impl WindowPlan {
    pub fn new(frames: usize, window: usize, overlap: usize) -> Result<Self> {
        if window == 0 || window > frames {
            return Err(invalid(format!("window length {window} must be in 1..={frames}")));
        }
        if overlap >= window {
            return Err(invalid(format!("overlap {overlap} must be smaller than window {window}")));
        }
        let hop = window - overlap;
        let count = (frames - window).div_ceil(hop) + 1;
        let last_start = frames - window + 1;
        let mut starts: Vec<usize> = Vec::with_capacity(count);
        for i in 0..count {
            let s = (1 + i * hop).min(last_start);
            if starts.last() != Some(&s) {
                starts.push(s);
            }
        }
        Ok(Self { frames, window, overlap, starts })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// 0-based frame range of window `i` (0-based).
    pub fn span(&self, i: usize) -> Range<usize> {
        let s = self.starts[i] - 1;
        s..s + self.window
    }

    /// Number of windows containing each frame.
    pub fn coverage(&self) -> Vec<usize> {
        let mut c = vec![0; self.frames];
        for i in 0..self.len() {
            for k in self.span(i) {
                c[k] += 1;
            }
        }
        c
    }

    /// CSV with the window table followed by per-frame coverage counts.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("window,start,end\n");
        for (i, &st) in self.starts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", i + 1, st, st + self.window - 1));
        }
        s.push_str("frame,coverage\n");
        for (k, c) in self.coverage().iter().enumerate() {
            s.push_str(&format!("{},{}\n", k + 1, c));
        }
        s
    }
}

/// Positive per-position blend weights for one window.
#[derive(Clone, Debug, PartialEq)]
pub struct BlendWeights {
    w: Vec<f64>,
}

impl BlendWeights {
    /// `w_j = 0.54 - 0.46 cos(2 pi (j-1) / (W-1))`; a length-1 window gets `[1.0]`.
    pub fn hamming(len: usize) -> Result<Self> {
        match len {
            0 => Err(invalid("window length must be at least 1")),
            1 => Ok(Self { w: vec![1.0] }),
            _ => {
                let denom = (len - 1) as f64;
                // evaluate the first half only so the taper is exactly symmetric
                let w = (0..len)
                    .map(|j| {
                        let j = j.min(len - 1 - j);
                        HAMMING_ALPHA
                            - HAMMING_BETA * (2.0 * std::f64::consts::PI * j as f64 / denom).cos()
                    })
                    .collect();
                Ok(Self { w })
            }
        }
    }

    /// Equal weights; plain averaging of overlaps.
    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("window length must be at least 1"));
        }
        Ok(Self { w: vec![1.0; len] })
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Copies frames `s..s+len-1` (1-based, inclusive) out of `x`.
pub fn extract_window(x: &LatentSequence, start: usize, len: usize) -> Result<Tensor> {
    if start == 0 || len == 0 || start - 1 + len > x.frames() {
        return Err(invalid(format!(
            "window start {start}, length {len} outside 1..={}",
            x.frames()
        )));
    }
    let d = x.dim();
    let lo = (start - 1) * d;
    let data = x.as_tensor().data()[lo..lo + len * d].to_vec();
    Tensor::new(vec![len, d], data)
}

fn check_outputs(
    plan: &WindowPlan,
    weights: &BlendWeights,
    outputs: &[Tensor],
) -> Result<usize> {
    if weights.len() != plan.window() {
        return Err(invalid(format!(
            "{} weights for window length {}",
            weights.len(),
            plan.window()
        )));
    }
    if outputs.len() != plan.len() {
        return Err(invalid(format!("{} outputs for {} windows", outputs.len(), plan.len())));
    }
    let d = outputs[0].row_len();
    for o in outputs {
        if o.shape() != [plan.window(), d] || d == 0 {
            return Err(invalid(format!(
                "window output shape {:?}, expected [{}, {d}]",
                o.shape(),
                plan.window()
            )));
        }
    }
    Ok(d)
}

/// Normalized weighted accumulation of every window output.
pub fn blend_windows(
    plan: &WindowPlan,
    weights: &BlendWeights,
    outputs: &[Tensor],
) -> Result<LatentSequence> {
    let d = check_outputs(plan, weights, outputs)?;
    let t = plan.frames();
    let mut num = vec![0.0f64; t * d];
    let mut den = vec![0.0f64; t];
    for (i, out) in outputs.iter().enumerate() {
        for (j, k) in plan.span(i).enumerate() {
            let w = weights.values()[j];
            den[k] += w;
            for (acc, v) in num[k * d..(k + 1) * d].iter_mut().zip(out.row(j)) {
                *acc += w * *v as f64;
            }
        }
    }
    let data = num
        .chunks_exact(d)
        .zip(&den)
        .flat_map(|(row, &dn)| row.iter().map(move |v| (v / dn) as f32))
        .collect();
    LatentSequence::new(t, d, data)
}

/// Blends window outputs as they arrive, in window order, writing each frame
/// into the destination as soon as no later window can touch it.
///
/// Only the rows shared with windows not yet seen are held back, so the
/// pending state is bounded by the largest overlap rather than by `T`. The
/// arithmetic matches [`blend_windows`] exactly: contributions to a frame are
/// summed in window order in `f64` and divided once.
#[derive(Debug)]
pub struct StreamingBlend<'a> {
    plan: &'a WindowPlan,
    weights: &'a BlendWeights,
    dim: usize,
    next: usize,
    /// First frame (0-based) held in the pending rows.
    pending_start: usize,
    num: Vec<f64>,
    den: Vec<f64>,
    peak_pending_rows: usize,
}

impl<'a> StreamingBlend<'a> {
    pub fn new(plan: &'a WindowPlan, weights: &'a BlendWeights, dim: usize) -> Result<Self> {
        if weights.len() != plan.window() {
            return Err(invalid("weight length differs from window length"));
        }
        Ok(Self {
            plan,
            weights,
            dim,
            next: 0,
            pending_start: 0,
            num: Vec::new(),
            den: Vec::new(),
            peak_pending_rows: 0,
        })
    }

    /// Adds the output of the next window and flushes finished frames into `dest`.
    pub fn push(&mut self, output: &Tensor, dest: &mut LatentSequence) -> Result<()> {
        let i = self.next;
        if i >= self.plan.len() {
            return Err(invalid("more window outputs than windows in the plan"));
        }
        let d = self.dim;
        if output.shape() != [self.plan.window(), d] || dest.dim() != d {
            return Err(invalid(format!("window output shape {:?}", output.shape())));
        }
        let span = self.plan.span(i);
        let needed_rows = span.end - self.pending_start;
        self.num.resize(needed_rows * d, 0.0);
        self.den.resize(needed_rows, 0.0);
        for (j, k) in span.clone().enumerate() {
            let r = k - self.pending_start;
            let w = self.weights.values()[j];
            self.den[r] += w;
            for (acc, v) in self.num[r * d..(r + 1) * d].iter_mut().zip(output.row(j)) {
                *acc += w * *v as f64;
            }
        }
        self.peak_pending_rows = self.peak_pending_rows.max(self.den.len());
        self.next += 1;
        let done_until = if self.next < self.plan.len() {
            self.plan.span(self.next).start
        } else {
            span.end
        };
        self.flush_until(done_until, dest);
        Ok(())
    }

    fn flush_until(&mut self, frame: usize, dest: &mut LatentSequence) {
        let d = self.dim;
        let rows = frame - self.pending_start;
        for r in 0..rows {
            let dn = self.den[r];
            for (o, v) in dest.frame_mut(self.pending_start + r).iter_mut().zip(&self.num[r * d..(r + 1) * d]) {
                *o = (v / dn) as f32;
            }
        }
        self.num.drain(..rows * d);
        self.den.drain(..rows);
        self.pending_start = frame;
    }

    /// Rows currently held back.
    pub fn pending_rows(&self) -> usize {
        self.den.len()
    }

    pub fn peak_pending_rows(&self) -> usize {
        self.peak_pending_rows
    }

    pub fn is_complete(&self) -> bool {
        self.next == self.plan.len() && self.den.is_empty()
    }
}
