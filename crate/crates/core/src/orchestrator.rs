//! The arbitrary-length co-denoising loop.
//!
//! Every schedule step advances each window of the plan with one solver step
//! and merges the results back into the shared buffer before the next step
//! starts. Windows of one step are processed in batches of `workers`; a batch
//! reads the untouched part of the buffer, runs in parallel, and its outputs
//! are then blended in window order. Frames that no later window covers are
//! written back immediately, so the only state besides the buffer is the
//! live batch and the rows still shared with the next window.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::schedule::NoiseSchedule;
use crate::solvers::{step_solver, SlopeField, SolveOptions, Solver};
use crate::tensor::{LatentSequence, Tensor};
use crate::windowing::{extract_window, BlendWeights, StreamingBlend, WindowPlan};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Taper {
    #[default]
    Hamming,
    Uniform,
}

impl Taper {
    pub fn weights(self, len: usize) -> Result<BlendWeights> {
        match self {
            Taper::Hamming => BlendWeights::hamming(len),
            Taper::Uniform => BlendWeights::uniform(len),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoDenoiseConfig {
    pub window: usize,
    pub overlap: usize,
    pub solver: Solver,
    pub schedule: NoiseSchedule,
    pub workers: usize,
    /// Record wall time for every step.
    pub memory_probe: bool,
    pub options: SolveOptions,
    pub taper: Taper,
}

impl Default for CoDenoiseConfig {
    fn default() -> Self {
        Self {
            window: 81,
            overlap: 16,
            solver: Solver::Heun,
            schedule: NoiseSchedule::default(),
            workers: 1,
            memory_probe: false,
            options: SolveOptions::default(),
            taper: Taper::Hamming,
        }
    }
}

impl CoDenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.overlap >= self.window {
            return Err(invalid(format!(
                "need W >= 1 and 0 <= O < W, got W = {}, O = {}",
                self.window, self.overlap
            )));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        Ok(())
    }

    /// Same config with the window shrunk to at most `frames`.
    pub fn fitted_to(&self, frames: usize) -> Self {
        let mut c = self.clone();
        if c.window > frames {
            c.window = frames;
            c.overlap = c.overlap.min(frames - 1);
        }
        c
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub windows: usize,
    pub total_steps: usize,
    pub blends: usize,
    pub slope_calls: usize,
    pub peak_live_windows: usize,
    /// Largest number of latent elements held in window buffers at once.
    pub peak_window_elements: usize,
    /// Buffer plus window buffers plus pending blend rows.
    pub peak_resident_elements: usize,
    pub peak_pending_rows: usize,
    pub step_times: Vec<Duration>,
}

struct Serialized<'a, F: SlopeField + ?Sized> {
    inner: &'a F,
    lock: Mutex<()>,
}

impl<F: SlopeField + ?Sized> SlopeField for Serialized<'_, F> {
    fn slope(&self, x: &Tensor, t: f64, first_frame: usize) -> Result<Tensor> {
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        self.inner.slope(x, t, first_frame)
    }
}

/// Denoises `init` from `t_max` to zero with sliding windows.
pub fn codenoise<F: SlopeField + ?Sized>(
    init: LatentSequence,
    field: &F,
    cfg: &CoDenoiseConfig,
) -> Result<(LatentSequence, RunStats)> {
    cfg.validate()?;
    if init.frames() < cfg.window {
        return Err(invalid(format!(
            "sequence of {} frames is shorter than the window {}; use a plain solve",
            init.frames(),
            cfg.window
        )));
    }
    if field.is_reentrant() {
        run(init, field, cfg)
    } else {
        let s = Serialized { inner: field, lock: Mutex::new(()) };
        run(init, &s, cfg)
    }
}

fn run<F: SlopeField + ?Sized>(
    mut x: LatentSequence,
    field: &F,
    cfg: &CoDenoiseConfig,
) -> Result<(LatentSequence, RunStats)> {
    let plan = WindowPlan::new(x.frames(), cfg.window, cfg.overlap)?;
    let weights = cfg.taper.weights(cfg.window)?;
    let d = x.dim();
    let n = cfg.schedule.steps();
    let mut stats = RunStats { windows: plan.len(), ..Default::default() };

    for (step, (t, dt)) in cfg.schedule.gaps().enumerate() {
        let started = Instant::now();
        let solver = step_solver(cfg.solver, step, n, cfg.options);
        let mut blend = StreamingBlend::new(&plan, &weights, d)?;
        let mut first = 0;
        while first < plan.len() {
            let last = (first + cfg.workers).min(plan.len());
            let outputs = advance_batch(&x, &plan, first..last, field, solver, t, dt)
                .map_err(|(w, e)| Error::Step { step, window: Some(w), source: Box::new(e) })?;
            let live = outputs.len();
            stats.peak_live_windows = stats.peak_live_windows.max(live);
            stats.peak_window_elements = stats.peak_window_elements.max(live * cfg.window * d);
            for out in &outputs {
                blend.push(out, &mut x)?;
            }
            first = last;
        }
        debug_assert!(blend.is_complete());
        stats.peak_pending_rows = stats.peak_pending_rows.max(blend.peak_pending_rows());
        stats.peak_resident_elements = stats.peak_resident_elements.max(
            x.frames() * d + stats.peak_window_elements + blend.peak_pending_rows() * (d + 1),
        );
        stats.blends += 1;
        stats.slope_calls += plan.len() * solver.calls_per_step();
        stats.total_steps += 1;
        if cfg.memory_probe {
            stats.step_times.push(started.elapsed());
        }
    }
    Ok((x, stats))
}

type BatchResult = std::result::Result<Vec<Tensor>, (usize, Error)>;

fn advance_batch<F: SlopeField + ?Sized>(
    x: &LatentSequence,
    plan: &WindowPlan,
    range: std::ops::Range<usize>,
    field: &F,
    solver: Solver,
    t: f64,
    dt: f64,
) -> BatchResult {
    let one = |i: usize| -> std::result::Result<Tensor, (usize, Error)> {
        let start = plan.starts()[i];
        let input = extract_window(x, start, plan.window()).map_err(|e| (i, e))?;
        solver.step(&field, &input, t, dt, start - 1).map_err(|e| (i, e))
    };
    if range.len() == 1 {
        return Ok(vec![one(range.start)?]);
    }
    let one = &one;
    std::thread::scope(|s| {
        let handles: Vec<_> = range.map(|i| s.spawn(move || one(i))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("window worker panicked"))
            .collect()
    })
}

/// One row of a scaling probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub frames: usize,
    pub seconds: f64,
    pub peak_window_elements: usize,
    pub windows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingProbe {
    pub rows: Vec<ProbeRow>,
    /// Least-squares line `seconds = intercept + slope * T`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl ScalingProbe {
    pub fn predicted(&self, frames: usize) -> f64 {
        self.intercept + self.slope * frames as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("frames,seconds,peak_window_elements,windows\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.6},{},{}\n", r.frames, r.seconds, r.peak_window_elements, r.windows));
        }
        s.push_str(&format!("# linear fit: slope {:e} s/frame, R^2 {:.4}\n", self.slope, self.r_squared));
        s
    }
}

/// Times [`codenoise`] over several sequence lengths with a frame-independent
/// field. Each length is run `repeats` times and the fastest run is kept.
pub fn scaling_probe<F: SlopeField + ?Sized>(
    field: &F,
    dim: usize,
    cfg: &CoDenoiseConfig,
    lengths: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<ScalingProbe> {
    if lengths.len() < 3 {
        return Err(invalid("a scaling probe needs at least three lengths"));
    }
    let mut rows = Vec::with_capacity(lengths.len());
    for &frames in lengths {
        let mut rng = Rng::new(seed);
        let init = LatentSequence::new(frames, dim, rng.normal_vec(frames * dim))?;
        let mut best = f64::INFINITY;
        let mut stats = RunStats::default();
        for _ in 0..repeats.max(1) {
            let started = Instant::now();
            let (_, s) = codenoise(init.clone(), field, cfg)?;
            best = best.min(started.elapsed().as_secs_f64());
            stats = s;
        }
        rows.push(ProbeRow {
            frames,
            seconds: best,
            peak_window_elements: stats.peak_window_elements,
            windows: stats.windows,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.frames as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let slope = crate::solvers::fit_slope(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ScalingProbe { rows, slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoisers::GaussianOracle;
    use crate::solvers::solve;

    fn seq(frames: usize, dim: usize, seed: u64) -> LatentSequence {
        LatentSequence::new(frames, dim, Rng::new(seed).normal_vec(frames * dim)).unwrap()
    }

    #[test]
    fn rejects_short_sequences_and_bad_configs() {
        let cfg = CoDenoiseConfig { window: 8, overlap: 2, ..Default::default() };
        assert!(codenoise(seq(4, 2, 0), &GaussianOracle::default(), &cfg).is_err());
        let bad = CoDenoiseConfig { window: 4, overlap: 4, ..Default::default() };
        assert!(codenoise(seq(8, 2, 0), &GaussianOracle::default(), &bad).is_err());
        let bad = CoDenoiseConfig { window: 4, overlap: 1, workers: 0, ..Default::default() };
        assert!(codenoise(seq(8, 2, 0), &GaussianOracle::default(), &bad).is_err());
    }

    #[test]
    fn single_window_equals_plain_solve() {
        let sched = NoiseSchedule::linear(1.0, 10).unwrap();
        let cfg = CoDenoiseConfig { window: 6, overlap: 2, schedule: sched.clone(), ..Default::default() };
        let x = seq(6, 3, 1);
        let (out, stats) = codenoise(x.clone(), &GaussianOracle::default(), &cfg).unwrap();
        let plain = solve(&GaussianOracle::default(), x.as_tensor(), &sched, Solver::Heun).unwrap();
        assert_eq!(out.as_tensor(), &plain.state);
        assert_eq!(stats.blends, 10);
        assert_eq!(stats.slope_calls, 20);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let sched = NoiseSchedule::linear(1.0, 5).unwrap();
        let base = CoDenoiseConfig { window: 4, overlap: 1, schedule: sched, ..Default::default() };
        let x = seq(17, 2, 4);
        let (a, _) = codenoise(x.clone(), &GaussianOracle::default(), &base).unwrap();
        let par = CoDenoiseConfig { workers: 3, ..base };
        let (b, stats) = codenoise(x, &GaussianOracle::default(), &par).unwrap();
        assert_eq!(a, b);
        assert_eq!(stats.peak_live_windows, 3);
    }

    #[test]
    fn probe_needs_three_lengths() {
        let cfg = CoDenoiseConfig { window: 2, overlap: 1, ..Default::default() };
        assert!(scaling_probe(&GaussianOracle::default(), 1, &cfg, &[4, 8], 1, 0).is_err());
    }
}
