//! ODE steppers for the denoising trajectory.
//!
//! The state moves from `t` to `t - dt` along decreasing noise level, with a
//! [`SlopeField`] giving `x(t - dt) ~ x(t) + dt * f(x, t)`. Four steppers are
//! provided:
//!
//! | solver     | update                                                    | calls |
//! |------------|-----------------------------------------------------------|-------|
//! | `euler`    | `x + dt k1`                                               | 1     |
//! | `heun`     | `k2 = f(x + dt k1, t - dt)`, `x + dt (k1 + k2) / 2`       | 2     |
//! | `paper`    | `k2 = f(x + dt/2 k1, t - dt/2)`, `x + dt (k1 + k2) / 2`   | 2     |
//! | `midpoint` | `k2 = f(x + dt/2 k1, t - dt/2)`, `x + dt k2`              | 2     |
//!
//! `paper` is the half-step predictor combined with trapezoidal averaging.
//! Averaging a full-step slope with a half-step slope leaves an `O(dt^2)`
//! local residual, so it behaves as a first-order method; the convergence
//! harness measures this rather than assuming it.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::schedule::{NoiseSchedule, ScheduleKind};
use crate::tensor::Tensor;

/// A slope along decreasing noise level.
///
/// `x` holds consecutive frames of a longer sequence beginning at frame
/// `first_frame`; fields that condition on per-frame side information use it
/// to find their rows. Output shape must equal input shape.
pub trait SlopeField: Sync {
    fn slope(&self, x: &Tensor, t: f64, first_frame: usize) -> Result<Tensor>;

    /// Whether concurrent calls are allowed. Callers serialize calls to
    /// fields that return `false`.
    fn is_reentrant(&self) -> bool {
        true
    }
}

impl<F: SlopeField + ?Sized> SlopeField for &F {
    fn slope(&self, x: &Tensor, t: f64, first_frame: usize) -> Result<Tensor> {
        (**self).slope(x, t, first_frame)
    }

    fn is_reentrant(&self) -> bool {
        (**self).is_reentrant()
    }
}

/// A field with a known exact trajectory.
pub trait ClosedForm: SlopeField {
    /// State at level `t1` of the trajectory passing through `x0` at `t0`,
    /// unrounded.
    fn exact_f64(&self, x0: &Tensor, t0: f64, t1: f64) -> Vec<f64>;

    fn exact(&self, x0: &Tensor, t0: f64, t1: f64) -> Tensor {
        let data = self.exact_f64(x0, t0, t1).into_iter().map(|v| v as f32).collect();
        Tensor::new(x0.shape().to_vec(), data).expect("same shape")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Solver {
    Euler,
    #[default]
    Heun,
    Paper,
    Midpoint,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Euler, Solver::Heun, Solver::Paper, Solver::Midpoint];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Euler => "euler",
            Solver::Heun => "heun",
            Solver::Paper => "paper",
            Solver::Midpoint => "midpoint",
        }
    }

    pub fn calls_per_step(self) -> usize {
        match self {
            Solver::Euler => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Solver::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| invalid(format!("unknown solver `{s}`")))
    }
}

fn eval(f: &impl SlopeField, x: &Tensor, t: f64, first_frame: usize) -> Result<Tensor> {
    let k = f.slope(x, t, first_frame)?;
    if k.shape() != x.shape() {
        return Err(invalid(format!(
            "slope shape {:?} differs from state shape {:?}",
            k.shape(),
            x.shape()
        )));
    }
    k.check_finite(&format!("slope at t = {t}"))?;
    Ok(k)
}

/// `x + h * k`, evaluated in f64 and rounded once.
fn axpy(x: &Tensor, h: f64, k: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(k.data())
        .map(|(a, b)| (*a as f64 + h * *b as f64) as f32)
        .collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// `x + h * (k1 + k2) / 2`.
fn trapezoid(x: &Tensor, h: f64, k1: &Tensor, k2: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(k1.data().iter().zip(k2.data()))
        .map(|(a, (p, q))| (*a as f64 + h * (*p as f64 + *q as f64) * 0.5) as f32)
        .collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

fn finite(x: Tensor) -> Result<Tensor> {
    x.check_finite("solver state")?;
    Ok(x)
}

pub fn euler_step(f: &impl SlopeField, x: &Tensor, t: f64, dt: f64) -> Result<Tensor> {
    euler_step_at(f, x, t, dt, 0)
}

pub fn heun_step(f: &impl SlopeField, x: &Tensor, t: f64, dt: f64) -> Result<Tensor> {
    Solver::Heun.step(f, x, t, dt, 0)
}

pub fn paper_step(f: &impl SlopeField, x: &Tensor, t: f64, dt: f64) -> Result<Tensor> {
    Solver::Paper.step(f, x, t, dt, 0)
}

pub fn midpoint_step(f: &impl SlopeField, x: &Tensor, t: f64, dt: f64) -> Result<Tensor> {
    Solver::Midpoint.step(f, x, t, dt, 0)
}

fn euler_step_at(
    f: &impl SlopeField,
    x: &Tensor,
    t: f64,
    dt: f64,
    first_frame: usize,
) -> Result<Tensor> {
    check_gap(t, dt)?;
    let k1 = eval(f, x, t, first_frame)?;
    finite(axpy(x, dt, &k1))
}

fn check_gap(t: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !(t - dt >= -1e-12 * t.abs().max(1.0)) {
        return Err(invalid(format!("step gap {dt} invalid at level {t}")));
    }
    Ok(())
}

impl Solver {
    /// Advances `x` from level `t` to `t - dt`.
    pub fn step(
        self,
        f: &impl SlopeField,
        x: &Tensor,
        t: f64,
        dt: f64,
        first_frame: usize,
    ) -> Result<Tensor> {
        check_gap(t, dt)?;
        let k1 = eval(f, x, t, first_frame)?;
        let out = match self {
            Solver::Euler => axpy(x, dt, &k1),
            Solver::Heun => {
                let pred = axpy(x, dt, &k1);
                let k2 = eval(f, &pred, t - dt, first_frame)?;
                trapezoid(x, dt, &k1, &k2)
            }
            Solver::Paper => {
                let half = axpy(x, 0.5 * dt, &k1);
                let k2 = eval(f, &half, t - 0.5 * dt, first_frame)?;
                trapezoid(x, dt, &k1, &k2)
            }
            Solver::Midpoint => {
                let half = axpy(x, 0.5 * dt, &k1);
                let k2 = eval(f, &half, t - 0.5 * dt, first_frame)?;
                axpy(x, dt, &k2)
            }
        };
        finite(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Take the step that lands on `t = 0` with Euler, for fields that are
    /// singular there. Off by default.
    pub final_step_euler: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub solver: Solver,
    pub steps: usize,
    pub calls: usize,
    pub state: Tensor,
}

/// Number of slope calls `solver` makes over `steps` steps.
pub fn expected_calls(solver: Solver, steps: usize, opts: SolveOptions) -> usize {
    if opts.final_step_euler && steps > 0 && solver != Solver::Euler {
        2 * steps - 1
    } else {
        solver.calls_per_step() * steps
    }
}

/// Runs a solver over every gap of `schedule`, starting from `x0` at `t_max`.
pub fn solve(
    f: &impl SlopeField,
    x0: &Tensor,
    schedule: &NoiseSchedule,
    solver: Solver,
) -> Result<StepReport> {
    solve_with(f, x0, schedule, solver, SolveOptions::default())
}

pub fn solve_with(
    f: &impl SlopeField,
    x0: &Tensor,
    schedule: &NoiseSchedule,
    solver: Solver,
    opts: SolveOptions,
) -> Result<StepReport> {
    let mut x = x0.clone();
    let n = schedule.steps();
    for (i, (t, dt)) in schedule.gaps().enumerate() {
        let s = step_solver(solver, i, n, opts);
        x = s.step(f, &x, t, dt, 0).map_err(|e| Error::Step {
            step: i,
            window: None,
            source: Box::new(e),
        })?;
    }
    Ok(StepReport { solver, steps: n, calls: expected_calls(solver, n, opts), state: x })
}

/// Solver used for gap `i` of `n`.
pub(crate) fn step_solver(solver: Solver, i: usize, n: usize, opts: SolveOptions) -> Solver {
    if opts.final_step_euler && i + 1 == n {
        Solver::Euler
    } else {
        solver
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyRow {
    pub steps: usize,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub solver: Solver,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `ln(error)` against `ln(N)`; `None` when any
    /// error is exactly zero.
    pub slope: Option<f64>,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let slope = self.slope.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}"));
        let mut out = String::from("n,error,slope\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{}\n", r.steps, r.error, slope));
        }
        out
    }
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Global endpoint error of `solver` against `field`'s exact trajectory for
/// each step count, integrating `x0` from `t_max` down to zero.
pub fn convergence_study(
    field: &impl ClosedForm,
    x0: &Tensor,
    solver: Solver,
    kind: ScheduleKind,
    t_max: f64,
    step_counts: &[usize],
) -> Result<ConvergenceStudy> {
    if step_counts.len() < 3 {
        return Err(invalid("a convergence study needs at least three step counts"));
    }
    let exact = field.exact_f64(x0, t_max, 0.0);
    let mut rows = Vec::with_capacity(step_counts.len());
    for &n in step_counts {
        let sched = NoiseSchedule::new(kind, t_max, n)?;
        let report = solve(field, x0, &sched, solver)?;
        let error = report
            .state
            .data()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (*a as f64 - b).abs())
            .fold(0.0, f64::max);
        rows.push(StudyRow { steps: n, error });
    }
    let slope = if rows.iter().any(|r| r.error == 0.0) {
        None
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| (r.steps as f64).ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
        Some(fit_slope(&xs, &ys))
    };
    Ok(ConvergenceStudy { solver, rows, slope })
}
