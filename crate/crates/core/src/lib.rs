//! Windowed diffusion editing for long latent sequences.
//!
//! The crate splits a `[T, d]` latent sequence into overlapping windows,
//! integrates every window along a shared noise schedule, and recombines the
//! window states after each step with a tapered, normalized blend. Inpainting
//! and outpainting are built on top by conditioning a small per-frame
//! denoiser on a mask and on the visible context, and a low-rank adapter
//! lets that denoiser be fine-tuned with a loss that separates hole and
//! context pixels.
//!
//! ```
//! use lvedit::{BlendWeights, WindowPlan};
//!
//! let plan = WindowPlan::new(100, 81, 16).unwrap();
//! assert_eq!(plan.starts(), &[1, 20]);
//! let w = BlendWeights::hamming(3).unwrap();
//! let expect = [0.08, 1.0, 0.08];
//! assert!(w.values().iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-12));
//! ```

pub mod codec;
pub mod conditioning;
pub mod denoisers;
pub mod error;
pub mod io;
pub mod lora;
pub mod masks;
pub mod metrics;
pub mod orchestrator;
pub mod pgm;
pub mod rng;
pub mod schedule;
pub mod solvers;
pub mod tensor;
pub mod training;
pub mod video;
pub mod windowing;

pub use codec::Codec;
pub use conditioning::{run_edit, EditOutput, EditRequest, Task};
pub use denoisers::{Activation, ConditionedField, FrameDenoiser, GaussianOracle, ToyDenoiser, ZeroField};
pub use error::{Error, Result};
pub use lora::{merge, AdaptedDenoiser, LoraAdapter};
pub use masks::{MaskKind, MaskVolume, PadSpec};
pub use orchestrator::{codenoise, CoDenoiseConfig, RunStats, Taper};
pub use rng::Rng;
pub use schedule::{NoiseSchedule, ScheduleKind};
pub use solvers::{convergence_study, solve, ClosedForm, SlopeField, Solver};
pub use tensor::{LatentSequence, Tensor};
pub use training::{dual_loss, train, DualLoss, TrainConfig};
pub use video::Video;
pub use windowing::{blend_windows, BlendWeights, StreamingBlend, WindowPlan};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/windows.md")]
    pub struct Windows;
    #[doc = include_str!("../../../book/src/solvers.md")]
    pub struct Solvers;
    #[doc = include_str!("../../../book/src/codenoise.md")]
    pub struct Codenoise;
    #[doc = include_str!("../../../book/src/editing.md")]
    pub struct Editing;
    #[doc = include_str!("../../../book/src/adapters.md")]
    pub struct Adapters;
    #[doc = include_str!("../../../book/src/metrics.md")]
    pub struct Metrics;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
