use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use lvedit::conditioning::run_edit;
use lvedit::denoisers::{Activation, FrameDenoiser, GaussianOracle, ToyDenoiser};
use lvedit::io::write_lvt;
use lvedit::lora::AdaptedDenoiser;
use lvedit::masks::{MaskKind, MaskVolume, PadSpec};
use lvedit::metrics::{evaluate_sequence, Region};
use lvedit::orchestrator::{codenoise, scaling_probe, CoDenoiseConfig, RunStats, Taper};
use lvedit::pgm;
use lvedit::rng::Rng;
use lvedit::schedule::{NoiseSchedule, ScheduleKind};
use lvedit::solvers::{convergence_study, SolveOptions, Solver};
use lvedit::tensor::{LatentSequence, Tensor};
use lvedit::training::{self, ClipDistribution, MaskMix, TrainConfig};
use lvedit::windowing::WindowPlan;
use lvedit::{Codec, EditRequest};

#[derive(Parser)]
#[command(name = "lvedit", version, about = "Windowed diffusion editing for long frame sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the window plan and per-frame coverage as CSV.
    Plan(PlanArgs),
    /// Global-error convergence study on the Gaussian closed-form field.
    ConvergenceStudy(StudyArgs),
    /// Unconditional co-denoising of a random latent sequence.
    Sample(SampleArgs),
    /// Wall time and window residency against sequence length.
    ScalingProbe(ProbeArgs),
    /// Train low-rank adapters on synthetic moving-square clips.
    Train(TrainArgs),
    /// Fill the holes of a mask in a frame directory.
    Inpaint(InpaintArgs),
    /// Extend frames to a larger canvas.
    Outpaint(OutpaintArgs),
    /// PSNR/SSIM between two frame directories.
    Eval(EvalArgs),
    /// Write a random moving-square clip, and optionally a mask, as PGM frames.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    frames: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write a sampled mask (border, interior or alternate) here.
    #[arg(long)]
    mask_out: Option<PathBuf>,
    #[arg(long, default_value = "interior")]
    mask_mix: String,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    frames: usize,
    #[arg(long, default_value_t = 81)]
    window: usize,
    #[arg(long, default_value_t = 16)]
    overlap: usize,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ScheduleArgs {
    /// Number of solver steps.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    /// Power-law spacing exponent; linear when omitted.
    #[arg(long)]
    rho: Option<f64>,
}

impl ScheduleArgs {
    fn kind(&self) -> ScheduleKind {
        match self.rho {
            Some(rho) => ScheduleKind::Power { rho },
            None => ScheduleKind::Linear,
        }
    }

    fn build(&self) -> Result<NoiseSchedule> {
        Ok(NoiseSchedule::new(self.kind(), self.t_max, self.steps)?)
    }

    fn to_json(&self) -> Value {
        json!({ "steps": self.steps, "t_max": self.t_max, "rho": self.rho })
    }
}

#[derive(Args, Clone)]
struct WindowArgs {
    #[arg(long, default_value_t = 81)]
    window: usize,
    #[arg(long, default_value_t = 16)]
    overlap: usize,
    #[arg(long, default_value = "heun")]
    solver: Solver,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Use a flat taper instead of the Hamming window.
    #[arg(long)]
    uniform_taper: bool,
    /// Take the last step with Euler.
    #[arg(long)]
    final_step_euler: bool,
    #[command(flatten)]
    schedule: ScheduleArgs,
}

impl WindowArgs {
    fn config(&self) -> Result<CoDenoiseConfig> {
        let cfg = CoDenoiseConfig {
            window: self.window,
            overlap: self.overlap,
            solver: self.solver,
            schedule: self.schedule.build()?,
            workers: self.workers,
            memory_probe: true,
            options: SolveOptions { final_step_euler: self.final_step_euler },
            taper: if self.uniform_taper { Taper::Uniform } else { Taper::Hamming },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn to_json(&self) -> Value {
        json!({
            "window": self.window,
            "overlap": self.overlap,
            "solver": self.solver.name(),
            "workers": self.workers,
            "taper": if self.uniform_taper { "uniform" } else { "hamming" },
            "final_step_euler": self.final_step_euler,
            "schedule": self.schedule.to_json(),
        })
    }
}

#[derive(Args)]
struct StudyArgs {
    /// A solver name or `all`.
    #[arg(long, default_value = "all")]
    solver: String,
    /// Comma-separated step counts, at least three.
    #[arg(long, default_value = "8,16,32,64,128")]
    steps: String,
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long)]
    rho: Option<f64>,
    /// Latent elements in the start state.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for one `<solver>.csv` per solver; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    frames: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Frame model checkpoint; the Gaussian closed-form field when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, default_value = "100,200,400")]
    lengths: String,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Checkpoint directory to create.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = training::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    momentum: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// alternate, border, interior or full.
    #[arg(long, default_value = "alternate")]
    mask_mix: String,
    #[arg(long, default_value_t = 4)]
    rank: usize,
    /// Start from this base checkpoint instead of pretraining one.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Full-parameter unconditional steps used to build a base.
    #[arg(long, default_value_t = 4000)]
    pretrain_steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    pretrain_lr: f64,
    /// Hidden layer widths of a new base.
    #[arg(long, default_value = "64,64")]
    hidden: String,
    #[arg(long, default_value_t = 4)]
    frames: usize,
    #[arg(long, default_value_t = 8)]
    height: usize,
    #[arg(long, default_value_t = 8)]
    width: usize,
    #[arg(long, default_value_t = 2)]
    size_min: usize,
    #[arg(long, default_value_t = 4)]
    size_max: usize,
    #[arg(long, default_value_t = 1)]
    max_speed: i64,
    #[arg(long, default_value = "identity")]
    codec: Codec,
    /// Noise levels are drawn from this many schedule steps.
    #[arg(long, default_value_t = 50)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args)]
struct EditArgs {
    /// Directory of PGM/PPM input frames.
    #[arg(long)]
    input: PathBuf,
    /// Frame model checkpoint (base or adapted).
    #[arg(long)]
    model: PathBuf,
    /// Output frame directory; receives `run.json` too.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "identity")]
    codec: Codec,
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Args)]
struct InpaintArgs {
    #[command(flatten)]
    edit: EditArgs,
    /// Mask image or directory; gray >= 128 marks a hole. A single frame is
    /// reused for every input frame.
    #[arg(long)]
    mask: PathBuf,
}

#[derive(Args)]
struct OutpaintArgs {
    #[command(flatten)]
    edit: EditArgs,
    /// Canvas height.
    #[arg(long)]
    height: usize,
    /// Canvas width.
    #[arg(long)]
    width: usize,
    /// Source placement; centered when omitted.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    left: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Score holes only.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Plan(a) => plan(a),
        Command::ConvergenceStudy(a) => study(a),
        Command::Sample(a) => sample(a),
        Command::ScalingProbe(a) => probe(a),
        Command::Train(a) => train(a),
        Command::Inpaint(a) => inpaint(a),
        Command::Outpaint(a) => outpaint(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| anyhow::anyhow!("bad list entry `{p}` in `{s}`")))
        .collect()
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Checksums of every regular file below `dir`, keyed by relative path.
fn checksums(dir: &Path) -> Result<Value> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) -> Result<()> {
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.path());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else if p.file_name().is_some_and(|n| n != "run.json") {
                let rel = p.strip_prefix(root)?.to_string_lossy().replace('\\', "/");
                out.push((rel, sha256_file(&p)?));
            }
        }
        Ok(())
    }
    let mut v = Vec::new();
    walk(dir, dir, &mut v)?;
    Ok(Value::Object(v.into_iter().map(|(k, h)| (k, Value::String(h))).collect()))
}

fn stats_json(s: &RunStats) -> Value {
    json!({
        "windows": s.windows,
        "total_steps": s.total_steps,
        "blends": s.blends,
        "slope_calls": s.slope_calls,
        "peak_live_windows": s.peak_live_windows,
        "peak_window_elements": s.peak_window_elements,
        "peak_resident_elements": s.peak_resident_elements,
        "peak_pending_rows": s.peak_pending_rows,
    })
}

/// Writes `run.json` last so its checksums cover everything else in `dir`.
fn write_manifest(dir: &Path, command: &str, params: Value, extra: Value) -> Result<()> {
    let mut m = json!({
        "tool": "lvedit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": params,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut m, extra) {
        m.extend(e);
    }
    m["checksums"] = checksums(dir)?;
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

fn plan(a: PlanArgs) -> Result<()> {
    let plan = WindowPlan::new(a.frames, a.window, a.overlap)?;
    emit(a.out.as_deref(), &plan.to_csv())
}

fn study(a: StudyArgs) -> Result<()> {
    let solvers: Vec<Solver> = if a.solver == "all" { Solver::ALL.to_vec() } else { vec![a.solver.parse()?] };
    let counts: Vec<usize> = parse_list(&a.steps)?;
    let kind = match a.rho {
        Some(rho) => ScheduleKind::Power { rho },
        None => ScheduleKind::Linear,
    };
    let field = GaussianOracle::new(a.variance)?;
    let mut rng = Rng::new(a.seed);
    let x0 = Tensor::new(vec![a.dim], rng.normal_vec(a.dim).iter().map(|v| v * a.t_max as f32).collect())?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
    }
    for s in solvers {
        let st = convergence_study(&field, &x0, s, kind, a.t_max, &counts)?;
        match &a.out {
            Some(dir) => fs::write(dir.join(format!("{}.csv", s.name())), st.to_csv())?,
            None => print!("# {}\n{}", s.name(), st.to_csv()),
        }
        let slope = st.slope.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
        eprintln!("{}: slope {slope}", s.name());
    }
    Ok(())
}

/// Base or adapted frame model, chosen by the checkpoint layout.
enum Model {
    Base(ToyDenoiser),
    Adapted(AdaptedDenoiser),
}

impl Model {
    fn load(dir: &Path) -> Result<Self> {
        if dir.join("lora").is_dir() {
            Ok(Model::Adapted(AdaptedDenoiser::load(dir)?))
        } else {
            Ok(Model::Base(ToyDenoiser::load(dir)?))
        }
    }

    fn denoiser(&self) -> &dyn FrameDenoiser {
        match self {
            Model::Base(m) => m,
            Model::Adapted(m) => m,
        }
    }
}

fn sample(a: SampleArgs) -> Result<()> {
    let cfg = a.window.config()?;
    let mut rng = Rng::new(a.seed);
    let t_max = cfg.schedule.t_max() as f32;
    let init = LatentSequence::new(a.frames, a.dim, rng.normal_vec(a.frames * a.dim).iter().map(|v| v * t_max).collect())?;
    fs::create_dir_all(&a.out)?;
    let (z, stats) = match &a.model {
        Some(dir) => {
            let model = Model::load(dir)?;
            let m = model.denoiser();
            if m.dim() != a.dim {
                bail!("model dimension {} does not match --dim {}", m.dim(), a.dim);
            }
            let mask = LatentSequence::new(a.frames, a.dim, vec![1.0; a.frames * a.dim])?;
            let ctx = LatentSequence::zeros(a.frames, a.dim)?;
            let field = lvedit::ConditionedField::new(m, &mask, &ctx)?;
            codenoise(init, &field, &cfg)?
        }
        None => codenoise(init, &GaussianOracle::new(a.variance)?, &cfg)?,
    };
    write_lvt(a.out.join("sample.lvt"), z.as_tensor())?;
    let params = json!({
        "frames": a.frames,
        "dim": a.dim,
        "model": a.model.as_ref().map(|p| p.display().to_string()),
        "variance": a.variance,
        "seed": a.seed,
        "codenoise": a.window.to_json(),
    });
    write_manifest(&a.out, "sample", params, json!({ "stats": stats_json(&stats) }))?;
    eprintln!("{} windows, {} steps, {} blends", stats.windows, stats.total_steps, stats.blends);
    Ok(())
}

fn probe(a: ProbeArgs) -> Result<()> {
    let cfg = a.window.config()?;
    let lengths: Vec<usize> = parse_list(&a.lengths)?;
    let field = GaussianOracle::default();
    let p = scaling_probe(&field, a.dim, &cfg, &lengths, a.repeats, a.seed)?;
    emit(a.out.as_deref(), &p.to_csv())?;
    eprintln!("time = {:.3e} T + {:.3e}, R^2 = {:.4}", p.slope, p.intercept, p.r_squared);
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mask_mix = MaskMix::parse(&a.mask_mix)?;
    let data = ClipDistribution {
        frames: a.frames,
        height: a.height,
        width: a.width,
        size: (a.size_min, a.size_max),
        max_speed: a.max_speed,
        ..Default::default()
    };
    let sched_args = ScheduleArgs { steps: a.levels, t_max: a.t_max, rho: a.rho };
    let schedule = sched_args.build()?;
    let (lh, lw) = a.codec.latent_size(a.height, a.width)?;
    let base = match &a.base {
        Some(dir) => ToyDenoiser::load(dir)?,
        None => {
            let hidden: Vec<usize> = parse_list(&a.hidden)?;
            let mut base = ToyDenoiser::new(lh * lw, &hidden, Activation::Tanh, a.seed)?;
            let pre = TrainConfig {
                steps: a.pretrain_steps,
                lr: a.pretrain_lr,
                mask_mix: MaskMix::Full,
                data,
                schedule: schedule.clone(),
                codec: a.codec,
                seed: a.seed.wrapping_add(1),
                ..Default::default()
            };
            training::pretrain_base(&mut base, &pre)?;
            base
        }
    };
    if base.dim() != lh * lw {
        bail!("base dimension {} does not match {lh}x{lw} latent frames", base.dim());
    }
    let mut model = AdaptedDenoiser::attach_all(base, a.rank, &mut Rng::derived(a.seed, 2))?;
    let cfg = TrainConfig {
        lambda: a.lambda,
        steps: a.steps,
        lr: a.lr,
        momentum: a.momentum,
        mask_mix,
        data,
        schedule,
        codec: a.codec,
        seed: a.seed.wrapping_add(3),
    };
    let report = training::train(&mut model, &cfg)?;
    if a.out.exists() {
        fs::remove_dir_all(&a.out).with_context(|| format!("clearing {}", a.out.display()))?;
    }
    model.save(a.out.join("model"))?;
    fs::write(a.out.join("loss.csv"), report.to_csv())?;
    let params = json!({
        "lambda": a.lambda,
        "steps": a.steps,
        "lr": a.lr,
        "momentum": a.momentum,
        "seed": a.seed,
        "mask_mix": mask_mix.name(),
        "rank": a.rank,
        "base": a.base.as_ref().map(|p| p.display().to_string()),
        "pretrain_steps": a.base.is_none().then_some(a.pretrain_steps),
        "pretrain_lr": a.base.is_none().then_some(a.pretrain_lr),
        "hidden": a.hidden,
        "data": {
            "frames": a.frames, "height": a.height, "width": a.width,
            "size_min": a.size_min, "size_max": a.size_max, "max_speed": a.max_speed,
        },
        "codec": a.codec.name(),
        "schedule": sched_args.to_json(),
    });
    let last = report.rows.last().map(|r| r.loss);
    let extra = json!({
        "base_checksum": format!("{:016x}", model.base().checksum()),
        "final_loss": last.map(|l| json!({ "total": l.total, "masked": l.masked, "unmasked": l.unmasked })),
    });
    write_manifest(&a.out, "train", params, extra)?;
    if let (Some(first), Some(last)) = (report.rows.first(), last) {
        eprintln!("loss {:.4} -> {:.4} over {} steps", first.loss.total, last.total, report.rows.len());
    }
    Ok(())
}

fn read_mask(path: &Path, frames: usize, height: usize, width: usize) -> Result<MaskVolume> {
    let (gray, h, w) = if path.is_dir() {
        pgm::read_gray_frames(path)?
    } else {
        let img = pgm::read_image(path)?;
        (vec![img.data.iter().map(|&v| pgm::to_u8(v)).collect()], img.height, img.width)
    };
    if (h, w) != (height, width) {
        bail!("mask is {h}x{w} but frames are {height}x{width}");
    }
    let m = MaskVolume::from_gray(&gray, h, w)?.with_kind(MaskKind::User);
    Ok(if m.frames() == frames { m } else { m.repeat_to(frames)? })
}

fn run_edit_command(e: &EditArgs, command: &str, req: EditRequest, task: Value) -> Result<()> {
    let model = Model::load(&e.model)?;
    let out = run_edit(&req, model.denoiser())?;
    if e.out.exists() {
        fs::remove_dir_all(&e.out).with_context(|| format!("clearing {}", e.out.display()))?;
    }
    pgm::write_frames(&e.out, &out.frames)?;
    let params = json!({
        "input": e.input.display().to_string(),
        "model": e.model.display().to_string(),
        "seed": e.seed,
        "codec": e.codec.name(),
        "task": task,
        "codenoise": e.window.to_json(),
        "frames": out.frames.frames(),
        "height": out.frames.height(),
        "width": out.frames.width(),
        "holes": out.mask.hole_count(),
    });
    write_manifest(&e.out, command, params, json!({ "stats": stats_json(&out.stats) }))?;
    eprintln!("wrote {} frames to {}", out.frames.frames(), e.out.display());
    Ok(())
}

fn inpaint(a: InpaintArgs) -> Result<()> {
    let e = &a.edit;
    let frames = pgm::read_frames(&e.input)?;
    let mask = read_mask(&a.mask, frames.frames(), frames.height(), frames.width())?;
    let req = EditRequest::inpaint(frames, mask, e.window.config()?, e.seed).with_codec(e.codec);
    run_edit_command(e, "inpaint", req, json!({ "kind": "inpaint", "mask": a.mask.display().to_string() }))
}

fn outpaint(a: OutpaintArgs) -> Result<()> {
    let e = &a.edit;
    let frames = pgm::read_frames(&e.input)?;
    let (sh, sw) = (frames.height(), frames.width());
    let pad = match (a.top, a.left) {
        (None, None) => PadSpec::centered(sh, sw, a.height, a.width)?,
        (top, left) => {
            let p = PadSpec { height: a.height, width: a.width, top: top.unwrap_or(0), left: left.unwrap_or(0) };
            p.check(sh, sw)?;
            p
        }
    };
    let task = json!({ "kind": "outpaint", "height": pad.height, "width": pad.width, "top": pad.top, "left": pad.left });
    let req = EditRequest::outpaint(frames, pad, e.window.config()?, e.seed).with_codec(e.codec);
    run_edit_command(e, "outpaint", req, task)
}

fn eval(a: EvalArgs) -> Result<()> {
    let pred = pgm::read_frames(&a.pred)?;
    let target = pgm::read_frames(&a.target)?;
    if pred.frames() != target.frames() {
        bail!("{} predicted frames against {} target frames", pred.frames(), target.frames());
    }
    let mask = match &a.mask {
        Some(p) => Some(read_mask(p, target.frames(), target.height(), target.width())?),
        None => None,
    };
    let region = mask.as_ref().map_or(Region::All, Region::Holes);
    let r = evaluate_sequence(&pred, &target, region, a.peak)?;
    emit(a.out.as_deref(), &r.to_csv())?;
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
    eprintln!(
        "region {}: mean psnr {} ({} frames inf), mean ssim {}",
        r.region,
        fmt(r.mean_psnr),
        r.infinite_frames,
        fmt(r.mean_ssim)
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut rng = Rng::new(a.seed);
    let data = ClipDistribution { frames: a.frames, height: a.height, width: a.width, ..Default::default() };
    let clip = training::make_synthetic_clip(&data.sample(&mut rng))?;
    pgm::write_frames(&a.out, &clip)?;
    if let Some(dir) = &a.mask_out {
        let mask = MaskMix::parse(&a.mask_mix)?.sample(&mut rng, a.height, a.width, a.frames)?;
        pgm::write_frames(dir, mask.values())?;
    }
    Ok(())
}
