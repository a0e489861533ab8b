//! Reconstruction quality: PSNR, SSIM, and per-sequence summaries.
//!
//! All arithmetic is f64. Pixel values are expected in `[0, peak]`.

use std::fmt;

use crate::error::{invalid, Result};
use crate::masks::MaskVolume;
use crate::video::Video;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    /// Identical inputs.
    Infinite,
}

impl Psnr {
    pub fn value(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Psnr::Finite(_))
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

fn check_peak(peak: f64) -> Result<()> {
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(invalid(format!("peak must be positive, got {peak}")));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64, peak: f64) -> Psnr {
    if mse == 0.0 {
        Psnr::Infinite
    } else {
        Psnr::Finite(10.0 * (peak * peak / mse).log10())
    }
}

/// PSNR over two equal-length buffers.
pub fn psnr(a: &[f32], b: &[f32], peak: f64) -> Result<Psnr> {
    check_peak(peak)?;
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid(format!("psnr needs equal non-empty inputs, got {} and {}", a.len(), b.len())));
    }
    let mse = a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum::<f64>() / a.len() as f64;
    Ok(psnr_from_mse(mse, peak))
}

/// Normalized 11-tap Gaussian, sigma 1.5.
pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut g = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Per-window SSIM values over every fully contained 11x11 window of one
/// frame, optionally keeping only windows whose pixels all satisfy `keep`.
fn ssim_map(a: &[f32], b: &[f32], h: usize, w: usize, peak: f64, keep: Option<&[f32]>) -> Vec<f64> {
    let g = gaussian_window();
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let n = SSIM_WINDOW;
    let mut out = Vec::new();
    if h < n || w < n {
        return out;
    }
    for y0 in 0..=h - n {
        'win: for x0 in 0..=w - n {
            if let Some(k) = keep {
                for y in y0..y0 + n {
                    if k[y * w + x0..y * w + x0 + n].iter().any(|&m| m != 1.0) {
                        continue 'win;
                    }
                }
            }
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (dy, gy) in g.iter().enumerate() {
                for (dx, gx) in g.iter().enumerate() {
                    let i = (y0 + dy) * w + x0 + dx;
                    let wt = gy * gx;
                    let (p, q) = (a[i] as f64, b[i] as f64);
                    ma += wt * p;
                    mb += wt * q;
                    saa += wt * p * p;
                    sbb += wt * q * q;
                    sab += wt * p * q;
                }
            }
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            out.push(((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
        }
    }
    out
}

/// Mean SSIM of one frame pair. Frames smaller than the window are an error.
pub fn ssim(a: &[f32], b: &[f32], height: usize, width: usize, peak: f64) -> Result<f64> {
    check_peak(peak)?;
    if a.len() != height * width || b.len() != height * width {
        return Err(invalid("ssim inputs do not match the frame size"));
    }
    if height < SSIM_WINDOW || width < SSIM_WINDOW {
        return Err(invalid(format!("ssim needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}")));
    }
    let m = ssim_map(a, b, height, width, peak, None);
    Ok(m.iter().sum::<f64>() / m.len() as f64)
}

/// Restricts metrics to the holes of a mask.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    All,
    Holes(&'a MaskVolume),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub psnr: Option<Psnr>,
    pub ssim: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    /// `full` or `holes`.
    pub region: &'static str,
    pub frames: Vec<FrameMetrics>,
    /// Mean PSNR over finite frames.
    pub mean_psnr: Option<f64>,
    /// Frames whose PSNR was infinite and so left out of the mean.
    pub infinite_frames: usize,
    pub mean_ssim: Option<f64>,
}

impl MetricReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame,region,psnr,ssim,lpips\n");
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "n/a".into());
        for f in &self.frames {
            let p = f.psnr.map(|p| p.to_string()).unwrap_or_else(|| "n/a".into());
            s.push_str(&format!("{},{},{},{},n/a\n", f.frame, self.region, p, opt(f.ssim)));
        }
        s.push_str(&format!("mean,{},{},{},n/a\n", self.region, opt(self.mean_psnr), opt(self.mean_ssim)));
        s
    }
}

/// Frame-by-frame metrics. In hole mode PSNR averages over hole pixels and
/// SSIM keeps only windows that lie entirely inside the hole.
pub fn evaluate_sequence(pred: &Video, target: &Video, region: Region<'_>, peak: f64) -> Result<MetricReport> {
    check_peak(peak)?;
    pred.same_geometry(target)?;
    if let Region::Holes(m) = region {
        pred.same_geometry(m.values())?;
    }
    let (h, w) = (pred.height(), pred.width());
    let mut frames = Vec::with_capacity(pred.frames());
    for t in 0..pred.frames() {
        let (a, b) = (pred.frame(t), target.frame(t));
        let (p, s) = match region {
            Region::All => {
                let s = (h >= SSIM_WINDOW && w >= SSIM_WINDOW).then(|| {
                    let m = ssim_map(a, b, h, w, peak, None);
                    m.iter().sum::<f64>() / m.len() as f64
                });
                (Some(psnr(a, b, peak)?), s)
            }
            Region::Holes(mask) => {
                let k = mask.frame(t);
                let (mut se, mut n) = (0.0, 0usize);
                for ((x, y), m) in a.iter().zip(b).zip(k) {
                    if *m == 1.0 {
                        se += (*x as f64 - *y as f64).powi(2);
                        n += 1;
                    }
                }
                let p = (n > 0).then(|| psnr_from_mse(se / n as f64, peak));
                let m = ssim_map(a, b, h, w, peak, Some(k));
                let s = (!m.is_empty()).then(|| m.iter().sum::<f64>() / m.len() as f64);
                (p, s)
            }
        };
        frames.push(FrameMetrics { frame: t, psnr: p, ssim: s });
    }
    let finite: Vec<f64> = frames.iter().filter_map(|f| f.psnr.filter(|p| p.is_finite()).map(Psnr::value)).collect();
    let infinite_frames = frames.iter().filter(|f| f.psnr == Some(Psnr::Infinite)).count();
    let ss: Vec<f64> = frames.iter().filter_map(|f| f.ssim).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let region = match region {
        Region::All => "full",
        Region::Holes(_) => "holes",
    };
    Ok(MetricReport { region, mean_psnr: mean(&finite), infinite_frames, mean_ssim: mean(&ss), frames })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_values() {
        assert_eq!(psnr(&[0.5; 4], &[0.5; 4], 1.0).unwrap(), Psnr::Infinite);
        let p = psnr(&[0.0; 4], &[0.5; 4], 1.0).unwrap().value();
        assert!((p - 6.0206).abs() < 1e-4, "{p}");
        let a = vec![0.0f32; 64];
        let mut b = a.clone();
        b[0] = 0.0314;
        // mse = 0.0314^2 / 64
        let p = psnr(&a, &b, 1.0).unwrap().value();
        let expect = 10.0 * (64.0 / (0.0314f32 as f64).powi(2)).log10();
        assert!((p - expect).abs() < 1e-9);
        assert!(psnr(&[0.0], &[0.0, 1.0], 1.0).is_err());
        assert!(psnr(&[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let (h, w) = (16, 16);
        let a: Vec<f32> = (0..h * w).map(|i| ((i * 37) % 101) as f32 / 100.0).collect();
        let b: Vec<f32> = a.iter().map(|v| (v * 0.7 + 0.1).min(1.0)).collect();
        assert!((ssim(&a, &a, h, w, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let ab = ssim(&a, &b, h, w, 1.0).unwrap();
        let ba = ssim(&b, &a, h, w, 1.0).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab < 1.0);
        assert!(ssim(&a[..100], &a[..100], 10, 10, 1.0).is_err());
    }

    #[test]
    fn gaussian_is_normalized() {
        let g = gaussian_window();
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g[0], g[10]);
    }

    #[test]
    fn report_excludes_infinite() {
        let t = Video::new(2, 2, 2, vec![0.0; 8]).unwrap();
        let mut p = t.clone();
        p.set(1, 0, 0, 0.5);
        let r = evaluate_sequence(&p, &t, Region::All, 1.0).unwrap();
        assert_eq!(r.infinite_frames, 1);
        let only = 10.0 * (4.0f64 / 0.25).log10();
        assert!((r.mean_psnr.unwrap() - only).abs() < 1e-9);
        assert!(r.mean_ssim.is_none());
        assert!(r.to_csv().contains("0,full,inf,n/a,n/a"));
    }
}
