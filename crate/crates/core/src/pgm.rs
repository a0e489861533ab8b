//! Binary netpbm frames: P5 read and write, P6 read (converted to luma).
//!
//! Samples are mapped to `[0, 1]` by dividing by the file's maxval. Writing
//! clamps to `[0, 1]` and rounds to the nearest 8-bit level.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{format_err, invalid, Result};
use crate::video::Video;

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

fn header(bytes: &[u8]) -> Result<(Vec<usize>, &[u8])> {
    // magic plus width, height, maxval, skipping comments
    let mut fields = Vec::new();
    let mut i = 2;
    while fields.len() < 3 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if start == i {
            return Err(format_err("malformed netpbm header"));
        }
        let v: usize = std::str::from_utf8(&bytes[start..i])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err("malformed netpbm header"))?;
        fields.push(v);
    }
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(format_err("missing whitespace after netpbm header"));
    }
    Ok((fields, &bytes[i + 1..]))
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(format_err("file too short for netpbm"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(format_err("only binary P5 and P6 images are supported")),
    };
    let (f, body) = header(bytes)?;
    let (width, height, maxval) = (f[0], f[1], f[2]);
    if width == 0 || height == 0 {
        return Err(format_err("image has a zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(format!("maxval {maxval} out of range")));
    }
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = width * height * channels * bps;
    if body.len() < need {
        return Err(format_err(format!("pixel data truncated: {} of {need} bytes", body.len())));
    }
    let sample = |k: usize| -> f64 {
        if bps == 1 {
            body[k] as f64
        } else {
            u16::from_be_bytes([body[2 * k], body[2 * k + 1]]) as f64
        }
    };
    let m = maxval as f64;
    let data = (0..width * height)
        .map(|p| {
            if channels == 1 {
                (sample(p) / m) as f32
            } else {
                let (r, g, b) = (sample(3 * p), sample(3 * p + 1), sample(3 * p + 2));
                ((0.299 * r + 0.587 * g + 0.114 * b) / m) as f32
            }
        })
        .collect();
    Ok(Image { height, width, data })
}

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(height: usize, width: usize, data: &[f32]) -> Result<Vec<u8>> {
    if data.len() != height * width {
        return Err(invalid("pixel count does not match the image size"));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(data.iter().map(|&v| to_u8(v)));
    Ok(out)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pgm(path: impl AsRef<Path>, height: usize, width: usize, data: &[f32]) -> Result<()> {
    fs::write(path, encode_pgm(height, width, data)?)?;
    Ok(())
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "ppm")))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads every `.pgm`/`.ppm` file in a directory, in name order.
pub fn read_frames(dir: impl AsRef<Path>) -> Result<Video> {
    let dir = dir.as_ref();
    let files = frame_files(dir)?;
    if files.is_empty() {
        return Err(invalid(format!("no frames found in {}", dir.display())));
    }
    let mut frames = Vec::with_capacity(files.len());
    let (mut h, mut w) = (0, 0);
    for (i, f) in files.iter().enumerate() {
        let img = read_image(f)?;
        if i == 0 {
            (h, w) = (img.height, img.width);
        } else if (img.height, img.width) != (h, w) {
            return Err(format_err(format!("{} is {}x{}, expected {h}x{w}", f.display(), img.height, img.width)));
        }
        frames.push(img.data);
    }
    Video::from_frames(h, w, &frames)
}

/// Reads frames as 8-bit gray levels, e.g. for masks.
pub fn read_gray_frames(dir: impl AsRef<Path>) -> Result<(Vec<Vec<u8>>, usize, usize)> {
    let v = read_frames(dir)?;
    let frames = (0..v.frames()).map(|t| v.frame(t).iter().map(|&p| to_u8(p)).collect()).collect();
    Ok((frames, v.height(), v.width()))
}

/// Writes `frame_0000.pgm`, `frame_0001.pgm`, ... and returns the paths.
pub fn write_frames(dir: impl AsRef<Path>, video: &Video) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(video.frames());
    for t in 0..video.frames() {
        let p = dir.join(format!("frame_{t:04}.pgm"));
        write_pgm(&p, video.height(), video.width(), video.frame(t))?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_levels() {
        let data: Vec<f32> = (0..=255).map(|v| v as f32 / 255.0).collect();
        let bytes = encode_pgm(16, 16, &data).unwrap();
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.data, data);
    }

    #[test]
    fn clamps_and_rounds() {
        let bytes = encode_pgm(1, 4, &[-0.2, 1.7, 0.5, 0.0019]).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 255, 128, 0]);
    }

    #[test]
    fn header_comments_and_p6() {
        let mut b = b"P6\n# c\n1 1\n255\n".to_vec();
        b.extend([255, 255, 255]);
        let img = decode_pnm(&b).unwrap();
        assert!((img.data[0] - 1.0).abs() < 1e-6);
        assert!(decode_pnm(b"P3\n1 1\n255\n0").is_err());
        assert!(decode_pnm(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn directory_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let v = Video::new(3, 2, 2, (0..12).map(|i| i as f32 / 255.0).collect()).unwrap();
        write_frames(dir.path(), &v).unwrap();
        assert_eq!(read_frames(dir.path()).unwrap(), v);
    }
}
