//! Depth-frame file formats.
//!
//! Two interchangeable on-disk encodings, both storing depth in
//! millimeters with 0 marking invalid pixels:
//!
//! * binary 16-bit PGM (`P5`, maxval 65535, big-endian samples)
//! * CSV with one image row per line
//!
//! Camera intrinsics travel in a small key-value sidecar file next to
//! the frame (keys `fx`, `fy`, `cx`, `cy`).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::{CameraIntrinsics, DepthFrame};
use crate::error::{Error, Result};

const MM_PER_M: f64 = 1000.0;

/// Loads a PGM or CSV frame (by extension) and validates it against the
/// given intrinsics.
///
/// Errors on dimension mismatch and on frames without a single valid
/// depth sample, since every later stage assumes there is something to
/// segment.
pub fn load_frame(path: &Path, intrinsics: CameraIntrinsics) -> Result<DepthFrame> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let (width, height, depths) = match ext.as_str() {
        "pgm" => read_pgm(path)?,
        "csv" => read_csv(path)?,
        other => {
            return Err(Error::Format(format!(
                "unsupported frame extension '{other}' (expected .pgm or .csv)"
            )))
        }
    };
    if width != intrinsics.width || height != intrinsics.height {
        return Err(Error::DimensionMismatch {
            want_w: intrinsics.width,
            want_h: intrinsics.height,
            got_w: width,
            got_h: height,
        });
    }
    let frame = DepthFrame::new(intrinsics, depths)?;
    if frame.valid_count() == 0 {
        return Err(Error::AllInvalidFrame);
    }
    Ok(frame)
}

/// Reads a 16-bit binary PGM; returns `(width, height, depths_m)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
        // Skip whitespace and '#' comment lines between header fields.
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (*pos > start).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    }

    let magic = next_token(&bytes, &mut pos)
        .ok_or_else(|| Error::Format("truncated PGM header".into()))?;
    if magic != "P5" {
        return Err(Error::Format(format!("expected P5 PGM, got '{magic}'")));
    }
    let mut field = |name: &str| -> Result<usize> {
        next_token(&bytes, &mut pos)
            .ok_or_else(|| Error::Format(format!("truncated PGM header at {name}")))?
            .parse()
            .map_err(|_| Error::Format(format!("bad PGM {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval != 65_535 {
        return Err(Error::Format(format!(
            "expected 16-bit PGM (maxval 65535), got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height * 2;
    if bytes.len() < pos + need {
        return Err(Error::Format(format!(
            "PGM raster truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        )));
    }
    let depths = bytes[pos..pos + need]
        .chunks_exact(2)
        .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / MM_PER_M)
        .collect();
    Ok((width, height, depths))
}

/// Writes a frame as 16-bit binary PGM, millimeter-quantized.
pub fn write_pgm(path: &Path, frame: &DepthFrame) -> Result<()> {
    let mut out = Vec::with_capacity(frame.raw().len() * 2 + 32);
    write!(
        out,
        "P5\n{} {}\n65535\n",
        frame.width(),
        frame.height()
    )?;
    for &d in frame.raw() {
        let mm = if d.is_finite() && d > 0.0 {
            (d * MM_PER_M).round().clamp(0.0, 65_535.0) as u16
        } else {
            0
        };
        out.extend_from_slice(&mm.to_be_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a CSV frame (one image row per line, values in mm).
pub fn read_csv(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut width = 0usize;
    let mut depths = Vec::new();
    let mut height = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad value '{cell}' on line {}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if height == 0 {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::Format(format!(
                "line {} has {} values, expected {width}",
                lineno + 1,
                row.len()
            )));
        }
        depths.extend(row.iter().map(|mm| mm / MM_PER_M));
        height += 1;
    }
    if height == 0 {
        return Err(Error::Format("CSV frame has no rows".into()));
    }
    Ok((width, height, depths))
}

/// Writes a frame as CSV in whole millimeters.
pub fn write_csv(path: &Path, frame: &DepthFrame) -> Result<()> {
    let mut text = String::new();
    for v in 0..frame.height() {
        for u in 0..frame.width() {
            if u > 0 {
                text.push(',');
            }
            let d = frame.depth(u, v);
            let mm = if d.is_finite() && d > 0.0 {
                (d * MM_PER_M).round()
            } else {
                0.0
            };
            text.push_str(&format!("{mm:.0}"));
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Conventional sidecar location for a frame's intrinsics.
pub fn sidecar_path(frame_path: &Path) -> PathBuf {
    frame_path.with_extension("intrinsics")
}

/// Reads `fx`, `fy`, `cx`, `cy` from a key-value sidecar and combines
/// them with the given frame dimensions.
pub fn read_intrinsics(path: &Path, width: usize, height: usize) -> Result<CameraIntrinsics> {
    let text = fs::read_to_string(path)?;
    let mut fx = None;
    let mut fy = None;
    let mut cx = None;
    let mut cy = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Format(format!(
                "bad intrinsics line '{line}' (expected key = value)"
            )));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad intrinsics value in '{line}'")))?;
        match key.trim() {
            "fx" => fx = Some(value),
            "fy" => fy = Some(value),
            "cx" => cx = Some(value),
            "cy" => cy = Some(value),
            other => {
                return Err(Error::Format(format!("unknown intrinsics key '{other}'")));
            }
        }
    }
    let missing = |name: &str| Error::Format(format!("intrinsics sidecar missing '{name}'"));
    let intr = CameraIntrinsics {
        fx: fx.ok_or_else(|| missing("fx"))?,
        fy: fy.ok_or_else(|| missing("fy"))?,
        cx: cx.ok_or_else(|| missing("cx"))?,
        cy: cy.ok_or_else(|| missing("cy"))?,
        width,
        height,
    };
    intr.validate()?;
    Ok(intr)
}

pub fn write_intrinsics(path: &Path, intr: &CameraIntrinsics) -> Result<()> {
    fs::write(
        path,
        format!(
            "fx = {}\nfy = {}\ncx = {}\ncy = {}\n",
            intr.fx, intr.fy, intr.cx, intr.cy
        ),
    )?;
    Ok(())
}
