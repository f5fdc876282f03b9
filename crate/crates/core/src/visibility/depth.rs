//! Depth maps: per-pixel camera-space depth of the front-most surface, with
//! +inf where no surface is hit. Stored as PFM with a camera JSON sidecar.

use std::fs;
use std::path::Path;

use crate::camera::{Camera, Vec2};
use crate::error::{Error, Result};

/// Values at or above this are read back as +inf.
pub const PFM_INF: f32 = 1e30;

/// Anything that can report the front-surface depth seen through a point of
/// a camera's image.
pub trait DepthField {
    fn camera(&self) -> &Camera;

    /// Depth at normalized image coordinates; `None` outside the image,
    /// `Some(inf)` where nothing is hit.
    fn depth_at(&self, ndc: &Vec2) -> Option<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub depth: Vec<f32>,
    pub camera: Camera,
}

impl DepthMap {
    pub fn new(camera: Camera, depth: Vec<f32>) -> Result<Self> {
        let (width, height) = (camera.width() as usize, camera.height() as usize);
        if depth.len() != width * height {
            return Err(Error::Argument(format!(
                "depth buffer has {} values, camera needs {}",
                depth.len(),
                width * height
            )));
        }
        if let Some(bad) = depth.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::Argument(format!("depth {bad} is not positive")));
        }
        Ok(Self {
            width,
            height,
            depth,
            camera,
        })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x] as f64
    }

    /// Bilinear lookup at pixel coordinates (pixel centers at +0.5).
    ///
    /// If the nearest pixel has no surface the result is +inf; otherwise
    /// neighbours without a surface are dropped and the weights renormalized.
    pub fn sample_pixel(&self, px: &Vec2) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(px.x >= 0.0 && px.y >= 0.0 && px.x < w && px.y < h) {
            return None;
        }
        let nearest = self.at(px.x as usize, px.y as usize);
        if nearest.is_infinite() {
            return Some(f64::INFINITY);
        }
        let fx = (px.x - 0.5).clamp(0.0, w - 1.0);
        let fy = (px.y - 0.5).clamp(0.0, h - 1.0);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let taps = [
            (x0, y0, (1.0 - tx) * (1.0 - ty)),
            (x1, y0, tx * (1.0 - ty)),
            (x0, y1, (1.0 - tx) * ty),
            (x1, y1, tx * ty),
        ];
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (x, y, wt) in taps {
            let d = self.at(x, y);
            if d.is_finite() && wt > 0.0 {
                acc += wt * d;
                wsum += wt;
            }
        }
        Some(if wsum > 0.0 { acc / wsum } else { nearest })
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        fs::write(path, encode_pfm(self.width, self.height, &self.depth))
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a PFM written by [`Self::write_pfm`] and attaches `camera`.
    pub fn read_pfm(path: &Path, camera: Camera) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let (w, h, depth) = decode_pfm(&bytes).map_err(|reason| Error::Ingestion {
            path: path.to_path_buf(),
            reason,
        })?;
        if w != camera.width() as usize || h != camera.height() as usize {
            return Err(Error::Ingestion {
                path: path.to_path_buf(),
                reason: format!(
                    "depth map is {w}x{h} but camera is {}x{}",
                    camera.width(),
                    camera.height()
                ),
            });
        }
        DepthMap::new(camera, depth).map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }
}

impl DepthField for DepthMap {
    fn camera(&self) -> &Camera {
        &self.camera
    }

    fn depth_at(&self, ndc: &Vec2) -> Option<f64> {
        self.sample_pixel(&self.camera.ndc_to_pixel(ndc))
    }
}

/// Greyscale little-endian PFM (scale -1.0), bottom row first; +inf as 1e30.
pub fn encode_pfm(width: usize, height: usize, depth: &[f32]) -> Vec<u8> {
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(width * height * 4);
    for y in (0..height).rev() {
        for x in 0..width {
            let v = depth[y * width + x];
            let v = if v.is_infinite() { PFM_INF } else { v };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f32>), String> {
    // three whitespace-terminated header tokens: magic, "w h", scale
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated PFM header".into());
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the data
    pos += 1;
    if tokens[0] != "Pf" {
        return Err(format!("expected greyscale PFM, found magic {:?}", tokens[0]));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| format!("bad PFM dimension {s:?}"));
    let (w, h) = (parse(&tokens[1])?, parse(&tokens[2])?);
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| format!("bad PFM scale {:?}", tokens[3]))?;
    let little = scale < 0.0;
    let need = w * h * 4;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| "truncated PFM data".to_string())?;
    let mut depth = vec![0f32; w * h];
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row_from_bottom, x) = (i / w, i % w);
        let y = h - 1 - row_from_bottom;
        depth[y * w + x] = if v >= PFM_INF { f32::INFINITY } else { v };
    }
    Ok((w, h, depth))
}
