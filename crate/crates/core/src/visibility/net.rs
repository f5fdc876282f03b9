//! Per-point importance: a small MLP over a positional encoding of the point
//! and the unit view direction, squashed by a sigmoid.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub const DEFAULT_BANDS: usize = 6;
pub const DEFAULT_HIDDEN: usize = 64;

const NET_MAGIC: &[u8; 8] = b"C3DVGNET";

/// `(sin(2^j pi p_c), cos(2^j pi p_c))` for `j < bands`, grouped by axis.
/// Layout per axis `c`: `[sin j=0.., cos j=0..]`, so the output has `6 * bands` entries.
pub fn positional_encoding(p: &Vec3, bands: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * bands);
    encode_into(p, bands, &mut out);
    out
}

fn encode_into(p: &Vec3, bands: usize, out: &mut Vec<f64>) {
    for c in 0..3 {
        for j in 0..bands {
            out.push(((1u64 << j) as f64 * PI * p[c]).sin());
        }
        for j in 0..bands {
            out.push(((1u64 << j) as f64 * PI * p[c]).cos());
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Three-layer ReLU MLP with a sigmoid head. Parameters live in one flat
/// buffer so the optimizer can treat them as a single group.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceNet {
    bands: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct NetTrace {
    input: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    pub logit: f64,
    pub output: f64,
}

struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

impl ImportanceNet {
    pub fn input_dim(bands: usize) -> usize {
        6 * bands + 3
    }

    fn layout(&self) -> Layout {
        Self::layout_for(self.bands, self.hidden)
    }

    fn layout_for(bands: usize, hidden: usize) -> Layout {
        let n_in = Self::input_dim(bands);
        let w1 = 0;
        let b1 = w1 + hidden * n_in;
        let w2 = b1 + hidden;
        let b2 = w2 + hidden * hidden;
        let w3 = b2 + hidden;
        let b3 = w3 + hidden;
        Layout {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + 1,
        }
    }

    pub fn param_count(bands: usize, hidden: usize) -> usize {
        Self::layout_for(bands, hidden).len
    }

    /// He-initialized hidden layers; the output layer starts at zero, so every
    /// point begins with importance 0.5.
    pub fn new<R: Rng + ?Sized>(rng: &mut R, bands: usize, hidden: usize) -> Self {
        assert!(bands >= 1 && hidden >= 1);
        let mut net = Self {
            bands,
            hidden,
            params: vec![0.0; Self::param_count(bands, hidden)],
        };
        let l = net.layout();
        let n_in = Self::input_dim(bands);
        let s1 = (2.0 / n_in as f64).sqrt();
        for w in &mut net.params[l.w1..l.b1] {
            *w = s1 * standard_normal(rng);
        }
        let s2 = (2.0 / hidden as f64).sqrt();
        for w in &mut net.params[l.w2..l.b2] {
            *w = s2 * standard_normal(rng);
        }
        net
    }

    /// A net that outputs `value` everywhere.
    pub fn constant(bands: usize, hidden: usize, value: f64) -> Self {
        assert!(value > 0.0 && value < 1.0);
        let mut net = Self {
            bands,
            hidden,
            params: vec![0.0; Self::param_count(bands, hidden)],
        };
        let b3 = net.layout().b3;
        net.params[b3] = (value / (1.0 - value)).ln();
        net
    }

    pub fn from_params(bands: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != Self::param_count(bands, hidden) {
            return Err(Error::Argument(format!(
                "expected {} parameters, got {}",
                Self::param_count(bands, hidden),
                params.len()
            )));
        }
        Ok(Self {
            bands,
            hidden,
            params,
        })
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn encode(&self, p: &Vec3, view_dir: &Vec3) -> Vec<f64> {
        let mut x = Vec::with_capacity(Self::input_dim(self.bands));
        encode_into(p, self.bands, &mut x);
        x.extend_from_slice(view_dir.as_slice());
        x
    }

    pub fn trace(&self, p: &Vec3, view_dir: &Vec3) -> NetTrace {
        let l = self.layout();
        let input = self.encode(p, view_dir);
        let n_in = input.len();
        let h = self.hidden;
        let w = &self.params;
        let mut h1 = vec![0.0; h];
        for (i, out) in h1.iter_mut().enumerate() {
            let row = &w[l.w1 + i * n_in..l.w1 + (i + 1) * n_in];
            let z: f64 = row.iter().zip(&input).map(|(a, b)| a * b).sum::<f64>() + w[l.b1 + i];
            *out = z.max(0.0);
        }
        let mut h2 = vec![0.0; h];
        for (i, out) in h2.iter_mut().enumerate() {
            let row = &w[l.w2 + i * h..l.w2 + (i + 1) * h];
            let z: f64 = row.iter().zip(&h1).map(|(a, b)| a * b).sum::<f64>() + w[l.b2 + i];
            *out = z.max(0.0);
        }
        let logit = w[l.w3..l.w3 + h]
            .iter()
            .zip(&h2)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + w[l.b3];
        NetTrace {
            input,
            h1,
            h2,
            logit,
            output: sigmoid(logit),
        }
    }

    /// Importance of `p` seen along unit direction `view_dir`, in (0, 1).
    pub fn eval(&self, p: &Vec3, view_dir: &Vec3) -> f64 {
        self.trace(p, view_dir).output
    }

    /// Accumulates `g_out * d output / d params` into `grad` and returns
    /// `g_out * d output / d p`.
    pub fn backward(&self, trace: &NetTrace, g_out: f64, grad: &mut [f64]) -> Vec3 {
        debug_assert_eq!(grad.len(), self.params.len());
        let l = self.layout();
        let h = self.hidden;
        let n_in = trace.input.len();
        let w = &self.params;
        let g_logit = g_out * trace.output * (1.0 - trace.output);
        if g_logit == 0.0 {
            return Vec3::zeros();
        }

        grad[l.b3] += g_logit;
        let mut g_h2 = vec![0.0; h];
        for i in 0..h {
            grad[l.w3 + i] += g_logit * trace.h2[i];
            if trace.h2[i] > 0.0 {
                g_h2[i] = g_logit * w[l.w3 + i];
            }
        }
        let mut g_h1 = vec![0.0; h];
        for i in 0..h {
            let g = g_h2[i];
            if g == 0.0 {
                continue;
            }
            grad[l.b2 + i] += g;
            let row = l.w2 + i * h;
            for j in 0..h {
                grad[row + j] += g * trace.h1[j];
                g_h1[j] += g * w[row + j];
            }
        }
        let mut g_in = vec![0.0; n_in];
        for i in 0..h {
            if trace.h1[i] <= 0.0 {
                continue;
            }
            let g = g_h1[i];
            if g == 0.0 {
                continue;
            }
            grad[l.b1 + i] += g;
            let row = l.w1 + i * n_in;
            for j in 0..n_in {
                grad[row + j] += g * trace.input[j];
                g_in[j] += g * w[row + j];
            }
        }

        // d sin(a x) = a cos(a x), d cos(a x) = -a sin(a x); encoding entries
        // are laid out per axis as [sin.., cos..]
        let b = self.bands;
        let mut g_p = Vec3::zeros();
        for c in 0..3 {
            let base = c * 2 * b;
            for j in 0..b {
                let a = (1u64 << j) as f64 * PI;
                let s = trace.input[base + j];
                let co = trace.input[base + b + j];
                g_p[c] += g_in[base + j] * a * co - g_in[base + b + j] * a * s;
            }
        }
        g_p
    }

    /// Raw little-endian float32 blob behind a shape header:
    /// magic, then `bands`, `hidden`, `n_params` as u32.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(NET_MAGIC)?;
        for v in [self.bands, self.hidden, self.params.len()] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        for p in &self.params {
            w.write_all(&(*p as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::Argument(format!("invalid net blob: {m}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != NET_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 4];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
            *d = u32::from_le_bytes(word) as usize;
        }
        let [bands, hidden, n] = dims;
        if bands == 0 || hidden == 0 || n != Self::param_count(bands, hidden) {
            return Err(bad("shape header does not match parameter count"));
        }
        let mut params = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut word).map_err(|_| bad("truncated parameters"))?;
            params.push(f32::from_le_bytes(word) as f64);
        }
        Self::from_params(bands, hidden, params)
    }
}

/// View direction used as the camera encoding.
pub fn view_encoding(camera: &Camera) -> Vec3 {
    camera.forward()
}

/// Box-Muller standard normal draw.
pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
