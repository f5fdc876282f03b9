//! Image distances and the weighted multi-term image loss.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Image;

/// A differentiable distance between two images of equal shape.
pub trait ImageDistance: Send + Sync {
    fn name(&self) -> &str;

    /// Distance and its gradient with respect to `a`.
    fn eval(&self, a: &Image, b: &Image) -> (f64, Image);
}

pub type DistanceFactory = fn() -> Box<dyn ImageDistance>;

/// Name of the disabled distance.
pub const OFF: &str = "off";

fn registry() -> &'static RwLock<HashMap<String, DistanceFactory>> {
    static REG: OnceLock<RwLock<HashMap<String, DistanceFactory>>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut m: HashMap<String, DistanceFactory> = HashMap::new();
        m.insert("pyramid-l2".into(), || Box::new(PyramidL2::default()));
        m.insert("l2".into(), || Box::new(L2));
        RwLock::new(m)
    })
}

/// Makes `name` available to [`LossConfig`]. Replaces any previous entry.
pub fn register_distance(name: &str, factory: DistanceFactory) -> Result<()> {
    if name == OFF {
        return Err(Error::Argument("\"off\" is reserved".into()));
    }
    registry()
        .write()
        .expect("distance registry poisoned")
        .insert(name.to_string(), factory);
    Ok(())
}

/// `Ok(None)` for `"off"`.
pub fn distance_by_name(name: &str) -> Result<Option<Box<dyn ImageDistance>>> {
    if name == OFF {
        return Ok(None);
    }
    let reg = registry().read().expect("distance registry poisoned");
    match reg.get(name) {
        Some(f) => Ok(Some(f())),
        None => {
            let mut known: Vec<&String> = reg.keys().collect();
            known.sort();
            Err(Error::Config(format!(
                "unknown image distance {name:?}; known: {known:?} or \"off\""
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub structural: f64,
    pub semantic: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            structural: 1.0,
            semantic: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub structural_distance: String,
    pub semantic_distance: String,
    pub weights: LossWeights,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            structural_distance: "pyramid-l2".into(),
            semantic_distance: OFF.into(),
            weights: LossWeights::default(),
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    /// Instantiates the enabled terms as `(term name, weight, distance)`.
    pub fn build(&self) -> Result<ImageLoss> {
        let mut terms = Vec::new();
        for (term, name, w) in [
            ("structural", &self.structural_distance, self.weights.structural),
            ("semantic", &self.semantic_distance, self.weights.semantic),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("{term} weight {w} must be finite and >= 0")));
            }
            if let Some(d) = distance_by_name(name)? {
                terms.push((term, w, d));
            }
        }
        if terms.is_empty() {
            return Err(Error::Config("at least one image distance must be enabled".into()));
        }
        Ok(ImageLoss { terms })
    }
}

/// Instantiated loss terms.
pub struct ImageLoss {
    terms: Vec<(&'static str, f64, Box<dyn ImageDistance>)>,
}

/// Loss value with its per-term breakdown and gradient.
pub struct LossValue {
    pub total: f64,
    pub per_term: Vec<(&'static str, f64)>,
    /// Shaped like the rendered image; zero in channels past the first three.
    pub gradient: Image,
}

impl ImageLoss {
    /// Compares the RGB channels of `rendered` against `target`.
    pub fn eval(&self, rendered: &Image, target: &Image) -> Result<LossValue> {
        if rendered.width != target.width || rendered.height != target.height {
            return Err(Error::Argument(format!(
                "rendered image is {}x{}, target is {}x{}",
                rendered.width, rendered.height, target.width, target.height
            )));
        }
        if rendered.channels < 3 || target.channels < 3 {
            return Err(Error::Argument("images need at least 3 channels".into()));
        }
        let a = rendered.take_channels(3);
        let b = target.take_channels(3);
        let mut total = 0.0;
        let mut per_term = Vec::with_capacity(self.terms.len());
        let mut grad = Image::zeros(a.width, a.height, 3);
        for (term, w, d) in &self.terms {
            let (v, g) = d.eval(&a, &b);
            total += w * v;
            per_term.push((*term, v));
            for (acc, gi) in grad.data.iter_mut().zip(&g.data) {
                *acc += w * gi;
            }
        }
        Ok(LossValue {
            total,
            per_term,
            gradient: grad.pad_channels(rendered.channels),
        })
    }
}

/// Weighted sum of the enabled distances between `rendered` and `target`,
/// with its gradient with respect to `rendered`.
pub fn image_loss(rendered: &Image, target: &Image, cfg: &LossConfig) -> Result<(f64, Image)> {
    let v = cfg.build()?.eval(rendered, target)?;
    Ok((v.total, v.gradient))
}

/// Mean over pixels of the squared Euclidean color difference.
#[derive(Clone, Copy, Debug, Default)]
pub struct L2;

fn mean_sq(a: &Image, b: &Image) -> (f64, Image) {
    let n = (a.width * a.height).max(1) as f64;
    let mut g = Image::zeros(a.width, a.height, a.channels);
    let mut sum = 0.0;
    for ((gi, x), y) in g.data.iter_mut().zip(&a.data).zip(&b.data) {
        let d = x - y;
        sum += d * d;
        *gi = 2.0 * d / n;
    }
    (sum / n, g)
}

impl ImageDistance for L2 {
    fn name(&self) -> &str {
        "l2"
    }

    fn eval(&self, a: &Image, b: &Image) -> (f64, Image) {
        mean_sq(a, b)
    }
}

/// [`L2`] averaged over the levels of a Gaussian pyramid (binomial 5-tap
/// blur, edge clamped, then 2x decimation).
#[derive(Clone, Copy, Debug)]
pub struct PyramidL2 {
    pub levels: usize,
}

impl Default for PyramidL2 {
    fn default() -> Self {
        Self { levels: 4 }
    }
}

const TAPS: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Blur along x (`axis` 0) or y (`axis` 1); `adjoint` applies the transpose.
fn blur_axis(img: &Image, axis: usize, adjoint: bool) -> Image {
    let (w, h, c) = (img.width, img.height, img.channels);
    let mut out = Image::zeros(w, h, c);
    let len = if axis == 0 { w } else { h };
    let at = |x: usize, y: usize, k: usize| (y * w + x) * c + k;
    for y in 0..h {
        for x in 0..w {
            let pos = if axis == 0 { x } else { y };
            for (j, tap) in TAPS.iter().enumerate() {
                let src = (pos as isize + j as isize - 2).clamp(0, len as isize - 1) as usize;
                let (sx, sy) = if axis == 0 { (src, y) } else { (x, src) };
                for k in 0..c {
                    if adjoint {
                        out.data[at(sx, sy, k)] += tap * img.data[at(x, y, k)];
                    } else {
                        out.data[at(x, y, k)] += tap * img.data[at(sx, sy, k)];
                    }
                }
            }
        }
    }
    out
}

fn decimate(img: &Image) -> Image {
    let (w, h) = (img.width.div_ceil(2), img.height.div_ceil(2));
    let mut out = Image::zeros(w, h, img.channels);
    for y in 0..h {
        for x in 0..w {
            out.pixel_mut(x, y).copy_from_slice(img.pixel(2 * x, 2 * y));
        }
    }
    out
}

fn decimate_adjoint(g: &Image, width: usize, height: usize) -> Image {
    let mut out = Image::zeros(width, height, g.channels);
    for y in 0..g.height {
        for x in 0..g.width {
            out.pixel_mut(2 * x, 2 * y).copy_from_slice(g.pixel(x, y));
        }
    }
    out
}

fn down(img: &Image) -> Image {
    decimate(&blur_axis(&blur_axis(img, 0, false), 1, false))
}

fn down_adjoint(g: &Image, width: usize, height: usize) -> Image {
    blur_axis(&blur_axis(&decimate_adjoint(g, width, height), 1, true), 0, true)
}

impl ImageDistance for PyramidL2 {
    fn name(&self) -> &str {
        "pyramid-l2"
    }

    fn eval(&self, a: &Image, b: &Image) -> (f64, Image) {
        let levels = self.levels.max(1);
        let mut pa = vec![a.clone()];
        let mut pb = vec![b.clone()];
        for _ in 1..levels {
            let (na, nb) = (down(pa.last().unwrap()), down(pb.last().unwrap()));
            pa.push(na);
            pb.push(nb);
        }
        let mut value = 0.0;
        let mut grads = Vec::with_capacity(levels);
        for (x, y) in pa.iter().zip(&pb) {
            let (v, g) = mean_sq(x, y);
            value += v / levels as f64;
            grads.push(g);
        }
        // accumulate coarse to fine through the adjoint of each reduction
        let mut g = grads.pop().unwrap();
        while let Some(finer) = grads.pop() {
            let up = down_adjoint(&g, finer.width, finer.height);
            g = finer;
            for (gi, u) in g.data.iter_mut().zip(&up.data) {
                *gi += u;
            }
        }
        for gi in &mut g.data {
            *gi /= levels as f64;
        }
        (value, g)
    }
}
