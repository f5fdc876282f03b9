//! Differentiable soft rasterization of projected scenes.
//!
//! Elements are composited back to front by depth key (painter's algorithm).
//! Each element's alpha is `color.a * opacity * coverage`; the backward pass
//! returns exact gradients of the rendered pixels with respect to control
//! points, widths, colors and opacities. The depth sort is treated as constant.

mod coverage;
mod image;
mod svg;

use rayon::prelude::*;

use crate::camera::Vec2;
use crate::geometry::Rgba;
use crate::project::Cubic2D;

pub use coverage::{curve_coverage, segment_count, smoothstep, smoothstep_deriv, FLATTEN_TOLERANCE};
pub use image::{read_png, write_png, Image};
pub use svg::export_svg;

use coverage::{Hit, Prepared};

/// Rows per parallel tile. Fixed so gradient reductions are reproducible.
const TILE_ROWS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub background: [f64; 3],
}

impl Canvas {
    pub fn new(width: usize, height: usize) -> crate::Result<Self> {
        if width < 16 || height < 16 {
            return Err(crate::Error::Argument(format!(
                "canvas must be at least 16x16, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            background: [1.0; 3],
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape2D {
    /// Open cubic stroke; `width` in pixels.
    Stroke { curve: Cubic2D, width: f64 },
    /// Closed loop of four cubics sharing joints, laid out like
    /// [`crate::geometry::IconLoop`].
    Fill { points: [Vec2; 12] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element2D {
    pub shape: Shape2D,
    pub color: Rgba,
    /// Opacity multiplier from the visibility state.
    pub opacity: f64,
    /// Mean control-point depth of the source path; larger is farther.
    pub depth_key: f64,
}

impl Element2D {
    pub fn stroke(curve: Cubic2D, width: f64, color: Rgba) -> Self {
        Self {
            shape: Shape2D::Stroke { curve, width },
            color,
            opacity: 1.0,
            depth_key: 0.0,
        }
    }

    pub fn fill(points: [Vec2; 12], color: Rgba) -> Self {
        Self {
            shape: Shape2D::Fill { points },
            color,
            opacity: 1.0,
            depth_key: 0.0,
        }
    }

    pub fn with_depth(mut self, depth_key: f64) -> Self {
        self.depth_key = depth_key;
        self
    }

    pub fn with_opacity(mut self, opacity: f64) -> Self {
        self.opacity = opacity;
        self
    }

    pub fn control_points(&self) -> &[Vec2] {
        match &self.shape {
            Shape2D::Stroke { curve, .. } => &curve.points,
            Shape2D::Fill { points } => points,
        }
    }

    pub fn control_points_mut(&mut self) -> &mut [Vec2] {
        match &mut self.shape {
            Shape2D::Stroke { curve, .. } => &mut curve.points,
            Shape2D::Fill { points } => points,
        }
    }

    fn point_index(&self, curve: usize, i: usize) -> usize {
        match self.shape {
            Shape2D::Stroke { .. } => i,
            Shape2D::Fill { .. } => crate::geometry::IconLoop::curve_indices(curve)[i],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scene2D {
    pub elements: Vec<Element2D>,
}

impl Scene2D {
    pub fn new(elements: Vec<Element2D>) -> Self {
        Self { elements }
    }

    /// Element indices far to near; ties keep storage order.
    pub fn paint_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.elements.len()).collect();
        order.sort_by(|&a, &b| {
            self.elements[b]
                .depth_key
                .total_cmp(&self.elements[a].depth_key)
        });
        order
    }
}

/// Gradient with respect to one element's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementGrad {
    pub points: Vec<Vec2>,
    pub width: f64,
    pub color: [f64; 4],
    pub opacity: f64,
}

impl ElementGrad {
    fn zeros_like(e: &Element2D) -> Self {
        Self {
            points: vec![Vec2::zeros(); e.control_points().len()],
            width: 0.0,
            color: [0.0; 4],
            opacity: 0.0,
        }
    }

    fn add(&mut self, other: &ElementGrad) {
        for (a, b) in self.points.iter_mut().zip(&other.points) {
            *a += b;
        }
        self.width += other.width;
        for k in 0..4 {
            self.color[k] += other.color[k];
        }
        self.opacity += other.opacity;
    }
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    /// RGB composited over the background, plus accumulated alpha.
    pub image: Image,
    /// Filled in by [`render_with_gradients`].
    pub param_gradients: Option<Vec<ElementGrad>>,
}

struct Prep<'a> {
    scene: &'a Scene2D,
    order: Vec<usize>,
    prepared: Vec<Prepared>,
}

impl<'a> Prep<'a> {
    fn new(scene: &'a Scene2D) -> Self {
        let prepared = scene.elements.par_iter().map(Prepared::new).collect();
        Self {
            scene,
            order: scene.paint_order(),
            prepared,
        }
    }

    /// Elements, in paint order, whose bounding box meets rows `[y0, y1)`.
    fn rows_candidates(&self, y0: usize, y1: usize) -> Vec<usize> {
        self.order
            .iter()
            .copied()
            .filter(|&e| {
                let b = self.prepared[e].bbox;
                b[3] >= y0 as f64 && b[1] <= y1 as f64
            })
            .collect()
    }
}

struct Layer {
    element: usize,
    alpha: f64,
    hit: Hit,
    rgb_below: [f64; 3],
    alpha_below: f64,
}

#[inline]
fn composite_pixel(
    prep: &Prep<'_>,
    candidates: &[usize],
    p: &Vec2,
    background: [f64; 3],
    mut record: Option<&mut Vec<Layer>>,
) -> ([f64; 3], f64) {
    let mut rgb = background;
    let mut acc = 0.0;
    for &e in candidates {
        let pr = &prep.prepared[e];
        if !pr.contains(p) {
            continue;
        }
        let hit = pr.hit(p);
        if hit.coverage <= 0.0 {
            continue;
        }
        let el = &prep.scene.elements[e];
        let alpha = el.color[3] * el.opacity * hit.coverage;
        if let Some(rec) = record.as_deref_mut() {
            rec.push(Layer {
                element: e,
                alpha,
                hit,
                rgb_below: rgb,
                alpha_below: acc,
            });
        }
        for c in 0..3 {
            rgb[c] = alpha * el.color[c] + (1.0 - alpha) * rgb[c];
        }
        acc = alpha + (1.0 - alpha) * acc;
    }
    (rgb, acc)
}

fn tiles(height: usize) -> Vec<(usize, usize)> {
    (0..height)
        .step_by(TILE_ROWS)
        .map(|y0| (y0, (y0 + TILE_ROWS).min(height)))
        .collect()
}

fn forward(prep: &Prep<'_>, canvas: &Canvas) -> Image {
    let w = canvas.width;
    let tile_data: Vec<Vec<f64>> = tiles(canvas.height)
        .into_par_iter()
        .map(|(y0, y1)| {
            let cands = prep.rows_candidates(y0, y1);
            let mut out = Vec::with_capacity((y1 - y0) * w * 4);
            for y in y0..y1 {
                for x in 0..w {
                    let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let (rgb, a) = composite_pixel(prep, &cands, &p, canvas.background, None);
                    out.extend_from_slice(&[
                        rgb[0].clamp(0.0, 1.0),
                        rgb[1].clamp(0.0, 1.0),
                        rgb[2].clamp(0.0, 1.0),
                        a.clamp(0.0, 1.0),
                    ]);
                }
            }
            out
        })
        .collect();
    Image::from_vec(w, canvas.height, 4, tile_data.concat())
}

/// Forward render only.
pub fn render_view(scene: &Scene2D, canvas: &Canvas) -> RenderOutput {
    let prep = Prep::new(scene);
    RenderOutput {
        image: forward(&prep, canvas),
        param_gradients: None,
    }
}

/// Gradients of `sum(image * image_gradient)` with respect to every element
/// parameter. `image_gradient` must be `height x width x 4`.
pub fn backward(scene: &Scene2D, canvas: &Canvas, image_gradient: &Image) -> Vec<ElementGrad> {
    assert_eq!(
        (image_gradient.width, image_gradient.height, image_gradient.channels),
        (canvas.width, canvas.height, 4),
        "image gradient shape must match the canvas"
    );
    let prep = Prep::new(scene);
    backward_prepared(&prep, canvas, image_gradient)
}

fn backward_prepared(prep: &Prep<'_>, canvas: &Canvas, g_img: &Image) -> Vec<ElementGrad> {
    let scene = prep.scene;
    let w = canvas.width;
    let partials: Vec<Vec<ElementGrad>> = tiles(canvas.height)
        .into_par_iter()
        .map(|(y0, y1)| {
            let cands = prep.rows_candidates(y0, y1);
            let mut grads: Vec<ElementGrad> =
                scene.elements.iter().map(ElementGrad::zeros_like).collect();
            let mut layers = Vec::new();
            for y in y0..y1 {
                for x in 0..w {
                    let g = g_img.pixel(x, y);
                    if g.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                    layers.clear();
                    let (rgb, acc) =
                        composite_pixel(prep, &cands, &p, canvas.background, Some(&mut layers));
                    // clamping passes gradient only inside the range
                    let mut g_rgb = [0.0; 3];
                    for c in 0..3 {
                        g_rgb[c] = if (0.0..=1.0).contains(&rgb[c]) { g[c] } else { 0.0 };
                    }
                    let mut g_acc = if (0.0..=1.0).contains(&acc) { g[3] } else { 0.0 };
                    for layer in layers.iter().rev() {
                        let e = layer.element;
                        let el = &scene.elements[e];
                        let a = layer.alpha;
                        let gr = &mut grads[e];
                        let mut g_alpha = g_acc * (1.0 - layer.alpha_below);
                        for c in 0..3 {
                            gr.color[c] += a * g_rgb[c];
                            g_alpha += g_rgb[c] * (el.color[c] - layer.rgb_below[c]);
                            g_rgb[c] *= 1.0 - a;
                        }
                        g_acc *= 1.0 - a;

                        let cov = layer.hit.coverage;
                        gr.color[3] += g_alpha * el.opacity * cov;
                        gr.opacity += g_alpha * el.color[3] * cov;
                        let g_cov = g_alpha * el.color[3] * el.opacity;
                        if g_cov == 0.0 {
                            continue;
                        }
                        gr.width += g_cov * layer.hit.dcov_dwidth;
                        let g_q = layer.hit.dcov_dq * g_cov;
                        if g_q.x != 0.0 || g_q.y != 0.0 {
                            let (curve, weights) = prep.prepared[e].point_weights(&layer.hit);
                            for (i, wt) in weights.iter().enumerate() {
                                gr.points[el.point_index(curve, i)] += g_q * *wt;
                            }
                        }
                    }
                }
            }
            grads
        })
        .collect();

    let mut total: Vec<ElementGrad> = scene.elements.iter().map(ElementGrad::zeros_like).collect();
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.add(p);
        }
    }
    total
}

/// Forward render plus gradients for `image_gradient`.
pub fn render_with_gradients(
    scene: &Scene2D,
    canvas: &Canvas,
    image_gradient: &Image,
) -> RenderOutput {
    let prep = Prep::new(scene);
    let image = forward(&prep, canvas);
    let grads = backward_prepared(&prep, canvas, image_gradient);
    RenderOutput {
        image,
        param_gradients: Some(grads),
    }
}

/// Renders, then evaluates `loss(image) -> (value, d value / d image)` and
/// backpropagates it. Saves a second scene preparation.
pub fn render_and_backprop<F>(scene: &Scene2D, canvas: &Canvas, loss: F) -> (Image, f64, Vec<ElementGrad>)
where
    F: FnOnce(&Image) -> (f64, Image),
{
    let prep = Prep::new(scene);
    let image = forward(&prep, canvas);
    let (value, g) = loss(&image);
    let grads = backward_prepared(&prep, canvas, &g);
    (image, value, grads)
}
