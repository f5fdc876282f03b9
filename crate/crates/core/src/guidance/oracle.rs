//! Analytic stand-in for a text-to-image guidance model: a few solid
//! primitives ray-cast into exact depth maps and line drawings of their
//! silhouettes and creases, blurred more at weak guidance scales.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{Camera, Vec2};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::raster::Image;
use crate::visibility::{DepthField, DepthMap, DepthSource};

use super::schedule::{blur_sigma, cfg_scale, ScheduleConfig};

const RAY_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Primitive {
    Sphere { center: Vec3, radius: f64 },
    Box { center: Vec3, half_extents: Vec3 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Ray parameter; camera-space depth for rays from [`Camera::ray_direction`].
    pub t: f64,
    pub normal: Vec3,
    pub primitive: usize,
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Primitive::Sphere { center, radius } => {
                center.iter().all(|c| c.is_finite()) && radius.is_finite() && *radius > 0.0
            }
            Primitive::Box {
                center,
                half_extents,
            } => {
                center.iter().all(|c| c.is_finite())
                    && half_extents.iter().all(|h| h.is_finite() && *h > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("degenerate primitive {self:?}")))
        }
    }

    /// Nearest intersection with `t > 0` as `(t, normal)`.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Vec3)> {
        match self {
            Primitive::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = oc.dot(dir);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t = [(-b - sq) / a, (-b + sq) / a]
                    .into_iter()
                    .find(|t| *t > RAY_EPS)?;
                let n = (origin + dir * t - center) / *radius;
                Some((t, n))
            }
            Primitive::Box {
                center,
                half_extents,
            } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                let (mut axis0, mut axis1) = (0, 0);
                for k in 0..3 {
                    let lo = center[k] - half_extents[k] - origin[k];
                    let hi = center[k] + half_extents[k] - origin[k];
                    if dir[k] == 0.0 {
                        if lo > 0.0 || hi < 0.0 {
                            return None;
                        }
                        continue;
                    }
                    let (mut a, mut b) = (lo / dir[k], hi / dir[k]);
                    if a > b {
                        std::mem::swap(&mut a, &mut b);
                    }
                    if a > t0 {
                        t0 = a;
                        axis0 = k;
                    }
                    if b < t1 {
                        t1 = b;
                        axis1 = k;
                    }
                }
                if t0 > t1 {
                    return None;
                }
                let (t, axis) = if t0 > RAY_EPS {
                    (t0, axis0)
                } else if t1 > RAY_EPS {
                    (t1, axis1)
                } else {
                    return None;
                };
                let p = origin + dir * t;
                let mut n = Vec3::zeros();
                n[axis] = (p[axis] - center[axis]).signum();
                Some((t, n))
            }
        }
    }

    /// True if `p` lies inside, at least `margin` from the surface; a
    /// negative margin grows the primitive.
    pub fn contains(&self, p: &Vec3, margin: f64) -> bool {
        match self {
            Primitive::Sphere { center, radius } => (p - center).norm() < *radius - margin,
            Primitive::Box {
                center,
                half_extents,
            } => (0..3).all(|k| (p[k] - center[k]).abs() < half_extents[k] - margin),
        }
    }

    /// Point on the surface hit by the ray from the center through `p`.
    pub fn radial_projection(&self, p: &Vec3) -> Vec3 {
        match self {
            Primitive::Sphere { center, radius } => {
                let d = p - center;
                let n = d.norm();
                if n == 0.0 {
                    center + Vec3::new(*radius, 0.0, 0.0)
                } else {
                    center + d * (*radius / n)
                }
            }
            Primitive::Box {
                center,
                half_extents,
            } => {
                let d = p - center;
                let s = (0..3)
                    .map(|k| d[k].abs() / half_extents[k])
                    .fold(0.0, f64::max);
                if s == 0.0 {
                    center + Vec3::new(half_extents.x, 0.0, 0.0)
                } else {
                    center + d / s
                }
            }
        }
    }
}

/// Line extraction parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeStyle {
    /// Normal change above which a crease is drawn.
    pub crease_deg: f64,
    /// Relative depth jump above which an occlusion edge is drawn.
    pub depth_jump: f64,
    pub ink: [f64; 3],
    pub paper: [f64; 3],
    /// Samples per pixel side; lines are two samples wide.
    pub supersample: usize,
}

impl Default for EdgeStyle {
    fn default() -> Self {
        Self {
            crease_deg: 30.0,
            depth_jump: 0.05,
            ink: [0.0; 3],
            paper: [1.0; 3],
            supersample: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleScene {
    pub primitives: Vec<Primitive>,
    #[serde(default)]
    pub style: EdgeStyle,
}

impl OracleScene {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::Config("oracle scene needs a primitive".into()));
        }
        for p in &primitives {
            p.validate()?;
        }
        Ok(Self {
            primitives,
            style: EdgeStyle::default(),
        })
    }

    /// Unit sphere at the origin.
    pub fn sphere() -> Self {
        Self::new(vec![Primitive::Sphere {
            center: Vec3::zeros(),
            radius: 1.0,
        }])
        .expect("valid preset")
    }

    /// Axis-aligned cube of half-size 0.7 at the origin.
    pub fn cube() -> Self {
        Self::new(vec![Primitive::Box {
            center: Vec3::zeros(),
            half_extents: Vec3::repeat(0.7),
        }])
        .expect("valid preset")
    }

    /// A sphere beside a box, overlapping near the origin.
    pub fn sphere_box() -> Self {
        Self::new(vec![
            Primitive::Sphere {
                center: Vec3::new(-0.35, 0.0, 0.0),
                radius: 0.6,
            },
            Primitive::Box {
                center: Vec3::new(0.45, 0.0, -0.15),
                half_extents: Vec3::new(0.4, 0.5, 0.45),
            },
        ])
        .expect("valid preset")
    }

    /// Preset by name: `sphere`, `box` or `sphere-box`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(Self::sphere()),
            "box" => Ok(Self::cube()),
            "sphere-box" => Ok(Self::sphere_box()),
            other => Err(Error::Argument(format!(
                "unknown oracle {other:?}; expected sphere, box or sphere-box"
            ))),
        }
    }

    pub fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, p) in self.primitives.iter().enumerate() {
            if let Some((t, normal)) = p.intersect(origin, dir) {
                if best.map_or(true, |b| t < b.t) {
                    best = Some(Hit {
                        t,
                        normal,
                        primitive: i,
                    });
                }
            }
        }
        best
    }

    /// Front-surface hit seen through normalized image point `ndc`.
    pub fn cast_ndc(&self, camera: &Camera, ndc: &Vec2) -> Option<Hit> {
        self.cast(&camera.position(), &camera.ray_direction(ndc))
    }

    /// True if `p` lies inside or on some primitive.
    pub fn contains(&self, p: &Vec3) -> bool {
        self.primitives.iter().any(|prim| prim.contains(p, -1e-12))
    }

    /// Exact depth map at pixel centers.
    pub fn depth_map(&self, camera: &Camera) -> DepthMap {
        let (w, h) = (camera.width() as usize, camera.height() as usize);
        let mut depth = vec![f32::INFINITY; w * h];
        depth.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, d) in row.iter_mut().enumerate() {
                let ndc = camera.pixel_to_ndc(&Vec2::new(x as f64 + 0.5, y as f64 + 0.5));
                if let Some(hit) = self.cast_ndc(camera, &ndc) {
                    *d = hit.t as f32;
                }
            }
        });
        DepthMap::new(camera.clone(), depth).expect("ray-cast depths are positive")
    }

    /// Sharp 3-channel line drawing: silhouettes, occlusion edges and creases.
    pub fn render_edges(&self, camera: &Camera) -> Image {
        let ss = self.style.supersample.max(1);
        let (w, h) = (camera.width() as usize, camera.height() as usize);
        let (sw, sh) = (w * ss, h * ss);
        let hits: Vec<Option<Hit>> = (0..sh)
            .into_par_iter()
            .flat_map_iter(|sy| {
                (0..sw).map(move |sx| {
                    let px = Vec2::new((sx as f64 + 0.5) / ss as f64, (sy as f64 + 0.5) / ss as f64);
                    self.cast_ndc(camera, &camera.pixel_to_ndc(&px))
                })
            })
            .collect();
        let cos_crease = self.style.crease_deg.to_radians().cos();
        let edge = |a: &Option<Hit>, b: &Option<Hit>| match (a, b) {
            (None, None) => false,
            (Some(_), None) | (None, Some(_)) => true,
            (Some(a), Some(b)) => {
                a.primitive != b.primitive
                    || a.normal.dot(&b.normal) < cos_crease
                    || (a.t - b.t).abs() > self.style.depth_jump * a.t.min(b.t)
            }
        };
        let mut ink = vec![false; sw * sh];
        for y in 0..sh {
            for x in 0..sw {
                let i = y * sw + x;
                if x + 1 < sw && edge(&hits[i], &hits[i + 1]) {
                    ink[i] = true;
                    ink[i + 1] = true;
                }
                if y + 1 < sh && edge(&hits[i], &hits[i + sw]) {
                    ink[i] = true;
                    ink[i + sw] = true;
                }
            }
        }
        let mut img = Image::zeros(w, h, 3);
        let norm = 1.0 / (ss * ss) as f64;
        for y in 0..h {
            for x in 0..w {
                let mut cov = 0.0;
                for dy in 0..ss {
                    for dx in 0..ss {
                        if ink[(y * ss + dy) * sw + x * ss + dx] {
                            cov += norm;
                        }
                    }
                }
                let px = img.pixel_mut(x, y);
                for c in 0..3 {
                    px[c] = self.style.paper[c] + cov * (self.style.ink[c] - self.style.paper[c]);
                }
            }
        }
        img
    }
}

/// Analytic depth of an oracle scene, exact at any image point.
pub struct OracleDepth<'a> {
    pub scene: &'a OracleScene,
    pub camera: Camera,
}

impl DepthField for OracleDepth<'_> {
    fn camera(&self) -> &Camera {
        &self.camera
    }

    fn depth_at(&self, ndc: &Vec2) -> Option<f64> {
        let px = self.camera.ndc_to_pixel(ndc);
        let (w, h) = (self.camera.width() as f64, self.camera.height() as f64);
        if !(px.x >= 0.0 && px.y >= 0.0 && px.x < w && px.y < h) {
            return None;
        }
        Some(self.scene.cast_ndc(&self.camera, ndc).map_or(f64::INFINITY, |hit| hit.t))
    }
}

impl DepthSource for OracleScene {
    fn depth_pair<'a>(&'a self, camera: &Camera) -> Result<(Box<dyn DepthField + 'a>, Box<dyn DepthField + 'a>)> {
        let front = OracleDepth {
            scene: self,
            camera: camera.clone(),
        };
        let back = OracleDepth {
            scene: self,
            camera: camera.antipodal()?,
        };
        Ok((Box::new(front), Box::new(back)))
    }
}

/// One guidance view: target image plus front and back depth maps.
#[derive(Clone, Debug, PartialEq)]
pub struct GuidanceSample {
    pub step: usize,
    pub camera_id: usize,
    pub t: u32,
    pub cfg_scale: f64,
    pub camera: Camera,
    /// 3 channels in [0, 1].
    pub image: Image,
    pub depth_front: DepthMap,
    /// Rendered from `camera.antipodal()`.
    pub depth_back: DepthMap,
}

/// Blurred line drawing and exact depth maps for `camera` at timestep `t`.
pub fn oracle_render(
    scene: &OracleScene,
    camera: &Camera,
    step: usize,
    t: u32,
    schedule: &ScheduleConfig,
) -> Result<GuidanceSample> {
    let scale = cfg_scale(t, schedule)?;
    let sigma = blur_sigma(scale, schedule);
    let anti = camera.antipodal()?;
    Ok(GuidanceSample {
        step,
        camera_id: 0,
        t,
        cfg_scale: scale,
        camera: camera.clone(),
        image: scene.render_edges(camera).gaussian_blur(sigma),
        depth_front: scene.depth_map(camera),
        depth_back: scene.depth_map(&anti),
    })
}
