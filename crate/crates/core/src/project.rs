//! Perspective projection of 3D cubics to 2D rational cubics and their
//! plain-cubic approximation.

use nalgebra::Matrix2x3;

use crate::camera::{Camera, Vec2};
use crate::error::{Error, Result};
use crate::geometry::{
    bernstein, check_unit, BezierCurve3D, Path3D, PathGeometry, Scene3DVG, Vec3, REFERENCE_RESOLUTION,
};
use crate::raster::{Element2D, Scene2D};

/// Points closer than this to the camera plane are rejected.
pub const NEAR_EPS: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedPoint {
    /// Normalized image coordinates.
    pub d_xy: Vec2,
    /// Camera-space depth along the view axis, always positive.
    pub d_z: f64,
}

/// Four projected control points; their depths act as rational weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RationalBezier2D {
    pub control: [ProjectedPoint; 4],
}

/// An ordinary 2D cubic Bezier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cubic2D {
    pub points: [Vec2; 4],
}

impl Cubic2D {
    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> Vec2 {
        if t == 0.0 {
            return self.points[0];
        }
        if t == 1.0 {
            return self.points[3];
        }
        let b = bernstein(t);
        self.points
            .iter()
            .zip(b)
            .fold(Vec2::zeros(), |acc, (p, w)| acc + p * w)
    }

    pub fn eval(&self, t: f64) -> Result<Vec2> {
        check_unit(t)?;
        Ok(self.eval_unchecked(t))
    }
}

pub fn project_point(camera: &Camera, p: &Vec3) -> Result<ProjectedPoint> {
    let c = camera.to_camera_space(p);
    if !(c.z > NEAR_EPS) {
        return Err(Error::BehindCamera { index: 0, depth: c.z });
    }
    let f = camera.focal();
    Ok(ProjectedPoint {
        d_xy: Vec2::new(f * c.x / c.z, f * c.y / c.z),
        d_z: c.z,
    })
}

/// Jacobian of the normalized image coordinates of `p` with respect to `p`.
pub fn project_point_jacobian(camera: &Camera, p: &Vec3) -> Result<Matrix2x3<f64>> {
    let c = camera.to_camera_space(p);
    if !(c.z > NEAR_EPS) {
        return Err(Error::BehindCamera { index: 0, depth: c.z });
    }
    let f = camera.focal();
    let [r, u, fwd] = camera.rotation_rows();
    let inv_z = 1.0 / c.z;
    let row_x = (r * inv_z - fwd * (c.x * inv_z * inv_z)) * f;
    let row_y = (u * inv_z - fwd * (c.y * inv_z * inv_z)) * f;
    Ok(Matrix2x3::from_rows(&[row_x.transpose(), row_y.transpose()]))
}

pub fn project_curve(camera: &Camera, curve: &BezierCurve3D) -> Result<RationalBezier2D> {
    let mut control = [ProjectedPoint {
        d_xy: Vec2::zeros(),
        d_z: 1.0,
    }; 4];
    for (i, p) in curve.points.iter().enumerate() {
        control[i] = project_point(camera, p).map_err(|e| match e {
            Error::BehindCamera { depth, .. } => Error::BehindCamera { index: i, depth },
            other => other,
        })?;
    }
    Ok(RationalBezier2D { control })
}

impl RationalBezier2D {
    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> Vec2 {
        if t == 0.0 {
            return self.control[0].d_xy;
        }
        if t == 1.0 {
            return self.control[3].d_xy;
        }
        let b = bernstein(t);
        let mut num = Vec2::zeros();
        let mut den = 0.0;
        for (c, w) in self.control.iter().zip(b) {
            num += c.d_xy * (w * c.d_z);
            den += w * c.d_z;
        }
        num / den
    }

    pub fn weights(&self) -> [f64; 4] {
        self.control.map(|c| c.d_z)
    }
}

/// Evaluates the rational cubic `sum b_i w_i d_i / sum b_i w_i`.
pub fn rational_eval(rb: &RationalBezier2D, t: f64) -> Result<Vec2> {
    check_unit(t)?;
    Ok(rb.eval_unchecked(t))
}

/// Drops the weights, keeping the projected control points.
pub fn approx_cubic(rb: &RationalBezier2D) -> Cubic2D {
    Cubic2D {
        points: rb.control.map(|c| c.d_xy),
    }
}

/// Largest distance between the rational projection and its plain-cubic
/// approximation over `n_samples` uniform parameters, in normalized units.
pub fn projection_error(camera: &Camera, curve: &BezierCurve3D, n_samples: usize) -> Result<f64> {
    if n_samples < 16 {
        return Err(Error::Argument(format!(
            "projection_error needs at least 16 samples, got {n_samples}"
        )));
    }
    let rb = project_curve(camera, curve)?;
    let cubic = approx_cubic(&rb);
    let last = (n_samples - 1) as f64;
    Ok((0..n_samples)
        .map(|i| {
            let t = i as f64 / last;
            (rb.eval_unchecked(t) - cubic.eval_unchecked(t)).norm()
        })
        .fold(0.0, f64::max))
}

/// Jacobian of the pixel position of `p` with respect to `p`.
pub fn pixel_jacobian(camera: &Camera, p: &Vec3) -> Result<Matrix2x3<f64>> {
    let mut j = project_point_jacobian(camera, p)? * camera.pixel_scale();
    // image rows grow downward
    for c in 0..3 {
        j[(1, c)] = -j[(1, c)];
    }
    Ok(j)
}

/// Pixels per unit of path stroke width; widths are given at the reference
/// resolution.
pub fn stroke_scale(camera: &Camera) -> f64 {
    camera.width().min(camera.height()) as f64 / REFERENCE_RESOLUTION
}

/// Projects one path into a 2D element in pixel coordinates. The depth key is
/// the mean camera depth of its control points.
pub fn project_path(camera: &Camera, path: &Path3D, opacity: f64) -> Result<Element2D> {
    let pts = path.control_points();
    let mut px = Vec::with_capacity(pts.len());
    let mut depth = 0.0;
    for (i, p) in pts.iter().enumerate() {
        let q = project_point(camera, p).map_err(|e| match e {
            Error::BehindCamera { depth, .. } => Error::BehindCamera { index: i, depth },
            other => other,
        })?;
        px.push(camera.ndc_to_pixel(&q.d_xy));
        depth += q.d_z;
    }
    let element = match &path.geometry {
        PathGeometry::Sketch(_) => Element2D::stroke(
            Cubic2D {
                points: [px[0], px[1], px[2], px[3]],
            },
            path.stroke_width * stroke_scale(camera),
            path.color,
        ),
        PathGeometry::Icon(_) => Element2D::fill(std::array::from_fn(|i| px[i]), path.color),
    };
    Ok(element
        .with_depth(depth / pts.len() as f64)
        .with_opacity(opacity))
}

/// Projects every path; `opacities` holds one multiplier per path (empty
/// means fully opaque).
pub fn project_scene(camera: &Camera, scene: &Scene3DVG, opacities: &[f64]) -> Result<Scene2D> {
    if !opacities.is_empty() && opacities.len() != scene.n_paths() {
        return Err(Error::Argument(format!(
            "{} opacities for {} paths",
            opacities.len(),
            scene.n_paths()
        )));
    }
    let elements = scene
        .paths()
        .iter()
        .enumerate()
        .map(|(i, p)| project_path(camera, p, opacities.get(i).copied().unwrap_or(1.0)))
        .collect::<Result<_>>()?;
    Ok(Scene2D::new(elements))
}

/// Like [`project_scene`] but drops paths with a control point behind the
/// camera. Returns the scene and the source path of each element.
pub fn project_scene_clipped(
    camera: &Camera,
    scene: &Scene3DVG,
    opacities: &[f64],
) -> Result<(Scene2D, Vec<usize>)> {
    let mut elements = Vec::with_capacity(scene.n_paths());
    let mut source = Vec::with_capacity(scene.n_paths());
    for (i, p) in scene.paths().iter().enumerate() {
        match project_path(camera, p, opacities.get(i).copied().unwrap_or(1.0)) {
            Ok(e) => {
                elements.push(e);
                source.push(i);
            }
            Err(Error::BehindCamera { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((Scene2D::new(elements), source))
}
