//! Perspective cameras, their antipodal counterparts and randomized pose sampling.

use nalgebra::Vector2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub type Vec2 = Vector2<f64>;

/// Serialized camera. Field names are part of the camera file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraDoc {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

/// Pinhole camera looking along +z in its own frame, with the image plane at
/// the focal length derived from the field of view.
///
/// Normalized image coordinates span [-1, 1] along the shorter image axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraDoc", into = "CameraDoc")]
pub struct Camera {
    position: Vec3,
    look_at: Vec3,
    up: Vec3,
    fov_deg: f64,
    width: u32,
    height: u32,
    right_axis: Vec3,
    up_axis: Vec3,
    forward_axis: Vec3,
    focal: f64,
}

impl Camera {
    pub fn new(
        position: Vec3,
        look_at: Vec3,
        up: Vec3,
        fov_deg: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !(finite(&position) && finite(&look_at) && finite(&up)) {
            return Err(Error::Config("camera vectors must be finite".into()));
        }
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::Config(format!("fov_deg {fov_deg} outside (0, 180)")));
        }
        if width == 0 || height == 0 {
            return Err(Error::Config("camera resolution must be positive".into()));
        }
        let view = look_at - position;
        if view.norm() < 1e-12 {
            return Err(Error::Config("camera position equals look_at".into()));
        }
        if up.norm() < 1e-12 {
            return Err(Error::Config("camera up vector is zero".into()));
        }
        let forward = view.normalize();
        let up = up.normalize();
        let cross = forward.cross(&up);
        if cross.norm() < 1e-9 {
            return Err(Error::Config(
                "camera up vector is parallel to the view direction".into(),
            ));
        }
        let right = cross.normalize();
        let cam_up = right.cross(&forward);
        let focal = 1.0 / (0.5 * fov_deg.to_radians()).tan();
        Ok(Self {
            position,
            look_at,
            up,
            fov_deg,
            width,
            height,
            right_axis: right,
            up_axis: cam_up,
            forward_axis: forward,
            focal,
        })
    }

    /// Same camera at a different resolution.
    pub fn with_resolution(&self, width: u32, height: u32) -> Result<Self> {
        Self::new(
            self.position,
            self.look_at,
            self.up,
            self.fov_deg,
            width,
            height,
        )
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn look_at(&self) -> Vec3 {
        self.look_at
    }

    pub fn up(&self) -> Vec3 {
        self.up
    }

    pub fn fov_deg(&self) -> f64 {
        self.fov_deg
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn focal(&self) -> f64 {
        self.focal
    }

    /// Unit view direction.
    pub fn forward(&self) -> Vec3 {
        self.forward_axis
    }

    pub fn right(&self) -> Vec3 {
        self.right_axis
    }

    pub fn camera_up(&self) -> Vec3 {
        self.up_axis
    }

    /// Rows of the world-to-camera rotation.
    pub fn rotation_rows(&self) -> [Vec3; 3] {
        [self.right_axis, self.up_axis, self.forward_axis]
    }

    pub fn to_camera_space(&self, p: &Vec3) -> Vec3 {
        let d = p - self.position;
        Vec3::new(
            d.dot(&self.right_axis),
            d.dot(&self.up_axis),
            d.dot(&self.forward_axis),
        )
    }

    /// Half the shorter image side: pixels per normalized unit.
    pub fn pixel_scale(&self) -> f64 {
        0.5 * self.width.min(self.height) as f64
    }

    pub fn ndc_to_pixel(&self, ndc: &Vec2) -> Vec2 {
        let s = self.pixel_scale();
        Vec2::new(
            0.5 * self.width as f64 + s * ndc.x,
            0.5 * self.height as f64 - s * ndc.y,
        )
    }

    pub fn pixel_to_ndc(&self, px: &Vec2) -> Vec2 {
        let s = self.pixel_scale();
        Vec2::new(
            (px.x - 0.5 * self.width as f64) / s,
            (0.5 * self.height as f64 - px.y) / s,
        )
    }

    /// World-space ray direction through normalized image point `ndc`,
    /// scaled so that its camera-space z component is 1.
    pub fn ray_direction(&self, ndc: &Vec2) -> Vec3 {
        self.right_axis * (ndc.x / self.focal)
            + self.up_axis * (ndc.y / self.focal)
            + self.forward_axis
    }

    /// Camera reflected through the origin, looking at the origin, with the
    /// same up vector and intrinsics.
    pub fn antipodal(&self) -> Result<Self> {
        Self::new(
            -self.position,
            Vec3::zeros(),
            self.up,
            self.fov_deg,
            self.width,
            self.height,
        )
    }

    /// True if `other` is this camera's antipodal camera.
    pub fn is_antipodal_of(&self, other: &Camera) -> bool {
        let tol = 1e-9 * (1.0 + self.position.norm());
        (self.position + other.position).norm() <= tol
            && other.look_at.norm() <= tol
            && (self.up - other.up).norm() <= 1e-9
            && (self.fov_deg - other.fov_deg).abs() <= 1e-12
            && self.width == other.width
            && self.height == other.height
    }

    pub fn to_doc(&self) -> CameraDoc {
        CameraDoc {
            position: self.position.into(),
            look_at: self.look_at.into(),
            up: self.up.into(),
            fov_deg: self.fov_deg,
            width: self.width,
            height: self.height,
        }
    }
}

impl TryFrom<CameraDoc> for Camera {
    type Error = Error;

    fn try_from(d: CameraDoc) -> Result<Self> {
        Camera::new(
            d.position.into(),
            d.look_at.into(),
            d.up.into(),
            d.fov_deg,
            d.width,
            d.height,
        )
    }
}

impl From<Camera> for CameraDoc {
    fn from(c: Camera) -> Self {
        c.to_doc()
    }
}

/// Ranges for random camera poses. Elevation is the polar angle from +z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSamplerConfig {
    pub radius_range: [f64; 2],
    pub azimuth_range_deg: [f64; 2],
    pub elevation_range_deg: [f64; 2],
    pub fov_range_deg: [f64; 2],
    pub width: u32,
    pub height: u32,
}

impl Default for CameraSamplerConfig {
    fn default() -> Self {
        Self {
            radius_range: [3.5, 5.0],
            azimuth_range_deg: [-180.0, 180.0],
            elevation_range_deg: [45.0, 105.0],
            fov_range_deg: [18.0, 36.0],
            width: 512,
            height: 512,
        }
    }
}

impl CameraSamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("radius_range", self.radius_range),
            ("azimuth_range_deg", self.azimuth_range_deg),
            ("elevation_range_deg", self.elevation_range_deg),
            ("fov_range_deg", self.fov_range_deg),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo <= hi) {
                return Err(Error::Config(format!("{name}: lo {lo} > hi {hi}")));
            }
        }
        if self.radius_range[0] <= 0.0 {
            return Err(Error::Config("radius must be positive".into()));
        }
        let [e0, e1] = self.elevation_range_deg;
        if e0 <= 0.0 || e1 >= 180.0 {
            return Err(Error::Config(
                "elevation must stay strictly between the poles".into(),
            ));
        }
        let [f0, f1] = self.fov_range_deg;
        if f0 <= 0.0 || f1 >= 180.0 {
            return Err(Error::Config("fov must lie in (0, 180)".into()));
        }
        Ok(())
    }

    /// Midpoint of each range.
    pub fn midpoint(&self) -> (f64, f64, f64) {
        let mid = |r: [f64; 2]| 0.5 * (r[0] + r[1]);
        (
            mid(self.radius_range),
            mid(self.elevation_range_deg),
            mid(self.fov_range_deg),
        )
    }
}

/// Camera on a sphere around the origin; angles in degrees, `elevation`
/// measured from +z, world up +z.
pub fn orbit_camera(
    radius: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    fov_deg: f64,
    width: u32,
    height: u32,
) -> Result<Camera> {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    let position = Vec3::new(
        radius * el.sin() * az.cos(),
        radius * el.sin() * az.sin(),
        radius * el.cos(),
    );
    Camera::new(
        position,
        Vec3::zeros(),
        Vec3::z(),
        fov_deg,
        width,
        height,
    )
}

/// Draws a camera uniformly within each configured range.
pub fn sample_camera<R: Rng + ?Sized>(rng: &mut R, config: &CameraSamplerConfig) -> Result<Camera> {
    config.validate()?;
    let mut draw = |[lo, hi]: [f64; 2]| if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let radius = draw(config.radius_range);
    let azimuth = draw(config.azimuth_range_deg);
    let elevation = draw(config.elevation_range_deg);
    let fov = draw(config.fov_range_deg);
    orbit_camera(radius, azimuth, elevation, fov, config.width, config.height)
}

/// Spherical coordinates `(radius, azimuth_deg, elevation_deg)` of a camera position.
pub fn spherical_coords(position: &Vec3) -> (f64, f64, f64) {
    let r = position.norm();
    let az = position.y.atan2(position.x).to_degrees();
    let el = (position.z / r).clamp(-1.0, 1.0).acos().to_degrees();
    (r, az, el)
}

/// `k` cameras at equal azimuth spacing, starting at -180 degrees.
pub fn ring_cameras(
    k: usize,
    radius: f64,
    elevation_deg: f64,
    fov_deg: f64,
    width: u32,
    height: u32,
) -> Result<Vec<Camera>> {
    if k == 0 {
        return Err(Error::Argument("ring needs at least one camera".into()));
    }
    (0..k)
        .map(|i| {
            let az = -180.0 + 360.0 * i as f64 / k as f64;
            orbit_camera(radius, az, elevation_deg, fov_deg, width, height)
        })
        .collect()
}

/// Ring at the midpoint of the default sampling ranges: radius 4.25,
/// elevation 75 degrees, fov 27 degrees.
pub fn default_ring(k: usize, width: u32, height: u32) -> Result<Vec<Camera>> {
    let (r, el, fov) = CameraSamplerConfig::default().midpoint();
    ring_cameras(k, r, el, fov, width, height)
}
