//! Scene representation: cubic Bezier curves in 3D, sketch and iconography
//! paths, and the scene file document they are loaded from.

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// RGBA color, each channel nominally in [0, 1].
pub type Rgba = [f64; 4];

/// Stroke width in pixels at the 512x512 reference resolution.
pub const DEFAULT_STROKE_WIDTH: f64 = 1.5;
pub const REFERENCE_RESOLUTION: f64 = 512.0;

/// Cubic Bernstein basis without the domain check, for inner loops.
#[inline]
pub fn bernstein(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    [s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t]
}

/// Interpolation weights `C(3,i) t^i (1-t)^(3-i)` for the four control points.
pub fn bernstein_weights(t: f64) -> Result<[f64; 4]> {
    check_unit(t)?;
    Ok(bernstein(t))
}

pub(crate) fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::domain("t", t, 0.0, 1.0))
    }
}

/// Parameters `i / (k - 1)` for `k` uniformly spaced samples.
pub fn uniform_params(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::Argument(format!("need at least 2 samples, got {k}")));
    }
    let last = (k - 1) as f64;
    Ok((0..k).map(|i| i as f64 / last).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BezierCurve3D {
    pub points: [Vec3; 4],
}

impl BezierCurve3D {
    pub fn new(points: [Vec3; 4]) -> Self {
        Self { points }
    }

    pub fn eval(&self, t: f64) -> Result<Vec3> {
        check_unit(t)?;
        Ok(self.eval_unchecked(t))
    }

    #[inline]
    pub fn eval_unchecked(&self, t: f64) -> Vec3 {
        // Endpoints are returned verbatim so t=0 and t=1 are exact.
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
            .fold(Vec3::zeros(), |acc, (p, w)| acc + p * w)
    }

    /// `k` points at `t = i / (k - 1)`.
    pub fn sample_points(&self, k: usize) -> Result<Vec<Vec3>> {
        Ok(uniform_params(k)?
            .into_iter()
            .map(|t| self.eval_unchecked(t))
            .collect())
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|c| c.is_finite()))
    }
}

pub fn eval_curve3d(curve: &BezierCurve3D, t: f64) -> Result<Vec3> {
    curve.eval(t)
}

pub fn sample_points(curve: &BezierCurve3D, k: usize) -> Result<Vec<Vec3>> {
    curve.sample_points(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Sketch,
    Iconography,
}

impl PathKind {
    pub fn curves_per_path(self) -> usize {
        match self {
            PathKind::Sketch => 1,
            PathKind::Iconography => 4,
        }
    }

    /// Free control points per path. Iconography loops share their joints.
    pub fn points_per_path(self) -> usize {
        match self {
            PathKind::Sketch => 4,
            PathKind::Iconography => 12,
        }
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathKind::Sketch => f.write_str("sketch"),
            PathKind::Iconography => f.write_str("iconography"),
        }
    }
}

/// Four end-connected cubics stored by their 12 free control points.
///
/// Curve `j` uses points `3j, 3j+1, 3j+2` and the next joint `3(j+1) mod 12`,
/// so closure holds by construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IconLoop {
    pub points: [Vec3; 12],
}

impl IconLoop {
    #[inline]
    pub fn curve_indices(j: usize) -> [usize; 4] {
        [3 * j, 3 * j + 1, 3 * j + 2, (3 * j + 3) % 12]
    }

    pub fn curve(&self, j: usize) -> BezierCurve3D {
        let idx = Self::curve_indices(j);
        BezierCurve3D::new(idx.map(|i| self.points[i]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathGeometry {
    Sketch(BezierCurve3D),
    Icon(IconLoop),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path3D {
    pub geometry: PathGeometry,
    pub color: Rgba,
    pub stroke_width: f64,
}

impl Path3D {
    pub fn sketch(curve: BezierCurve3D, color: Rgba, stroke_width: f64) -> Self {
        Self {
            geometry: PathGeometry::Sketch(curve),
            color,
            stroke_width,
        }
    }

    pub fn icon(loop_: IconLoop, color: Rgba) -> Self {
        Self {
            geometry: PathGeometry::Icon(loop_),
            color,
            stroke_width: DEFAULT_STROKE_WIDTH,
        }
    }

    pub fn kind(&self) -> PathKind {
        match self.geometry {
            PathGeometry::Sketch(_) => PathKind::Sketch,
            PathGeometry::Icon(_) => PathKind::Iconography,
        }
    }

    pub fn n_curves(&self) -> usize {
        self.kind().curves_per_path()
    }

    pub fn curve(&self, j: usize) -> BezierCurve3D {
        match &self.geometry {
            PathGeometry::Sketch(c) => {
                assert_eq!(j, 0, "sketch paths have a single curve");
                *c
            }
            PathGeometry::Icon(l) => l.curve(j),
        }
    }

    pub fn curves(&self) -> impl Iterator<Item = BezierCurve3D> + '_ {
        (0..self.n_curves()).map(|j| self.curve(j))
    }

    /// Indices into [`Self::control_points`] used by curve `j`.
    pub fn curve_indices(&self, j: usize) -> [usize; 4] {
        match self.geometry {
            PathGeometry::Sketch(_) => [0, 1, 2, 3],
            PathGeometry::Icon(_) => IconLoop::curve_indices(j),
        }
    }

    /// The free control points; moving one moves every curve that shares it.
    pub fn control_points(&self) -> &[Vec3] {
        match &self.geometry {
            PathGeometry::Sketch(c) => &c.points,
            PathGeometry::Icon(l) => &l.points,
        }
    }

    pub fn control_points_mut(&mut self) -> &mut [Vec3] {
        match &mut self.geometry {
            PathGeometry::Sketch(c) => &mut c.points,
            PathGeometry::Icon(l) => &mut l.points,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene3DVG {
    kind: PathKind,
    paths: Vec<Path3D>,
}

impl Scene3DVG {
    pub fn new(kind: PathKind, paths: Vec<Path3D>) -> Result<Self> {
        let scene = Self { kind, paths };
        let violations = validate_scene(&scene.to_doc());
        if violations.is_empty() {
            Ok(scene)
        } else {
            Err(Error::InvalidScene(violations))
        }
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn paths(&self) -> &[Path3D] {
        &self.paths
    }

    /// Mutable access for parameter updates. Path kinds cannot change through
    /// this view, so the per-scene kind invariant holds.
    pub fn paths_mut(&mut self) -> &mut [Path3D] {
        &mut self.paths
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn n_curves(&self) -> usize {
        self.paths.iter().map(Path3D::n_curves).sum()
    }

    pub fn from_doc(doc: &SceneDoc) -> Result<Self> {
        let violations = validate_scene(doc);
        if !violations.is_empty() {
            return Err(Error::InvalidScene(violations));
        }
        let paths = doc
            .paths
            .iter()
            .map(|p| {
                let curves: Vec<[Vec3; 4]> = p
                    .curves
                    .iter()
                    .map(|c| c.map(|v| Vec3::new(v[0], v[1], v[2])))
                    .collect();
                let geometry = match doc.kind {
                    PathKind::Sketch => PathGeometry::Sketch(BezierCurve3D::new(curves[0])),
                    PathKind::Iconography => {
                        let mut pts = [Vec3::zeros(); 12];
                        for (j, c) in curves.iter().enumerate() {
                            pts[3 * j] = c[0];
                            pts[3 * j + 1] = c[1];
                            pts[3 * j + 2] = c[2];
                        }
                        PathGeometry::Icon(IconLoop { points: pts })
                    }
                };
                Path3D {
                    geometry,
                    color: p.color,
                    stroke_width: p.stroke_width,
                }
            })
            .collect();
        Ok(Self {
            kind: doc.kind,
            paths,
        })
    }

    pub fn to_doc(&self) -> SceneDoc {
        SceneDoc {
            kind: self.kind,
            paths: self
                .paths
                .iter()
                .map(|p| PathDoc {
                    curves: p
                        .curves()
                        .map(|c| c.points.map(|v| [v.x, v.y, v.z]))
                        .collect(),
                    color: p.color,
                    stroke_width: p.stroke_width,
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SceneDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("scene serializes")
    }
}

/// On-disk scene document. Field names are part of the file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDoc {
    pub kind: PathKind,
    pub paths: Vec<PathDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDoc {
    pub curves: Vec<[[f64; 3]; 4]>,
    pub color: Rgba,
    #[serde(default = "default_stroke_width")]
    pub stroke_width: f64,
}

fn default_stroke_width() -> f64 {
    DEFAULT_STROKE_WIDTH
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyScene,
    CurveCount {
        path: usize,
        kind: PathKind,
        expected: usize,
        found: usize,
    },
    OpenJoint {
        path: usize,
        joint: usize,
    },
    ColorRange {
        path: usize,
        channel: usize,
        value: f64,
    },
    StrokeWidth {
        path: usize,
        value: f64,
    },
    NonFinite {
        path: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyScene => write!(f, "scene has no paths"),
            Violation::CurveCount {
                path,
                kind,
                expected,
                found,
            } => write!(f, "path {path}: {kind} path needs {expected} curves, found {found}"),
            Violation::OpenJoint { path, joint } => {
                write!(f, "path {path}: joint {joint} is not connected")
            }
            Violation::ColorRange {
                path,
                channel,
                value,
            } => write!(f, "path {path}: color channel {channel} = {value} outside [0, 1]"),
            Violation::StrokeWidth { path, value } => {
                write!(f, "path {path}: stroke width {value} must be positive")
            }
            Violation::NonFinite { path } => write!(f, "path {path}: non-finite control point"),
        }
    }
}

/// Every invariant violation in `doc`. An empty list means the scene is valid.
pub fn validate_scene(doc: &SceneDoc) -> Vec<Violation> {
    let mut out = Vec::new();
    if doc.paths.is_empty() {
        out.push(Violation::EmptyScene);
    }
    let expected = doc.kind.curves_per_path();
    for (i, p) in doc.paths.iter().enumerate() {
        if p.curves.len() != expected {
            out.push(Violation::CurveCount {
                path: i,
                kind: doc.kind,
                expected,
                found: p.curves.len(),
            });
        }
        if p
            .curves
            .iter()
            .flatten()
            .flatten()
            .any(|c| !c.is_finite())
        {
            out.push(Violation::NonFinite { path: i });
        }
        if doc.kind == PathKind::Iconography && p.curves.len() == expected {
            // joint j connects curve j's end to curve (j+1)'s start
            for j in 0..expected {
                let next = (j + 1) % expected;
                if p.curves[j][3] != p.curves[next][0] {
                    out.push(Violation::OpenJoint { path: i, joint: j });
                }
            }
        }
        for (channel, &value) in p.color.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                out.push(Violation::ColorRange {
                    path: i,
                    channel,
                    value,
                });
            }
        }
        if !(p.stroke_width > 0.0 && p.stroke_width.is_finite()) {
            out.push(Violation::StrokeWidth {
                path: i,
                value: p.stroke_width,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_curve() -> BezierCurve3D {
        BezierCurve3D::new([
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
        ])
    }

    fn square_icon_doc() -> SceneDoc {
        let c = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ];
        let curves = (0..4)
            .map(|j| {
                let a = c[j];
                let b = c[(j + 1) % 4];
                let lerp = |s: f64| [0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * s);
                [a, lerp(1.0 / 3.0), lerp(2.0 / 3.0), b]
            })
            .collect();
        SceneDoc {
            kind: PathKind::Iconography,
            paths: vec![PathDoc {
                curves,
                color: [0.2, 0.4, 0.6, 1.0],
                stroke_width: 1.5,
            }],
        }
    }

    #[test]
    fn bernstein_endpoints_and_midpoint() {
        assert_eq!(bernstein_weights(0.0).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(bernstein_weights(1.0).unwrap(), [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            bernstein_weights(0.5).unwrap(),
            [0.125, 0.375, 0.375, 0.125]
        );
    }

    #[test]
    fn bernstein_rejects_out_of_range() {
        assert!(matches!(bernstein_weights(-0.01), Err(Error::Domain { .. })));
        assert!(matches!(bernstein_weights(1.5), Err(Error::Domain { .. })));
        assert!(bernstein_weights(f64::NAN).is_err());
    }

    #[test]
    fn eval_endpoints_exact() {
        let c = BezierCurve3D::new([
            Vec3::new(0.1, 0.7, -0.3),
            Vec3::new(0.9, 0.2, 0.4),
            Vec3::new(-0.5, 0.3, 0.8),
            Vec3::new(0.33, -0.77, 0.11),
        ]);
        assert_eq!(c.eval(0.0).unwrap(), c.points[0]);
        assert_eq!(c.eval(1.0).unwrap(), c.points[3]);
        assert!(c.eval(1.1).is_err());
    }

    #[test]
    fn constant_curve_is_constant() {
        let q = Vec3::new(0.25, -1.5, 3.0);
        let c = BezierCurve3D::new([q; 4]);
        for i in 0..=20 {
            let p = c.eval(i as f64 / 20.0).unwrap();
            assert!((p - q).norm() < 1e-15);
        }
    }

    #[test]
    fn sample_points_contract() {
        let c = line_curve();
        assert_eq!(c.sample_points(2).unwrap(), vec![c.points[0], c.points[3]]);
        let mid = c.sample_points(3).unwrap()[1];
        assert!((mid - Vec3::new(1.5, 0.0, 0.0)).norm() < 1e-15);
        assert!(matches!(c.sample_points(1), Err(Error::Argument(_))));
        assert!(c.sample_points(0).is_err());
    }

    #[test]
    fn validate_accepts_sketch() {
        let scene = Scene3DVG::new(
            PathKind::Sketch,
            vec![Path3D::sketch(line_curve(), [0.0, 0.0, 0.0, 1.0], 1.5)],
        )
        .unwrap();
        assert!(validate_scene(&scene.to_doc()).is_empty());
    }

    #[test]
    fn validate_reports_open_joint() {
        let mut doc = square_icon_doc();
        assert!(validate_scene(&doc).is_empty());
        doc.paths[0].curves[0][3] = [1.0, 0.0, 0.5];
        let v = validate_scene(&doc);
        assert_eq!(v, vec![Violation::OpenJoint { path: 0, joint: 0 }]);
        assert!(v[0].to_string().contains("joint 0"));
    }

    #[test]
    fn validate_reports_color_range_and_counts() {
        let mut doc = square_icon_doc();
        doc.paths[0].color[1] = 1.5;
        doc.paths.push(PathDoc {
            curves: vec![line_curve().points.map(|p| [p.x, p.y, p.z])],
            color: [0.0; 4],
            stroke_width: 0.0,
        });
        let v = validate_scene(&doc);
        assert!(v.contains(&Violation::ColorRange {
            path: 0,
            channel: 1,
            value: 1.5
        }));
        assert!(v.contains(&Violation::CurveCount {
            path: 1,
            kind: PathKind::Iconography,
            expected: 4,
            found: 1
        }));
        assert!(v.contains(&Violation::StrokeWidth {
            path: 1,
            value: 0.0
        }));
    }

    #[test]
    fn empty_scene_is_invalid() {
        assert!(matches!(
            Scene3DVG::new(PathKind::Sketch, vec![]),
            Err(Error::InvalidScene(_))
        ));
    }

    #[test]
    fn icon_doc_roundtrip_shares_joints() {
        let doc = square_icon_doc();
        let mut scene = Scene3DVG::from_doc(&doc).unwrap();
        assert_eq!(scene.to_doc(), doc);
        // moving a joint moves both curves that meet there
        scene.paths_mut()[0].control_points_mut()[3] += Vec3::new(0.1, 0.2, 0.3);
        let p = &scene.paths()[0];
        assert_eq!(p.curve(0).points[3], p.curve(1).points[0]);
        assert!(validate_scene(&scene.to_doc()).is_empty());
    }

    #[test]
    fn scene_json_field_names() {
        let scene = Scene3DVG::new(
            PathKind::Sketch,
            vec![Path3D::sketch(line_curve(), [0.0, 0.0, 0.0, 1.0], 2.0)],
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&scene.to_json()).unwrap();
        assert_eq!(v["kind"], "sketch");
        assert_eq!(v["paths"][0]["stroke_width"], 2.0);
        assert_eq!(v["paths"][0]["curves"][0][3][0], 3.0);
        assert_eq!(Scene3DVG::from_json(&scene.to_json()).unwrap(), scene);
    }
}
