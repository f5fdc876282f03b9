//! Initial scenes: short strokes or small loops placed at farthest-point
//! samples of an oracle's surfaces, or at random inside the unit ball.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BezierCurve3D, IconLoop, Path3D, PathKind, Rgba, Scene3DVG, Vec3, DEFAULT_STROKE_WIDTH};
use crate::guidance::OracleScene;
use crate::visibility::standard_normal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    FarthestPoint,
    Random,
}

/// Spread of the control points around each path's anchor.
pub const INIT_SPREAD: f64 = 0.1;
const SURFACE_CANDIDATES: usize = 4096;

fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn in_unit_ball<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return v;
        }
    }
}

/// Points on the outer surface of the oracle's union of primitives.
pub fn surface_samples<R: Rng + ?Sized>(oracle: &OracleScene, n: usize, rng: &mut R) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(n);
    let prims = &oracle.primitives;
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n {
        attempts += 1;
        let i = rng.gen_range(0..prims.len());
        let q = prims[i].radial_projection(&(unit_vector(rng) * 1e3));
        let hidden = prims
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && other.contains(&q, 1e-9));
        if !hidden {
            out.push(q);
        }
    }
    out
}

/// Greedy farthest-point subset of `points`, starting from the first.
pub fn farthest_point_sample(points: &[Vec3], n: usize) -> Vec<Vec3> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut chosen = vec![points[0]];
    let mut dist: Vec<f64> = points.iter().map(|p| (p - points[0]).norm()).collect();
    while chosen.len() < n.min(points.len()) {
        let (k, _) = dist
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, d)| if *d > best.1 { (i, *d) } else { best });
        let c = points[k];
        chosen.push(c);
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min((p - c).norm());
        }
    }
    chosen
}

fn path_at<R: Rng + ?Sized>(kind: PathKind, anchor: Vec3, rng: &mut R) -> Path3D {
    match kind {
        PathKind::Sketch => {
            let pts = std::array::from_fn(|_| {
                anchor
                    + Vec3::new(standard_normal(rng), standard_normal(rng), standard_normal(rng))
                        * INIT_SPREAD
            });
            Path3D::sketch(BezierCurve3D::new(pts), [0.0, 0.0, 0.0, 1.0], DEFAULT_STROKE_WIDTH)
        }
        PathKind::Iconography => {
            // circle of radius INIT_SPREAD in a random plane
            let n = unit_vector(rng);
            let a = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let u = n.cross(&a).normalize();
            let v = n.cross(&u);
            let k = 0.552_284_749_831 * INIT_SPREAD;
            let mut points = [Vec3::zeros(); 12];
            for j in 0..4 {
                let ang = j as f64 * std::f64::consts::FRAC_PI_2;
                let (c, s) = (ang.cos(), ang.sin());
                let pos = anchor + (u * c + v * s) * INIT_SPREAD;
                let tangent = -u * s + v * c;
                points[3 * j] = pos;
                points[3 * j + 1] = pos + tangent * k;
                points[(3 * j + 11) % 12] = pos - tangent * k;
            }
            let color: Rgba = [rng.gen(), rng.gen(), rng.gen(), 1.0];
            Path3D::icon(IconLoop { points }, color)
        }
    }
}

/// `n_paths` paths of `kind`. Farthest-point init needs an oracle.
pub fn init_scene<R: Rng + ?Sized>(
    kind: PathKind,
    n_paths: usize,
    strategy: InitStrategy,
    oracle: Option<&OracleScene>,
    rng: &mut R,
) -> Result<Scene3DVG> {
    if n_paths == 0 {
        return Err(Error::Config("n_paths must be at least 1".into()));
    }
    let anchors: Vec<Vec3> = match strategy {
        InitStrategy::Random => (0..n_paths).map(|_| in_unit_ball(rng)).collect(),
        InitStrategy::FarthestPoint => {
            let oracle = oracle.ok_or_else(|| {
                Error::Config("farthest-point init needs an oracle scene".into())
            })?;
            let cands = surface_samples(oracle, SURFACE_CANDIDATES.max(4 * n_paths), rng);
            let mut a = farthest_point_sample(&cands, n_paths);
            while a.len() < n_paths {
                a.push(cands[a.len() % cands.len()]);
            }
            a
        }
    };
    let mut paths: Vec<Path3D> = anchors.into_iter().map(|c| path_at(kind, c, rng)).collect();
    if strategy == InitStrategy::Random {
        for p in &mut paths {
            for q in p.control_points_mut() {
                let n = q.norm();
                if n > 1.0 {
                    *q /= n;
                }
            }
        }
    }
    Scene3DVG::new(kind, paths)
}
