//! Evaluation: inference-mode view rendering, adjacent-view consistency over
//! a camera ring, and Chamfer distance between scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::{uniform_params, Scene3DVG, Vec3};
use crate::project::project_scene_clipped;
use crate::raster::{render_view, Canvas, Image, Scene2D};
use crate::visibility::{
    curve_importance_filter, resolve_opacities, scene_votes, DepthSource, ImportanceNet,
    ImportanceReport, OpacityState, RenderMode, VisibilityConfig,
};

use super::loss::ImageDistance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpacityMode {
    /// Every path at the high opacity.
    AllHigh,
    /// Importance filtering, plus antipodal votes when depth is available.
    VisibilityAware,
}

#[derive(Clone, Debug)]
pub struct RenderedView {
    pub scene2d: Scene2D,
    /// Source path of each element of `scene2d`.
    pub source: Vec<usize>,
    /// One state per path.
    pub states: Vec<OpacityState>,
    pub importance: ImportanceReport,
    /// RGB plus accumulated alpha.
    pub image: Image,
}

/// Renders one view with inference-mode opacities on a white canvas.
pub fn render_scene_view(
    scene: &Scene3DVG,
    net: &ImportanceNet,
    camera: &Camera,
    mode: OpacityMode,
    vis: &VisibilityConfig,
    depth: Option<&dyn DepthSource>,
) -> Result<RenderedView> {
    let importance = curve_importance_filter(net, scene, camera, vis)?;
    let states = match mode {
        OpacityMode::AllHigh => vec![OpacityState::FixedHigh; scene.n_paths()],
        OpacityMode::VisibilityAware => {
            let votes = match depth {
                Some(d) => {
                    let (front, back) = d.depth_pair(camera)?;
                    Some(scene_votes(scene, camera, front.as_ref(), back.as_ref(), vis)?)
                }
                None => None,
            };
            resolve_opacities(&importance, votes.as_deref(), RenderMode::Inference, vis)
        }
    };
    let opacities: Vec<f64> = states.iter().map(|s| s.multiplier(vis)).collect();
    let (scene2d, source) = project_scene_clipped(camera, scene, &opacities)?;
    let canvas = Canvas::new(camera.width() as usize, camera.height() as usize)?;
    let image = render_view(&scene2d, &canvas).image;
    Ok(RenderedView {
        scene2d,
        source,
        states,
        importance,
        image,
    })
}

/// Mean `distance` between renders of consecutive cameras around the ring,
/// including the pair that closes it.
pub fn adjacent_view_consistency(
    scene: &Scene3DVG,
    net: &ImportanceNet,
    cameras: &[Camera],
    distance: &dyn ImageDistance,
    mode: OpacityMode,
    vis: &VisibilityConfig,
    depth: Option<&(dyn DepthSource + Sync)>,
) -> Result<f64> {
    if cameras.len() < 3 {
        return Err(Error::Argument(format!(
            "consistency needs at least 3 ring cameras, got {}",
            cameras.len()
        )));
    }
    let images: Vec<Image> = cameras
        .par_iter()
        .map(|c| {
            render_scene_view(scene, net, c, mode, vis, depth.map(|d| d as &dyn DepthSource))
                .map(|v| v.image.take_channels(3))
        })
        .collect::<Result<_>>()?;
    let k = images.len();
    let mut total = 0.0;
    for i in 0..k {
        let (a, b) = (&images[i], &images[(i + 1) % k]);
        if !a.same_shape(b) {
            return Err(Error::Argument("ring cameras must share a resolution".into()));
        }
        total += distance.eval(a, b).0;
    }
    Ok(total / k as f64)
}

fn dense_points(scene: &Scene3DVG, per_curve: usize) -> Result<Vec<Vec3>> {
    let ts = uniform_params(per_curve)?;
    Ok(scene
        .paths()
        .iter()
        .flat_map(|p| p.curves().collect::<Vec<_>>())
        .flat_map(|c| ts.iter().map(move |&t| c.eval_unchecked(t)).collect::<Vec<_>>())
        .collect())
}

fn mean_nearest(from: &[Vec3], to: &[Vec3]) -> f64 {
    let sum: f64 = from
        .par_iter()
        .map(|p| {
            to.iter()
                .map(|q| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    sum / from.len() as f64
}

/// Symmetric Chamfer distance: the average of the two directional mean
/// nearest-neighbour distances between dense samples of every curve.
pub fn chamfer_distance(a: &Scene3DVG, b: &Scene3DVG, samples_per_curve: usize) -> Result<f64> {
    let pa = dense_points(a, samples_per_curve)?;
    let pb = dense_points(b, samples_per_curve)?;
    Ok(0.5 * (mean_nearest(&pa, &pb) + mean_nearest(&pb, &pa)))
}
