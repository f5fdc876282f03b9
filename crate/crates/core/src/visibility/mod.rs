//! View-dependent curve visibility.
//!
//! Two signals decide how strongly a curve is drawn from a given camera:
//! a learned per-point importance averaged over samples of the curve, and a
//! depth vote that compares each sample's distance to the front surface (seen
//! from the camera) against its distance to the back surface (seen from the
//! antipodal camera).
//!
//! During training, curves whose importance falls below `tau_alpha` are drawn
//! with their importance as opacity, so the loss trains the network; all
//! others are drawn fully opaque. At inference a curve is drawn opaque if it
//! is important or wins the depth vote, and faint otherwise.

mod depth;
mod net;

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::{uniform_params, BezierCurve3D, Scene3DVG};
use crate::project::project_point;

pub use depth::{decode_pfm, encode_pfm, DepthField, DepthMap, PFM_INF};
pub use net::{
    positional_encoding, sigmoid, view_encoding, ImportanceNet, NetTrace, DEFAULT_BANDS,
    DEFAULT_HIDDEN,
};
pub(crate) use net::standard_normal;

/// Provides front and back depth for any camera.
pub trait DepthSource {
    /// Depth seen from `camera` and from its antipodal camera.
    fn depth_pair<'a>(&'a self, camera: &Camera) -> Result<(Box<dyn DepthField + 'a>, Box<dyn DepthField + 'a>)>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisibilityConfig {
    pub tau_alpha: f64,
    /// Scale of the thickness-adaptive depth slack.
    pub alpha_depth: f64,
    pub k_points: usize,
    pub vote_fraction: f64,
    pub opacity_high: f64,
    pub opacity_low: f64,
    pub bands: usize,
    pub hidden: usize,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        Self {
            tau_alpha: 0.75,
            alpha_depth: 0.25,
            k_points: 8,
            vote_fraction: 0.5,
            opacity_high: 1.0,
            opacity_low: 0.2,
            bands: DEFAULT_BANDS,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

impl VisibilityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tau_alpha > 0.0 && self.tau_alpha < 1.0) {
            return bad(format!("tau_alpha {} outside (0, 1)", self.tau_alpha));
        }
        if !(self.alpha_depth > 0.0) {
            return bad(format!("alpha_depth {} must be positive", self.alpha_depth));
        }
        if self.k_points < 2 {
            return bad("k_points must be at least 2".into());
        }
        if !(self.vote_fraction > 0.0 && self.vote_fraction <= 1.0) {
            return bad(format!("vote_fraction {} outside (0, 1]", self.vote_fraction));
        }
        for (name, v) in [("opacity_high", self.opacity_high), ("opacity_low", self.opacity_low)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.bands == 0 || self.hidden == 0 {
            return bad("network needs at least one band and one hidden unit".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpacityState {
    Trained(f64),
    FixedHigh,
    FixedLow,
}

impl OpacityState {
    pub fn multiplier(&self, cfg: &VisibilityConfig) -> f64 {
        match *self {
            OpacityState::Trained(v) => v,
            OpacityState::FixedHigh => cfg.opacity_high,
            OpacityState::FixedLow => cfg.opacity_low,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurveId {
    pub path: usize,
    pub curve: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceReport {
    /// Mean sample importance, indexed `[path][curve]`.
    pub curve_importance: Vec<Vec<f64>>,
    /// Curves whose importance is below `tau_alpha`.
    pub non_important: Vec<CurveId>,
}

impl ImportanceReport {
    /// Mean importance over each path's curves.
    pub fn path_importance(&self) -> Vec<f64> {
        self.curve_importance
            .iter()
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    }

    pub fn mean(&self) -> f64 {
        let all: Vec<f64> = self.curve_importance.iter().flatten().copied().collect();
        all.iter().sum::<f64>() / all.len().max(1) as f64
    }
}

/// Mean importance over `k` uniform samples of `curve`.
pub fn curve_importance(net: &ImportanceNet, curve: &BezierCurve3D, cam: &Camera, k: usize) -> Result<f64> {
    let view = view_encoding(cam);
    let pts = curve.sample_points(k)?;
    Ok(pts.iter().map(|p| net.eval(p, &view)).sum::<f64>() / k as f64)
}

pub fn curve_importance_filter(
    net: &ImportanceNet,
    scene: &Scene3DVG,
    cam: &Camera,
    cfg: &VisibilityConfig,
) -> Result<ImportanceReport> {
    let mut curve_importance = Vec::with_capacity(scene.n_paths());
    let mut non_important = Vec::new();
    for (i, path) in scene.paths().iter().enumerate() {
        let mut row = Vec::with_capacity(path.n_curves());
        for (j, c) in path.curves().enumerate() {
            let v = self::curve_importance(net, &c, cam, cfg.k_points)?;
            if v < cfg.tau_alpha {
                non_important.push(CurveId { path: i, curve: j });
            }
            row.push(v);
        }
        curve_importance.push(row);
    }
    Ok(ImportanceReport {
        curve_importance,
        non_important,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointVote {
    pub visible: bool,
    /// `|d_z - D(d_xy)|` in the camera; +inf if there is no surface.
    pub front_residual: f64,
    /// `|d_z- - D-(d_xy-)|` in the antipodal camera.
    pub back_residual: f64,
    pub tau_d: f64,
    /// False if the sample fell outside an image or onto empty depth and was
    /// counted as visible by default.
    pub decided_by_depth: bool,
}

impl PointVote {
    /// `|front - back|`, the distance from the decision boundary without slack.
    pub fn margin(&self) -> f64 {
        (self.front_residual - self.back_residual).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveVote {
    pub visible: bool,
    pub votes: Vec<PointVote>,
}

impl CurveVote {
    pub fn visible_count(&self) -> usize {
        self.votes.iter().filter(|v| v.visible).count()
    }
}

fn check_depth_cameras(cam: &Camera, front: &dyn DepthField, back: &dyn DepthField) -> Result<()> {
    if front.camera() != cam {
        return Err(Error::Config(
            "front depth map was not rendered from the voting camera".into(),
        ));
    }
    if !cam.is_antipodal_of(back.camera()) {
        return Err(Error::Config(
            "back depth map was not rendered from the antipodal camera".into(),
        ));
    }
    Ok(())
}

/// Vote of a single 3D point. Points outside either image, behind a camera,
/// or over empty depth are counted visible.
pub fn point_vote(
    p: &crate::geometry::Vec3,
    cam: &Camera,
    anti: &Camera,
    front: &dyn DepthField,
    back: &dyn DepthField,
    alpha_depth: f64,
) -> PointVote {
    let default = PointVote {
        visible: true,
        front_residual: f64::INFINITY,
        back_residual: f64::INFINITY,
        tau_d: 0.0,
        decided_by_depth: false,
    };
    let (Ok(f), Ok(b)) = (project_point(cam, p), project_point(anti, p)) else {
        return default;
    };
    let (Some(df), Some(db)) = (front.depth_at(&f.d_xy), back.depth_at(&b.d_xy)) else {
        return default;
    };
    if df.is_infinite() || db.is_infinite() {
        return PointVote {
            front_residual: (f.d_z - df).abs(),
            back_residual: (b.d_z - db).abs(),
            ..default
        };
    }
    let front_residual = (f.d_z - df).abs();
    let back_residual = (b.d_z - db).abs();
    let tau_d = alpha_depth * (df - db).abs();
    PointVote {
        visible: front_residual - tau_d < back_residual,
        front_residual,
        back_residual,
        tau_d,
        decided_by_depth: true,
    }
}

/// Antipodal-depth vote over `cfg.k_points` samples of `curve`.
pub fn antipodal_vote(
    curve: &BezierCurve3D,
    cam: &Camera,
    depth_front: &dyn DepthField,
    depth_back: &dyn DepthField,
    cfg: &VisibilityConfig,
) -> Result<CurveVote> {
    check_depth_cameras(cam, depth_front, depth_back)?;
    let anti = depth_back.camera();
    let votes: Vec<PointVote> = uniform_params(cfg.k_points)?
        .into_iter()
        .map(|t| {
            point_vote(
                &curve.eval_unchecked(t),
                cam,
                anti,
                depth_front,
                depth_back,
                cfg.alpha_depth,
            )
        })
        .collect();
    let n_visible = votes.iter().filter(|v| v.visible).count();
    Ok(CurveVote {
        visible: n_visible as f64 > cfg.vote_fraction * votes.len() as f64,
        votes,
    })
}

/// Votes for every curve of every path, indexed `[path][curve]`.
pub fn scene_votes(
    scene: &Scene3DVG,
    cam: &Camera,
    depth_front: &dyn DepthField,
    depth_back: &dyn DepthField,
    cfg: &VisibilityConfig,
) -> Result<Vec<Vec<CurveVote>>> {
    scene
        .paths()
        .iter()
        .map(|p| {
            p.curves()
                .map(|c| antipodal_vote(&c, cam, depth_front, depth_back, cfg))
                .collect()
        })
        .collect()
}

/// A path wins the vote if more than `vote_fraction` of all its samples do.
pub fn path_visible(votes: &[CurveVote], cfg: &VisibilityConfig) -> bool {
    let total: usize = votes.iter().map(|v| v.votes.len()).sum();
    let visible: usize = votes.iter().map(CurveVote::visible_count).sum();
    visible as f64 > cfg.vote_fraction * total as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    Train,
    Inference,
}

/// Per-path opacity state for one view.
///
/// `votes` is only consulted in inference; without votes a path must be
/// important to be drawn opaque.
pub fn resolve_opacities(
    importance: &ImportanceReport,
    votes: Option<&[Vec<CurveVote>]>,
    mode: RenderMode,
    cfg: &VisibilityConfig,
) -> Vec<OpacityState> {
    let path_imp = importance.path_importance();
    path_imp
        .iter()
        .enumerate()
        .map(|(i, &imp)| match mode {
            RenderMode::Train => {
                if imp < cfg.tau_alpha {
                    OpacityState::Trained(imp)
                } else {
                    OpacityState::FixedHigh
                }
            }
            RenderMode::Inference => {
                let voted = votes.is_some_and(|v| path_visible(&v[i], cfg));
                if imp >= cfg.tau_alpha || voted {
                    OpacityState::FixedHigh
                } else {
                    OpacityState::FixedLow
                }
            }
        })
        .collect()
}
