//! Multi-view fitting: per step, render the scene from each guidance camera,
//! compare against the targets, backpropagate through the rasterizer, the
//! projection and the importance network, and take one Adam step.

mod adam;
mod checkpoint;
mod init;
mod loss;
mod metrics;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::{bernstein, uniform_params, PathKind, Scene3DVG, Vec3};
use crate::guidance::{GuidanceSample, GuidanceSource};
use crate::project::{pixel_jacobian, project_scene_clipped, stroke_scale};
use crate::raster::{render_and_backprop, Canvas, Image};
use crate::visibility::{
    curve_importance_filter, path_visible, resolve_opacities, scene_votes, view_encoding,
    ImportanceNet, OpacityState, RenderMode, VisibilityConfig,
};

pub use adam::{AdamHyper, AdamState};
pub use checkpoint::{load_checkpoint, load_net, save_checkpoint, NET_FILE, SCENE_FILE};
pub use init::{farthest_point_sample, init_scene, surface_samples, InitStrategy, INIT_SPREAD};
pub use loss::{
    distance_by_name, image_loss, register_distance, DistanceFactory, ImageDistance, ImageLoss,
    L2, LossConfig, LossValue, LossWeights, PyramidL2, OFF,
};
pub use metrics::{adjacent_view_consistency, chamfer_distance, render_scene_view, OpacityMode, RenderedView};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub total_steps: usize,
    pub batch_cameras: usize,
    pub seed: u64,
    pub init: InitStrategy,
    pub n_paths: usize,
    pub kind: PathKind,
    pub lr_points: f64,
    pub lr_color: f64,
    pub lr_width: f64,
    pub lr_net: f64,
    /// Train stroke widths as well (sketches only).
    pub optimize_widths: bool,
    pub adam: AdamHyper,
    /// Importance filtering during training; off draws every path opaque.
    pub use_visibility: bool,
    /// Steps between antipodal votes recorded in the log; 0 disables.
    pub vote_every: usize,
    /// Steps between intermediate checkpoints; 0 keeps only the final one.
    pub checkpoint_every: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            total_steps: 2000,
            batch_cameras: 4,
            seed: 0,
            init: InitStrategy::FarthestPoint,
            n_paths: 64,
            kind: PathKind::Sketch,
            lr_points: 0.001,
            lr_color: 0.001,
            lr_width: 0.001,
            lr_net: 0.001,
            optimize_widths: false,
            adam: AdamHyper::default(),
            use_visibility: true,
            vote_every: 50,
            checkpoint_every: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_cameras < 1 {
            return Err(Error::Config("batch_cameras must be at least 1".into()));
        }
        if self.total_steps < 1 {
            return Err(Error::Config("total_steps must be at least 1".into()));
        }
        if self.n_paths < 1 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        for (name, lr) in [
            ("lr_points", self.lr_points),
            ("lr_color", self.lr_color),
            ("lr_width", self.lr_width),
            ("lr_net", self.lr_net),
        ] {
            if !(lr.is_finite() && lr >= 0.0) {
                return Err(Error::Config(format!("{name} = {lr} must be finite and >= 0")));
            }
        }
        let AdamHyper { beta1, beta2, eps } = self.adam;
        if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
            return Err(Error::Config("adam betas must lie in [0, 1) and eps be positive".into()));
        }
        Ok(())
    }
}

/// Everything `fit` needs besides the initial state and the guidance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub fit: FitConfig,
    pub visibility: VisibilityConfig,
    pub loss: LossConfig,
}

/// One log record per optimization step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub loss_total: f64,
    pub loss_per_term: BTreeMap<String, f64>,
    pub t: u32,
    pub cfg_scale: f64,
    pub mean_importance: f64,
    /// Fraction of paths winning the antipodal vote, on vote steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visible_fraction: Option<f64>,
}

/// Gradients of the batch loss.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneGrads {
    /// Per path, per free control point.
    pub points: Vec<Vec<Vec3>>,
    pub colors: Vec<[f64; 4]>,
    pub widths: Vec<f64>,
    pub net: Vec<f64>,
}

impl SceneGrads {
    fn zeros(scene: &Scene3DVG, net: &ImportanceNet) -> Self {
        Self {
            points: scene
                .paths()
                .iter()
                .map(|p| vec![Vec3::zeros(); p.control_points().len()])
                .collect(),
            colors: vec![[0.0; 4]; scene.n_paths()],
            widths: vec![0.0; scene.n_paths()],
            net: vec![0.0; net.params().len()],
        }
    }

    fn add(&mut self, other: &SceneGrads) {
        for (a, b) in self.points.iter_mut().zip(&other.points) {
            for (p, q) in a.iter_mut().zip(b) {
                *p += q;
            }
        }
        for (a, b) in self.colors.iter_mut().zip(&other.colors) {
            for k in 0..4 {
                a[k] += b[k];
            }
        }
        for (a, b) in self.widths.iter_mut().zip(&other.widths) {
            *a += b;
        }
        for (a, b) in self.net.iter_mut().zip(&other.net) {
            *a += b;
        }
    }
}

/// Loss and gradients over one batch of guidance views.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchEval {
    /// Mean over views of the weighted loss.
    pub loss: f64,
    pub per_term: BTreeMap<String, f64>,
    pub grads: SceneGrads,
    pub mean_importance: f64,
}

struct ViewEval {
    loss: f64,
    per_term: Vec<(&'static str, f64)>,
    grads: SceneGrads,
    mean_importance: f64,
}

fn train_opacities(
    scene: &Scene3DVG,
    net: &ImportanceNet,
    cam: &Camera,
    vis: &VisibilityConfig,
    use_visibility: bool,
) -> Result<(Vec<OpacityState>, f64)> {
    let report = curve_importance_filter(net, scene, cam, vis)?;
    let states = if use_visibility {
        resolve_opacities(&report, None, RenderMode::Train, vis)
    } else {
        vec![OpacityState::FixedHigh; scene.n_paths()]
    };
    Ok((states, report.mean()))
}

fn eval_view(
    scene: &Scene3DVG,
    net: &ImportanceNet,
    sample: &GuidanceSample,
    loss: &ImageLoss,
    settings: &FitSettings,
    weight: f64,
) -> Result<ViewEval> {
    let vis = &settings.visibility;
    let cam = &sample.camera;
    let mut canvas = Canvas::new(cam.width() as usize, cam.height() as usize)?;
    canvas.background = [1.0; 3];
    let (states, mean_importance) = train_opacities(scene, net, cam, vis, settings.fit.use_visibility)?;
    let opacities: Vec<f64> = states.iter().map(|s| s.multiplier(vis)).collect();
    let (scene2d, source) = project_scene_clipped(cam, scene, &opacities)?;

    let mut value: Option<Result<LossValue>> = None;
    let (_, _, egrads) = render_and_backprop(&scene2d, &canvas, |img| match loss.eval(img, &sample.image) {
        Ok(mut v) => {
            for g in &mut v.gradient.data {
                *g *= weight;
            }
            let out = (v.total, std::mem::replace(&mut v.gradient, Image::zeros(0, 0, 4)));
            value = Some(Ok(v));
            out
        }
        Err(e) => {
            value = Some(Err(e));
            (0.0, Image::zeros(canvas.width, canvas.height, 4))
        }
    });
    let value = value.expect("loss closure ran")?;

    let mut grads = SceneGrads::zeros(scene, net);
    let view = view_encoding(cam);
    let ts = uniform_params(vis.k_points)?;
    let width_scale = stroke_scale(cam);
    for (eg, &i) in egrads.iter().zip(&source) {
        let path = &scene.paths()[i];
        let pts = path.control_points();
        for (m, g2) in eg.points.iter().enumerate() {
            if g2.x == 0.0 && g2.y == 0.0 {
                continue;
            }
            let j = pixel_jacobian(cam, &pts[m])?;
            grads.points[i][m] += j.transpose() * g2;
        }
        grads.colors[i] = eg.color;
        grads.widths[i] = eg.width * width_scale;
        // trained opacity is the mean importance over the path's samples
        if let OpacityState::Trained(_) = states[i] {
            if eg.opacity != 0.0 {
                let g = eg.opacity / (path.n_curves() * ts.len()) as f64;
                for c in 0..path.n_curves() {
                    let idx = path.curve_indices(c);
                    let curve = path.curve(c);
                    for &t in &ts {
                        let trace = net.trace(&curve.eval_unchecked(t), &view);
                        let dp = net.backward(&trace, g, &mut grads.net);
                        let b = bernstein(t);
                        for q in 0..4 {
                            grads.points[i][idx[q]] += dp * b[q];
                        }
                    }
                }
            }
        }
    }
    Ok(ViewEval {
        loss: value.total,
        per_term: value.per_term,
        grads,
        mean_importance,
    })
}

/// Mean loss over `batch` and its gradient with respect to every trained
/// parameter. Views are evaluated in parallel and reduced in batch order.
pub fn evaluate_batch(
    scene: &Scene3DVG,
    net: &ImportanceNet,
    batch: &[GuidanceSample],
    settings: &FitSettings,
) -> Result<BatchEval> {
    if batch.is_empty() {
        return Err(Error::Argument("empty guidance batch".into()));
    }
    let loss = settings.loss.build()?;
    let weight = 1.0 / batch.len() as f64;
    let views: Vec<Result<ViewEval>> = batch
        .par_iter()
        .map(|s| eval_view(scene, net, s, &loss, settings, weight))
        .collect();
    let mut out = BatchEval {
        loss: 0.0,
        per_term: BTreeMap::new(),
        grads: SceneGrads::zeros(scene, net),
        mean_importance: 0.0,
    };
    for v in views {
        let v = v?;
        out.loss += weight * v.loss;
        for (term, value) in v.per_term {
            *out.per_term.entry(term.to_string()).or_insert(0.0) += weight * value;
        }
        out.grads.add(&v.grads);
        out.mean_importance += weight * v.mean_importance;
    }
    Ok(out)
}

/// Fraction of paths winning the antipodal vote, averaged over the batch.
fn vote_fraction(scene: &Scene3DVG, batch: &[GuidanceSample], vis: &VisibilityConfig) -> Result<f64> {
    let mut total = 0.0;
    for s in batch {
        let votes = scene_votes(scene, &s.camera, &s.depth_front, &s.depth_back, vis)?;
        let visible = votes.iter().filter(|v| path_visible(v, vis)).count();
        total += visible as f64 / scene.n_paths() as f64;
    }
    Ok(total / batch.len() as f64)
}

/// Final state plus the per-step log.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub scene: Scene3DVG,
    pub net: ImportanceNet,
    pub log: Vec<StepLog>,
}

/// Called after every step with the log record and the current state.
pub type StepHook<'a> = dyn FnMut(&StepLog, &Scene3DVG, &ImportanceNet) -> Result<()> + 'a;

const MIN_WIDTH: f64 = 0.05;

/// Runs `settings.fit.total_steps` optimization steps.
pub fn fit(
    mut scene: Scene3DVG,
    mut net: ImportanceNet,
    source: &mut dyn GuidanceSource,
    settings: &FitSettings,
    mut on_step: Option<&mut StepHook<'_>>,
) -> Result<FitResult> {
    let cfg = &settings.fit;
    cfg.validate()?;
    settings.visibility.validate()?;
    settings.loss.validate()?;
    let n_points: usize = scene.paths().iter().map(|p| p.control_points().len() * 3).sum();
    let lr_width = if cfg.optimize_widths && scene.kind() == PathKind::Sketch {
        cfg.lr_width
    } else {
        0.0
    };
    let mut adam = AdamState::new(
        cfg.adam,
        &[
            (cfg.lr_points, n_points),
            (cfg.lr_color, 4 * scene.n_paths()),
            (lr_width, scene.n_paths()),
            (cfg.lr_net, net.params().len()),
        ],
    );
    let mut log = Vec::with_capacity(cfg.total_steps);
    for step in 0..cfg.total_steps {
        let batch = source.next_batch(step, cfg.batch_cameras)?;
        if batch.is_empty() {
            return Err(Error::Run(format!("guidance produced no views at step {step}")));
        }
        let eval = evaluate_batch(&scene, &net, &batch, settings)?;
        let visible_fraction = if cfg.vote_every > 0 && step % cfg.vote_every == 0 {
            Some(vote_fraction(&scene, &batch, &settings.visibility)?)
        } else {
            None
        };
        if !eval.loss.is_finite() {
            return Err(Error::Run(format!("loss became {} at step {step}", eval.loss)));
        }

        let mut points: Vec<f64> = Vec::with_capacity(n_points);
        let mut g_points: Vec<f64> = Vec::with_capacity(n_points);
        for (p, g) in scene.paths().iter().zip(&eval.grads.points) {
            for (q, gq) in p.control_points().iter().zip(g) {
                points.extend(q.iter());
                g_points.extend(gq.iter());
            }
        }
        let mut colors: Vec<f64> = scene.paths().iter().flat_map(|p| p.color).collect();
        let g_colors: Vec<f64> = eval.grads.colors.iter().flatten().copied().collect();
        let mut widths: Vec<f64> = scene.paths().iter().map(|p| p.stroke_width).collect();
        let mut params = net.params().to_vec();
        adam.step(
            &mut [&mut points, &mut colors, &mut widths, &mut params],
            &[&g_points, &g_colors, &eval.grads.widths, &eval.grads.net],
        )?;

        let mut it = points.chunks_exact(3);
        for (i, p) in scene.paths_mut().iter_mut().enumerate() {
            for q in p.control_points_mut() {
                let c = it.next().expect("point count");
                *q = Vec3::new(c[0], c[1], c[2]);
            }
            for k in 0..4 {
                p.color[k] = colors[4 * i + k].clamp(0.0, 1.0);
            }
            p.stroke_width = widths[i].max(MIN_WIDTH);
        }
        net.params_mut().copy_from_slice(&params);

        let record = StepLog {
            step,
            loss_total: eval.loss,
            loss_per_term: eval.per_term,
            t: batch[0].t,
            cfg_scale: batch[0].cfg_scale,
            mean_importance: eval.mean_importance,
            visible_fraction,
        };
        if let Some(hook) = on_step.as_mut() {
            hook(&record, &scene, &net)?;
        }
        log.push(record);
    }
    Ok(FitResult { scene, net, log })
}
