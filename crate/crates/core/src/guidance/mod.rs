//! Guidance for multi-view fitting: the timestep/scale schedule, an analytic
//! oracle that renders target views, and sources that feed targets to the
//! optimizer step by step.

mod io;
mod oracle;
mod schedule;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::{sample_camera, Camera, CameraSamplerConfig};
use crate::error::{Error, Result};
use crate::raster::Image;
use crate::visibility::DepthMap;

pub use io::{export_guidance, load_guidance, StepMeta};
pub use oracle::{oracle_render, EdgeStyle, GuidanceSample, Hit, OracleDepth, OracleScene, Primitive};
pub use schedule::{
    add_noise, anneal_timestep, blur_sigma, cfg_scale, guided_delta, reconstruct_x0, AlphaBar,
    ScheduleConfig,
};

const TIMESTEP_STREAM: u64 = 1;
const CAMERA_STREAM: u64 = 2;

/// Random stream that timesteps are drawn from for a run seeded with `seed`.
pub fn timestep_rng(seed: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(TIMESTEP_STREAM);
    r
}

fn camera_rng(seed: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(CAMERA_STREAM);
    r
}

/// `(step, t, cfg_scale)` for every step of a run seeded with `seed`.
pub fn schedule_trace(cfg: &ScheduleConfig, seed: u64) -> Result<Vec<(usize, u32, f64)>> {
    cfg.validate()?;
    let mut rng = timestep_rng(seed);
    (0..cfg.total_steps)
        .map(|s| {
            let t = anneal_timestep(s, cfg, &mut rng);
            Ok((s, t, cfg_scale(t, cfg)?))
        })
        .collect()
}

/// Supplies target views to the fitting loop.
pub trait GuidanceSource {
    /// Targets for optimization step `step`; at most `batch` of them.
    fn next_batch(&mut self, step: usize, batch: usize) -> Result<Vec<GuidanceSample>>;
}

/// Fresh random cameras every step, rendered by the oracle.
pub struct OracleGuidance {
    pub scene: OracleScene,
    pub schedule: ScheduleConfig,
    pub sampler: CameraSamplerConfig,
    t_rng: ChaCha8Rng,
    cam_rng: ChaCha8Rng,
}

impl OracleGuidance {
    pub fn new(
        scene: OracleScene,
        schedule: ScheduleConfig,
        sampler: CameraSamplerConfig,
        seed: u64,
    ) -> Result<Self> {
        schedule.validate()?;
        sampler.validate()?;
        Ok(Self {
            scene,
            schedule,
            sampler,
            t_rng: timestep_rng(seed),
            cam_rng: camera_rng(seed),
        })
    }
}

impl GuidanceSource for OracleGuidance {
    fn next_batch(&mut self, step: usize, batch: usize) -> Result<Vec<GuidanceSample>> {
        let t = anneal_timestep(step, &self.schedule, &mut self.t_rng);
        (0..batch)
            .map(|i| {
                let cam = sample_camera(&mut self.cam_rng, &self.sampler)?;
                let mut s = oracle_render(&self.scene, &cam, step, t, &self.schedule)?;
                s.camera_id = i;
                Ok(s)
            })
            .collect()
    }
}

/// A fixed view with its sharp target.
#[derive(Clone, Debug)]
pub struct GuidanceView {
    pub camera: Camera,
    pub target: Image,
    pub depth_front: DepthMap,
    pub depth_back: DepthMap,
}

/// A fixed pool of views whose sharp targets are blurred according to the
/// schedule. Each step draws a batch of distinct views.
pub struct ViewSetGuidance {
    pub views: Vec<GuidanceView>,
    pub schedule: ScheduleConfig,
    t_rng: ChaCha8Rng,
    pick_rng: ChaCha8Rng,
}

impl ViewSetGuidance {
    pub fn new(views: Vec<GuidanceView>, schedule: ScheduleConfig, seed: u64) -> Result<Self> {
        schedule.validate()?;
        if views.is_empty() {
            return Err(Error::Argument("view set is empty".into()));
        }
        Ok(Self {
            views,
            schedule,
            t_rng: timestep_rng(seed),
            pick_rng: camera_rng(seed),
        })
    }
}

impl GuidanceSource for ViewSetGuidance {
    fn next_batch(&mut self, step: usize, batch: usize) -> Result<Vec<GuidanceSample>> {
        let t = anneal_timestep(step, &self.schedule, &mut self.t_rng);
        let scale = cfg_scale(t, &self.schedule)?;
        let sigma = blur_sigma(scale, &self.schedule);
        let n = batch.min(self.views.len());
        let picks = index::sample(&mut self.pick_rng, self.views.len(), n).into_vec();
        Ok(picks
            .into_iter()
            .map(|i| {
                let v = &self.views[i];
                GuidanceSample {
                    step,
                    camera_id: i,
                    t,
                    cfg_scale: scale,
                    camera: v.camera.clone(),
                    image: v.target.gaussian_blur(sigma),
                    depth_front: v.depth_front.clone(),
                    depth_back: v.depth_back.clone(),
                }
            })
            .collect())
    }
}

/// Pre-rendered guidance read from disk; the k-th fitting step consumes the
/// k-th recorded step.
pub struct IngestedGuidance {
    steps: Vec<Vec<GuidanceSample>>,
}

impl IngestedGuidance {
    pub fn new(samples: Vec<GuidanceSample>) -> Self {
        let mut steps: Vec<Vec<GuidanceSample>> = Vec::new();
        for s in samples {
            match steps.last_mut() {
                Some(last) if last[0].step == s.step => last.push(s),
                _ => steps.push(vec![s]),
            }
        }
        Self { steps }
    }

    pub fn load(root: &std::path::Path) -> Result<Self> {
        Ok(Self::new(load_guidance(root)?))
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }
}

impl GuidanceSource for IngestedGuidance {
    fn next_batch(&mut self, step: usize, batch: usize) -> Result<Vec<GuidanceSample>> {
        let recorded = self.steps.get(step).ok_or_else(|| {
            Error::Run(format!(
                "guidance exhausted: {} recorded steps, step {step} requested",
                self.steps.len()
            ))
        })?;
        Ok(recorded.iter().take(batch).cloned().collect())
    }
}
