//! Guidance-scale interpolation, timestep annealing and the clean-image
//! reconstruction from a noisy sample and a guided noise direction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Image;

/// Cumulative signal-retention table `alpha_bar_t`, t = 1..N.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaBar {
    /// `beta_t` linear in sqrt-space between the endpoints.
    ScaledLinear { beta_start: f64, beta_end: f64 },
    Table { values: Vec<f64> },
}

impl Default for AlphaBar {
    fn default() -> Self {
        AlphaBar::ScaledLinear {
            beta_start: 0.00085,
            beta_end: 0.012,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub lambda0: f64,
    pub lambda1: f64,
    /// Timestep sampling range as fractions of `N`.
    pub t_range: [f64; 2],
    #[serde(rename = "N")]
    pub max_timestep: u32,
    pub total_steps: usize,
    /// Width of the final sampling window, as a fraction of `N`.
    pub anneal_window: f64,
    /// Always use this timestep instead of annealing.
    pub fixed_timestep: Option<u32>,
    pub alpha_bar: AlphaBar,
    /// Guidance blur at the smallest scale, in pixels at the guidance resolution.
    pub sigma_max: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda1: 7.5,
            t_range: [0.1, 0.9],
            max_timestep: 1000,
            total_steps: 2000,
            anneal_window: 0.1,
            fixed_timestep: None,
            alpha_bar: AlphaBar::default(),
            sigma_max: 4.0,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lambda0 > 0.0 && self.lambda1 >= self.lambda0) {
            return bad(format!(
                "need lambda1 >= lambda0 > 0, got {} and {}",
                self.lambda0, self.lambda1
            ));
        }
        let [lo, hi] = self.t_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return bad(format!("t_range [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"));
        }
        if self.max_timestep < 1 {
            return bad("N must be at least 1".into());
        }
        if self.total_steps < 1 {
            return bad("total_steps must be at least 1".into());
        }
        if !(self.anneal_window > 0.0 && lo + self.anneal_window <= hi) {
            return bad(format!("anneal_window {} does not fit t_range", self.anneal_window));
        }
        if let Some(t) = self.fixed_timestep {
            if t < 1 || t > self.max_timestep {
                return bad(format!("fixed_timestep {t} outside [1, N]"));
            }
        }
        if !(self.sigma_max >= 0.0) {
            return bad("sigma_max must be non-negative".into());
        }
        let table = self.alpha_bar_table();
        if table.len() != self.max_timestep as usize {
            return bad(format!(
                "alpha_bar table has {} entries, N is {}",
                table.len(),
                self.max_timestep
            ));
        }
        if table.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return bad("alpha_bar values must lie in (0, 1]".into());
        }
        if table.windows(2).any(|w| w[1] >= w[0]) {
            return bad("alpha_bar must be strictly decreasing".into());
        }
        Ok(())
    }

    pub fn alpha_bar_table(&self) -> Vec<f64> {
        match &self.alpha_bar {
            AlphaBar::Table { values } => values.clone(),
            AlphaBar::ScaledLinear {
                beta_start,
                beta_end,
            } => {
                let n = self.max_timestep as usize;
                let (a, b) = (beta_start.sqrt(), beta_end.sqrt());
                let mut prod = 1.0;
                (0..n)
                    .map(|i| {
                        let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
                        let beta = (a + (b - a) * frac).powi(2);
                        prod *= 1.0 - beta;
                        prod
                    })
                    .collect()
            }
        }
    }

    fn check_t(&self, t: u32) -> Result<()> {
        if t < 1 || t > self.max_timestep {
            Err(Error::domain("t", t as f64, 1.0, self.max_timestep as f64))
        } else {
            Ok(())
        }
    }

    pub fn alpha_bar_at(&self, t: u32) -> Result<f64> {
        self.check_t(t)?;
        Ok(match &self.alpha_bar {
            AlphaBar::Table { values } => values[t as usize - 1],
            AlphaBar::ScaledLinear { .. } => self.alpha_bar_table()[t as usize - 1],
        })
    }

    /// Inclusive integer window `[lo, hi]` that `t` is drawn from at `step`.
    pub fn t_window(&self, step: usize) -> (u32, u32) {
        let n = self.max_timestep as f64;
        let [lo_f, hi_f] = self.t_range;
        let lo = (lo_f * n).round().max(1.0);
        let end = (lo_f + self.anneal_window) * n;
        let frac = if self.total_steps > 1 {
            (step.min(self.total_steps - 1)) as f64 / (self.total_steps - 1) as f64
        } else {
            1.0
        };
        let hi = (hi_f * n + (end - hi_f * n) * frac).round().max(lo);
        (lo as u32, hi as u32)
    }
}

/// `lambda0 + (lambda1 - lambda0) (1 - t / N)`.
pub fn cfg_scale(t: u32, cfg: &ScheduleConfig) -> Result<f64> {
    cfg.check_t(t)?;
    let frac = t as f64 / cfg.max_timestep as f64;
    Ok(cfg.lambda0 + (cfg.lambda1 - cfg.lambda0) * (1.0 - frac))
}

/// Timestep for optimization `step`: uniform over a window whose upper end
/// slides linearly from `t_hi N` down to `(t_lo + window) N`.
pub fn anneal_timestep<R: Rng + ?Sized>(step: usize, cfg: &ScheduleConfig, rng: &mut R) -> u32 {
    if let Some(t) = cfg.fixed_timestep {
        return t;
    }
    let (lo, hi) = cfg.t_window(step);
    rng.gen_range(lo..=hi)
}

/// Guided direction `eps_uncond + cfg_scale(t) * delta`.
pub fn guided_delta(eps_uncond: &Image, delta: &Image, t: u32, cfg: &ScheduleConfig) -> Result<Image> {
    if !eps_uncond.same_shape(delta) {
        return Err(Error::Argument("guided_delta: shape mismatch".into()));
    }
    let s = cfg_scale(t, cfg)?;
    let mut out = eps_uncond.clone();
    for (o, d) in out.data.iter_mut().zip(&delta.data) {
        *o += s * d;
    }
    Ok(out)
}

/// `(x_t - sqrt(1 - alpha_bar_t) delta) / sqrt(alpha_bar_t)`, elementwise.
pub fn reconstruct_x0(x_t: &Image, delta_star: &Image, t: u32, cfg: &ScheduleConfig) -> Result<Image> {
    if !x_t.same_shape(delta_star) {
        return Err(Error::Argument(format!(
            "reconstruct_x0: x_t is {}x{}x{}, delta is {}x{}x{}",
            x_t.width, x_t.height, x_t.channels, delta_star.width, delta_star.height, delta_star.channels
        )));
    }
    let ab = cfg.alpha_bar_at(t)?;
    let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut out = x_t.clone();
    for (o, d) in out.data.iter_mut().zip(&delta_star.data) {
        *o = (*o - sn * d) / sa;
    }
    Ok(out)
}

/// Forward noising `sqrt(ab) x0 + sqrt(1 - ab) eps`.
pub fn add_noise(x0: &Image, eps: &Image, t: u32, cfg: &ScheduleConfig) -> Result<Image> {
    if !x0.same_shape(eps) {
        return Err(Error::Argument("add_noise: shape mismatch".into()));
    }
    let ab = cfg.alpha_bar_at(t)?;
    let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut out = x0.clone();
    for (o, e) in out.data.iter_mut().zip(&eps.data) {
        *o = sa * *o + sn * e;
    }
    Ok(out)
}

/// Blur applied to oracle guidance at guidance scale `scale`: `sigma_max` at
/// `lambda0`, zero at `lambda1`.
pub fn blur_sigma(scale: f64, cfg: &ScheduleConfig) -> f64 {
    if cfg.lambda1 == cfg.lambda0 {
        return 0.0;
    }
    let frac = ((cfg.lambda1 - scale) / (cfg.lambda1 - cfg.lambda0)).clamp(0.0, 1.0);
    cfg.sigma_max * frac
}
