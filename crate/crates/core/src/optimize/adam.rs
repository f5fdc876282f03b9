use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Group {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Adam with one learning rate per parameter group and a shared step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    hyper: AdamHyper,
    step: u64,
    groups: Vec<Group>,
}

impl AdamState {
    /// One group per `(learning rate, parameter count)`.
    pub fn new(hyper: AdamHyper, groups: &[(f64, usize)]) -> Self {
        Self {
            hyper,
            step: 0,
            groups: groups
                .iter()
                .map(|&(lr, n)| Group {
                    lr,
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                })
                .collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every group.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.groups.len() || grads.len() != self.groups.len() {
            return Err(Error::Argument(format!(
                "adam has {} groups, got {} parameter and {} gradient groups",
                self.groups.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if params[i].len() != g.m.len() || grads[i].len() != g.m.len() {
                return Err(Error::Argument(format!("adam group {i} shape mismatch")));
            }
        }
        self.step += 1;
        let AdamHyper { beta1, beta2, eps } = self.hyper;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (g, (p, gr)) in self.groups.iter_mut().zip(params.iter_mut().zip(grads)) {
            for k in 0..g.m.len() {
                g.m[k] = beta1 * g.m[k] + (1.0 - beta1) * gr[k];
                g.v[k] = beta2 * g.v[k] + (1.0 - beta2) * gr[k] * gr[k];
                let m_hat = g.m[k] / c1;
                let v_hat = g.v[k] / c2;
                p[k] -= g.lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
