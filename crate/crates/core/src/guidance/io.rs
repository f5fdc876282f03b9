//! On-disk guidance layout.
//!
//! ```text
//! <dir>/step_00012/meta.json          {"t": 431, "cfg_scale": 4.7}
//! <dir>/step_00012/cam_00.png         target image
//! <dir>/step_00012/cam_00.json        camera
//! <dir>/step_00012/cam_00.front.pfm   depth from the camera
//! <dir>/step_00012/cam_00.back.pfm    depth from the antipodal camera
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::raster::{read_png, write_png};
use crate::visibility::DepthMap;

use super::oracle::GuidanceSample;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMeta {
    pub t: u32,
    pub cfg_scale: f64,
}

fn step_dir(root: &Path, step: usize) -> PathBuf {
    root.join(format!("step_{step:05}"))
}

fn ingest(path: &Path, reason: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Writes samples in the guidance layout. Samples sharing a step must share
/// its timestep.
pub fn export_guidance(root: &Path, samples: &[GuidanceSample]) -> Result<()> {
    let mut meta: BTreeMap<usize, StepMeta> = BTreeMap::new();
    for s in samples {
        let m = StepMeta {
            t: s.t,
            cfg_scale: s.cfg_scale,
        };
        if let Some(prev) = meta.insert(s.step, m) {
            if prev != m {
                return Err(Error::Argument(format!(
                    "step {} has samples with different timesteps",
                    s.step
                )));
            }
        }
    }
    for (&step, m) in &meta {
        let dir = step_dir(root, step);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let p = dir.join("meta.json");
        fs::write(&p, serde_json::to_string_pretty(m)?).map_err(|e| Error::io(&p, e))?;
    }
    for s in samples {
        let dir = step_dir(root, s.step);
        let stem = format!("cam_{:02}", s.camera_id);
        write_png(&dir.join(format!("{stem}.png")), &s.image)?;
        let p = dir.join(format!("{stem}.json"));
        fs::write(&p, serde_json::to_string_pretty(&s.camera)?).map_err(|e| Error::io(&p, e))?;
        s.depth_front.write_pfm(&dir.join(format!("{stem}.front.pfm")))?;
        s.depth_back.write_pfm(&dir.join(format!("{stem}.back.pfm")))?;
    }
    Ok(())
}

fn parse_index(name: &str, prefix: &str, suffix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
}

fn sorted_entries(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let e = e.map_err(|e| Error::io(dir, e))?;
        names.push(e.file_name().to_string_lossy().into_owned());
    }
    names.sort();
    Ok(names)
}

/// Reads every sample under `root`, ordered by step then camera index.
pub fn load_guidance(root: &Path) -> Result<Vec<GuidanceSample>> {
    let mut steps: Vec<(usize, PathBuf)> = sorted_entries(root)?
        .into_iter()
        .filter_map(|n| parse_index(&n, "step_", "").map(|s| (s, root.join(n))))
        .filter(|(_, p)| p.is_dir())
        .collect();
    steps.sort();
    if steps.is_empty() {
        return Err(ingest(root, "no step_* directories"));
    }
    let mut out = Vec::new();
    for (step, dir) in steps {
        let meta_path = dir.join("meta.json");
        let text = fs::read_to_string(&meta_path).map_err(|e| ingest(&meta_path, e.to_string()))?;
        let meta: StepMeta =
            serde_json::from_str(&text).map_err(|e| ingest(&meta_path, e.to_string()))?;
        let mut cams: Vec<usize> = sorted_entries(&dir)?
            .iter()
            .filter_map(|n| parse_index(n, "cam_", ".png"))
            .collect();
        cams.sort();
        if cams.is_empty() {
            return Err(ingest(&dir, "step has no cam_*.png images"));
        }
        for id in cams {
            let stem = format!("cam_{id:02}");
            let png = dir.join(format!("{stem}.png"));
            let cam_path = dir.join(format!("{stem}.json"));
            let front = dir.join(format!("{stem}.front.pfm"));
            let back = dir.join(format!("{stem}.back.pfm"));
            for p in [&cam_path, &front, &back] {
                if !p.is_file() {
                    return Err(ingest(p, "missing sidecar"));
                }
            }
            let text = fs::read_to_string(&cam_path).map_err(|e| ingest(&cam_path, e.to_string()))?;
            let camera: Camera =
                serde_json::from_str(&text).map_err(|e| ingest(&cam_path, e.to_string()))?;
            let image = read_png(&png).map_err(|e| ingest(&png, e.to_string()))?;
            if image.width != camera.width() as usize || image.height != camera.height() as usize {
                return Err(ingest(
                    &png,
                    format!(
                        "image is {}x{} but camera is {}x{}",
                        image.width,
                        image.height,
                        camera.width(),
                        camera.height()
                    ),
                ));
            }
            let anti = camera.antipodal()?;
            out.push(GuidanceSample {
                step,
                camera_id: id,
                t: meta.t,
                cfg_scale: meta.cfg_scale,
                depth_front: DepthMap::read_pfm(&front, camera.clone())?,
                depth_back: DepthMap::read_pfm(&back, anti)?,
                camera,
                image,
            });
        }
    }
    Ok(out)
}
