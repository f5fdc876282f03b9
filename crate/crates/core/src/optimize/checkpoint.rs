//! Checkpoint directory: `scene.json` plus `net.bin`.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Scene3DVG;
use crate::visibility::ImportanceNet;

pub const SCENE_FILE: &str = "scene.json";
pub const NET_FILE: &str = "net.bin";

pub fn save_checkpoint(dir: &Path, scene: &Scene3DVG, net: &ImportanceNet) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sp = dir.join(SCENE_FILE);
    fs::write(&sp, scene.to_json()).map_err(|e| Error::io(&sp, e))?;
    let np = dir.join(NET_FILE);
    let f = fs::File::create(&np).map_err(|e| Error::io(&np, e))?;
    let mut w = BufWriter::new(f);
    net.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&np, e))
}

pub fn load_net(path: &Path) -> Result<ImportanceNet> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ImportanceNet::read_from(BufReader::new(f))
}

pub fn load_checkpoint(dir: &Path) -> Result<(Scene3DVG, ImportanceNet)> {
    let sp = dir.join(SCENE_FILE);
    let text = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    Ok((Scene3DVG::from_json(&text)?, load_net(&dir.join(NET_FILE))?))
}
