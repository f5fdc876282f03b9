//! C ABI for the curve3dvg engine.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style functions and released with the matching `*_free`. Every fallible
//! call returns a [`C3dStatus`]; on failure `c3d_last_error` describes what
//! went wrong on the calling thread. Strings returned by the library must be
//! released with `c3d_string_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use curve3dvg::camera::{orbit_camera, Camera};
use curve3dvg::cli::{initial_state, run_command, RunConfig};
use curve3dvg::geometry::{Scene3DVG, Vec3};
use curve3dvg::guidance::{OracleGuidance, OracleScene};
use curve3dvg::optimize::{fit, load_net, render_scene_view, FitSettings, OpacityMode, RenderedView};
use curve3dvg::project::project_point;
use curve3dvg::raster::{export_svg, Canvas};
use curve3dvg::visibility::{DepthSource, ImportanceNet, OpacityState, VisibilityConfig};
use curve3dvg::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum C3dStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Argument = 4,
    Config = 5,
    InvalidScene = 6,
    Ingestion = 7,
    Run = 8,
    Io = 9,
    Json = 10,
    Png = 11,
    BehindCamera = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

/// A 3D vector graphics scene.
pub struct C3dScene(Scene3DVG);

/// A pinhole camera.
pub struct C3dCamera(Camera);

/// A curve-importance network.
pub struct C3dNet(ImportanceNet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> C3dStatus {
    match e {
        Error::Domain { .. } => C3dStatus::Domain,
        Error::Argument(_) => C3dStatus::Argument,
        Error::BehindCamera { .. } => C3dStatus::BehindCamera,
        Error::Config(_) => C3dStatus::Config,
        Error::InvalidScene(_) => C3dStatus::InvalidScene,
        Error::Ingestion { .. } => C3dStatus::Ingestion,
        Error::Run(_) => C3dStatus::Run,
        Error::Io { .. } => C3dStatus::Io,
        Error::Json(_) => C3dStatus::Json,
        Error::Png(_) => C3dStatus::Png,
    }
}

struct Fail(C3dStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(C3dStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> C3dStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            C3dStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            C3dStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(C3dStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn vec3_arg(p: *const f64, what: &str) -> Result<Vec3, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s)
        .map_err(|_| Fail(C3dStatus::Argument, "string contains NUL".into()))?
        .into_raw();
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Engine version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn c3d_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn c3d_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn c3d_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scene from its JSON document.
#[no_mangle]
pub unsafe extern "C" fn c3d_scene_from_json(json: *const c_char, out: *mut *mut C3dScene) -> C3dStatus {
    guard(|| {
        let scene = Scene3DVG::from_json(str_arg(json, "json")?)?;
        put(out, C3dScene(scene))
    })
}

/// Reads a scene JSON file.
#[no_mangle]
pub unsafe extern "C" fn c3d_scene_load(path: *const c_char, out: *mut *mut C3dScene) -> C3dStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| Fail(C3dStatus::Io, format!("{path}: {e}")))?;
        put(out, C3dScene(Scene3DVG::from_json(&text)?))
    })
}

/// Serializes a scene to JSON; release the result with `c3d_string_free`.
#[no_mangle]
pub unsafe extern "C" fn c3d_scene_to_json(scene: *const C3dScene, out: *mut *mut c_char) -> C3dStatus {
    guard(|| {
        let scene = handle(scene, "scene")?;
        put_string(out, scene.0.to_json())
    })
}

/// Number of paths; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn c3d_scene_path_count(scene: *const C3dScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.n_paths())
}

#[no_mangle]
pub unsafe extern "C" fn c3d_scene_free(scene: *mut C3dScene) {
    free(scene)
}

/// Camera at `position` looking at `look_at`; vectors are 3 doubles each.
#[no_mangle]
pub unsafe extern "C" fn c3d_camera_new(
    position: *const f64,
    look_at: *const f64,
    up: *const f64,
    fov_deg: f64,
    width: u32,
    height: u32,
    out: *mut *mut C3dCamera,
) -> C3dStatus {
    guard(|| {
        let cam = Camera::new(
            vec3_arg(position, "position")?,
            vec3_arg(look_at, "look_at")?,
            vec3_arg(up, "up")?,
            fov_deg,
            width,
            height,
        )?;
        put(out, C3dCamera(cam))
    })
}

/// Camera on a sphere around the origin looking at it; elevation is
/// measured from +z, which is also the up direction.
#[no_mangle]
pub unsafe extern "C" fn c3d_camera_orbit(
    radius: f64,
    azimuth_deg: f64,
    elevation_deg: f64,
    fov_deg: f64,
    width: u32,
    height: u32,
    out: *mut *mut C3dCamera,
) -> C3dStatus {
    guard(|| put(out, C3dCamera(orbit_camera(radius, azimuth_deg, elevation_deg, fov_deg, width, height)?)))
}

#[no_mangle]
pub unsafe extern "C" fn c3d_camera_free(camera: *mut C3dCamera) {
    free(camera)
}

/// Projects a 3D point: `out_xy` receives 2 normalized image coordinates,
/// `out_depth` (nullable) the camera-space depth.
#[no_mangle]
pub unsafe extern "C" fn c3d_project_point(
    camera: *const C3dCamera,
    point: *const f64,
    out_xy: *mut f64,
    out_depth: *mut f64,
) -> C3dStatus {
    guard(|| {
        let cam = handle(camera, "camera")?;
        if out_xy.is_null() {
            return Err(null("out_xy"));
        }
        let p = project_point(&cam.0, &vec3_arg(point, "point")?)?;
        *out_xy = p.d_xy.x;
        *out_xy.add(1) = p.d_xy.y;
        if !out_depth.is_null() {
            *out_depth = p.d_z;
        }
        Ok(())
    })
}

/// Reads a network file written by a fit run.
#[no_mangle]
pub unsafe extern "C" fn c3d_net_load(path: *const c_char, out: *mut *mut C3dNet) -> C3dStatus {
    guard(|| put(out, C3dNet(load_net(Path::new(str_arg(path, "path")?))?)))
}

#[no_mangle]
pub unsafe extern "C" fn c3d_net_free(net: *mut C3dNet) {
    free(net)
}

unsafe fn render(
    scene: *const C3dScene,
    net: *const C3dNet,
    camera: *const C3dCamera,
    visibility_aware: bool,
    oracle: *const c_char,
) -> Result<RenderedView, Fail> {
    let scene = handle(scene, "scene")?;
    let cam = handle(camera, "camera")?;
    let vis = VisibilityConfig::default();
    let constant;
    let net = match net.as_ref() {
        Some(n) => &n.0,
        None => {
            constant = ImportanceNet::constant(vis.bands, vis.hidden, 0.999);
            &constant
        }
    };
    let oracle = opt_str_arg(oracle, "oracle")?.map(OracleScene::preset).transpose()?;
    let mode = if visibility_aware {
        OpacityMode::VisibilityAware
    } else {
        OpacityMode::AllHigh
    };
    let depth = oracle.as_ref().map(|o| o as &dyn DepthSource);
    Ok(render_scene_view(&scene.0, net, &cam.0, mode, &vis, depth)?)
}

/// Renders `scene` into `out` as 8-bit RGBA rows (`width * height * 4`
/// bytes). `net` and `oracle` (a preset name supplying depth for visibility
/// votes) may be null.
#[no_mangle]
pub unsafe extern "C" fn c3d_render_rgba8(
    scene: *const C3dScene,
    net: *const C3dNet,
    camera: *const C3dCamera,
    visibility_aware: bool,
    oracle: *const c_char,
    out: *mut u8,
    out_len: usize,
) -> C3dStatus {
    guard(|| {
        let cam = handle(camera, "camera")?;
        let need = cam.0.width() as usize * cam.0.height() as usize * 4;
        if out.is_null() {
            return Err(null("out"));
        }
        if out_len < need {
            return Err(Fail(C3dStatus::BufferTooSmall, format!("need {need} bytes, got {out_len}")));
        }
        let view = render(scene, net, camera, visibility_aware, oracle)?;
        let buf = std::slice::from_raw_parts_mut(out, need);
        for (dst, px) in buf.chunks_exact_mut(4).zip(view.image.data.chunks_exact(view.image.channels)) {
            for c in 0..3 {
                dst[c] = (px[c].clamp(0.0, 1.0) * 255.0).round() as u8;
            }
            dst[3] = 255;
        }
        Ok(())
    })
}

/// Renders `scene` to an SVG document; invisible paths are drawn faintly.
#[no_mangle]
pub unsafe extern "C" fn c3d_render_svg(
    scene: *const C3dScene,
    net: *const C3dNet,
    camera: *const C3dCamera,
    visibility_aware: bool,
    oracle: *const c_char,
    out: *mut *mut c_char,
) -> C3dStatus {
    guard(|| {
        let view = render(scene, net, camera, visibility_aware, oracle)?;
        let cam = &handle(camera, "camera")?.0;
        let canvas = Canvas::new(cam.width() as usize, cam.height() as usize)?;
        let visible: Vec<bool> = view
            .source
            .iter()
            .map(|&p| view.states[p] != OpacityState::FixedLow)
            .collect();
        put_string(out, export_svg(&view.scene2d, &canvas, &visible))
    })
}

/// Fits a scene to renders of an oracle preset. `config_json` (nullable) uses
/// the CLI config layout; `n_paths`, `steps` and `seed` override it.
/// Identical arguments give identical results.
#[no_mangle]
pub unsafe extern "C" fn c3d_fit_oracle(
    oracle: *const c_char,
    config_json: *const c_char,
    n_paths: usize,
    steps: usize,
    seed: u64,
    out_scene: *mut *mut C3dScene,
    out_net: *mut *mut C3dNet,
) -> C3dStatus {
    guard(|| {
        if out_scene.is_null() || out_net.is_null() {
            return Err(null("output pointer"));
        }
        let oracle = OracleScene::preset(str_arg(oracle, "oracle")?)?;
        let mut cfg: RunConfig = match opt_str_arg(config_json, "config_json")? {
            Some(text) => serde_json::from_str(text).map_err(Error::from)?,
            None => RunConfig::default(),
        };
        cfg.fit.n_paths = n_paths;
        cfg.fit.total_steps = steps;
        cfg.schedule.total_steps = steps;
        cfg.fit.seed = seed;
        cfg.validate()?;
        let (scene, net) = initial_state(&cfg, Some(&oracle))?;
        let mut source = OracleGuidance::new(oracle, cfg.schedule.clone(), cfg.cameras.clone(), seed)?;
        let settings = FitSettings {
            fit: cfg.fit.clone(),
            visibility: cfg.visibility.clone(),
            loss: cfg.loss.clone(),
        };
        let result = fit(scene, net, &mut source, &settings, None)?;
        put(out_scene, C3dScene(result.scene))?;
        put(out_net, C3dNet(result.net))
    })
}

/// Runs the command-line interface with `argc` arguments (including the
/// program name) and returns its exit code: 0 success, 1 usage or
/// validation error, 2 runtime error.
#[no_mangle]
pub unsafe extern "C" fn c3d_run_cli(argc: c_int, argv: *const *const c_char) -> c_int {
    if argc < 0 || (argc > 0 && argv.is_null()) {
        set_error("argv is null");
        return 1;
    }
    let mut args = Vec::with_capacity(argc as usize);
    for i in 0..argc as usize {
        match str_arg(*argv.add(i), "argv entry") {
            Ok(s) => args.push(s.to_owned()),
            Err(Fail(_, msg)) => {
                set_error(&msg);
                return 1;
            }
        }
    }
    match catch_unwind(|| run_command(args)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            2
        }
    }
}
