use std::path::Path;
use std::process::Command;

use curve3dvg::cli::{run_command, schedule_csv, RunManifest};
use curve3dvg::guidance::{export_guidance, schedule_trace, GuidanceSource, OracleGuidance, OracleScene, ScheduleConfig};
use curve3dvg::camera::CameraSamplerConfig;

fn run(args: &[&str]) -> i32 {
    run_command(std::iter::once("curve3dvg").chain(args.iter().copied()))
}

fn manifest(path: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_fit(out: &Path, seed: &str) -> i32 {
    run(&[
        "fit", "--oracle", "sphere-box", "--paths", "6", "--steps", "3", "--seed", seed,
        "--resolution", "48", "--batch", "2", "--out", out.to_str().unwrap(),
    ])
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    assert_eq!(run(&["schedule", "--no-such-flag", "--manifest", m.to_str().unwrap()]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
}

#[test]
fn binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_curve3dvg");
    let status = Command::new(bin).arg("--bogus").current_dir(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = Command::new(bin)
        .args(["render", "--scene", "missing.json", "--out", "v"])
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(dir.path().join("v").join("manifest.json").exists());
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"schedule": {"lambda0": 1.0, "t_range": [0.9, 0.1]}}"#).unwrap();
    let out = dir.path().join("s");
    let code = run(&["schedule", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dump"]);
    assert_eq!(code, 1);
    let m = manifest(&out.join("manifest.json"));
    assert_eq!(m.exit_code, 1);
    assert!(m.error.is_some());

    std::fs::write(&cfg, r#"{"shedule": {}}"#).unwrap();
    assert_eq!(run(&["schedule", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn schedule_dump_matches_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"schedule": {"total_steps": 300, "lambda1": 9.0}}"#).unwrap();
    let out = dir.path().join("sched");
    let code = run(&[
        "schedule", "--config", cfg_path.to_str().unwrap(), "--seed", "5", "--dump", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("schedule.csv")).unwrap();
    let cfg = ScheduleConfig {
        total_steps: 300,
        lambda1: 9.0,
        ..Default::default()
    };
    assert_eq!(csv, schedule_csv(&cfg, 5).unwrap());
    let trace = schedule_trace(&cfg, 5).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), trace.len());
    for (row, (step, t, scale)) in rows.iter().zip(trace) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0].parse::<usize>().unwrap(), step);
        assert_eq!(f[1].parse::<u32>().unwrap(), t);
        assert_eq!(f[2].parse::<f64>().unwrap(), scale);
    }
    let m = manifest(&out.join("manifest.json"));
    assert_eq!(m.command, "schedule");
    assert_eq!(m.seed, Some(5));
    assert_eq!(m.config["schedule"]["total_steps"], 300);
}

#[test]
fn fit_then_render_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(small_fit(&run_dir, "7"), 0);
    for f in ["scene.json", "net.bin", "log.jsonl", "manifest.json"] {
        assert!(run_dir.join(f).exists(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(run_dir.join("log.jsonl")).unwrap().lines().count(), 3);
    let m = manifest(&run_dir.join("manifest.json"));
    assert_eq!((m.command.as_str(), m.seed, m.exit_code), ("fit", Some(7), 0));
    assert_eq!(m.config["fit"]["n_paths"], 6);

    let scene = run_dir.join("scene.json");
    let net = run_dir.join("net.bin");
    let views = dir.path().join("views");
    let code = run(&[
        "render", "--scene", scene.to_str().unwrap(), "--net", net.to_str().unwrap(), "--views",
        "ring:3", "--resolution", "40", "--svg", "--png", "--oracle", "sphere-box", "--out",
        views.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    for i in 0..3 {
        let svg = std::fs::read_to_string(views.join(format!("view_{i:02}.svg"))).unwrap();
        assert!(svg.starts_with("<svg"));
        let png = curve3dvg::raster::read_png(&views.join(format!("view_{i:02}.png"))).unwrap();
        assert_eq!((png.width, png.height), (40, 40));
    }

    let metrics = dir.path().join("metrics");
    let code = run(&[
        "metrics", "--scene", scene.to_str().unwrap(), "--net", net.to_str().unwrap(), "--views",
        "ring:4", "--resolution", "32", "--reference", scene.to_str().unwrap(), "--out",
        metrics.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(metrics.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(report["chamfer"], 0.0);
    assert!(report["consistency_all_high"].as_f64().unwrap() >= 0.0);

    let viz = dir.path().join("viz");
    let code = run(&[
        "viz", "--scene", scene.to_str().unwrap(), "--net", net.to_str().unwrap(), "--views",
        "ring:2", "--resolution", "32", "--oracle", "sphere", "--out", viz.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    for f in ["importance_00.png", "votes_01.png", "importance_01.json"] {
        assert!(viz.join(f).exists(), "{f}");
    }
}

#[test]
fn explicit_cameras_keep_their_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(small_fit(&run_dir, "1"), 0);
    let cam = curve3dvg::camera::orbit_camera(4.0, 30.0, 60.0, 30.0, 36, 20).unwrap();
    let cams = dir.path().join("cams.json");
    std::fs::write(&cams, serde_json::to_string(&vec![cam]).unwrap()).unwrap();
    let out = dir.path().join("v");
    let code = run(&[
        "render", "--scene", run_dir.join("scene.json").to_str().unwrap(), "--cameras",
        cams.to_str().unwrap(), "--png", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let png = curve3dvg::raster::read_png(&out.join("view_00.png")).unwrap();
    assert_eq!((png.width, png.height), (36, 20));
    assert!(!out.join("view_00.svg").exists());
}

#[test]
fn fit_from_ingested_guidance() {
    let dir = tempfile::tempdir().unwrap();
    let sampler = CameraSamplerConfig {
        width: 32,
        height: 32,
        ..Default::default()
    };
    let mut g = OracleGuidance::new(OracleScene::sphere(), ScheduleConfig::default(), sampler, 2).unwrap();
    let samples: Vec<_> = (0..2).flat_map(|s| g.next_batch(s, 2).unwrap()).collect();
    let guidance = dir.path().join("guidance");
    export_guidance(&guidance, &samples).unwrap();

    let out = dir.path().join("fit");
    let code = run(&["fit", "--guidance", guidance.to_str().unwrap(), "--paths", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(out.join("log.jsonl")).unwrap().lines().count(), 2);

    // more steps than recorded
    let code = run(&[
        "fit", "--guidance", guidance.to_str().unwrap(), "--steps", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    // farthest-point init has no geometry to sample without an oracle
    let code = run(&[
        "fit", "--guidance", guidance.to_str().unwrap(), "--init", "farthest-point", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    // broken guidance is a runtime failure
    std::fs::remove_file(guidance.join("step_00001").join("cam_00.front.pfm")).unwrap();
    let code = run(&["fit", "--guidance", guidance.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn identical_seeds_give_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(small_fit(&a, "3"), 0);
    assert_eq!(small_fit(&b, "3"), 0);
    for f in ["scene.json", "net.bin", "log.jsonl"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
