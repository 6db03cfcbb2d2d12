use std::path::Path;
use std::process::{Command, Output};

use meshtrack::io::{load_mask, read_obj, read_trajectory};

fn meshtrack(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_meshtrack"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "meshtrack {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_track_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    meshtrack(&[
        "synth",
        "--out",
        path(&data),
        "--size",
        "48",
        "--frames",
        "4",
        "--degrees",
        "3",
    ]);
    assert!(data.join("manifest.json").is_file());
    assert_eq!(read_trajectory(data.join("gt/trajectory.csv")).unwrap().len(), 4);

    meshtrack(&[
        "track",
        path(&data.join("manifest.json")),
        "--out",
        path(&run),
        "--max-iterations",
        "40",
    ]);
    let traj = read_trajectory(run.join("trajectory.csv")).unwrap();
    assert_eq!(traj.len(), 4);
    assert_eq!(traj[0].keyframes, vec![0]);
    for i in 0..4 {
        let m = load_mask(run.join(format!("masks/{i:05}.png"))).unwrap();
        assert_eq!(m.dims(), (48, 48));
        assert!(run.join(format!("overlays/{i:05}.png")).is_file());
    }
    assert!(!read_obj(run.join("mesh.obj")).unwrap().faces.is_empty());
    assert!(run.join("texture.png").is_file());

    let out = meshtrack(&["eval", path(&run), path(&data)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"frames\": 4"), "{text}");
    assert!(text.contains("mean_iou"));
}

#[test]
fn frame_limit_and_no_overlays() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    meshtrack(&[
        "synth",
        "--out",
        path(&data),
        "--size",
        "32",
        "--frames",
        "3",
        "--grow",
        "-1",
    ]);
    meshtrack(&[
        "track",
        path(&data.join("manifest.json")),
        "--out",
        path(&run),
        "--frames",
        "2",
        "--max-iterations",
        "5",
        "--no-overlays",
    ]);
    assert_eq!(read_trajectory(run.join("trajectory.csv")).unwrap().len(), 2);
    assert!(!run.join("overlays/00000.png").exists());
}

#[test]
fn rejects_missing_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_meshtrack"))
        .args(["track", path(&dir.path().join("nope.json")), "--out", path(dir.path())])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn rejects_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    meshtrack(&["synth", "--out", path(&data), "--size", "16", "--frames", "1"]);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"keyframe_capacity": 0}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_meshtrack"))
        .args([
            "track",
            path(&data.join("manifest.json")),
            "--out",
            path(&dir.path().join("run")),
            "--config",
            path(&cfg),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("keyframe capacity"));
}
