use meshtrack::geometry::{make_prototype_sphere, quaternion_angle_deg, Vector3, Vector4};
use meshtrack::io::synth::{generate_synthetic, write_synthetic, ShapeSpec, SyntheticSpec};
use meshtrack::io::{
    load_mask, load_sequence, read_obj, read_trajectory, save_mask, write_obj, write_trajectory, Manifest,
    ManifestFrame, TrajectoryRecord,
};
use meshtrack::{Error, Mask, Pose};
use proptest::prelude::*;

fn ring_mask(w: usize, h: usize) -> Mask {
    Mask::from_fn(w, h, |x, y| (x + 2 * y) % 5 < 2)
}

#[test]
fn mask_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mask = ring_mask(13, 7);
    let path = dir.path().join("m.png");
    save_mask(&path, &mask).unwrap();
    let back = load_mask(&path).unwrap();
    assert_eq!(back, mask);
    assert_eq!(back.count(), mask.count());
}

#[test]
fn grayscale_masks_threshold_at_half() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.png");
    let img = image::GrayImage::from_raw(4, 1, vec![0, 127, 128, 255]).unwrap();
    img.save(&path).unwrap();
    let m = load_mask(&path).unwrap();
    assert_eq!(m.as_slice(), &[false, false, true, true]);
}

#[test]
fn trajectory_round_trip_is_lossless() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let records = vec![
        TrajectoryRecord::new(
            0,
            &Pose::new(Vector3::new(0.1, -1.0 / 3.0, -2.0), Vector4::new(1.0, 0.0, 0.0, 0.0)),
            false,
            vec![0],
            0.123456789012345,
            1e-17,
        ),
        TrajectoryRecord::new(
            1,
            &Pose::new(
                Vector3::new(f64::MIN_POSITIVE, 2.5e10, -0.7),
                Vector4::new(0.5, 0.5, -0.5, 0.5),
            ),
            true,
            vec![],
            0.3,
            0.0,
        ),
        TrajectoryRecord::new(2, &Pose::identity(), false, vec![0, 2, 11], 0.0, 0.25),
    ];
    write_trajectory(&path, &records).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("index,tx,ty,tz,qw,qx,qy,qz,failed,keyframes,loss_f,loss_s\n"));
    assert_eq!(read_trajectory(&path).unwrap(), records);
}

#[test]
fn empty_trajectory_keeps_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory(&path, &[]).unwrap();
    assert!(read_trajectory(&path).unwrap().is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("index,"));
}

#[test]
fn obj_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    let mut mesh = make_prototype_sphere(7, 5).unwrap();
    for (i, o) in mesh.offsets_mut().iter_mut().enumerate() {
        *o = Vector3::new(0.01 * i as f64, -0.02, 0.003);
    }
    write_obj(&path, &mesh).unwrap();
    let obj = read_obj(&path).unwrap();
    assert_eq!(obj.vertices, mesh.deformed_vertices());
    assert_eq!(obj.faces, mesh.faces());
    assert_eq!(obj.face_uvs, mesh.face_uvs());
    for (a, b) in obj.uvs.iter().zip(mesh.uvs()) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn obj_rejects_polygons() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n").unwrap();
    assert!(matches!(read_obj(&path), Err(Error::Parse { .. })));
}

#[test]
fn manifest_validation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    save_mask(root.join("a.png"), &ring_mask(8, 6)).unwrap();
    save_mask(root.join("b.png"), &ring_mask(8, 6)).unwrap();
    save_mask(root.join("small.png"), &ring_mask(6, 6)).unwrap();
    let frame = |image: &str, mask: &str| ManifestFrame {
        image: image.into(),
        mask: mask.into(),
        features: None,
    };

    let ok = Manifest {
        id: "s".into(),
        fov_y_deg: 45.0,
        frames: vec![frame("a.png", "b.png"), frame("b.png", "a.png")],
    };
    ok.write(root.join("ok.json")).unwrap();
    let seq = load_sequence(root.join("ok.json")).unwrap();
    assert_eq!(seq.len(), 2);
    assert_eq!((seq.camera.width, seq.camera.height), (8, 6));
    assert_eq!(seq.load_mask(1).unwrap(), ring_mask(8, 6));
    assert_eq!(seq.load_rgb(0).unwrap().channels(), 3);
    assert!(seq.load_features(0).is_err());

    let mismatched = Manifest {
        frames: vec![frame("a.png", "small.png")],
        ..ok.clone()
    };
    mismatched.write(root.join("mm.json")).unwrap();
    assert!(matches!(
        load_sequence(root.join("mm.json")),
        Err(Error::ResolutionMismatch { .. })
    ));

    let missing = Manifest {
        frames: vec![frame("a.png", "nope.png")],
        ..ok.clone()
    };
    missing.write(root.join("missing.json")).unwrap();
    assert!(load_sequence(root.join("missing.json")).is_err());

    let empty = Manifest { frames: vec![], ..ok };
    empty.write(root.join("empty.json")).unwrap();
    assert!(matches!(
        load_sequence(root.join("empty.json")),
        Err(Error::EmptySequence)
    ));
}

#[test]
fn turntable_cube_steps_ten_degrees() {
    let mut spec = SyntheticSpec::turntable(32, 32, 36, 10.0);
    spec.shape = ShapeSpec::Box {
        half_extents: [0.3, 0.3, 0.3],
    };
    let dir = tempfile::tempdir().unwrap();
    let seq = generate_synthetic(&spec).unwrap();
    write_synthetic(&seq, dir.path()).unwrap();
    let gt = read_trajectory(dir.path().join("gt/trajectory.csv")).unwrap();
    assert_eq!(gt.len(), 36);
    for w in gt.windows(2) {
        let a = quaternion_angle_deg(&w[0].pose().rotation, &w[1].pose().rotation).unwrap();
        assert!((a - 10.0).abs() < 1e-6, "step {a}");
    }
    let loaded = load_sequence(dir.path().join("manifest.json")).unwrap();
    assert_eq!(loaded.len(), 36);
    for n in [0, 17, 35] {
        assert_eq!(loaded.load_mask(n).unwrap(), seq.frames[n].mask);
        assert_eq!(
            load_mask(dir.path().join(format!("gt/masks/{n:05}.png"))).unwrap(),
            seq.frames[n].gt_mask
        );
    }
}

#[test]
fn synthetic_generation_is_deterministic() {
    let spec = SyntheticSpec::turntable(24, 24, 3, 5.0);
    let a = generate_synthetic(&spec).unwrap();
    let b = generate_synthetic(&spec).unwrap();
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        assert_eq!(fa.rgb, fb.rgb);
        assert_eq!(fa.mask, fb.mask);
    }
}

#[test]
fn mask_noise_grows_and_shrinks() {
    let mut spec = SyntheticSpec::turntable(48, 48, 1, 0.0);
    spec.mask_noise.grow_px = 3.0;
    let grown = generate_synthetic(&spec).unwrap();
    spec.mask_noise.grow_px = -3.0;
    let shrunk = generate_synthetic(&spec).unwrap();
    let gt = &grown.frames[0].gt_mask;
    let (g, s) = (&grown.frames[0].mask, &shrunk.frames[0].mask);
    assert!(g.count() > gt.count() && s.count() < gt.count());
    for i in 0..gt.as_slice().len() {
        assert!(!gt.as_slice()[i] || g.as_slice()[i]);
        assert!(!s.as_slice()[i] || gt.as_slice()[i]);
    }
}

proptest! {
    #[test]
    fn trajectory_values_survive_text(tx in -1e3f64..1e3, q in prop::array::uniform4(-1.0f64..1.0), lf in 0.0f64..10.0) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rec = TrajectoryRecord::new(4, &Pose::new(Vector3::new(tx, tx / 7.0, -tx.abs()), Vector4::from(q)), false, vec![1, 4], lf, lf / 3.0);
        write_trajectory(&path, std::slice::from_ref(&rec)).unwrap();
        prop_assert_eq!(read_trajectory(&path).unwrap(), vec![rec]);
    }
}
