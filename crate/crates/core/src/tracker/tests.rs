use super::*;
use crate::features::FeatureImage;
use crate::image::Mask;

fn small_config() -> TrackerConfig {
    TrackerConfig {
        sphere_segments: 10,
        sphere_rings: 6,
        texture_size: 16,
        max_iterations: 20,
        ..TrackerConfig::default()
    }
}

fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> Mask {
    Mask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        dx * dx + dy * dy <= r * r
    })
}

fn flat_color(w: usize, h: usize, value: f64) -> FeatureImage {
    FeatureImage::from_vec(w, h, 3, vec![value; w * h * 3]).unwrap()
}

#[test]
fn initial_depth_fills_image_height() {
    let cam = Camera::new(64, 48);
    assert!((initial_depth(&cam) - 1.2071067811865475).abs() < 1e-12);
}

#[test]
fn first_frame_starts_centered_and_becomes_keyframe() {
    let cam = Camera::new(24, 24);
    let mask = disk(24, 24, 12.0, 12.0, 8.0);
    let cfg = TrackerConfig {
        max_iterations: 1,
        ..small_config()
    };
    let (state, out) = init_tracker(&flat_color(24, 24, 0.5), &mask, cam, cfg).unwrap();
    assert_eq!(out.index, 0);
    assert!(!out.failed, "the first frame is never flagged");
    assert_eq!(out.keyframes, vec![0]);
    assert_eq!(state.frames_processed(), 1);
    // one step of at most the learning rate from the initial placement
    assert!((state.pose().translation.z + initial_depth(&cam)).abs() <= 0.1 + 1e-9);
}

#[test]
fn rejects_bad_first_frame() {
    let cam = Camera::new(16, 16);
    let empty = Mask::new(16, 16);
    assert!(matches!(
        init_tracker(&flat_color(16, 16, 0.5), &empty, cam, small_config()),
        Err(Error::EmptyMask(_))
    ));
    let mask = disk(16, 16, 8.0, 8.0, 5.0);
    assert!(matches!(
        init_tracker(&flat_color(12, 16, 0.5), &mask, cam, small_config()),
        Err(Error::ResolutionMismatch { .. })
    ));
    let cfg = TrackerConfig {
        keyframe_capacity: 0,
        ..small_config()
    };
    assert!(init_tracker(&flat_color(16, 16, 0.5), &mask, cam, cfg).is_err());
}

#[test]
fn failed_frame_echoes_mask_and_restores_model() {
    let cam = Camera::new(24, 24);
    let mask = disk(24, 24, 12.0, 12.0, 8.0);
    let cfg = TrackerConfig {
        max_iterations: 3,
        ..small_config()
    };
    let (mut state, _) = init_tracker(&flat_color(24, 24, 0.5), &mask, cam, cfg).unwrap();
    let offsets = state.mesh().offsets().to_vec();
    let texture = state.texture().clone();
    let pose = *state.pose();
    let kf = state.keyframes().indices();

    // a corner blob with an appearance the model cannot match in 3 steps
    let bad = disk(24, 24, 2.0, 2.0, 2.0);
    let out = track_frame(&mut state, &flat_color(24, 24, 1.0), &bad).unwrap();
    assert!(out.failed);
    assert_eq!(out.result.iterations, 3);
    assert_eq!(out.segmentation, bad);
    assert_eq!(out.pose, pose);
    assert_eq!(state.mesh().offsets(), &offsets[..]);
    assert_eq!(state.texture(), &texture);
    assert_eq!(state.keyframes().indices(), kf);
    assert_eq!(state.poses().len(), 2);
}

#[test]
fn frames_must_match_the_model() {
    let cam = Camera::new(16, 16);
    let mask = disk(16, 16, 8.0, 8.0, 5.0);
    let (mut state, _) = init_tracker(&flat_color(16, 16, 0.5), &mask, cam, small_config()).unwrap();
    let gray = FeatureImage::zeros(16, 16, 1);
    assert!(matches!(
        track_frame(&mut state, &gray, &mask),
        Err(Error::ChannelMismatch { .. })
    ));
    assert!(track_frame(&mut state, &flat_color(16, 8, 0.5), &mask).is_err());
}

#[test]
fn flat_prior_keeps_mesh_planar() {
    let cam = Camera::new(24, 24);
    let mask = disk(24, 24, 12.0, 12.0, 9.0);
    let cfg = TrackerConfig {
        flat_prior: true,
        ..small_config()
    };
    let (mut state, _) = init_tracker(&flat_color(24, 24, 0.6), &mask, cam, cfg).unwrap();
    assert!(max_plane_deviation(state.mesh()).unwrap() < 1e-6);
    track_frame(&mut state, &flat_color(24, 24, 0.6), &disk(24, 24, 13.0, 12.0, 9.0)).unwrap();
    assert!(max_plane_deviation(state.mesh()).unwrap() < 1e-6);
}

#[test]
fn backprojection_only_fills_observed_texels() {
    let cam = Camera::new(24, 24);
    let mask = disk(24, 24, 12.0, 12.0, 8.0);
    let rgb = flat_color(24, 24, 0.25);
    let (state, _) = init_tracker(&rgb, &mask, cam, small_config()).unwrap();
    let bp = backproject_rgb(&state, &[(0, &rgb)]).unwrap();
    let n = bp.observed_count();
    assert!(n > 0 && n < bp.observed.len());
    for (t, &seen) in bp.observed.iter().enumerate() {
        let texel = bp.texture.texel(t);
        if seen {
            assert!(texel.iter().all(|&c| (c - 0.25).abs() < 1e-12));
        } else {
            assert!(texel.iter().all(|&c| c == 0.0));
        }
    }
    // keyframes without a color image contribute nothing
    assert_eq!(backproject_rgb(&state, &[]).unwrap().observed_count(), 0);
}
