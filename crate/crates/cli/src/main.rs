use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use meshtrack::eval::summarize;
use meshtrack::io::synth::{generate_synthetic, write_synthetic, ShapeSpec, SyntheticSpec};
use meshtrack::io::{export_outputs, load_mask, load_sequence, read_trajectory, ExportPaths, TrajectoryRecord};
use meshtrack::optim::TAU_F_DEEP;
use meshtrack::tracker::backproject_rgb;
use meshtrack::{init_tracker, track_frame, FeatureImage, Mask, Pose, TrackerConfig};

#[derive(Parser)]
#[command(
    name = "meshtrack",
    version,
    about = "Track, segment and reconstruct a rigid object in a video"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a sequence described by a manifest.
    Track(TrackArgs),
    /// Render a synthetic sequence with ground truth.
    Synth(SynthArgs),
    /// Compare tracker output with ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// Sequence manifest (JSON).
    manifest: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Tracker configuration (JSON); missing fields take default values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Track the per-frame feature maps listed in the manifest instead of the color frames.
    #[arg(long)]
    features: bool,
    /// Constrain the mesh to a plane.
    #[arg(long)]
    flat: bool,
    #[arg(long)]
    keyframes: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Process only the first N frames.
    #[arg(long)]
    frames: Option<usize>,
    /// Skip writing overlay images.
    #[arg(long)]
    no_overlays: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Full scene description (JSON); overrides the turntable options below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 96)]
    size: usize,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value_t = 3.0)]
    degrees: f64,
    /// Dilate (positive) or erode (negative) the input masks by this many pixels.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    grow: f64,
    /// Replace the ellipsoid by a thin card.
    #[arg(long)]
    card: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    /// Output directory of `meshtrack track`.
    pred: PathBuf,
    /// Directory written by `meshtrack synth`.
    gt: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Track(a) => track(a),
        Command::Synth(a) => synth(a),
        Command::Eval(a) => eval(a),
    }
}

fn tracker_config(a: &TrackArgs) -> Result<TrackerConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None if a.features => TrackerConfig {
            tau_f: TAU_F_DEEP,
            ..TrackerConfig::default()
        },
        None => TrackerConfig::default(),
    };
    cfg.flat_prior |= a.flat;
    if let Some(k) = a.keyframes {
        cfg.keyframe_capacity = k;
    }
    if let Some(n) = a.max_iterations {
        cfg.max_iterations = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn track(a: TrackArgs) -> Result<()> {
    let cfg = tracker_config(&a)?;
    let seq = load_sequence(&a.manifest)?;
    let n = a.frames.map_or(seq.len(), |f| f.min(seq.len()));
    let paths = ExportPaths::new(&a.out);
    paths.create()?;

    let load = |i: usize| -> Result<(FeatureImage, FeatureImage, Mask)> {
        let rgb = seq.load_rgb(i)?;
        let input = if a.features { seq.load_features(i)? } else { rgb.clone() };
        Ok((rgb, input, seq.load_mask(i)?))
    };

    // color frames of the current keyframes, for the texture export
    let mut colors: BTreeMap<usize, FeatureImage> = BTreeMap::new();
    let mut records = Vec::with_capacity(n);
    let (rgb, input, mask) = load(0)?;
    let (mut state, mut out) = init_tracker(&input, &mask, seq.camera, cfg)?;
    let mut rgb = rgb;
    for i in 0..n {
        if i > 0 {
            let (next_rgb, input, mask) = load(i)?;
            out = track_frame(&mut state, &input, &mask)?;
            rgb = next_rgb;
        }
        paths.write_frame(i, &out.segmentation, (!a.no_overlays).then_some(&rgb))?;
        if out.keyframes.contains(&i) {
            colors.insert(i, rgb.clone());
        }
        colors.retain(|k, _| out.keyframes.contains(k));
        eprintln!(
            "frame {i:5} {} iterations {:3} L_F {:.4} L_S {:.4} keyframes {:?}",
            if out.failed { "FAILED   " } else { "converged" },
            out.result.iterations,
            out.result.loss_f,
            out.result.loss_s,
            out.keyframes
        );
        records.push(TrajectoryRecord::new(
            i,
            &out.pose,
            out.failed,
            out.keyframes.clone(),
            out.result.loss_f,
            out.result.loss_s,
        ));
    }

    let frames: Vec<(usize, &FeatureImage)> = colors.iter().map(|(k, v)| (*k, v)).collect();
    let texture = backproject_rgb(&state, &frames)?;
    export_outputs(&paths, Some(&state), &records, Some(&texture))?;
    let failed = records.iter().filter(|r| r.failed).count();
    println!("tracked {n} frames ({failed} failed) -> {}", a.out.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let mut spec = SyntheticSpec::turntable(a.size, a.size, a.frames, a.degrees);
            spec.mask_noise.grow_px = a.grow;
            spec.seed = a.seed;
            if a.card {
                spec.id = "card".into();
                spec.shape = ShapeSpec::Box {
                    half_extents: [0.45, 0.3, 0.01],
                };
            }
            spec
        }
    };
    let seq = generate_synthetic(&spec)?;
    write_synthetic(&seq, &a.out)?;
    println!("wrote {} frames to {}", seq.frames.len(), a.out.display());
    Ok(())
}

fn read_masks(dir: &Path, n: usize) -> Result<Vec<Mask>> {
    (0..n)
        .map(|i| {
            let path = dir.join(meshtrack::io::frame_file_name(i));
            load_mask(&path).with_context(|| format!("reading {}", path.display()))
        })
        .collect()
}

fn eval(a: EvalArgs) -> Result<()> {
    let pred = read_trajectory(a.pred.join("trajectory.csv"))?;
    let gt = read_trajectory(a.gt.join("gt/trajectory.csv"))?;
    if pred.len() > gt.len() {
        bail!(
            "{} predicted frames but only {} ground-truth frames",
            pred.len(),
            gt.len()
        );
    }
    let n = pred.len();
    let pred_masks = read_masks(&a.pred.join("masks"), n)?;
    let gt_masks = read_masks(&a.gt.join("gt/masks"), n)?;
    let pred_poses: Vec<Pose> = pred.iter().map(|r| r.pose()).collect();
    let gt_poses: Vec<Pose> = gt[..n].iter().map(|r| r.pose()).collect();
    let failed: Vec<bool> = pred.iter().map(|r| r.failed).collect();
    let summary = summarize(&pred_masks, &gt_masks, &pred_poses, &gt_poses, &failed)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
