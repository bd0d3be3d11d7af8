//! Track an OTB-style sequence and report mean TLE, precision@20, SR@0.5
//! and mean OR.
//!
//! Pass a directory holding `img/` and `groundtruth_rect.txt`. Without an
//! argument, a short synthetic sequence is written to a temporary directory
//! in that layout first.
//!
//!     cargo run --release --example evaluate_otb [SEQ_DIR]

use std::path::PathBuf;

use mctrack::io::{find_groundtruth, load_groundtruth, load_sequence, write_sequence};
use mctrack::run::{track_to_dir, TrackOptions};
use mctrack::synth::generate_synthetic;
use mctrack::{Error, SyntheticSpec, TrackerConfig};

fn main() -> mctrack::Result<()> {
    let scratch = std::env::temp_dir().join("mctrack-evaluate-otb");
    let dir = match std::env::args().nth(1) {
        Some(d) => PathBuf::from(d),
        None => {
            let spec = SyntheticSpec {
                frames: 30,
                occluders: vec![],
                ..SyntheticSpec::default()
            };
            let seq = generate_synthetic(&spec)?;
            write_sequence(&scratch, &seq.frames, Some(&seq.groundtruth))?;
            scratch.clone()
        }
    };
    let frames = load_sequence(&dir)?;
    let gt_path = find_groundtruth(&dir)
        .ok_or_else(|| Error::Usage(format!("no groundtruth_rect.txt in {}", dir.display())))?;
    let gt = load_groundtruth(&gt_path)?;
    println!("{}: {} frames of {:?}", dir.display(), frames.frame_count(), frames.frame_size());

    let out = dir.join("results");
    let summary = track_to_dir(&frames, &gt.boxes[0], Some(&gt), &TrackerConfig::default(), &out, &TrackOptions::default())?;
    let r = summary.report.expect("ground truth given");
    println!("mean TLE      {:.3}", r.mean_tle);
    println!("precision@20  {:.3}", r.precision_at_20);
    println!("SR@0.5        {:.3}", r.success_at_0_5);
    println!("mean OR       {:.3}", r.mean_overlap);
    println!("boxes in {}", summary.boxes_path.display());
    Ok(())
}
