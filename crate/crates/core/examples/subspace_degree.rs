//! Tracked targets live near a low-dimensional subspace.
//!
//! Collects the located target of every frame into a matrix and reports how
//! many singular values carry a given share of its spectrum.
//!
//!     cargo run --release --example subspace_degree [num_candidates]

use mctrack::eval::low_dimension_degree;
use mctrack::run::LabeledSequence;
use mctrack::{run_tracker, SyntheticSpec, TrackerConfig};
use nalgebra::DMatrix;

fn main() -> mctrack::Result<()> {
    let num_candidates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = TrackerConfig {
        num_candidates,
        ..TrackerConfig::default()
    };
    let seq = LabeledSequence::synthetic(&SyntheticSpec::default())?;
    let results = run_tracker(&seq.frames, &seq.groundtruth.boxes[0], &cfg)?;
    let targets = DMatrix::from_fn(cfg.dim(), results.len(), |i, k| results[k].target[i]);
    println!("targets: {} x {}", targets.nrows(), targets.ncols());
    for theta in [0.5, 0.8, 0.9, 0.95, 0.99] {
        let (k, degree) = low_dimension_degree(&targets, theta)?;
        println!("theta {theta:.2}: k = {k:3}  normalized {degree:.3}");
    }
    Ok(())
}
