//! How many pixels to observe.
//!
//! Tracks the synthetic sequence at several observation rates and prints the
//! rate/metric table. Observing every pixel leaves nothing to estimate, so
//! every candidate ties at zero error; observing very few makes completion
//! unreliable.
//!
//!     cargo run --release --example obs_rate_sweep [num_candidates]

use mctrack::run::{sweep_csv, sweep_obs_rate, LabeledSequence};
use mctrack::{SyntheticSpec, TrackerConfig};

fn main() -> mctrack::Result<()> {
    let num_candidates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = TrackerConfig {
        num_candidates,
        ..TrackerConfig::default()
    };
    let seqs = vec![LabeledSequence::synthetic(&SyntheticSpec::default())?];
    let rows = sweep_obs_rate(&seqs, &cfg, &[0.1, 0.3, 0.5, 0.7, 0.9, 1.0], |rate, _, r| {
        eprintln!("rate {rate:.1}: mean OR {:.3}", r.mean_overlap);
    })?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
