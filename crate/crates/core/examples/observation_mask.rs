//! Pixel weights and observation masks.
//!
//! Simulates a target whose top rows are occluded: those pixels have large
//! estimation error, so their weights drop and they are drawn less often into
//! the next observation mask.
//!
//!     cargo run --example observation_mask

use mctrack::mask::{init_weights, sample_mask, update_weights};
use mctrack::ObservationMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const W: usize = 20;
const H: usize = 20;

fn occluded(j: usize) -> bool {
    // Column-major: row = j % H.
    j % H < 6
}

fn main() -> mctrack::Result<()> {
    let d = W * H;
    let m = ObservationMask::size_for_rate(0.7, d);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut weights = init_weights(d)?;
    let mut omega = sample_mask(&weights, m, &mut rng)?;
    let share = |o: &ObservationMask| o.indices().iter().filter(|&&j| occluded(j)).count() as f64 / o.len() as f64;
    println!("occluded rows hold {:.0}% of pixels", 100.0 * 6.0 / H as f64);
    println!("frame 0: {:.1}% of observed pixels on the occluder", 100.0 * share(&omega));
    for frame in 1..=5 {
        let err: Vec<f64> = (0..d)
            .map(|j| {
                if omega.contains(j) {
                    0.0
                } else if occluded(j) {
                    rng.random_range(0.3..0.6)
                } else {
                    rng.random_range(0.0..0.05)
                }
            })
            .collect();
        weights = update_weights(&err, &omega, &mut rng)?;
        omega = sample_mask(&weights, m, &mut rng)?;
        let occ_w: f64 = (0..d).filter(|&j| occluded(j)).map(|j| weights.as_slice()[j]).sum();
        println!(
            "frame {frame}: occluder weight mass {:.3}, {:.1}% of observed pixels on the occluder",
            occ_w,
            100.0 * share(&omega)
        );
    }
    Ok(())
}
