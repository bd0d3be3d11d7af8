//! Why completion error locates the target.
//!
//! Templates span a rank-3 subspace. A candidate inside that subspace is
//! completed almost exactly from 70% of its pixels; a noise candidate is not,
//! and usually takes more solver iterations.
//!
//!     cargo run --example good_bad_candidates

use mctrack::mask::ObservationMask;
use mctrack::tracker::score_appearance;
use mctrack::{AppearanceVector, MotionState, SolverParams, TemplateSet};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mctrack::Result<()> {
    let (d, n, rank, trials) = (400, 10, 3, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let origin = MotionState { x: 0.0, y: 0.0, s: 1.0 };
    let params = SolverParams::default();
    let (mut good_it, mut bad_it, mut wins) = (0, 0, 0);
    for t in 0..trials {
        let basis = DMatrix::from_fn(d, rank, |_, _| rng.random_range(0.0..1.0 / rank as f64));
        let mix = |rng: &mut ChaCha8Rng| {
            let v = DMatrix::from_fn(rank, 1, |_, _| rng.random_range(0.2..1.0));
            AppearanceVector::new((&basis * v).iter().copied().collect())
        };
        let cols: Vec<AppearanceVector> = (0..n).map(|_| mix(&mut rng)).collect();
        let ts = TemplateSet::from_columns(&cols)?;
        let mut idx = sample(&mut rng, d, ObservationMask::size_for_rate(0.7, d)).into_vec();
        idx.sort_unstable();
        let omega = ObservationMask::new(idx, d)?;

        let good = score_appearance(mix(&mut rng), origin, &ts, &omega, &params)?;
        let noise = AppearanceVector::new((0..d).map(|_| rng.random_range(0.0..1.0)).collect());
        let bad = score_appearance(noise, origin, &ts, &omega, &params)?;
        println!(
            "trial {t:2}: good err {:.2e} ({} it)   noise err {:.3} ({} it)",
            good.err, good.iterations, bad.err, bad.iterations
        );
        good_it += good.iterations;
        bad_it += bad.iterations;
        wins += usize::from(good.err < bad.err);
    }
    println!("good < noise in {wins}/{trials} trials");
    println!(
        "mean iterations: good {:.1}, noise {:.1}",
        good_it as f64 / trials as f64,
        bad_it as f64 / trials as f64
    );
    Ok(())
}
