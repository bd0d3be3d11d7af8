//! Singular value thresholding as the proximal map of the nuclear norm.
//!
//! For a few thresholds, prints the nuclear norm, rank and the prox objective
//! `tau * ||X||_* + 0.5 * ||X - M||_F^2` of `svt(M, tau)`, and compares it
//! against small random perturbations of the minimizer.
//!
//!     cargo run --example svt_prox

use mctrack::{nuclear_norm, svt};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn objective(x: &DMatrix<f64>, m: &DMatrix<f64>, tau: f64) -> mctrack::Result<f64> {
    Ok(tau * nuclear_norm(x)? + 0.5 * (x - m).norm_squared())
}

fn main() -> mctrack::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = DMatrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
    println!("singular values of M: {:.4}", m.clone().singular_values().transpose());
    for tau in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let x = svt(&m, tau)?;
        let rank = x.clone().singular_values().iter().filter(|&&s| s > 1e-10).count();
        let best = objective(&x, &m, tau)?;
        let mut worst_gap = f64::INFINITY;
        for _ in 0..200 {
            let p = DMatrix::from_fn(6, 4, |_, _| rng.random_range(-1e-2..1e-2));
            worst_gap = worst_gap.min(objective(&(&x + p), &m, tau)? - best);
        }
        println!(
            "tau {tau:4.2}: ||X||_* {:.4}  rank {rank}  objective {best:.6}  min gap to perturbations {worst_gap:.2e}",
            nuclear_norm(&x)?
        );
    }
    Ok(())
}
