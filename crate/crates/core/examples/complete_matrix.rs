//! Recover hidden entries of a low-rank matrix.
//!
//! Builds a rank-2 400x11 matrix, hides 30% of the last column and fills it
//! back in by nuclear-norm completion.
//!
//!     cargo run --example complete_matrix

use mctrack::{complete, CompletionProblem, SolverParams};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mctrack::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (rows, cols, rank) = (400, 11, 2);
    let a = DMatrix::from_fn(rows, rank, |_, _| rng.random_range(0.0..1.0));
    let b = DMatrix::from_fn(rank, cols, |_, _| rng.random_range(0.0..1.0));
    let truth = &a * &b;

    let mut observed = vec![true; rows * cols];
    let last = (cols - 1) * rows;
    for flag in &mut observed[last..] {
        *flag = rng.random::<f64>() >= 0.3;
    }
    let hidden: Vec<usize> = (last..rows * cols).filter(|&i| !observed[i]).collect();

    let problem = CompletionProblem::from_mask(truth.clone(), observed)?;
    let result = complete(&problem, &SolverParams::default())?;

    let num: f64 = hidden.iter().map(|&i| (result.x[i] - truth[i]).powi(2)).sum();
    let den: f64 = hidden.iter().map(|&i| truth[i].powi(2)).sum();
    println!("hidden entries     {}", hidden.len());
    println!("iterations         {} (converged: {})", result.iterations, result.converged);
    println!("final residual     {:.2e}", result.residual);
    println!("relative error     {:.2e}", (num / den).sqrt());
    for &i in hidden.iter().take(5) {
        println!("  row {:3}: truth {:.5}  recovered {:.5}", i - last, truth[i], result.x[i]);
    }
    Ok(())
}
