//! The observed-pixel index set and the per-pixel weights it is drawn from.
//!
//! After each frame the weights are reset from the located target's
//! estimation errors: unobserved pixels get `1 / err`, so pixels sitting on
//! an occluder (large error) become unlikely to be observed next frame.
//! Observed pixels have no error of their own; they are assigned a
//! pseudo-error interpolated between the two errors bracketing the median,
//! which keeps them from dominating the draw.

use rand::Rng;

use crate::error::{Error, Result};

/// Floor added to unobserved errors so `1 / err` stays finite.
pub const ERROR_FLOOR: f64 = 1e-6;

/// Sorted, duplicate-free subset of `0..dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    indices: Vec<usize>,
    dim: usize,
}

impl ObservationMask {
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(&bad) = indices.iter().find(|&&j| j >= dim) {
            return Err(Error::InvalidMask(format!("index {bad} >= dimension {dim}")));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMask("duplicate index".into()));
        }
        Ok(ObservationMask { indices, dim })
    }

    pub fn full(dim: usize) -> Self {
        ObservationMask {
            indices: (0..dim).collect(),
            dim,
        }
    }

    /// Number of observed pixels for a given rate: `round(rate * dim)`.
    pub fn size_for_rate(rate: f64, dim: usize) -> usize {
        ((rate * dim as f64).round() as usize).min(dim)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// Dense membership flags, length `dim`.
    pub fn to_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.dim];
        for &j in &self.indices {
            flags[j] = true;
        }
        flags
    }
}

/// Positive per-pixel sampling weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelWeights(Vec<f64>);

impl PixelWeights {
    /// Normalizes `raw` to unit sum. Every entry must be positive and finite.
    pub fn from_unnormalized(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if raw.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("weights must be positive and finite".into()));
        }
        let total: f64 = raw.iter().sum();
        Ok(PixelWeights(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn init_weights(d: usize) -> Result<PixelWeights> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    Ok(PixelWeights(vec![1.0 / d as f64; d]))
}

/// Errors bracketing the median of the nonzero errors.
///
/// Returns `(e_a, e_b)`: the largest distinct value below the median and the
/// smallest above it. With fewer than three distinct values, or when one
/// side is empty, that side falls back to `0.5 * median` / `1.5 * median`.
/// `None` when every error is zero.
pub fn median_bracket(err: &[f64]) -> Option<(f64, f64)> {
    let mut nz: Vec<f64> = err.iter().copied().filter(|&e| e > 0.0).collect();
    if nz.is_empty() {
        return None;
    }
    nz.sort_by(f64::total_cmp);
    let n = nz.len();
    let median = if n % 2 == 1 {
        nz[n / 2]
    } else {
        0.5 * (nz[n / 2 - 1] + nz[n / 2])
    };
    let mut distinct = nz.clone();
    distinct.dedup();
    if distinct.len() < 3 {
        return Some((0.5 * median, 1.5 * median));
    }
    let below = distinct.iter().rev().find(|&&e| e < median).copied();
    let above = distinct.iter().find(|&&e| e > median).copied();
    Some((below.unwrap_or(0.5 * median), above.unwrap_or(1.5 * median)))
}

/// Reweights pixels from the located target's per-pixel absolute errors,
/// drawing one interpolation coefficient in `[0, 1]` per observed pixel.
pub fn update_weights<R: Rng + ?Sized>(
    err: &[f64],
    omega: &ObservationMask,
    rng: &mut R,
) -> Result<PixelWeights> {
    let mut coeffs = vec![0.0; err.len()];
    for &j in omega.indices() {
        if j < coeffs.len() {
            coeffs[j] = rng.random::<f64>();
        }
    }
    update_weights_with(err, omega, &coeffs)
}

/// As [`update_weights`] with explicit coefficients; `coeffs[j]` is read only
/// for `j` in the mask.
pub fn update_weights_with(
    err: &[f64],
    omega: &ObservationMask,
    coeffs: &[f64],
) -> Result<PixelWeights> {
    let d = err.len();
    if omega.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: omega.dim(),
        });
    }
    if coeffs.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: coeffs.len(),
        });
    }
    if err.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidInput("errors must be finite and non-negative".into()));
    }
    let Some((e_a, e_b)) = median_bracket(err) else {
        return init_weights(d);
    };
    let observed = omega.to_flags();
    let raw = (0..d)
        .map(|j| {
            if observed[j] {
                let u = coeffs[j].clamp(0.0, 1.0);
                1.0 / (e_a + u * (e_b - e_a))
            } else {
                1.0 / (err[j] + ERROR_FLOOR)
            }
        })
        .collect();
    PixelWeights::from_unnormalized(raw)
}

/// Draws `m` distinct indices without replacement, each draw proportional to
/// the weights of the indices not yet taken.
pub fn sample_mask<R: Rng + ?Sized>(
    w: &PixelWeights,
    m: usize,
    rng: &mut R,
) -> Result<ObservationMask> {
    let d = w.len();
    if m > d {
        return Err(Error::InvalidMask(format!("cannot draw {m} of {d} pixels")));
    }
    if m == d {
        return Ok(ObservationMask::full(d));
    }
    let mut remaining = w.0.clone();
    let mut picked = Vec::with_capacity(m);
    for _ in 0..m {
        let total: f64 = remaining.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut choice = None;
        let mut last_live = None;
        for (j, &wj) in remaining.iter().enumerate() {
            if wj <= 0.0 {
                continue;
            }
            last_live = Some(j);
            acc += wj;
            if target < acc {
                choice = Some(j);
                break;
            }
        }
        // Rounding can leave target == total; fall back to the last live index.
        let j = choice
            .or(last_live)
            .expect("m < d leaves at least one positive weight");
        remaining[j] = 0.0;
        picked.push(j);
    }
    ObservationMask::new(picked, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_examples() {
        assert_eq!(init_weights(4).unwrap().as_slice(), &[0.25; 4]);
        assert_eq!(init_weights(1).unwrap().as_slice(), &[1.0]);
        let s: f64 = init_weights(397).unwrap().as_slice().iter().sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        assert!(init_weights(0).is_err());
    }

    #[test]
    fn equal_errors_without_mask_are_uniform() {
        let omega = ObservationMask::new(vec![], 5).unwrap();
        let w = update_weights_with(&[0.3; 5], &omega, &[0.0; 5]).unwrap();
        for &v in w.as_slice() {
            assert_relative_eq!(v, 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn hand_evaluated_update() {
        let omega = ObservationMask::new(vec![3], 4).unwrap();
        let err = [0.1, 0.2, 0.4, 0.0];
        let coeffs = [0.0, 0.0, 0.0, 0.5];
        assert_eq!(median_bracket(&err), Some((0.1, 0.4)));
        let w = update_weights_with(&err, &omega, &coeffs).unwrap();
        let want = [10.0 / 21.5, 5.0 / 21.5, 2.5 / 21.5, 4.0 / 21.5];
        for (a, b) in w.as_slice().iter().zip(want) {
            assert_relative_eq!(*a, b, max_relative = 1e-4);
        }
    }

    #[test]
    fn all_zero_errors_give_uniform() {
        let omega = ObservationMask::new(vec![0, 1], 4).unwrap();
        let w = update_weights_with(&[0.0; 4], &omega, &[0.3; 4]).unwrap();
        assert_eq!(w.as_slice(), &[0.25; 4]);
    }

    #[test]
    fn huge_error_hits_floor() {
        let omega = ObservationMask::new(vec![], 4).unwrap();
        let w = update_weights_with(&[0.1, 0.2, 0.3, 1e9], &omega, &[0.0; 4]).unwrap();
        let s = w.as_slice();
        assert!(s[3] < s[0] && s[3] < s[1] && s[3] < s[2]);
        assert!(s[3] < 1e-8);
    }

    #[test]
    fn bracket_fallbacks() {
        assert_eq!(median_bracket(&[0.0, 0.0]), None);
        let (a, b) = median_bracket(&[0.2, 0.2, 0.0]).unwrap();
        assert!((a - 0.1).abs() < 1e-12 && (b - 0.3).abs() < 1e-12);
        // Median equals the smallest distinct value, nothing strictly below it.
        let (a, b) = median_bracket(&[0.1, 0.1, 0.1, 0.2, 0.4]).unwrap();
        assert_relative_eq!(a, 0.05);
        assert_relative_eq!(b, 0.2);
        // Even count: median 0.25 sits between 0.2 and 0.3.
        assert_eq!(median_bracket(&[0.1, 0.2, 0.3, 0.4]), Some((0.2, 0.3)));
    }

    #[test]
    fn update_rejects_bad_input() {
        let omega = ObservationMask::new(vec![], 3).unwrap();
        assert!(update_weights_with(&[0.1, -0.1, 0.2], &omega, &[0.0; 3]).is_err());
        assert!(update_weights_with(&[0.1, 0.2], &omega, &[0.0; 2]).is_err());
    }

    #[test]
    fn sample_all_and_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = PixelWeights::from_unnormalized(vec![5.0, 1.0, 1.0, 0.1]).unwrap();
        assert_eq!(sample_mask(&w, 4, &mut rng).unwrap().indices(), &[0, 1, 2, 3]);
        assert!(sample_mask(&w, 0, &mut rng).unwrap().is_empty());
        assert!(sample_mask(&w, 5, &mut rng).is_err());
    }

    #[test]
    fn dominant_weight_is_drawn() {
        let eps = 1e-4;
        let w = PixelWeights::from_unnormalized(vec![1.0 - 3.0 * eps, eps, eps, eps]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let hits = (0..10_000)
            .filter(|_| sample_mask(&w, 1, &mut rng).unwrap().indices() == [0])
            .count();
        assert!(hits as f64 / 1e4 > 0.99, "{hits}");
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let w = PixelWeights::from_unnormalized((1..=50).map(f64::from).collect()).unwrap();
        let a = sample_mask(&w, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_mask(&w, 20, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mask_constructor_checks() {
        assert!(ObservationMask::new(vec![1, 1], 3).is_err());
        assert!(ObservationMask::new(vec![3], 3).is_err());
        let m = ObservationMask::new(vec![2, 0], 3).unwrap();
        assert_eq!(m.indices(), &[0, 2]);
        assert!(m.contains(2) && !m.contains(1));
        assert_eq!(ObservationMask::size_for_rate(0.7, 400), 280);
    }

    proptest! {
        #[test]
        fn unobserved_weights_are_monotone(
            err in prop::collection::vec(0.0f64..1.0, 3..40),
            pick in any::<u64>(),
            seed in any::<u64>(),
        ) {
            let d = err.len();
            let idx: Vec<usize> = (0..d).filter(|i| (pick >> (i % 64)) & 1 == 1).collect();
            let omega = ObservationMask::new(idx, d).unwrap();
            let w = update_weights(&err, &omega, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let w = w.as_slice();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(w.iter().all(|&v| v > 0.0));
            for i in 0..d {
                for j in 0..d {
                    if !omega.contains(i) && !omega.contains(j) && err[i] + 1e-12 < err[j] {
                        prop_assert!(w[i] > w[j]);
                    }
                }
            }
            if let Some((e_a, e_b)) = median_bracket(&err) {
                // Observed raw weights lie in [1/e_b, 1/e_a]; compare on the raw scale.
                let scale = w.iter().zip(0..d).find(|&(_, j)| !omega.contains(j))
                    .map(|(&wj, j)| wj * (err[j] + ERROR_FLOOR));
                if let Some(scale) = scale {
                    for &j in omega.indices() {
                        let raw = w[j] / scale;
                        prop_assert!(raw >= 1.0 / e_b * (1.0 - 1e-9) && raw <= 1.0 / e_a * (1.0 + 1e-9));
                    }
                    let low_unobserved = (0..d).any(|j| !omega.contains(j) && err[j] + ERROR_FLOOR < e_a);
                    if low_unobserved && !omega.is_empty() {
                        let max_obs = omega.indices().iter().map(|&j| w[j]).fold(0.0, f64::max);
                        let max_unobs = (0..d).filter(|&j| !omega.contains(j)).map(|j| w[j]).fold(0.0, f64::max);
                        prop_assert!(max_obs <= max_unobs);
                    }
                }
            }
        }

        #[test]
        fn sampled_masks_are_valid(
            raw in prop::collection::vec(1e-3f64..10.0, 1..60),
            frac in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let d = raw.len();
            let m = ((d as f64) * frac).floor() as usize;
            let w = PixelWeights::from_unnormalized(raw).unwrap();
            let mask = sample_mask(&w, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(mask.len(), m);
            prop_assert!(mask.indices().windows(2).all(|p| p[0] < p[1]));
            prop_assert!(mask.indices().iter().all(|&j| j < d));
        }
    }

    #[test]
    fn single_draw_matches_weights_chi_squared() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let raw = vec![1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0];
        let w = PixelWeights::from_unnormalized(raw).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let mut counts = [0usize; 8];
        for _ in 0..n {
            counts[sample_mask(&w, 1, &mut rng).unwrap().indices()[0]] += 1;
        }
        let stat: f64 = counts
            .iter()
            .zip(w.as_slice())
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        let p_value = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
        assert!(p_value > 0.01, "chi2 = {stat}, p = {p_value}");
    }
}
