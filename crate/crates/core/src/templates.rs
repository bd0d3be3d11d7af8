//! Target templates: a fixed number of past target appearances that span
//! the subspace the completion step projects candidates onto.

use image::GrayImage;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::appearance::{appearance, AppearanceVector, MotionState};
use crate::completion::CompletionProblem;
use crate::error::{Error, Result};
use crate::mask::ObservationMask;

/// One-pixel shifts used to seed templates beyond the first.
const SEED_SHIFTS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (1.0, 1.0),
    (1.0, -1.0),
    (-1.0, 1.0),
    (-1.0, -1.0),
];

/// Replacement rule for [`TemplateSet::update`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplatePolicy {
    /// A new target whose best cosine similarity falls below this replaces
    /// the least-weighted template.
    pub sim_threshold: f64,
    /// Weight growth: each weight is multiplied by `exp(alpha * sim)`.
    pub alpha: f64,
}

impl Default for TemplatePolicy {
    fn default() -> Self {
        TemplatePolicy {
            sim_threshold: 0.85,
            alpha: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    templates: DMatrix<f64>,
    weights: Vec<f64>,
}

impl TemplateSet {
    /// Wraps existing columns with uniform weights `1/n`.
    pub fn from_columns(columns: &[AppearanceVector]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::TemplateInit("at least one template is required".into()));
        };
        let d = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bad.len(),
            });
        }
        let n = columns.len();
        let templates = DMatrix::from_fn(d, n, |i, j| columns[j][i]);
        Ok(TemplateSet {
            templates,
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// Template matrix, `d x n`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.templates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.templates.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.ncols() == 0
    }

    pub fn dim(&self) -> usize {
        self.templates.nrows()
    }

    pub fn column(&self, j: usize) -> AppearanceVector {
        AppearanceVector::new(self.templates.column(j).iter().copied().collect())
    }

    /// Folds the newly located target into the set. Returns the index of the
    /// replaced column, if any.
    pub fn update(&mut self, y: &AppearanceVector, policy: &TemplatePolicy) -> Result<Option<usize>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: y.len(),
            });
        }
        let best = (0..self.len())
            .map(|j| self.similarity(j, y))
            .fold(f64::NEG_INFINITY, f64::max);
        let replaced = if best < policy.sim_threshold {
            let victim = argmin(&self.weights);
            let median_weight = crate::eval::median(&self.weights);
            self.templates.set_column(victim, &nalgebra::DVector::from_column_slice(y.as_slice()));
            self.weights[victim] = median_weight;
            Some(victim)
        } else {
            None
        };
        for j in 0..self.len() {
            let sim = self.similarity(j, y);
            self.weights[j] *= (policy.alpha * sim).exp();
        }
        let mean = self.weights.iter().sum::<f64>() / self.len() as f64;
        for w in &mut self.weights {
            *w /= mean;
        }
        Ok(replaced)
    }

    fn similarity(&self, j: usize, y: &AppearanceVector) -> f64 {
        cosine_similarity(self.templates.column(j).as_slice(), y.as_slice())
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Cosine of the angle between two vectors; zero if either is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// First template is `y1`; the others are crops at one-pixel shifts of the
/// initial state.
pub fn init_templates(
    y1: &AppearanceVector,
    frame: &GrayImage,
    state: &MotionState,
    base: (f64, f64),
    patch: (usize, usize),
    n: usize,
) -> Result<TemplateSet> {
    if n == 0 {
        return Err(Error::TemplateInit("template count must be at least 1".into()));
    }
    if y1.len() != patch.0 * patch.1 {
        return Err(Error::DimensionMismatch {
            expected: patch.0 * patch.1,
            actual: y1.len(),
        });
    }
    let mut columns = vec![y1.clone()];
    for k in 0..n - 1 {
        let (dx, dy) = SEED_SHIFTS[k % SEED_SHIFTS.len()];
        let v = appearance(frame, &state.shifted(dx, dy), base, patch)
            .map_err(|e| Error::TemplateInit(e.to_string()))?;
        columns.push(v);
    }
    TemplateSet::from_columns(&columns)
}

/// Builds `Y = [T, c']` with every template entry observed and the candidate
/// column observed on the mask.
pub fn assemble(
    ts: &TemplateSet,
    c_prime: &AppearanceVector,
    omega: &ObservationMask,
) -> Result<CompletionProblem> {
    let d = ts.dim();
    if c_prime.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: c_prime.len(),
        });
    }
    if omega.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: omega.dim(),
        });
    }
    let n = ts.len();
    let mut y = DMatrix::zeros(d, n + 1);
    y.columns_mut(0, n).copy_from(&ts.templates);
    y.column_mut(n).copy_from_slice(c_prime.as_slice());
    let mut observed = vec![true; d * n];
    observed.extend(omega.to_flags());
    CompletionProblem::from_mask(y, observed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_of(vals: &[f64]) -> AppearanceVector {
        AppearanceVector::new(vals.to_vec())
    }

    #[test]
    fn constant_frame_gives_identical_templates() {
        let frame = GrayImage::from_pixel(60, 60, image::Luma([90]));
        let state = MotionState::new(30.0, 30.0, 1.0).unwrap();
        let y1 = appearance(&frame, &state, (20.0, 20.0), (10, 10)).unwrap();
        let ts = init_templates(&y1, &frame, &state, (20.0, 20.0), (10, 10), 10).unwrap();
        assert_eq!(ts.len(), 10);
        for j in 0..10 {
            assert_eq!(ts.column(j), y1);
        }
        assert!(ts.weights().iter().all(|&w| w == 0.1));
    }

    #[test]
    fn single_template_is_y1() {
        let frame = GrayImage::from_fn(40, 40, |x, y| image::Luma([((x * y) % 256) as u8]));
        let state = MotionState::new(20.0, 20.0, 1.0).unwrap();
        let y1 = appearance(&frame, &state, (10.0, 10.0), (10, 10)).unwrap();
        let ts = init_templates(&y1, &frame, &state, (10.0, 10.0), (10, 10), 1).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.column(0), y1);
    }

    #[test]
    fn shifted_template_differs_at_the_edge() {
        // Vertical edge between columns 19 and 20.
        let frame = GrayImage::from_fn(40, 40, |x, _| image::Luma([if x < 20 { 0 } else { 255 }]));
        let state = MotionState::new(20.0, 20.0, 1.0).unwrap();
        let y1 = appearance(&frame, &state, (10.0, 10.0), (10, 10)).unwrap();
        let ts = init_templates(&y1, &frame, &state, (10.0, 10.0), (10, 10), 2).unwrap();
        let shifted = ts.column(1);
        // Oracle: the crop at the +1 shift, computed from the edge position directly.
        // Patch column c samples frame column 15 + c (+1 after the shift).
        for c in 0..10 {
            for r in 0..10 {
                let i = c * 10 + r;
                let orig = if 15 + c < 20 { 0.0 } else { 1.0 };
                let moved = if 16 + c < 20 { 0.0 } else { 1.0 };
                assert_eq!(y1[i], orig);
                assert_eq!(shifted[i], moved);
            }
        }
        let changed: Vec<usize> = (0..100).filter(|&i| y1[i] != shifted[i]).map(|i| i / 10).collect();
        assert!(changed.iter().all(|&c| c == 4));
        assert_eq!(changed.len(), 10);
    }

    #[test]
    fn identical_target_keeps_columns() {
        let mut ts = TemplateSet::from_columns(&[vec_of(&[1.0, 0.0, 0.0]), vec_of(&[0.0, 1.0, 0.0])]).unwrap();
        let before = ts.matrix().clone();
        let replaced = ts.update(&vec_of(&[0.0, 1.0, 0.0]), &TemplatePolicy::default()).unwrap();
        assert_eq!(replaced, None);
        assert_eq!(ts.matrix(), &before);
        let mean: f64 = ts.weights().iter().sum::<f64>() / 2.0;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(ts.weights()[1] > ts.weights()[0]);
    }

    #[test]
    fn orthogonal_target_replaces_least_weighted() {
        let mut ts = TemplateSet::from_columns(&[
            vec_of(&[1.0, 0.0, 0.0, 0.0]),
            vec_of(&[0.0, 1.0, 0.0, 0.0]),
        ])
        .unwrap();
        ts.weights = vec![0.7, 0.3];
        let y = vec_of(&[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(ts.update(&y, &TemplatePolicy::default()).unwrap(), Some(1));
        assert_eq!(ts.column(1), y);
    }

    #[test]
    fn successive_far_targets_replace_distinct_columns() {
        let d = 8;
        let basis = |k: usize| {
            let mut v = vec![0.0; d];
            v[k] = 1.0;
            AppearanceVector::new(v)
        };
        let mut ts = TemplateSet::from_columns(&[basis(0), basis(1), basis(2), basis(3)]).unwrap();
        ts.weights = vec![0.4, 0.1, 0.3, 0.2];
        let policy = TemplatePolicy::default();

        // Simulate the rule by hand: the least weight goes first, the newcomer
        // gets the median weight times exp(alpha), everyone else is unchanged
        // (similarity 0) before renormalization.
        let mut expected_weights = ts.weights.clone();
        let mut expected_order = Vec::new();
        for k in 4..7 {
            let victim = argmin(&expected_weights);
            expected_order.push(victim);
            let med = crate::eval::median(&expected_weights);
            expected_weights[victim] = med * policy.alpha.exp();
            let mean = expected_weights.iter().sum::<f64>() / 4.0;
            expected_weights.iter_mut().for_each(|w| *w /= mean);

            let replaced = ts.update(&basis(k), &policy).unwrap();
            assert_eq!(replaced, Some(victim));
        }
        assert_eq!(expected_order, vec![1, 3, 2]);
        for (a, b) in ts.weights().iter().zip(&expected_weights) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn assemble_examples() {
        let ts = TemplateSet::from_columns(&[vec_of(&[0.1, 0.2, 0.3]), vec_of(&[0.4, 0.5, 0.6])]).unwrap();
        let c = vec_of(&[0.7, 0.8, 0.9]);
        let omega = ObservationMask::new(vec![1], 3).unwrap();
        let c_prime = crate::appearance::mask_candidate(&c, &omega).unwrap();
        let p = assemble(&ts, &c_prime, &omega).unwrap();
        assert_eq!(p.shape(), (3, 3));
        assert_eq!(p.num_observed(), 7);
        assert_eq!(p.y()[(1, 2)], c[1]);
        assert_eq!(p.y().columns(0, 2), ts.matrix().columns(0, 2));

        let full = ObservationMask::full(3);
        let p = assemble(&ts, &c, &full).unwrap();
        assert_eq!(p.num_observed(), 9);

        let wrong = vec_of(&[0.1, 0.2]);
        assert!(assemble(&ts, &wrong, &omega).is_err());
    }

    #[test]
    fn template_count_is_stable() {
        let mut ts = TemplateSet::from_columns(&[vec_of(&[1.0, 0.0]), vec_of(&[0.5, 0.5])]).unwrap();
        for k in 0..20 {
            let y = vec_of(&[(k as f64 * 0.37).sin().abs(), (k as f64 * 0.91).cos().abs()]);
            ts.update(&y, &TemplatePolicy::default()).unwrap();
            assert_eq!(ts.len(), 2);
            assert!(ts.weights().iter().all(|&w| w > 0.0));
        }
    }
}
