//! Particle-style tracking loop.
//!
//! Every frame draws candidate states around the previous target, scores each
//! candidate by how well matrix completion over the templates predicts its
//! unobserved pixels, keeps the best one, and then refreshes the pixel
//! weights, the observation mask and the templates (in that order).

use image::GrayImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appearance::{appearance, mask_candidate, AppearanceVector, MotionState};
use crate::completion::{complete, SolverParams};
use crate::error::{Error, Result};
use crate::eval::BBox;
use crate::mask::{init_weights, sample_mask, update_weights, ObservationMask, PixelWeights};
use crate::templates::{assemble, init_templates, TemplatePolicy, TemplateSet};

/// Smallest scale a sampled candidate may take.
const MIN_SCALE: f64 = 0.05;
/// Redraws allowed for a candidate whose crop misses the frame.
const MAX_REDRAWS: usize = 10;

/// Per-frame standard deviations of the Gaussian random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSigma {
    pub x: f64,
    pub y: f64,
    pub s: f64,
}

impl Default for MotionSigma {
    fn default() -> Self {
        MotionSigma {
            x: 3.0,
            y: 3.0,
            s: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub num_candidates: usize,
    pub sigma: MotionSigma,
    pub patch_w: usize,
    pub patch_h: usize,
    pub obs_rate: f64,
    pub n_templates: usize,
    pub solver: SolverParams,
    pub templates: TemplatePolicy,
    pub seed: u64,
    /// Scoring threads; 0 uses every available core. Output does not depend
    /// on this value.
    pub workers: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            num_candidates: 600,
            sigma: MotionSigma::default(),
            patch_w: 20,
            patch_h: 20,
            obs_rate: 0.7,
            n_templates: 10,
            solver: SolverParams::default(),
            templates: TemplatePolicy::default(),
            seed: 0,
            workers: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_candidates == 0 {
            return Err(Error::Config("num_candidates must be at least 1".into()));
        }
        let s = &self.sigma;
        if !(s.x > 0.0 && s.y > 0.0 && s.s > 0.0) {
            return Err(Error::Config(format!("sigma components must be positive, got {s:?}")));
        }
        if self.patch_w == 0 || self.patch_h == 0 {
            return Err(Error::Config("patch size must be non-zero".into()));
        }
        if !(self.obs_rate > 0.0 && self.obs_rate <= 1.0) {
            return Err(Error::Config(format!("obs_rate must lie in (0, 1], got {}", self.obs_rate)));
        }
        if self.observed_count() == 0 {
            return Err(Error::Config("obs_rate leaves no observed pixel".into()));
        }
        if self.n_templates == 0 {
            return Err(Error::Config("n_templates must be at least 1".into()));
        }
        self.solver.validate()
    }

    pub fn dim(&self) -> usize {
        self.patch_w * self.patch_h
    }

    pub fn observed_count(&self) -> usize {
        ObservationMask::size_for_rate(self.obs_rate, self.dim())
    }
}

/// Outcome of scoring one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub state: MotionState,
    /// Full appearance of the candidate.
    pub c: AppearanceVector,
    /// Candidate column of the completed matrix.
    pub x_hat: Vec<f64>,
    /// `||c - x_hat||_2`.
    pub err: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CandidateScore {
    /// Unnormalized observation likelihood `exp(-err)`.
    pub fn likelihood(&self) -> f64 {
        (-self.err).exp()
    }
}

/// Compact per-candidate record kept in a [`FrameResult`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub state: MotionState,
    /// `None` when the candidate was rejected.
    pub err: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: usize,
    pub state: MotionState,
    pub bbox: BBox,
    /// Per-pixel `|y_k - x_k|` of the winner; zero on observed pixels.
    pub err_map: Vec<f64>,
    /// `exp(-err)` of the winner.
    pub score: f64,
    pub err: f64,
    pub iterations: usize,
    /// Mask the candidates were scored with.
    pub mask: ObservationMask,
    /// Appearance of the located target.
    pub target: AppearanceVector,
    pub replaced_template: Option<usize>,
    pub per_candidate: Vec<CandidateSummary>,
}

/// Draws candidate states around `prev`, sorted into canonical `(x, y, s)`
/// order.
pub fn sample_candidates(
    prev: &MotionState,
    cfg: &TrackerConfig,
    base: (f64, f64),
    frame_size: (u32, u32),
    rng: &mut ChaCha8Rng,
) -> Vec<MotionState> {
    let mut out = Vec::with_capacity(cfg.num_candidates);
    for _ in 0..cfg.num_candidates {
        let mut state = None;
        let mut last = *prev;
        for _ in 0..MAX_REDRAWS {
            let nx: f64 = StandardNormal.sample(rng);
            let ny: f64 = StandardNormal.sample(rng);
            let ns: f64 = StandardNormal.sample(rng);
            let cand = MotionState {
                x: prev.x + cfg.sigma.x * nx,
                y: prev.y + cfg.sigma.y * ny,
                s: (prev.s + cfg.sigma.s * ns).max(MIN_SCALE),
            };
            last = cand;
            if cand.bbox(base.0, base.1).intersects_frame(frame_size.0, frame_size.1) {
                state = Some(cand);
                break;
            }
        }
        out.push(state.unwrap_or(MotionState {
            x: last.x.clamp(0.0, f64::from(frame_size.0)),
            y: last.y.clamp(0.0, f64::from(frame_size.1)),
            s: last.s,
        }));
    }
    canonical_sort(&mut out);
    out
}

pub fn canonical_sort(states: &mut [MotionState]) {
    states.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.s.total_cmp(&b.s))
    });
}

/// Crops, masks and completes one candidate.
pub fn score_candidate(
    frame: &GrayImage,
    state: &MotionState,
    ts: &TemplateSet,
    omega: &ObservationMask,
    base: (f64, f64),
    cfg: &TrackerConfig,
) -> Result<CandidateScore> {
    let c = appearance(frame, state, base, (cfg.patch_w, cfg.patch_h))?;
    score_appearance(c, *state, ts, omega, &cfg.solver)
}

/// Scores an already-extracted appearance vector.
pub fn score_appearance(
    c: AppearanceVector,
    state: MotionState,
    ts: &TemplateSet,
    omega: &ObservationMask,
    solver: &SolverParams,
) -> Result<CandidateScore> {
    let c_prime = mask_candidate(&c, omega)?;
    let problem = assemble(ts, &c_prime, omega)?;
    let result = complete(&problem, solver)?;
    let x_hat = result.column(ts.len());
    let err = c.distance(&x_hat);
    Ok(CandidateScore {
        state,
        c,
        x_hat,
        err,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// Index of the smallest error; ties go to the lowest index. `None` entries
/// are rejected candidates.
pub fn select_best(errs: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in errs.iter().enumerate() {
        if let Some(e) = *e {
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((i, e));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Model state carried from frame to frame.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    base: (f64, f64),
    state: MotionState,
    templates: TemplateSet,
    mask: ObservationMask,
    weights: PixelWeights,
    rng: ChaCha8Rng,
    frame_index: usize,
    frame_size: (u32, u32),
    pool: Option<std::sync::Arc<rayon::ThreadPool>>,
}

impl Tracker {
    /// Initializes templates, weights and the first mask from frame 0 and
    /// the ground-truth box.
    pub fn new(first: &GrayImage, init_bbox: &BBox, cfg: TrackerConfig) -> Result<(Self, FrameResult)> {
        cfg.validate()?;
        if !init_bbox.is_valid() {
            return Err(Error::TemplateInit(format!("degenerate initial box {init_bbox:?}")));
        }
        let base = (init_bbox.w, init_bbox.h);
        let state = MotionState::from_bbox(init_bbox);
        let patch = (cfg.patch_w, cfg.patch_h);
        let y1 = appearance(first, &state, base, patch).map_err(|e| Error::TemplateInit(e.to_string()))?;
        let templates = init_templates(&y1, first, &state, base, patch, cfg.n_templates)?;
        let weights = init_weights(cfg.dim())?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mask = sample_mask(&weights, cfg.observed_count(), &mut rng)?;
        let pool = match cfg.workers {
            1 => None,
            n => Some(std::sync::Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )),
        };
        let result = FrameResult {
            frame: 0,
            state,
            bbox: *init_bbox,
            err_map: vec![0.0; cfg.dim()],
            score: 1.0,
            err: 0.0,
            iterations: 0,
            mask: mask.clone(),
            target: y1,
            replaced_template: None,
            per_candidate: Vec::new(),
        };
        let tracker = Tracker {
            base,
            state,
            templates,
            mask,
            weights,
            rng,
            frame_index: 0,
            frame_size: first.dimensions(),
            pool,
            cfg,
        };
        Ok((tracker, result))
    }

    pub fn state(&self) -> &MotionState {
        &self.state
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn weights(&self) -> &PixelWeights {
        &self.weights
    }

    pub fn base_size(&self) -> (f64, f64) {
        self.base
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Tracks the next frame and updates the model.
    pub fn step(&mut self, frame: &GrayImage) -> Result<FrameResult> {
        self.frame_index += 1;
        if frame.dimensions() != self.frame_size {
            return Err(Error::InvalidInput(format!(
                "frame {} is {:?}, expected {:?}",
                self.frame_index,
                frame.dimensions(),
                self.frame_size
            )));
        }
        let candidates = sample_candidates(&self.state, &self.cfg, self.base, self.frame_size, &mut self.rng);
        let scores = self.score_all(frame, &candidates);
        let errs: Vec<Option<f64>> = scores.iter().map(|s| s.as_ref().map(|s| s.err)).collect();
        let Some(best) = select_best(&errs) else {
            return Err(Error::TrackerLost {
                frame: self.frame_index,
                last: self.state,
            });
        };
        let per_candidate = candidates
            .iter()
            .zip(&scores)
            .map(|(state, s)| CandidateSummary {
                state: *state,
                err: s.as_ref().map(|s| s.err),
                iterations: s.as_ref().map_or(0, |s| s.iterations),
            })
            .collect();
        let winner = scores
            .into_iter()
            .nth(best)
            .flatten()
            .expect("select_best returns a scored index");

        let observed = self.mask.to_flags();
        let err_map: Vec<f64> = winner
            .c
            .as_slice()
            .iter()
            .zip(&winner.x_hat)
            .zip(&observed)
            .map(|((c, x), &o)| if o { 0.0 } else { (c - x).abs() })
            .collect();

        let used_mask = self.mask.clone();
        self.weights = update_weights(&err_map, &self.mask, &mut self.rng)?;
        self.mask = sample_mask(&self.weights, self.cfg.observed_count(), &mut self.rng)?;
        let replaced = self.templates.update(&winner.c, &self.cfg.templates)?;
        self.state = winner.state;

        Ok(FrameResult {
            frame: self.frame_index,
            state: winner.state,
            bbox: winner.state.bbox(self.base.0, self.base.1),
            err_map,
            score: winner.likelihood(),
            err: winner.err,
            iterations: winner.iterations,
            mask: used_mask,
            target: winner.c,
            replaced_template: replaced,
            per_candidate,
        })
    }

    fn score_all(&self, frame: &GrayImage, candidates: &[MotionState]) -> Vec<Option<CandidateScore>> {
        let score = |state: &MotionState| {
            score_candidate(frame, state, &self.templates, &self.mask, self.base, &self.cfg).ok()
        };
        match &self.pool {
            None => candidates.iter().map(score).collect(),
            Some(pool) => pool.install(|| candidates.par_iter().map(score).collect()),
        }
    }
}

/// Anything that can hand out frames by index.
pub trait FrameSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn frame(&self, index: usize) -> Result<GrayImage>;
}

impl FrameSource for [GrayImage] {
    fn len(&self) -> usize {
        <[GrayImage]>::len(self)
    }

    fn frame(&self, index: usize) -> Result<GrayImage> {
        self.get(index).cloned().ok_or_else(|| Error::Ingestion {
            index,
            path: Default::default(),
            reason: "index out of range".into(),
        })
    }
}

impl FrameSource for Vec<GrayImage> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn frame(&self, index: usize) -> Result<GrayImage> {
        self.as_slice().frame(index)
    }
}

/// Tracks a whole sequence. Frame 0 reports `init_bbox`.
pub fn run_tracker<S: FrameSource + ?Sized>(
    sequence: &S,
    init_bbox: &BBox,
    cfg: &TrackerConfig,
) -> Result<Vec<FrameResult>> {
    run_tracker_with(sequence, init_bbox, cfg, |_| {})
}

/// As [`run_tracker`], calling `on_frame` after every frame.
pub fn run_tracker_with<S: FrameSource + ?Sized>(
    sequence: &S,
    init_bbox: &BBox,
    cfg: &TrackerConfig,
    mut on_frame: impl FnMut(&FrameResult),
) -> Result<Vec<FrameResult>> {
    if sequence.is_empty() {
        return Err(Error::InvalidInput("empty sequence".into()));
    }
    let first = sequence.frame(0)?;
    let (mut tracker, first_result) = Tracker::new(&first, init_bbox, cfg.clone())?;
    on_frame(&first_result);
    let mut out = Vec::with_capacity(sequence.len());
    out.push(first_result);
    for k in 1..sequence.len() {
        let frame = sequence.frame(k)?;
        let result = tracker.step(&frame)?;
        on_frame(&result);
        out.push(result);
    }
    Ok(out)
}
