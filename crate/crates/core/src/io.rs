//! Sequence ingestion, ground-truth parsing, the tracker config file and the
//! per-frame results CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage};
use serde::{Deserialize, Serialize};

use crate::appearance::rgb_to_gray;
use crate::completion::SolverParams;
use crate::error::{Error, Result};
use crate::eval::BBox;
use crate::templates::TemplatePolicy;
use crate::tracker::{FrameResult, FrameSource, MotionSigma, TrackerConfig};

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "pgm", "ppm", "pnm"];

/// Where a sequence came from.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceKind {
    Directory(PathBuf),
    Synthetic,
}

/// Directory of image files decoded on demand.
#[derive(Debug, Clone)]
pub struct ImageSequence {
    pub kind: SequenceKind,
    paths: Vec<PathBuf>,
    size: (u32, u32),
}

impl ImageSequence {
    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn frame_size(&self) -> (u32, u32) {
        self.size
    }

    pub fn frame_count(&self) -> usize {
        self.paths.len()
    }

    /// Decodes every frame.
    pub fn load_all(&self) -> Result<Vec<GrayImage>> {
        (0..self.paths.len()).map(|i| self.frame(i)).collect()
    }
}

impl FrameSource for ImageSequence {
    fn len(&self) -> usize {
        self.paths.len()
    }

    fn frame(&self, index: usize) -> Result<GrayImage> {
        let path = self.paths.get(index).ok_or_else(|| Error::Ingestion {
            index,
            path: PathBuf::new(),
            reason: "index out of range".into(),
        })?;
        let img = decode_gray(path).map_err(|e| Error::Ingestion {
            index,
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if img.dimensions() != self.size {
            return Err(Error::Ingestion {
                index,
                path: path.clone(),
                reason: format!("size {:?} differs from {:?}", img.dimensions(), self.size),
            });
        }
        Ok(img)
    }
}

/// Decodes an image file to 8-bit gray, converting color with ITU-R 601 weights.
pub fn decode_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path)?;
    Ok(match img {
        DynamicImage::ImageLuma8(g) => g,
        DynamicImage::ImageRgb8(rgb) => rgb_to_gray(&rgb),
        other => rgb_to_gray(&other.to_rgb8()),
    })
}

/// Orders file names so that embedded numbers compare numerically.
fn natural_key(name: &str) -> Vec<(u8, u64, String)> {
    let mut key = Vec::new();
    let mut chars = name.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(d);
                chars.next();
            }
            let value = digits.parse().unwrap_or(u64::MAX);
            key.push((0, value, digits));
        } else {
            let mut text = String::new();
            while let Some(&t) = chars.peek().filter(|t| !t.is_ascii_digit()) {
                text.push(t);
                chars.next();
            }
            key.push((1, 0, text));
        }
    }
    key
}

/// Lists the frames of a sequence directory. An OTB-style layout with an
/// `img/` subdirectory is followed automatically.
pub fn load_sequence(path: &Path) -> Result<ImageSequence> {
    let dir = if path.join("img").is_dir() {
        path.join("img")
    } else {
        path.to_path_buf()
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    paths.sort_by_cached_key(|p| natural_key(&p.file_name().unwrap_or_default().to_string_lossy()));
    if paths.is_empty() {
        return Err(Error::Ingestion {
            index: 0,
            path: dir,
            reason: "no image files".into(),
        });
    }
    let mut size = None;
    for (index, p) in paths.iter().enumerate() {
        let dims = image::image_dimensions(p).map_err(|e| Error::Ingestion {
            index,
            path: p.clone(),
            reason: e.to_string(),
        })?;
        match size {
            None => size = Some(dims),
            Some(s) if s != dims => {
                return Err(Error::Ingestion {
                    index,
                    path: p.clone(),
                    reason: format!("size {dims:?} differs from {s:?}"),
                })
            }
            Some(_) => {}
        }
    }
    Ok(ImageSequence {
        kind: SequenceKind::Directory(dir),
        paths,
        size: size.expect("at least one frame"),
    })
}

/// One box per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub boxes: Vec<BBox>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn check_frames(&self, frames: usize) -> Result<()> {
        if self.boxes.len() != frames {
            return Err(Error::CountMismatch {
                boxes: self.boxes.len(),
                frames,
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.boxes {
            let _ = writeln!(out, "{},{},{},{}", b.x, b.y, b.w, b.h);
        }
        out
    }
}

/// Parses `x,y,w,h` lines; commas, tabs and spaces all separate fields.
pub fn parse_groundtruth(text: &str, source: &Path) -> Result<GroundTruth> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: source.to_path_buf(),
            line: i + 1,
            reason,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c == '\t' || c == ' ')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|e| parse_err(format!("bad number {f:?}: {e}")))?;
        }
        let b = BBox::new(v[0], v[1], v[2], v[3]);
        if !b.is_valid() {
            return Err(parse_err(format!("box {b:?} has non-positive size")));
        }
        boxes.push(b);
    }
    Ok(GroundTruth { boxes })
}

pub fn load_groundtruth(path: &Path) -> Result<GroundTruth> {
    parse_groundtruth(&fs::read_to_string(path)?, path)
}

/// Finds the ground-truth file of an OTB-style sequence directory.
pub fn find_groundtruth(seq_dir: &Path) -> Option<PathBuf> {
    ["groundtruth_rect.txt", "groundtruth.txt"]
        .iter()
        .map(|n| seq_dir.join(n))
        .find(|p| p.is_file())
}

/// Tracker settings as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub num_candidates: usize,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_s: f64,
    pub patch_w: usize,
    pub patch_h: usize,
    pub obs_rate: f64,
    pub n_templates: usize,
    pub mu0: Option<f64>,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub growth_tol: f64,
    pub sim_threshold: f64,
    pub alpha: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ConfigFile {
    fn default() -> Self {
        TrackerConfig::default().into()
    }
}

impl From<TrackerConfig> for ConfigFile {
    fn from(c: TrackerConfig) -> Self {
        ConfigFile {
            num_candidates: c.num_candidates,
            sigma_x: c.sigma.x,
            sigma_y: c.sigma.y,
            sigma_s: c.sigma.s,
            patch_w: c.patch_w,
            patch_h: c.patch_h,
            obs_rate: c.obs_rate,
            n_templates: c.n_templates,
            mu0: c.solver.mu0,
            rho: c.solver.rho,
            tol: c.solver.tol,
            max_iter: c.solver.max_iter,
            growth_tol: c.solver.growth_tol,
            sim_threshold: c.templates.sim_threshold,
            alpha: c.templates.alpha,
            seed: c.seed,
            workers: c.workers,
        }
    }
}

impl From<ConfigFile> for TrackerConfig {
    fn from(c: ConfigFile) -> Self {
        TrackerConfig {
            num_candidates: c.num_candidates,
            sigma: MotionSigma {
                x: c.sigma_x,
                y: c.sigma_y,
                s: c.sigma_s,
            },
            patch_w: c.patch_w,
            patch_h: c.patch_h,
            obs_rate: c.obs_rate,
            n_templates: c.n_templates,
            solver: SolverParams {
                mu0: c.mu0,
                rho: c.rho,
                tol: c.tol,
                max_iter: c.max_iter,
                growth_tol: c.growth_tol,
            },
            templates: TemplatePolicy {
                sim_threshold: c.sim_threshold,
                alpha: c.alpha,
            },
            seed: c.seed,
            workers: c.workers,
        }
    }
}

pub fn load_config(path: &Path) -> Result<TrackerConfig> {
    let file: ConfigFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let cfg = TrackerConfig::from(file);
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_to_json(cfg: &TrackerConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ConfigFile::from(cfg.clone()))?)
}

/// One line of `boxes.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRow {
    pub frame: usize,
    pub bbox: BBox,
    pub score: f64,
    pub err: f64,
    pub iterations: usize,
}

impl From<&FrameResult> for BoxRow {
    fn from(r: &FrameResult) -> Self {
        BoxRow {
            frame: r.frame,
            bbox: r.bbox,
            score: r.score,
            err: r.err,
            iterations: r.iterations,
        }
    }
}

pub const CSV_HEADER: &str = "frame,x,y,w,h,score,err,iterations";

/// Floats are written in shortest round-trip form, so parsing the CSV back
/// reproduces the in-memory values exactly.
pub fn boxes_csv(rows: &[BoxRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.frame, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h, r.score, r.err, r.iterations
        );
    }
    out
}

pub fn parse_boxes_csv(text: &str, source: &Path) -> Result<Vec<BoxRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == CSV_HEADER) {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            path: source.to_path_buf(),
            line: i + 1,
            reason,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(parse_err(format!("expected 8 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("bad number {s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| parse_err(format!("bad integer {s:?}: {e}")));
        rows.push(BoxRow {
            frame: int(f[0])?,
            bbox: BBox::new(num(f[1])?, num(f[2])?, num(f[3])?, num(f[4])?),
            score: num(f[5])?,
            err: num(f[6])?,
            iterations: int(f[7])?,
        });
    }
    Ok(rows)
}

pub fn read_boxes_csv(path: &Path) -> Result<Vec<BoxRow>> {
    parse_boxes_csv(&fs::read_to_string(path)?, path)
}

/// Writes a sequence as `img/0001.png ...` plus `groundtruth_rect.txt`.
pub fn write_sequence(dir: &Path, frames: &[GrayImage], gt: Option<&GroundTruth>) -> Result<()> {
    let img_dir = dir.join("img");
    fs::create_dir_all(&img_dir)?;
    for (k, f) in frames.iter().enumerate() {
        f.save(img_dir.join(format!("{:04}.png", k + 1)))?;
    }
    if let Some(gt) = gt {
        fs::write(dir.join("groundtruth_rect.txt"), gt.to_text())?;
    }
    Ok(())
}
