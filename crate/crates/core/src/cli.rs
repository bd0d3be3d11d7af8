//! Command-line front end: `track`, `eval`, `synth` and `sweep`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use crate::io::{find_groundtruth, load_config, load_groundtruth, load_sequence, write_sequence, GroundTruth};
use crate::run::{
    eval_dir, parse_rates, sweep_csv, sweep_obs_rate, track_to_dir, LabeledSequence, TrackOptions, SWEEP_FILE,
};
use crate::synth::{generate_synthetic, SyntheticSpec};
use crate::tracker::TrackerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    /// Track a sequence and write boxes.csv (and metrics.json with ground truth).
    Track,
    /// Score an existing boxes.csv against ground truth.
    Eval,
    /// Write a synthetic sequence in OTB layout.
    Synth,
    /// Track at several observation rates and write a rate/metric table.
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "mctrack", version, about = "Matrix-completion visual tracker")]
pub struct Args {
    pub verb: Verb,
    /// Tracker config (JSON); for `synth`, a synthetic sequence spec.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Image directory (OTB layout or plain). Defaults to the synthetic demo.
    #[arg(long)]
    pub seq: Option<PathBuf>,
    /// Ground-truth file, one x,y,w,h per frame.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write annotated frames, mask views and the template montage.
    #[arg(long)]
    pub overlay: bool,
    /// Comma-separated observation rates, e.g. 0.3,0.5,0.7,0.9.
    #[arg(long, value_name = "RATES")]
    pub sweep_obs_rate: Option<String>,
}

impl Args {
    /// Rejects flags that mean nothing for the chosen verb.
    pub fn check(&self) -> Result<()> {
        let mut bad = Vec::new();
        match self.verb {
            Verb::Track => {
                if self.sweep_obs_rate.is_some() {
                    bad.push("--sweep-obs-rate");
                }
            }
            Verb::Eval => {
                for (set, name) in [
                    (self.config.is_some(), "--config"),
                    (self.seed.is_some(), "--seed"),
                    (self.overlay, "--overlay"),
                    (self.sweep_obs_rate.is_some(), "--sweep-obs-rate"),
                ] {
                    if set {
                        bad.push(name);
                    }
                }
                if self.gt.is_none() && self.seq.is_none() {
                    return Err(Error::Usage("eval needs --gt or --seq".into()));
                }
            }
            Verb::Synth => {
                for (set, name) in [
                    (self.seq.is_some(), "--seq"),
                    (self.gt.is_some(), "--gt"),
                    (self.overlay, "--overlay"),
                    (self.sweep_obs_rate.is_some(), "--sweep-obs-rate"),
                ] {
                    if set {
                        bad.push(name);
                    }
                }
            }
            Verb::Sweep => {
                if self.overlay {
                    bad.push("--overlay");
                }
                if self.sweep_obs_rate.is_none() {
                    return Err(Error::Usage("sweep needs --sweep-obs-rate".into()));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "{} not allowed with `{}`",
                bad.join(", "),
                self.verb.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default()
            )))
        }
    }
}

fn tracker_config(args: &Args) -> Result<TrackerConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => TrackerConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn groundtruth_for(args: &Args, seq: Option<&Path>) -> Result<Option<GroundTruth>> {
    if let Some(p) = &args.gt {
        return load_groundtruth(p).map(Some);
    }
    match seq.and_then(find_groundtruth) {
        Some(p) => load_groundtruth(&p).map(Some),
        None => Ok(None),
    }
}

fn print_report(report: &crate::eval::EvalReport) {
    println!(
        "frames {}  mean TLE {:.3}  precision@20 {:.3}  SR@0.5 {:.3}  mean OR {:.3}",
        report.frames, report.mean_tle, report.precision_at_20, report.success_at_0_5, report.mean_overlap
    );
}

fn cmd_track(args: &Args) -> Result<()> {
    let cfg = tracker_config(args)?;
    let opts = TrackOptions { overlay: args.overlay };
    let summary = match &args.seq {
        Some(dir) => {
            let seq = load_sequence(dir)?;
            let gt = groundtruth_for(args, Some(dir))?
                .ok_or_else(|| Error::Usage("no ground truth found; pass --gt for the initial box".into()))?;
            let init = *gt
                .boxes
                .first()
                .ok_or_else(|| Error::Usage("ground truth is empty".into()))?;
            // One box only: treat it as the initialization, no scoring.
            let gt = (gt.len() > 1).then_some(gt);
            track_to_dir(&seq, &init, gt.as_ref(), &cfg, &args.out, &opts)?
        }
        None => {
            let seq = LabeledSequence::synthetic(&SyntheticSpec::default())?;
            track_to_dir(
                &seq.frames,
                &seq.groundtruth.boxes[0],
                Some(&seq.groundtruth),
                &cfg,
                &args.out,
                &opts,
            )?
        }
    };
    println!("wrote {} ({} frames)", summary.boxes_path.display(), summary.rows.len());
    if let Some(r) = &summary.report {
        print_report(r);
    }
    Ok(())
}

fn cmd_eval(args: &Args) -> Result<()> {
    let gt = groundtruth_for(args, args.seq.as_deref())?
        .ok_or_else(|| Error::Usage("no ground truth found; pass --gt".into()))?;
    let report = eval_dir(&args.out, &gt)?;
    print_report(&report);
    Ok(())
}

fn cmd_synth(args: &Args) -> Result<()> {
    let mut spec = match &args.config {
        Some(p) => serde_json::from_str::<SyntheticSpec>(&fs::read_to_string(p)?)?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let seq = generate_synthetic(&spec)?;
    write_sequence(&args.out, &seq.frames, Some(&seq.groundtruth))?;
    println!("wrote {} frames to {}", seq.frames.len(), args.out.display());
    Ok(())
}

fn cmd_sweep(args: &Args) -> Result<()> {
    let cfg = tracker_config(args)?;
    let rates = parse_rates(args.sweep_obs_rate.as_deref().unwrap_or_default())?;
    let progress = |rate: f64, name: &str, r: &crate::eval::EvalReport| {
        eprintln!("rate {rate}: {name} mean OR {:.3}", r.mean_overlap);
    };
    let rows = match &args.seq {
        Some(dir) => {
            let gt = groundtruth_for(args, Some(dir))?
                .ok_or_else(|| Error::Usage("no ground truth found; pass --gt".into()))?;
            let seqs = vec![LabeledSequence {
                name: dir.display().to_string(),
                frames: load_sequence(dir)?,
                groundtruth: gt,
            }];
            sweep_obs_rate(&seqs, &cfg, &rates, progress)?
        }
        None => {
            let seqs = vec![LabeledSequence::synthetic(&SyntheticSpec::default())?];
            sweep_obs_rate(&seqs, &cfg, &rates, progress)?
        }
    };
    let table = sweep_csv(&rows);
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join(SWEEP_FILE), &table)?;
    print!("{table}");
    Ok(())
}

pub fn run(args: &Args) -> Result<()> {
    args.check()?;
    match args.verb {
        Verb::Track => cmd_track(args),
        Verb::Eval => cmd_eval(args),
        Verb::Synth => cmd_synth(args),
        Verb::Sweep => cmd_sweep(args),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&args) {
        Ok(()) => 0,
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
