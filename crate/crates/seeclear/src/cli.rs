//! Batch command-line surface: forward corruption, reverse sampling, PSD
//! analysis, metric evaluation, and an end-to-end demo.
//!
//! Exit codes: 0 ok, 1 usage error, 2 data error, 3 invariant violation.
//! Outputs are idempotent for a fixed config and seed: tensor files are
//! byte-identical and PNGs identical across reruns and worker counts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};

use crate::category::{MemoryBank, QueryAxis};
use crate::condenser::{generate_clip, CondenserConfig, CondenserWeights, GenerateOutput};
use crate::diffusion::forward_marginal_sample;
use crate::error::{Result, SeeClearError};
use crate::incam::GateMode;
use crate::io::{list_pngs, load_png, read_tensor, save_png, write_tensor};
use crate::metrics::{psd_distance, report_clip, report_csv, PsdBand, PsnrMode};
use crate::resample::{bicubic_down, bicubic_resize};
use crate::rng::KeyedRng;
use crate::schedule::{build_schedule, DiffusionSchedule};
use crate::semantics::Vocabulary;
use crate::spectral::{dct2_patches, idct2_patches, luma, psd_radial};
use crate::tensor::Tensor;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SEECLEAR_SEED";

/// Full run configuration: schedule, condenser, and plumbing parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub steps: usize,
    pub kappa: f64,
    pub sigma2_b: f64,
    pub eta1: f64,
    pub eta_t: f64,
    pub patch: usize,
    pub seed: u64,
    pub condenser: CondenserConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            steps: 15,
            kappa: 2.0,
            sigma2_b: 2.0,
            eta1: 0.001,
            eta_t: 0.999,
            patch: 8,
            seed: 0,
            condenser: CondenserConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse a line-oriented `key = value` file; every key has a default and
    /// unknown keys are rejected so typos surface immediately. `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SeeClearError::data(format!("config line {}: expected key = value", ln + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                SeeClearError::data(format!("config line {}: bad {what} value {value:?}", ln + 1))
            };
            macro_rules! num {
                ($what:expr) => {
                    value.parse().map_err(|_| bad($what))?
                };
            }
            match key {
                "steps" => cfg.steps = num!("steps"),
                "kappa" => cfg.kappa = num!("kappa"),
                "sigma2_b" => cfg.sigma2_b = num!("sigma2_b"),
                "eta1" => cfg.eta1 = num!("eta1"),
                "eta_t" => cfg.eta_t = num!("eta_t"),
                "patch" => cfg.patch = num!("patch"),
                "seed" => cfg.seed = num!("seed"),
                "base_channels" => cfg.condenser.base_channels = num!("base_channels"),
                "encoder_depth" => cfg.condenser.encoder_depth = num!("encoder_depth"),
                "middle_blocks" => cfg.condenser.middle_blocks = num!("middle_blocks"),
                "decoder_depth" => cfg.condenser.decoder_depth = num!("decoder_depth"),
                "window" => cfg.condenser.window = num!("window"),
                "clip_len" => cfg.condenser.clip_len = num!("clip_len"),
                "upscale" => cfg.condenser.upscale = num!("upscale"),
                "dwt_levels" => cfg.condenser.dwt_levels = num!("dwt_levels"),
                "sem_tokens" => cfg.condenser.sem_tokens = num!("sem_tokens"),
                "sem_dim" => cfg.condenser.sem_dim = num!("sem_dim"),
                "bank_groups" => cfg.condenser.bank_groups = num!("bank_groups"),
                "bank_channels" => cfg.condenser.bank_channels = num!("bank_channels"),
                "bank_pool" => cfg.condenser.bank_pool = num!("bank_pool"),
                "gate" => {
                    cfg.condenser.gate = match value {
                        "rowmax" => GateMode::RowMax,
                        "mean" => GateMode::Mean,
                        _ => return Err(bad("gate (rowmax|mean)")),
                    }
                }
                "query_axis" => {
                    cfg.condenser.query_axis = match value {
                        "channels" => QueryAxis::MemoryChannels,
                        "tokens" => QueryAxis::ClipTokens,
                        _ => return Err(bad("query_axis (channels|tokens)")),
                    }
                }
                _ => {
                    return Err(SeeClearError::data(format!(
                        "config line {}: unknown key {key:?}",
                        ln + 1
                    )))
                }
            }
        }
        Ok(cfg)
    }

    /// Load a config file (or defaults when absent) and apply the seed
    /// environment override.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| SeeClearError::data(format!("{}: {e}", p.display())))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        if let Ok(v) = std::env::var(SEED_ENV) {
            cfg.seed = v
                .parse()
                .map_err(|_| SeeClearError::data(format!("{SEED_ENV} must be an integer, got {v:?}")))?;
        }
        Ok(cfg)
    }

    pub fn schedule(&self) -> Result<DiffusionSchedule<f64>> {
        build_schedule(
            self.steps,
            self.kappa,
            self.sigma2_b,
            self.eta1,
            self.eta_t,
            self.patch,
        )
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "seeclear",
    version,
    about = "Blurring-ResShift diffusion for video super-resolution"
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Corrupt HR frames to a chosen diffusion step, conditioned on LR.
    Forward {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        hr_dir: PathBuf,
        #[arg(long)]
        lr_dir: PathBuf,
        /// Diffusion step in 1..=steps.
        #[arg(long)]
        t: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Reverse-sample SR frames from an LR directory.
    Sample {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lr_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// HR directory enabling the oracle injection denoiser.
        #[arg(long)]
        oracle: Option<PathBuf>,
        /// HR directory for metrics only (network denoiser).
        #[arg(long)]
        hr: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Read the initial memory bank from a tensor file.
        #[arg(long)]
        bank_in: Option<PathBuf>,
        /// Persist the final memory bank to a tensor file.
        #[arg(long)]
        bank_out: Option<PathBuf>,
    },
    /// Radially averaged power spectral density of each frame, as CSV.
    Psd {
        #[arg(long)]
        frames_dir: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// PSNR/SSIM/Charbonnier between two frame directories, as CSV.
    Metrics {
        #[arg(long)]
        a_dir: PathBuf,
        #[arg(long)]
        b_dir: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        /// psnr channel convention: y or rgb.
        #[arg(long, default_value = "y")]
        mode: String,
    },
    /// Synthesize a moving-shapes clip and run the full pipeline on it.
    Demo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn exit_code(e: &SeeClearError) -> i32 {
    match e {
        SeeClearError::InvalidArgument(_) => 1,
        SeeClearError::Data(_) | SeeClearError::Io(_) | SeeClearError::Image(_) => 2,
        SeeClearError::DimensionMismatch(_) | SeeClearError::ScheduleViolation(_) => 3,
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Forward {
            config,
            hr_dir,
            lr_dir,
            t,
            out_dir,
        } => cmd_forward(&RunConfig::load(config.as_deref())?, &hr_dir, &lr_dir, t, &out_dir),
        Command::Sample {
            config,
            lr_dir,
            out_dir,
            oracle,
            hr,
            threads,
            bank_in,
            bank_out,
        } => cmd_sample(
            &RunConfig::load(config.as_deref())?,
            &lr_dir,
            &out_dir,
            oracle.as_deref(),
            hr.as_deref(),
            threads,
            bank_in.as_deref(),
            bank_out.as_deref(),
        ),
        Command::Psd {
            frames_dir,
            out_csv,
        } => cmd_psd(&frames_dir, &out_csv),
        Command::Metrics {
            a_dir,
            b_dir,
            out_csv,
            mode,
        } => cmd_metrics(&a_dir, &b_dir, &out_csv, &mode),
        Command::Demo {
            config,
            out_dir,
            threads,
        } => cmd_demo(&RunConfig::load(config.as_deref())?, &out_dir, threads),
    }
}

fn load_named_frames(dir: &Path) -> Result<Vec<(String, Tensor<f64>)>> {
    list_pngs(dir)?
        .into_iter()
        .map(|p| {
            let name = p
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("frame.png")
                .to_string();
            Ok((name, load_png(&p)?))
        })
        .collect()
}

fn match_names(
    a: &[(String, Tensor<f64>)],
    b: &[(String, Tensor<f64>)],
    a_what: &str,
    b_what: &str,
) -> Result<()> {
    for (name, _) in a {
        if !b.iter().any(|(n, _)| n == name) {
            return Err(SeeClearError::data(format!(
                "{b_what} is missing frame {name} present in {a_what}"
            )));
        }
    }
    for (name, _) in b {
        if !a.iter().any(|(n, _)| n == name) {
            return Err(SeeClearError::data(format!(
                "{a_what} is missing frame {name} present in {b_what}"
            )));
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Write corrupted frames at step `t`: PNG visualization plus raw tensor.
pub fn cmd_forward(
    cfg: &RunConfig,
    hr_dir: &Path,
    lr_dir: &Path,
    t: usize,
    out_dir: &Path,
) -> Result<()> {
    let sched = cfg.schedule()?;
    if t < 1 || t > sched.steps {
        return Err(SeeClearError::arg(format!(
            "step {t} outside 1..={}",
            sched.steps
        )));
    }
    let hr = load_named_frames(hr_dir)?;
    let lr = load_named_frames(lr_dir)?;
    match_names(&hr, &lr, "hr-dir", "lr-dir")?;
    ensure_dir(out_dir)?;
    let rng = KeyedRng::new(cfg.seed);
    for (name, hr_frame) in &hr {
        let lr_frame = &lr.iter().find(|(n, _)| n == name).unwrap().1;
        let (h, w) = (hr_frame.shape()[1], hr_frame.shape()[2]);
        let anchor = bicubic_resize(lr_frame, h, w)?;
        let shape4 = [1, 3, h, w];
        let u0 = dct2_patches(&hr_frame.clone().reshape(&shape4)?, sched.patch)?;
        let ul = dct2_patches(&anchor.reshape(&shape4)?, sched.patch)?;
        let frame_rng = rng.split(&[hash_name(name)]);
        let state = forward_marginal_sample(&u0, &ul, t, &sched, &frame_rng)?;
        let pixels = idct2_patches(&state.spec)?.slab(0)?;
        save_png(&out_dir.join(name), &pixels)?;
        let stem = name.strip_suffix(".png").unwrap_or(name);
        write_tensor(&out_dir.join(format!("{stem}.seet")), &pixels)?;
    }
    Ok(())
}

fn hash_name(name: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in name.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

// Run generation over clips, optionally across worker threads. Every clip
// queries the run-initial bank and is keyed by its clip index, so outputs are
// identical for any worker count; bank updates are folded in clip order.
#[allow(clippy::too_many_arguments)]
fn generate_all(
    cfg: &RunConfig,
    lr: &[(String, Tensor<f64>)],
    oracle_hr: Option<&[(String, Tensor<f64>)]>,
    bank0: &MemoryBank<f64>,
    weights: &CondenserWeights<f64>,
    vocab: &Vocabulary,
    threads: usize,
) -> Result<(Vec<(String, Tensor<f64>)>, MemoryBank<f64>)> {
    let sched = cfg.schedule()?;
    let m = cfg.condenser.clip_len;
    let clips: Vec<&[(String, Tensor<f64>)]> = lr.chunks(m).collect();
    let root = KeyedRng::new(cfg.seed);
    let n = clips.len();
    let results: Mutex<Vec<Option<Result<GenerateOutput<f64>>>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = |_wid: usize| {
        loop {
            let idx = next.fetch_add(1, Ordering::SeqCst);
            if idx >= n {
                break;
            }
            let clip = clips[idx];
            let frames: Vec<Tensor<f64>> = clip.iter().map(|(_, f)| f.clone()).collect();
            let hr_frames: Option<Vec<Tensor<f64>>> = oracle_hr.map(|hr| {
                clip.iter()
                    .map(|(name, _)| hr.iter().find(|(n2, _)| n2 == name).unwrap().1.clone())
                    .collect()
            });
            let out = generate_clip(
                &frames,
                &sched,
                &cfg.condenser,
                weights,
                bank0,
                vocab,
                &root.split(&[idx as u64]),
                hr_frames.as_deref(),
            );
            results.lock().unwrap()[idx] = Some(out);
        }
    };
    let workers = threads.max(1).min(n.max(1));
    if workers <= 1 {
        worker(0);
    } else {
        std::thread::scope(|s| {
            for wid in 0..workers {
                s.spawn(move || worker(wid));
            }
        });
    }
    let collected = results.into_inner().unwrap();
    let mut sr = Vec::with_capacity(lr.len());
    let mut bank = bank0.clone();
    for (ci, slot) in collected.into_iter().enumerate() {
        let out = slot.expect("worker covered every clip")?;
        for (f, frame) in out.frames.into_iter().enumerate() {
            sr.push((clips[ci][f].0.clone(), frame));
        }
        if out.bank_updates > 0 {
            bank = out.bank;
        }
    }
    Ok((sr, bank))
}

/// Reverse-sample a directory of LR frames to SR outputs.
#[allow(clippy::too_many_arguments)]
pub fn cmd_sample(
    cfg: &RunConfig,
    lr_dir: &Path,
    out_dir: &Path,
    oracle: Option<&Path>,
    hr: Option<&Path>,
    threads: usize,
    bank_in: Option<&Path>,
    bank_out: Option<&Path>,
) -> Result<()> {
    let lr = load_named_frames(lr_dir)?;
    let hr_frames = match (oracle, hr) {
        (Some(dir), _) | (None, Some(dir)) => {
            let frames = load_named_frames(dir)?;
            match_names(&lr, &frames, "lr-dir", "hr dir")?;
            Some(frames)
        }
        (None, None) => None,
    };
    ensure_dir(out_dir)?;
    let (lr_h, lr_w) = (lr[0].1.shape()[1], lr[0].1.shape()[2]);
    let mut wrng = KeyedRng::new(cfg.seed).stream(&[2001]);
    let weights = CondenserWeights::seeded(&cfg.condenser, lr_h, lr_w, &mut wrng)?;
    let bank0 = match bank_in {
        Some(p) => MemoryBank::from_tensor(
            &read_tensor(p)?,
            cfg.condenser.bank_channels,
            cfg.condenser.base_channels,
        )?,
        None => MemoryBank::zeros(
            cfg.condenser.bank_groups,
            cfg.condenser.bank_channels,
            cfg.condenser.base_channels,
        )?,
    };
    let vocab = Vocabulary::default_classes();
    let oracle_ref = if oracle.is_some() {
        hr_frames.as_deref()
    } else {
        None
    };
    let (sr, bank) = generate_all(cfg, &lr, oracle_ref, &bank0, &weights, &vocab, threads)?;
    for (name, frame) in &sr {
        save_png(&out_dir.join(name), frame)?;
        let stem = name.strip_suffix(".png").unwrap_or(name);
        write_tensor(&out_dir.join(format!("{stem}.seet")), frame)?;
    }
    if let Some(hr_frames) = &hr_frames {
        let sr_only: Vec<Tensor<f64>> = sr.iter().map(|(_, f)| f.clone()).collect();
        let hr_only: Vec<Tensor<f64>> = sr
            .iter()
            .map(|(name, _)| hr_frames.iter().find(|(n, _)| n == name).unwrap().1.clone())
            .collect();
        let report = report_clip(&sr_only, &hr_only, PsnrMode::Y, 1e-3)?;
        fs::write(out_dir.join("metrics.csv"), report_csv(&report))?;
    }
    if let Some(p) = bank_out {
        write_tensor(p, &bank.to_tensor())?;
    }
    Ok(())
}

/// Radial PSD profile of each frame's luma, one CSV row per frame.
pub fn cmd_psd(frames_dir: &Path, out_csv: &Path) -> Result<()> {
    let frames = load_named_frames(frames_dir)?;
    let mut rows = Vec::with_capacity(frames.len());
    let mut bins = 0usize;
    for (name, frame) in &frames {
        let prof = psd_radial(&luma(frame)?)?;
        bins = bins.max(prof.bins.len());
        rows.push((name.clone(), prof));
    }
    let mut csv = String::from("frame");
    for b in 0..bins {
        csv.push_str(&format!(",bin{b}"));
    }
    csv.push('\n');
    for (name, prof) in &rows {
        csv.push_str(name);
        for b in 0..bins {
            match prof.bins.get(b) {
                Some(v) => csv.push_str(&format!(",{v:.9e}")),
                None => csv.push(','),
            }
        }
        csv.push('\n');
    }
    fs::write(out_csv, csv)?;
    Ok(())
}

/// PSNR/SSIM/Charbonnier between same-named frames of two directories.
pub fn cmd_metrics(a_dir: &Path, b_dir: &Path, out_csv: &Path, mode: &str) -> Result<()> {
    let mode = match mode {
        "y" => PsnrMode::Y,
        "rgb" => PsnrMode::Rgb,
        other => {
            return Err(SeeClearError::arg(format!(
                "mode must be y or rgb, got {other:?}"
            )))
        }
    };
    let a = load_named_frames(a_dir)?;
    let b = load_named_frames(b_dir)?;
    match_names(&a, &b, "a-dir", "b-dir")?;
    let a_only: Vec<Tensor<f64>> = a.iter().map(|(_, f)| f.clone()).collect();
    let b_only: Vec<Tensor<f64>> = a
        .iter()
        .map(|(name, _)| b.iter().find(|(n, _)| n == name).unwrap().1.clone())
        .collect();
    let report = report_clip(&a_only, &b_only, mode, 1e-3)?;
    fs::write(out_csv, report_csv(&report))?;
    Ok(())
}

/// Deterministic moving-shapes HR clip: a drifting bright square and disk
/// over a smooth gradient, rich in low frequencies with a few sharp edges.
pub fn synth_clip(m: usize, h: usize, w: usize) -> Vec<Tensor<f64>> {
    (0..m)
        .map(|f| {
            let ff = f as f64;
            Tensor::from_fn(&[3, h, w], |idx| {
                let (c, y, x) = (idx[0], idx[1] as f64, idx[2] as f64);
                let (hf, wf) = (h as f64, w as f64);
                let mut v = 0.25 + 0.35 * y / hf + 0.15 * (std::f64::consts::TAU * x / wf).sin();
                // Drifting square.
                let (sy, sx) = (hf * 0.25 + 6.0 * ff, wf * 0.2 + 9.0 * ff);
                let side = hf * 0.15;
                if (y - sy).abs() < side && (x - sx).abs() < side {
                    v += if c == 0 { 0.35 } else { 0.15 };
                }
                // Drifting disk.
                let (dy, dx) = (hf * 0.65 - 4.0 * ff, wf * 0.7 - 7.0 * ff);
                let r2 = (y - dy).powi(2) + (x - dx).powi(2);
                let rad = (hf * 0.12).powi(2);
                if r2 < rad {
                    v += if c == 2 { 0.3 } else { 0.1 } * (1.0 - r2 / rad);
                }
                v.clamp(0.0, 1.0)
            })
        })
        .collect()
}

/// Synthesize a clip, super-resolve it, and write LR/HR/SR frames plus
/// metrics under `out_dir`.
pub fn cmd_demo(cfg: &RunConfig, out_dir: &Path, threads: usize) -> Result<()> {
    let m = cfg.condenser.clip_len;
    let s = cfg.condenser.upscale;
    let (hr_h, hr_w) = (256usize, 256usize);
    let hr = synth_clip(m, hr_h, hr_w);
    let lr: Vec<Tensor<f64>> = hr
        .iter()
        .map(|f| bicubic_down(f, s))
        .collect::<Result<_>>()?;
    let (lr_dir, hr_dir, sr_dir) = (
        out_dir.join("lr"),
        out_dir.join("hr"),
        out_dir.join("sr"),
    );
    for d in [&lr_dir, &hr_dir, &sr_dir] {
        ensure_dir(d)?;
    }
    let named_lr: Vec<(String, Tensor<f64>)> = lr
        .iter()
        .enumerate()
        .map(|(i, f)| (format!("frame{i:03}.png"), f.clone()))
        .collect();
    for ((name, f), hr_frame) in named_lr.iter().zip(&hr) {
        save_png(&lr_dir.join(name), f)?;
        save_png(&hr_dir.join(name), hr_frame)?;
    }
    let (lh, lw) = (hr_h / s, hr_w / s);
    let mut wrng = KeyedRng::new(cfg.seed).stream(&[2001]);
    let weights = CondenserWeights::seeded(&cfg.condenser, lh, lw, &mut wrng)?;
    let bank0 = MemoryBank::zeros(
        cfg.condenser.bank_groups,
        cfg.condenser.bank_channels,
        cfg.condenser.base_channels,
    )?;
    let vocab = Vocabulary::default_classes();
    let (sr, _) = generate_all(cfg, &named_lr, None, &bank0, &weights, &vocab, threads)?;
    for (name, frame) in &sr {
        save_png(&sr_dir.join(name), frame)?;
        let stem = name.strip_suffix(".png").unwrap_or(name);
        write_tensor(&sr_dir.join(format!("{stem}.seet")), frame)?;
    }
    let sr_only: Vec<Tensor<f64>> = sr.iter().map(|(_, f)| f.clone()).collect();
    let report = report_clip(&sr_only, &hr, PsnrMode::Y, 1e-3)?;
    fs::write(out_dir.join("metrics.csv"), report_csv(&report))?;
    // Frequency sanity line: SR should track LR's low band.
    let sr_psd = psd_radial(&luma(&sr_only[0])?)?;
    let hr_psd = psd_radial(&luma(&hr[0])?)?;
    let low = psd_distance(&sr_psd, &hr_psd, PsdBand::Low)?;
    println!(
        "demo: {} frames {}x{} -> {}x{}, psnr {:.2} dB, ssim {:.4}, low-band psd gap {:.4}",
        m, lh, lw, hr_h, hr_w, report.psnr, report.ssim, low
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_parser() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.steps, 15);
        assert_eq!(cfg.condenser.clip_len, 5);
    }

    #[test]
    fn known_keys_parse() {
        let cfg = RunConfig::parse(
            "steps = 7\nkappa = 1.5 # comment\n\nsigma2_b=0.0\ngate = mean\nquery_axis = tokens\nseed = 42\n",
        )
        .unwrap();
        assert_eq!(cfg.steps, 7);
        assert_eq!(cfg.kappa, 1.5);
        assert_eq!(cfg.sigma2_b, 0.0);
        assert_eq!(cfg.condenser.gate, GateMode::Mean);
        assert_eq!(cfg.condenser.query_axis, QueryAxis::ClipTokens);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::parse("stepz = 7").is_err());
        assert!(RunConfig::parse("steps = banana").is_err());
        assert!(RunConfig::parse("just a line").is_err());
    }

    #[test]
    fn synth_clip_shape_and_determinism() {
        let a = synth_clip(2, 32, 32);
        let b = synth_clip(2, 32, 32);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].shape(), &[3, 32, 32]);
        assert_eq!(a[0], b[0]);
        assert_ne!(a[0], a[1]);
        for f in &a {
            assert!(f.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code(&SeeClearError::arg("x")), 1);
        assert_eq!(exit_code(&SeeClearError::data("x")), 2);
        assert_eq!(exit_code(&SeeClearError::dim("x")), 3);
        assert_eq!(
            exit_code(&SeeClearError::ScheduleViolation("x".into())),
            3
        );
    }
}
