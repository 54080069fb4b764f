//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ctmark_core::attacks::{AttackSpec, Channel};
use ctmark_core::detector::{GarchDetector, MomentRule, ReceivedBand};
use ctmark_core::embedder::{EmbedRecord, Host, Transform, WatermarkKey};
use ctmark_core::garch2d::{fit_mle, Garch2DOrder};
use ctmark_core::grid::psnr;
use ctmark_core::filters::FilterSet;
use ctmark_core::ImageU8;
use serde_json::json;

use crate::experiment::{run_experiment, write_report, ExperimentConfig};
use crate::{filterdir, lmtable, pgm};

/// Exit status of `detect` when the mark is present.
pub const EXIT_DETECTED: i32 = 0;
/// Exit status of `detect` when it is not.
pub const EXIT_NOT_DETECTED: i32 = 1;
/// Usage and runtime errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ctmark", version, about = "Contourlet-domain watermark embedding and 2D-GARCH detection")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for stochastic attacks, or the master seed of an experiment.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory with filter coefficient files (overrides $CTMARK_FILTER_DIR).
    #[arg(long, global = true)]
    pub filter_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Contourlet,
    Wavelet,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long, value_enum, default_value_t = DomainArg::Contourlet)]
    pub domain: DomainArg,
    /// Directional levels per pyramid scale, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub dir_levels: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a watermark and write the marked PGM plus a JSON sidecar.
    Embed {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        key: u64,
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        wdr: f64,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Blind detection; prints the report as JSON and exits 0 when detected, 1 when not.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        key: u64,
        #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
        wdr: f64,
        /// Target false-alarm probability.
        #[arg(long, default_value_t = 0.01)]
        pf: f64,
        /// Subband as `scale,index` (default: re-selected from the input).
        #[arg(long, value_parser = parse_band)]
        band: Option<(usize, usize)>,
        #[arg(long, value_enum, default_value_t = MomentArg::Independent)]
        moments: MomentArg,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// LM heteroscedasticity tests on the finest-scale subbands.
    Lmtest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        lags: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Fit a 2D-GARCH(1,1,1,1) model to one subband.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Subband as `scale,index` (default: the embedding subband).
        #[arg(long, value_parser = parse_band)]
        band: Option<(usize, usize)>,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Apply an attack given as JSON, e.g. '{"kind":"jpeg","qf":60}'.
    Attack {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        spec: String,
    },
    /// Run a Monte-Carlo experiment from a JSON configuration.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override `n_keys` from the configuration.
        #[arg(long)]
        n_keys: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentArg {
    PerSite,
    GlobalPattern,
    Independent,
}

impl From<MomentArg> for MomentRule {
    fn from(m: MomentArg) -> Self {
        match m {
            MomentArg::PerSite => MomentRule::PerSite,
            MomentArg::GlobalPattern => MomentRule::GlobalPattern,
            MomentArg::Independent => MomentRule::Independent,
        }
    }
}

/// Path of the JSON sidecar written next to an embedded image.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn transform(a: &TransformArgs, img: &ImageU8, fs: &FilterSet) -> anyhow::Result<Transform> {
    let t = match a.domain {
        DomainArg::Contourlet => Transform::contourlet(img.rows(), img.cols(), &a.dir_levels, fs.clone()),
        DomainArg::Wavelet => Transform::wavelet(img.rows(), img.cols(), fs.wavelet.clone()),
    };
    Ok(t?)
}

fn parse_band(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected `scale,index`")?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

fn print(json_mode: bool, value: serde_json::Value, text: String) {
    if json_mode {
        println!("{}", serde_json::to_string_pretty(&value).expect("serialisable"));
    } else {
        print!("{text}");
    }
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    let fs = filterdir::load(cli.filter_dir.as_deref())?;
    match cli.command {
        Command::Embed { input, output, key, wdr, transform: ta } => {
            let img = pgm::read(&input)?;
            let t = transform(&ta, &img, &fs)?;
            let host = Host::new(&t, &img, wdr)?;
            let (marked, record) = host.embed(&t, WatermarkKey(key))?;
            pgm::write(&output, &marked)?;
            let side = sidecar_path(&output);
            std::fs::write(&side, serde_json::to_string_pretty(&record)? + "\n")
                .with_context(|| format!("writing {}", side.display()))?;
            let p = psnr(&img, &marked)?;
            print(
                cli.json,
                json!({ "psnr_db": p, "record": record, "output": output, "sidecar": side }),
                format!(
                    "PSNR {p:.2} dB, gamma {:.6}, subband ({}, {})\n",
                    record.gamma, record.scale_index, record.subband_index
                ),
            );
            Ok(0)
        }
        Command::Detect { input, key, wdr, pf, band, moments, transform: ta } => {
            let img = pgm::read(&input)?;
            let t = transform(&ta, &img, &fs)?;
            let rx = ReceivedBand::extract(&t, &img, wdr, band)?;
            let rep = GarchDetector::new(rx, moments.into())?.report(WatermarkKey(key), pf)?;
            if let Some(w) = &rep.warning {
                eprintln!("warning: {w}");
            }
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(if rep.decision { EXIT_DETECTED } else { EXIT_NOT_DETECTED })
        }
        Command::Lmtest { input, lags, alpha, transform: ta } => {
            let img = pgm::read(&input)?;
            let t = transform(&ta, &img, &fs)?;
            let rows = lmtable::lm_table(&t, &img.to_grid(), lags, alpha)?;
            print(cli.json, serde_json::to_value(&rows)?, lmtable::render(&rows));
            Ok(0)
        }
        Command::Fit { input, band, transform: ta } => {
            let img = pgm::read(&input)?;
            let t = transform(&ta, &img, &fs)?;
            let d = t.analyze(&img.to_grid())?;
            let (s, k) = match band {
                Some(b) => b,
                None => d.select()?,
            };
            let sub = d.band(s, k).ok_or_else(|| anyhow!("no subband ({s}, {k})"))?;
            let fit = fit_mle(sub, Garch2DOrder::unit())?;
            let v = fit.params.to_vec();
            print(
                cli.json,
                json!({ "scale_index": s, "subband_index": k, "fit": fit }),
                format!(
                    "subband ({s}, {k}) {}x{}: alpha0 {:.6e}, alpha {:?}, beta {:?}, loglik {:.3}, converged {}\n",
                    sub.rows(),
                    sub.cols(),
                    v[0],
                    fit.params.alpha,
                    fit.params.beta,
                    fit.loglik,
                    fit.converged
                ),
            );
            Ok(0)
        }
        Command::Attack { input, output, spec } => {
            let img = pgm::read(&input)?;
            let mut spec: AttackSpec = serde_json::from_str(&spec).context("parsing attack spec")?;
            if let Some(seed) = cli.seed {
                spec = spec.reseeded(seed);
            }
            spec.validate()?;
            let out = ImageU8::from_grid(&spec.apply_grid(&img.to_grid(), Channel::Rounded)?);
            pgm::write(&output, &out)?;
            let p = psnr(&img, &out)?;
            print(
                cli.json,
                json!({ "attack": spec.label(), "psnr_db": p, "output": output }),
                format!("{}: PSNR {p:.2} dB\n", spec.label()),
            );
            Ok(0)
        }
        Command::Experiment { config, out, n_keys } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing experiment config")?;
            // relative corpus paths are taken from the config's directory
            let base = config.parent().unwrap_or(Path::new("."));
            for p in &mut cfg.corpus {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            if let Some(n) = n_keys {
                cfg.n_keys = n;
            }
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            let report = run_experiment(&cfg, &fs)?;
            write_report(&report, &out)?;
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            print(
                cli.json,
                json!({ "cells": report.cells.len(), "failed": failed, "out": out }),
                format!("{} cells ({} failed) written to {}\n", report.cells.len(), failed, out.display()),
            );
            Ok(0)
        }
    }
}

/// Parse `args` and run; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_ERROR;
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

/// Reads an embedding sidecar.
pub fn read_sidecar(path: &Path) -> anyhow::Result<EmbedRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("parsing {}: {e}", path.display()))
}
