//! Monte-Carlo experiments over watermark keys and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use ctmark_core::attacks::{AttackSpec, Channel};
use ctmark_core::detector::{
    default_pf_grid, empirical_roc, kurtosis, ks_test_gaussian, np_threshold, roc_sup_gap, theoretical_roc,
    GarchDetector, GgDetector, KsResult, MomentRule, Moments, ReceivedBand, RocCurve,
};
use ctmark_core::embedder::{Domain, Host, Transform, WatermarkKey};
use ctmark_core::filters::FilterSet;
use ctmark_core::rng::derive_seeds;
use ctmark_core::{Grid2D, ImageU8};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pgm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    CtGarch,
    CtGg,
    WtGarch,
}

impl DetectorKind {
    pub fn domain(self) -> Domain {
        match self {
            DetectorKind::CtGarch | DetectorKind::CtGg => Domain::Contourlet,
            DetectorKind::WtGarch => Domain::Wavelet,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DetectorKind::CtGarch => "ct-garch",
            DetectorKind::CtGg => "ct-gg",
            DetectorKind::WtGarch => "wt-garch",
        }
    }

    fn is_garch(self) -> bool {
        self != DetectorKind::CtGg
    }
}

fn default_wdr_list() -> Vec<f64> {
    vec![-50.0]
}
fn default_detectors() -> Vec<DetectorKind> {
    vec![DetectorKind::CtGarch, DetectorKind::CtGg, DetectorKind::WtGarch]
}
fn default_attacks() -> Vec<AttackSpec> {
    vec![AttackSpec::None]
}
fn default_n_keys() -> usize {
    200
}
fn default_dir_levels() -> Vec<usize> {
    vec![2, 3]
}

/// Keeps the noise of unmarked trials apart from that of marked ones.
const H0_NOISE_SALT: u64 = 0x5bd1_e995_0000_0001;

/// Targets at which empirical false-alarm rates are reported.
pub const FA_TARGETS: [f64; 3] = [0.01, 0.05, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: Vec<PathBuf>,
    #[serde(default = "default_wdr_list")]
    pub wdr_db_list: Vec<f64>,
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorKind>,
    #[serde(default = "default_attacks")]
    pub attacks: Vec<AttackSpec>,
    #[serde(default = "default_n_keys")]
    pub n_keys: usize,
    #[serde(default = "default_pf_grid")]
    pub pf_grid: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_dir_levels")]
    pub dir_levels: Vec<usize>,
    /// `rounded` stores every intermediate image in 8 bits, `real` keeps
    /// real pixel values.
    #[serde(default)]
    pub channel: Channel,
    #[serde(default)]
    pub moment_rule: MomentRule,
}

impl ExperimentConfig {
    pub fn new(corpus: Vec<PathBuf>) -> Self {
        ExperimentConfig {
            corpus,
            wdr_db_list: default_wdr_list(),
            detectors: default_detectors(),
            attacks: default_attacks(),
            n_keys: default_n_keys(),
            pf_grid: default_pf_grid(),
            master_seed: 0,
            dir_levels: default_dir_levels(),
            channel: Channel::default(),
            moment_rule: MomentRule::default(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.corpus.is_empty() {
            bail!("corpus is empty");
        }
        if self.n_keys < 2 {
            bail!("n_keys must be at least 2, got {}", self.n_keys);
        }
        if self.wdr_db_list.is_empty() || self.wdr_db_list.iter().any(|w| !w.is_finite()) {
            bail!("wdr_db_list must hold finite values");
        }
        if self.detectors.is_empty() {
            bail!("no detectors configured");
        }
        if self.attacks.is_empty() {
            bail!("no attacks configured, use {{\"kind\": \"none\"}} for the unattacked cell");
        }
        for a in &self.attacks {
            a.validate().with_context(|| format!("attack {}", a.label()))?;
        }
        if self.dir_levels.is_empty() {
            bail!("dir_levels is empty");
        }
        let g = &self.pf_grid;
        if g.is_empty() || g.windows(2).any(|w| !(w[1] > w[0])) || !(g[0] > 0.0) || !(g[g.len() - 1] < 1.0) {
            bail!("pf_grid must increase strictly inside (0, 1)");
        }
        Ok(())
    }

    /// Watermark keys shared by all cells.
    pub fn keys(&self) -> Vec<WatermarkKey> {
        derive_seeds(self.master_seed, self.n_keys).into_iter().map(WatermarkKey).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub mean: f64,
    pub sd: f64,
    pub ks: Option<KsResult>,
    pub kurtosis: Option<f64>,
}

impl ScoreSummary {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = if x.len() > 1 {
            (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        ScoreSummary { mean, sd, ks: ks_test_gaussian(x, 0.05).ok(), kurtosis: kurtosis(x).ok() }
    }
}

/// Closed-form predictions next to the Monte-Carlo results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCheck {
    /// Averaged over keys: `mu0`, `sigma0_sq` from the unmarked fits,
    /// `mu1`, `sigma1_sq` from the marked ones.
    pub moments: Moments,
    pub auroc: f64,
    /// Largest distance between empirical and closed-form ROC for `pf` in
    /// `[1e-3, 0.5]`.
    pub sup_gap: f64,
    /// `(mean - mu) / standard error` of each score sample.
    pub z_h0: f64,
    pub z_h1: f64,
    /// `(pf_target, observed rate)` with per-trial thresholds.
    pub false_alarm: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: String,
    pub image: String,
    pub detector: DetectorKind,
    pub attack: String,
    pub attack_spec: AttackSpec,
    pub wdr_db: f64,
    pub n_keys: usize,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub auroc: Option<f64>,
    pub roc: Option<RocCurve>,
    pub h0: Option<ScoreSummary>,
    pub h1: Option<ScoreSummary>,
    pub theory: Option<TheoryCheck>,
    /// Fits that stopped without converging, over both hypotheses.
    pub unconverged_fits: usize,
    pub scores_h0: Vec<f64>,
    pub scores_h1: Vec<f64>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: Option<ExperimentConfig>,
    pub cells: Vec<CellReport>,
    pub elapsed_seconds: f64,
}

impl ExperimentReport {
    pub fn empty() -> Self {
        ExperimentReport { config: None, cells: Vec::new(), elapsed_seconds: 0.0 }
    }

    pub fn cell(&self, image: &str, detector: DetectorKind, attack: &str, wdr_db: f64) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.image == image && c.detector == detector && c.attack == attack && c.wdr_db == wdr_db)
    }
}

/// One detector output for one trial.
#[derive(Debug, Clone, Copy)]
struct Eval {
    score: f64,
    moments: Option<Moments>,
    converged: bool,
}

fn image_name(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

fn cell_id(image: &str, det: DetectorKind, attack: &str, wdr: f64) -> String {
    let raw = format!("{image}_{}_{attack}_{wdr}", det.label());
    raw.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn has_noise(a: &AttackSpec) -> bool {
    match a {
        AttackSpec::Awgn { noise_std, .. } => *noise_std > 0.0,
        AttackSpec::Compose { children } => children.iter().any(has_noise),
        _ => false,
    }
}

fn transform_for(domain: Domain, rows: usize, cols: usize, cfg: &ExperimentConfig, fs: &FilterSet) -> ctmark_core::Result<Transform> {
    match domain {
        Domain::Contourlet => Transform::contourlet(rows, cols, &cfg.dir_levels, fs.clone()),
        Domain::Wavelet => Transform::wavelet(rows, cols, fs.wavelet.clone()),
    }
}

enum Built {
    Garch(GarchDetector),
    Gg(GgDetector),
}

fn build(rx: &ReceivedBand, dets: &[DetectorKind], rule: MomentRule) -> ctmark_core::Result<Vec<Built>> {
    dets.iter()
        .map(|&d| {
            Ok(if d.is_garch() {
                Built::Garch(GarchDetector::new(rx.clone(), rule)?)
            } else {
                Built::Gg(GgDetector::new(rx.clone())?)
            })
        })
        .collect()
}

fn score(built: &[Built], key: WatermarkKey) -> ctmark_core::Result<Vec<Eval>> {
    built
        .iter()
        .map(|b| match b {
            Built::Garch(d) => {
                Ok(Eval { score: d.statistic(key)?, moments: Some(*d.moments()), converged: d.fit().converged })
            }
            Built::Gg(d) => Ok(Eval { score: d.statistic(key)?, moments: None, converged: true }),
        })
        .collect()
}

/// Scores of every detector in `dets` (all in the domain of `t`), unmarked
/// and marked, one per key.
fn run_group(
    x: &Grid2D,
    t: &Transform,
    attack: &AttackSpec,
    wdr: f64,
    keys: &[WatermarkKey],
    dets: &[DetectorKind],
    cfg: &ExperimentConfig,
) -> ctmark_core::Result<(Vec<Vec<Eval>>, Vec<Vec<Eval>>)> {
    let ch = cfg.channel;
    let host = Host::from_grid(t, x, wdr)?;
    let sel = Some(host.selected());
    let noisy = has_noise(attack);
    // without noise the unmarked received band, and so its fit, is the same for every key
    let shared_h0 = if noisy {
        None
    } else {
        let z = attack.apply_grid(x, ch)?;
        Some(build(&ReceivedBand::extract_grid(t, &z, wdr, sel)?, dets, cfg.moment_rule)?)
    };
    let trials: Vec<ctmark_core::Result<(Vec<Eval>, Vec<Eval>)>> = keys
        .par_iter()
        .map(|&key| {
            let h0 = match &shared_h0 {
                Some(b) => score(b, key)?,
                None => {
                    let z = attack.reseeded(key.0 ^ H0_NOISE_SALT).apply_grid(x, ch)?;
                    let rx0 = ReceivedBand::extract_grid(t, &z, wdr, sel)?;
                    score(&build(&rx0, dets, cfg.moment_rule)?, key)?
                }
            };
            let mut y = host.embed_real(t, key)?;
            if ch == Channel::Rounded {
                y = ImageU8::from_grid(&y).to_grid();
            }
            let z = attack.reseeded(key.0).apply_grid(&y, ch)?;
            let rx1 = ReceivedBand::extract_grid(t, &z, wdr, sel)?;
            let h1 = score(&build(&rx1, dets, cfg.moment_rule)?, key)?;
            Ok((h0, h1))
        })
        .collect();
    let mut h0 = vec![Vec::with_capacity(keys.len()); dets.len()];
    let mut h1 = vec![Vec::with_capacity(keys.len()); dets.len()];
    for t in trials {
        let (a, b) = t?;
        for (d, e) in a.into_iter().enumerate() {
            h0[d].push(e);
        }
        for (d, e) in b.into_iter().enumerate() {
            h1[d].push(e);
        }
    }
    Ok((h0, h1))
}

fn mean(x: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = x.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn theory_check(h0: &[Eval], h1: &[Eval], emp: &RocCurve, pf_grid: &[f64]) -> Option<TheoryCheck> {
    let m0: Vec<Moments> = h0.iter().map(|e| e.moments).collect::<Option<_>>()?;
    let m1: Vec<Moments> = h1.iter().map(|e| e.moments).collect::<Option<_>>()?;
    let moments = Moments {
        mu0: mean(m0.iter().map(|m| m.mu0)),
        sigma0_sq: mean(m0.iter().map(|m| m.sigma0_sq)),
        mu1: mean(m1.iter().map(|m| m.mu1)),
        sigma1_sq: mean(m1.iter().map(|m| m.sigma1_sq)),
    };
    let s0: Vec<f64> = h0.iter().map(|e| e.score).collect();
    let s1: Vec<f64> = h1.iter().map(|e| e.score).collect();
    let z = |s: &[f64], mu: f64| {
        let st = ScoreSummary::of(s);
        (st.mean - mu) / (st.sd / (s.len() as f64).sqrt())
    };
    let false_alarm = FA_TARGETS
        .iter()
        .map(|&pf| {
            let hits = h0
                .iter()
                .zip(&m0)
                .filter(|(e, m)| np_threshold(m.mu0, m.sigma0_sq, pf).map(|t| e.score > t).unwrap_or(false))
                .count();
            (pf, hits as f64 / h0.len() as f64)
        })
        .collect();
    Some(TheoryCheck {
        auroc: theoretical_roc(&moments, pf_grid).ok()?.auroc,
        sup_gap: roc_sup_gap(emp, &moments, 1e-3, 0.5),
        z_h0: z(&s0, moments.mu0),
        z_h1: z(&s1, moments.mu1),
        false_alarm,
        moments,
    })
}

fn finished_cell(base: CellReport, h0: &[Eval], h1: &[Eval], pf_grid: &[f64]) -> CellReport {
    let s0: Vec<f64> = h0.iter().map(|e| e.score).collect();
    let s1: Vec<f64> = h1.iter().map(|e| e.score).collect();
    let roc = match empirical_roc(&s0, &s1) {
        Ok(r) => r,
        Err(e) => return failed(base, e.to_string()),
    };
    CellReport {
        status: CellStatus::Ok,
        auroc: Some(roc.auroc),
        h0: Some(ScoreSummary::of(&s0)),
        h1: Some(ScoreSummary::of(&s1)),
        theory: theory_check(h0, h1, &roc, pf_grid),
        unconverged_fits: h0.iter().chain(h1).filter(|e| !e.converged).count(),
        roc: Some(roc),
        scores_h0: s0,
        scores_h1: s1,
        ..base
    }
}

fn failed(base: CellReport, reason: String) -> CellReport {
    CellReport { status: CellStatus::Failed, error: Some(reason), ..base }
}

/// Run every (image, detector, attack, WDR) cell. Cell failures are recorded
/// in the report; only an invalid configuration is an error.
pub fn run_experiment(cfg: &ExperimentConfig, fs: &FilterSet) -> anyhow::Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let keys = cfg.keys();
    let mut cells = Vec::new();
    for path in &cfg.corpus {
        let name = image_name(path);
        let image = pgm::read(path).map(|i| i.to_grid()).map_err(|e| e.to_string());
        // results[det][attack][wdr]
        let mut results: Vec<Vec<Vec<Option<CellReport>>>> =
            vec![vec![vec![None; cfg.wdr_db_list.len()]; cfg.attacks.len()]; cfg.detectors.len()];
        for (ai, attack) in cfg.attacks.iter().enumerate() {
            for (wi, &wdr) in cfg.wdr_db_list.iter().enumerate() {
                for domain in [Domain::Contourlet, Domain::Wavelet] {
                    let idx: Vec<usize> =
                        (0..cfg.detectors.len()).filter(|&d| cfg.detectors[d].domain() == domain).collect();
                    if idx.is_empty() {
                        continue;
                    }
                    let dets: Vec<DetectorKind> = idx.iter().map(|&d| cfg.detectors[d]).collect();
                    let t0 = Instant::now();
                    let outcome = image.clone().and_then(|x| {
                        let t = transform_for(domain, x.rows(), x.cols(), cfg, fs).map_err(|e| e.to_string())?;
                        run_group(&x, &t, attack, wdr, &keys, &dets, cfg).map_err(|e| e.to_string())
                    });
                    let elapsed = t0.elapsed().as_secs_f64() / dets.len() as f64;
                    for (j, &d) in idx.iter().enumerate() {
                        let det = cfg.detectors[d];
                        let base = CellReport {
                            cell: cell_id(&name, det, &attack.label(), wdr),
                            image: name.clone(),
                            detector: det,
                            attack: attack.label(),
                            attack_spec: attack.clone(),
                            wdr_db: wdr,
                            n_keys: cfg.n_keys,
                            status: CellStatus::Failed,
                            error: None,
                            auroc: None,
                            roc: None,
                            h0: None,
                            h1: None,
                            theory: None,
                            unconverged_fits: 0,
                            scores_h0: Vec::new(),
                            scores_h1: Vec::new(),
                            elapsed_seconds: elapsed,
                        };
                        let cell = match &outcome {
                            Ok((h0, h1)) => finished_cell(base, &h0[j], &h1[j], &cfg.pf_grid),
                            Err(e) => failed(base, e.clone()),
                        };
                        results[d][ai][wi] = Some(cell);
                    }
                }
            }
        }
        cells.extend(results.into_iter().flatten().flatten().flatten());
    }
    Ok(ExperimentReport { config: Some(cfg.clone()), cells, elapsed_seconds: start.elapsed().as_secs_f64() })
}

/// Column order of `summary.csv`.
pub const SUMMARY_COLUMNS: [&str; 10] =
    ["image", "detector", "attack", "wdr_db", "auroc", "ksd_h0", "ksd_h1", "kurt_h0", "kurt_h1", "n_keys"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut s = SUMMARY_COLUMNS.join(",");
    s.push('\n');
    for c in &report.cells {
        let ksd = |x: &Option<ScoreSummary>| opt(x.as_ref().and_then(|v| v.ks).map(|k| k.ksd));
        let kurt = |x: &Option<ScoreSummary>| opt(x.as_ref().and_then(|v| v.kurtosis));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            c.image,
            c.detector.label(),
            c.attack,
            c.wdr_db,
            opt(c.auroc),
            ksd(&c.h0),
            ksd(&c.h1),
            kurt(&c.h0),
            kurt(&c.h1),
            c.n_keys
        );
    }
    s
}

/// Writes `report.json`, `summary.csv` and one `roc_<cell>.csv` per
/// successful cell.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json + "\n").context("writing report.json")?;
    fs::write(dir.join("summary.csv"), summary_csv(report)).context("writing summary.csv")?;
    for c in &report.cells {
        if let Some(roc) = &c.roc {
            let p = dir.join(format!("roc_{}.csv", c.cell));
            fs::write(&p, roc.to_csv()).with_context(|| format!("writing {}", p.display()))?;
        }
    }
    Ok(())
}
