use std::path::{Path, PathBuf};

use ctmark::experiment::*;
use ctmark_core::attacks::{AttackSpec, Channel};
use ctmark_core::detector::{GarchDetector, MomentRule, ReceivedBand};
use ctmark_core::embedder::Transform;
use ctmark_core::filters::FilterSet;
use ctmark_core::rng::SplitMix64;
use ctmark_core::{Grid2D, ImageU8};

fn textured(rows: usize, cols: usize, seed: u64) -> ImageU8 {
    let mut g = SplitMix64::new(seed);
    let x = Grid2D::from_fn(rows, cols, |i, j| {
        110.0 + 50.0 * ((i as f64) * 0.21).sin() * ((j as f64) * 0.07).cos() + 20.0 * g.next_gaussian()
    });
    ImageU8::from_grid(&x)
}

fn corpus(dir: &Path) -> Vec<PathBuf> {
    (0..2)
        .map(|i| {
            let p = dir.join(format!("img{i}.pgm"));
            ctmark::pgm::write(&p, &textured(128, 128, i)).unwrap();
            p
        })
        .collect()
}

fn small_config(dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(corpus(dir));
    c.n_keys = 4;
    c.wdr_db_list = vec![-20.0];
    c.attacks = vec![AttackSpec::None, AttackSpec::Awgn { noise_std: 2.0, seed: 3 }];
    c
}

fn without_timing(mut r: ExperimentReport) -> ExperimentReport {
    r.elapsed_seconds = 0.0;
    for c in &mut r.cells {
        c.elapsed_seconds = 0.0;
    }
    r
}

#[test]
fn config_defaults_and_validation() {
    let c: ExperimentConfig = serde_json::from_str(r#"{"corpus":["a.pgm"]}"#).unwrap();
    assert_eq!(c, ExperimentConfig::new(vec!["a.pgm".into()]));
    assert_eq!(c.n_keys, 200);
    assert_eq!(c.dir_levels, vec![2, 3]);
    assert_eq!(c.detectors, vec![DetectorKind::CtGarch, DetectorKind::CtGg, DetectorKind::WtGarch]);
    assert_eq!(c.channel, Channel::Rounded);
    assert_eq!(c.moment_rule, MomentRule::Independent);
    assert!(c.validate().is_ok());
    assert!(serde_json::from_str::<ExperimentConfig>(r#"{"corpus":[],"bogus":1}"#).is_err());
    let c: ExperimentConfig =
        serde_json::from_str(r#"{"corpus":["a"],"detectors":["wt-garch"],"channel":"real","moment_rule":"per-site"}"#)
            .unwrap();
    assert_eq!((c.detectors[0], c.channel, c.moment_rule), (DetectorKind::WtGarch, Channel::Real, MomentRule::PerSite));

    let base = ExperimentConfig::new(vec!["a".into()]);
    let bad: Vec<Box<dyn Fn(&mut ExperimentConfig)>> = vec![
        Box::new(|c| c.n_keys = 1),
        Box::new(|c| c.corpus.clear()),
        Box::new(|c| c.wdr_db_list = vec![f64::NAN]),
        Box::new(|c| c.detectors.clear()),
        Box::new(|c| c.attacks = vec![AttackSpec::Median { window: 4 }]),
        Box::new(|c| c.pf_grid = vec![0.5, 0.1]),
        Box::new(|c| c.pf_grid = vec![0.0, 0.1]),
        Box::new(|c| c.dir_levels.clear()),
    ];
    for f in bad {
        let mut c = base.clone();
        f(&mut c);
        assert!(c.validate().is_err(), "{c:?}");
    }
}

#[test]
fn small_run_writes_all_files_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let fs = FilterSet::default();
    let r = run_experiment(&cfg, &fs).unwrap();
    // image x detector x attack x wdr, in that nesting
    assert_eq!(r.cells.len(), 2 * 3 * 2);
    let order: Vec<(String, DetectorKind, String)> =
        r.cells.iter().map(|c| (c.image.clone(), c.detector, c.attack.clone())).collect();
    assert_eq!(order[0], ("img0".into(), DetectorKind::CtGarch, "none".into()));
    assert_eq!(order[1], ("img0".into(), DetectorKind::CtGarch, "awgn2".into()));
    assert_eq!(order[2], ("img0".into(), DetectorKind::CtGg, "none".into()));
    assert_eq!(order[6].0, "img1");
    for c in &r.cells {
        assert_eq!(c.status, CellStatus::Ok, "{:?}", c.error);
        assert_eq!((c.scores_h0.len(), c.scores_h1.len()), (4, 4));
        let auroc = c.auroc.unwrap();
        assert!((0.0..=1.0).contains(&auroc));
        assert_eq!(c.theory.is_some(), c.detector != DetectorKind::CtGg);
    }
    let again = run_experiment(&cfg, &fs).unwrap();
    assert_eq!(without_timing(r.clone()), without_timing(again));

    let out = dir.path().join("out");
    write_report(&r, &out).unwrap();
    let back: ExperimentReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(back.cells.len(), r.cells.len());
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_COLUMNS.join(","));
    assert_eq!(lines.count(), r.cells.len());
    for c in &r.cells {
        let roc = std::fs::read_to_string(out.join(format!("roc_{}.csv", c.cell))).unwrap();
        assert!(roc.lines().count() >= 2);
    }
    // a different master seed changes the keys
    let mut other = cfg.clone();
    other.master_seed = 1;
    assert_ne!(run_experiment(&other, &fs).unwrap().cells[0].scores_h1, r.cells[0].scores_h1);
}

#[test]
fn unmarked_scores_match_a_direct_detector() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.corpus.truncate(1);
    cfg.detectors = vec![DetectorKind::CtGarch];
    cfg.attacks = vec![AttackSpec::None];
    let r = run_experiment(&cfg, &FilterSet::default()).unwrap();
    let img = ctmark::pgm::read(&cfg.corpus[0]).unwrap();
    let t = Transform::contourlet(128, 128, &[2, 3], FilterSet::default()).unwrap();
    let det = GarchDetector::new(ReceivedBand::extract(&t, &img, -20.0, None).unwrap(), MomentRule::Independent).unwrap();
    for (key, s) in cfg.keys().into_iter().zip(&r.cells[0].scores_h0) {
        assert_eq!(det.statistic(key).unwrap(), *s);
    }
    let th = r.cells[0].theory.as_ref().unwrap();
    assert_eq!(th.moments.mu0, det.moments().mu0);
    assert_eq!(th.false_alarm.len(), FA_TARGETS.len());
}

#[test]
fn unreadable_images_fail_their_cells_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.corpus.truncate(1);
    cfg.corpus.push(dir.path().join("missing.pgm"));
    cfg.attacks = vec![AttackSpec::None];
    cfg.detectors = vec![DetectorKind::CtGg];
    let r = run_experiment(&cfg, &FilterSet::default()).unwrap();
    assert_eq!(r.cells.len(), 2);
    assert_eq!(r.cells[0].status, CellStatus::Ok);
    assert_eq!(r.cells[1].status, CellStatus::Failed);
    assert!(r.cells[1].error.as_deref().unwrap().contains("missing.pgm"));
    assert!(r.cells[1].auroc.is_none());
    let csv = summary_csv(&r);
    assert!(csv.lines().nth(2).unwrap().starts_with("missing,ct-gg,none,-20,,"), "{csv}");
}

#[test]
fn empty_report() {
    let dir = tempfile::tempdir().unwrap();
    write_report(&ExperimentReport::empty(), dir.path()).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 0);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn experiment_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    corpus(dir.path());
    std::fs::write(
        &cfg_path,
        r#"{"corpus":["img0.pgm"],"wdr_db_list":[-20],"detectors":["ct-gg"],"n_keys":3,"channel":"real"}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = |extra: &[&str]| {
        let mut args = vec!["--json", "experiment", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        std::process::Command::new(env!("CARGO_BIN_EXE_ctmark")).args(&args).output().unwrap()
    };
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["cells"].as_u64(), v["failed"].as_u64()), (Some(1), Some(0)));
    let r: ExperimentReport = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(r.cells[0].n_keys, 3);
    assert_eq!(run(&["--n-keys", "1"]).status.code(), Some(2));
}
