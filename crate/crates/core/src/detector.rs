//! Likelihood-ratio watermark detector under a 2D-GARCH host model, its
//! Gaussian performance model, ROC tools and a generalized-Gaussian
//! baseline.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::embedder::{gamma_for_wdr, watermark_field, Transform, WatermarkKey};
use crate::error::{param_err, shape_err, Error, Result};
use crate::filters::FilterSet;
use crate::garch2d::{cond_variance_field, fit_mle, Garch2DOrder, Garch2DParams, GarchFit};
use crate::grid::{Grid2D, ImageU8};
use crate::special::{ln_gamma, norm_cdf, q_func, q_inv};

/// `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn gaussian_tail(x: f64) -> f64 {
    q_func(x)
}

/// Inverse of [`gaussian_tail`] on `(0, 1)`.
pub fn gaussian_tail_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(param_err!("probability {p} outside (0, 1)"));
    }
    Ok(q_inv(p))
}

fn site_term(g: f64, r: f64, h0: f64, h1: f64) -> f64 {
    0.5 * libm::log(h0 / h1) + g * g / (2.0 * h0) - r * r / (2.0 * h1)
}

/// `log Lambda` with `h0` the conditional variances of `g` and `h1` those of
/// `g - w`, both with `alpha0` included.
pub fn llrt_statistic(g: &Grid2D, w: &Grid2D, params: &Garch2DParams) -> Result<f64> {
    if !g.same_shape(w) {
        return Err(shape_err!("{}x{} field with {}x{} watermark", g.rows(), g.cols(), w.rows(), w.cols()));
    }
    let h0 = cond_variance_field(g, params)?;
    statistic_given_h0(g, &h0, w, params)
}

fn statistic_given_h0(g: &Grid2D, h0: &Grid2D, w: &Grid2D, params: &Garch2DParams) -> Result<f64> {
    let r = g.zip_map(w, |a, b| a - b)?;
    let h1 = cond_variance_field(&r, params)?;
    let mut s = 0.0;
    for i in 0..g.len() {
        s += site_term(g.data()[i], r.data()[i], h0.data()[i], h1.data()[i]);
    }
    Ok(s)
}

/// How the second moment of `log Lambda` is taken over the watermark.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentRule {
    /// Sites contribute independently: `sigma^2 = sum_ij (a+_ij - a-_ij)^2 / 4`.
    PerSite,
    /// Only the two global patterns `+gamma` and `-gamma` are averaged:
    /// `sigma^2 = (A+ - A-)^2 / 4`.
    GlobalPattern,
    /// Expectation over independent signs at every site: second-order
    /// expansion of the statistic in `w` for the mean, first-order for the
    /// variance, both carried through the variance recursion.
    #[default]
    Independent,
}

/// Mean and variance of `log Lambda` under both hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mu0: f64,
    pub sigma0_sq: f64,
    pub mu1: f64,
    pub sigma1_sq: f64,
}

/// [`theoretical_moments_with`] using the default [`MomentRule::Independent`].
pub fn theoretical_moments(f: &Grid2D, gamma: f64, params: &Garch2DParams) -> Result<Moments> {
    theoretical_moments_with(f, gamma, params, MomentRule::Independent)
}

/// Moments of the statistic for a bipolar watermark of amplitude `gamma`.
///
/// For the two pattern rules the site terms `a_ij(c) = log X + Y` are
/// evaluated for the constant patterns `c = +gamma` and `c = -gamma`; under
/// the marked hypothesis the terms change sign (`X^-1`, `-Y`).
pub fn theoretical_moments_with(f: &Grid2D, gamma: f64, params: &Garch2DParams, rule: MomentRule) -> Result<Moments> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(param_err!("gamma must be non-negative, got {gamma}"));
    }
    let h0 = cond_variance_field(f, params)?;
    moments_given_h0(f, &h0, gamma, params, rule)
}

fn moments_given_h0(f: &Grid2D, h0: &Grid2D, gamma: f64, params: &Garch2DParams, rule: MomentRule) -> Result<Moments> {
    if rule == MomentRule::Independent {
        let (mu0, sigma0_sq) = independent_moments(f, h0, gamma, params);
        return Ok(Moments { mu0, sigma0_sq, mu1: -mu0, sigma1_sq: sigma0_sq });
    }
    let plus = f.map(|v| v - gamma);
    let minus = f.map(|v| v + gamma);
    let hp = cond_variance_field(&plus, params)?;
    let hm = cond_variance_field(&minus, params)?;
    let (mut a_p, mut a_m) = (0.0, 0.0);
    let (mut b_p, mut b_m) = (0.0, 0.0);
    let mut per_site = 0.0;
    let mut per_site1 = 0.0;
    for i in 0..f.len() {
        let g = f.data()[i];
        let tp = site_term(g, plus.data()[i], h0.data()[i], hp.data()[i]);
        let tm = site_term(g, minus.data()[i], h0.data()[i], hm.data()[i]);
        a_p += tp;
        a_m += tm;
        per_site += 0.25 * (tp - tm) * (tp - tm);
        // marked hypothesis: log X^-1 - Y
        let (up, um) = (-tp, -tm);
        b_p += up;
        b_m += um;
        per_site1 += 0.25 * (up - um) * (up - um);
    }
    let mu0 = 0.5 * (a_p + a_m);
    let mu1 = 0.5 * (b_p + b_m);
    let (sigma0_sq, sigma1_sq) = match rule {
        MomentRule::PerSite => (per_site, per_site1),
        MomentRule::GlobalPattern | MomentRule::Independent => {
            let e0 = 0.5 * (a_p * a_p + a_m * a_m);
            let e1 = 0.5 * (b_p * b_p + b_m * b_m);
            ((e0 - mu0 * mu0).max(0.0), (e1 - mu1 * mu1).max(0.0))
        }
    };
    Ok(Moments { mu0, sigma0_sq, mu1, sigma1_sq })
}

/// Unmarked-hypothesis mean and variance for i.i.d. `+-gamma` marks.
///
/// With `h1 = h + d`, `d = D + L(w)` splits into the deterministic part `D`
/// (from `w^2 = gamma^2`) and a part linear in `w`. Per site
/// `E[s] = -gamma^2/(2h) + D/(2h) (f^2/h - 1) + E[L^2]/(4h^2) (1 - 2 f^2/h)`.
/// `E[L^2]` is propagated without cross-lag covariances. The variance is
/// `gamma^2 sum_s c_s^2` with `c_s` the derivative of the statistic in `w_s`
/// at `w = 0`, obtained by an adjoint sweep.
fn independent_moments(f: &Grid2D, h: &Grid2D, gamma: f64, params: &Garch2DParams) -> (f64, f64) {
    let (rows, cols) = (f.rows(), f.cols());
    let o1 = params.order.omega1();
    let o2 = params.order.omega2();
    let g2 = gamma * gamma;
    let fd = f.data();
    let hd = h.data();
    let n = rows * cols;
    let mut dd = alloc::vec![0.0; n];
    let mut vv = alloc::vec![0.0; n];
    let mut mean = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let (mut d, mut v) = (0.0, 0.0);
            for (&(k, l), &a) in o1.iter().zip(&params.alpha) {
                d += a * g2;
                if i >= k && j >= l {
                    let x = fd[(i - k) * cols + j - l];
                    v += 4.0 * a * a * x * x * g2;
                }
            }
            for (&(k, l), &b) in o2.iter().zip(&params.beta) {
                if i >= k && j >= l {
                    let s = (i - k) * cols + j - l;
                    d += b * dd[s];
                    v += b * b * vv[s];
                } else {
                    d += b * g2;
                }
            }
            let s = i * cols + j;
            dd[s] = d;
            vv[s] = v;
            let (x2, hh) = (fd[s] * fd[s], hd[s]);
            mean += -g2 / (2.0 * hh) + d / (2.0 * hh) * (x2 / hh - 1.0) + v / (4.0 * hh * hh) * (1.0 - 2.0 * x2 / hh);
        }
    }
    // adjoint of the statistic with respect to h1, then to w
    let mut nu = dd;
    for i in (0..rows).rev() {
        for j in (0..cols).rev() {
            let s = i * cols + j;
            let mut v = (fd[s] * fd[s] / hd[s] - 1.0) / (2.0 * hd[s]);
            for (&(k, l), &b) in o2.iter().zip(&params.beta) {
                if i + k < rows && j + l < cols {
                    v += b * nu[(i + k) * cols + j + l];
                }
            }
            nu[s] = v;
        }
    }
    let mut var = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let s = i * cols + j;
            let mut c = fd[s] / hd[s];
            for (&(k, l), &a) in o1.iter().zip(&params.alpha) {
                if i + k < rows && j + l < cols {
                    c -= 2.0 * a * fd[s] * nu[(i + k) * cols + j + l];
                }
            }
            var += c * c;
        }
    }
    (mean, g2 * var)
}

/// Neyman-Pearson threshold `sqrt(sigma0_sq) Q^-1(pf) + mu0`.
pub fn np_threshold(mu0: f64, sigma0_sq: f64, pf_target: f64) -> Result<f64> {
    if !(sigma0_sq >= 0.0) {
        return Err(param_err!("negative variance {sigma0_sq}"));
    }
    let q = gaussian_tail_inv(pf_target)?;
    if sigma0_sq == 0.0 {
        return Ok(mu0);
    }
    Ok(libm::sqrt(sigma0_sq) * q + mu0)
}

/// ROC curve with strictly increasing false-alarm probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auroc: f64,
}

impl RocCurve {
    /// Two columns `pf,pd` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pf,pd\n");
        for &(pf, pd) in &self.points {
            let _ = writeln!(s, "{pf},{pd}");
        }
        s
    }

    /// Step-curve detection probability at `pf` (right-continuous).
    pub fn pd_at(&self, pf: f64) -> f64 {
        let mut pd = 0.0;
        for &(x, y) in &self.points {
            if x <= pf {
                pd = y;
            } else {
                break;
            }
        }
        pd
    }
}

/// 50 log-spaced points in `[1e-4, 0.5]`.
pub fn default_pf_grid() -> Vec<f64> {
    let (lo, hi) = (libm::log10(1e-4), libm::log10(0.5));
    (0..50).map(|i| libm::pow(10.0, lo + (hi - lo) * i as f64 / 49.0)).collect()
}

/// `P_D = Q((sigma0 Q^-1(P_F) + mu0 - mu1) / sigma1)`.
pub fn theoretical_pd(m: &Moments, pf: f64) -> f64 {
    let s0 = libm::sqrt(m.sigma0_sq);
    let s1 = libm::sqrt(m.sigma1_sq);
    let x = s0 * q_inv(pf) + m.mu0 - m.mu1;
    if s1 > 0.0 {
        q_func(x / s1)
    } else if x < 0.0 {
        1.0
    } else if x > 0.0 {
        0.0
    } else {
        pf
    }
}

/// Closed-form ROC on `pf_grid`; the area uses the trapezoid rule with
/// `(0, 0)` and `(1, 1)` appended.
pub fn theoretical_roc(m: &Moments, pf_grid: &[f64]) -> Result<RocCurve> {
    if pf_grid.is_empty() {
        return Err(param_err!("empty false-alarm grid"));
    }
    if pf_grid.windows(2).any(|w| !(w[1] > w[0])) || !(pf_grid[0] > 0.0) || !(pf_grid[pf_grid.len() - 1] < 1.0) {
        return Err(param_err!("false-alarm grid must increase strictly inside (0, 1)"));
    }
    let points: Vec<(f64, f64)> = pf_grid.iter().map(|&pf| (pf, theoretical_pd(m, pf))).collect();
    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    for &p in points.iter().chain(core::iter::once(&(1.0, 1.0))) {
        area += (p.0 - prev.0) * (p.1 + prev.1) * 0.5;
        prev = p;
    }
    Ok(RocCurve { points, auroc: area })
}

/// Mann-Whitney AUROC, ties counted one half.
pub fn auroc(scores_h0: &[f64], scores_h1: &[f64]) -> Result<f64> {
    Ok(empirical_roc(scores_h0, scores_h1)?.auroc)
}

/// Empirical ROC from detector scores (larger means "marked").
pub fn empirical_roc(scores_h0: &[f64], scores_h1: &[f64]) -> Result<RocCurve> {
    if scores_h0.is_empty() || scores_h1.is_empty() {
        return Err(param_err!("both score sets must be nonempty"));
    }
    if scores_h0.iter().chain(scores_h1).any(|v| v.is_nan()) {
        return Err(param_err!("NaN score"));
    }
    let mut pooled: Vec<(f64, bool)> = scores_h0
        .iter()
        .map(|&s| (s, false))
        .chain(scores_h1.iter().map(|&s| (s, true)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (n0, n1) = (scores_h0.len() as f64, scores_h1.len() as f64);
    let mut points = alloc::vec![(0.0, 0.0)];
    let (mut c0, mut c1) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let t = pooled[i].0;
        let (p0, p1) = (c0, c1);
        while i < pooled.len() && pooled[i].0 == t {
            if pooled[i].1 {
                c1 += 1;
            } else {
                c0 += 1;
            }
            i += 1;
        }
        let (x0, y0) = (p0 as f64 / n0, p1 as f64 / n1);
        let (x1, y1) = (c0 as f64 / n0, c1 as f64 / n1);
        area += (x1 - x0) * (y0 + y1) * 0.5;
        let last = points.last_mut().expect("nonempty");
        if x1 == last.0 {
            last.1 = y1;
        } else {
            points.push((x1, y1));
        }
    }
    Ok(RocCurve { points, auroc: area })
}

/// Largest vertical distance between an empirical step ROC and the
/// closed-form curve over `pf` in `[lo, hi]`.
pub fn roc_sup_gap(empirical: &RocCurve, m: &Moments, lo: f64, hi: f64) -> f64 {
    let mut gap: f64 = 0.0;
    let mut check = |pf: f64, pd: f64| {
        if pf >= lo && pf <= hi {
            gap = gap.max((pd - theoretical_pd(m, pf)).abs());
        }
    };
    check(lo, empirical.pd_at(lo));
    check(hi, empirical.pd_at(hi));
    let pts = &empirical.points;
    for (k, &(pf, pd)) in pts.iter().enumerate() {
        check(pf, pd);
        // just left of the next step
        if let Some(&(next, _)) = pts.get(k + 1) {
            check(next * (1.0 - 1e-12), pd);
        }
    }
    gap
}

/// Kolmogorov-Smirnov check against a normal fitted by sample mean and
/// standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    #[serde(rename = "H")]
    pub h: bool,
    #[serde(rename = "KSD")]
    pub ksd: f64,
}

pub fn ks_test_gaussian(samples: &[f64], significance: f64) -> Result<KsResult> {
    let n = samples.len();
    if n < 36 {
        return Err(Error::InsufficientData(alloc::format!("{n} samples, need at least 36")));
    }
    if !(significance > 0.0 && significance < 1.0) {
        return Err(param_err!("significance {significance} outside (0, 1)"));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if !(var > 0.0) {
        return Err(Error::InsufficientData("zero variance".into()));
    }
    let sd = libm::sqrt(var);
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let mut ksd: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let c = norm_cdf((v - mean) / sd);
        ksd = ksd.max((i + 1) as f64 / nf - c).max(c - i as f64 / nf);
    }
    let crit = libm::sqrt(-0.5 * libm::log(significance / 2.0)) / libm::sqrt(nf);
    Ok(KsResult { h: ksd > crit, ksd })
}

/// `m4 / m2^2` with population moments (3 for a normal).
pub fn kurtosis(samples: &[f64]) -> Result<f64> {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return Err(Error::InsufficientData("kurtosis needs two samples".into()));
    }
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &v in samples {
        let d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if !(m2 > 0.0) {
        return Err(Error::InsufficientData("zero variance".into()));
    }
    Ok(m4 / (m2 * m2))
}

/// Generalized Gaussian `p(x) ~ exp(-(|x|/scale)^shape)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgParams {
    pub shape: f64,
    pub scale: f64,
}

const GG_SHAPE_RANGE: (f64, f64) = (0.05, 20.0);

fn gg_ratio_ln(c: f64) -> f64 {
    2.0 * ln_gamma(2.0 / c) - ln_gamma(1.0 / c) - ln_gamma(3.0 / c)
}

/// Moment-matching fit: the shape solves
/// `(E|x|)^2 / E[x^2] = G(2/c)^2 / (G(1/c) G(3/c))`, the scale follows from
/// the second moment.
pub fn gg_fit(samples: &[f64]) -> Result<GgParams> {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let m1 = samples.iter().map(|v| v.abs()).sum::<f64>() / n;
    let m2 = samples.iter().map(|v| v * v).sum::<f64>() / n;
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::InsufficientData("degenerate generalized-Gaussian fit".into()));
    }
    let target = libm::log(m1 * m1 / m2);
    let (mut lo, mut hi) = (libm::log(GG_SHAPE_RANGE.0), libm::log(GG_SHAPE_RANGE.1));
    let shape = if target <= gg_ratio_ln(GG_SHAPE_RANGE.0) {
        GG_SHAPE_RANGE.0
    } else if target >= gg_ratio_ln(GG_SHAPE_RANGE.1) {
        GG_SHAPE_RANGE.1
    } else {
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if gg_ratio_ln(libm::exp(mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        libm::exp(0.5 * (lo + hi))
    };
    let scale = libm::sqrt(m2 * libm::exp(ln_gamma(1.0 / shape) - ln_gamma(3.0 / shape)));
    Ok(GgParams { shape, scale })
}

/// i.i.d. generalized-Gaussian log-likelihood ratio
/// `sum (|g|^c - |g - w|^c) / scale^c`.
pub fn gg_statistic(g: &Grid2D, w: &Grid2D, gg: &GgParams) -> Result<f64> {
    if !g.same_shape(w) {
        return Err(shape_err!("{}x{} field with {}x{} watermark", g.rows(), g.cols(), w.rows(), w.cols()));
    }
    let c = gg.shape;
    let norm = libm::pow(gg.scale, c);
    let mut s = 0.0;
    for (&a, &b) in g.data().iter().zip(w.data()) {
        s += libm::pow(libm::fabs(a), c) - libm::pow(libm::fabs(a - b), c);
    }
    Ok(s / norm)
}

/// Fit a generalized Gaussian to `subband` and evaluate [`gg_statistic`].
pub fn gg_detect(subband: &Grid2D, w: &Grid2D) -> Result<f64> {
    gg_statistic(subband, w, &gg_fit(subband.data())?)
}

/// The subband a detector works on, with the watermark amplitude implied by
/// its power.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBand {
    pub band: Grid2D,
    pub scale_index: usize,
    pub subband_index: usize,
    pub gamma: f64,
}

impl ReceivedBand {
    /// Analyse `img` and take the selected subband, or the one given.
    pub fn extract(t: &Transform, img: &ImageU8, wdr_db: f64, band: Option<(usize, usize)>) -> Result<Self> {
        Self::extract_grid(t, &img.to_grid(), wdr_db, band)
    }

    /// [`ReceivedBand::extract`] for a real-valued image.
    pub fn extract_grid(t: &Transform, img: &Grid2D, wdr_db: f64, band: Option<(usize, usize)>) -> Result<Self> {
        let d = t.analyze(img)?;
        let (s, k) = match band {
            Some(sk) => sk,
            None => d.select()?,
        };
        let b = d.band(s, k).ok_or_else(|| param_err!("no subband ({s}, {k})"))?.clone();
        Self::from_band(b, s, k, wdr_db)
    }

    pub fn from_band(band: Grid2D, scale_index: usize, subband_index: usize, wdr_db: f64) -> Result<Self> {
        let gamma = gamma_for_wdr(&band, wdr_db)?;
        Ok(ReceivedBand { band, scale_index, subband_index, gamma })
    }

    pub fn watermark(&self, key: WatermarkKey) -> Grid2D {
        watermark_field(key, self.band.rows(), self.band.cols(), self.gamma)
    }
}

/// Outcome of one detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: bool,
    pub pf_target: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    pub params: Garch2DParams,
    pub gamma: f64,
    pub scale_index: usize,
    pub subband_index: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// 2D-GARCH detector with the model fitted once on the received subband.
#[derive(Debug, Clone)]
pub struct GarchDetector {
    rx: ReceivedBand,
    fit: GarchFit,
    h0: Grid2D,
    moments: Moments,
}

impl GarchDetector {
    pub fn new(rx: ReceivedBand, rule: MomentRule) -> Result<Self> {
        let fit = fit_mle(&rx.band, Garch2DOrder::unit())?;
        Self::with_params(rx, fit, rule)
    }

    pub fn with_params(rx: ReceivedBand, fit: GarchFit, rule: MomentRule) -> Result<Self> {
        let h0 = cond_variance_field(&rx.band, &fit.params)?;
        let moments = moments_given_h0(&rx.band, &h0, rx.gamma, &fit.params, rule)?;
        Ok(GarchDetector { rx, fit, h0, moments })
    }

    pub fn received(&self) -> &ReceivedBand {
        &self.rx
    }

    pub fn fit(&self) -> &GarchFit {
        &self.fit
    }

    pub fn moments(&self) -> &Moments {
        &self.moments
    }

    pub fn statistic(&self, key: WatermarkKey) -> Result<f64> {
        statistic_given_h0(&self.rx.band, &self.h0, &self.rx.watermark(key), &self.fit.params)
    }

    pub fn threshold(&self, pf_target: f64) -> Result<f64> {
        np_threshold(self.moments.mu0, self.moments.sigma0_sq, pf_target)
    }

    pub fn report(&self, key: WatermarkKey, pf_target: f64) -> Result<DetectionReport> {
        let statistic = self.statistic(key)?;
        let threshold = self.threshold(pf_target)?;
        let m = self.moments;
        Ok(DetectionReport {
            statistic,
            threshold,
            decision: statistic > threshold,
            pf_target,
            mu0: m.mu0,
            mu1: m.mu1,
            sigma0_sq: m.sigma0_sq,
            sigma1_sq: m.sigma1_sq,
            params: self.fit.params.clone(),
            gamma: self.rx.gamma,
            scale_index: self.rx.scale_index,
            subband_index: self.rx.subband_index,
            converged: self.fit.converged,
            warning: if self.fit.converged {
                None
            } else {
                Some(alloc::format!("model fit stopped after {} iterations without converging", self.fit.iterations))
            },
        })
    }
}

/// Generalized-Gaussian baseline on the received subband.
#[derive(Debug, Clone)]
pub struct GgDetector {
    rx: ReceivedBand,
    gg: GgParams,
}

impl GgDetector {
    pub fn new(rx: ReceivedBand) -> Result<Self> {
        let gg = gg_fit(rx.band.data())?;
        Ok(GgDetector { rx, gg })
    }

    pub fn params(&self) -> &GgParams {
        &self.gg
    }

    pub fn statistic(&self, key: WatermarkKey) -> Result<f64> {
        gg_statistic(&self.rx.band, &self.rx.watermark(key), &self.gg)
    }
}

/// Blind detection in any transform domain.
pub fn detect_in(
    t: &Transform,
    img: &ImageU8,
    key: WatermarkKey,
    wdr_db: f64,
    pf_target: f64,
    band: Option<(usize, usize)>,
) -> Result<DetectionReport> {
    gaussian_tail_inv(pf_target)?;
    let rx = ReceivedBand::extract(t, img, wdr_db, band)?;
    GarchDetector::new(rx, MomentRule::default())?.report(key, pf_target)
}

/// Blind contourlet-domain detection.
pub fn detect(
    img: &ImageU8,
    key: WatermarkKey,
    wdr_db: f64,
    pf_target: f64,
    dir_levels: &[usize],
    filters: &FilterSet,
) -> Result<DetectionReport> {
    let t = Transform::contourlet(img.rows(), img.cols(), dir_levels, filters.clone())?;
    detect_in(&t, img, key, wdr_db, pf_target, None)
}
