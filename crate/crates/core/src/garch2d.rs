//! Two-dimensional GARCH model of a coefficient field.
//!
//! `h[i][j] = alpha0 + sum_{(k,l) in O1} alpha_kl f[i-k][j-l]^2
//!                   + sum_{(k,l) in O2} beta_kl  h[i-k][j-l]`
//!
//! with `O1 = {0..=q1} x {0..=q2} \ {(0,0)}` and `O2` likewise from
//! `(p1, p2)`. Fields are traversed in raster order; lagged terms that fall
//! outside the field are replaced by a boundary variance.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::grid::Grid2D;
use crate::rng::SplitMix64;
use crate::special::{chi2_isf, chi2_sf};

/// Model order `(p1, p2, q1, q2)`: `p` for the variance lags, `q` for the
/// squared-coefficient lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Garch2DOrder {
    pub p1: usize,
    pub p2: usize,
    pub q1: usize,
    pub q2: usize,
}

impl Garch2DOrder {
    pub const fn new(p1: usize, p2: usize, q1: usize, q2: usize) -> Self {
        Garch2DOrder { p1, p2, q1, q2 }
    }

    /// The (1,1,1,1) model.
    pub const fn unit() -> Self {
        Garch2DOrder::new(1, 1, 1, 1)
    }

    /// Lags of the squared coefficients.
    pub fn omega1(&self) -> Vec<(usize, usize)> {
        lags(self.q1, self.q2)
    }

    /// Lags of the conditional variance.
    pub fn omega2(&self) -> Vec<(usize, usize)> {
        lags(self.p1, self.p2)
    }

    pub fn is_valid(&self) -> bool {
        (self.p1, self.p2) != (0, 0) || (self.q1, self.q2) != (0, 0)
    }

    pub fn num_params(&self) -> usize {
        1 + self.omega1().len() + self.omega2().len()
    }
}

impl Default for Garch2DOrder {
    fn default() -> Self {
        Garch2DOrder::unit()
    }
}

fn lags(a: usize, b: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for k in 0..=a {
        for l in 0..=b {
            if (k, l) != (0, 0) {
                v.push((k, l));
            }
        }
    }
    v
}

/// Model parameters. `alpha[m]` belongs to `order.omega1()[m]` and
/// `beta[m]` to `order.omega2()[m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamsJson", try_from = "ParamsJson")]
pub struct Garch2DParams {
    pub order: Garch2DOrder,
    pub alpha0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Log-likelihood of the data the parameters were fitted to, if any.
    pub loglik: f64,
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    order: [usize; 4],
    alpha0: f64,
    alpha: Vec<(usize, usize, f64)>,
    beta: Vec<(usize, usize, f64)>,
    loglik: Option<f64>,
}

impl From<Garch2DParams> for ParamsJson {
    fn from(p: Garch2DParams) -> Self {
        let o = p.order;
        ParamsJson {
            order: [o.p1, o.p2, o.q1, o.q2],
            alpha0: p.alpha0,
            alpha: o.omega1().into_iter().zip(&p.alpha).map(|((k, l), &v)| (k, l, v)).collect(),
            beta: o.omega2().into_iter().zip(&p.beta).map(|((k, l), &v)| (k, l, v)).collect(),
            loglik: if p.loglik.is_finite() { Some(p.loglik) } else { None },
        }
    }
}

impl TryFrom<ParamsJson> for Garch2DParams {
    type Error = Error;

    fn try_from(j: ParamsJson) -> Result<Self> {
        let order = Garch2DOrder::new(j.order[0], j.order[1], j.order[2], j.order[3]);
        let pick = |lags: Vec<(usize, usize)>, vals: &[(usize, usize, f64)]| -> Result<Vec<f64>> {
            if vals.len() != lags.len() {
                return Err(param_err!("expected {} coefficients, got {}", lags.len(), vals.len()));
            }
            lags.iter()
                .map(|&(k, l)| {
                    vals.iter()
                        .find(|&&(a, b, _)| (a, b) == (k, l))
                        .map(|t| t.2)
                        .ok_or_else(|| param_err!("missing lag ({k},{l})"))
                })
                .collect()
        };
        let p = Garch2DParams {
            order,
            alpha0: j.alpha0,
            alpha: pick(order.omega1(), &j.alpha)?,
            beta: pick(order.omega2(), &j.beta)?,
            loglik: j.loglik.unwrap_or(f64::NAN),
        };
        p.validate()?;
        Ok(p)
    }
}

impl Garch2DParams {
    pub fn new(order: Garch2DOrder, alpha0: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let p = Garch2DParams { order, alpha0, alpha, beta, loglik: f64::NAN };
        p.validate()?;
        Ok(p)
    }

    /// Checks positivity and `sum(alpha) + sum(beta) <= 1 - 1e-6`.
    pub fn validate(&self) -> Result<()> {
        if !self.order.is_valid() {
            return Err(param_err!("order has no lags"));
        }
        if self.alpha.len() != self.order.omega1().len() || self.beta.len() != self.order.omega2().len() {
            return Err(param_err!("coefficient count does not match order"));
        }
        if !(self.alpha0 > 0.0) || !self.alpha0.is_finite() {
            return Err(param_err!("alpha0 must be positive, got {}", self.alpha0));
        }
        if self.alpha.iter().chain(&self.beta).any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(param_err!("coefficients must be non-negative"));
        }
        if self.persistence() > SUM_CAP + 1e-12 {
            return Err(param_err!("sum of coefficients {} exceeds {}", self.persistence(), SUM_CAP));
        }
        Ok(())
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// `alpha0 / (1 - sum(alpha) - sum(beta))`.
    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.persistence())
    }

    /// `[alpha0, alpha.., beta..]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.alpha.len() + self.beta.len());
        v.push(self.alpha0);
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v
    }

    fn from_slice(order: Garch2DOrder, v: &[f64]) -> Self {
        let n1 = order.omega1().len();
        Garch2DParams {
            order,
            alpha0: v[0],
            alpha: v[1..1 + n1].to_vec(),
            beta: v[1 + n1..].to_vec(),
            loglik: f64::NAN,
        }
    }
}

/// Conditional variance recursion with every out-of-range lag replaced by
/// `boundary` (both the squared coefficient and the variance).
pub fn cond_variance_with_boundary(f: &Grid2D, p: &Garch2DParams, boundary: f64) -> Grid2D {
    let (rows, cols) = (f.rows(), f.cols());
    let o1 = p.order.omega1();
    let o2 = p.order.omega2();
    let fd = f.data();
    let mut h = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut v = p.alpha0;
            for (&(k, l), &a) in o1.iter().zip(&p.alpha) {
                v += a * if i >= k && j >= l {
                    let x = fd[(i - k) * cols + j - l];
                    x * x
                } else {
                    boundary
                };
            }
            for (&(k, l), &b) in o2.iter().zip(&p.beta) {
                v += b * if i >= k && j >= l { h[(i - k) * cols + j - l] } else { boundary };
            }
            h[i * cols + j] = v;
        }
    }
    Grid2D::from_vec(rows, cols, h).expect("shape")
}

/// Conditional variance field with the sample variance of `f` as boundary.
pub fn cond_variance_field(f: &Grid2D, p: &Garch2DParams) -> Result<Grid2D> {
    p.validate()?;
    Ok(cond_variance_with_boundary(f, p, f.variance()))
}

/// Gaussian log-likelihood of `f` given its conditional variances.
pub fn loglik_given_variance(f: &Grid2D, h: &Grid2D) -> f64 {
    let ln2pi = libm::log(2.0 * core::f64::consts::PI);
    let mut s = 0.0;
    for (&x, &v) in f.data().iter().zip(h.data()) {
        if !(v > 0.0) {
            return f64::NEG_INFINITY;
        }
        s += -0.5 * (ln2pi + libm::log(v)) - x * x / (2.0 * v);
    }
    s
}

pub fn log_likelihood(f: &Grid2D, p: &Garch2DParams) -> Result<f64> {
    Ok(loglik_given_variance(f, &cond_variance_field(f, p)?))
}

/// Log-likelihood and its gradient with respect to `[alpha0, alpha.., beta..]`.
fn loglik_and_grad(f: &Grid2D, p: &Garch2DParams, boundary: f64, grad: &mut [f64]) -> f64 {
    let (rows, cols) = (f.rows(), f.cols());
    let o1 = p.order.omega1();
    let o2 = p.order.omega2();
    let n1 = o1.len();
    let np = 1 + n1 + o2.len();
    let fd = f.data();
    let ln2pi = libm::log(2.0 * core::f64::consts::PI);
    // h and dh/dpsi, interleaved per site
    let stride = 1 + np;
    let mut st = vec![0.0; rows * cols * stride];
    for g in grad.iter_mut() {
        *g = 0.0;
    }
    let mut ll = 0.0;
    let mut dh = vec![0.0; np];
    for i in 0..rows {
        for j in 0..cols {
            let mut v = p.alpha0;
            dh.iter_mut().for_each(|d| *d = 0.0);
            dh[0] = 1.0;
            for (m, (&(k, l), &a)) in o1.iter().zip(&p.alpha).enumerate() {
                let x2 = if i >= k && j >= l {
                    let x = fd[(i - k) * cols + j - l];
                    x * x
                } else {
                    boundary
                };
                v += a * x2;
                dh[1 + m] += x2;
            }
            for (m, (&(k, l), &b)) in o2.iter().zip(&p.beta).enumerate() {
                if i >= k && j >= l {
                    let base = ((i - k) * cols + j - l) * stride;
                    let hl = st[base];
                    v += b * hl;
                    dh[1 + n1 + m] += hl;
                    for (d, &dl) in dh.iter_mut().zip(&st[base + 1..base + stride]) {
                        *d += b * dl;
                    }
                } else {
                    v += b * boundary;
                    dh[1 + n1 + m] += boundary;
                }
            }
            if !(v > 0.0) {
                return f64::NEG_INFINITY;
            }
            let base = (i * cols + j) * stride;
            st[base] = v;
            st[base + 1..base + stride].copy_from_slice(&dh);
            let x = fd[i * cols + j];
            let x2 = x * x;
            ll += -0.5 * (ln2pi + libm::log(v)) - x2 / (2.0 * v);
            let dl = (x2 / v - 1.0) / (2.0 * v);
            for (g, &d) in grad.iter_mut().zip(&dh) {
                *g += dl * d;
            }
        }
    }
    ll
}

/// Result of [`fit_mle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub params: Garch2DParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Upper bound on `sum(alpha) + sum(beta)` in the reparameterisation.
const SUM_CAP: f64 = 1.0 - 1e-6;
const MAX_ITER: usize = 500;
const REL_TOL: f64 = 1e-8;

/// Unconstrained coordinates: `alpha0 = exp(z0)`, coefficients
/// `c_i = cap * exp(z_i) / (1 + sum_j exp(z_j))`.
fn decode(z: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.len());
    out.push(libm::exp(z[0]));
    let zmax = z[1..].iter().cloned().fold(0.0f64, f64::max);
    let denom = libm::exp(-zmax) + z[1..].iter().map(|&t| libm::exp(t - zmax)).sum::<f64>();
    for &t in &z[1..] {
        out.push(SUM_CAP * libm::exp(t - zmax) / denom);
    }
    out
}

fn encode(psi: &[f64]) -> Vec<f64> {
    let s: f64 = psi[1..].iter().sum::<f64>() / SUM_CAP;
    let ln_norm = -libm::log(1.0 - s);
    let mut z = Vec::with_capacity(psi.len());
    z.push(libm::log(psi[0]));
    for &c in &psi[1..] {
        z.push(libm::log(c.max(1e-300) / SUM_CAP) + ln_norm);
    }
    z
}

/// Negative mean log-likelihood and its gradient in `z`.
fn objective(f: &Grid2D, order: Garch2DOrder, boundary: f64, z: &[f64], gz: &mut [f64]) -> f64 {
    let psi = decode(z);
    let p = Garch2DParams::from_slice(order, &psi);
    let mut g = vec![0.0; psi.len()];
    let ll = loglik_and_grad(f, &p, boundary, &mut g);
    if !ll.is_finite() {
        return f64::INFINITY;
    }
    let n = f.len() as f64;
    gz[0] = -g[0] * psi[0] / n;
    let dot: f64 = (1..psi.len()).map(|i| g[i] * psi[i]).sum::<f64>() / SUM_CAP;
    for j in 1..psi.len() {
        gz[j] = -psi[j] * (g[j] - dot) / n;
    }
    -ll / n
}

/// Level of the likelihood-ratio check that decides whether the variance
/// lags are kept.
pub const BETA_LR_LEVEL: f64 = 0.05;

/// Maximum-likelihood fit.
///
/// When the squared-coefficient lags carry no signal the variance lags are
/// not identified and the likelihood is flat along a ridge. To pin the
/// estimate down the nested model without variance lags is fitted as well;
/// the full fit is kept only if it beats the nested one by a likelihood
/// ratio significant at [`BETA_LR_LEVEL`]. See [`fit_mle_full`] for the plain
/// fit.
pub fn fit_mle(f: &Grid2D, order: Garch2DOrder) -> Result<GarchFit> {
    let full = fit_mle_full(f, order)?;
    let n2 = order.omega2().len();
    if n2 == 0 || (order.q1, order.q2) == (0, 0) {
        return Ok(full);
    }
    let nested_order = Garch2DOrder::new(0, 0, order.q1, order.q2);
    let nested = fit_mle_full(f, nested_order)?;
    let lr = 2.0 * (full.loglik - nested.loglik);
    if lr.is_finite() && lr > chi2_isf(BETA_LR_LEVEL, n2) {
        return Ok(full);
    }
    let p = nested.params;
    let mut params = Garch2DParams {
        order,
        alpha0: p.alpha0,
        alpha: p.alpha,
        beta: vec![0.0; n2],
        loglik: f64::NAN,
    };
    params.loglik = log_likelihood(f, &params)?;
    Ok(GarchFit {
        loglik: params.loglik,
        params,
        converged: nested.converged,
        iterations: full.iterations + nested.iterations,
    })
}

/// Maximum-likelihood fit by BFGS in unconstrained coordinates.
///
/// Starts from `alpha0 = var/2`, `sum(alpha) = 0.1`, `sum(beta) = 0.3` split
/// evenly, and stops when the relative change of the log-likelihood falls
/// below `1e-8` or after 500 iterations.
pub fn fit_mle_full(f: &Grid2D, order: Garch2DOrder) -> Result<GarchFit> {
    if !order.is_valid() {
        return Err(param_err!("order has no lags"));
    }
    let n1 = order.omega1().len();
    let n2 = order.omega2().len();
    let mut init = vec![0.0; 1 + n1 + n2];
    let var = f.variance();
    if f.len() < 4 * (1 + n1 + n2) || !(var > 0.0) {
        return Err(Error::InsufficientData(alloc::format!(
            "{} samples with variance {var}",
            f.len()
        )));
    }
    init[0] = 0.5 * var;
    for c in init[1..1 + n1].iter_mut() {
        *c = 0.1 / n1 as f64;
    }
    for c in init[1 + n1..].iter_mut() {
        *c = 0.3 / n2.max(1) as f64;
    }
    fit_mle_from(f, order, &init)
}

/// [`fit_mle`] from explicit starting values `[alpha0, alpha.., beta..]`.
pub fn fit_mle_from(f: &Grid2D, order: Garch2DOrder, start: &[f64]) -> Result<GarchFit> {
    let np = order.num_params();
    if start.len() != np {
        return Err(param_err!("{} starting values for {} parameters", start.len(), np));
    }
    let boundary = f.variance();
    let mut z = encode(start);
    let mut g = vec![0.0; np];
    let mut fx = objective(f, order, boundary, &z, &mut g);
    if !fx.is_finite() {
        return Err(param_err!("starting point has non-finite likelihood"));
    }
    let mut hinv = identity(np);
    let mut first = true;
    let mut converged = false;
    let mut iterations = 0;
    let mut gn = vec![0.0; np];
    while iterations < MAX_ITER {
        iterations += 1;
        let mut dir: Vec<f64> = (0..np).map(|i| -(0..np).map(|j| hinv[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
        if !(slope < 0.0) {
            hinv = identity(np);
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
            if slope == 0.0 {
                converged = true;
                break;
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let zn: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let fn_ = objective(f, order, boundary, &zn, &mut gn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((zn, fn_));
                break;
            }
            t *= 0.5;
        }
        let Some((zn, fnew)) = accepted else {
            if first {
                break;
            }
            // restart from steepest descent once before giving up
            hinv = identity(np);
            first = true;
            continue;
        };
        let s: Vec<f64> = zn.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-18 {
            if first {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                let scale = sy / yy;
                for (i, row) in hinv.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = if i == j { scale } else { 0.0 };
                    }
                }
            }
            bfgs_update(&mut hinv, &s, &y, sy);
            first = false;
        }
        let rel = (fnew - fx).abs() / fx.abs().max(1e-300);
        z = zn;
        fx = fnew;
        g.copy_from_slice(&gn);
        if rel < REL_TOL {
            converged = true;
            break;
        }
    }
    let mut params = Garch2DParams::from_slice(order, &decode(&z));
    params.loglik = -fx * f.len() as f64;
    Ok(GarchFit { loglik: params.loglik, params, converged, iterations })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho + rho * rho * yhy) * s[i] * s[j];
        }
    }
}

/// Draw a field from the model; lags outside the field use the
/// unconditional variance.
pub fn simulate(p: &Garch2DParams, rows: usize, cols: usize, seed: u64) -> Result<Grid2D> {
    p.validate()?;
    let b = p.unconditional_variance();
    let o1 = p.order.omega1();
    let o2 = p.order.omega2();
    let mut g = SplitMix64::new(seed);
    let mut f = vec![0.0; rows * cols];
    let mut h = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut v = p.alpha0;
            for (&(k, l), &a) in o1.iter().zip(&p.alpha) {
                v += a * if i >= k && j >= l {
                    let x = f[(i - k) * cols + j - l];
                    x * x
                } else {
                    b
                };
            }
            for (&(k, l), &c) in o2.iter().zip(&p.beta) {
                v += c * if i >= k && j >= l { h[(i - k) * cols + j - l] } else { b };
            }
            h[i * cols + j] = v;
            f[i * cols + j] = libm::sqrt(v) * g.next_gaussian();
        }
    }
    Grid2D::from_vec(rows, cols, f)
}

/// Traversal order used to turn a field into a series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanDir {
    /// Row by row.
    Horizontal,
    /// Column by column.
    Vertical,
    /// Anti-diagonals from the top-left corner, each from its top row down.
    Diagonal,
}

pub fn scan_series(f: &Grid2D, dir: ScanDir) -> Vec<f64> {
    let (r, c) = (f.rows(), f.cols());
    match dir {
        ScanDir::Horizontal => f.data().to_vec(),
        ScanDir::Vertical => f.transpose().into_vec(),
        ScanDir::Diagonal => {
            let mut out = Vec::with_capacity(r * c);
            for d in 0..r + c - 1 {
                let i0 = d.saturating_sub(c - 1);
                let i1 = d.min(r - 1);
                for i in i0..=i1 {
                    out.push(f.get(i, d - i));
                }
            }
            out
        }
    }
}

/// Outcome of a Lagrange-multiplier test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmTestResult {
    /// Null hypothesis of no heteroscedasticity rejected.
    #[serde(rename = "H")]
    pub h: bool,
    #[serde(rename = "pValue")]
    pub p_value: f64,
    pub stat: f64,
    pub dof: usize,
}

/// Accumulates `X'X`, `X'y` for OLS with an intercept.
struct Ols {
    k: usize,
    xtx: Vec<f64>,
    xty: Vec<f64>,
    n: usize,
}

impl Ols {
    fn new(regressors: usize) -> Self {
        let k = regressors + 1;
        Ols { k, xtx: vec![0.0; k * k], xty: vec![0.0; k], n: 0 }
    }

    fn add(&mut self, x: &[f64], y: f64) {
        let k = self.k;
        let row = |i: usize| if i == 0 { 1.0 } else { x[i - 1] };
        for a in 0..k {
            let xa = row(a);
            self.xty[a] += xa * y;
            for b in 0..=a {
                self.xtx[a * k + b] += xa * row(b);
            }
        }
        self.n += 1;
    }

    /// Coefficients via Cholesky; `None` if singular.
    fn solve(&self) -> Option<Vec<f64>> {
        let k = self.k;
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = self.xtx[i * k + j];
                for m in 0..j {
                    s -= l[i * k + m] * l[j * k + m];
                }
                if i == j {
                    if !(s > 1e-12 * self.xtx[i * k + i].abs().max(1e-300)) {
                        return None;
                    }
                    l[i * k + i] = libm::sqrt(s);
                } else {
                    l[i * k + j] = s / l[j * k + j];
                }
            }
        }
        let mut w = self.xty.clone();
        for i in 0..k {
            for m in 0..i {
                w[i] -= l[i * k + m] * w[m];
            }
            w[i] /= l[i * k + i];
        }
        for i in (0..k).rev() {
            for m in i + 1..k {
                w[i] -= l[m * k + i] * w[m];
            }
            w[i] /= l[i * k + i];
        }
        Some(w)
    }
}

fn finish_lm(stat: f64, dof: usize, alpha: f64) -> LmTestResult {
    let p_value = chi2_sf(stat, dof).clamp(0.0, 1.0);
    LmTestResult { h: p_value < alpha, p_value, stat, dof }
}

/// Engle's test: regress the centred squared series on its `lags` previous
/// values; `n R^2` is compared with a chi-square on `lags` degrees of
/// freedom.
pub fn lm_test_engle(x: &[f64], lags: usize, alpha: f64) -> Result<LmTestResult> {
    if lags == 0 || x.len() <= 10 * lags {
        return Err(Error::InsufficientData(alloc::format!("{} samples for {} lags", x.len(), lags)));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let e2: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let mut ols = Ols::new(lags);
    let mut reg = vec![0.0; lags];
    for t in lags..e2.len() {
        for (m, r) in reg.iter_mut().enumerate() {
            *r = e2[t - 1 - m];
        }
        ols.add(&reg, e2[t]);
    }
    let r2 = r_squared(&ols, |visit| {
        for t in lags..e2.len() {
            for (m, r) in reg.iter_mut().enumerate() {
                *r = e2[t - 1 - m];
            }
            visit(&reg, e2[t]);
        }
    })?;
    Ok(finish_lm(ols.n as f64 * r2, lags, alpha))
}

/// Two-dimensional test: regress the centred squared field on its lags over
/// `order.omega1()`; `n R^2` against a chi-square on `|O1|` degrees of
/// freedom.
pub fn lm_test_2d(f: &Grid2D, order: Garch2DOrder, alpha: f64) -> Result<LmTestResult> {
    let o1 = order.omega1();
    if o1.is_empty() {
        return Err(param_err!("order has no squared-coefficient lags"));
    }
    let (rows, cols) = (f.rows(), f.cols());
    let (kmax, lmax) = (order.q1, order.q2);
    let lag = kmax.max(lmax);
    if rows <= 4 * lag || cols <= 4 * lag {
        return Err(Error::InsufficientData(alloc::format!("{rows}x{cols} field")));
    }
    let mean = f.mean();
    let e2: Vec<f64> = f.data().iter().map(|v| (v - mean) * (v - mean)).collect();
    let mut reg = vec![0.0; o1.len()];
    let mut sweep = |visit: &mut dyn FnMut(&[f64], f64)| {
        for i in kmax..rows {
            for j in lmax..cols {
                for (r, &(k, l)) in reg.iter_mut().zip(&o1) {
                    *r = e2[(i - k) * cols + j - l];
                }
                visit(&reg, e2[i * cols + j]);
            }
        }
    };
    let mut ols = Ols::new(o1.len());
    sweep(&mut |x, y| ols.add(x, y));
    let r2 = r_squared(&ols, |visit| sweep(visit))?;
    Ok(finish_lm(ols.n as f64 * r2, o1.len(), alpha))
}

fn r_squared(ols: &Ols, mut sweep: impl FnMut(&mut dyn FnMut(&[f64], f64))) -> Result<f64> {
    let beta = ols.solve().ok_or_else(|| Error::InsufficientData("singular regression".into()))?;
    let n = ols.n as f64;
    let ybar = ols.xty[0] / n;
    let (mut ssr, mut sst) = (0.0, 0.0);
    sweep(&mut |x, y| {
        let fit = beta[0] + x.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        ssr += (y - fit) * (y - fit);
        sst += (y - ybar) * (y - ybar);
    });
    if !(sst > 0.0) {
        return Err(Error::InsufficientData("constant squared series".into()));
    }
    Ok((1.0 - ssr / sst).max(0.0))
}
