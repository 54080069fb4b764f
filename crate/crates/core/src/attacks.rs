//! Image-domain attacks: JPEG-style requantisation, rescaling, median and
//! Gaussian filtering, additive white Gaussian noise, and chains of these.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::grid::{to_pixel, Grid2D, ImageU8};
use crate::rng::SplitMix64;

/// What happens to pixel values between processing steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Round and clamp to 8 bits after every attack, as a stored image would be.
    #[default]
    Rounded,
    /// Keep real values throughout.
    Real,
}

impl Channel {
    #[inline]
    fn out(self, v: f64) -> f64 {
        match self {
            Channel::Rounded => to_pixel(v) as f64,
            Channel::Real => v,
        }
    }
}

fn grid_u8(img: &ImageU8) -> Grid2D {
    img.to_grid()
}

fn u8_grid(g: Grid2D) -> ImageU8 {
    ImageU8::from_grid(&g)
}

/// Standard JPEG luminance quantisation table, row-major.
pub const LUMA_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Quality-scaled table: `s = qf < 50 ? 5000/qf : 200 - 2 qf`,
/// `q = clamp(floor((t s + 50) / 100), 1, 255)`.
pub fn jpeg_quant_table(qf: u32) -> Result<[u16; 64]> {
    if !(1..=100).contains(&qf) {
        return Err(param_err!("JPEG quality {qf} outside 1..=100"));
    }
    let s = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut q = [0u16; 64];
    for (o, &t) in q.iter_mut().zip(&LUMA_QUANT) {
        *o = ((t as u32 * s + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(q)
}

fn dct_matrix() -> [[f64; 8]; 8] {
    let mut c = [[0.0; 8]; 8];
    for (k, row) in c.iter_mut().enumerate() {
        let a = if k == 0 { libm::sqrt(1.0 / 8.0) } else { 0.5 };
        for (n, v) in row.iter_mut().enumerate() {
            *v = a * libm::cos(core::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / 16.0);
        }
    }
    c
}

/// Index into an edge-replicated axis.
#[inline]
fn clampi(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// 8x8 block DCT, quantise, dequantise, inverse DCT. Sizes that are not
/// multiples of 8 are padded by edge replication and cropped afterwards.
pub fn jpeg_roundtrip(img: &ImageU8, qf: u32) -> Result<ImageU8> {
    jpeg_grid(&grid_u8(img), qf, Channel::Rounded).map(u8_grid)
}

pub fn jpeg_grid(img: &Grid2D, qf: u32, ch: Channel) -> Result<Grid2D> {
    let q = jpeg_quant_table(qf)?;
    let c = dct_matrix();
    let (r, w) = (img.rows(), img.cols());
    let (pr, pc) = (r.div_ceil(8) * 8, w.div_ceil(8) * 8);
    let mut out = vec![0.0; r * w];
    let mut blk = [[0.0f64; 8]; 8];
    let mut tmp = [[0.0f64; 8]; 8];
    for bi in (0..pr).step_by(8) {
        for bj in (0..pc).step_by(8) {
            for (y, row) in blk.iter_mut().enumerate() {
                for (x, v) in row.iter_mut().enumerate() {
                    *v = img.get((bi + y).min(r - 1), (bj + x).min(w - 1)) - 128.0;
                }
            }
            // forward: C X C^T
            for u in 0..8 {
                for x in 0..8 {
                    tmp[u][x] = (0..8).map(|y| c[u][y] * blk[y][x]).sum();
                }
            }
            for u in 0..8 {
                for v in 0..8 {
                    let coef: f64 = (0..8).map(|x| tmp[u][x] * c[v][x]).sum();
                    let qq = q[u * 8 + v] as f64;
                    blk[u][v] = libm::round(coef / qq) * qq;
                }
            }
            // inverse: C^T Y C
            for y in 0..8 {
                for v in 0..8 {
                    tmp[y][v] = (0..8).map(|u| c[u][y] * blk[u][v]).sum();
                }
            }
            for y in 0..8 {
                for x in 0..8 {
                    let (i, j) = (bi + y, bj + x);
                    if i < r && j < w {
                        let v: f64 = (0..8).map(|v| tmp[y][v] * c[v][x]).sum();
                        out[i * w + j] = ch.out(v + 128.0);
                    }
                }
            }
        }
    }
    Grid2D::from_vec(r, w, out)
}

/// Bilinear resampling with half-pixel-centre alignment.
fn resize_bilinear(src: &[f64], r: usize, w: usize, nr: usize, nw: usize) -> Vec<f64> {
    let taps = |n_out: usize, n_in: usize| -> Vec<(usize, usize, f64)> {
        let scale = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|o| {
                let x = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
                let i0 = (libm::floor(x) as usize).min(n_in - 1);
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, x - i0 as f64)
            })
            .collect()
    };
    let ty = taps(nr, r);
    let tx = taps(nw, w);
    let mut rows = vec![0.0; r * nw];
    for i in 0..r {
        for (j, &(a, b, t)) in tx.iter().enumerate() {
            rows[i * nw + j] = (1.0 - t) * src[i * w + a] + t * src[i * w + b];
        }
    }
    let mut out = vec![0.0; nr * nw];
    for (i, &(a, b, t)) in ty.iter().enumerate() {
        for j in 0..nw {
            out[i * nw + j] = (1.0 - t) * rows[a * nw + j] + t * rows[b * nw + j];
        }
    }
    out
}

/// Bilinear downscale to `floor(sf * size)`, then back up. The small image
/// is rounded as well on the 8-bit channel.
pub fn rescale_attack(img: &ImageU8, sf: f64) -> Result<ImageU8> {
    rescale_grid(&grid_u8(img), sf, Channel::Rounded).map(u8_grid)
}

pub fn rescale_grid(img: &Grid2D, sf: f64, ch: Channel) -> Result<Grid2D> {
    if !(sf > 0.0 && sf <= 1.0) {
        return Err(param_err!("scale factor {sf} outside (0, 1]"));
    }
    let (r, w) = (img.rows(), img.cols());
    let nr = (libm::floor(sf * r as f64) as usize).max(1);
    let nw = (libm::floor(sf * w as f64) as usize).max(1);
    let small: Vec<f64> = resize_bilinear(img.data(), r, w, nr, nw).into_iter().map(|v| ch.out(v)).collect();
    let back = resize_bilinear(&small, nr, nw, r, w);
    Grid2D::from_vec(r, w, back.into_iter().map(|v| ch.out(v)).collect())
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(param_err!("window {window} must be odd and at least 3"));
    }
    Ok(())
}

/// Median over a `window x window` neighbourhood, edges replicated.
pub fn median_filter(img: &ImageU8, window: usize) -> Result<ImageU8> {
    median_grid(&grid_u8(img), window, Channel::Rounded).map(u8_grid)
}

pub fn median_grid(img: &Grid2D, window: usize, ch: Channel) -> Result<Grid2D> {
    check_window(window)?;
    let (r, w) = (img.rows(), img.cols());
    let h = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    let mut out = vec![0.0; r * w];
    for i in 0..r {
        for j in 0..w {
            buf.clear();
            for di in -h..=h {
                let ii = clampi(i as isize + di, r);
                for dj in -h..=h {
                    buf.push(img.get(ii, clampi(j as isize + dj, w)));
                }
            }
            let mid = buf.len() / 2;
            out[i * w + j] = ch.out(*buf.select_nth_unstable_by(mid, f64::total_cmp).1);
        }
    }
    Grid2D::from_vec(r, w, out)
}

/// Normalised 1-D Gaussian taps with `sigma = window / 6`.
pub fn gaussian_kernel(window: usize) -> Result<Vec<f64>> {
    check_window(window)?;
    let sigma = window as f64 / 6.0;
    let h = (window / 2) as isize;
    let k: Vec<f64> = (-h..=h).map(|x| libm::exp(-((x * x) as f64) / (2.0 * sigma * sigma))).collect();
    let s: f64 = k.iter().sum();
    Ok(k.into_iter().map(|v| v / s).collect())
}

/// Separable Gaussian blur, edges replicated, rounded once at the end.
pub fn gaussian_filter(img: &ImageU8, window: usize) -> Result<ImageU8> {
    gaussian_grid(&grid_u8(img), window, Channel::Rounded).map(u8_grid)
}

pub fn gaussian_grid(img: &Grid2D, window: usize, ch: Channel) -> Result<Grid2D> {
    let k = gaussian_kernel(window)?;
    let (r, w) = (img.rows(), img.cols());
    let h = (window / 2) as isize;
    let mut tmp = vec![0.0; r * w];
    for i in 0..r {
        for j in 0..w {
            tmp[i * w + j] = k
                .iter()
                .enumerate()
                .map(|(t, &kv)| kv * img.get(i, clampi(j as isize + t as isize - h, w)))
                .sum();
        }
    }
    let mut out = vec![0.0; r * w];
    for i in 0..r {
        for j in 0..w {
            let v: f64 = k
                .iter()
                .enumerate()
                .map(|(t, &kv)| kv * tmp[clampi(i as isize + t as isize - h, r) * w + j])
                .sum();
            out[i * w + j] = ch.out(v);
        }
    }
    Grid2D::from_vec(r, w, out)
}

/// Add `N(0, noise_std^2)` per pixel in raster order, then round and clamp.
pub fn awgn(img: &ImageU8, noise_std: f64, seed: u64) -> Result<ImageU8> {
    awgn_grid(&grid_u8(img), noise_std, seed, Channel::Rounded).map(u8_grid)
}

pub fn awgn_grid(img: &Grid2D, noise_std: f64, seed: u64, ch: Channel) -> Result<Grid2D> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(param_err!("noise std {noise_std} must be non-negative"));
    }
    if noise_std == 0.0 {
        return Ok(img.clone());
    }
    let mut g = SplitMix64::new(seed);
    Ok(img.map(|v| ch.out(v + noise_std * g.next_gaussian())))
}

/// One attack or a chain of attacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AttackSpec {
    /// No change.
    None,
    Jpeg { qf: u32 },
    Rescale { sf: f64 },
    Median { window: usize },
    Gaussian { window: usize },
    Awgn { noise_std: f64, seed: u64 },
    /// Applied left to right.
    Compose { children: Vec<AttackSpec> },
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttackSpec::None => Ok(()),
            AttackSpec::Jpeg { qf } => jpeg_quant_table(*qf).map(|_| ()),
            AttackSpec::Rescale { sf } if *sf > 0.0 && *sf <= 1.0 => Ok(()),
            AttackSpec::Rescale { sf } => Err(param_err!("scale factor {sf} outside (0, 1]")),
            AttackSpec::Median { window } | AttackSpec::Gaussian { window } => check_window(*window),
            AttackSpec::Awgn { noise_std, .. } if *noise_std >= 0.0 && noise_std.is_finite() => Ok(()),
            AttackSpec::Awgn { noise_std, .. } => Err(param_err!("noise std {noise_std} must be non-negative")),
            AttackSpec::Compose { children } if children.is_empty() => Err(param_err!("empty attack chain")),
            AttackSpec::Compose { children } => children.iter().try_for_each(|c| c.validate()),
        }
    }

    pub fn apply(&self, img: &ImageU8) -> Result<ImageU8> {
        self.apply_grid(&grid_u8(img), Channel::Rounded).map(u8_grid)
    }

    pub fn apply_grid(&self, img: &Grid2D, ch: Channel) -> Result<Grid2D> {
        match self {
            AttackSpec::None => Ok(img.clone()),
            AttackSpec::Jpeg { qf } => jpeg_grid(img, *qf, ch),
            AttackSpec::Rescale { sf } => rescale_grid(img, *sf, ch),
            AttackSpec::Median { window } => median_grid(img, *window, ch),
            AttackSpec::Gaussian { window } => gaussian_grid(img, *window, ch),
            AttackSpec::Awgn { noise_std, seed } => awgn_grid(img, *noise_std, *seed, ch),
            AttackSpec::Compose { children } => {
                if children.is_empty() {
                    return Err(param_err!("empty attack chain"));
                }
                let mut cur = img.clone();
                for c in children {
                    cur = c.apply_grid(&cur, ch)?;
                }
                Ok(cur)
            }
        }
    }

    /// Short name such as `jpeg60` or `gaussian5+awgn10`.
    pub fn label(&self) -> String {
        match self {
            AttackSpec::None => "none".into(),
            AttackSpec::Jpeg { qf } => alloc::format!("jpeg{qf}"),
            AttackSpec::Rescale { sf } => alloc::format!("rescale{sf}"),
            AttackSpec::Median { window } => alloc::format!("median{window}"),
            AttackSpec::Gaussian { window } => alloc::format!("gaussian{window}"),
            AttackSpec::Awgn { noise_std, .. } => alloc::format!("awgn{noise_std}"),
            AttackSpec::Compose { children } => {
                let parts: Vec<String> = children.iter().map(|c| c.label()).collect();
                parts.join("+")
            }
        }
    }

    /// Same attack with every noise seed mixed with `trial`, so repeated
    /// trials draw independent noise.
    pub fn reseeded(&self, trial: u64) -> AttackSpec {
        match self {
            AttackSpec::Awgn { noise_std, seed } => {
                let mut g = SplitMix64::new(seed ^ trial.rotate_left(17));
                AttackSpec::Awgn { noise_std: *noise_std, seed: g.next_u64() }
            }
            AttackSpec::Compose { children } => {
                AttackSpec::Compose { children: children.iter().map(|c| c.reseeded(trial)).collect() }
            }
            other => other.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            AttackSpec::None => true,
            AttackSpec::Compose { children } => children.iter().all(|c| c.is_identity()),
            _ => false,
        }
    }
}

/// Apply `specs` left to right.
pub fn compose_attacks(img: &ImageU8, specs: &[AttackSpec]) -> Result<ImageU8> {
    if specs.is_empty() {
        return Err(param_err!("empty attack chain"));
    }
    let mut cur = grid_u8(img);
    for s in specs {
        cur = s.apply_grid(&cur, Channel::Rounded)?;
    }
    Ok(u8_grid(cur))
}
