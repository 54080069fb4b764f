//! Keyed bipolar watermark, subband selection and additive embedding.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::filters::{FilterBank, FilterSet};
use crate::grid::{Grid2D, ImageU8};
use crate::rng::SplitMix64;
use crate::xforms::{dwt_analyze, dwt_synthesize, Contourlet, ContourletPlan, Dwt};

/// Secret key seeding the watermark sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WatermarkKey(pub u64);

/// WDR at or below this value embeds nothing.
pub const WDR_OFF_DB: f64 = -200.0;

/// Number of wavelet levels used by the wavelet-domain variant; the mark
/// goes into the coarsest detail level.
pub const WAVELET_LEVELS: usize = 2;

/// Bipolar sequence in raster order: `+1` when the top bit of the next
/// SplitMix64 output (seeded with the key) is set, `-1` otherwise.
pub fn prs_generate(key: WatermarkKey, rows: usize, cols: usize) -> Grid2D {
    let mut g = SplitMix64::new(key.0);
    Grid2D::from_fn(rows, cols, |_, _| g.next_sign())
}

/// `w = gamma * s` for the key's sequence.
pub fn watermark_field(key: WatermarkKey, rows: usize, cols: usize, gamma: f64) -> Grid2D {
    let mut g = SplitMix64::new(key.0);
    Grid2D::from_fn(rows, cols, |_, _| gamma * g.next_sign())
}

/// Index of the largest value, lowest index on ties.
pub fn argmax_energy(bands: &[Grid2D]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in bands.iter().enumerate() {
        let e = b.energy();
        if best.map_or(true, |(_, be)| e > be) {
            best = Some((i, e));
        }
    }
    best.map(|(i, _)| i)
}

/// Finest scale and its maximum-energy directional subband.
pub fn select_subband(c: &Contourlet) -> Result<(usize, usize)> {
    if c.subbands.is_empty() {
        return Err(shape_err!("decomposition has no scales"));
    }
    let s = c.finest();
    let k = argmax_energy(&c.subbands[s]).ok_or_else(|| shape_err!("finest scale has no subbands"))?;
    Ok((s, k))
}

/// `gamma = sqrt(P * 10^(wdr/10))` with `P` the mean power of the subband.
pub fn gamma_for_wdr(subband: &Grid2D, wdr_db: f64) -> Result<f64> {
    if wdr_db.is_nan() {
        return Err(param_err!("WDR is NaN"));
    }
    let p = subband.mean_power();
    if !(p > 0.0) {
        return Err(param_err!("subband has zero energy"));
    }
    if wdr_db <= WDR_OFF_DB {
        return Ok(0.0);
    }
    Ok(libm::sqrt(p * libm::pow(10.0, wdr_db / 10.0)))
}

/// What the detector may need to know about an embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRecord {
    pub key: WatermarkKey,
    pub wdr_db: f64,
    pub gamma: f64,
    pub scale_index: usize,
    pub subband_index: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Transform domain used for embedding and detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Contourlet,
    Wavelet,
}

/// A transform for a fixed image size.
#[derive(Debug, Clone)]
pub enum Transform {
    Contourlet(ContourletPlan),
    Wavelet { rows: usize, cols: usize, levels: usize, bank: FilterBank },
}

/// Coefficients in either domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    Contourlet(Contourlet),
    Wavelet(Dwt),
}

impl Transform {
    pub fn contourlet(rows: usize, cols: usize, dir_levels: &[usize], filters: FilterSet) -> Result<Self> {
        Ok(Transform::Contourlet(ContourletPlan::new(rows, cols, dir_levels, filters)?))
    }

    /// Wavelet transform with [`WAVELET_LEVELS`] levels.
    pub fn wavelet(rows: usize, cols: usize, bank: FilterBank) -> Result<Self> {
        let m = 1usize << WAVELET_LEVELS;
        if rows == 0 || cols == 0 || rows % m != 0 || cols % m != 0 {
            return Err(shape_err!("{rows}x{cols} is not divisible by {m}"));
        }
        Ok(Transform::Wavelet { rows, cols, levels: WAVELET_LEVELS, bank })
    }

    pub fn domain(&self) -> Domain {
        match self {
            Transform::Contourlet(_) => Domain::Contourlet,
            Transform::Wavelet { .. } => Domain::Wavelet,
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Transform::Contourlet(p) => p.rows(),
            Transform::Wavelet { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Transform::Contourlet(p) => p.cols(),
            Transform::Wavelet { cols, .. } => *cols,
        }
    }

    pub fn analyze(&self, x: &Grid2D) -> Result<Decomposition> {
        match self {
            Transform::Contourlet(p) => Ok(Decomposition::Contourlet(p.analyze(x)?)),
            Transform::Wavelet { rows, cols, levels, bank } => {
                if x.rows() != *rows || x.cols() != *cols {
                    return Err(shape_err!("{}x{} input for a {rows}x{cols} transform", x.rows(), x.cols()));
                }
                Ok(Decomposition::Wavelet(dwt_analyze(x, *levels, bank)?))
            }
        }
    }

    pub fn synthesize(&self, d: &Decomposition) -> Result<Grid2D> {
        match (self, d) {
            (Transform::Contourlet(p), Decomposition::Contourlet(c)) => p.synthesize(c),
            (Transform::Wavelet { bank, .. }, Decomposition::Wavelet(w)) => dwt_synthesize(w, bank),
            _ => Err(param_err!("decomposition does not match the transform")),
        }
    }
}

impl Decomposition {
    /// Subband that carries the watermark: the maximum-energy subband of the
    /// finest contourlet scale, or of the coarsest wavelet detail level.
    pub fn select(&self) -> Result<(usize, usize)> {
        match self {
            Decomposition::Contourlet(c) => select_subband(c),
            Decomposition::Wavelet(w) => {
                let level = w.details.len().checked_sub(1).ok_or_else(|| shape_err!("no detail levels"))?;
                Ok((level, argmax_energy(&w.details[level]).expect("three bands")))
            }
        }
    }

    pub fn band(&self, scale: usize, index: usize) -> Option<&Grid2D> {
        match self {
            Decomposition::Contourlet(c) => c.subband(scale, index),
            Decomposition::Wavelet(w) => w.details.get(scale).and_then(|d| d.get(index)),
        }
    }

    pub fn band_mut(&mut self, scale: usize, index: usize) -> Option<&mut Grid2D> {
        match self {
            Decomposition::Contourlet(c) => c.subband_mut(scale, index),
            Decomposition::Wavelet(w) => w.details.get_mut(scale).and_then(|d| d.get_mut(index)),
        }
    }

    /// All subbands in a fixed order, for comparisons.
    pub fn bands(&self) -> Vec<&Grid2D> {
        match self {
            Decomposition::Contourlet(c) => core::iter::once(&c.lowpass).chain(c.subbands.iter().flatten()).collect(),
            Decomposition::Wavelet(w) => core::iter::once(&w.approx).chain(w.details.iter().flatten()).collect(),
        }
    }
}

/// A host image analysed once, ready to carry any number of keys.
#[derive(Debug, Clone)]
pub struct Host {
    coeffs: Decomposition,
    scale: usize,
    index: usize,
    gamma: f64,
    wdr_db: f64,
}

impl Host {
    pub fn new(t: &Transform, img: &ImageU8, wdr_db: f64) -> Result<Self> {
        Self::from_grid(t, &img.to_grid(), wdr_db)
    }

    pub fn from_grid(t: &Transform, img: &Grid2D, wdr_db: f64) -> Result<Self> {
        let coeffs = t.analyze(img)?;
        let (scale, index) = coeffs.select()?;
        let gamma = gamma_for_wdr(coeffs.band(scale, index).expect("selected band"), wdr_db)?;
        Ok(Host { coeffs, scale, index, gamma, wdr_db })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn selected(&self) -> (usize, usize) {
        (self.scale, self.index)
    }

    pub fn coefficients(&self) -> &Decomposition {
        &self.coeffs
    }

    /// The selected subband of the unmarked host.
    pub fn band(&self) -> &Grid2D {
        self.coeffs.band(self.scale, self.index).expect("selected band")
    }

    /// Selected subband plus `gamma * s`, without resynthesis.
    pub fn marked_band(&self, key: WatermarkKey) -> Grid2D {
        let b = self.band();
        let w = watermark_field(key, b.rows(), b.cols(), self.gamma);
        b.zip_map(&w, |f, w| f + w).expect("same shape")
    }

    pub fn record(&self, key: WatermarkKey) -> EmbedRecord {
        let b = self.band();
        EmbedRecord {
            key,
            wdr_db: self.wdr_db,
            gamma: self.gamma,
            scale_index: self.scale,
            subband_index: self.index,
            rows: b.rows(),
            cols: b.cols(),
        }
    }

    /// Resynthesised image before pixel rounding.
    pub fn embed_real(&self, t: &Transform, key: WatermarkKey) -> Result<Grid2D> {
        let mut c = self.coeffs.clone();
        *c.band_mut(self.scale, self.index).expect("selected band") = self.marked_band(key);
        t.synthesize(&c)
    }

    /// Watermarked 8-bit image and its record.
    pub fn embed(&self, t: &Transform, key: WatermarkKey) -> Result<(ImageU8, EmbedRecord)> {
        let x = self.embed_real(t, key)?;
        Ok((ImageU8::from_grid(&x), self.record(key)))
    }
}

/// Embed in an arbitrary transform domain.
pub fn embed_in(t: &Transform, img: &ImageU8, key: WatermarkKey, wdr_db: f64) -> Result<(ImageU8, EmbedRecord)> {
    Host::new(t, img, wdr_db)?.embed(t, key)
}

/// Contourlet-domain embedding with the given directional levels.
pub fn embed(
    img: &ImageU8,
    key: WatermarkKey,
    wdr_db: f64,
    dir_levels: &[usize],
    filters: &FilterSet,
) -> Result<(ImageU8, EmbedRecord)> {
    let t = Transform::contourlet(img.rows(), img.cols(), dir_levels, filters.clone())?;
    embed_in(&t, img, key, wdr_db)
}
