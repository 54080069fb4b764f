//! FIR filter taps and the text format they are stored in.
//!
//! A coefficient file holds `#` comment lines, then the anchor index on the
//! first non-comment line, then one tap per line.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

pub const CDF97_ANALYSIS_LOWPASS: &str = include_str!("../filters/cdf97_analysis_lowpass.txt");
pub const CDF97_SYNTHESIS_LOWPASS: &str = include_str!("../filters/cdf97_synthesis_lowpass.txt");
pub const PKVA12_LADDER: &str = include_str!("../filters/pkva12_ladder.txt");
pub const DB4_LOWPASS: &str = include_str!("../filters/db4_lowpass.txt");

/// File names used when loading a filter directory.
pub const FILE_NAMES: [&str; 4] = [
    "cdf97_analysis_lowpass.txt",
    "cdf97_synthesis_lowpass.txt",
    "pkva12_ladder.txt",
    "db4_lowpass.txt",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub taps: Vec<f64>,
    pub anchor: usize,
}

impl Filter {
    pub fn new(taps: Vec<f64>, anchor: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::FilterParse("no taps".into()));
        }
        if anchor >= taps.len() {
            return Err(Error::FilterParse(format!("anchor {anchor} outside {} taps", taps.len())));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::FilterParse("non-finite tap".into()));
        }
        Ok(Filter { taps, anchor })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut anchor = None;
        let mut taps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if anchor.is_none() {
                let a = line.parse::<usize>().map_err(|_| {
                    Error::FilterParse(format!("line {}: expected anchor index, got {line:?}", lineno + 1))
                })?;
                anchor = Some(a);
                continue;
            }
            let t = line.parse::<f64>().map_err(|_| {
                Error::FilterParse(format!("line {}: expected a tap, got {line:?}", lineno + 1))
            })?;
            taps.push(t);
        }
        let anchor = anchor.ok_or_else(|| Error::FilterParse("missing anchor line".into()))?;
        Filter::new(taps, anchor)
    }

    pub fn to_text(&self, comment: &str) -> String {
        let mut s = String::new();
        for l in comment.lines() {
            let _ = writeln!(s, "# {l}");
        }
        let _ = writeln!(s, "{}", self.anchor);
        for t in &self.taps {
            let _ = writeln!(s, "{t:?}");
        }
        s
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.taps.len();
        (0..n / 2).all(|k| (self.taps[k] - self.taps[n - 1 - k]).abs() <= 1e-12 * self.taps[k].abs().max(1.0))
    }

    /// `(-1)^k h[k]`, reindexed about the anchor.
    fn modulated(&self) -> Filter {
        let taps = self
            .taps
            .iter()
            .enumerate()
            .map(|(k, &t)| if (k + self.anchor) % 2 == 0 { t } else { -t })
            .collect();
        Filter { taps, anchor: self.anchor }
    }
}

/// Analysis and synthesis filters of a two-channel bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub analysis_lowpass: Filter,
    pub analysis_highpass: Filter,
    pub synthesis_lowpass: Filter,
    pub synthesis_highpass: Filter,
}

impl FilterBank {
    /// Biorthogonal bank from its two lowpass filters; the highpasses are
    /// the cross-modulated lowpasses.
    pub fn biorthogonal(analysis_lowpass: Filter, synthesis_lowpass: Filter) -> Result<Self> {
        if analysis_lowpass.len() % 2 == 0 || synthesis_lowpass.len() % 2 == 0 {
            return Err(Error::FilterParse("biorthogonal lowpasses must have odd length".into()));
        }
        if !analysis_lowpass.is_symmetric() || !synthesis_lowpass.is_symmetric() {
            return Err(Error::FilterParse("biorthogonal lowpasses must be symmetric".into()));
        }
        Ok(FilterBank {
            analysis_highpass: synthesis_lowpass.modulated(),
            synthesis_highpass: analysis_lowpass.modulated(),
            analysis_lowpass,
            synthesis_lowpass,
        })
    }

    /// Orthogonal bank from its lowpass: `g[k] = (-1)^k h[L-1-k]`.
    pub fn orthogonal(lowpass: Filter) -> Result<Self> {
        let n = lowpass.len();
        if n % 2 != 0 {
            return Err(Error::FilterParse("orthogonal lowpass must have even length".into()));
        }
        let hp: Vec<f64> = (0..n)
            .map(|k| {
                let v = lowpass.taps[n - 1 - k];
                if k % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let highpass = Filter { taps: hp, anchor: 0 };
        Ok(FilterBank {
            analysis_lowpass: lowpass.clone(),
            analysis_highpass: highpass.clone(),
            synthesis_lowpass: lowpass,
            synthesis_highpass: highpass,
        })
    }

    pub fn cdf97() -> Self {
        let h = Filter::parse(CDF97_ANALYSIS_LOWPASS).expect("embedded filter");
        let g = Filter::parse(CDF97_SYNTHESIS_LOWPASS).expect("embedded filter");
        FilterBank::biorthogonal(h, g).expect("embedded filter")
    }

    pub fn db4() -> Self {
        FilterBank::orthogonal(Filter::parse(DB4_LOWPASS).expect("embedded filter")).expect("embedded filter")
    }
}

/// Even-length symmetric filter used by the lifting steps of the quincunx
/// fan filter bank. Only the right half is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderFilter {
    half: Vec<f64>,
}

impl LadderFilter {
    pub fn from_filter(f: &Filter) -> Result<Self> {
        let n = f.len();
        if n % 2 != 0 || !f.is_symmetric() || f.anchor != n / 2 {
            return Err(Error::FilterParse(
                "ladder filter must be even-length, symmetric and anchored right of centre".into(),
            ));
        }
        Ok(LadderFilter { half: f.taps[n / 2..].to_vec() })
    }

    pub fn pkva12() -> Self {
        LadderFilter::from_filter(&Filter::parse(PKVA12_LADDER).expect("embedded filter"))
            .expect("embedded filter")
    }

    /// Taps `v[0..]` with `v[0]` adjacent to the centre.
    pub fn half(&self) -> &[f64] {
        &self.half
    }
}

/// All filters used by the transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSet {
    pub pyramid: FilterBank,
    pub ladder: LadderFilter,
    pub wavelet: FilterBank,
}

impl Default for FilterSet {
    fn default() -> Self {
        FilterSet { pyramid: FilterBank::cdf97(), ladder: LadderFilter::pkva12(), wavelet: FilterBank::db4() }
    }
}

impl FilterSet {
    /// Build from file contents ordered as [`FILE_NAMES`].
    pub fn from_texts(texts: [&str; 4]) -> Result<Self> {
        let h = Filter::parse(texts[0])?;
        let g = Filter::parse(texts[1])?;
        let l = Filter::parse(texts[2])?;
        let d = Filter::parse(texts[3])?;
        Ok(FilterSet {
            pyramid: FilterBank::biorthogonal(h, g)?,
            ladder: LadderFilter::from_filter(&l)?,
            wavelet: FilterBank::orthogonal(d)?,
        })
    }
}
