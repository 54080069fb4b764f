//! Heteroscedasticity tests on every finest-scale contourlet subband.

use ctmark_core::embedder::{Decomposition, Transform};
use ctmark_core::garch2d::{lm_test_2d, lm_test_engle, scan_series, Garch2DOrder, LmTestResult, ScanDir};
use ctmark_core::{Grid2D, Result};
use serde::{Deserialize, Serialize};

/// One row of the table: the three 1-D scans and the 2-D test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandLm {
    pub scale: usize,
    pub subband: usize,
    pub vertical: LmTestResult,
    pub horizontal: LmTestResult,
    pub diagonal: LmTestResult,
    pub two_dimensional: LmTestResult,
}

impl SubbandLm {
    pub fn all(&self) -> [&LmTestResult; 4] {
        [&self.vertical, &self.horizontal, &self.diagonal, &self.two_dimensional]
    }
}

pub fn lm_row(band: &Grid2D, lags: usize, alpha: f64) -> Result<[LmTestResult; 4]> {
    Ok([
        lm_test_engle(&scan_series(band, ScanDir::Vertical), lags, alpha)?,
        lm_test_engle(&scan_series(band, ScanDir::Horizontal), lags, alpha)?,
        lm_test_engle(&scan_series(band, ScanDir::Diagonal), lags, alpha)?,
        lm_test_2d(band, Garch2DOrder::unit(), alpha)?,
    ])
}

/// Tests for all subbands of the finest scale of `img`.
pub fn lm_table(t: &Transform, img: &Grid2D, lags: usize, alpha: f64) -> Result<Vec<SubbandLm>> {
    let d = t.analyze(img)?;
    let scale = match &d {
        Decomposition::Contourlet(c) => c.finest(),
        // wavelet details are stored finest first
        Decomposition::Wavelet(_) => 0,
    };
    let mut out = Vec::new();
    let mut k = 0;
    while let Some(band) = d.band(scale, k) {
        let [vertical, horizontal, diagonal, two_dimensional] = lm_row(band, lags, alpha)?;
        out.push(SubbandLm { scale, subband: k, vertical, horizontal, diagonal, two_dimensional });
        k += 1;
    }
    Ok(out)
}

/// Plain-text rendering with one line per subband.
pub fn render(rows: &[SubbandLm]) -> String {
    let mut s = String::from("scale subband | vertical H p stat | horizontal H p stat | diagonal H p stat | two-dimensional H p stat\n");
    for r in rows {
        s.push_str(&format!("{:5} {:7}", r.scale, r.subband));
        for t in r.all() {
            s.push_str(&format!(" | {} {:9.3e} {:10.2}", t.h as u8, t.p_value, t.stat));
        }
        s.push('\n');
    }
    s
}
