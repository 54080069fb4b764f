//! Contourlet transform: Laplacian pyramid followed by a directional filter
//! bank on every bandpass image.

use alloc::vec::Vec;

use super::dfb::DfbPlan;
use super::lp::{lp_analyze, lp_synthesize, Pyramid};
use crate::error::{param_err, shape_err, Result};
use crate::filters::FilterSet;
use crate::grid::Grid2D;

/// Contourlet coefficients. `subbands[s]` holds the directional subbands of
/// scale `s`, coarsest scale first.
#[derive(Debug, Clone, PartialEq)]
pub struct Contourlet {
    pub lowpass: Grid2D,
    pub subbands: Vec<Vec<Grid2D>>,
    pub dir_levels: Vec<usize>,
}

impl Contourlet {
    pub fn num_scales(&self) -> usize {
        self.subbands.len()
    }

    /// Index of the finest scale.
    pub fn finest(&self) -> usize {
        self.subbands.len() - 1
    }

    pub fn subband(&self, scale: usize, index: usize) -> Option<&Grid2D> {
        self.subbands.get(scale)?.get(index)
    }

    pub fn subband_mut(&mut self, scale: usize, index: usize) -> Option<&mut Grid2D> {
        self.subbands.get_mut(scale)?.get_mut(index)
    }

    /// Total number of coefficients including the lowpass.
    pub fn num_coefficients(&self) -> usize {
        self.lowpass.len() + self.subbands.iter().flatten().map(|g| g.len()).sum::<usize>()
    }
}

/// Reusable contourlet transform for one image size.
#[derive(Debug, Clone)]
pub struct ContourletPlan {
    rows: usize,
    cols: usize,
    dir_levels: Vec<usize>,
    dfbs: Vec<DfbPlan>,
    filters: FilterSet,
}

impl ContourletPlan {
    /// `dir_levels[s]` is the directional depth of scale `s`, coarsest first.
    pub fn new(rows: usize, cols: usize, dir_levels: &[usize], filters: FilterSet) -> Result<Self> {
        if dir_levels.is_empty() {
            return Err(param_err!("at least one pyramid level is required"));
        }
        let levels = dir_levels.len();
        let m = 1usize << levels;
        if rows == 0 || cols == 0 || rows % m != 0 || cols % m != 0 {
            return Err(shape_err!("{rows}x{cols} is not divisible by 2^{levels}"));
        }
        let mut dfbs = Vec::with_capacity(levels);
        for (s, &d) in dir_levels.iter().enumerate() {
            let shrink = 1usize << (levels - 1 - s);
            dfbs.push(DfbPlan::new(rows / shrink, cols / shrink, d)?);
        }
        Ok(ContourletPlan { rows, cols, dir_levels: dir_levels.to_vec(), dfbs, filters })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dir_levels(&self) -> &[usize] {
        &self.dir_levels
    }

    pub fn filters(&self) -> &FilterSet {
        &self.filters
    }

    pub fn dfb(&self, scale: usize) -> &DfbPlan {
        &self.dfbs[scale]
    }

    pub fn analyze(&self, x: &Grid2D) -> Result<Contourlet> {
        if x.rows() != self.rows || x.cols() != self.cols {
            return Err(shape_err!("{}x{} input for a {}x{} plan", x.rows(), x.cols(), self.rows, self.cols));
        }
        let levels = self.dir_levels.len();
        let pyr = lp_analyze(x, levels, &self.filters.pyramid)?;
        let mut subbands = Vec::with_capacity(levels);
        for s in 0..levels {
            let band = &pyr.bandpass[levels - 1 - s];
            subbands.push(self.dfbs[s].analyze(band, &self.filters.ladder)?);
        }
        Ok(Contourlet { lowpass: pyr.lowpass, subbands, dir_levels: self.dir_levels.clone() })
    }

    pub fn synthesize(&self, c: &Contourlet) -> Result<Grid2D> {
        let levels = self.dir_levels.len();
        if c.subbands.len() != levels {
            return Err(shape_err!("{} scales, expected {}", c.subbands.len(), levels));
        }
        let mut bandpass = Vec::with_capacity(levels);
        for s in (0..levels).rev() {
            bandpass.push(self.dfbs[s].synthesize(&c.subbands[s], &self.filters.ladder)?);
        }
        lp_synthesize(&Pyramid { bandpass, lowpass: c.lowpass.clone() }, &self.filters.pyramid)
    }
}

pub fn contourlet_analyze(x: &Grid2D, dir_levels: &[usize], filters: &FilterSet) -> Result<Contourlet> {
    ContourletPlan::new(x.rows(), x.cols(), dir_levels, filters.clone())?.analyze(x)
}

pub fn contourlet_synthesize(c: &Contourlet, filters: &FilterSet) -> Result<Grid2D> {
    let levels = c.dir_levels.len();
    let rows = c.lowpass.rows() << levels;
    let cols = c.lowpass.cols() << levels;
    ContourletPlan::new(rows, cols, &c.dir_levels, filters.clone())?.synthesize(c)
}
