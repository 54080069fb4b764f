//! Laplacian pyramid with symmetric boundary extension.
//!
//! Each level lowpass-filters and decimates by two in both directions; the
//! bandpass image is the difference between the input and the interpolated
//! coarse image, so reconstruction is exact for any filter pair.

use alloc::vec;
use alloc::vec::Vec;

use super::reflect;
use crate::error::{shape_err, Result};
use crate::filters::{Filter, FilterBank};
use crate::grid::Grid2D;

/// Bandpass images ordered finest first, plus the coarse lowpass.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub bandpass: Vec<Grid2D>,
    pub lowpass: Grid2D,
}

fn check_dims(rows: usize, cols: usize, levels: usize) -> Result<()> {
    let m = 1usize << levels;
    if rows == 0 || cols == 0 || rows % m != 0 || cols % m != 0 {
        return Err(shape_err!("{rows}x{cols} is not divisible by 2^{levels}"));
    }
    Ok(())
}

/// Filter each row with `f` and keep even samples.
fn reduce_rows(x: &Grid2D, f: &Filter) -> Grid2D {
    let (r, c) = (x.rows(), x.cols());
    let oc = c / 2;
    let a = f.anchor as isize;
    let mut out = vec![0.0; r * oc];
    for i in 0..r {
        let row = x.row(i);
        let orow = &mut out[i * oc..(i + 1) * oc];
        for (n, o) in orow.iter_mut().enumerate() {
            let base = 2 * n as isize - a;
            let mut acc = 0.0;
            for (k, &t) in f.taps.iter().enumerate() {
                acc += t * row[reflect(base + k as isize, c)];
            }
            *o = acc;
        }
    }
    Grid2D::from_vec(r, oc, out).expect("shape")
}

/// Upsample each row by two (zeros at odd positions) and filter with `f`.
fn expand_rows(x: &Grid2D, f: &Filter, out_cols: usize) -> Grid2D {
    let r = x.rows();
    let a = f.anchor as isize;
    let mut out = vec![0.0; r * out_cols];
    for i in 0..r {
        let row = x.row(i);
        let orow = &mut out[i * out_cols..(i + 1) * out_cols];
        for (n, o) in orow.iter_mut().enumerate() {
            let base = n as isize - a;
            let mut acc = 0.0;
            for (k, &t) in f.taps.iter().enumerate() {
                let m = reflect(base + k as isize, out_cols);
                if m % 2 == 0 {
                    acc += t * row[m / 2];
                }
            }
            *o = acc;
        }
    }
    Grid2D::from_vec(r, out_cols, out).expect("shape")
}

pub(crate) fn reduce(x: &Grid2D, fb: &FilterBank) -> Grid2D {
    let h = &fb.analysis_lowpass;
    reduce_rows(&reduce_rows(x, h).transpose(), h).transpose()
}

pub(crate) fn expand(c: &Grid2D, fb: &FilterBank, rows: usize, cols: usize) -> Grid2D {
    let g = &fb.synthesis_lowpass;
    expand_rows(&expand_rows(c, g, cols).transpose(), g, rows).transpose()
}

pub fn lp_analyze(x: &Grid2D, levels: usize, fb: &FilterBank) -> Result<Pyramid> {
    check_dims(x.rows(), x.cols(), levels)?;
    let mut bandpass = Vec::with_capacity(levels);
    let mut cur = x.clone();
    for _ in 0..levels {
        let c = reduce(&cur, fb);
        let p = expand(&c, fb, cur.rows(), cur.cols());
        bandpass.push(cur.zip_map(&p, |a, b| a - b)?);
        cur = c;
    }
    Ok(Pyramid { bandpass, lowpass: cur })
}

pub fn lp_synthesize(p: &Pyramid, fb: &FilterBank) -> Result<Grid2D> {
    let mut cur = p.lowpass.clone();
    for d in p.bandpass.iter().rev() {
        if d.rows() != 2 * cur.rows() || d.cols() != 2 * cur.cols() {
            return Err(shape_err!(
                "bandpass {}x{} does not match coarse {}x{}",
                d.rows(),
                d.cols(),
                cur.rows(),
                cur.cols()
            ));
        }
        let e = expand(&cur, fb, d.rows(), d.cols());
        cur = e.zip_map(d, |a, b| a + b)?;
    }
    Ok(cur)
}
