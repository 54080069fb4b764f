//! Separable orthogonal wavelet transform with periodic extension.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Result};
use crate::filters::FilterBank;
use crate::grid::Grid2D;

/// Detail subbands per level (finest first) and the final approximation.
///
/// `details[l]` holds `[lh, hl, hh]`: lowpass rows/highpass columns,
/// highpass rows/lowpass columns, highpass both.
#[derive(Debug, Clone, PartialEq)]
pub struct Dwt {
    pub details: Vec<[Grid2D; 3]>,
    pub approx: Grid2D,
}

fn analyze_rows(x: &Grid2D, h: &[f64], g: &[f64]) -> (Grid2D, Grid2D) {
    let (r, c) = (x.rows(), x.cols());
    let oc = c / 2;
    let mut lo = vec![0.0; r * oc];
    let mut hi = vec![0.0; r * oc];
    for i in 0..r {
        let row = x.row(i);
        for n in 0..oc {
            let (mut a, mut d) = (0.0, 0.0);
            for k in 0..h.len() {
                let v = row[(2 * n + k) % c];
                a += h[k] * v;
                d += g[k] * v;
            }
            lo[i * oc + n] = a;
            hi[i * oc + n] = d;
        }
    }
    (Grid2D::from_vec(r, oc, lo).expect("shape"), Grid2D::from_vec(r, oc, hi).expect("shape"))
}

fn synthesize_rows(lo: &Grid2D, hi: &Grid2D, h: &[f64], g: &[f64]) -> Grid2D {
    let (r, hc) = (lo.rows(), lo.cols());
    let c = 2 * hc;
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        let (a, d) = (lo.row(i), hi.row(i));
        let orow = &mut out[i * c..(i + 1) * c];
        for n in 0..hc {
            for k in 0..h.len() {
                orow[(2 * n + k) % c] += h[k] * a[n] + g[k] * d[n];
            }
        }
    }
    Grid2D::from_vec(r, c, out).expect("shape")
}

pub fn dwt_analyze(x: &Grid2D, levels: usize, fb: &FilterBank) -> Result<Dwt> {
    let m = 1usize << levels;
    if x.rows() == 0 || x.rows() % m != 0 || x.cols() % m != 0 {
        return Err(shape_err!("{}x{} is not divisible by 2^{levels}", x.rows(), x.cols()));
    }
    let h = &fb.analysis_lowpass.taps;
    let g = &fb.analysis_highpass.taps;
    let mut details = Vec::with_capacity(levels);
    let mut cur = x.clone();
    for _ in 0..levels {
        let (l, hh_rows) = analyze_rows(&cur, h, g);
        let (ll, lh) = analyze_rows(&l.transpose(), h, g);
        let (hl, hh) = analyze_rows(&hh_rows.transpose(), h, g);
        details.push([lh.transpose(), hl.transpose(), hh.transpose()]);
        cur = ll.transpose();
    }
    Ok(Dwt { details, approx: cur })
}

pub fn dwt_synthesize(d: &Dwt, fb: &FilterBank) -> Result<Grid2D> {
    let h = &fb.synthesis_lowpass.taps;
    let g = &fb.synthesis_highpass.taps;
    let mut cur = d.approx.clone();
    for [lh, hl, hh] in d.details.iter().rev() {
        if !lh.same_shape(&cur) || !hl.same_shape(&cur) || !hh.same_shape(&cur) {
            return Err(shape_err!("detail shapes do not match approximation"));
        }
        let l = synthesize_rows(&cur.transpose(), &lh.transpose(), h, g).transpose();
        let hr = synthesize_rows(&hl.transpose(), &hh.transpose(), h, g).transpose();
        cur = synthesize_rows(&l, &hr, h, g);
    }
    Ok(cur)
}
