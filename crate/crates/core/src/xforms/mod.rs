//! Multiscale transforms: Laplacian pyramid, directional filter bank,
//! their combination (the contourlet transform) and a separable wavelet
//! transform used as a baseline domain.

pub mod contourlet;
pub mod dfb;
pub mod dwt;
pub mod lp;

pub use contourlet::{contourlet_analyze, contourlet_synthesize, Contourlet, ContourletPlan};
pub use dfb::{dfb_analyze, dfb_synthesize, DfbPlan};
pub use dwt::{dwt_analyze, dwt_synthesize, Dwt};
pub use lp::{lp_analyze, lp_synthesize, Pyramid};

/// Whole-sample symmetric reflection of `i` into `0..n`.
#[inline]
pub(crate) fn reflect(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

#[cfg(test)]
mod tests {
    use super::reflect;

    #[test]
    fn reflection_indices() {
        let got: alloc::vec::Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(got, alloc::vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(reflect(-5, 1), 0);
    }
}
