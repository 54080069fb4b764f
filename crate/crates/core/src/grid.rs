//! Dense row-major grids of `f64` and 8-bit images.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Result};

/// Row-major 2D array of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid2D {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid2D { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Self {
        Grid2D { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err!("{} values for a {}x{} grid", data.len(), rows, cols));
        }
        Ok(Grid2D { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Grid2D { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Grid2D {
        Grid2D { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Grid2D> {
        if !self.same_shape(other) {
            return Err(shape_err!(
                "{}x{} vs {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            ));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Grid2D { rows: self.rows, cols: self.cols, data })
    }

    pub fn transpose(&self) -> Grid2D {
        let mut out = Grid2D::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    /// Sum of squares.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Mean of squares.
    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.energy() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Grid2D) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageU8 {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl ImageU8 {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err!("{} pixels for a {}x{} image", data.len(), rows, cols));
        }
        Ok(ImageU8 { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, v: u8) -> Self {
        ImageU8 { rows, cols, data: vec![v; rows * cols] }
    }

    /// Rounds half away from zero and clamps to `0..=255`.
    pub fn from_grid(g: &Grid2D) -> Self {
        ImageU8 { rows: g.rows, cols: g.cols, data: g.data.iter().map(|&v| to_pixel(v)).collect() }
    }

    pub fn to_grid(&self) -> Grid2D {
        Grid2D {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&p| p as f64).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }
}

/// Round half away from zero and clamp to the 8-bit range.
#[inline]
pub fn to_pixel(v: f64) -> u8 {
    let r = libm::round(v);
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Value reported by [`psnr`] for identical images.
pub const PSNR_IDENTICAL: f64 = 999.0;

/// Peak signal-to-noise ratio in dB with peak 255.
pub fn psnr(a: &ImageU8, b: &ImageU8) -> Result<f64> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(shape_err!("{}x{} vs {}x{}", a.rows, a.cols, b.rows, b.cols));
    }
    let n = a.data.len();
    if n == 0 {
        return Err(shape_err!("empty image"));
    }
    let sse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(PSNR_IDENTICAL);
    }
    let mse = sse / n as f64;
    Ok(10.0 * libm::log10(255.0 * 255.0 / mse))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_rounding_is_half_away_from_zero() {
        assert_eq!(to_pixel(2.5), 3);
        assert_eq!(to_pixel(2.49), 2);
        assert_eq!(to_pixel(-0.5), 0);
        assert_eq!(to_pixel(254.5), 255);
        assert_eq!(to_pixel(300.0), 255);
        assert_eq!(to_pixel(f64::NAN), 0);
    }

    #[test]
    fn psnr_known_value() {
        let a = ImageU8::filled(4, 4, 100);
        let mut d = a.clone().into_vec();
        d[0] = 116;
        let b = ImageU8::from_vec(4, 4, d).unwrap();
        // mse = 256 / 16 = 16
        let want = 10.0 * (255.0f64 * 255.0 / 16.0).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-12);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_IDENTICAL);
    }

    #[test]
    fn population_variance() {
        let g = Grid2D::from_vec(2, 2, alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((g.variance() - 1.25).abs() < 1e-15);
        assert!((g.mean_power() - 7.5).abs() < 1e-15);
    }
}
