//! SplitMix64 generator used for watermark sequences and noise.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64. The output stream is fixed for a given seed on every
/// platform.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed, spare: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// `+1` when the top bit of the next output is set, `-1` otherwise.
    #[inline]
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller, both values used).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(2.0 * core::f64::consts::PI * u2);
        self.spare = Some(r * s);
        r * c
    }
}

/// Derive `n` distinct sub-seeds from a master seed.
pub fn derive_seeds(master: u64, n: usize) -> alloc::vec::Vec<u64> {
    let mut g = SplitMix64::new(master);
    let mut out = alloc::vec::Vec::with_capacity(n);
    while out.len() < n {
        let s = g.next_u64();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}
