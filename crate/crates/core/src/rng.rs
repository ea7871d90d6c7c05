//! Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//!
//! Every normal draw is a pure function of `(seed, path, step)`, so paths can
//! be simulated in any order or split across threads without changing a bit
//! of the result.

use libm::{cos, log, sin, sqrt};

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

#[inline]
fn round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let (hi0, lo0) = mulhilo(M0, ctr[0]);
    let (hi1, lo1) = mulhilo(M1, ctr[2]);
    [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0]
}

/// One Philox4x32 block with 10 rounds.
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for i in 0..10 {
        if i > 0 {
            key[0] = key[0].wrapping_add(W0);
            key[1] = key[1].wrapping_add(W1);
        }
        ctr = round(ctr, key);
    }
    ctr
}

/// Uniform on `(0, 1]` from two 32-bit words, 53 bits of resolution.
#[inline]
fn unit_open_closed(hi: u32, lo: u32) -> f64 {
    let x = (u64::from(hi) << 32) | u64::from(lo);
    ((x >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draws addressed by `(path, step)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalStream {
    key: [u32; 2],
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream { key: [seed as u32, (seed >> 32) as u32] }
    }

    /// Box–Muller pair for `(path, step / 2)`; even steps take the cosine
    /// branch, odd steps the sine branch.
    #[inline]
    pub fn normal(&self, path: u64, step: u64) -> f64 {
        let pair = step >> 1;
        let w = philox4x32_10([path as u32, (path >> 32) as u32, pair as u32, (pair >> 32) as u32], self.key);
        let r = sqrt(-2.0 * log(unit_open_closed(w[0], w[1])));
        let theta = core::f64::consts::TAU * unit_open_closed(w[2], w[3]);
        if step & 1 == 0 {
            r * cos(theta)
        } else {
            r * sin(theta)
        }
    }

    /// Both members of the pair at once.
    #[inline]
    pub fn normal_pair(&self, path: u64, pair: u64) -> (f64, f64) {
        let w = philox4x32_10([path as u32, (path >> 32) as u32, pair as u32, (pair >> 32) as u32], self.key);
        let r = sqrt(-2.0 * log(unit_open_closed(w[0], w[1])));
        let theta = core::f64::consts::TAU * unit_open_closed(w[2], w[3]);
        (r * cos(theta), r * sin(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors distributed with Random123.
    #[test]
    fn known_answers() {
        assert_eq!(philox4x32_10([0; 4], [0; 2]), [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]);
        assert_eq!(
            philox4x32_10([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32_10([0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344], [0xa409_3822, 0x299f_31d0]),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn pair_matches_single_draws() {
        let s = NormalStream::new(42);
        let (a, b) = s.normal_pair(7, 3);
        assert_eq!(a, s.normal(7, 6));
        assert_eq!(b, s.normal(7, 7));
    }

    #[test]
    fn uniform_never_zero() {
        assert_eq!(unit_open_closed(0, 0), 1.0 / 9_007_199_254_740_992.0);
        assert_eq!(unit_open_closed(u32::MAX, u32::MAX), 1.0);
    }

    #[test]
    fn moments_are_standard() {
        let s = NormalStream::new(1);
        let n = 200_000u64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..n {
            let z = s.normal(i, 0);
            m1 += z;
            m2 += z * z;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 0.01 && (m2 - 1.0).abs() < 0.015, "{m1} {m2}");
    }
}
