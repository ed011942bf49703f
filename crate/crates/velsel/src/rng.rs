//! Counter-based random number generation.
//!
//! Every draw is a pure function of `(seed, atom index, stream counter)`, so
//! ensembles regenerate bit-identically no matter how the work is split
//! across threads. The generator is two rounds of the SplitMix64 finalizer
//! over the mixed key; it is fixed — golden tests pin its outputs — and not
//! cryptographic.

use std::f64::consts::TAU;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The raw 64-bit output for one `(seed, atom, stream)` triple.
#[inline]
pub fn counter_u64(seed: u64, atom: u64, stream: u64) -> u64 {
    let keyed = mix64(seed ^ 0x9e37_79b9_7f4a_7c15 ^ atom.wrapping_mul(0xd134_2543_de82_ef95));
    mix64(keyed ^ stream.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// Uniform draw in the half-open interval (0, 1]. Never returns 0, so it is
/// safe under a logarithm.
#[inline]
pub fn uniform_open01(seed: u64, atom: u64, stream: u64) -> f64 {
    (((counter_u64(seed, atom, stream) >> 11) + 1) as f64) * f64::from_bits(0x3ca0_0000_0000_0000)
    // 2^-53
}

/// A pair of independent standard-normal draws (Box–Muller) for one atom.
/// `pair` indexes consecutive normal pairs; pair k consumes uniform streams
/// 2k and 2k+1.
#[inline]
pub fn standard_normal_pair(seed: u64, atom: u64, pair: u64) -> (f64, f64) {
    let u1 = uniform_open01(seed, atom, 2 * pair);
    let u2 = uniform_open01(seed, atom, 2 * pair + 1);
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}
