//! Counter-based random numbers.
//!
//! Every variate is a pure function of `(key, stream, index)`, so any batch
//! of draws can be regenerated on any thread without sequential state.
//! The block cipher is Philox4x32-10 (Salmon et al., 2011).

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

#[inline(always)]
fn round(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let (hi0, lo0) = mulhilo(PHILOX_M0, ctr[0]);
    let (hi1, lo1) = mulhilo(PHILOX_M1, ctr[2]);
    [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0]
}

/// Philox4x32 with 10 rounds.
#[inline]
pub fn philox4x32_10(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for i in 0..10 {
        if i > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        ctr = round(ctr, key);
    }
    ctr
}

/// SplitMix64 finalizer; used to derive child keys from a seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit key for child `index` of `seed`.
pub fn derive_key(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

/// Maps 52 random bits to the open interval (0, 1), symmetric about 1/2.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// A keyed counter-based source of uniform pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    /// Two independent uniforms on (0, 1) for counter `(stream, index)`.
    #[inline]
    pub fn uniform_pair(&self, stream: u64, index: u64) -> (f64, f64) {
        let out = philox4x32_10(
            [
                index as u32,
                (index >> 32) as u32,
                stream as u32,
                (stream >> 32) as u32,
            ],
            self.key,
        );
        let a = (u64::from(out[0]) << 32) | u64::from(out[1]);
        let b = (u64::from(out[2]) << 32) | u64::from(out[3]);
        (open_unit(a), open_unit(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution (kat_vectors).
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32_10([0; 4], [0; 2]),
            [0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8]
        );
        assert_eq!(
            philox4x32_10([0xffffffff; 4], [0xffffffff; 2]),
            [0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd]
        );
        assert_eq!(
            philox4x32_10(
                [0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344],
                [0xa4093822, 0x299f31d0]
            ),
            [0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1]
        );
    }

    #[test]
    fn uniforms_in_open_interval() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
        assert_eq!(open_unit(0), 1.0 - open_unit(u64::MAX));
    }

    #[test]
    fn streams_are_distinct() {
        let rng = CounterRng::new(42);
        assert_eq!(rng.uniform_pair(3, 7), rng.uniform_pair(3, 7));
        assert_ne!(rng.uniform_pair(3, 7), rng.uniform_pair(4, 7));
        assert_ne!(rng.uniform_pair(3, 7), rng.uniform_pair(3, 8));
        assert_ne!(
            rng.uniform_pair(3, 7),
            CounterRng::new(43).uniform_pair(3, 7)
        );
    }

    #[test]
    fn derived_keys_differ() {
        let keys: std::collections::HashSet<u64> = (0..1000).map(|i| derive_key(7, i)).collect();
        assert_eq!(keys.len(), 1000);
    }
}
