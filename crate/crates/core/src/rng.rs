//! Counter-based random streams.
//!
//! A [`Stream`] is keyed by `(seed, index, tag)` and produces the value for
//! draw `k` as a pure function of the key and `k`. Nothing is shared between
//! samples, so draws are identical whatever order samples are generated in and
//! however many workers generate them.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit tag for a field name (FNV-1a).
pub const fn tag(name: &str) -> u64 {
    let bytes = name.as_bytes();
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    let mut i = 0;
    while i < bytes.len() {
        h ^= bytes[i] as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
        i += 1;
    }
    h
}

#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64, index: u64, tag: u64) -> Self {
        let mut key = mix64(seed ^ GOLDEN);
        key = mix64(key ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        key = mix64(key ^ tag.wrapping_mul(0xA076_1D64_78BD_642F));
        Self { key, counter: 0 }
    }

    /// Value of draw `k` without advancing the stream.
    #[inline]
    pub fn at(&self, k: u64) -> u64 {
        mix64(self.key.wrapping_add(k.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi]`; returns `lo` exactly when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.next_f64();
        if hi <= lo {
            lo
        } else {
            (lo + u * (hi - lo)).min(hi)
        }
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below() needs a non-empty range");
        // Rejection sampling keeps the result exactly uniform.
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_keyed() {
        let mut a = Stream::new(7, 3, tag("pose"));
        let mut b = Stream::new(7, 3, tag("pose"));
        let mut c = Stream::new(7, 4, tag("pose"));
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
        assert_eq!(a.at(0), xs[0]);
    }

    #[test]
    fn tags_differ() {
        assert_ne!(tag("pose"), tag("light"));
        assert_ne!(Stream::new(1, 1, tag("a")).at(0), Stream::new(1, 1, tag("b")).at(0));
    }

    #[test]
    fn unit_interval_moments() {
        let mut s = Stream::new(42, 0, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.next_f64()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(xs.iter().all(|&x| (0.0..1.0).contains(&x)));
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn below_covers_range_evenly() {
        let mut s = Stream::new(5, 5, 5);
        let mut hist = [0usize; 6];
        for _ in 0..60_000 {
            hist[s.below(6) as usize] += 1;
        }
        for h in hist {
            assert!((h as i64 - 10_000).abs() < 500, "{hist:?}");
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<usize> = (0..50).collect();
        Stream::new(9, 0, 1).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
