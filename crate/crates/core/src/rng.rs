//! Counter-based random streams.
//!
//! Stream `i` of master seed `s` has key `mix(s ^ mix(i + STREAM_SALT))`,
//! and its `k`-th output (k = 1, 2, ...) is `mix(key + k * GOLDEN)`, where
//! `mix` is the SplitMix64 finaliser. Any output can therefore be computed
//! from `(s, i, k)` alone, so replications are independent of scheduling.
//!
//! Uniforms take the top 53 bits: `((x >> 11) + 0.5) / 2^53`, in (0, 1).
//! Normal variates use the inverse distribution function
//! ([`crate::special::norm_quantile`], Wichura's AS 241), one uniform each.

use crate::special::norm_quantile;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x632B_E59B_D9B4_E019;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of stream `stream` under master seed `seed`.
#[inline]
pub fn stream_key(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(STREAM_SALT)))
}

#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Stream {
            key: stream_key(seed, stream),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        norm_quantile(self.uniform())
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Exponential with unit rate.
    pub fn exponential(&mut self) -> f64 {
        -self.uniform().ln()
    }

    /// Gamma(shape, 1) by Marsaglia and Tsang's squeeze method; shapes
    /// below one are boosted with `U^(1/shape)`.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let boost = self.uniform().powf(shape.recip());
            return self.gamma(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = (9.0 * d).sqrt().recip();
        loop {
            let x = self.standard_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Beta(a, b) as `G_a / (G_a + G_b)`.
    pub fn beta(&mut self, a: f64, b: f64) -> f64 {
        let x = self.gamma(a);
        let y = self.gamma(b);
        x / (x + y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = Stream::new(7, 3);
        let mut b = Stream::new(7, 3);
        let mut c = Stream::new(7, 4);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn output_is_a_function_of_seed_stream_counter() {
        let mut s = Stream::new(11, 5);
        s.next_u64();
        let second = s.next_u64();
        let direct = mix64(stream_key(11, 5).wrapping_add(2u64.wrapping_mul(GOLDEN)));
        assert_eq!(second, direct);
    }

    #[test]
    fn uniform_moments() {
        let mut s = Stream::new(1, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4e-3);
    }

    #[test]
    fn beta_moments() {
        let mut s = Stream::new(2, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.beta(3.0, 3.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Beta(3,3): mean 1/2, variance 1/28
        assert!((mean - 0.5).abs() < 5.0 * (1.0 / 28.0 / n as f64).sqrt());
        assert!((var - 1.0 / 28.0).abs() < 1e-3);
        let small: f64 = (0..n).map(|_| s.gamma(0.5)).sum::<f64>() / n as f64;
        assert!((small - 0.5).abs() < 0.02);
    }
}
