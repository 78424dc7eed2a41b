//! Deterministic random streams.
//!
//! Every stochastic routine takes an explicit stream. A stream is identified by
//! a `(seed, stream_id)` pair; parallel work items must use distinct ids.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random stream used across the crate.
pub type RngStream = ChaCha8Rng;

/// Open stream `stream_id` of the generator seeded with `seed`.
pub fn seeded_rng(seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Derive a stream id for item `index` of a work domain.
///
/// Domains are small constants owned by the calling module, so ids from
/// different pipeline stages never collide.
pub fn stream_id(domain: u32, index: u64) -> u64 {
    ((domain as u64) << 40) ^ index
}

/// Draw from N(0, 1).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draw from U[0, 1).
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_repeats() {
        let mut a = seeded_rng(7, 3);
        let mut b = seeded_rng(7, 3);
        for _ in 0..100 {
            assert_eq!(standard_normal(&mut a), standard_normal(&mut b));
        }
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 100_000;
        let mut a = seeded_rng(11, 0);
        let mut b = seeded_rng(11, 1);
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut a)).collect();
        let ys: Vec<f64> = (0..n).map(|_| standard_normal(&mut b)).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx).powi(2);
            syy += (y - my).powi(2);
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }

    #[test]
    fn normal_moments() {
        let n = 100_000;
        let mut r = seeded_rng(1, 0);
        let xs: Vec<f64> = (0..n).map(|_| standard_normal(&mut r)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(m.abs() < 0.02);
        assert!((v - 1.0).abs() < 0.02);
    }

    #[test]
    fn uniform_range() {
        let mut r = seeded_rng(2, 9);
        for _ in 0..1000 {
            let u = uniform(&mut r);
            assert!((0.0..1.0).contains(&u));
        }
    }
}
