//! Streaming moment accumulators, chunked parallel Monte-Carlo, and the
//! goodness-of-fit statistics used by the verifiers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::Result;
use crate::rng::{substream, SimRng, CHUNK_SIZE};

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// A fixed-width bank of [`Moments`], one per tracked quantity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentBank(pub Vec<Moments>);

impl MomentBank {
    pub fn new(width: usize) -> Self {
        MomentBank(vec![Moments::default(); width])
    }

    pub fn push(&mut self, i: usize, x: f64) {
        self.0[i].push(x);
    }

    pub fn merge(&mut self, other: &MomentBank) {
        if self.0.is_empty() {
            self.0 = other.0.clone();
            return;
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.merge(b);
        }
    }

    pub fn get(&self, i: usize) -> &Moments {
        &self.0[i]
    }
}

/// Runs `n` Monte-Carlo samples in chunks of [`CHUNK_SIZE`]. Chunk `c` gets
/// its own stream `(seed, task, c)`; partial results are merged in chunk
/// order so the outcome does not depend on the thread count.
pub fn par_chunks<A, F, M>(seed: u64, task: &str, n: usize, chunk: F, mut merge: M) -> Option<A>
where
    A: Send,
    F: Fn(&mut SimRng, usize) -> A + Sync,
    M: FnMut(&mut A, A),
{
    let n_chunks = n.div_ceil(CHUNK_SIZE);
    let parts: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, task, c as u64);
            let count = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            chunk(&mut rng, count)
        })
        .collect();
    let mut it = parts.into_iter();
    let mut acc = it.next()?;
    for p in it {
        merge(&mut acc, p);
    }
    Some(acc)
}

/// Convenience wrapper around [`par_chunks`] for a [`MomentBank`] of the given width.
pub fn mc_moments<F>(seed: u64, task: &str, n: usize, width: usize, sample: F) -> MomentBank
where
    F: Fn(&mut SimRng, &mut MomentBank) + Sync,
{
    par_chunks(
        seed,
        task,
        n,
        |rng, count| {
            let mut bank = MomentBank::new(width);
            for _ in 0..count {
                sample(rng, &mut bank);
            }
            bank
        },
        |a, b| a.merge(&b),
    )
    .unwrap_or_else(|| MomentBank::new(width))
}

/// Fallible variant of [`mc_moments`]; the first error in chunk order wins.
pub fn try_mc_moments<F>(seed: u64, task: &str, n: usize, width: usize, sample: F) -> Result<MomentBank>
where
    F: Fn(&mut SimRng, &mut MomentBank) -> Result<()> + Sync,
{
    par_chunks(
        seed,
        task,
        n,
        |rng, count| {
            let mut bank = MomentBank::new(width);
            for _ in 0..count {
                sample(rng, &mut bank)?;
            }
            Ok(bank)
        },
        |a, b| merge_results(a, b, |x, y| x.merge(&y)),
    )
    .unwrap_or_else(|| Ok(MomentBank::new(width)))
}

/// Merges chunk results, keeping the first error.
pub fn merge_results<T>(acc: &mut Result<T>, next: Result<T>, merge: impl FnOnce(&mut T, T)) {
    match (acc.as_mut(), next) {
        (Ok(a), Ok(b)) => merge(a, b),
        (Ok(_), Err(e)) => *acc = Err(e),
        (Err(_), _) => {}
    }
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic critical value of the KS statistic at level `alpha` for
/// effective sample size `n_eff` (`n` one-sample, `n m/(n+m)` two-sample).
pub fn ks_critical(n_eff: f64, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / n_eff.sqrt()
}

/// Pearson χ² statistic for observed counts against expected counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Upper `alpha` quantile of the χ² distribution.
pub fn chi_square_critical(dof: f64, alpha: f64) -> f64 {
    ChiSquared::new(dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn merge_matches_single_pass(xs in prop::collection::vec(-1e3f64..1e3, 2..200), split in 0usize..200) {
            let split = split.min(xs.len());
            let whole: Moments = xs.iter().copied().collect();
            let mut left: Moments = xs[..split].iter().copied().collect();
            let right: Moments = xs[split..].iter().copied().collect();
            left.merge(&right);
            prop_assert_eq!(left.n, whole.n);
            prop_assert!((left.mean - whole.mean).abs() <= 1e-9 * (1.0 + whole.mean.abs()));
            prop_assert!((left.variance() - whole.variance()).abs() <= 1e-7 * (1.0 + whole.variance()));
        }
    }

    #[test]
    fn par_chunks_is_independent_of_pool_size() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                mc_moments(11, "t", 10_000, 1, |rng, bank| {
                    use rand::Rng;
                    bank.push(0, rng.random::<f64>())
                })
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn ks_detects_shift_but_not_identity() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) < 1e-3);
        let shifted: Vec<f64> = xs.iter().map(|x| x * 0.5).collect();
        assert!(ks_two_sample(&xs, &shifted) > 0.49);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn chi_square_quantile() {
        // 0.999 quantile of chi2 with 1 dof is 10.828
        assert!((chi_square_critical(1.0, 1e-3) - 10.828).abs() < 1e-3);
    }
}
