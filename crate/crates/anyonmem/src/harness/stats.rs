//! Small statistics helpers: medians over censored samples, bootstrap
//! confidence intervals, least squares.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A first-passage observation; censored trials carry the horizon as a
/// lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Passage {
    Observed(f64),
    Censored,
}

impl Passage {
    pub fn observed(&self) -> Option<f64> {
        match self {
            Passage::Observed(t) => Some(*t),
            Passage::Censored => None,
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median treating censored entries as larger than every observation;
/// `None` when censoring reaches the median position.
pub fn censored_median(samples: &[Passage]) -> Option<f64> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    let mut observed: Vec<f64> = samples.iter().filter_map(Passage::observed).collect();
    if observed.len() * 2 <= n {
        return None;
    }
    observed.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        Some(observed[n / 2])
    } else if observed.len() > n / 2 {
        Some(0.5 * (observed[n / 2 - 1] + observed[n / 2]))
    } else {
        None
    }
}

/// Percentile bootstrap CI for the median; resamples where the median is
/// censored poison the interval (`None`).
pub fn bootstrap_median_ci(samples: &[Passage], resamples: usize, seed: u64) -> Option<(f64, f64)> {
    if samples.is_empty() {
        return None;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut medians = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let draw: Vec<Passage> =
            (0..samples.len()).map(|_| samples[rng.gen_range(0..samples.len())]).collect();
        medians.push(censored_median(&draw)?);
    }
    medians.sort_by(f64::total_cmp);
    let lo = medians[(resamples as f64 * 0.025) as usize];
    let hi = medians[((resamples as f64 * 0.975) as usize).min(resamples - 1)];
    Some((lo, hi))
}

/// Ordinary least squares of `y` on `x`: returns (slope, intercept,
/// residual sum of squares).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rss = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    (slope, intercept, rss)
}
