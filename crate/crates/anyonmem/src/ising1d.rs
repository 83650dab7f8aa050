//! Disordered 1D Ising ring benchmark: Glauber single-spin-flip dynamics
//! and the first-passage time of the magnetization sign.

use crate::harness::stable_seed;
use crate::harness::stats::{self, Passage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IsingError {
    #[error("chain needs at least 2 spins, got {0}")]
    ChainTooShort(usize),
    #[error("couplings must be positive (offending value {0})")]
    NonPositiveCoupling(f64),
    #[error("beta*J_max = {0} exceeds the feasibility guard 4")]
    TooCold(f64),
    #[error("state space 2^{0} too large for the exact stationary check")]
    TooManyStates(usize),
}

/// Ring of `L` spins with per-bond couplings; bond `i` joins spins `i` and
/// `i+1 mod L`.
#[derive(Debug, Clone)]
pub struct IsingChain {
    couplings: Vec<f64>,
    beta: f64,
}

impl IsingChain {
    pub fn new(couplings: Vec<f64>, beta: f64) -> Result<Self, IsingError> {
        if couplings.len() < 2 {
            return Err(IsingError::ChainTooShort(couplings.len()));
        }
        if let Some(&bad) = couplings.iter().find(|&&j| j <= 0.0) {
            return Err(IsingError::NonPositiveCoupling(bad));
        }
        Ok(Self { couplings, beta })
    }

    pub fn uniform(l: usize, j: f64, beta: f64) -> Result<Self, IsingError> {
        Self::new(vec![j; l], beta)
    }

    pub fn alternating(l: usize, j_even: f64, j_odd: f64, beta: f64) -> Result<Self, IsingError> {
        Self::new((0..l).map(|i| if i % 2 == 0 { j_even } else { j_odd }).collect(), beta)
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// `(J_min + J_max)/2`.
    pub fn j_bar(&self) -> f64 {
        let min = self.couplings.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = self.couplings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min + max) / 2.0
    }

    pub fn j_max(&self) -> f64 {
        self.couplings.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `H = −Σ_i J_i s_i s_{i+1}` on the ring.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let l = self.len();
        -(0..l)
            .map(|i| self.couplings[i] * spins[i] as f64 * spins[(i + 1) % l] as f64)
            .sum::<f64>()
    }

    /// Energy change of flipping spin `i`.
    pub fn flip_delta(&self, spins: &[i8], i: usize) -> f64 {
        let l = self.len();
        let left = self.couplings[(i + l - 1) % l] * spins[(i + l - 1) % l] as f64;
        let right = self.couplings[i] * spins[(i + 1) % l] as f64;
        2.0 * spins[i] as f64 * (left + right)
    }

    /// Glauber acceptance `1/(1 + e^{βΔE})` for flipping spin `i`.
    pub fn glauber_probability(&self, spins: &[i8], i: usize) -> f64 {
        1.0 / (1.0 + (self.beta * self.flip_delta(spins, i)).exp())
    }
}

/// First-passage statistics of the magnetization zero crossing, in sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsingMemoryStats {
    /// Per-trial τ in sweeps; `None` marks a censored trial.
    pub taus: Vec<Option<f64>>,
    pub censored: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

fn first_passage(chain: &IsingChain, seed: u64, horizon_sweeps: f64) -> Option<f64> {
    let l = chain.len();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut spins = vec![1i8; l];
    let mut magnetization = l as i64;
    let mut t = 0.0;
    loop {
        t += rng.sample::<f64, _>(rand_distr::Exp1) / l as f64;
        if t > horizon_sweeps {
            return None;
        }
        let i = rng.gen_range(0..l);
        let u: f64 = rng.gen();
        if u < chain.glauber_probability(&spins, i) {
            magnetization -= 2 * spins[i] as i64;
            spins[i] = -spins[i];
            if magnetization <= 0 {
                return Some(t);
            }
        }
    }
}

/// Evolves all-up chains until the magnetization first reaches `M ≤ 0`;
/// trials run in parallel with derived seeds.
pub fn ising_memory_time(
    chain: &IsingChain,
    trials: usize,
    seed: u64,
    horizon_sweeps: f64,
) -> Result<IsingMemoryStats, IsingError> {
    let guard = chain.beta * chain.j_max();
    if guard > 4.0 * (1.0 + 1e-12) {
        return Err(IsingError::TooCold(guard));
    }
    let taus: Vec<Option<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| first_passage(chain, stable_seed(seed, 0, t as u64), horizon_sweeps))
        .collect();
    let samples: Vec<Passage> =
        taus.iter().map(|t| t.map_or(Passage::Censored, Passage::Observed)).collect();
    let censored = taus.iter().filter(|t| t.is_none()).count();
    let observed: Vec<f64> = taus.iter().flatten().copied().collect();
    Ok(IsingMemoryStats {
        censored,
        median: stats::censored_median(&samples),
        mean: if censored == 0 && !observed.is_empty() {
            Some(stats::mean(&observed))
        } else {
            None
        },
        ci95: stats::bootstrap_median_ci(&samples, 1000, stable_seed(seed, 1, 0)),
        taus,
    })
}

/// Total-variation distance between the Gibbs distribution pushed through
/// one Glauber transition step and itself, over the full state space.
/// Detailed balance makes this zero up to rounding.
pub fn exact_stationary_tv(chain: &IsingChain) -> Result<f64, IsingError> {
    let l = chain.len();
    if l > 12 {
        return Err(IsingError::TooManyStates(l));
    }
    let n_states = 1usize << l;
    let spins_of =
        |s: usize| -> Vec<i8> { (0..l).map(|i| if s >> i & 1 == 1 { 1 } else { -1 }).collect() };
    let mut gibbs: Vec<f64> =
        (0..n_states).map(|s| (-chain.beta * chain.energy(&spins_of(s))).exp()).collect();
    let z: f64 = gibbs.iter().sum();
    for g in gibbs.iter_mut() {
        *g /= z;
    }
    // one step of the uniform-site Glauber chain applied to the Gibbs vector
    let mut pushed = vec![0.0f64; n_states];
    for s in 0..n_states {
        let spins = spins_of(s);
        let mut stay = 1.0;
        for i in 0..l {
            let p = chain.glauber_probability(&spins, i) / l as f64;
            pushed[s ^ (1 << i)] += gibbs[s] * p;
            stay -= p;
        }
        pushed[s] += gibbs[s] * stay;
    }
    Ok(0.5 * gibbs.iter().zip(&pushed).map(|(a, b)| (a - b).abs()).sum::<f64>())
}
