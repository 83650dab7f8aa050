//! Thermal kinetic Monte Carlo over anyon configurations.
//!
//! Rejection KMC with a constant total attempt rate `γ·2L²`: waiting times
//! are exponential, a bond is proposed uniformly, and the flip is accepted
//! by the configured rule (Metropolis or Glauber) on the exact energy
//! difference. Local fields `h_r = Σ_{r′≠r} J(r,r′)·W_{r′}` are maintained
//! incrementally so a proposal costs O(1) and an accepted flip costs O(N).

use crate::kernels::InteractionKernel;
use crate::lattice::AnyonConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("config lattice side {config} does not match kernel side {kernel}")]
    GeometryMismatch { config: usize, kernel: usize },
    #[error("invalid thermal parameters: {0}")]
    BadParams(&'static str),
}

/// Acceptance rule for proposed bond flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceRule {
    #[default]
    Metropolis,
    Glauber,
}

impl AcceptanceRule {
    /// Acceptance probability for a move with `β·ΔE = x`.
    #[inline]
    pub fn acceptance(&self, x: f64) -> f64 {
        match self {
            AcceptanceRule::Metropolis => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x).exp()
                }
            }
            AcceptanceRule::Glauber => 1.0 / (1.0 + x.exp()),
        }
    }
}

/// Bath and schedule parameters for one KMC run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Inverse temperature.
    pub beta: f64,
    /// Attempt rate per bond per unit time.
    pub gamma: f64,
    pub rule: AcceptanceRule,
    /// Time horizon.
    pub t_max: f64,
    /// Strictly increasing checkpoint times, all `≤ t_max`.
    pub checkpoints: Vec<f64>,
}

impl ThermalParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(DynamicsError::BadParams("beta must be >= 0"));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(DynamicsError::BadParams("gamma must be > 0"));
        }
        if self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(DynamicsError::BadParams("t_max must be > 0"));
        }
        let mut prev = 0.0;
        for &c in &self.checkpoints {
            if c <= prev {
                return Err(DynamicsError::BadParams("checkpoints must be strictly increasing"));
            }
            if c > self.t_max {
                return Err(DynamicsError::BadParams("checkpoints must not exceed t_max"));
            }
            prev = c;
        }
        Ok(())
    }
}

/// From-scratch evaluation of
/// `E = −J0·Σ_r W_r − (1/2)·Σ_{r≠r′} J(r,r′)·W_r·W_{r′}`.
pub fn total_energy(
    config: &AnyonConfig,
    kernel: &InteractionKernel,
) -> Result<f64, DynamicsError> {
    if config.geometry().side() != kernel.geometry().side() {
        return Err(DynamicsError::GeometryMismatch {
            config: config.geometry().side(),
            kernel: kernel.geometry().side(),
        });
    }
    let n = config.geometry().plaquettes();
    let mut onsite = 0.0;
    for r in 0..n {
        onsite += config.spin(r) as f64;
    }
    let mut pair = 0.0;
    for r in 0..n {
        let wr = config.spin(r) as f64;
        for rp in (r + 1)..n {
            pair += kernel.pair(r, rp) * wr * config.spin(rp) as f64;
        }
    }
    Ok(-kernel.j0() * onsite - pair)
}

/// Total energy plus the incrementally maintained local fields.
#[derive(Debug, Clone)]
pub struct EnergyState {
    total: f64,
    fields: Vec<f64>,
}

impl EnergyState {
    pub fn new(config: &AnyonConfig, kernel: &InteractionKernel) -> Result<Self, DynamicsError> {
        let total = total_energy(config, kernel)?;
        let n = config.geometry().plaquettes();
        let mut fields = vec![0.0; n];
        for (r, field) in fields.iter_mut().enumerate() {
            let mut h = 0.0;
            for rp in 0..n {
                if rp != r {
                    h += kernel.pair(r, rp) * config.spin(rp) as f64;
                }
            }
            *field = h;
        }
        Ok(Self { total, fields })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn field(&self, r: usize) -> f64 {
        self.fields[r]
    }

    /// Applies an accepted flip: updates the configuration, the local
    /// fields and the running total.
    pub fn apply_flip(
        &mut self,
        config: &mut AnyonConfig,
        kernel: &InteractionKernel,
        bond: usize,
        delta_e: f64,
    ) {
        let (p, q) = config.geometry().bond_endpoints(bond);
        config.apply_bond_flip(bond);
        self.total += delta_e;
        let wp = config.spin(p) as f64;
        let wq = config.spin(q) as f64;
        for (r, field) in self.fields.iter_mut().enumerate() {
            if r != p {
                *field += 2.0 * kernel.pair(r, p) * wp;
            }
            if r != q {
                *field += 2.0 * kernel.pair(r, q) * wq;
            }
        }
    }
}

/// Exact energy difference for toggling the two plaquettes across `bond`,
/// with the mutual term counted once:
/// `ΔE = 2·J0·(W_p + W_q) + 2·W_p·(h_p − J(p,q)·W_q) + 2·W_q·(h_q − J(p,q)·W_p)`.
#[inline]
pub fn flip_delta(
    config: &AnyonConfig,
    state: &EnergyState,
    kernel: &InteractionKernel,
    bond: usize,
) -> f64 {
    let (p, q) = config.geometry().bond_endpoints(bond);
    let wp = config.spin(p) as f64;
    let wq = config.spin(q) as f64;
    let jpq = kernel.pair(p, q);
    2.0 * kernel.j0() * (wp + wq)
        + 2.0 * wp * (state.field(p) - jpq * wq)
        + 2.0 * wq * (state.field(q) - jpq * wp)
}

/// One accepted KMC event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmcEvent {
    pub t: f64,
    pub bond: usize,
    pub delta_e: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub t: f64,
    pub digest: u64,
    pub anyons: usize,
}

/// Time-ordered record of accepted events with checkpoint snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub seed: u64,
    pub events: Vec<KmcEvent>,
    pub checkpoints: Vec<CheckpointRecord>,
    /// Time at which the run stopped (horizon or observer stop).
    pub final_time: f64,
}

impl TrajectoryLog {
    /// CSV event stream `(t, bond, dE, accepted)`.
    pub fn write_events_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "bond", "dE", "accepted"])?;
        for e in &self.events {
            wtr.write_record([
                format!("{:.17e}", e.t),
                e.bond.to_string(),
                format!("{:.17e}", e.delta_e),
                (e.accepted as u8).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Replays the accepted events from `initial` and checks every
    /// checkpoint digest.
    pub fn replay_matches(&self, initial: &AnyonConfig) -> bool {
        let mut config = initial.clone();
        let mut next_event = 0;
        for ck in &self.checkpoints {
            while next_event < self.events.len() && self.events[next_event].t <= ck.t {
                config.apply_bond_flip(self.events[next_event].bond);
                next_event += 1;
            }
            if config.digest() != ck.digest || config.anyon_count() != ck.anyons {
                return false;
            }
        }
        true
    }
}

/// Hooks into the KMC loop. `on_attempt` sees every proposal with the
/// pre-flip configuration and the dwell time spent in it; `on_checkpoint`
/// fires at each scheduled time. Returning `false` stops the run.
pub trait KmcObserver {
    fn on_attempt(
        &mut self,
        _t: f64,
        _dwell: f64,
        _bond: usize,
        _delta_e: f64,
        _accepted: bool,
        _before: &AnyonConfig,
    ) -> bool {
        true
    }

    fn on_checkpoint(&mut self, _t: f64, _config: &AnyonConfig, _state: &EnergyState) -> bool {
        true
    }
}

/// Observer that does nothing.
pub struct NullObserver;
impl KmcObserver for NullObserver {}

/// Outcome of [`kmc_run_observed`]: final configuration, energy state and
/// stop time.
pub struct KmcOutcome {
    pub config: AnyonConfig,
    pub state: EnergyState,
    pub stop_time: f64,
    pub log: TrajectoryLog,
}

/// Event loop with observer hooks; deterministic given
/// `(seed, params, kernel, initial)`.
pub fn kmc_run_observed<O: KmcObserver>(
    initial: &AnyonConfig,
    kernel: &InteractionKernel,
    params: &ThermalParams,
    seed: u64,
    observer: &mut O,
    record_events: bool,
) -> Result<KmcOutcome, DynamicsError> {
    params.validate()?;
    let mut config = initial.clone();
    let mut state = EnergyState::new(&config, kernel)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n_bonds = config.geometry().bonds();
    let rate = params.gamma * n_bonds as f64;
    let beta = params.beta;

    let mut log = TrajectoryLog {
        seed,
        events: Vec::new(),
        checkpoints: Vec::with_capacity(params.checkpoints.len()),
        final_time: 0.0,
    };
    // per-bond cache: endpoints and mutual coupling, to keep proposals
    // free of modular arithmetic
    let bond_info: Vec<(u32, u32, f64)> = (0..n_bonds)
        .map(|b| {
            let (p, q) = config.geometry().bond_endpoints(b);
            (p as u32, q as u32, kernel.pair(p, q))
        })
        .collect();
    let j0 = kernel.j0();
    let mut next_ck = 0;
    let mut t = 0.0;
    'outer: loop {
        let wait: f64 = rng.sample::<f64, _>(rand_distr::Exp1) / rate;
        let t_next = t + wait;
        while next_ck < params.checkpoints.len() && params.checkpoints[next_ck] <= t_next {
            let ck_t = params.checkpoints[next_ck];
            log.checkpoints.push(CheckpointRecord {
                t: ck_t,
                digest: config.digest(),
                anyons: config.anyon_count(),
            });
            next_ck += 1;
            if !observer.on_checkpoint(ck_t, &config, &state) {
                t = ck_t;
                break 'outer;
            }
        }
        if t_next >= params.t_max {
            t = params.t_max;
            break;
        }
        t = t_next;
        let bond = rng.gen_range(0..n_bonds);
        let (p, q, jpq) = bond_info[bond];
        let wp = config.spin(p as usize) as f64;
        let wq = config.spin(q as usize) as f64;
        let delta_e = 2.0 * j0 * (wp + wq)
            + 2.0 * wp * (state.field(p as usize) - jpq * wq)
            + 2.0 * wq * (state.field(q as usize) - jpq * wp);
        let u: f64 = rng.gen();
        let accepted = u < params.rule.acceptance(beta * delta_e);
        let go_on = observer.on_attempt(t, wait, bond, delta_e, accepted, &config);
        if accepted {
            state.apply_flip(&mut config, kernel, bond, delta_e);
            if record_events {
                log.events.push(KmcEvent { t, bond, delta_e, accepted: true });
            }
        }
        if !go_on {
            break;
        }
    }
    log.final_time = t;
    Ok(KmcOutcome { config, state, stop_time: t, log })
}

/// Full KMC run recording accepted events and checkpoint snapshots.
pub fn kmc_run(
    initial: &AnyonConfig,
    kernel: &InteractionKernel,
    params: &ThermalParams,
    seed: u64,
) -> Result<TrajectoryLog, DynamicsError> {
    Ok(kmc_run_observed(initial, kernel, params, seed, &mut NullObserver, true)?.log)
}
