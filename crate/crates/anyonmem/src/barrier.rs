//! Exact energy-barrier computation by bottleneck path search.
//!
//! The search walks the full configuration space of a small lattice:
//! states are (occupation bitmask, accumulated winding), moves are single
//! bond flips, and a state's cost is `E(state) − E(vacuum)`. A
//! Dijkstra-style queue ordered by the maximum cost seen so far yields the
//! minimax height from the vacuum to a homologically nontrivial return to
//! the vacuum — the energy barrier.

use crate::kernels::InteractionKernel;
use crate::lattice::{LogicalClass, TorusGeometry};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BarrierError {
    #[error("state space too large: L = {0} exceeds the exact-search bound 4")]
    LatticeTooLarge(usize),
    #[error("targets must contain at least one nontrivial class")]
    NoTargets,
}

#[derive(Debug, Clone)]
pub struct BarrierResult {
    /// Minimax energy height over all harmful flip sequences.
    pub barrier: f64,
    /// Bond sequence realizing the barrier.
    pub witness: Vec<usize>,
    /// The target class the witness reaches.
    pub class: LogicalClass,
}

struct HeapItem {
    height: f64,
    state: u32,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.height == other.height && self.state == other.state
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on height, tie-break on state index for determinism
        other.height.total_cmp(&self.height).then_with(|| other.state.cmp(&self.state))
    }
}

/// `E(mask) − E(vacuum)` for every occupation bitmask, by subset recursion.
fn state_costs(kernel: &InteractionKernel, geometry: &TorusGeometry) -> Vec<f64> {
    let n = geometry.plaquettes();
    let mut pair = vec![0.0f64; n * n];
    for r in 0..n {
        for rp in 0..n {
            pair[r * n + rp] = kernel.pair(r, rp);
        }
    }
    let partner_sum: Vec<f64> = (0..n).map(|r| pair[r * n..(r + 1) * n].iter().sum()).collect();
    let j0 = kernel.j0();
    let mut cost = vec![0.0f64; 1 << n];
    for mask in 1usize..(1 << n) {
        let r = mask.trailing_zeros() as usize;
        let parent = mask & (mask - 1);
        let mut inner = 0.0;
        let mut rest = parent;
        while rest != 0 {
            let rp = rest.trailing_zeros() as usize;
            inner += pair[r * n + rp];
            rest &= rest - 1;
        }
        cost[mask] = cost[parent] + 2.0 * j0 + 2.0 * (partner_sum[r] - 2.0 * inner);
    }
    cost
}

/// Lowest energy height over all bond-flip sequences from the vacuum back
/// to the vacuum in any of the target homology classes.
///
/// Exact for `L ≤ 4`; rejects larger lattices and empty/trivial targets.
pub fn energy_barrier(
    kernel: &InteractionKernel,
    geometry: &TorusGeometry,
    targets: &[LogicalClass],
) -> Result<BarrierResult, BarrierError> {
    let l = geometry.side();
    if l > 4 {
        return Err(BarrierError::LatticeTooLarge(l));
    }
    let targets: Vec<LogicalClass> = targets.iter().copied().filter(|c| !c.is_trivial()).collect();
    if targets.is_empty() {
        return Err(BarrierError::NoTargets);
    }
    let n = geometry.plaquettes();
    let n_bonds = geometry.bonds();
    let cost = state_costs(kernel, geometry);

    // bond -> (endpoint mask toggle, winding toggle)
    let moves: Vec<(u32, u8)> = (0..n_bonds)
        .map(|b| {
            let (p, q) = geometry.bond_endpoints(b);
            let (ch, cv) = geometry.bond_crossings(b);
            ((1u32 << p) | (1u32 << q), (ch as u8) << 1 | cv as u8)
        })
        .collect();

    let n_states = (1usize << n) * 4;
    let mut best = vec![f64::INFINITY; n_states];
    let mut parent: Vec<(u32, u16)> = vec![(u32::MAX, 0); n_states];
    let mut done = vec![false; n_states];
    let mut heap = BinaryHeap::new();
    best[0] = 0.0;
    heap.push(HeapItem { height: 0.0, state: 0 });

    let target_states: Vec<u32> =
        targets.iter().map(|c| ((c.0 as u32) << 1) | c.1 as u32).collect();

    while let Some(HeapItem { height, state }) = heap.pop() {
        let s = state as usize;
        if done[s] {
            continue;
        }
        done[s] = true;
        let mask = state >> 2;
        let winding = state & 3;
        if mask == 0 && target_states.contains(&winding) {
            // reconstruct the witness bond sequence back to the vacuum root
            let mut witness = Vec::new();
            let mut cur = state;
            while cur != 0 {
                let (prev, bond) = parent[cur as usize];
                witness.push(bond as usize);
                cur = prev;
            }
            witness.reverse();
            return Ok(BarrierResult {
                barrier: height,
                witness,
                class: LogicalClass((winding >> 1) as u8, (winding & 1) as u8),
            });
        }
        for (bond, &(toggle, wflip)) in moves.iter().enumerate() {
            let nmask = mask ^ toggle;
            let nwind = winding ^ wflip as u32;
            let next = ((nmask << 2) | nwind) as usize;
            if done[next] {
                continue;
            }
            let h = height.max(cost[nmask as usize]);
            if h < best[next] {
                best[next] = h;
                parent[next] = (state, bond as u16);
                heap.push(HeapItem { height: h, state: next as u32 });
            }
        }
    }
    unreachable!("targets are always reachable on a torus")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{flip_delta, total_energy, EnergyState};
    use crate::kernels::build_kernel_powerlaw;
    use crate::lattice::AnyonConfig;

    fn geom(l: usize) -> TorusGeometry {
        TorusGeometry::new(l).unwrap()
    }

    fn all_nontrivial() -> Vec<LogicalClass> {
        LogicalClass::nontrivial_classes().to_vec()
    }

    #[test]
    fn toric_barrier_is_exactly_4j() {
        for l in [3, 4] {
            let g = geom(l);
            let k = InteractionKernel::bare(g, 1.0);
            let r = energy_barrier(&k, &g, &all_nontrivial()).unwrap();
            assert_eq!(r.barrier, 4.0, "L = {l}");
        }
    }

    #[test]
    fn zero_kernel_has_zero_barrier() {
        let g = geom(3);
        let k = InteractionKernel::bare(g, 0.0);
        let r = energy_barrier(&k, &g, &all_nontrivial()).unwrap();
        assert_eq!(r.barrier, 0.0);
    }

    #[test]
    fn long_range_barrier_grows_with_size() {
        // frozen values from the exhaustive minimax search oracle
        let b3 = {
            let g = geom(3);
            let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
            energy_barrier(&k, &g, &all_nontrivial()).unwrap().barrier
        };
        let b4 = {
            let g = geom(4);
            let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
            energy_barrier(&k, &g, &all_nontrivial()).unwrap().barrier
        };
        assert!(b4 > b3);
        assert!((b3 - 23.313_708_498_984_76).abs() < 1e-9 * b3);
        assert!((b4 - 37.883_339_589_357_18).abs() < 1e-9 * b4);
    }

    #[test]
    fn witness_realizes_the_reported_height() {
        let g = geom(4);
        let k = build_kernel_powerlaw(0.8, 1.0, g).unwrap();
        let r = energy_barrier(&k, &g, &all_nontrivial()).unwrap();
        let vac = AnyonConfig::vacuum(g);
        let e0 = total_energy(&vac, &k).unwrap();
        let mut cfg = vac.clone();
        let mut max_height = f64::NEG_INFINITY;
        for &b in &r.witness {
            cfg.apply_bond_flip(b);
            let h = total_energy(&cfg, &k).unwrap() - e0;
            max_height = max_height.max(h);
        }
        assert_eq!(cfg.anyon_count(), 0);
        assert_eq!(cfg.winding(), r.class);
        assert!(!r.class.is_trivial());
        assert!(
            (max_height - r.barrier).abs() <= 1e-9 * r.barrier.abs().max(1.0),
            "witness height {max_height} vs barrier {}",
            r.barrier
        );
    }

    /// Height of the explicit create-drag-annihilate sweep along row 0,
    /// evaluated independently through the energy module.
    fn sweep_height(kernel: &InteractionKernel, g: &TorusGeometry) -> f64 {
        let vac = AnyonConfig::vacuum(*g);
        let e0 = total_energy(&vac, kernel).unwrap();
        let mut cfg = vac;
        let mut max_h = f64::NEG_INFINITY;
        for x in 0..g.side() {
            cfg.apply_bond_flip(g.horizontal_bond(x, 0));
            max_h = max_h.max(total_energy(&cfg, kernel).unwrap() - e0);
        }
        assert_eq!(cfg.anyon_count(), 0);
        max_h
    }

    #[test]
    fn barrier_bracketed_by_pair_cost_and_sweep() {
        let g = geom(4);
        for kernel in [
            InteractionKernel::bare(g, 1.3),
            build_kernel_powerlaw(1.0, 1.0, g).unwrap(),
            build_kernel_powerlaw(1.0, 3.0, g).unwrap(),
        ] {
            let r = energy_barrier(&kernel, &g, &all_nontrivial()).unwrap();
            let vac = AnyonConfig::vacuum(g);
            let state = EnergyState::new(&vac, &kernel).unwrap();
            let min_pair = (0..g.bonds())
                .map(|b| flip_delta(&vac, &state, &kernel, b))
                .fold(f64::INFINITY, f64::min);
            let sweep = sweep_height(&kernel, &g);
            assert!(r.barrier >= min_pair - 1e-12);
            assert!(r.barrier <= sweep + 1e-12);
        }
    }

    #[test]
    fn barrier_symmetric_under_target_relabeling() {
        let g = geom(3);
        let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
        let bh = energy_barrier(&k, &g, &[LogicalClass(1, 0)]).unwrap().barrier;
        let bv = energy_barrier(&k, &g, &[LogicalClass(0, 1)]).unwrap().barrier;
        assert!((bh - bv).abs() <= 1e-12 * bh);
    }

    #[test]
    fn barrier_monotone_in_kernel_strength() {
        let g = geom(3);
        let weak = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
        let strong = build_kernel_powerlaw(1.2, 1.0, g).unwrap();
        let bw = energy_barrier(&weak, &g, &all_nontrivial()).unwrap().barrier;
        let bs = energy_barrier(&strong, &g, &all_nontrivial()).unwrap().barrier;
        assert!(bs >= bw);
    }

    #[test]
    fn rejects_large_lattices_and_bad_targets() {
        let g5 = geom(5);
        let k5 = InteractionKernel::bare(g5, 1.0);
        assert!(matches!(
            energy_barrier(&k5, &g5, &all_nontrivial()),
            Err(BarrierError::LatticeTooLarge(5))
        ));
        let g = geom(3);
        let k = InteractionKernel::bare(g, 1.0);
        assert!(matches!(energy_barrier(&k, &g, &[]), Err(BarrierError::NoTargets)));
        assert!(matches!(
            energy_barrier(&k, &g, &[LogicalClass::TRIVIAL]),
            Err(BarrierError::NoTargets)
        ));
    }
}
