//! Syndrome decoding by minimum-weight matching and the logical verdict.
//!
//! Anyons are paired up to minimize total torus path length (graph metric);
//! the correction chain is the union of shortest minimal-image paths,
//! horizontal segment before vertical. Matching is exact (subset DP) up to
//! [`MatchingDecoder::exact_limit`] anyons and greedy with 2-opt pair swaps
//! above it. Ties break deterministically: lowest plaquette index first.

use crate::lattice::{logical_class, AnyonConfig, LatticeError, LogicalClass, TorusGeometry};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("odd syndrome: {0} anyons cannot be paired")]
    OddSyndrome(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Correction chain, matched pairs and the logical verdict of
/// error ⊕ correction.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub correction: Vec<u8>,
    pub pairs: Vec<(usize, usize)>,
    pub verdict: LogicalClass,
}

/// Decoding strategy over a syndrome (list of occupied plaquettes).
pub trait Decoder {
    fn decode(&self, syndrome: &[usize], geometry: &TorusGeometry)
        -> Result<Matching, DecodeError>;
}

/// Matched plaquette pairs plus the correction chain they generate.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub correction: Vec<u8>,
    pub weight: usize,
}

/// Minimum-weight perfect matching: exact for small syndromes, greedily
/// refined above.
#[derive(Debug, Clone, Copy)]
pub struct MatchingDecoder {
    pub exact_limit: usize,
}

impl Default for MatchingDecoder {
    fn default() -> Self {
        Self { exact_limit: 12 }
    }
}

impl Decoder for MatchingDecoder {
    fn decode(
        &self,
        syndrome: &[usize],
        geometry: &TorusGeometry,
    ) -> Result<Matching, DecodeError> {
        if !syndrome.len().is_multiple_of(2) {
            return Err(DecodeError::OddSyndrome(syndrome.len()));
        }
        let pairs = if syndrome.len() <= self.exact_limit {
            match_exact(syndrome, geometry)
        } else {
            match_greedy_improved(syndrome, geometry)
        };
        let mut correction = vec![0u8; geometry.bonds()];
        let mut weight = 0;
        for &(a, b) in &pairs {
            weight += geometry.l1_distance(a, b);
            toggle_path(&mut correction, geometry, a, b);
        }
        Ok(Matching { pairs, correction, weight })
    }
}

/// Shortest-path correction for a syndrome; see [`MatchingDecoder`].
pub fn decode_matching(
    syndrome: &[usize],
    geometry: &TorusGeometry,
) -> Result<Matching, DecodeError> {
    MatchingDecoder::default().decode(syndrome, geometry)
}

/// Homology class of error ⊕ correction; `(0,0)` means the memory survived.
pub fn failure_verdict(
    error_chain: &[u8],
    correction: &[u8],
    geometry: &TorusGeometry,
) -> Result<LogicalClass, DecodeError> {
    let combined: Vec<u8> = error_chain.iter().zip(correction).map(|(&e, &c)| e ^ c).collect();
    Ok(logical_class(&combined, geometry)?)
}

/// Decode a configuration's syndrome and judge its accumulated chain.
pub fn decode_outcome(
    config: &AnyonConfig,
    decoder: &dyn Decoder,
) -> Result<DecodeOutcome, DecodeError> {
    let geometry = config.geometry();
    let matching = decoder.decode(&config.anyons(), &geometry)?;
    let verdict = failure_verdict(config.chain(), &matching.correction, &geometry)?;
    Ok(DecodeOutcome { correction: matching.correction, pairs: matching.pairs, verdict })
}

/// Subset-DP minimum-weight perfect matching; deterministic tie-break by
/// pairing the lowest unmatched index against the smallest partner that
/// strictly improves the cost.
fn match_exact(syndrome: &[usize], geometry: &TorusGeometry) -> Vec<(usize, usize)> {
    let k = syndrome.len();
    if k == 0 {
        return Vec::new();
    }
    let dist: Vec<usize> =
        (0..k * k).map(|ij| geometry.l1_distance(syndrome[ij / k], syndrome[ij % k])).collect();
    let full = 1usize << k;
    let mut dp = vec![usize::MAX; full];
    let mut choice = vec![(0u8, 0u8); full];
    dp[0] = 0;
    for mask in 0..full {
        if dp[mask] == usize::MAX {
            continue;
        }
        let i = (!mask).trailing_zeros() as usize;
        if i >= k {
            continue;
        }
        for j in (i + 1)..k {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << i) | (1 << j);
            let cost = dp[mask] + dist[i * k + j];
            if cost < dp[next] {
                dp[next] = cost;
                choice[next] = (i as u8, j as u8);
            }
        }
    }
    let mut pairs = Vec::with_capacity(k / 2);
    let mut mask = full - 1;
    while mask != 0 {
        let (i, j) = choice[mask];
        pairs.push((syndrome[i as usize], syndrome[j as usize]));
        mask &= !((1 << i) | (1 << j));
    }
    pairs.reverse();
    pairs
}

/// Greedy nearest-partner matching followed by 2-opt pair swaps.
fn match_greedy_improved(syndrome: &[usize], geometry: &TorusGeometry) -> Vec<(usize, usize)> {
    let k = syndrome.len();
    let mut used = vec![false; k];
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(k / 2);
    for i in 0..k {
        if used[i] {
            continue;
        }
        let mut best = usize::MAX;
        let mut best_d = usize::MAX;
        for j in (i + 1)..k {
            if used[j] {
                continue;
            }
            let d = geometry.l1_distance(syndrome[i], syndrome[j]);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        used[i] = true;
        used[best] = true;
        pairs.push((syndrome[i], syndrome[best]));
    }
    let d = |a: usize, b: usize| geometry.l1_distance(a, b);
    let mut improved = true;
    while improved {
        improved = false;
        for a in 0..pairs.len() {
            for b in (a + 1)..pairs.len() {
                let (i1, j1) = pairs[a];
                let (i2, j2) = pairs[b];
                let current = d(i1, j1) + d(i2, j2);
                let swap_a = d(i1, i2) + d(j1, j2);
                let swap_b = d(i1, j2) + d(j1, i2);
                if swap_a < current && swap_a <= swap_b {
                    pairs[a] = (i1, i2);
                    pairs[b] = (j1, j2);
                    improved = true;
                } else if swap_b < current {
                    pairs[a] = (i1, j2);
                    pairs[b] = (j1, i2);
                    improved = true;
                }
            }
        }
    }
    pairs
}

/// Toggles the bonds of the canonical shortest path from `a` to `b`:
/// minimal-image horizontal segment first, then vertical.
fn toggle_path(chain: &mut [u8], geometry: &TorusGeometry, a: usize, b: usize) {
    let l = geometry.side();
    let (dx, dy) = geometry.min_image(a, b);
    let (mut x, y0) = geometry.coords(a);
    for _ in 0..dx.abs() {
        let bx = if dx > 0 { x } else { (x + l - 1) % l };
        chain[geometry.horizontal_bond(bx, y0)] ^= 1;
        x = if dx > 0 { (x + 1) % l } else { (x + l - 1) % l };
    }
    let mut y = y0;
    for _ in 0..dy.abs() {
        let by = if dy > 0 { y } else { (y + l - 1) % l };
        chain[geometry.vertical_bond(x, by)] ^= 1;
        y = if dy > 0 { (y + 1) % l } else { (y + l - 1) % l };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn geom(l: usize) -> TorusGeometry {
        TorusGeometry::new(l).unwrap()
    }

    fn boundary_of(chain: &[u8], g: &TorusGeometry) -> Vec<usize> {
        let mut b = vec![0u8; g.plaquettes()];
        for (bond, &bit) in chain.iter().enumerate() {
            if bit == 1 {
                let (p, q) = g.bond_endpoints(bond);
                b[p] ^= 1;
                b[q] ^= 1;
            }
        }
        (0..b.len()).filter(|&r| b[r] == 1).collect()
    }

    /// Exhaustive minimum over all pairings, for small syndromes.
    fn exhaustive_min_weight(syndrome: &[usize], g: &TorusGeometry) -> usize {
        fn rec(remaining: &mut Vec<usize>, g: &TorusGeometry) -> usize {
            if remaining.is_empty() {
                return 0;
            }
            let first = remaining.remove(0);
            let mut best = usize::MAX;
            for idx in 0..remaining.len() {
                let partner = remaining.remove(idx);
                let w = g.l1_distance(first, partner) + rec(remaining, g);
                best = best.min(w);
                remaining.insert(idx, partner);
            }
            remaining.insert(0, first);
            best
        }
        let mut v = syndrome.to_vec();
        rec(&mut v, g)
    }

    #[test]
    fn empty_syndrome_decodes_to_empty_correction() {
        let g = geom(6);
        let m = decode_matching(&[], &g).unwrap();
        assert!(m.pairs.is_empty());
        assert!(m.correction.iter().all(|&b| b == 0));
    }

    #[test]
    fn adjacent_pair_decodes_to_single_bond() {
        let g = geom(6);
        let a = g.plaquette(2, 3);
        let b = g.plaquette(3, 3);
        let m = decode_matching(&[a, b], &g).unwrap();
        assert_eq!(m.weight, 1);
        assert_eq!(m.correction.iter().map(|&x| x as usize).sum::<usize>(), 1);
        assert_eq!(m.correction[g.horizontal_bond(2, 3)], 1);
    }

    #[test]
    fn odd_syndrome_is_rejected() {
        let g = geom(6);
        assert_eq!(decode_matching(&[1, 2, 3], &g), Err(DecodeError::OddSyndrome(3)));
    }

    #[test]
    fn two_well_separated_close_pairs_match_exhaustive_minimum() {
        let g = geom(6);
        let syndrome = [g.plaquette(0, 0), g.plaquette(1, 0), g.plaquette(3, 3), g.plaquette(3, 4)];
        let m = decode_matching(&syndrome, &g).unwrap();
        assert_eq!(m.weight, exhaustive_min_weight(&syndrome, &g));
        assert_eq!(m.weight, 2);
    }

    #[test]
    fn matching_is_optimal_on_random_small_syndromes() {
        let g = geom(6);
        let mut rng = ChaCha12Rng::seed_from_u64(911);
        for _ in 0..300 {
            let k = 2 * rng.gen_range(1..=5usize);
            let mut sites: Vec<usize> = Vec::new();
            while sites.len() < k {
                let s = rng.gen_range(0..g.plaquettes());
                if !sites.contains(&s) {
                    sites.push(s);
                }
            }
            sites.sort_unstable();
            let m = decode_matching(&sites, &g).unwrap();
            assert_eq!(m.weight, exhaustive_min_weight(&sites, &g), "sites {sites:?}");
        }
    }

    #[test]
    fn boundary_of_correction_equals_syndrome() {
        let g = geom(8);
        let mut rng = ChaCha12Rng::seed_from_u64(5150);
        for _ in 0..100 {
            let k = 2 * rng.gen_range(1..=6usize);
            let mut sites: Vec<usize> = Vec::new();
            while sites.len() < k {
                let s = rng.gen_range(0..g.plaquettes());
                if !sites.contains(&s) {
                    sites.push(s);
                }
            }
            sites.sort_unstable();
            let m = decode_matching(&sites, &g).unwrap();
            assert_eq!(boundary_of(&m.correction, &g), sites);
        }
    }

    #[test]
    fn greedy_path_used_above_exact_limit_still_pairs_everything() {
        let g = geom(8);
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let mut sites: Vec<usize> = Vec::new();
        while sites.len() < 16 {
            let s = rng.gen_range(0..g.plaquettes());
            if !sites.contains(&s) {
                sites.push(s);
            }
        }
        sites.sort_unstable();
        let m = decode_matching(&sites, &g).unwrap();
        assert_eq!(m.pairs.len(), 8);
        assert_eq!(boundary_of(&m.correction, &g), sites);
        // refined greedy can never beat the exact optimum
        let exact = MatchingDecoder { exact_limit: 16 }.decode(&sites, &g).unwrap();
        assert!(m.weight >= exact.weight);
    }

    #[test]
    fn verdict_of_empty_chains_is_trivial() {
        let g = geom(4);
        let zero = vec![0u8; g.bonds()];
        assert_eq!(failure_verdict(&zero, &zero, &g).unwrap(), LogicalClass::TRIVIAL);
    }

    #[test]
    fn horizontal_loop_with_empty_correction_is_a_failure() {
        let g = geom(4);
        let mut err = vec![0u8; g.bonds()];
        for x in 0..4 {
            err[g.horizontal_bond(x, 2)] = 1;
        }
        let zero = vec![0u8; g.bonds()];
        assert_eq!(failure_verdict(&err, &zero, &g).unwrap(), LogicalClass(1, 0));
    }

    #[test]
    fn open_sum_chain_propagates_error() {
        let g = geom(4);
        let mut err = vec![0u8; g.bonds()];
        err[0] = 1;
        let zero = vec![0u8; g.bonds()];
        assert!(matches!(
            failure_verdict(&err, &zero, &g),
            Err(DecodeError::Lattice(LatticeError::OpenChain(_)))
        ));
    }

    #[test]
    fn short_error_chains_never_fail_after_decoding() {
        // exhaustive at L=4: every single-bond error decodes back to (0,0)
        let g = geom(4);
        for bond in 0..g.bonds() {
            let mut cfg = AnyonConfig::vacuum(g);
            cfg.apply_bond_flip(bond);
            let out = decode_outcome(&cfg, &MatchingDecoder::default()).unwrap();
            assert_eq!(out.verdict, LogicalClass::TRIVIAL, "bond {bond}");
        }
    }

    #[test]
    fn correctness_floor_for_separated_pairs() {
        // single pair at torus distance < L/2: decode of the generating
        // path is always trivial
        let g = geom(8);
        let a = g.plaquette(1, 1);
        for x in 0..8 {
            for y in 0..8 {
                let b = g.plaquette(x, y);
                if b == a || g.distance(a, b) >= 4.0 {
                    continue;
                }
                let mut chain = vec![0u8; g.bonds()];
                toggle_path(&mut chain, &g, a, b);
                let m = decode_matching(&[a.min(b), a.max(b)], &g).unwrap();
                let v = failure_verdict(&chain, &m.correction, &g).unwrap();
                assert_eq!(v, LogicalClass::TRIVIAL, "pair ({a},{b})");
            }
        }
    }

    #[test]
    fn decode_outcome_detects_wound_chain() {
        let g = geom(6);
        let mut cfg = AnyonConfig::vacuum(g);
        for x in 0..6 {
            cfg.apply_bond_flip(g.horizontal_bond(x, 0));
        }
        let out = decode_outcome(&cfg, &MatchingDecoder::default()).unwrap();
        assert_eq!(out.verdict, LogicalClass(1, 0));
        assert!(out.pairs.is_empty());
    }
}
