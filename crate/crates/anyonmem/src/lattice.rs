//! Torus geometry, anyon configurations and homology bookkeeping.
//!
//! Plaquettes live on an `L × L` grid with periodic wraparound and are
//! indexed `r = y·L + x`. Bonds are edges of the dual grid: bond `b < L²`
//! is the horizontal bond between `(x, y)` and `(x+1, y)` with `b = y·L + x`,
//! and bond `b ≥ L²` is the vertical bond between `(x, y)` and `(x, y+1)`
//! with `b − L² = y·L + x`. Two fixed fiducial cuts define the homology
//! basis: the vertical cut at column 0 (crossed by horizontal bonds with
//! `x = L−1`) and the horizontal cut at row 0 (crossed by vertical bonds
//! with `y = L−1`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice side must be at least 2, got {0}")]
    SideTooSmall(usize),
    #[error("open chain: plaquette {0} has odd boundary")]
    OpenChain(usize),
    #[error("snapshot field `{0}` is malformed")]
    BadSnapshot(&'static str),
}

/// Geometry of the `L × L` plaquette torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGeometry {
    side: usize,
}

impl TorusGeometry {
    pub fn new(side: usize) -> Result<Self, LatticeError> {
        if side < 2 {
            return Err(LatticeError::SideTooSmall(side));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of plaquettes, `L²`.
    pub fn plaquettes(&self) -> usize {
        self.side * self.side
    }

    /// Number of bonds, `2·L²`.
    pub fn bonds(&self) -> usize {
        2 * self.side * self.side
    }

    pub fn plaquette(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.side && y < self.side);
        y * self.side + x
    }

    pub fn coords(&self, r: usize) -> (usize, usize) {
        (r % self.side, r / self.side)
    }

    /// The two plaquettes joined by a bond.
    pub fn bond_endpoints(&self, bond: usize) -> (usize, usize) {
        let l = self.side;
        let n = l * l;
        assert!(bond < 2 * n, "bond index {bond} out of range");
        if bond < n {
            let (x, y) = (bond % l, bond / l);
            (y * l + x, y * l + (x + 1) % l)
        } else {
            let c = bond - n;
            let (x, y) = (c % l, c / l);
            (y * l + x, ((y + 1) % l) * l + x)
        }
    }

    /// Whether a bond crosses the (vertical, horizontal) fiducial cut.
    pub fn bond_crossings(&self, bond: usize) -> (bool, bool) {
        let l = self.side;
        let n = l * l;
        if bond < n {
            (bond % l == l - 1, false)
        } else {
            (false, (bond - n) / l == l - 1)
        }
    }

    /// Index of the horizontal bond leaving `(x, y)` in +x direction.
    pub fn horizontal_bond(&self, x: usize, y: usize) -> usize {
        y * self.side + x
    }

    /// Index of the vertical bond leaving `(x, y)` in +y direction.
    pub fn vertical_bond(&self, x: usize, y: usize) -> usize {
        self.side * self.side + y * self.side + x
    }

    /// The four bonds incident to a plaquette.
    pub fn incident_bonds(&self, r: usize) -> [usize; 4] {
        let l = self.side;
        let (x, y) = self.coords(r);
        [
            self.horizontal_bond(x, y),
            self.horizontal_bond((x + l - 1) % l, y),
            self.vertical_bond(x, y),
            self.vertical_bond(x, (y + l - 1) % l),
        ]
    }

    /// Minimal-image displacement from `a` to `b`, components in `(−L/2, L/2]`.
    pub fn min_image(&self, a: usize, b: usize) -> (i64, i64) {
        let l = self.side as i64;
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let mut dx = (bx as i64 - ax as i64).rem_euclid(l);
        let mut dy = (by as i64 - ay as i64).rem_euclid(l);
        if dx > l / 2 {
            dx -= l;
        }
        if dy > l / 2 {
            dy -= l;
        }
        (dx, dy)
    }

    /// Euclidean metric on the minimal-image displacement.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (dx, dy) = self.min_image(a, b);
        ((dx * dx + dy * dy) as f64).sqrt()
    }

    /// Graph (L1) metric on the minimal-image displacement.
    pub fn l1_distance(&self, a: usize, b: usize) -> usize {
        let (dx, dy) = self.min_image(a, b);
        (dx.abs() + dy.abs()) as usize
    }
}

/// Homology class of a closed chain on the torus, `(z₁, z₂) ∈ Z₂ × Z₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LogicalClass(pub u8, pub u8);

impl LogicalClass {
    pub const TRIVIAL: LogicalClass = LogicalClass(0, 0);

    pub fn is_trivial(&self) -> bool {
        self.0 == 0 && self.1 == 0
    }

    /// Group composition: chain addition adds classes mod 2.
    pub fn compose(&self, other: &LogicalClass) -> LogicalClass {
        LogicalClass(self.0 ^ other.0, self.1 ^ other.1)
    }

    pub fn nontrivial_classes() -> [LogicalClass; 3] {
        [LogicalClass(1, 0), LogicalClass(0, 1), LogicalClass(1, 1)]
    }
}

/// Occupation pattern of plaquette excitations plus the cumulative
/// bond-error chain and its incrementally maintained winding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnyonConfig {
    geometry: TorusGeometry,
    occupation: Vec<u8>,
    chain: Vec<u8>,
    winding: LogicalClass,
    count: usize,
}

impl AnyonConfig {
    pub fn vacuum(geometry: TorusGeometry) -> Self {
        Self {
            geometry,
            occupation: vec![0; geometry.plaquettes()],
            chain: vec![0; geometry.bonds()],
            winding: LogicalClass::TRIVIAL,
            count: 0,
        }
    }

    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    pub fn occupied(&self, r: usize) -> bool {
        self.occupation[r] == 1
    }

    /// `W_r = 1 − 2·n_r ∈ {+1, −1}`.
    pub fn spin(&self, r: usize) -> i8 {
        1 - 2 * self.occupation[r] as i8
    }

    pub fn anyon_count(&self) -> usize {
        self.count
    }

    pub fn anyons(&self) -> Vec<usize> {
        (0..self.occupation.len()).filter(|&r| self.occupation[r] == 1).collect()
    }

    pub fn chain(&self) -> &[u8] {
        &self.chain
    }

    pub fn winding(&self) -> LogicalClass {
        self.winding
    }

    /// Toggles the two plaquettes across `bond`, the chain bit, and the
    /// winding counters when the bond crosses a fiducial cut. Pair creation,
    /// hopping and pair annihilation are the three cases of the same toggle.
    pub fn apply_bond_flip(&mut self, bond: usize) {
        let (p, q) = self.geometry.bond_endpoints(bond);
        for r in [p, q] {
            self.occupation[r] ^= 1;
            if self.occupation[r] == 1 {
                self.count += 1;
            } else {
                self.count -= 1;
            }
        }
        self.chain[bond] ^= 1;
        let (ch, cv) = self.geometry.bond_crossings(bond);
        if ch {
            self.winding.0 ^= 1;
        }
        if cv {
            self.winding.1 ^= 1;
        }
    }

    /// Order-independent digest of the configuration contents.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        for &b in &self.occupation {
            mix(b);
        }
        for &b in &self.chain {
            mix(b);
        }
        mix(self.winding.0);
        mix(self.winding.1);
        h
    }

    pub fn to_snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            l: self.geometry.side(),
            occupations: bits_to_string(&self.occupation),
            chain: bits_to_string(&self.chain),
            winding: [self.winding.0, self.winding.1],
        }
    }

    pub fn from_snapshot(snapshot: &ConfigSnapshot) -> Result<Self, LatticeError> {
        let geometry = TorusGeometry::new(snapshot.l)?;
        let occupation =
            string_to_bits(&snapshot.occupations, geometry.plaquettes(), "occupations")?;
        let chain = string_to_bits(&snapshot.chain, geometry.bonds(), "chain")?;
        if snapshot.winding.iter().any(|&w| w > 1) {
            return Err(LatticeError::BadSnapshot("winding"));
        }
        let count = occupation.iter().map(|&b| b as usize).sum();
        Ok(Self {
            geometry,
            occupation,
            chain,
            winding: LogicalClass(snapshot.winding[0], snapshot.winding[1]),
            count,
        })
    }
}

/// JSON form of a configuration: `{"L", "occupations", "chain", "winding"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    #[serde(rename = "L")]
    pub l: usize,
    pub occupations: String,
    pub chain: String,
    pub winding: [u8; 2],
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

fn string_to_bits(s: &str, len: usize, field: &'static str) -> Result<Vec<u8>, LatticeError> {
    if s.len() != len || s.bytes().any(|c| c != b'0' && c != b'1') {
        return Err(LatticeError::BadSnapshot(field));
    }
    Ok(s.bytes().map(|c| c - b'0').collect())
}

/// Homology class of a closed per-bond chain, from cut-crossing parities.
///
/// Signals `OpenChain` when any plaquette touches an odd number of flipped
/// bonds.
pub fn logical_class(chain: &[u8], geometry: &TorusGeometry) -> Result<LogicalClass, LatticeError> {
    assert_eq!(chain.len(), geometry.bonds(), "chain length mismatch");
    let mut boundary = vec![0u8; geometry.plaquettes()];
    for (bond, &bit) in chain.iter().enumerate() {
        if bit == 1 {
            let (p, q) = geometry.bond_endpoints(bond);
            boundary[p] ^= 1;
            boundary[q] ^= 1;
        }
    }
    if let Some(r) = boundary.iter().position(|&b| b == 1) {
        return Err(LatticeError::OpenChain(r));
    }
    let mut class = LogicalClass::TRIVIAL;
    for (bond, &bit) in chain.iter().enumerate() {
        if bit == 1 {
            let (ch, cv) = geometry.bond_crossings(bond);
            if ch {
                class.0 ^= 1;
            }
            if cv {
                class.1 ^= 1;
            }
        }
    }
    Ok(class)
}
