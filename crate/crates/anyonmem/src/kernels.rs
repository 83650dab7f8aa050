//! Interaction kernels `J(r, r′)` between plaquettes and kernel-level
//! observables.
//!
//! A kernel combines a bare on-site gap `J0` (flipping one `W_r` alone costs
//! `2·J0` from this term) with a pairwise coupling stored either as a
//! translation-invariant table over minimal-image displacements or as an
//! explicit symmetric matrix for disordered instances.
//!
//! The boson-mediated kernel is built in Fourier space over an `n³` periodic
//! box with dispersion `ε_q = 4·Σᵢ sin²(qᵢ/2)` plus an additive mass `ε`.
//! At `ε = 0` the zero mode is dropped and the neutralizing-background
//! offset this introduces (a Madelung-type constant `≈ −2.837/(4πn)`) is
//! compensated by Richardson extrapolation of the on-site lattice Green
//! value, so the table reproduces the infinite-lattice `A²/(4π|Δ|)` tail.

use crate::lattice::TorusGeometry;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("box too small: n = {n} must be at least 2L = {min} and a power of two")]
    BoxTooSmall { n: usize, min: usize },
    #[error("decay exponent must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("wavenumber must be positive, got {0}")]
    NonPositiveWavenumber(f64),
    #[error("mass parameter must be nonnegative, got {0}")]
    NegativeMass(f64),
    #[error("couplings must be positive (offending value {0})")]
    NonPositiveCoupling(f64),
    #[error("expected {expected} per-bond couplings, got {got}")]
    CouplingCount { expected: usize, got: usize },
}

/// Pairwise part of a kernel.
#[derive(Debug, Clone)]
pub enum KernelTable {
    /// `J(Δ)` indexed by wrapped displacement `dy·L + dx`.
    Translation(Vec<f64>),
    /// Full symmetric `N × N` matrix.
    Matrix(Vec<f64>),
}

/// Pairwise coupling `J(r, r′)` plus the bare on-site gap coefficient.
#[derive(Debug, Clone)]
pub struct InteractionKernel {
    geometry: TorusGeometry,
    j0: f64,
    table: KernelTable,
    spec: KernelSpec,
}

impl InteractionKernel {
    pub fn geometry(&self) -> TorusGeometry {
        self.geometry
    }

    pub fn j0(&self) -> f64 {
        self.j0
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Bare kernel: on-site gap only, zero pair coupling.
    pub fn bare(geometry: TorusGeometry, j0: f64) -> Self {
        Self {
            geometry,
            j0,
            table: KernelTable::Translation(vec![0.0; geometry.plaquettes()]),
            spec: KernelSpec::Toric { j0 },
        }
    }

    /// Pair coupling between two distinct plaquettes; `J(r, r) = 0`.
    #[inline]
    pub fn pair(&self, r: usize, rp: usize) -> f64 {
        if r == rp {
            return 0.0;
        }
        match &self.table {
            KernelTable::Translation(tab) => {
                let l = self.geometry.side();
                let (rx, ry) = (r % l, r / l);
                let (px, py) = (rp % l, rp / l);
                let dx = (px + l - rx) % l;
                let dy = (py + l - ry) % l;
                tab[dy * l + dx]
            }
            KernelTable::Matrix(m) => m[r * self.geometry.plaquettes() + rp],
        }
    }

    /// Table entry for a wrapped displacement (translation-invariant only).
    pub fn pair_at_displacement(&self, dx: i64, dy: i64) -> Option<f64> {
        match &self.table {
            KernelTable::Translation(tab) => {
                let l = self.geometry.side() as i64;
                let dx = dx.rem_euclid(l) as usize;
                let dy = dy.rem_euclid(l) as usize;
                Some(tab[dy * l as usize + dx])
            }
            KernelTable::Matrix(_) => None,
        }
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.table, KernelTable::Translation(_))
    }

    /// `Σ_{r′≠r} J(r, r′)`.
    pub fn partner_sum(&self, r: usize) -> f64 {
        (0..self.geometry.plaquettes()).filter(|&rp| rp != r).map(|rp| self.pair(r, rp)).sum()
    }

    /// CSV rows `(dx, dy, J)` over minimal-image displacements for
    /// translation-invariant tables, `(r, rp, J)` nonzero entries otherwise.
    pub fn write_table_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        match &self.table {
            KernelTable::Translation(_) => {
                wtr.write_record(["dx", "dy", "J"])?;
                let l = self.geometry.side() as i64;
                for dy in -(l / 2 - ((l + 1) % 2))..=l / 2 {
                    for dx in -(l / 2 - ((l + 1) % 2))..=l / 2 {
                        let j = self.pair_at_displacement(dx, dy).unwrap();
                        wtr.write_record([dx.to_string(), dy.to_string(), format!("{j:.17e}")])?;
                    }
                }
            }
            KernelTable::Matrix(m) => {
                wtr.write_record(["r", "rp", "J"])?;
                let n = self.geometry.plaquettes();
                for r in 0..n {
                    for rp in (r + 1)..n {
                        let j = m[r * n + rp];
                        if j != 0.0 {
                            wtr.write_record([r.to_string(), rp.to_string(), format!("{j:.17e}")])?;
                        }
                    }
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Fourier-space description of the 3D bosonic box.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FourierSpec {
    /// Linear box size; the box has `N = n³` sites.
    pub n: usize,
    /// Additive mass `ε ≥ 0`.
    pub mass: f64,
}

/// Serializable kernel description; the `family` tag selects the builder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Bare toric kernel: on-site gap only.
    Toric { j0: f64 },
    /// `J(Δ) = A²/d(Δ)^α`.
    PowerLaw {
        a: f64,
        alpha: f64,
        #[serde(default)]
        j0: f64,
    },
    /// Boson-mediated kernel from the `n³` Fourier sum; `n = None` picks the
    /// smallest power of two `≥ 2L`.
    Fourier {
        a: f64,
        #[serde(default)]
        eps: f64,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        j0: f64,
    },
    /// `J(Δ) = A²·[2kd·cos(2kd) − sin(2kd)]/d⁴`.
    Rkky {
        a: f64,
        k: f64,
        #[serde(default)]
        j0: f64,
    },
    /// Nearest-neighbor couplings sampled uniformly from `[j_min, j_max]`.
    Disordered {
        j_min: f64,
        j_max: f64,
        seed: u64,
        #[serde(default)]
        j0: f64,
    },
}

impl KernelSpec {
    pub fn build(&self, geometry: TorusGeometry) -> Result<InteractionKernel, KernelError> {
        match *self {
            KernelSpec::Toric { j0 } => Ok(InteractionKernel::bare(geometry, j0)),
            KernelSpec::PowerLaw { a, alpha, j0 } => {
                let mut k = build_kernel_powerlaw(a, alpha, geometry)?;
                k.j0 = j0;
                k.spec = self.clone();
                Ok(k)
            }
            KernelSpec::Fourier { a, eps, n, j0 } => {
                let n = n.unwrap_or_else(|| (2 * geometry.side()).next_power_of_two());
                let mut k = build_kernel_fourier(a, FourierSpec { n, mass: eps }, geometry)?;
                k.j0 = j0;
                k.spec = self.clone();
                Ok(k)
            }
            KernelSpec::Rkky { a, k, j0 } => {
                let mut kk = build_kernel_rkky(a, k, geometry)?;
                kk.j0 = j0;
                kk.spec = self.clone();
                Ok(kk)
            }
            KernelSpec::Disordered { j_min, j_max, seed, j0 } => {
                let mut k = build_kernel_disordered(
                    DisorderCouplings::Sampled { j_min, j_max, seed },
                    geometry,
                )?;
                k.j0 = j0;
                k.spec = self.clone();
                Ok(k)
            }
        }
    }
}

/// `ε_q` contributions per axis: `4·sin²(πk/n)` for `k = 0..n`.
fn axis_dispersion(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
            4.0 * s * s
        })
        .collect()
}

/// On-site lattice Green value `S_n(0) = (1/n³)·Σ_{q≠0} 1/ε_q`.
fn onsite_green(n: usize) -> f64 {
    let s = axis_dispersion(n);
    let mut total = 0.0;
    for (i, &si) in s.iter().enumerate() {
        for (j, &sj) in s.iter().enumerate() {
            let sij = si + sj;
            for (k, &sk) in s.iter().enumerate() {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                total += 1.0 / (sij + sk);
            }
        }
    }
    total / (n as f64).powi(3)
}

/// Zero-mode compensation for the massless kernel: `G∞(0) − S_n(0)` with
/// `G∞(0) ≈ 2·S_{2n}(0) − S_n(0)` (the finite-volume offset is `O(1/n)`).
fn massless_offset(n: usize) -> f64 {
    2.0 * (onsite_green(2 * n) - onsite_green(n))
}

/// Lattice Green values `(1/n³)·Σ_q cos(q·Δ)/(ε + ε_q)` for all wrapped
/// displacements of the `L × L` plane, via a `q₃`-presummed 2D reduction.
/// At `ε = 0` the `q = 0` term is dropped.
fn green_table(n: usize, eps: f64, l: usize) -> Vec<f64> {
    let s = axis_dispersion(n);
    // g[k1][k2] = sum over k3 of 1/(eps + s1 + s2 + s3)
    let mut g = vec![0.0f64; n * n];
    for (i, &si) in s.iter().enumerate() {
        for (j, &sj) in s.iter().enumerate() {
            let sij = eps + si + sj;
            let mut acc = 0.0;
            for (k, &sk) in s.iter().enumerate() {
                if eps == 0.0 && i == 0 && j == 0 && k == 0 {
                    continue;
                }
                acc += 1.0 / (sij + sk);
            }
            g[i * n + j] = acc;
        }
    }
    let norm = 1.0 / (n as f64).powi(3);
    let half = l / 2;
    // values for |dx|, |dy| <= L/2, then reflected onto the wrapped table
    let mut vals = vec![0.0f64; (half + 1) * (half + 1)];
    let mut cos_tab = vec![0.0f64; (half + 1) * n];
    let mut sin_tab = vec![0.0f64; (half + 1) * n];
    for d in 0..=half {
        for k in 0..n {
            let phase = 2.0 * std::f64::consts::PI * (k as f64) * (d as f64) / n as f64;
            cos_tab[d * n + k] = phase.cos();
            sin_tab[d * n + k] = phase.sin();
        }
    }
    for adx in 0..=half {
        for ady in 0..=half {
            let (c1, s1) = (&cos_tab[adx * n..(adx + 1) * n], &sin_tab[adx * n..(adx + 1) * n]);
            let (c2, s2) = (&cos_tab[ady * n..(ady + 1) * n], &sin_tab[ady * n..(ady + 1) * n]);
            let mut acc = 0.0;
            for i in 0..n {
                let (ci, si_) = (c1[i], s1[i]);
                let row = &g[i * n..(i + 1) * n];
                let mut inner = 0.0;
                for j in 0..n {
                    // cos(q1·dx + q2·dy) = c1c2 − s1s2
                    inner += (ci * c2[j] - si_ * s2[j]) * row[j];
                }
                acc += inner;
            }
            vals[adx * (half + 1) + ady] = acc * norm;
        }
    }
    let mut tab = vec![0.0f64; l * l];
    for dy in 0..l {
        for dx in 0..l {
            let adx = dx.min(l - dx);
            let ady = dy.min(l - dy);
            tab[dy * l + dx] = vals[adx * (half + 1) + ady];
        }
    }
    tab
}

/// Boson-mediated kernel `J(Δ) = (A²/N)·Σ_q e^{iq·Δ}/(ε + ε_q)` over the
/// `n³` box, tabulated on minimal-image displacements of the torus.
///
/// Signals `BoxTooSmall` when `n < 2L` or `n` is not a power of two.
pub fn build_kernel_fourier(
    a: f64,
    spec: FourierSpec,
    geometry: TorusGeometry,
) -> Result<InteractionKernel, KernelError> {
    let l = geometry.side();
    if spec.n < 2 * l || !spec.n.is_power_of_two() {
        return Err(KernelError::BoxTooSmall { n: spec.n, min: 2 * l });
    }
    if spec.mass < 0.0 {
        return Err(KernelError::NegativeMass(spec.mass));
    }
    let mut tab = green_table(spec.n, spec.mass, l);
    if spec.mass == 0.0 {
        let offset = massless_offset(spec.n);
        for v in tab.iter_mut() {
            *v += offset;
        }
    }
    let a2 = a * a;
    for v in tab.iter_mut() {
        *v *= a2;
    }
    tab[0] = 0.0; // self-coupling excluded
    Ok(InteractionKernel {
        geometry,
        j0: 0.0,
        table: KernelTable::Translation(tab),
        spec: KernelSpec::Fourier { a, eps: spec.mass, n: Some(spec.n), j0: 0.0 },
    })
}

/// `J(Δ) = A²/d(Δ)^α` with the minimal-image torus metric.
pub fn build_kernel_powerlaw(
    a: f64,
    alpha: f64,
    geometry: TorusGeometry,
) -> Result<InteractionKernel, KernelError> {
    if alpha <= 0.0 {
        return Err(KernelError::NonPositiveAlpha(alpha));
    }
    let l = geometry.side();
    let a2 = a * a;
    let mut tab = vec![0.0f64; l * l];
    for dy in 0..l {
        for dx in 0..l {
            if dx == 0 && dy == 0 {
                continue;
            }
            let mx = dx.min(l - dx) as f64;
            let my = dy.min(l - dy) as f64;
            let d = (mx * mx + my * my).sqrt();
            tab[dy * l + dx] = a2 / d.powf(alpha);
        }
    }
    Ok(InteractionKernel {
        geometry,
        j0: 0.0,
        table: KernelTable::Translation(tab),
        spec: KernelSpec::PowerLaw { a, alpha, j0: 0.0 },
    })
}

/// RKKY-form kernel `J(Δ) = A²·[2kd·cos(2kd) − sin(2kd)]/d⁴`.
pub fn build_kernel_rkky(
    a: f64,
    k: f64,
    geometry: TorusGeometry,
) -> Result<InteractionKernel, KernelError> {
    if k <= 0.0 {
        return Err(KernelError::NonPositiveWavenumber(k));
    }
    let l = geometry.side();
    let a2 = a * a;
    let mut tab = vec![0.0f64; l * l];
    for dy in 0..l {
        for dx in 0..l {
            if dx == 0 && dy == 0 {
                continue;
            }
            let mx = dx.min(l - dx) as f64;
            let my = dy.min(l - dy) as f64;
            let d = (mx * mx + my * my).sqrt();
            let kd2 = 2.0 * k * d;
            tab[dy * l + dx] = a2 * (kd2 * kd2.cos() - kd2.sin()) / d.powi(4);
        }
    }
    Ok(InteractionKernel {
        geometry,
        j0: 0.0,
        table: KernelTable::Translation(tab),
        spec: KernelSpec::Rkky { a, k, j0: 0.0 },
    })
}

/// Nearest-neighbor coupling source for the disordered kernel.
#[derive(Debug, Clone)]
pub enum DisorderCouplings {
    /// One coupling per bond, indexed like lattice bonds.
    PerBond(Vec<f64>),
    /// Uniform samples from `[j_min, j_max]`, reproducible from the seed.
    Sampled { j_min: f64, j_max: f64, seed: u64 },
}

/// Nearest-neighbor-only matrix kernel with per-bond couplings.
pub fn build_kernel_disordered(
    couplings: DisorderCouplings,
    geometry: TorusGeometry,
) -> Result<InteractionKernel, KernelError> {
    use rand::{Rng, SeedableRng};
    let nb = geometry.bonds();
    let (per_bond, spec) = match couplings {
        DisorderCouplings::PerBond(v) => {
            if v.len() != nb {
                return Err(KernelError::CouplingCount { expected: nb, got: v.len() });
            }
            (v, None)
        }
        DisorderCouplings::Sampled { j_min, j_max, seed } => {
            if j_min <= 0.0 {
                return Err(KernelError::NonPositiveCoupling(j_min));
            }
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..nb).map(|_| rng.gen_range(j_min..=j_max)).collect();
            (v, Some((j_min, j_max, seed)))
        }
    };
    if let Some(&bad) = per_bond.iter().find(|&&j| j <= 0.0) {
        return Err(KernelError::NonPositiveCoupling(bad));
    }
    let n = geometry.plaquettes();
    let mut matrix = vec![0.0f64; n * n];
    for (bond, &j) in per_bond.iter().enumerate() {
        let (p, q) = geometry.bond_endpoints(bond);
        matrix[p * n + q] += j;
        matrix[q * n + p] += j;
    }
    let spec = match spec {
        Some((j_min, j_max, seed)) => KernelSpec::Disordered { j_min, j_max, seed, j0: 0.0 },
        None => KernelSpec::Toric { j0: 0.0 },
    };
    Ok(InteractionKernel { geometry, j0: 0.0, table: KernelTable::Matrix(matrix), spec })
}

/// Energy cost of flipping `W_r` alone in the all-up vacuum:
/// `μ(r) = 2·J0 + 2·Σ_{r′≠r} J(r, r′)`.
pub fn chemical_potential(kernel: &InteractionKernel, r: usize) -> f64 {
    2.0 * kernel.j0() + 2.0 * kernel.partner_sum(r)
}

/// Vacuum expectation scale of the boson displacement,
/// `S = (A/N)·Σ_q [Σ_{r′} e^{iq(r′−r)}]/(ε + ε_q)` at the plane center.
pub fn boson_displacement_scaling(
    a: f64,
    spec: FourierSpec,
    geometry: TorusGeometry,
) -> Result<f64, KernelError> {
    let l = geometry.side();
    if spec.n < 2 * l || !spec.n.is_power_of_two() {
        return Err(KernelError::BoxTooSmall { n: spec.n, min: 2 * l });
    }
    if spec.mass < 0.0 {
        return Err(KernelError::NegativeMass(spec.mass));
    }
    let mut green = green_table(spec.n, spec.mass, l);
    if spec.mass == 0.0 {
        let offset = massless_offset(spec.n);
        for v in green.iter_mut() {
            *v += offset;
        }
    }
    // plane offsets relative to the center site, including the self term
    let c = l / 2;
    let mut total = 0.0;
    for y in 0..l {
        for x in 0..l {
            let dx = (x as i64 - c as i64).unsigned_abs() as usize;
            let dy = (y as i64 - c as i64).unsigned_abs() as usize;
            total += green[dy * l + dx];
        }
    }
    Ok(a * total)
}

/// Static potential of one flipped plaquette at height `y` above a
/// horizontal domain wall splitting the torus into `W = +1` (lower half)
/// and `W = −1` (upper half), relative to `y = L/4`.
pub fn domain_wall_profile(
    kernel: &InteractionKernel,
    geometry: TorusGeometry,
) -> Vec<(usize, f64)> {
    let l = geometry.side();
    let half = l / 2;
    let spin = |r: usize| -> f64 {
        if r / l < half {
            1.0
        } else {
            -1.0
        }
    };
    let probe_x = 0;
    let potential = |y: usize| -> f64 {
        let row = half - 1 + y;
        let s = geometry.plaquette(probe_x, row);
        let mut field = 0.0;
        for rp in 0..geometry.plaquettes() {
            if rp != s {
                field += kernel.pair(s, rp) * spin(rp);
            }
        }
        // flipping W_s: dE = 2·J0·W_s + 2·W_s·h_s with W_s = −1 in the upper half
        -2.0 * kernel.j0() - 2.0 * field
    };
    let reference = potential(l / 4);
    (1..half).map(|y| (y, potential(y) - reference)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(l: usize) -> TorusGeometry {
        TorusGeometry::new(l).unwrap()
    }

    /// Independent direct triple-sum over all q, no reduction tricks.
    fn brute_green(n: usize, eps: f64, dx: i64, dy: i64) -> f64 {
        let mut total = 0.0;
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    if eps == 0.0 && k1 == 0 && k2 == 0 && k3 == 0 {
                        continue;
                    }
                    let q1 = 2.0 * std::f64::consts::PI * k1 as f64 / n as f64;
                    let q2 = 2.0 * std::f64::consts::PI * k2 as f64 / n as f64;
                    let q3 = 2.0 * std::f64::consts::PI * k3 as f64 / n as f64;
                    let eps_q = 4.0
                        * ((q1 / 2.0).sin().powi(2)
                            + (q2 / 2.0).sin().powi(2)
                            + (q3 / 2.0).sin().powi(2));
                    total += (q1 * dx as f64 + q2 * dy as f64).cos() / (eps + eps_q);
                }
            }
        }
        total / (n as f64).powi(3)
    }

    #[test]
    fn fourier_table_matches_direct_triple_sum() {
        let g = geom(8);
        let kern = build_kernel_fourier(1.0, FourierSpec { n: 16, mass: 0.0 }, g).unwrap();
        let offset = 2.0 * (brute_green(32, 0.0, 0, 0) - brute_green(16, 0.0, 0, 0));
        for (dx, dy) in [(1i64, 0i64), (2, 1), (3, 3), (4, 0)] {
            let want = brute_green(16, 0.0, dx, dy) + offset;
            let got = kern.pair_at_displacement(dx, dy).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "d=({dx},{dy}): got {got}, brute {want}"
            );
        }
        let screened = build_kernel_fourier(1.0, FourierSpec { n: 16, mass: 0.3 }, g).unwrap();
        for (dx, dy) in [(1i64, 0i64), (2, 2)] {
            let want = brute_green(16, 0.3, dx, dy);
            let got = screened.pair_at_displacement(dx, dy).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn massless_kernel_reproduces_coulomb_tail() {
        // A=1, eps=0, n=64, d=(8,0): within 5% of 1/(4*pi*8)
        let g = geom(16);
        let kern = build_kernel_fourier(1.0, FourierSpec { n: 64, mass: 0.0 }, g).unwrap();
        let got = kern.pair_at_displacement(8, 0).unwrap();
        let want = 1.0 / (4.0 * std::f64::consts::PI * 8.0);
        assert!(
            (got - want).abs() < 0.05 * want,
            "J(8,0) = {got}, continuum {want}, ratio {}",
            got / want
        );
    }

    #[test]
    fn fourier_table_is_even_in_displacement() {
        let g = geom(8);
        let kern = build_kernel_fourier(1.3, FourierSpec { n: 16, mass: 0.1 }, g).unwrap();
        for dy in -4i64..=4 {
            for dx in -4i64..=4 {
                let a = kern.pair_at_displacement(dx, dy).unwrap();
                let b = kern.pair_at_displacement(-dx, -dy).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn isotropic_tables_respect_the_torus_point_group() {
        let g = geom(8);
        for kern in [
            build_kernel_fourier(1.0, FourierSpec { n: 16, mass: 0.0 }, g).unwrap(),
            build_kernel_powerlaw(1.0, 1.5, g).unwrap(),
            build_kernel_rkky(1.0, 0.7, g).unwrap(),
        ] {
            for dy in 0i64..=4 {
                for dx in 0i64..=4 {
                    let a = kern.pair_at_displacement(dx, dy).unwrap();
                    for (rx, ry) in [(dy, dx), (-dx, dy), (dx, -dy)] {
                        let b = kern.pair_at_displacement(rx, ry).unwrap();
                        assert!(
                            (a - b).abs() <= 1e-12 * a.abs().max(1e-300),
                            "({dx},{dy}) vs ({rx},{ry}): {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn screened_kernel_decays_like_yukawa() {
        // ratio J(12)/J(6) at eps = 0.25 vs (6/12)*exp(-0.5*6), within 20%
        let g = geom(24);
        let kern = build_kernel_fourier(1.0, FourierSpec { n: 64, mass: 0.25 }, g).unwrap();
        let ratio =
            kern.pair_at_displacement(12, 0).unwrap() / kern.pair_at_displacement(6, 0).unwrap();
        let want = 0.5 * (-0.5 * 6.0f64).exp();
        assert!((ratio - want).abs() < 0.2 * want, "ratio {ratio} vs screened-continuum {want}");
    }

    #[test]
    fn coulomb_tail_bounded_on_intermediate_scales() {
        // J(d)*d within fixed positive bounds for L/8 <= d <= L/4
        let g = geom(32);
        let kern = build_kernel_fourier(1.0, FourierSpec { n: 64, mass: 0.0 }, g).unwrap();
        let inv4pi = 1.0 / (4.0 * std::f64::consts::PI);
        for d in 4..=8i64 {
            let jd = kern.pair_at_displacement(d, 0).unwrap() * d as f64;
            assert!(jd > 0.9 * inv4pi && jd < 1.15 * inv4pi, "J*d = {jd} at d = {d}");
        }
    }

    #[test]
    fn mass_monotonicity() {
        let g = geom(8);
        let masses = [0.0, 0.05, 0.25, 1.0, 4.0];
        let values: Vec<f64> = masses
            .iter()
            .map(|&eps| {
                build_kernel_fourier(1.0, FourierSpec { n: 32, mass: eps }, g)
                    .unwrap()
                    .pair_at_displacement(3, 0)
                    .unwrap()
            })
            .collect();
        for w in values.windows(2) {
            assert!(w[0] > w[1], "J not strictly decreasing in mass: {values:?}");
        }
    }

    #[test]
    fn box_too_small_is_rejected() {
        let g = geom(16);
        assert!(matches!(
            build_kernel_fourier(1.0, FourierSpec { n: 16, mass: 0.0 }, g),
            Err(KernelError::BoxTooSmall { .. })
        ));
        // non power of two
        assert!(matches!(
            build_kernel_fourier(1.0, FourierSpec { n: 48, mass: 0.0 }, g),
            Err(KernelError::BoxTooSmall { .. })
        ));
    }

    #[test]
    fn powerlaw_values() {
        let g = geom(12);
        let k1 = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
        assert!((k1.pair_at_displacement(3, 4).unwrap() - 0.2).abs() < 1e-15);
        let k3 = build_kernel_powerlaw(1.0, 3.0, g).unwrap();
        assert_eq!(k3.pair_at_displacement(1, 0).unwrap(), 1.0);
        assert_eq!(k3.pair_at_displacement(2, 0).unwrap(), 0.125);
        assert!(build_kernel_powerlaw(1.0, 0.0, g).is_err());
        assert!(build_kernel_powerlaw(1.0, -1.0, g).is_err());
    }

    #[test]
    fn powerlaw_minimal_image() {
        let g = geom(8);
        let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
        assert_eq!(k.pair_at_displacement(7, 0).unwrap(), k.pair_at_displacement(1, 0).unwrap());
        let a = g.plaquette(0, 0);
        let b = g.plaquette(7, 0);
        assert_eq!(k.pair(a, b), 1.0);
    }

    #[test]
    fn rkky_signs_and_bound() {
        let g = geom(16);
        // choose k so that 2kd hits pi at d = 2: k = pi/4
        let k = std::f64::consts::PI / 4.0;
        let kern = build_kernel_rkky(1.0, k, g).unwrap();
        let d = 2.0f64;
        let at_pi = kern.pair_at_displacement(2, 0).unwrap();
        let want = -std::f64::consts::PI / d.powi(4);
        assert!((at_pi - want).abs() < 1e-12, "{at_pi} vs {want}");
        // 2kd = 2pi at d = 4
        let at_2pi = kern.pair_at_displacement(4, 0).unwrap();
        let want2 = 2.0 * std::f64::consts::PI / 4.0f64.powi(4);
        assert!((at_2pi - want2).abs() < 1e-12);
        assert!(at_2pi > 0.0 && at_pi < 0.0);
        for dy in 0..16i64 {
            for dx in 0..16i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let j = kern.pair_at_displacement(dx, dy).unwrap();
                let mx = dx.min(16 - dx) as f64;
                let my = dy.min(16 - dy) as f64;
                let dd = (mx * mx + my * my).sqrt();
                assert!(j.abs() <= (2.0 * k * dd + 1.0) / dd.powi(4) + 1e-15);
            }
        }
        assert!(build_kernel_rkky(1.0, 0.0, g).is_err());
    }

    #[test]
    fn disordered_uniform_equals_translation_invariant_nn() {
        let g = geom(4);
        let nb = g.bonds();
        let k = build_kernel_disordered(DisorderCouplings::PerBond(vec![0.7; nb]), g).unwrap();
        for r in 0..g.plaquettes() {
            for rp in 0..g.plaquettes() {
                if r == rp {
                    continue;
                }
                let want = if g.l1_distance(r, rp) == 1 { 0.7 } else { 0.0 };
                assert_eq!(k.pair(r, rp), want, "r={r} rp={rp}");
            }
        }
    }

    #[test]
    fn disordered_sampler_is_deterministic_and_stores_mean() {
        let g = geom(6);
        let spec = KernelSpec::Disordered { j_min: 0.5, j_max: 1.5, seed: 9, j0: 0.0 };
        let a = spec.build(g).unwrap();
        let b = spec.build(g).unwrap();
        for r in 0..g.plaquettes() {
            for rp in 0..g.plaquettes() {
                assert_eq!(a.pair(r, rp), b.pair(r, rp));
            }
        }
        match a.spec() {
            KernelSpec::Disordered { j_min, j_max, .. } => {
                assert_eq!((j_min + j_max) / 2.0, 1.0)
            }
            other => panic!("wrong spec {other:?}"),
        }
        assert!(build_kernel_disordered(
            DisorderCouplings::Sampled { j_min: 0.0, j_max: 1.0, seed: 1 },
            g
        )
        .is_err());
        assert!(build_kernel_disordered(DisorderCouplings::PerBond(vec![1.0; 3]), g).is_err());
    }

    #[test]
    fn chemical_potential_of_bare_kernel() {
        let g = geom(8);
        let k = InteractionKernel::bare(g, 0.75);
        assert_eq!(chemical_potential(&k, 12), 1.5);
    }

    /// Direct double-sum oracle for the chemical potential.
    fn mu_oracle(kernel: &InteractionKernel, r: usize) -> f64 {
        let n = kernel.geometry().plaquettes();
        let mut s = 0.0;
        for rp in 0..n {
            if rp != r {
                s += kernel.pair(r, rp);
            }
        }
        2.0 * kernel.j0() + 2.0 * s
    }

    #[test]
    fn chemical_potential_diverges_linearly_for_alpha_one() {
        let mu16 = {
            let g = geom(16);
            let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
            let m = chemical_potential(&k, 0);
            assert!((m - mu_oracle(&k, 0)).abs() < 1e-12 * m);
            m
        };
        let mu32 = {
            let g = geom(32);
            let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
            chemical_potential(&k, 0)
        };
        let ratio = mu32 / mu16;
        assert!((ratio - 2.0).abs() < 0.1 * 2.0, "mu(2L)/mu(L) = {ratio}");
    }

    #[test]
    fn chemical_potential_converges_for_alpha_three() {
        // The tail of the d^-3 sum decays like 1/L, so doubling 16 -> 32
        // moves mu by ~4.3% (direct-summation value), shrinking with size.
        let mu = |l: usize| {
            let g = geom(l);
            let k = build_kernel_powerlaw(1.0, 3.0, g).unwrap();
            chemical_potential(&k, 0)
        };
        let (m16, m32, m64) = (mu(16), mu(32), mu(64));
        let d1 = (m32 - m16).abs() / m16;
        let d2 = (m64 - m32).abs() / m32;
        assert!(d1 > 0.03 && d1 < 0.05, "16->32 moved by {d1}");
        assert!(d2 < d1, "convergence should improve: {d2} vs {d1}");
    }

    #[test]
    fn boson_displacement_scaling_is_linear_in_size_when_massless() {
        let s16 =
            boson_displacement_scaling(1.0, FourierSpec { n: 32, mass: 0.0 }, geom(16)).unwrap();
        let s32 =
            boson_displacement_scaling(1.0, FourierSpec { n: 64, mass: 0.0 }, geom(32)).unwrap();
        let ratio = s32 / s16;
        assert!((ratio - 2.0).abs() < 0.1 * 2.0, "S(2L)/S(L) = {ratio}");
        assert_eq!(
            boson_displacement_scaling(0.0, FourierSpec { n: 32, mass: 0.0 }, geom(16)).unwrap(),
            0.0
        );
    }

    #[test]
    fn boson_displacement_scaling_saturates_with_mass() {
        let g = geom(32);
        let s1 = boson_displacement_scaling(1.0, FourierSpec { n: 64, mass: 0.0625 }, g).unwrap();
        let s4 = boson_displacement_scaling(1.0, FourierSpec { n: 64, mass: 0.25 }, g).unwrap();
        let ratio = s1 / s4;
        assert!((ratio - 2.0).abs() < 0.15 * 2.0, "S(eps)/S(4 eps) = {ratio}");
    }

    #[test]
    fn domain_wall_profile_flat_for_zero_kernel() {
        let g = geom(8);
        let k = InteractionKernel::bare(g, 1.0);
        for (_, v) in domain_wall_profile(&k, g) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn domain_wall_profile_monotone_and_superlinear_for_alpha_one() {
        let depth = |l: usize| {
            let g = geom(l);
            let k = build_kernel_powerlaw(1.0, 1.0, g).unwrap();
            let prof = domain_wall_profile(&k, g);
            // monotone increasing from the wall to the midline y = L/4
            for w in prof[..l / 4].windows(2) {
                assert!(w[1].1 > w[0].1, "profile not monotone at L={l}: {prof:?}");
            }
            let v = |y: usize| prof.iter().find(|&&(d, _)| d == y).unwrap().1;
            v(l / 4) - v(1)
        };
        let (d8, d16, d32) = (depth(8), depth(16), depth(32));
        // direct-summation values: depth grows like L*log L; frozen ratios
        let r1 = d16 / d8;
        let r2 = d32 / d16;
        assert!((r1 - 3.266).abs() < 0.05, "depth(16)/depth(8) = {r1}");
        assert!((r2 - 2.481).abs() < 0.05, "depth(32)/depth(16) = {r2}");
        assert!(r1 > 2.0 && r2 > 2.0);
    }

    #[test]
    fn table_csv_has_all_displacements() {
        let g = geom(4);
        let k = build_kernel_powerlaw(1.0, 2.0, g).unwrap();
        let mut buf = Vec::new();
        k.write_table_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 16);
        assert!(text.lines().next().unwrap().starts_with("dx,dy,J"));
    }

    #[test]
    fn kernel_spec_roundtrips_through_json() {
        let spec = KernelSpec::Fourier { a: 0.5, eps: 0.25, n: Some(32), j0: 0.1 };
        let json = serde_json::to_string(&spec).unwrap();
        let back: KernelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
        let parsed: KernelSpec =
            serde_json::from_str(r#"{"family":"power_law","a":1.0,"alpha":1.0}"#).unwrap();
        assert_eq!(parsed, KernelSpec::PowerLaw { a: 1.0, alpha: 1.0, j0: 0.0 });
    }
}
