//! Desk-scale laboratory for the thermal memory time of a 2D topological
//! memory whose anyons interact through long-range kernels.
//!
//! The crate simulates a single anyon species on an `L × L` torus of
//! plaquettes. Bond flips create, hop and annihilate anyon pairs; a kinetic
//! Monte Carlo loop evolves the configuration against a heat bath; a
//! matching decoder decides when the accumulated error chain has become a
//! logical error. Interaction kernels range from the bare gapped code
//! (no pair coupling) to boson-mediated `1/r` tails, screened (massive)
//! variants, power laws, RKKY oscillations and nearest-neighbor disorder.
//!
//! Modules:
//! - [`lattice`]: torus geometry, anyon configurations, homology bookkeeping
//! - [`kernels`]: interaction kernel construction and kernel-level observables
//! - [`dynamics`]: energies, incremental updates and the KMC event loop
//! - [`decoder`]: minimum-weight matching and the logical failure verdict
//! - [`barrier`]: exact minimax energy-barrier search on small lattices
//! - [`fieldtheory`]: discrete 3D scalar-field solver and energy functionals
//! - [`ising1d`]: disordered 1D Ising chain benchmark
//! - [`harness`]: experiment orchestration, seeding, fits, persistence

pub mod barrier;
pub mod decoder;
pub mod dynamics;
pub mod fieldtheory;
pub mod harness;
pub mod ising1d;
pub mod kernels;
pub mod lattice;
