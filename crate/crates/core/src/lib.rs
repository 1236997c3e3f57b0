//! Numerical toolkit for the Happer spin model
//!
//! `H = n_B·S + x S·L + y S·(3ââ − I)·S`
//!
//! with an electron spin-1 `S` coupled to a nuclear spin `L` and driven by a
//! magnetic field whose direction `n_B(θ, φ)` sweeps the unit sphere.
//!
//! The crate is layered bottom-up:
//!
//! * [`spin`]: angular-momentum matrices, Kronecker products, commutators.
//! * [`model`]: every Hamiltonian variant, the conserved `J_{n_B}`, projectors.
//! * [`spectrum`]: Hermitian eigensolves, level labelling, crossing detection.
//! * [`geometry`]: sphere meshes, Berry / Wilczek–Zee connections and
//!   curvatures, Chern numbers (finite-difference and link-variable schemes),
//!   loop phases.
//! * [`degenerate_basis`]: closed-form bases of the degenerate subspace for
//!   `L = 1` and `L = 2`.
//! * [`dynamics`]: unitary propagation under a rotating or ramped field,
//!   geometric-phase extraction and Landau–Zener scans.
//!
//! Energies are dimensionless, in units where the Zeeman coefficient is one.

pub mod degenerate_basis;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod model;
pub mod spectrum;
pub mod spin;
pub mod tolerance;

pub use error::{Error, Result};
pub use spin::ComplexMatrix;
