//! Lattice discretizations of hyperbolic, parabolic and elliptic toral
//! automorphisms.
//!
//! * [`maps`]: classification, spectral data, diameters and breaking-time
//!   estimates of `SL₂(ℤ)` matrices.
//! * [`lattice`]: the `N × N` lattice, rounding, exact mod-`N` dynamics and
//!   permutation tables.
//! * [`discretize`]: anti-Wick discretization, the lattice-state kernel,
//!   Egorov defects, localization and shadowing checks.
//! * [`entropy`]: classical orbit codings and coherent-state entropies.
//!
//! Floating point code is generic over [`Real`]; `*64` aliases pin it to `f64`.

pub mod discretize;
pub mod entropy;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod maps;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use geometry::{Interval, Rect};
pub use lattice::{LatticeConfig, LatticePoint, Permutation, TorusPoint};
pub use maps::{BreakingTime, Family, SpectralData, ToralMatrix};
pub use scalar::{Rational, Real};

pub type SpectralData64 = maps::SpectralData<f64>;
pub type SpectralData32 = maps::SpectralData<f32>;
pub type TorusPoint64 = lattice::TorusPoint<f64>;
pub type DiagonalObservable64 = discretize::DiagonalObservable<f64>;
pub type ProbabilityTable64 = entropy::ProbabilityTable<f64>;
/// Probability table with exact rational entries.
pub type ExactTable = entropy::ProbabilityTable<Rational>;
