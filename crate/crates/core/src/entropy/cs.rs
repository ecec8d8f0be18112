//! Coherent-state measurement probabilities of the discretized dynamics.
//!
//! With the tracial state and the Kronecker-delta lattice kernel, the
//! probability of the record `i = i₀ … i_{n−1}` collapses onto lattice orbits:
//!
//! `P_i = N⁻² Σ_ℓ Π_{k<n} w(U^k ℓ, E_{i_{n−1−k}})`
//!
//! where `w(ℓ, E) = N² μ(cell(ℓ) ∩ E)`. Reading the orbit `ℓ, Uℓ, …` forward
//! therefore spells the reversed string `î`.

use std::collections::BTreeMap;

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeConfig, LatticePoint, DEFAULT_CAPACITY};
use crate::maps::ToralMatrix;
use crate::scalar::Rational;

use super::partition::{CellWeightTable, Partition};
use super::table::{checked_strings, OrbitCodes, ProbabilityTable};

/// Largest `Dⁿ` accepted on the weighted (unaligned) path.
pub const DEFAULT_STRING_CAP: u128 = 1 << 20;

/// The one-step evolution between measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "matrix")]
pub enum Dynamics {
    Map(ToralMatrix),
    /// No evolution: the pure measurement process.
    Identity,
}

impl Dynamics {
    fn step_matrix(&self, n: u64) -> [[u64; 2]; 2] {
        match self {
            Dynamics::Map(t) => t.power_mod(1, n),
            Dynamics::Identity => [[1 % n, 0], [0, 1 % n]],
        }
    }
}

#[inline]
fn step(m: &[[u64; 2]; 2], p: (u64, u64), n: u64) -> (u64, u64) {
    // entries and coordinates are below 2³¹, so each sum fits in u64
    ((m[0][0] * p.0 + m[0][1] * p.1) % n, (m[1][0] * p.0 + m[1][1] * p.1) % n)
}

/// Forward orbit codes `atom(ℓ), atom(Uℓ), …` (first most significant) of
/// every lattice point, in row-major order of `ℓ`.
fn orbit_codes(dynamics: &Dynamics, cfg: &LatticeConfig, atoms: &[u8], d: u32, n: u32) -> Vec<u64> {
    let size = cfg.n();
    let m = dynamics.step_matrix(size);
    (0..size)
        .into_par_iter()
        .flat_map_iter(|p1| {
            (0..size).map(move |p2| {
                let mut p = (p1, p2);
                let mut code = 0u64;
                for k in 0..n {
                    code = code * d as u64 + atoms[(p.0 * size + p.1) as usize] as u64;
                    if k + 1 < n {
                        p = step(&m, p, size);
                    }
                }
                code
            })
        })
        .collect()
}

fn aligned_grid(cfg: &LatticeConfig, weights: &CellWeightTable) -> Option<Vec<u8>> {
    weights.aligned_atoms().map(|a| {
        debug_assert_eq!(a.len() as u64, cfg.script_n());
        a
    })
}

/// Sorted lattice-orbit codes for an aligned partition, usable for every
/// length up to `n_max`.
pub fn cs_orbit_codes(dynamics: &Dynamics, cfg: &LatticeConfig, p: &Partition, n_max: u32) -> Result<OrbitCodes> {
    cfg.check_capacity(DEFAULT_CAPACITY)?;
    let d = p.len() as u32;
    checked_strings(d, n_max)?;
    let weights = p.cell_weights(cfg);
    let atoms = aligned_grid(cfg, &weights).ok_or(Error::AlignmentRequired {
        n: cfg.n(),
        strings: (d as u128).saturating_pow(n_max),
        cap: 0,
    })?;
    OrbitCodes::new(d, n_max, orbit_codes(dynamics, cfg, &atoms, d, n_max))
}

/// `P_i^CS` for strings of length `n`, keyed by `i`.
///
/// Aligned partitions take the histogram fast path; otherwise the weighted
/// products are expanded exactly, provided `Dⁿ` stays within
/// [`DEFAULT_STRING_CAP`].
pub fn cs_probabilities(
    dynamics: &Dynamics,
    cfg: &LatticeConfig,
    p: &Partition,
    n: u32,
) -> Result<ProbabilityTable<Rational>> {
    cs_probabilities_with_cap(dynamics, cfg, p, n, DEFAULT_STRING_CAP)
}

pub fn cs_probabilities_with_cap(
    dynamics: &Dynamics,
    cfg: &LatticeConfig,
    p: &Partition,
    n: u32,
    cap: u128,
) -> Result<ProbabilityTable<Rational>> {
    if n == 0 {
        return Err(Error::InvalidArgument("string length must be ≥ 1".into()));
    }
    cfg.check_capacity(DEFAULT_CAPACITY)?;
    let d = p.len() as u32;
    checked_strings(d, n)?;
    let weights = p.cell_weights(cfg);
    match aligned_grid(cfg, &weights) {
        Some(atoms) => {
            let codes = OrbitCodes::new(d, n, orbit_codes(dynamics, cfg, &atoms, d, n))?;
            Ok(codes.exact_table(n).reversed())
        }
        None => {
            let strings = (d as u128).pow(n);
            if strings > cap {
                return Err(Error::AlignmentRequired { n: cfg.n(), strings, cap });
            }
            weighted_table(dynamics, cfg, &weights, n)
        }
    }
}

/// The weighted-product formula, evaluated exactly for any partition.
pub fn cs_probabilities_general(
    dynamics: &Dynamics,
    cfg: &LatticeConfig,
    p: &Partition,
    n: u32,
    cap: u128,
) -> Result<ProbabilityTable<Rational>> {
    if n == 0 {
        return Err(Error::InvalidArgument("string length must be ≥ 1".into()));
    }
    cfg.check_capacity(DEFAULT_CAPACITY)?;
    let d = p.len() as u32;
    let strings = (d as u128).checked_pow(n).unwrap_or(u128::MAX);
    if strings > cap {
        return Err(Error::CapacityExceeded { what: "symbol strings", requested: strings, limit: cap });
    }
    weighted_table(dynamics, cfg, &p.cell_weights(cfg), n)
}

fn overflow() -> Error {
    Error::Overflow("coherent-state probabilities")
}

fn weighted_table(
    dynamics: &Dynamics,
    cfg: &LatticeConfig,
    weights: &CellWeightTable,
    n: u32,
) -> Result<ProbabilityTable<Rational>> {
    let size = cfg.n();
    let d = weights.atoms() as u64;
    let m = dynamics.step_matrix(size);
    let per_row: Vec<Result<BTreeMap<u64, Rational>>> = (0..size)
        .into_par_iter()
        .map(|p1| {
            let mut acc: BTreeMap<u64, Rational> = BTreeMap::new();
            for p2 in 0..size {
                let mut p = (p1, p2);
                let mut supports = Vec::with_capacity(n as usize);
                for k in 0..n {
                    supports.push(weights.support(LatticePoint { p1: p.0, p2: p.1 }));
                    if k + 1 < n {
                        p = step(&m, p, size);
                    }
                }
                expand(&supports, 0, 0, Rational::one(), d, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total: BTreeMap<u64, Rational> = BTreeMap::new();
    for row in per_row {
        for (c, w) in row? {
            let slot = total.entry(c).or_insert_with(Rational::zero);
            *slot = slot.checked_add(&w).ok_or_else(overflow)?;
        }
    }
    let norm = Rational::from_integer(cfg.script_n() as i128);
    let mut entries = BTreeMap::new();
    for (c, w) in total {
        entries.insert(c, w.checked_div(&norm).ok_or_else(overflow)?);
    }
    Ok(ProbabilityTable::from_entries(n, d as u32, entries)?.reversed())
}

/// Adds every product `Π_k w_k` over the per-step supports, keyed by the
/// forward code.
fn expand(
    supports: &[Vec<(usize, Rational)>],
    k: usize,
    code: u64,
    weight: Rational,
    d: u64,
    acc: &mut BTreeMap<u64, Rational>,
) -> Result<()> {
    if k == supports.len() {
        let slot = acc.entry(code).or_insert_with(Rational::zero);
        *slot = slot.checked_add(&weight).ok_or_else(overflow)?;
        return Ok(());
    }
    for (a, w) in &supports[k] {
        let next = weight.checked_mul(w).ok_or_else(overflow)?;
        expand(supports, k + 1, code * d + *a as u64, next, d, acc)?;
    }
    Ok(())
}

/// Shannon entropy of the coherent-state record of length `n`.
pub fn cs_entropy(dynamics: &Dynamics, cfg: &LatticeConfig, p: &Partition, n: u32) -> Result<f64> {
    Ok(cs_probabilities(dynamics, cfg, p, n)?.entropy())
}

/// `S(n)` for `n = 1..=n_max` from a single orbit pass; aligned partitions only.
pub fn cs_entropies(dynamics: &Dynamics, cfg: &LatticeConfig, p: &Partition, n_max: u32) -> Result<Vec<f64>> {
    let codes = cs_orbit_codes(dynamics, cfg, p, n_max)?;
    Ok((1..=n_max).map(|n| codes.entropy(n)).collect())
}
