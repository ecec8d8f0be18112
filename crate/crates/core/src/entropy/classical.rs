//! Monte Carlo coding of continuous orbits by partition atoms.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::ToralMatrix;
use crate::rng::par_blocks;
use crate::scalar::{frac, Real};

use super::partition::{rect_bounds_f64, Partition};
use super::table::{checked_strings, OrbitCodes, ProbabilityTable};

pub const MIN_SAMPLES: usize = 1000;

/// Flattened `f64` rectangle bounds for fast atom lookup.
#[derive(Debug, Clone)]
pub(crate) struct Locator {
    rects: Vec<(u8, [f64; 4])>,
}

impl Locator {
    pub(crate) fn new(p: &Partition) -> Self {
        let rects = p
            .atoms()
            .iter()
            .enumerate()
            .flat_map(|(i, a)| a.rects.iter().map(move |r| (i as u8, rect_bounds_f64(r))))
            .collect();
        Self { rects }
    }

    #[inline]
    pub(crate) fn locate(&self, x: [f64; 2]) -> u8 {
        for &(a, [x0, x1, y0, y1]) in &self.rects {
            if x0 <= x[0] && x[0] < x1 && y0 <= x[1] && x[1] < y1 {
                return a;
            }
        }
        unreachable!("atoms cover the torus")
    }
}

/// Samples `x` uniformly and returns the codes of `x, Tx, …, T^{n−1}x`.
pub fn sample_orbit_codes(t: &ToralMatrix, p: &Partition, n: u32, samples: usize, seed: u64) -> Result<OrbitCodes> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!("samples = {samples} < {MIN_SAMPLES}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("string length must be ≥ 1".into()));
    }
    let d = p.len() as u32;
    checked_strings(d, n)?;
    let loc = Locator::new(p);
    let m = t.as_int().to_real::<f64>();
    let blocks = par_blocks(samples, seed, |rng, count| {
        (0..count)
            .map(|_| {
                let mut x: [f64; 2] = [rng.gen(), rng.gen()];
                let mut code = 0u64;
                for k in 0..n {
                    code = code * d as u64 + loc.locate(x) as u64;
                    if k + 1 < n {
                        x = [frac(m[0][0] * x[0] + m[0][1] * x[1]), frac(m[1][0] * x[0] + m[1][1] * x[1])];
                    }
                }
                code
            })
            .collect::<Vec<u64>>()
    });
    OrbitCodes::new(d, n, blocks.concat())
}

/// Monte Carlo estimate of `μ_i = μ(E_{i₀} ∩ T⁻¹E_{i₁} ∩ … ∩ T^{1−n}E_{i_{n−1}})`.
pub fn classical_probabilities_mc(
    t: &ToralMatrix,
    p: &Partition,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<ProbabilityTable<f64>> {
    Ok(sample_orbit_codes(t, p, n, samples, seed)?.table(n))
}

/// Refinement entropies `S(n)`, rates `S(n)/n` and increments
/// `S(n) − S(n−1)` for `n = 1..=n_max`, with `S(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRates<R> {
    pub entropy: Vec<R>,
    pub rate: Vec<R>,
    pub increment: Vec<R>,
    /// Delta-method standard error of each `S(n)`; empty for exact tables.
    pub std_error: Vec<R>,
}

impl<R: Real> EntropyRates<R> {
    pub fn from_entropies(entropy: Vec<R>, std_error: Vec<R>) -> Self {
        let rate = entropy.iter().enumerate().map(|(i, &s)| s / R::count(i + 1)).collect();
        let increment = entropy
            .iter()
            .enumerate()
            .map(|(i, &s)| if i == 0 { s } else { s - entropy[i - 1] })
            .collect();
        Self { entropy, rate, increment, std_error }
    }
}

/// Plug-in entropy and its standard error `√((Σ p log²p − S²)/M)`.
pub(crate) fn entropy_with_error(codes: &OrbitCodes, n: u32) -> (f64, f64) {
    let m = codes.samples() as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for (_, k) in codes.counts(n) {
        let p = k as f64 / m;
        let l = p.ln();
        s -= p * l;
        s2 += p * l * l;
    }
    (s, ((s2 - s * s).max(0.0) / m).sqrt())
}

pub fn ks_entropy_rate(
    t: &ToralMatrix,
    p: &Partition,
    n_max: u32,
    samples: usize,
    seed: u64,
) -> Result<EntropyRates<f64>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max = {n_max} < 2")));
    }
    let codes = sample_orbit_codes(t, p, n_max, samples, seed)?;
    let (entropy, err): (Vec<f64>, Vec<f64>) = (1..=n_max).map(|n| entropy_with_error(&codes, n)).unzip();
    Ok(EntropyRates::from_entropies(entropy, err))
}
