//! Coherent-state versus classical entropies along a sweep of lattice sizes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeConfig;
use crate::maps::{classify, Family, ToralMatrix};
use crate::scalar::Rational;

use super::classical::{entropy_with_error, sample_orbit_codes, EntropyRates};
use super::cs::{cs_entropy, cs_orbit_codes, cs_probabilities, Dynamics};
use super::partition::Partition;
use super::table::{merge_abs_diff, shannon_entropy, ProbabilityTable};

/// How the partition is placed on each lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "partition")]
pub enum PartitionSpec {
    /// Used as given. Unaligned partitions need `Dⁿ` within the string cap.
    Fixed(Partition),
    /// Snapped to each lattice before use.
    Snapped(Partition),
}

impl PartitionSpec {
    pub fn resolve(&self, cfg: &LatticeConfig) -> Result<(Partition, Rational)> {
        match self {
            PartitionSpec::Fixed(p) => Ok((p.clone(), Rational::from_integer(0))),
            PartitionSpec::Snapped(p) => p.snap(cfg),
        }
    }
}

/// Rule deciding that the two entropies have separated at horizon `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum BreakRule {
    /// `|S_CS − S_KS| / n > value`.
    PerStep(f64),
    /// `|S_CS − S_KS| > value`.
    Absolute(f64),
}

impl BreakRule {
    /// `0.1 ξ` per step for hyperbolic maps, an absolute gap of 0.05 otherwise.
    pub fn default_for(t: &ToralMatrix) -> Self {
        let s = classify::<f64>(t);
        match s.family {
            Family::Hyperbolic => BreakRule::PerStep(0.1 * s.xi),
            _ => BreakRule::Absolute(0.05),
        }
    }

    pub fn broken(&self, abs_gap: f64, n: u32) -> bool {
        match *self {
            BreakRule::PerStep(v) => abs_gap / n as f64 > v,
            BreakRule::Absolute(v) => abs_gap > v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonConfig {
    pub n_max: u32,
    pub lattice_sizes: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    pub rule: BreakRule,
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let m = xs.len();
    if m < 2 || ys.len() != m {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(LineFit { slope, intercept: my - slope * mx, points: m })
}

/// `Δ = Σ|p − q|` and the continuity bound `Δ log Dⁿ + η̃(Δ)` on the
/// entropy difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FannesBound {
    pub delta: f64,
    pub bound: f64,
    pub gap: f64,
    pub holds: bool,
}

/// `−x log x` up to `1/e`, then constant at its maximum `1/e`.
pub fn eta_tilde(x: f64) -> f64 {
    let e_inv = (-1f64).exp();
    if x <= 0.0 {
        0.0
    } else if x <= e_inv {
        -x * x.ln()
    } else {
        e_inv
    }
}

fn fannes_from(delta: f64, n: u32, d: u32, gap: f64) -> FannesBound {
    let bound = delta * n as f64 * (d as f64).ln() + eta_tilde(delta);
    // the entropies are themselves rounded; allow for that
    let holds = gap <= bound + 1e-12;
    FannesBound { delta, bound, gap, holds }
}

pub fn fannes_gap_bound(a: &ProbabilityTable<f64>, b: &ProbabilityTable<f64>) -> Result<FannesBound> {
    let delta = a.l1_distance(b)?;
    let gap = (shannon_entropy(a) - shannon_entropy(b)).abs();
    Ok(fannes_from(delta, a.n(), a.d(), gap))
}

/// One lattice size of the sweep; vectors are indexed by `n − 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeRun {
    pub lattice_n: u64,
    pub partition: String,
    pub snap_distance: f64,
    pub s_cs: Vec<f64>,
    pub ks: EntropyRates<f64>,
    /// `|S_CS(n) − S_KS(n)| / n`.
    pub gap: Vec<f64>,
    /// `max_i |P_i − μ_î|`.
    pub epsilon: Vec<f64>,
    pub fannes: Vec<FannesBound>,
    /// First `n` at which the rule fires; `None` if not within `n_max`.
    pub breaking_time: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub operation: &'static str,
    pub matrix: ToralMatrix,
    pub family: Family,
    pub xi: f64,
    pub config: ComparisonConfig,
    pub runs: Vec<LatticeRun>,
    /// Breaking time against `log N` over the sizes where it was observed.
    pub fit: Option<LineFit>,
}

pub fn theorem3_comparison(t: &ToralMatrix, spec: &PartitionSpec, config: &ComparisonConfig) -> Result<ComparisonReport> {
    if config.n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max = {} < 2", config.n_max)));
    }
    if config.lattice_sizes.is_empty() {
        return Err(Error::InvalidArgument("no lattice sizes".into()));
    }
    let s = classify::<f64>(t);
    let mut runs = Vec::with_capacity(config.lattice_sizes.len());
    for &size in &config.lattice_sizes {
        let cfg = LatticeConfig::new(size)?;
        let (partition, snap) = spec.resolve(&cfg)?;
        runs.push(compare_on_lattice(t, &cfg, &partition, snap, config)?);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = runs
        .iter()
        .filter_map(|r| r.breaking_time.map(|b| ((r.lattice_n as f64).ln(), b as f64)))
        .unzip();
    Ok(ComparisonReport {
        operation: "theorem3_comparison",
        matrix: *t,
        family: s.family,
        xi: s.xi,
        config: config.clone(),
        runs,
        fit: fit_line(&xs, &ys),
    })
}

fn compare_on_lattice(
    t: &ToralMatrix,
    cfg: &LatticeConfig,
    partition: &Partition,
    snap: Rational,
    config: &ComparisonConfig,
) -> Result<LatticeRun> {
    let n_max = config.n_max;
    let d = partition.len() as u32;
    let dynamics = Dynamics::Map(*t);
    // unaligned partitions fall back to exact tables, one length at a time
    let cs = match cs_orbit_codes(&dynamics, cfg, partition, n_max) {
        Ok(codes) => Some(codes),
        Err(Error::AlignmentRequired { .. }) => None,
        Err(e) => return Err(e),
    };
    let ks = sample_orbit_codes(t, partition, n_max, config.samples, config.seed)?;
    let (mut s_cs, mut s_ks, mut err) = (Vec::new(), Vec::new(), Vec::new());
    let (mut gap, mut epsilon, mut fannes) = (Vec::new(), Vec::new(), Vec::new());
    let mut breaking_time = None;
    let mc_total = ks.samples() as f64;
    for n in 1..=n_max {
        // keyed by forward codes, so P_i sits at î
        let (sc, forward): (f64, Vec<(u64, f64)>) = match &cs {
            Some(codes) => {
                let total = codes.samples() as f64;
                (codes.entropy(n), codes.counts(n).into_iter().map(|(c, k)| (c, k as f64 / total)).collect())
            }
            None => {
                let exact = cs_probabilities(&dynamics, cfg, partition, n)?;
                let real = exact.reversed().to_real::<f64>();
                (exact.entropy(), real.entries().iter().map(|(&c, &p)| (c, p)).collect())
            }
        };
        let (sk, e) = entropy_with_error(&ks, n);
        let (delta, eps) = merge_abs_diff(
            forward.into_iter(),
            ks.counts(n).into_iter().map(|(c, k)| (c, k as f64 / mc_total)),
        );
        let abs_gap = (sc - sk).abs();
        if breaking_time.is_none() && config.rule.broken(abs_gap, n) {
            breaking_time = Some(n);
        }
        s_cs.push(sc);
        s_ks.push(sk);
        err.push(e);
        gap.push(abs_gap / n as f64);
        epsilon.push(eps);
        fannes.push(fannes_from(delta, n, d, abs_gap));
    }
    Ok(LatticeRun {
        lattice_n: cfg.n(),
        partition: partition.describe(),
        snap_distance: crate::geometry::ratio_f64(&snap),
        s_cs,
        ks: EntropyRates::from_entropies(s_ks, err),
        gap,
        epsilon,
        fannes,
        breaking_time,
    })
}

/// `S(W)`, `S(1)` and their difference at horizon `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyComponents {
    pub total: f64,
    pub measurement: f64,
    pub dynamical: f64,
}

pub fn entropy_components(t: &ToralMatrix, cfg: &LatticeConfig, p: &Partition, n: u32) -> Result<EntropyComponents> {
    let total = cs_entropy(&Dynamics::Map(*t), cfg, p, n)?;
    let measurement = cs_entropy(&Dynamics::Identity, cfg, p, n)?;
    Ok(EntropyComponents { total, measurement, dynamical: total - measurement })
}
