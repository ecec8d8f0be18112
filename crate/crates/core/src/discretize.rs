//! Cell-averaging discretization of torus functions onto lattice diagonals,
//! the step-function reconstruction, the lattice-state kernel, and the
//! numerical checks built on them: the evolution defect, dynamical
//! localization and orbit shadowing.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::lattice::{apply_mod, round_to_lattice, torus_distance, LatticeConfig, LatticePoint, TorusPoint};
use crate::maps::{classify, diameter_formula, Family, SpectralData, ToralMatrix};
use crate::rng::par_blocks;
use crate::scalar::{frac, rational_to_real, Real};

/// Sub-samples per cell edge used when a caller does not choose one.
pub const DEFAULT_QUADRATURE: usize = 4;

/// A bounded function on the torus.
pub trait Observable<R: Real>: Sync {
    fn eval(&self, x: &TorusPoint<R>) -> R;

    /// Declared uniform bound `‖f‖₀`.
    fn sup_norm(&self) -> R;

    /// Exact average over the cell centred on `ℓ / N`, when known in closed form.
    fn cell_average(&self, _l: LatticePoint, _cfg: &LatticeConfig) -> Option<R> {
        None
    }
}

/// Wraps a closure together with its declared bound.
pub struct FnObservable<F> {
    f: F,
    bound: f64,
}

impl<F> FnObservable<F> {
    pub fn new(f: F, bound: f64) -> Self {
        Self { f, bound }
    }
}

impl<R: Real, F: Fn(&TorusPoint<R>) -> R + Sync> Observable<R> for FnObservable<F> {
    fn eval(&self, x: &TorusPoint<R>) -> R {
        (self.f)(x)
    }

    fn sup_norm(&self) -> R {
        R::lit(self.bound)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl<R: Real> Observable<R> for Constant {
    fn eval(&self, _x: &TorusPoint<R>) -> R {
        R::lit(self.0)
    }

    fn sup_norm(&self) -> R {
        R::lit(self.0.abs())
    }

    fn cell_average(&self, _l: LatticePoint, _cfg: &LatticeConfig) -> Option<R> {
        Some(R::lit(self.0))
    }
}

/// `sin(2π(k1 x1 + k2 x2))`, the test observable for the evolution defect.
#[derive(Debug, Clone, Copy)]
pub struct Fourier {
    pub k1: i64,
    pub k2: i64,
}

impl<R: Real> Observable<R> for Fourier {
    fn eval(&self, x: &TorusPoint<R>) -> R {
        let phase = R::from_int(self.k1) * x.x1() + R::from_int(self.k2) * x.x2();
        (R::TAU() * frac(phase)).sin()
    }

    fn sup_norm(&self) -> R {
        R::one()
    }
}

/// Indicator of a finite union of disjoint rational rectangles.
#[derive(Debug, Clone)]
pub struct Indicator {
    rects: Vec<Rect>,
}

impl Indicator {
    pub fn new(rects: Vec<Rect>) -> Self {
        Self { rects }
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }
}

impl<R: Real> Observable<R> for Indicator {
    fn eval(&self, x: &TorusPoint<R>) -> R {
        let p = [x.x1().to_f64().expect("finite"), x.x2().to_f64().expect("finite")];
        if self.rects.iter().any(|r| r.contains_f64(p)) {
            R::one()
        } else {
            R::zero()
        }
    }

    fn sup_norm(&self) -> R {
        R::one()
    }

    fn cell_average(&self, l: LatticePoint, cfg: &LatticeConfig) -> Option<R> {
        let w = self.rects.iter().map(|r| r.cell_weight(l.p1, l.p2, cfg.n())).sum();
        Some(rational_to_real(&w))
    }
}

/// Diagonal of a lattice observable, row-major over `(ℤ/Nℤ)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable<R> {
    cfg: LatticeConfig,
    entries: Vec<R>,
}

impl<R: Real> DiagonalObservable<R> {
    pub fn new(cfg: LatticeConfig, entries: Vec<R>) -> Result<Self> {
        if entries.len() as u64 != cfg.script_n() {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for N² = {}",
                entries.len(),
                cfg.script_n()
            )));
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("non-finite diagonal entry".into()));
        }
        Ok(Self { cfg, entries })
    }

    pub fn identity(cfg: LatticeConfig) -> Self {
        Self { cfg, entries: vec![R::one(); cfg.script_n() as usize] }
    }

    pub fn cfg(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn entries(&self) -> &[R] {
        &self.entries
    }

    pub fn entry(&self, l: LatticePoint) -> R {
        self.entries[self.cfg.index(l)]
    }

    /// Normalized trace, the mean of the diagonal.
    pub fn trace_state(&self) -> R {
        self.entries.iter().copied().sum::<R>() / R::count(self.entries.len())
    }
}

/// Cell-average discretization: entry `ℓ` is `N² ∫_{cell(ℓ)} f dμ`.
///
/// Uses the observable's exact cell average when it has one, otherwise the
/// midpoint rule on a `quadrature × quadrature` sub-grid of the cell.
pub fn discretize_aw<R: Real, O: Observable<R> + ?Sized>(
    f: &O,
    cfg: &LatticeConfig,
    quadrature: usize,
) -> DiagonalObservable<R> {
    assert!(quadrature >= 1, "quadrature must be at least 1");
    let entries = (0..cfg.script_n() as usize)
        .into_par_iter()
        .map(|idx| {
            let l = cfg.from_index(idx);
            f.cell_average(l, cfg).unwrap_or_else(|| midpoint_cell_average(f, l, cfg, quadrature))
        })
        .collect();
    DiagonalObservable { cfg: *cfg, entries }
}

fn midpoint_cell_average<R: Real, O: Observable<R> + ?Sized>(
    f: &O,
    l: LatticePoint,
    cfg: &LatticeConfig,
    q: usize,
) -> R {
    let n = R::from_u64(cfg.n()).expect("fits");
    let qr = R::count(q);
    let half = R::lit(0.5);
    let offset = |s: usize| ((R::count(s) + half) / qr - half) / n;
    let c1 = R::from_u64(l.p1).expect("fits") / n;
    let c2 = R::from_u64(l.p2).expect("fits") / n;
    let mut acc = R::zero();
    for s1 in 0..q {
        for s2 in 0..q {
            acc = acc + f.eval(&TorusPoint::new(c1 + offset(s1), c2 + offset(s2)));
        }
    }
    acc / (qr * qr)
}

/// Step-function reconstruction: the entry at the lattice point nearest `x`.
pub fn dediscretize_aw<R: Real>(x_obs: &DiagonalObservable<R>, x: &TorusPoint<R>) -> R {
    x_obs.entry(round_to_lattice(x, &x_obs.cfg))
}

/// Lattice-state kernel: `1` iff `U_T^n(x̂_N) = ŷ_N`.
pub fn kernel<R: Real>(t: &ToralMatrix, cfg: &LatticeConfig, n: i64, x: &TorusPoint<R>, y: &TorusPoint<R>) -> u8 {
    kernel_with(&t.power_mod(n, cfg.n()), cfg, x, y)
}

fn kernel_with<R: Real>(m: &[[u64; 2]; 2], cfg: &LatticeConfig, x: &TorusPoint<R>, y: &TorusPoint<R>) -> u8 {
    let image = apply_mod(m, round_to_lattice(x, cfg), cfg.n());
    u8::from(image == round_to_lattice(y, cfg))
}

/// Evaluates `T^j x mod 1` from the exact integer power when its entries are
/// small enough for `R`, else by stepping.
struct ContinuousPower<R> {
    m: Option<[[R; 2]; 2]>,
    t: ToralMatrix,
    j: i64,
}

impl<R: Real> ContinuousPower<R> {
    fn new(t: &ToralMatrix, j: i64) -> Self {
        let limit = 1i128 << 40;
        let m = t
            .power(j)
            .ok()
            .filter(|p| p.0.iter().flatten().all(|e| e.abs() < limit))
            .map(|p| p.to_real::<R>());
        Self { m, t: *t, j }
    }

    fn apply(&self, x: &TorusPoint<R>) -> TorusPoint<R> {
        match &self.m {
            Some(m) => TorusPoint::new(m[0][0] * x.x1() + m[0][1] * x.x2(), m[1][0] * x.x1() + m[1][1] * x.x2()),
            None => x.evolve(&self.t, self.j),
        }
    }
}

/// Mesh coordinate `i` of a `grid`-point mesh, shifted so that no sample
/// sits on a cell edge when `grid` is a multiple of `2N`.
fn mesh_coord<R: Real>(i: usize, grid: usize, n: u64) -> R {
    let half = R::lit(0.5);
    frac((R::count(i) + half) / R::count(grid) - half / R::from_u64(n).expect("fits"))
}

/// Sum over mesh rows with a fixed reduction order.
fn mesh_l2<R: Real, G: Fn(&TorusPoint<R>) -> R + Sync>(grid: usize, n: u64, g: G) -> R {
    let rows: Vec<R> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x1 = mesh_coord::<R>(i, grid, n);
            let mut acc = R::zero();
            for k in 0..grid {
                let d = g(&TorusPoint::new(x1, mesh_coord(k, grid, n)));
                acc = acc + d * d;
            }
            acc
        })
        .collect();
    let total = rows.into_iter().fold(R::zero(), |a, b| a + b);
    (total / R::count(grid * grid)).sqrt()
}

fn check_grid(grid: usize, cfg: &LatticeConfig) -> Result<()> {
    if (grid as u64) < cfg.n() {
        return Err(Error::InvalidArgument(format!("mesh {grid} coarser than N = {}", cfg.n())));
    }
    Ok(())
}

/// L² norm of `f ∘ T^j − (step function of the lattice-evolved discretization)`.
pub fn egorov_defect<R: Real, O: Observable<R> + ?Sized>(
    t: &ToralMatrix,
    cfg: &LatticeConfig,
    f: &O,
    j: i64,
    grid: usize,
) -> Result<R> {
    let disc = discretize_aw(f, cfg, DEFAULT_QUADRATURE);
    egorov_defect_with(t, f, &disc, j, grid)
}

/// As [`egorov_defect`], reusing an existing discretization of `f`.
pub fn egorov_defect_with<R: Real, O: Observable<R> + ?Sized>(
    t: &ToralMatrix,
    f: &O,
    disc: &DiagonalObservable<R>,
    j: i64,
    grid: usize,
) -> Result<R> {
    let cfg = disc.cfg;
    check_grid(grid, &cfg)?;
    let cont = ContinuousPower::new(t, j);
    let lattice_map = t.power_mod(j, cfg.n());
    Ok(mesh_l2(grid, cfg.n(), |x| {
        let evolved = apply_mod(&lattice_map, round_to_lattice(x, &cfg), cfg.n());
        f.eval(&cont.apply(x)) - disc.entry(evolved)
    }))
}

/// The single-step-kernel form of the defect; equal to [`egorov_defect`].
pub fn prop41_defect<R: Real, O: Observable<R> + ?Sized>(
    t: &ToralMatrix,
    cfg: &LatticeConfig,
    f: &O,
    n: i64,
    grid: usize,
) -> Result<R> {
    egorov_defect(t, cfg, f, n, grid)
}

/// Evaluates `N² ∫ f(y) |K_{N,n}(x, y)|² dμ(y)` directly by midpoint
/// quadrature over candidate cells, weighting every node by the kernel,
/// instead of looking up the discretized table.
pub fn prop41_defect_direct<R: Real, O: Observable<R> + ?Sized>(
    t: &ToralMatrix,
    cfg: &LatticeConfig,
    f: &O,
    n: i64,
    grid: usize,
) -> Result<R> {
    check_grid(grid, cfg)?;
    let q = DEFAULT_QUADRATURE;
    let cont = ContinuousPower::new(t, n);
    let m = t.power_mod(n, cfg.n());
    let nr = R::from_u64(cfg.n()).expect("fits");
    let qr = R::count(q);
    let half = R::lit(0.5);
    let offset = |s: usize| ((R::count(s) + half) / qr - half) / nr;
    let weight = R::one() / (qr * qr);
    Ok(mesh_l2(grid, cfg.n(), |x| {
        // the kernel can only fire inside the cell of U^n(x̂); scan it and its neighbours
        let centre = apply_mod(&m, round_to_lattice(x, cfg), cfg.n());
        let mut integral = R::zero();
        for d1 in -1i64..=1 {
            for d2 in -1i64..=1 {
                let cell = cfg.point(centre.p1 as i64 + d1, centre.p2 as i64 + d2);
                let c = cell.to_torus::<R>(cfg);
                for s1 in 0..q {
                    for s2 in 0..q {
                        let y = TorusPoint::new(c.x1() + offset(s1), c.x2() + offset(s2));
                        if kernel_with(&m, cfg, x, &y) == 1 {
                            integral = integral + weight * f.eval(&y);
                        }
                    }
                }
            }
        }
        f.eval(&cont.apply(x)) - integral
    }))
}

/// Orbit-shadowing threshold `Ñ(n)` of the family: `√2 λⁿ / sin β`,
/// `√2 (2nJ + 1)`, or `√2 η`.
pub fn shadowing_threshold<R: Real>(s: &SpectralData<R>, n: u32) -> R {
    let sqrt2 = R::SQRT_2();
    match s.family {
        Family::Hyperbolic => sqrt2 * s.lambda_abs().expect("hyperbolic").powi(n as i32) / s.sin_beta.expect("hyperbolic"),
        Family::Parabolic => {
            sqrt2 * (R::lit(2.0) * R::from_u32(n).expect("fits") * s.shear.expect("parabolic") + R::one())
        }
        Family::Elliptic => sqrt2 * s.eta,
    }
}

/// Localization threshold `N_M(n)` beyond which the kernel must vanish on
/// pairs at distance `≥ d0`.
pub fn localization_threshold<R: Real>(s: &SpectralData<R>, n: u32, d0: R) -> R {
    let sqrt2 = R::SQRT_2();
    let one = R::one();
    match s.family {
        Family::Hyperbolic => {
            let spread = s.lambda_abs().expect("hyperbolic").powi(n as i32) / s.sin_beta.expect("hyperbolic");
            ((one + spread) / (d0 * sqrt2)).max(sqrt2 * spread)
        }
        Family::Parabolic => {
            let nj = R::from_u32(n).expect("fits") * s.shear.expect("parabolic");
            (sqrt2 / d0 * (nj + one)).max(sqrt2 * (R::lit(2.0) * nj + one))
        }
        Family::Elliptic => ((s.eta + one) / (d0 * sqrt2)).max(s.eta * sqrt2),
    }
}

/// How the second point of each localization trial is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairSampling {
    /// `x` and `y` independent and uniform.
    Uniform,
    /// `y` uniform in the disc of the given radius around `Tⁿ x`.
    Near { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub operation: &'static str,
    pub matrix: [i64; 4],
    pub family: Family,
    pub lattice_n: u64,
    pub horizon: u32,
    pub gamma: f64,
    pub d0: f64,
    pub sampling: PairSampling,
    pub seed: u64,
    pub trials: usize,
    /// Pairs with `d(Tⁿ x, y) ≥ d0`.
    pub tested: u64,
    /// Tested pairs with kernel `1`.
    pub violations: u64,
    /// All kernel hits regardless of distance.
    pub hits: u64,
    pub threshold: f64,
    pub premise_holds: bool,
    /// Whether `Γ_T(n) < log N / γ`.
    pub within_scaling_bound: bool,
}

/// Samples pairs and counts kernel hits between points that the continuous
/// map keeps at least `d0` apart.
#[allow(clippy::too_many_arguments)]
pub fn verify_dynamical_localization(
    t: &ToralMatrix,
    cfg: &LatticeConfig,
    n: u32,
    gamma: f64,
    d0: f64,
    trials: usize,
    seed: u64,
    sampling: PairSampling,
) -> Result<LocalizationReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(gamma > 1.0) || !(d0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need gamma > 1 and d0 > 0, got {gamma}, {d0}")));
    }
    let s = classify::<f64>(t);
    let m = t.power_mod(n as i64, cfg.n());
    let cont = ContinuousPower::<f64>::new(t, n as i64);
    let counts = par_blocks(trials, seed, |rng, count| {
        let (mut tested, mut violations, mut hits) = (0u64, 0u64, 0u64);
        for _ in 0..count {
            let x = TorusPoint::new(rng.gen::<f64>(), rng.gen::<f64>());
            let tx = cont.apply(&x);
            let y = match sampling {
                PairSampling::Uniform => TorusPoint::new(rng.gen::<f64>(), rng.gen::<f64>()),
                PairSampling::Near { radius } => {
                    let r = radius * rng.gen::<f64>().sqrt();
                    let a = std::f64::consts::TAU * rng.gen::<f64>();
                    TorusPoint::new(tx.x1() + r * a.cos(), tx.x2() + r * a.sin())
                }
            };
            let k = kernel_with(&m, cfg, &x, &y);
            hits += k as u64;
            if torus_distance(&tx, &y) >= d0 {
                tested += 1;
                violations += k as u64;
            }
        }
        (tested, violations, hits)
    });
    let (tested, violations, hits) =
        counts.into_iter().fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let threshold = localization_threshold(&s, n, d0);
    let scaling = crate::maps::scaling_function(&s, n as u64);
    Ok(LocalizationReport {
        operation: "dynamical_localization",
        matrix: t.entries(),
        family: s.family,
        lattice_n: cfg.n(),
        horizon: n,
        gamma,
        d0,
        sampling,
        seed,
        trials,
        tested,
        violations,
        hits,
        threshold,
        premise_holds: (cfg.n() as f64) > threshold,
        within_scaling_bound: scaling < (cfg.n() as f64).ln() / gamma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowingReport {
    pub operation: &'static str,
    pub matrix: [i64; 4],
    pub family: Family,
    pub lattice_n: u64,
    pub horizon: u32,
    pub seed: u64,
    pub trials: usize,
    pub threshold: f64,
    /// Largest `d(T^p x, U_T^p(x̂)/N) · 2N / Ñ` over all samples and `p ≤ n`.
    pub max_ratio: f64,
    /// Largest ratio against the exact evolved-ball radius instead of `Ñ`.
    pub max_ratio_exact_radius: f64,
}

/// Checks that lattice orbits stay within `Ñ/(2N)` of the continuous ones.
pub fn verify_orbit_shadowing(
    t: &ToralMatrix,
    cfg: &LatticeConfig,
    n: u32,
    trials: usize,
    seed: u64,
) -> Result<ShadowingReport> {
    let s = classify::<f64>(t);
    let threshold = shadowing_threshold(&s, n);
    if (cfg.n() as f64) <= threshold {
        return Err(Error::ThresholdUnmet { n: cfg.n(), family: s.family.name(), threshold, horizon: n });
    }
    let nf = cfg.n() as f64;
    let step = t.power_mod(1, cfg.n());
    let radii: Vec<f64> = (0..=n).map(|p| diameter_formula(&s, p)).collect();
    let maxima = par_blocks(trials, seed, |rng, count| {
        let (mut worst, mut worst_exact) = (0.0f64, 0.0f64);
        for _ in 0..count {
            let mut x = TorusPoint::new(rng.gen::<f64>(), rng.gen::<f64>());
            let mut l = round_to_lattice(&x, cfg);
            for radius in radii.iter() {
                let d = torus_distance(&x, &l.to_torus(cfg));
                worst = worst.max(d * 2.0 * nf / threshold);
                worst_exact = worst_exact.max(d * std::f64::consts::SQRT_2 * nf / radius);
                x = x.step(t);
                l = apply_mod(&step, l, cfg.n());
            }
        }
        (worst, worst_exact)
    });
    let (max_ratio, max_ratio_exact_radius) =
        maxima.into_iter().fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(ShadowingReport {
        operation: "orbit_shadowing",
        matrix: t.entries(),
        family: s.family,
        lattice_n: cfg.n(),
        horizon: n,
        seed,
        trials,
        threshold,
        max_ratio,
        max_ratio_exact_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use crate::scalar::Rational;
    use approx::assert_relative_eq;

    fn cfg(n: u64) -> LatticeConfig {
        LatticeConfig::new(n).unwrap()
    }

    fn x1_obs() -> FnObservable<impl Fn(&TorusPoint<f64>) -> f64> {
        FnObservable::new(|x: &TorusPoint<f64>| x.x1(), 1.0)
    }

    #[test]
    fn constant_is_unital() {
        let d = discretize_aw::<f64, _>(&Constant(1.0), &cfg(6), 3);
        assert!(d.entries().iter().all(|&e| e == 1.0));
        let id = DiagonalObservable::<f64>::identity(cfg(6));
        assert_eq!(dediscretize_aw(&id, &TorusPoint::new(0.3, 0.9)), 1.0);
    }

    #[test]
    fn linear_cell_average_is_centre_value() {
        let d = discretize_aw(&x1_obs(), &cfg(4), 16);
        assert_relative_eq!(d.entry(LatticePoint { p1: 1, p2: 0 }), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn indicator_entries_are_exact() {
        let half = Rational::new(1, 2);
        let ind = Indicator::new(vec![Rect::new(
            Interval::new(Rational::from_integer(0), half).unwrap(),
            Interval::unit(),
        )]);
        let d = discretize_aw::<f64, _>(&ind, &cfg(8), 1);
        for (idx, &e) in d.entries().iter().enumerate() {
            let p1 = idx / 8;
            let expected = match p1 {
                0 | 4 => 0.5,
                1..=3 => 1.0,
                _ => 0.0,
            };
            assert_eq!(e, expected, "row {p1}");
        }
    }

    #[test]
    fn midpoint_identity_with_single_node() {
        let f = FnObservable::new(|x: &TorusPoint<f64>| (x.x1() * 7.0).sin() + x.x2(), 2.0);
        let c = cfg(5);
        let d = discretize_aw(&f, &c, 1);
        for idx in 0..25 {
            let l = c.from_index(idx);
            let centre = l.to_torus::<f64>(&c);
            assert_eq!(dediscretize_aw(&d, &centre), f.eval(&centre));
        }
    }

    #[test]
    fn dediscretize_picks_rounded_entry() {
        let c = cfg(10);
        let mut entries = vec![0.0; 100];
        entries[c.index(LatticePoint { p1: 3, p2: 7 })] = 7.0;
        let d = DiagonalObservable::new(c, entries).unwrap();
        assert_eq!(dediscretize_aw(&d, &TorusPoint::new(0.3, 0.7)), 7.0);
        assert!(DiagonalObservable::<f64>::new(c, vec![0.0; 99]).is_err());
    }

    #[test]
    fn kernel_examples() {
        let cat = ToralMatrix::cat();
        let c = cfg(5);
        let x = TorusPoint::new(0.2, 0.2);
        assert_eq!(kernel(&cat, &c, 0, &x, &x), 1);
        assert_eq!(kernel(&cat, &c, 1, &x, &TorusPoint::new(0.6, 0.4)), 1);
        assert_eq!(kernel(&cat, &c, 1, &x, &TorusPoint::new(0.0, 0.0)), 0);
    }

    #[test]
    fn defect_of_constant_vanishes() {
        let c = cfg(16);
        for j in [0, 3, 9] {
            let d: f64 = egorov_defect(&ToralMatrix::cat(), &c, &Constant(2.5), j, 32).unwrap();
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn defect_at_time_zero_is_step_error() {
        let d: f64 = egorov_defect(&ToralMatrix::cat(), &cfg(100), &Fourier { k1: 1, k2: 0 }, 0, 200).unwrap();
        assert!(d > 0.0 && d <= 2.0 * std::f64::consts::PI / (12f64.sqrt() * 100.0), "defect {d}");
    }

    #[test]
    fn defect_rejects_coarse_mesh() {
        assert!(egorov_defect::<f64, _>(&ToralMatrix::cat(), &cfg(10), &Constant(1.0), 0, 5).is_err());
    }

    #[test]
    fn direct_kernel_path_matches() {
        let c = cfg(12);
        let f = Fourier { k1: 1, k2: 2 };
        for n in [0, 1, 3] {
            let a: f64 = prop41_defect(&ToralMatrix::cat(), &c, &f, n, 24).unwrap();
            let b: f64 = prop41_defect_direct(&ToralMatrix::cat(), &c, &f, n, 24).unwrap();
            assert!((a - b).abs() < 1e-12, "n = {n}: {a} vs {b}");
        }
    }

    #[test]
    fn thresholds() {
        let cat = classify::<f64>(&ToralMatrix::cat());
        assert_relative_eq!(shadowing_threshold(&cat, 3), 2f64.sqrt() * 17.944_271_909_999_16, epsilon = 1e-9);
        let shear = classify::<f64>(&ToralMatrix::new(1, 1, 0, 1).unwrap());
        assert_relative_eq!(shadowing_threshold(&shear, 10), 2f64.sqrt() * 11.0, epsilon = 1e-12);
        let rot = classify::<f64>(&ToralMatrix::new(0, 1, -1, 0).unwrap());
        assert_relative_eq!(localization_threshold(&rot, 7, 0.1), 2.0 / (0.1 * 2f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn shadowing_rejects_small_lattice() {
        let err = verify_orbit_shadowing(&ToralMatrix::cat(), &cfg(20), 3, 10, 1).unwrap_err();
        assert!(matches!(err, Error::ThresholdUnmet { .. }));
    }

    #[test]
    fn shadowing_at_time_zero() {
        let r = verify_orbit_shadowing(&ToralMatrix::cat(), &cfg(50), 0, 5000, 3).unwrap();
        assert!(r.max_ratio <= 1.0);
    }

    #[test]
    fn localization_report_is_reproducible() {
        let a = verify_dynamical_localization(&ToralMatrix::cat(), &cfg(8), 4, 2.0, 0.1, 20_000, 11, PairSampling::Uniform)
            .unwrap();
        let b = verify_dynamical_localization(&ToralMatrix::cat(), &cfg(8), 4, 2.0, 0.1, 20_000, 11, PairSampling::Uniform)
            .unwrap();
        assert_eq!(a, b);
        assert!(!a.premise_holds);
        assert!(a.violations > 0);
    }
}
