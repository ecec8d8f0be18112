//! Unimodular integer matrices acting on the 2-torus: classification into
//! hyperbolic, parabolic and elliptic families, their spectral data, the
//! growth of the evolved unit ball, and the time-scaling functions that
//! bound how long lattice dynamics can follow the continuous map.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Real};

/// Exact 2×2 integer matrix used for powers and products.
///
/// Entries are `i128`; every product is overflow-checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntMatrix(pub [[i128; 2]; 2]);

impl IntMatrix {
    pub const IDENTITY: IntMatrix = IntMatrix([[1, 0], [0, 1]]);

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Option<IntMatrix> {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0i128; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let p = a[i][0].checked_mul(b[0][j])?;
                let q = a[i][1].checked_mul(b[1][j])?;
                *cell = p.checked_add(q)?;
            }
        }
        Some(IntMatrix(out))
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn is_minus_identity(&self) -> bool {
        self.0 == [[-1, 0], [0, -1]]
    }

    /// Image of a real vector.
    pub fn apply<R: Real>(&self, v: [R; 2]) -> [R; 2] {
        let m = self.to_real::<R>();
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn to_real<R: Real>(&self) -> [[R; 2]; 2] {
        let c = |x: i128| R::from_i128(x).expect("entry fits in float");
        [[c(self.0[0][0]), c(self.0[0][1])], [c(self.0[1][0]), c(self.0[1][1])]]
    }
}

/// A 2×2 integer matrix with determinant one, excluding ±identity.
///
/// Acts on the torus by `x ↦ T x mod 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct ToralMatrix {
    t11: i64,
    t12: i64,
    t21: i64,
    t22: i64,
}

impl ToralMatrix {
    pub fn new(t11: i64, t12: i64, t21: i64, t22: i64) -> Result<Self> {
        let det = (t11 as i128) * (t22 as i128) - (t12 as i128) * (t21 as i128);
        if det != 1 {
            return Err(Error::NonUnimodular {
                det: det.clamp(i64::MIN as i128, i64::MAX as i128) as i64,
            });
        }
        if t12 == 0 && t21 == 0 && t11 == t22 {
            // det = 1 forces t11 = t22 = ±1 here
            return Err(Error::TrivialMatrix);
        }
        Ok(Self { t11, t12, t21, t22 })
    }

    /// The symmetric cat map `[[2, 1], [1, 1]]`.
    pub fn cat() -> Self {
        Self { t11: 2, t12: 1, t21: 1, t22: 1 }
    }

    /// Row-major entries `[t11, t12, t21, t22]`.
    pub fn entries(&self) -> [i64; 4] {
        [self.t11, self.t12, self.t21, self.t22]
    }

    pub fn trace(&self) -> i64 {
        self.t11 + self.t22
    }

    pub fn semitrace(&self) -> Rational {
        Rational::new(self.trace() as i128, 2)
    }

    /// Exact inverse `[[t22, -t12], [-t21, t11]]`.
    pub fn inverse(&self) -> Self {
        Self { t11: self.t22, t12: -self.t12, t21: -self.t21, t22: self.t11 }
    }

    pub fn negated(&self) -> Self {
        Self { t11: -self.t11, t12: -self.t12, t21: -self.t21, t22: -self.t22 }
    }

    /// Sum of squared entries, i.e. the squared Frobenius norm.
    pub fn frobenius_sq(&self) -> i128 {
        self.entries().iter().map(|&e| (e as i128) * (e as i128)).sum()
    }

    pub fn as_int(&self) -> IntMatrix {
        IntMatrix([
            [self.t11 as i128, self.t12 as i128],
            [self.t21 as i128, self.t22 as i128],
        ])
    }

    /// Exact `T^j` for any integer `j`; negative powers use the exact inverse.
    pub fn power(&self, j: i64) -> Result<IntMatrix> {
        let base = if j < 0 { self.inverse() } else { *self }.as_int();
        let mut acc = IntMatrix::IDENTITY;
        let mut sq = base;
        let mut e = j.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&sq).ok_or(Error::Overflow("matrix power"))?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.checked_mul(&sq).ok_or(Error::Overflow("matrix power"))?;
            }
        }
        Ok(acc)
    }

    /// `T^j mod m` with entries in `[0, m)`. Never overflows for `m < 2^62`.
    pub fn power_mod(&self, j: i64, m: u64) -> [[u64; 2]; 2] {
        let base = if j < 0 { self.inverse() } else { *self };
        let m128 = m as i128;
        let red = |x: i64| (x as i128).rem_euclid(m128) as u64;
        let b = [[red(base.t11), red(base.t12)], [red(base.t21), red(base.t22)]];
        let mul = |x: &[[u64; 2]; 2], y: &[[u64; 2]; 2]| {
            let mut out = [[0u64; 2]; 2];
            for i in 0..2 {
                for k in 0..2 {
                    let s = (x[i][0] as u128 * y[0][k] as u128 + x[i][1] as u128 * y[1][k] as u128)
                        % m as u128;
                    out[i][k] = s as u64;
                }
            }
            out
        };
        let one = (1 % m128) as u64;
        let mut acc = [[one, 0], [0, one]];
        let mut sq = b;
        let mut e = j.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = mul(&sq, &sq);
            }
        }
        acc
    }

    /// Image of a point of the plane (no reduction mod 1).
    pub fn apply<R: Real>(&self, v: [R; 2]) -> [R; 2] {
        self.as_int().apply(v)
    }
}

impl TryFrom<[i64; 4]> for ToralMatrix {
    type Error = Error;

    fn try_from(e: [i64; 4]) -> Result<Self> {
        Self::new(e[0], e[1], e[2], e[3])
    }
}

impl From<ToralMatrix> for [i64; 4] {
    fn from(t: ToralMatrix) -> Self {
        t.entries()
    }
}

impl fmt::Display for ToralMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.t11, self.t12, self.t21, self.t22)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hyperbolic,
    Parabolic,
    Elliptic,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Hyperbolic => "hyperbolic",
            Family::Parabolic => "parabolic",
            Family::Elliptic => "elliptic",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Family tag and the derived spectral quantities of a [`ToralMatrix`].
///
/// Fields that do not apply to the family are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData<R> {
    pub family: Family,
    /// Half the trace, kept exact.
    #[serde(serialize_with = "ser_rational")]
    pub semitrace: Rational,
    /// Eigenvalue of largest modulus, signed like the trace (hyperbolic).
    pub lambda: Option<R>,
    /// Angle between the stable and unstable eigendirections (hyperbolic).
    pub beta: Option<R>,
    pub sin_beta: Option<R>,
    /// Largest singular value of `T`.
    pub eta: R,
    /// Shear strength `(η − 1/η)/2` (parabolic).
    pub shear: Option<R>,
    /// Rotation angle with `cos φ = t` (elliptic).
    pub phi: Option<R>,
    /// Lyapunov exponent in nats per step.
    pub xi: R,
    /// Least `p ≥ 1` with `T^p = I` (elliptic).
    pub order: Option<u32>,
    /// Least `p ≥ 1` with `T^p = ±I` (elliptic).
    pub sign_period: Option<u32>,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}", q))
}

impl<R: Real> SpectralData<R> {
    /// `|λ|`, or `None` outside the hyperbolic family.
    pub fn lambda_abs(&self) -> Option<R> {
        self.lambda.map(|l| l.abs())
    }
}

/// Classifies `T` and computes its spectral data from closed forms.
pub fn classify<R: Real>(t: &ToralMatrix) -> SpectralData<R> {
    let tr = t.trace();
    let f = R::from_i128(t.frobenius_sq()).expect("frobenius fits");
    let two = R::lit(2.0);
    // σ + 1/σ = √(F + 2) and σ − 1/σ = √(F − 2) for det = 1
    let eta = ((f + two).sqrt() + (f - two).sqrt()) / two;
    let semitrace = t.semitrace();

    let mut data = SpectralData {
        family: Family::Elliptic,
        semitrace,
        lambda: None,
        beta: None,
        sin_beta: None,
        eta,
        shear: None,
        phi: None,
        xi: R::zero(),
        order: None,
        sign_period: None,
    };

    match tr.abs() {
        a if a > 2 => {
            let trr = R::from_int(tr);
            let disc = (trr * trr - R::lit(4.0)).sqrt();
            let lambda = (trr + trr.signum() * disc) / two;
            let la = lambda.abs();
            let sin_beta = ((la - la.recip()) / (eta - eta.recip())).min(R::one());
            data.family = Family::Hyperbolic;
            data.lambda = Some(lambda);
            data.sin_beta = Some(sin_beta);
            data.beta = Some(sin_beta.asin());
            data.xi = la.ln();
        }
        2 => {
            data.family = Family::Parabolic;
            data.shear = Some((eta - eta.recip()) / two);
        }
        _ => {
            let (order, sign_period) = elliptic_periods(t);
            data.family = Family::Elliptic;
            data.phi = Some((R::from_int(tr) / two).acos());
            data.order = Some(order);
            data.sign_period = Some(sign_period);
        }
    }
    data
}

/// `(order, sign period)` of an elliptic matrix by repeated exact multiplication.
fn elliptic_periods(t: &ToralMatrix) -> (u32, u32) {
    let base = t.as_int();
    let mut acc = base;
    let mut sign_period = None;
    for p in 1..=12u32 {
        if sign_period.is_none() && (acc.is_identity() || acc.is_minus_identity()) {
            sign_period = Some(p);
        }
        if acc.is_identity() {
            return (p, sign_period.expect("set above"));
        }
        acc = acc.checked_mul(&base).expect("elliptic entries stay bounded");
    }
    unreachable!("elliptic integer matrix {t} without finite order ≤ 12")
}

/// Radius of the `n`-step evolved unit ball, `max ‖Tⁿ v‖` over `‖v‖ = 1`.
///
/// Hyperbolic and parabolic values use the closed forms; elliptic maps
/// return `η` unless `Tⁿ = ±I`, where the ball is mapped onto itself.
pub fn diameter_formula<R: Real>(s: &SpectralData<R>, n: u32) -> R {
    if n == 0 {
        return R::one();
    }
    let nr = R::from_u32(n).expect("small integer");
    let two = R::lit(2.0);
    match s.family {
        Family::Hyperbolic => {
            let la = s.lambda_abs().expect("hyperbolic lambda");
            let sb = s.sin_beta.expect("hyperbolic sin beta");
            let ln = la.powi(n as i32);
            let half = (ln - ln.recip()) / (two * sb);
            let inv = half.recip();
            half * (R::one() + (R::one() + inv * inv).sqrt())
        }
        Family::Parabolic => {
            let j = s.shear.expect("parabolic shear");
            nr * j + (nr * nr * j * j + R::one()).sqrt()
        }
        Family::Elliptic => {
            let p = s.sign_period.expect("elliptic period");
            if n % p == 0 {
                R::one()
            } else {
                s.eta
            }
        }
    }
}

/// Radius of the union of the balls evolved for `-n..=n` steps (`η` for
/// elliptic maps at `n ≥ 1`; equal to [`diameter_formula`] otherwise).
pub fn diameter_union<R: Real>(s: &SpectralData<R>, n: u32) -> R {
    match s.family {
        Family::Elliptic if n >= 1 => s.eta,
        _ => diameter_formula(s, n),
    }
}

/// Sampled oracle: max of `‖Tⁿ v‖` over `samples` equally spaced unit vectors.
pub fn diameter_bruteforce<R: Real>(t: &ToralMatrix, n: u32, samples: usize) -> Result<R> {
    if samples < 64 {
        return Err(Error::InvalidArgument(format!("samples = {samples} < 64")));
    }
    let m = t.power(n as i64)?.to_real::<R>();
    let step = R::TAU() / R::count(samples);
    let mut best = R::zero();
    for k in 0..samples {
        let theta = step * R::count(k);
        let (s, c) = theta.sin_cos();
        let x = m[0][0] * c + m[0][1] * s;
        let y = m[1][0] * c + m[1][1] * s;
        best = best.max(x.hypot(y));
    }
    Ok(best)
}

/// Time-scaling function: `n log λ`, `log n`, or `0` by family.
pub fn scaling_function<R: Real>(s: &SpectralData<R>, n: u64) -> R {
    let nr = R::from_u64(n).expect("fits");
    match s.family {
        Family::Hyperbolic => nr * s.xi,
        Family::Parabolic => nr.ln(),
        Family::Elliptic => R::zero(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakingTime {
    Finite(u64),
    Unbounded,
}

/// Largest `n` with `Γ_T(n) < log N / γ`; unbounded for elliptic maps.
///
/// Returns `Finite(0)` when no `n ≥ 1` qualifies.
pub fn breaking_time_estimate<R: Real>(s: &SpectralData<R>, n_lattice: u64, gamma: R) -> Result<BreakingTime> {
    if n_lattice < 2 {
        return Err(Error::InvalidArgument(format!("N = {n_lattice} < 2")));
    }
    if !(gamma > R::one()) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must exceed 1")));
    }
    let bound = R::from_u64(n_lattice).expect("fits").ln() / gamma;
    let holds = |n: u64| -> bool {
        match s.family {
            Family::Parabolic => parabolic_below(n, n_lattice, gamma),
            _ => scaling_function(s, n) < bound,
        }
    };
    let guess = match s.family {
        Family::Elliptic => return Ok(BreakingTime::Unbounded),
        Family::Hyperbolic => (bound / s.xi).floor(),
        Family::Parabolic => bound.exp().floor(),
    };
    let mut n = guess.to_u64().unwrap_or(0);
    while n > 0 && !holds(n) {
        n -= 1;
    }
    while holds(n + 1) {
        n += 1;
    }
    Ok(BreakingTime::Finite(n))
}

/// `log n < log N / γ`, decided exactly as `n^γ < N` when γ is an integer.
fn parabolic_below<R: Real>(n: u64, n_lattice: u64, gamma: R) -> bool {
    if n == 0 {
        return true;
    }
    if gamma.fract() == R::zero() && gamma < R::lit(64.0) {
        let g = gamma.to_u32().expect("small exponent");
        match (n as u128).checked_pow(g) {
            Some(p) => p < n_lattice as u128,
            None => false,
        }
    } else {
        gamma * R::from_u64(n).expect("fits").ln() < R::from_u64(n_lattice).expect("fits").ln()
    }
}
