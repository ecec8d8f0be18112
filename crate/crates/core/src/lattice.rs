//! The `N × N` lattice on the torus, nearest-point rounding, the induced
//! permutation dynamics and its tables.

use std::io::{self, BufRead, Read, Write};

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::ToralMatrix;
use crate::scalar::{frac, Real};

/// Default cap on the number of lattice points held in one table.
pub const DEFAULT_CAPACITY: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeConfig {
    n: u64,
}

impl LatticeConfig {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("lattice size N = {n} < 2")));
        }
        if n >= 1 << 31 {
            return Err(Error::InvalidArgument(format!("lattice size N = {n} too large")));
        }
        Ok(Self { n })
    }

    /// Points per linear dimension.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of lattice points, `N²`.
    pub fn script_n(&self) -> u64 {
        self.n * self.n
    }

    pub fn point(&self, p1: i64, p2: i64) -> LatticePoint {
        let m = self.n as i64;
        LatticePoint { p1: p1.rem_euclid(m) as u64, p2: p2.rem_euclid(m) as u64 }
    }

    /// Row-major index `p1 · N + p2`.
    pub fn index(&self, p: LatticePoint) -> usize {
        (p.p1 * self.n + p.p2) as usize
    }

    pub fn from_index(&self, idx: usize) -> LatticePoint {
        let idx = idx as u64;
        LatticePoint { p1: idx / self.n, p2: idx % self.n }
    }

    pub fn check_capacity(&self, limit: u64) -> Result<()> {
        if self.script_n() > limit {
            return Err(Error::CapacityExceeded {
                what: "lattice table",
                requested: self.script_n() as u128,
                limit: limit as u128,
            });
        }
        Ok(())
    }
}

/// A residue pair in `(ℤ/Nℤ)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub p1: u64,
    pub p2: u64,
}

impl LatticePoint {
    /// The lattice point as a torus point `ℓ / N`.
    pub fn to_torus<R: Real>(&self, cfg: &LatticeConfig) -> TorusPoint<R> {
        let n = R::from_u64(cfg.n()).expect("fits");
        TorusPoint::new(R::from_u64(self.p1).expect("fits") / n, R::from_u64(self.p2).expect("fits") / n)
    }
}

/// A point of the torus with coordinates reduced into `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint<R> {
    x1: R,
    x2: R,
}

impl<R: Real> TorusPoint<R> {
    pub fn new(x1: R, x2: R) -> Self {
        Self { x1: frac(x1), x2: frac(x2) }
    }

    pub fn x1(&self) -> R {
        self.x1
    }

    pub fn x2(&self) -> R {
        self.x2
    }

    pub fn coords(&self) -> [R; 2] {
        [self.x1, self.x2]
    }

    /// One step of `x ↦ T x mod 1`.
    pub fn step(&self, t: &ToralMatrix) -> Self {
        let [a, b] = t.apply([self.x1, self.x2]);
        Self::new(a, b)
    }

    /// `T^j x mod 1`, iterated with reduction after every step.
    pub fn evolve(&self, t: &ToralMatrix, j: i64) -> Self {
        let m = if j < 0 { t.inverse() } else { *t };
        (0..j.unsigned_abs()).fold(*self, |x, _| x.step(&m))
    }
}

/// Length of the shorter segment joining `x` and `y` on the torus.
pub fn torus_distance<R: Real>(x: &TorusPoint<R>, y: &TorusPoint<R>) -> R {
    let wrap = |d: R| {
        let d = d.abs();
        d.min(R::one() - d)
    };
    wrap(x.x1 - y.x1).hypot(wrap(x.x2 - y.x2))
}

/// Nearest lattice point, `⌊N x_i + 1/2⌋ mod N` componentwise.
pub fn round_to_lattice<R: Real>(x: &TorusPoint<R>, cfg: &LatticeConfig) -> LatticePoint {
    let n = R::from_u64(cfg.n()).expect("fits");
    let half = R::lit(0.5);
    let r = |c: R| (n * c + half).floor().to_i64().expect("finite coordinate");
    cfg.point(r(x.x1), r(x.x2))
}

/// `U_T^j(ℓ) = T^j ℓ mod N` in exact integer arithmetic.
pub fn discrete_step(t: &ToralMatrix, l: LatticePoint, cfg: &LatticeConfig, j: i64) -> LatticePoint {
    apply_mod(&t.power_mod(j, cfg.n()), l, cfg.n())
}

#[inline]
pub(crate) fn apply_mod(m: &[[u64; 2]; 2], l: LatticePoint, n: u64) -> LatticePoint {
    let n = n as u128;
    let a = (m[0][0] as u128 * l.p1 as u128 + m[0][1] as u128 * l.p2 as u128) % n;
    let b = (m[1][0] as u128 * l.p1 as u128 + m[1][1] as u128 * l.p2 as u128) % n;
    LatticePoint { p1: a as u64, p2: b as u64 }
}

/// A bijection of `{0, …, len − 1}`, stored as the forward image table.
///
/// For the table of a map `U_T`, entry `ℓ` holds the row-major index of
/// `U_T(ℓ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    forward: Vec<u32>,
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Self { forward: (0..len as u32).collect() }
    }

    pub fn from_vec(forward: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; forward.len()];
        for &f in &forward {
            let slot = seen
                .get_mut(f as usize)
                .ok_or_else(|| Error::InvalidArgument(format!("image {f} out of range")))?;
            if std::mem::replace(slot, true) {
                return Err(Error::InvalidArgument(format!("image {f} repeated")));
            }
        }
        Ok(Self { forward })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.forward
    }

    pub fn image(&self, i: usize) -> usize {
        self.forward[i] as usize
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u32; self.forward.len()];
        for (i, &f) in self.forward.iter().enumerate() {
            inv[f as usize] = i as u32;
        }
        Self { forward: inv }
    }

    /// `self` followed by `next`: `i ↦ next(self(i))`.
    pub fn then(&self, next: &Permutation) -> Self {
        assert_eq!(self.len(), next.len(), "permutation lengths differ");
        Self { forward: self.forward.iter().map(|&f| next.forward[f as usize]).collect() }
    }

    pub fn pow(&self, j: u32) -> Self {
        (0..j).fold(Self::identity(self.len()), |acc, _| acc.then(self))
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &f)| i as u32 == f)
    }

    /// Pulls a diagonal back along the map: `out[ℓ] = diag[U(ℓ)]`.
    pub fn pull_back<T: Copy + Send + Sync>(&self, diag: &[T]) -> Vec<T> {
        assert_eq!(diag.len(), self.len(), "diagonal length differs");
        self.forward.par_iter().map(|&f| diag[f as usize]).collect()
    }

    /// Lengths of all cycles, in order of their smallest element.
    pub fn cycle_lengths(&self) -> Vec<u64> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0u64;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.forward[i] as usize;
                len += 1;
            }
            out.push(len);
        }
        out
    }

    /// Least `p ≥ 1` with `self^p = id`.
    pub fn period(&self) -> u128 {
        self.cycle_lengths().into_iter().fold(1u128, |acc, c| acc.lcm(&(c as u128)))
    }

    /// One index per line, row-major.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for f in &self.forward {
            writeln!(w, "{f}")?;
        }
        Ok(())
    }

    pub fn read_csv<B: BufRead>(r: B) -> Result<Self> {
        let mut forward = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            forward.push(
                line.parse::<u32>()
                    .map_err(|e| Error::InvalidArgument(format!("bad table entry {line:?}: {e}")))?,
            );
        }
        Self::from_vec(forward)
    }

    /// Flat little-endian `u32` array.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for f in &self.forward {
            w.write_all(&f.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<Rd: Read>(mut r: Rd) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if buf.len() % 4 != 0 {
            return Err(Error::InvalidArgument("binary table length not a multiple of 4".into()));
        }
        let forward = buf
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::from_vec(forward)
    }
}

/// Permutation table of `U_T` on all `N²` lattice points.
pub fn build_permutation(t: &ToralMatrix, cfg: &LatticeConfig) -> Result<Permutation> {
    build_permutation_with_limit(t, cfg, DEFAULT_CAPACITY)
}

pub fn build_permutation_with_limit(t: &ToralMatrix, cfg: &LatticeConfig, limit: u64) -> Result<Permutation> {
    cfg.check_capacity(limit.min(u32::MAX as u64 + 1))?;
    let m = t.power_mod(1, cfg.n());
    let forward = (0..cfg.script_n() as usize)
        .into_par_iter()
        .map(|idx| cfg.index(apply_mod(&m, cfg.from_index(idx), cfg.n())) as u32)
        .collect();
    Ok(Permutation { forward })
}

/// Global period of `U_T` on the lattice, from its cycle decomposition.
pub fn orbit_period(t: &ToralMatrix, cfg: &LatticeConfig) -> Result<u128> {
    Ok(build_permutation(t, cfg)?.period())
}

/// Least `p ≥ 1` with `T^p ≡ I (mod N)`, found by stepping the matrix.
pub fn matrix_order_mod(t: &ToralMatrix, n: u64) -> u64 {
    let step = t.power_mod(1, n);
    let one = [[1 % n, 0], [0, 1 % n]];
    let mut acc = step;
    let mut p = 1u64;
    while acc != one {
        let mut next = [[0u64; 2]; 2];
        for (i, row) in next.iter_mut().enumerate() {
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = ((acc[i][0] as u128 * step[0][k] as u128 + acc[i][1] as u128 * step[1][k] as u128)
                    % n as u128) as u64;
            }
        }
        acc = next;
        p += 1;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n: u64) -> LatticeConfig {
        LatticeConfig::new(n).unwrap()
    }

    fn tp(a: f64, b: f64) -> TorusPoint<f64> {
        TorusPoint::new(a, b)
    }

    #[test]
    fn config_validation() {
        assert!(LatticeConfig::new(1).is_err());
        assert_eq!(cfg(7).script_n(), 49);
        assert!(cfg(10).check_capacity(99).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(torus_distance(&tp(0.0, 0.0), &tp(0.0, 0.0)), 0.0);
        assert_relative_eq!(torus_distance(&tp(0.1, 0.0), &tp(0.9, 0.0)), 0.2, epsilon = 1e-12);
        assert_relative_eq!(
            torus_distance(&tp(0.25, 0.25), &tp(0.75, 0.75)),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_lattice(&tp(0.3, 0.7), &cfg(10)), LatticePoint { p1: 3, p2: 7 });
        assert_eq!(round_to_lattice(&tp(0.96, 0.96), &cfg(10)), LatticePoint { p1: 0, p2: 0 });
        assert_eq!(round_to_lattice(&tp(0.04999, 0.05001), &cfg(10)), LatticePoint { p1: 0, p2: 1 });
        // exact half rounds up
        assert_eq!(round_to_lattice(&tp(0.125, 0.0), &cfg(4)), LatticePoint { p1: 1, p2: 0 });
    }

    #[test]
    fn step_examples() {
        let cat = ToralMatrix::cat();
        let c = cfg(5);
        let l = LatticePoint { p1: 1, p2: 1 };
        assert_eq!(discrete_step(&cat, l, &c, 1), LatticePoint { p1: 3, p2: 2 });
        assert_eq!(discrete_step(&cat, l, &c, 0), l);
        assert_eq!(discrete_step(&cat, LatticePoint { p1: 3, p2: 2 }, &c, -1), l);
    }

    #[test]
    fn permutation_examples() {
        let cat = ToralMatrix::cat();
        let p = build_permutation(&cat, &cfg(2)).unwrap();
        assert!(Permutation::from_vec(p.as_slice().to_vec()).is_ok());

        let shear = ToralMatrix::new(1, 1, 0, 1).unwrap();
        let p = build_permutation(&shear, &cfg(2)).unwrap();
        // (0,0)→(0,0), (0,1)→(1,1), (1,0)→(1,0), (1,1)→(0,1)
        assert_eq!(p.as_slice(), &[0, 3, 2, 1]);
        assert!(p.then(&p.inverse()).is_identity());
    }

    #[test]
    fn permutation_rejects_non_bijections() {
        assert!(Permutation::from_vec(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_vec(vec![0, 3]).is_err());
    }

    #[test]
    fn capacity_limit() {
        let err = build_permutation_with_limit(&ToralMatrix::cat(), &cfg(100), 1000).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { requested: 10_000, .. }));
    }

    #[test]
    fn orbit_period_examples() {
        let rot = ToralMatrix::new(0, 1, -1, 0).unwrap();
        for n in 2..20 {
            assert_eq!(4 % orbit_period(&rot, &cfg(n)).unwrap(), 0);
        }
        assert_eq!(orbit_period(&ToralMatrix::cat(), &cfg(5)).unwrap(), 10);
        assert_eq!(orbit_period(&ToralMatrix::new(1, 1, 0, 1).unwrap(), &cfg(7)).unwrap(), 7);
    }

    #[test]
    fn table_io_round_trip() {
        let p = build_permutation(&ToralMatrix::cat(), &cfg(6)).unwrap();
        let mut csv = Vec::new();
        p.write_csv(&mut csv).unwrap();
        assert_eq!(Permutation::read_csv(&csv[..]).unwrap(), p);
        let mut bin = Vec::new();
        p.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 36 * 4);
        assert_eq!(Permutation::read_binary(&bin[..]).unwrap(), p);
        assert!(Permutation::read_binary(&bin[..5]).is_err());
    }

    #[test]
    fn pull_back_is_theta() {
        let c = cfg(3);
        let cat = ToralMatrix::cat();
        let p = build_permutation(&cat, &c).unwrap();
        let diag: Vec<i64> = (0..9).collect();
        let out = p.pull_back(&diag);
        for (idx, &v) in out.iter().enumerate() {
            let img = discrete_step(&cat, c.from_index(idx), &c, 1);
            assert_eq!(v, c.index(img) as i64);
        }
    }

    #[test]
    fn evolve_inverts() {
        let cat = ToralMatrix::cat();
        let x = tp(0.125, 0.375);
        let y = x.evolve(&cat, 5).evolve(&cat, -5);
        assert!(torus_distance(&x, &y) < 1e-12);
    }
}
