//! Finite partitions of the torus into unions of rational rectangles, their
//! exact overlaps with lattice cells, and snapping onto a lattice.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ratio_f64, Interval, Rect};
use crate::lattice::{LatticeConfig, LatticePoint};
use crate::scalar::Rational;

/// One partition element: a finite union of disjoint rectangles.
///
/// Atoms crossing the seam `x = 0 ≡ 1` are stored as several rectangles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    pub rects: Vec<Rect>,
}

impl Atom {
    pub fn area(&self) -> Rational {
        self.rects.iter().map(Rect::area).sum()
    }

    pub fn contains_f64(&self, p: [f64; 2]) -> bool {
        self.rects.iter().any(|r| r.contains_f64(p))
    }
}

/// A partition `{E_0, …, E_{D−1}}` of the torus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    atoms: Vec<Atom>,
}

impl Partition {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() > u8::MAX as usize {
            return Err(Error::InvalidPartition(format!("{} atoms", atoms.len())));
        }
        if let Some(i) = atoms.iter().position(|a| a.rects.is_empty()) {
            return Err(Error::InvalidPartition(format!("atom {i} is empty")));
        }
        let rects: Vec<(usize, &Rect)> =
            atoms.iter().enumerate().flat_map(|(i, a)| a.rects.iter().map(move |r| (i, r))).collect();
        for (k, (i, a)) in rects.iter().enumerate() {
            for (j, b) in &rects[k + 1..] {
                if a.intersects(b) {
                    return Err(Error::InvalidPartition(format!("atoms {i} and {j} overlap")));
                }
            }
        }
        let total: Rational = atoms.iter().map(Atom::area).sum();
        if total != Rational::one() {
            return Err(Error::InvalidPartition(format!("total measure {total} ≠ 1")));
        }
        Ok(Self { atoms })
    }

    /// One rectangle per atom.
    pub fn from_rects(rects: Vec<Rect>) -> Result<Self> {
        Self::new(rects.into_iter().map(|r| Atom { rects: vec![r] }).collect())
    }

    /// `{x1 < 1/2, x1 ≥ 1/2}`.
    pub fn halves() -> Self {
        let h = Rational::new(1, 2);
        let left = Interval { lo: Rational::zero(), hi: h };
        let right = Interval { lo: h, hi: Rational::one() };
        Self::from_rects(vec![Rect::new(left, Interval::unit()), Rect::new(right, Interval::unit())])
            .expect("valid preset")
    }

    /// The four quadrants, indexed `2·[x1 ≥ 1/2] + [x2 ≥ 1/2]`.
    pub fn quadrants() -> Self {
        let h = Rational::new(1, 2);
        let lo = Interval { lo: Rational::zero(), hi: h };
        let hi = Interval { lo: h, hi: Rational::one() };
        Self::from_rects(vec![Rect::new(lo, lo), Rect::new(lo, hi), Rect::new(hi, lo), Rect::new(hi, hi)])
            .expect("valid preset")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Number of atoms `D`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn areas(&self) -> Vec<Rational> {
        self.atoms.iter().map(Atom::area).collect()
    }

    /// Index of the atom containing `p` (half-open convention).
    pub fn locate(&self, p: [f64; 2]) -> usize {
        self.atoms
            .iter()
            .position(|a| a.contains_f64(p))
            .expect("atoms cover the torus")
    }

    /// Moves every boundary to the nearest cell edge `(k + ½)/N`, ties
    /// upward. Returns the snapped partition and the largest displacement.
    pub fn snap(&self, cfg: &LatticeConfig) -> Result<(Partition, Rational)> {
        let n = cfg.n() as i128;
        let mut worst = Rational::zero();
        let mut snap_coord = |c: Rational| {
            // c ∈ [k/N, (k+1)/N) is nearest to the edge (k + ½)/N; c = k/N ties upward
            let k = (c * Rational::from_integer(n)).floor().to_integer();
            let s = Rational::new(2 * k + 1, 2 * n);
            worst = worst.max((s - c).abs());
            s
        };
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            let mut rects = Vec::new();
            for r in &atom.rects {
                let xs = snap_interval(&r.x, &mut snap_coord);
                let ys = snap_interval(&r.y, &mut snap_coord);
                for x in &xs {
                    for y in &ys {
                        rects.push(Rect::new(*x, *y));
                    }
                }
            }
            if rects.is_empty() {
                return Err(Error::InvalidPartition(format!(
                    "atom {} vanishes when snapped to the N = {n} lattice",
                    atoms.len()
                )));
            }
            atoms.push(Atom { rects });
        }
        Ok((Partition::new(atoms)?, worst))
    }

    /// Exact overlap weights of every atom with every lattice cell.
    pub fn cell_weights(&self, cfg: &LatticeConfig) -> CellWeightTable {
        cell_weights(self, cfg)
    }

    pub fn describe(&self) -> String {
        self.atoms
            .iter()
            .map(|a| {
                a.rects
                    .iter()
                    .map(|r| format!("[{},{})x[{},{})", r.x.lo, r.x.hi, r.y.lo, r.y.hi))
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Snaps `[lo, hi)` on the circle, splitting at the seam when needed.
fn snap_interval(iv: &Interval, snap: &mut impl FnMut(Rational) -> Rational) -> Vec<Interval> {
    if iv.len() == Rational::one() {
        return vec![*iv];
    }
    let one = Rational::one();
    let wrap = |x: Rational| if x >= one { x - one } else if x < Rational::zero() { x + one } else { x };
    let lo = wrap(snap(iv.lo));
    let hi = wrap(snap(iv.hi));
    match lo.cmp(&hi) {
        std::cmp::Ordering::Less => vec![Interval { lo, hi }],
        std::cmp::Ordering::Equal => Vec::new(),
        std::cmp::Ordering::Greater => {
            let mut out = vec![Interval { lo, hi: one }];
            if hi > Rational::zero() {
                out.push(Interval { lo: Rational::zero(), hi });
            }
            out
        }
    }
}

/// Per-rectangle one-dimensional cell overlaps; the weight of atom `E` at
/// cell `ℓ` is `Σ_{r ∈ E} wx_r(ℓ₁) · wy_r(ℓ₂)`, equal to `N² μ(cell(ℓ) ∩ E)`.
#[derive(Debug, Clone)]
pub struct CellWeightTable {
    cfg: LatticeConfig,
    /// `factors[atom][rect] = (wx, wy)`, each of length `N`, scaled by `N`.
    factors: Vec<Vec<(Vec<Rational>, Vec<Rational>)>>,
}

pub fn cell_weights(p: &Partition, cfg: &LatticeConfig) -> CellWeightTable {
    let n = cfg.n();
    let scale = Rational::from_integer(n as i128);
    let factors = p
        .atoms
        .iter()
        .map(|a| {
            a.rects
                .iter()
                .map(|r| {
                    let wx = (0..n).map(|k| r.x.cell_overlap(k, n) * scale).collect();
                    let wy = (0..n).map(|k| r.y.cell_overlap(k, n) * scale).collect();
                    (wx, wy)
                })
                .collect()
        })
        .collect();
    CellWeightTable { cfg: *cfg, factors }
}

impl CellWeightTable {
    pub fn cfg(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn atoms(&self) -> usize {
        self.factors.len()
    }

    pub fn weight(&self, l: LatticePoint, atom: usize) -> Rational {
        self.factors[atom]
            .iter()
            .map(|(wx, wy)| wx[l.p1 as usize] * wy[l.p2 as usize])
            .sum()
    }

    /// Atoms with non-zero weight at `ℓ`, with their weights.
    pub fn support(&self, l: LatticePoint) -> Vec<(usize, Rational)> {
        (0..self.atoms())
            .filter_map(|a| {
                let w = self.weight(l, a);
                (!w.is_zero()).then_some((a, w))
            })
            .collect()
    }

    /// If every weight is 0 or 1, the atom index of every cell (row-major).
    pub fn aligned_atoms(&self) -> Option<Vec<u8>> {
        let n = self.cfg.n() as usize;
        let is_unit = |q: &Rational| q.is_zero() || q.is_one();
        // only rows/columns where some factor is fractional need exact checks
        let mut frac_rows = vec![false; n];
        let mut frac_cols = vec![false; n];
        for rects in &self.factors {
            for (wx, wy) in rects {
                for k in 0..n {
                    frac_rows[k] |= !is_unit(&wx[k]);
                    frac_cols[k] |= !is_unit(&wy[k]);
                }
            }
        }
        for k1 in 0..n {
            for k2 in 0..n {
                if frac_rows[k1] || frac_cols[k2] {
                    let l = LatticePoint { p1: k1 as u64, p2: k2 as u64 };
                    if (0..self.atoms()).any(|a| !is_unit(&self.weight(l, a))) {
                        return None;
                    }
                }
            }
        }
        let unit_x: Vec<Vec<Vec<bool>>> = self
            .factors
            .iter()
            .map(|rects| rects.iter().map(|(wx, _)| wx.iter().map(|w| w.is_one()).collect()).collect())
            .collect();
        let unit_y: Vec<Vec<Vec<bool>>> = self
            .factors
            .iter()
            .map(|rects| rects.iter().map(|(_, wy)| wy.iter().map(|w| w.is_one()).collect()).collect())
            .collect();
        let mut out = vec![0u8; n * n];
        for (k1, row) in out.chunks_mut(n).enumerate() {
            for (k2, cell) in row.iter_mut().enumerate() {
                let atom = (0..self.atoms()).find(|&a| {
                    unit_x[a].iter().zip(&unit_y[a]).any(|(ux, uy)| ux[k1] && uy[k2])
                });
                match atom {
                    Some(a) => *cell = a as u8,
                    // a cell split between seam pieces of one atom: find it exactly
                    None => {
                        let l = LatticePoint { p1: k1 as u64, p2: k2 as u64 };
                        *cell = (0..self.atoms()).find(|&a| self.weight(l, a).is_one())? as u8;
                    }
                }
            }
        }
        Some(out)
    }
}

pub(crate) fn rect_bounds_f64(r: &Rect) -> [f64; 4] {
    [ratio_f64(&r.x.lo), ratio_f64(&r.x.hi), ratio_f64(&r.y.lo), ratio_f64(&r.y.hi)]
}
