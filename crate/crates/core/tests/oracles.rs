//! Cross-checks against independent reference computations written here from
//! first principles: characteristic polynomials, singular values, polygon
//! clipping and direct sampling of the coherent-state chain.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toral::entropy::{classical_probabilities_mc, cs_probabilities, Dynamics, Partition};
use toral::lattice::{round_to_lattice, torus_distance};
use toral::maps::{classify, diameter_formula};
use toral::scalar::Rational;
use toral::{LatticeConfig, ToralMatrix, TorusPoint64};

fn matrices() -> Vec<ToralMatrix> {
    [[2, 1, 1, 1], [3, 2, 1, 1], [1, 1, 0, 1], [1, 0, 2, 1], [0, 1, -1, 0], [1, 1, -1, 0], [-2, 1, -1, 0], [5, 2, 2, 1]]
        .iter()
        .map(|e| ToralMatrix::new(e[0], e[1], e[2], e[3]).unwrap())
        .collect()
}

/// Roots of `z² − tr z + 1`.
fn eigenvalues(t: &ToralMatrix) -> Option<(f64, f64)> {
    let tr = t.trace() as f64;
    let disc = tr * tr - 4.0;
    (disc > 0.0).then(|| ((tr + disc.sqrt()) / 2.0, (tr - disc.sqrt()) / 2.0))
}

/// Largest singular value from the eigenvalues of `MᵀM`.
fn sigma_max(m: [[f64; 2]; 2]) -> f64 {
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let mean = (a + c) / 2.0;
    let root = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    (mean + root).sqrt()
}

fn int_power(t: &ToralMatrix, n: u32) -> [[f64; 2]; 2] {
    let e = t.entries();
    let m = [[e[0] as i128, e[1] as i128], [e[2] as i128, e[3] as i128]];
    let mut acc = [[1i128, 0], [0, 1]];
    for _ in 0..n {
        acc = [
            [acc[0][0] * m[0][0] + acc[0][1] * m[1][0], acc[0][0] * m[0][1] + acc[0][1] * m[1][1]],
            [acc[1][0] * m[0][0] + acc[1][1] * m[1][0], acc[1][0] * m[0][1] + acc[1][1] * m[1][1]],
        ];
    }
    [[acc[0][0] as f64, acc[0][1] as f64], [acc[1][0] as f64, acc[1][1] as f64]]
}

#[test]
fn spectral_data_matches_characteristic_polynomial() {
    for t in matrices() {
        let s = classify::<f64>(&t);
        match eigenvalues(&t) {
            Some((l1, l2)) => {
                let lam = if l1.abs() > l2.abs() { l1 } else { l2 };
                assert_relative_eq!(s.lambda.unwrap(), lam, epsilon = 1e-12);
                assert_relative_eq!(s.xi, lam.abs().ln(), epsilon = 1e-12);
                // angle between eigenvectors (t12 ≠ 0 for these matrices) of T − λ I
                let e = t.entries();
                let v = |l: f64| {
                    let (x, y) = (e[1] as f64, l - e[0] as f64);
                    let r = x.hypot(y);
                    [x / r, y / r]
                };
                let (a, b) = (v(l1), v(l2));
                let cos = (a[0] * b[0] + a[1] * b[1]).abs();
                assert_relative_eq!(s.sin_beta.unwrap(), (1.0 - cos * cos).sqrt(), epsilon = 1e-12);
            }
            None => {
                assert!(s.lambda.is_none());
                assert_eq!(s.xi, 0.0);
            }
        }
        assert_relative_eq!(s.eta, sigma_max(int_power(&t, 1)), epsilon = 1e-12);
    }
}

#[test]
fn diameters_are_largest_singular_values() {
    for t in matrices() {
        let s = classify::<f64>(&t);
        for n in 1..=10 {
            let oracle = sigma_max(int_power(&t, n));
            let d = diameter_formula(&s, n);
            assert_relative_eq!(d, oracle, max_relative = 1e-9);
        }
        assert_eq!(diameter_formula(&s, 0), 1.0);
    }
}

#[test]
fn torus_distance_matches_nine_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let (a, b): ([f64; 2], [f64; 2]) = ([rng.gen(), rng.gen()], [rng.gen(), rng.gen()]);
        let mut best = f64::INFINITY;
        for k1 in -1..=1 {
            for k2 in -1..=1 {
                best = best.min((a[0] - b[0] + k1 as f64).hypot(a[1] - b[1] + k2 as f64));
            }
        }
        let d = torus_distance(&TorusPoint64::new(a[0], a[1]), &TorusPoint64::new(b[0], b[1]));
        assert_relative_eq!(d, best, epsilon = 1e-14);
    }
}

fn clip(poly: &[[f64; 2]], inside: impl Fn([f64; 2]) -> f64) -> Vec<[f64; 2]> {
    // Sutherland–Hodgman against the half-plane inside(p) ≥ 0, inside affine
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (fp, fq) = (inside(p), inside(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let s = fp / (fp - fq);
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    out
}

fn area(poly: &[[f64; 2]]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        a += p[0] * q[1] - q[0] * p[1];
    }
    a.abs() / 2.0
}

/// `μ(E_i ∩ T⁻¹E_j) = μ(T E_i ∩ E_j)`, summing the clipped parallelogram
/// `T E_i` against every integer translate of `E_j`.
fn two_step_areas(t: &ToralMatrix, rects: &[[f64; 4]]) -> Vec<f64> {
    let m = int_power(t, 1);
    let d = rects.len();
    let mut out = vec![0.0; d * d];
    for (i, r) in rects.iter().enumerate() {
        let corners = [[r[0], r[2]], [r[1], r[2]], [r[1], r[3]], [r[0], r[3]]];
        let image: Vec<[f64; 2]> =
            corners.iter().map(|c| [m[0][0] * c[0] + m[0][1] * c[1], m[1][0] * c[0] + m[1][1] * c[1]]).collect();
        let lo = |k: usize| image.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min).floor() as i64 - 1;
        let hi = |k: usize| image.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max).ceil() as i64 + 1;
        for (j, e) in rects.iter().enumerate() {
            for k1 in lo(0)..=hi(0) {
                for k2 in lo(1)..=hi(1) {
                    let (x0, x1) = (e[0] + k1 as f64, e[1] + k1 as f64);
                    let (y0, y1) = (e[2] + k2 as f64, e[3] + k2 as f64);
                    let mut p = image.clone();
                    p = clip(&p, |q| q[0] - x0);
                    p = clip(&p, |q| x1 - q[0]);
                    p = clip(&p, |q| q[1] - y0);
                    p = clip(&p, |q| y1 - q[1]);
                    if p.len() >= 3 {
                        out[i * d + j] += area(&p);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn two_step_probabilities_match_polygon_areas() {
    let halves = [[0.0, 0.5, 0.0, 1.0], [0.5, 1.0, 0.0, 1.0]];
    let quads = [[0.0, 0.5, 0.0, 0.5], [0.0, 0.5, 0.5, 1.0], [0.5, 1.0, 0.0, 0.5], [0.5, 1.0, 0.5, 1.0]];
    let samples = 400_000;
    for (partition, rects) in [(Partition::halves(), &halves[..]), (Partition::quadrants(), &quads[..])] {
        for t in [ToralMatrix::cat(), ToralMatrix::new(3, 2, 1, 1).unwrap(), ToralMatrix::new(1, 1, 0, 1).unwrap()] {
            let exact = two_step_areas(&t, rects);
            assert_relative_eq!(exact.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            let mc = classical_probabilities_mc(&t, &partition, 2, samples, 17).unwrap();
            for (c, &p) in exact.iter().enumerate() {
                let est = mc.entries().get(&(c as u64)).copied().unwrap_or(0.0);
                let se = (p * (1.0 - p) / samples as f64).sqrt().max(1e-9);
                assert!((est - p).abs() < 4.0 * se, "{t} code {c}: mc {est} vs exact {p}");
            }
        }
    }
}

/// Direct sampling of the measurement chain: `x_{n−1}` uniform, then each
/// `x_{j−1}` uniform in the cell of `U(x̂_j)`; the record is the atom sequence
/// `(x_0, …, x_{n−1})`.
fn cs_chain_mc(t: &ToralMatrix, size: u64, p: &Partition, n: u32, samples: usize, seed: u64) -> Vec<f64> {
    let e = t.entries();
    let d = p.len();
    let nf = size as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = vec![0usize; d.pow(n)];
    let round = |x: f64| (((nf * x + 0.5).floor() as i64).rem_euclid(size as i64)) as i64;
    for _ in 0..samples {
        let mut xs = vec![[0.0f64; 2]; n as usize];
        let mut x = [rng.gen::<f64>(), rng.gen::<f64>()];
        xs[n as usize - 1] = x;
        for j in (1..n as usize).rev() {
            let (l1, l2) = (round(x[0]), round(x[1]));
            let u1 = (e[0] * l1 + e[1] * l2).rem_euclid(size as i64) as f64;
            let u2 = (e[2] * l1 + e[3] * l2).rem_euclid(size as i64) as f64;
            let jitter = |r: f64| (r - 0.5) / nf;
            x = [
                (u1 / nf + jitter(rng.gen())).rem_euclid(1.0),
                (u2 / nf + jitter(rng.gen())).rem_euclid(1.0),
            ];
            xs[j - 1] = x;
        }
        let code = xs.iter().fold(0usize, |acc, x| acc * d + p.locate(*x));
        hist[code] += 1;
    }
    hist.into_iter().map(|k| k as f64 / samples as f64).collect()
}

fn to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

#[test]
fn cs_probabilities_match_sampled_chain() {
    let samples = 200_000;
    for size in [5u64, 8, 16] {
        let cfg = LatticeConfig::new(size).unwrap();
        let (snapped, _) = Partition::quadrants().snap(&cfg).unwrap();
        for partition in [Partition::quadrants(), snapped] {
            for t in [ToralMatrix::cat(), ToralMatrix::new(1, 1, 0, 1).unwrap()] {
                for n in 2..=3 {
                    let exact = cs_probabilities(&Dynamics::Map(t), &cfg, &partition, n).unwrap();
                    let mc = cs_chain_mc(&t, size, &partition, n, samples, 23 + size);
                    for (c, &est) in mc.iter().enumerate() {
                        let p = exact.entries().get(&(c as u64)).map(to_f64).unwrap_or(0.0);
                        let se = (p * (1.0 - p) / samples as f64).sqrt().max(1e-9);
                        assert!((est - p).abs() < 4.0 * se, "N={size} {t} n={n} code {c}: {est} vs {p}");
                    }
                }
            }
        }
    }
}

#[test]
fn rounding_recovers_lattice_points() {
    let cfg = LatticeConfig::new(37).unwrap();
    for idx in 0..cfg.script_n() as usize {
        let l = cfg.from_index(idx);
        assert_eq!(round_to_lattice(&l.to_torus::<f64>(&cfg), &cfg), l);
    }
}
