use proptest::prelude::*;

use toral::discretize::{discretize_aw, kernel, Constant};
use toral::entropy::{
    cs_entropies, cs_probabilities, cs_probabilities_general, fannes_gap_bound, Dynamics, Partition,
    ProbabilityTable, SymbolString,
};
use toral::geometry::{Interval, Rect};
use toral::lattice::{build_permutation, discrete_step, matrix_order_mod, orbit_period};
use toral::maps::{classify, diameter_formula, Family};
use toral::scalar::Rational;
use toral::{LatticeConfig, ToralMatrix, TorusPoint64};

/// Unimodular matrices `[[a, b], [c, d]]` built from a random `a, b` with
/// `gcd(a, b) = 1` through the extended Euclidean algorithm.
fn unimodular() -> impl Strategy<Value = ToralMatrix> {
    (-6i64..=6, -6i64..=6, -3i64..=3).prop_filter_map("needs gcd 1 and non-trivial", |(a, b, k)| {
        let (g, x, y) = ext_gcd(a, b);
        if g != 1 {
            return None;
        }
        // a·d − b·c = 1 with d = x + k·b, c = −y + k·a
        ToralMatrix::new(a, b, -y + k * a, x + k * b).ok()
    })
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.abs(), a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// A grid partition cut at `k/den` along both axes.
fn grid_partition() -> impl Strategy<Value = Partition> {
    (2i128..=12, prop::collection::vec(1i128..12, 0..3), prop::collection::vec(1i128..12, 0..2)).prop_map(
        |(den, xs, ys)| {
            let cuts = |v: Vec<i128>| {
                let mut c: Vec<i128> = v.into_iter().filter(|&k| k < den).collect();
                c.push(0);
                c.push(den);
                c.sort_unstable();
                c.dedup();
                c
            };
            let (xs, ys) = (cuts(xs), cuts(ys));
            let iv = |a: i128, b: i128| Interval::new(Rational::new(a, den), Rational::new(b, den)).unwrap();
            let mut rects = Vec::new();
            for wx in xs.windows(2) {
                for wy in ys.windows(2) {
                    rects.push(Rect::new(iv(wx[0], wx[1]), iv(wy[0], wy[1])));
                }
            }
            Partition::from_rects(rects).unwrap()
        },
    )
}

fn table(d: u32) -> impl Strategy<Value = ProbabilityTable<f64>> {
    prop::collection::vec(0.0f64..1.0, d as usize).prop_filter_map("non-zero mass", move |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-9).then(|| {
            let entries = w.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, p)| (i as u64, p / total)).collect();
            ProbabilityTable::from_entries(2, (d as f64).sqrt() as u32, entries).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_follows_trace(t in unimodular()) {
        let s = classify::<f64>(&t);
        let tr = t.trace().abs();
        let expected = if tr > 2 { Family::Hyperbolic } else if tr == 2 { Family::Parabolic } else { Family::Elliptic };
        prop_assert_eq!(s.family, expected);
        prop_assert!(s.eta >= 1.0);
    }

    #[test]
    fn diameters_grow_for_hyperbolic_and_parabolic(t in unimodular()) {
        let s = classify::<f64>(&t);
        prop_assume!(s.family != Family::Elliptic);
        let ds: Vec<f64> = (0..8).map(|n| diameter_formula(&s, n)).collect();
        prop_assert!(ds.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn lattice_dynamics_is_a_bijection(t in unimodular(), n in 2u64..40) {
        let cfg = LatticeConfig::new(n).unwrap();
        let perm = build_permutation(&t, &cfg).unwrap();
        prop_assert!(perm.then(&perm.inverse()).is_identity());
        let period = orbit_period(&t, &cfg).unwrap();
        prop_assert_eq!(period, matrix_order_mod(&t, n) as u128);
        prop_assert!(perm.pow(period as u32).is_identity());
    }

    #[test]
    fn powers_agree_with_stepping(t in unimodular(), n in 2u64..1000, j in 0i64..12, p1 in 0i64..1000, p2 in 0i64..1000) {
        let cfg = LatticeConfig::new(n).unwrap();
        let l = cfg.point(p1, p2);
        let mut stepped = l;
        for _ in 0..j {
            stepped = discrete_step(&t, stepped, &cfg, 1);
        }
        prop_assert_eq!(discrete_step(&t, l, &cfg, j), stepped);
        prop_assert_eq!(discrete_step(&t, stepped, &cfg, -j), l);
    }

    #[test]
    fn kernel_is_a_delta(t in unimodular(), n in 2u64..200, steps in 0i64..10, x in (0.0f64..1.0, 0.0f64..1.0)) {
        let cfg = LatticeConfig::new(n).unwrap();
        let x = TorusPoint64::new(x.0, x.1);
        let hits: u32 = (0..n as i64)
            .flat_map(|a| (0..n as i64).map(move |b| (a, b)))
            .map(|(a, b)| kernel(&t, &cfg, steps, &x, &cfg.point(a, b).to_torus(&cfg)) as u32)
            .sum();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn cell_weights_tile_every_cell(p in grid_partition(), n in 2u64..20) {
        let cfg = LatticeConfig::new(n).unwrap();
        let w = p.cell_weights(&cfg);
        for idx in 0..cfg.script_n() as usize {
            let l = cfg.from_index(idx);
            let total: Rational = (0..p.len()).map(|a| w.weight(l, a)).sum();
            prop_assert_eq!(total, Rational::from_integer(1));
        }
    }

    #[test]
    fn cs_tables_are_exact_and_paths_agree(p in grid_partition(), t in unimodular(), n in 2u64..10) {
        let cfg = LatticeConfig::new(n).unwrap();
        let snap = p.snap(&cfg);
        prop_assume!(snap.is_ok());
        let (snapped, dist) = snap.unwrap();
        prop_assert!(dist <= Rational::new(1, 2 * n as i128));
        prop_assert!(snapped.cell_weights(&cfg).aligned_atoms().is_some());
        let dynamics = Dynamics::Map(t);
        let fast = cs_probabilities(&dynamics, &cfg, &snapped, 2).unwrap();
        prop_assert!(fast.is_normalized());
        let slow = cs_probabilities_general(&dynamics, &cfg, &snapped, 2, 1 << 16).unwrap();
        prop_assert_eq!(&fast, &slow);
        let raw = cs_probabilities_general(&dynamics, &cfg, &p, 2, 1 << 16).unwrap();
        prop_assert!(raw.is_normalized());
    }

    #[test]
    fn cs_entropy_never_decreases(p in grid_partition(), t in unimodular(), n in 2u64..24) {
        let cfg = LatticeConfig::new(n).unwrap();
        let snap = p.snap(&cfg);
        prop_assume!(snap.is_ok());
        let (snapped, _) = snap.unwrap();
        let s = cs_entropies(&Dynamics::Map(t), &cfg, &snapped, 5).unwrap();
        prop_assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let identity = cs_entropies(&Dynamics::Identity, &cfg, &snapped, 5).unwrap();
        prop_assert!(identity.iter().all(|&v| v == identity[0]));
    }

    #[test]
    fn fannes_bound_holds(a in table(9), b in table(9)) {
        let r = fannes_gap_bound(&a, &b).unwrap();
        prop_assert!(r.holds, "{:?}", r);
        prop_assert!(r.delta <= 2.0 + 1e-12);
    }

    #[test]
    fn string_packing_round_trips(s in prop::collection::vec(0u8..5, 1..12)) {
        let s = SymbolString(s);
        let n = s.len() as u32;
        prop_assert_eq!(SymbolString::unpack(s.pack(5), n, 5), s.clone());
        prop_assert_eq!(s.reversed().reversed(), s);
    }

    #[test]
    fn constants_discretize_to_constants(c in -5.0f64..5.0, n in 2u64..30) {
        let cfg = LatticeConfig::new(n).unwrap();
        let d = discretize_aw::<f64, _>(&Constant(c), &cfg, 2);
        prop_assert!(d.entries().iter().all(|&e| (e - c).abs() < 1e-12));
    }
}
