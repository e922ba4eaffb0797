use proptest::prelude::*;

use iga_majorant::majorant::{mark_cells, FluxCase};
use iga_majorant::splines::KnotVector;

/// Open knot vector with breakpoints at least 0.01 apart.
fn knot_vector() -> impl Strategy<Value = KnotVector> {
    (1usize..=5, prop::collection::vec(0.02f64..0.98, 0..8)).prop_map(|(p, mut inner)| {
        inner.sort_by(f64::total_cmp);
        let mut breaks = vec![0.0];
        for x in inner {
            if x - breaks.last().unwrap() >= 0.01 && 1.0 - x >= 0.01 {
                breaks.push(x);
            }
        }
        breaks.push(1.0);
        KnotVector::open(&breaks, p, None).unwrap()
    })
}

proptest! {
    #[test]
    fn partition_of_unity(kv in knot_vector(), xi in 0.0f64..=1.0) {
        let b = kv.eval_basis(xi, 2).unwrap();
        let s: f64 = b.values(0).iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        let d1: f64 = b.values(1).iter().sum();
        prop_assert!(d1.abs() < 1e-10, "sum of derivatives {d1}");
        prop_assert!(b.values(0).iter().all(|&v| v >= -1e-15));
    }

    #[test]
    fn dimension_formulas(kv in knot_vector(), k in 0usize..4) {
        let spans = kv.breakpoints().len() - 1;
        prop_assert_eq!(kv.n_basis(), spans + kv.degree());
        prop_assert_eq!(kv.elevated(k).unwrap().n_basis(), kv.n_basis() + k);
        let r = kv.refine_uniform();
        prop_assert_eq!(r.n_cells(), 2 * kv.n_cells());
        prop_assert_eq!(r.degree(), kv.degree());
    }

    #[test]
    fn coarsening_of_uniform_meshes(m in 1usize..20, factor in 1usize..5, p in 1usize..4) {
        let kv = KnotVector::uniform(m * factor, p).unwrap();
        let c = kv.coarsen_by_factor(factor);
        prop_assert_eq!(c.n_cells(), m);
        let h = 1.0 / m as f64;
        for (i, b) in c.breakpoints().iter().enumerate() {
            prop_assert!((b - i as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn marked_fraction_matches_psi(vals in prop::collection::hash_set(0u32..1_000_000, 10..400), psi in 1.0f64..99.0) {
        let v: Vec<f64> = vals.into_iter().map(f64::from).collect();
        let marked = mark_cells(&v, psi).unwrap().iter().filter(|&&m| m).count();
        let target = v.len() as f64 * psi / 100.0;
        prop_assert!((marked as f64 - target).abs() <= 1.0, "{marked} vs {target}");
    }

    #[test]
    fn flux_case_round_trip(k in 1usize..8, e in 0usize..8) {
        let c = FluxCase::General { coarsen: k, elevate: e };
        prop_assert_eq!(c.to_string().parse::<FluxCase>().unwrap(), c);
    }
}

#[test]
fn continuity_at_multiple_knots() {
    // cubic with a double knot at 0.5: C1 there, second derivative jumps
    let kv = KnotVector::open(&[0.0, 0.5, 1.0], 3, Some(&[2])).unwrap();
    let n = kv.n_basis();
    let eps = 1e-7;
    let at = |xi: f64, d: usize| {
        let b = kv.eval_basis(xi, 2).unwrap();
        let mut v = vec![0.0; n];
        for (k, x) in b.values(d).iter().enumerate() {
            v[b.first + k] = *x;
        }
        v
    };
    let jump = |d: usize| {
        at(0.5 - eps, d)
            .iter()
            .zip(at(0.5 + eps, d))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    assert!(jump(0) < 1e-5);
    assert!(jump(1) < 1e-4);
    assert!(jump(2) > 1.0);
}
