mod common;

use jostlab::free::{free_remainder_deriv, free_resolvent, root_identity, taylor_split};
use jostlab::jost::jost_right;
use jostlab::lap::{weighted_norm, Projector};
use jostlab::potential::random_potential;
use jostlab::resolvent::bracket;
use jostlab::transfer::transfer_matrix_oracle;
use jostlab::weights::{bracket as jb, bracket_minus, bracket_plus, moment_m};
use jostlab::{Grid, Potential, SpectralParam, WeightSpec, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn sector_zeta(n: usize) -> impl Strategy<Value = SpectralParam> {
    (0.05f64..3.0, 0.02f64..0.98).prop_map(move |(r, f)| SpectralParam::on_ray(n, r, f * PI / n as f64).unwrap())
}

fn potential() -> impl Strategy<Value = Potential> {
    (any::<u64>(), 1usize..4, 0usize..3, 0.1f64..3.0).prop_map(|(seed, k, d, a)| {
        let mut g = common::rng(seed);
        random_potential(&mut g, k, d, a)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_brackets_multiply(x in -50.0f64..50.0) {
        prop_assert!((bracket_minus(x, 1.0) * bracket_plus(x, 1.0) - jb(x, 1.0)).abs() <= 1e-14 * jb(x, 1.0));
    }

    #[test]
    fn moment_is_monotone(v in potential(), mu in 0.0f64..2.0, dmu in 0.0f64..1.0) {
        for n in 2..5 {
            let a = moment_m(&v, n, mu);
            prop_assert!(moment_m(&v, n, mu + dmu) >= a * (1.0 - 1e-14));
            prop_assert!(moment_m(&v, n + 1, mu) >= a * (1.0 - 1e-14));
        }
    }

    #[test]
    fn eval_is_the_sum_of_pieces(v in potential(), xs in proptest::collection::vec(-1.5f64..1.5, 200)) {
        for x in xs {
            let from_pieces: C64 = v
                .pieces()
                .iter()
                .filter(|p| p.a < x && x < p.b)
                .map(|p| p.eval(x))
                .sum();
            let on_joint = v.pieces().iter().any(|p| p.a == x || p.b == x);
            if !on_joint {
                prop_assert_eq!(v.eval(x), from_pieces);
            }
        }
        prop_assert_eq!(v.eval(v.l() + 1e-9), C64::new(0.0, 0.0));
    }

    #[test]
    fn sector_maps_to_upper_half_plane(sp in sector_zeta(3)) {
        prop_assert!(sp.z().im >= -1e-12 * sp.z().norm());
    }

    #[test]
    fn admissibility_threshold(s in 0.0f64..4.0, sp in 0.0f64..4.0, n in 2usize..5) {
        let t = n as f64 - 1.5;
        prop_assert_eq!(WeightSpec::new(s, sp).admissible(n), s > t && sp > t);
    }

    #[test]
    fn taylor_split_reconstructs(sp in sector_zeta(3), x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let split = taylor_split(&sp).unwrap();
        let r = free_resolvent(x, y, &sp).unwrap();
        prop_assert!((split.total(x, y) - r).norm() <= 1e-9 * r.norm().max(1.0 / sp.zeta().norm_sqr()));
    }

    #[test]
    fn remainder_is_quadratically_small(sp in sector_zeta(3), x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let t = (x - y).abs();
        prop_assert!(free_remainder_deriv(x, y, &sp, 0).norm() <= 2.0 * t * t / 3.0 * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn transfer_det_and_group(seed in any::<u64>(), sp in sector_zeta(3), a in -2.0f64..0.0, m in -1.0f64..1.0, b in 0.0f64..2.0) {
        let mut g = common::rng(seed);
        let v = common::random_constant_potential(&mut g, 3, 2.0);
        let t1 = transfer_matrix_oracle(&v, &sp, a, m).unwrap();
        let t2 = transfer_matrix_oracle(&v, &sp, m, b).unwrap();
        let t = transfer_matrix_oracle(&v, &sp, a, b).unwrap();
        // rounding in the determinant scales with the Hadamard bound ∏ column norms
        let hadamard: f64 = t.matrix.column_iter().map(|c| c.norm()).product();
        prop_assert!((t.det() - 1.0).norm() <= 1e-13 * hadamard.max(1.0));
        let prod = t1.then(&t2);
        let scale = t.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let err = (&prod.matrix - &t.matrix).iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * scale);
    }

    #[test]
    fn weighted_norm_monotone_in_s(s in 0.0f64..3.0, ds in 0.0f64..1.0, sp in 0.0f64..3.0) {
        let grid = Grid::new(6.0, 1.0, 4, &[]).unwrap();
        let nodes = grid.nodes();
        let k = |i: usize, j: usize| C64::new((nodes[i] - nodes[j]).abs().min(3.0), 0.3 * (nodes[i] * nodes[j]).sin());
        let a = weighted_norm(k, &grid, WeightSpec::new(s, sp));
        let b = weighted_norm(k, &grid, WeightSpec::new(s + ds, sp));
        let c = weighted_norm(k, &grid, WeightSpec::new(s, sp + ds));
        prop_assert!(b <= a * (1.0 + 1e-6));
        prop_assert!(c <= a * (1.0 + 1e-6));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bracket_is_antisymmetric(v in potential(), sp in sector_zeta(3)) {
        let grid = Grid::for_potential(&v, 3.0, 0.25, 8, &[]).unwrap();
        let a = jost_right(&v, &sp, 0, &grid).unwrap();
        let b = jost_right(&v, &sp, 1, &grid).unwrap();
        let ab = bracket(&a, &b).unwrap();
        let ba = bracket(&b, &a).unwrap();
        let aa = bracket(&a, &a).unwrap();
        for i in 0..ab.values.len() {
            prop_assert!((ab.values[i] + ba.values[i]).norm() <= 1e-12 * ab.values[i].norm().max(1e-300));
            prop_assert_eq!(aa.values[i], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn projector_is_idempotent(c in -2.0f64..2.0, w in 0.3f64..3.0, k in 0.0f64..3.0) {
        let grid = Grid::new(6.0, 0.25, 8, &[-1.0, 1.0]).unwrap();
        let p = Projector::new(3).unwrap();
        let f = grid.sample(|x, _| C64::from_polar((-w * (x - c) * (x - c)).exp(), k * x));
        let pf = p.project(&grid, &f);
        prop_assert!(p.project(&grid, &pf).sub(&pf).max_abs() <= 1e-12 * pf.max_abs().max(1e-300));
    }
}

#[test]
fn root_identity_is_exact() {
    for n in 2..=8 {
        for r in 0..n {
            let want = if r == n - 1 { 1.0 } else { 0.0 };
            assert!((root_identity(n, r) - want).norm() < 1e-14);
        }
    }
}
