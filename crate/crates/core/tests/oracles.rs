mod common;

use common::*;
use jostlab::lap::regularized_resolvent;
use jostlab::resolvent::resolvent_kernel;
use jostlab::transfer::{companion_propagator, transfer_matrix_oracle};
use jostlab::{Grid, Potential, SpectralParam, C64};
use std::f64::consts::PI;

#[test]
fn companion_propagator_matches_expm() {
    for n in 2..=5 {
        for (c, t) in [(C64::new(0.3, -1.2), 0.7), (C64::new(-2.0, 0.5), -1.3), (C64::new(0.0, 4.0), 2.0)] {
            let closed = companion_propagator(n, c, t);
            let m = companion(n, c) * C64::new(t, 0.0);
            let e = expm(&m);
            let err = (&closed - &e).iter().map(|v| v.norm()).fold(0.0, f64::max);
            let scale = e.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12 * scale, "n={n} c={c} t={t}: {err}");
        }
    }
}

#[test]
fn transfer_oracle_matches_product_of_exponentials() {
    let mut g = rng(3);
    for _ in 0..5 {
        let v = random_constant_potential(&mut g, 4, 2.0);
        let sp = SpectralParam::on_ray(3, 0.8, 0.4).unwrap();
        let t = transfer_matrix_oracle(&v, &sp, -1.5, 1.5).unwrap();
        let mut acc = nalgebra::DMatrix::<C64>::identity(3, 3);
        let mut cuts: Vec<f64> = v.breakpoints().into_iter().filter(|b| b.abs() < 1.5).collect();
        cuts.insert(0, -1.5);
        cuts.push(1.5);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let c = C64::i().powu(3) * (sp.z() - v.eval(mid));
            acc = expm(&(companion(3, c) * C64::new(w[1] - w[0], 0.0))) * acc;
        }
        let err = (&t.matrix - &acc).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }
}

#[test]
fn resolvent_matches_dense_solve() {
    let v = Potential::indicator(-1.0, 1.0, C64::new(0.8, 0.4), 1.0).unwrap();
    let sp = SpectralParam::on_ray(3, 1.5, PI / 6.0).unwrap();
    let grid = Grid::for_potential(&v, 14.0, 0.5, 8, &[]).unwrap();
    let f = |x: f64| C64::new((-x * x).exp(), 0.2 * x * (-x * x).exp());
    let fg = grid.sample(|x, _| f(x) * C64::new(1.0, 0.0));
    let k = resolvent_kernel(&v, &sp, &grid).unwrap();
    let u = k.separable().apply(&grid, &fg);
    let dense = dense_solve(&grid, &v, &sp, 0.0, |x| f(x));
    let err = max_rel(u.value(), &dense);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn rank_one_update_matches_dense_solve() {
    for v in [Potential::zero(1.0), Potential::indicator(-0.5, 1.0, C64::new(-1.0, 0.6), 1.0).unwrap()] {
        let sp = SpectralParam::on_ray(3, 1.5, PI / 6.0).unwrap();
        let grid = Grid::for_potential(&v, 14.0, 0.5, 8, &[-1.0, 1.0]).unwrap();
        let f = |x: f64| C64::new((-(x - 0.3) * (x - 0.3)).exp(), 0.0);
        let rr = regularized_resolvent(&v, &sp, &grid).unwrap();
        let u = rr.apply(&grid, &grid.sample(|x, _| f(x)));
        let dense = dense_solve(&grid, &v, &sp, 1.0, f);
        let err = max_rel(u.value(), &dense);
        assert!(err < 1e-6, "{err}");
    }
}
