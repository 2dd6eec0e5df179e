mod common;

use jostlab::bifurcation::build_bifurcation_potential;
use jostlab::lap::{bisector_ray, lap_probe, psi_basis_audit, refinement_agreement, regularized_resolvent, LapVerdict, WeightedKernelOperator};
use jostlab::resolvent::resolvent_kernel;
use jostlab::threshold::{classify_threshold, find_two_sided_virtual_level, two_piece_imaginary, virtual_state_from, Classification, DEFAULT_EPS_RAY};
use jostlab::{Grid, Potential, SpectralParam, WeightSpec, C64};
use std::f64::consts::PI;

#[test]
fn two_sided_virtual_level_is_found_and_classified() {
    let (r1, r2) = find_two_sided_virtual_level().unwrap();
    let v = two_piece_imaginary(r1, r2);
    let grid = Grid::for_potential(&v, 6.0, 0.25, 10, &[]).unwrap();
    let report = classify_threshold(&v, &grid, &DEFAULT_EPS_RAY).unwrap();
    assert_eq!(report.classification, Classification::VirtualLevel);
    assert!(report.delta_zero_order >= 2);
    let psi = virtual_state_from(&report, &v).unwrap();
    assert!(psi.equation_residual < 1e-8, "{}", psi.equation_residual);
    // Ψ → constants on both sides
    assert!(psi.growth_exponent.abs() < 1e-6, "{}", psi.growth_exponent);
    assert!(psi.sup_left.is_finite());
}

#[test]
fn lap_probe_separates_regular_from_virtual_level() {
    let w = WeightSpec::new(2.0, 2.0);
    let ray = bisector_ray(3, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
    let regular = Potential::indicator(-1.0, 1.0, C64::new(1.0, 0.3), 1.0).unwrap();
    let grid = Grid::for_potential(&regular, 20.0, 0.5, 6, &[]).unwrap();
    let r = lap_probe(&regular, &ray, &grid, w).unwrap();
    assert_eq!(r.verdict, LapVerdict::Lap, "{r:?}");
    let (r1, r2) = find_two_sided_virtual_level().unwrap();
    let vl = two_piece_imaginary(r1, r2);
    let grid = Grid::for_potential(&vl, 20.0, 0.5, 6, &[]).unwrap();
    let r = lap_probe(&vl, &ray, &grid, w).unwrap();
    assert_eq!(r.verdict, LapVerdict::VirtualLevel, "{r:?}");
    assert!(r.fit_exponent < -0.5, "{r:?}");
}

#[test]
fn psi_residuals_stay_flat_towards_threshold() {
    let grid = Grid::new(12.0, 0.25, 10, &[]).unwrap();
    let res: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&r| psi_basis_audit(&SpectralParam::on_ray(3, r, PI / 6.0).unwrap(), &grid).unwrap().max())
        .collect();
    assert!(res[0] <= 1e-6, "{res:?}");
    for r in &res[1..] {
        assert!(*r <= 10.0 * res[0] + 1e-9, "{res:?}");
    }
}

#[test]
fn weighted_norm_is_stable_under_refinement() {
    let v = Potential::indicator(-1.0, 1.0, C64::new(1.0, 0.3), 1.0).unwrap();
    let sp = SpectralParam::on_ray(3, 0.1, PI / 6.0).unwrap();
    let base = Grid::for_potential(&v, 15.0, 1.0, 4, &[]).unwrap();
    let (_, rel) = refinement_agreement(
        |g| {
            let k = resolvent_kernel(&v, &sp, g)?;
            Ok(WeightedKernelOperator::new(|i, j| k.at(i, j), g, WeightSpec::new(2.0, 2.0)).norm())
        },
        &base,
        &v.breakpoints(),
    )
    .unwrap();
    assert!(rel <= 0.05, "{rel}");
}

#[test]
fn power_iteration_agrees_with_svd() {
    let v = Potential::indicator(-1.0, 1.0, C64::new(-0.5, 0.8), 1.0).unwrap();
    let sp = SpectralParam::on_ray(3, 0.3, PI / 6.0).unwrap();
    let grid = Grid::for_potential(&v, 10.0, 0.5, 6, &[]).unwrap();
    let k = resolvent_kernel(&v, &sp, &grid).unwrap();
    let op = WeightedKernelOperator::new(|i, j| k.at(i, j), &grid, WeightSpec::new(2.0, 1.6));
    let (p, s) = (op.norm(), op.svd_norm().unwrap());
    assert!((p - s).abs() <= 1e-6 * s, "{p} {s}");
}

#[test]
fn regularized_solution_stays_bounded() {
    let grid = Grid::new(20.0, 0.5, 8, &[-1.0, 1.0]).unwrap();
    let f = grid.sample(|x, _| C64::new((-x * x).exp(), 0.0));
    let norms: Vec<f64> = bisector_ray(3, &[1e-1, 1e-2, 1e-3, 1e-4])
        .unwrap()
        .iter()
        .map(|sp| {
            let rr = regularized_resolvent(&Potential::zero(1.0), sp, &grid).unwrap();
            let u = rr.apply(&grid, &f);
            assert!(rr.residual_of(&grid, &u, &f) < 1e-6);
            grid.l2_norm(&grid.from_nodes(u.value()), -2.0)
        })
        .collect();
    let hi = norms.iter().cloned().fold(0.0, f64::max);
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo < 1.5, "{norms:?}");
}

#[test]
fn bifurcation_degenerates_to_the_free_virtual_level() {
    let b = build_bifurcation_potential(0.0).unwrap();
    assert!(b.v.is_zero());
    let grid = Grid::for_potential(&b.v, 4.0, 0.25, 10, &[]).unwrap();
    let r = classify_threshold(&b.v, &grid, &DEFAULT_EPS_RAY).unwrap();
    assert_eq!(r.classification, Classification::VirtualLevel);
}
