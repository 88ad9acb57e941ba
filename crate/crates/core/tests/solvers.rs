mod common;

use common::{axis_multiplicities, classical, harmonic_basis, max_coeff, rng, shell_point, z2, RHO};
use dunkl_annulus::field::Constant;
use dunkl_annulus::kernels::BoundaryData;
use dunkl_annulus::solvers::{
    comparison_check, poisson_jensen_check, semilinear_solve, ComparisonConfig, Initial, Phi2, PoissonJensenConfig, RieszMeasure,
    SemilinearConfig, SemilinearOperator, SemilinearProblem, Verdict,
};
use dunkl_annulus::{Error, ScalarField};
use rand::Rng;

fn coarse() -> SemilinearConfig {
    SemilinearConfig { radial: 12, sphere: 6, local_radius: None, local_radial: 6, local_sphere: 6, theta: 1.0 }
}

fn samples(d: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).flat_map(|_| shell_point(&mut r, d, RHO + 0.1, 0.9)).collect()
}

#[test]
fn zero_reaction_gives_the_poisson_integral() {
    let an = classical();
    let f = |x: &[f64]| 1.0 + 0.3 * x[0] - 0.2 * x[2] * x[1];
    let one = Constant(1.0);
    let p = SemilinearProblem { annulus: &an, outer: &f, inner: &f, phi1: &one, phi2: Phi2::Zero };
    let sol = semilinear_solve(&p, &coarse(), 1e-12, 3).unwrap();
    let dir = an.dirichlet_solve(BoundaryData { outer: &f, inner: &f }, an.boundary_rule()).unwrap();
    let grid = sol.field.grid();
    for i in (0..grid.len()).step_by(7) {
        let x = grid.point(i);
        let e = dir.evaluate(&x).unwrap().value;
        assert!((sol.field.values()[i] - e).abs() < 1e-8, "{x:?}");
    }
}

#[test]
fn zero_boundary_data_gives_zero() {
    let an = classical();
    let one = Constant(1.0);
    let zero = Constant(0.0);
    for phi2 in [Phi2::Linear(1.0), Phi2::Power(3.0), Phi2::Saturating] {
        let p = SemilinearProblem { annulus: &an, outer: &zero, inner: &zero, phi1: &one, phi2 };
        let sol = semilinear_solve(&p, &coarse(), 1e-12, 10).unwrap();
        assert!(sol.field.values().iter().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn linear_problem_converges_from_either_end_of_the_bracket() {
    let an = classical();
    let one = Constant(1.0);
    let p = SemilinearProblem { annulus: &an, outer: &one, inner: &one, phi1: &one, phi2: Phi2::Linear(1.0) };
    let op = SemilinearOperator::new(&p, &coarse()).unwrap();
    let (c1, c2) = op.bracket();
    assert!(c1 < c2 && c2 <= 1.0 + 1e-12);
    let a = op.solve(&Initial::Poisson, 1.0, 1e-7, 200).unwrap();
    let b = op.solve(&Initial::Constant(c1), 1.0, 1e-7, 200).unwrap();
    assert!(a.residual < 1e-5 && b.residual < 1e-5);
    for rec in a.history.iter().chain(&b.history) {
        assert!(rec.min >= c1 - 1e-12 && rec.max <= c2 + 1e-12);
    }
    let gap = a.field.values().iter().zip(b.field.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-5, "{gap}");
    // The solution sits strictly below the harmonic one.
    assert!(a.field.values().iter().zip(op.poisson()).all(|(u, h)| u < h));
}

#[test]
fn fixed_point_map_is_antitone() {
    let an = classical();
    let one = Constant(1.0);
    let f = |x: &[f64]| 1.0 + 0.5 * x[2];
    let p = SemilinearProblem { annulus: &an, outer: &f, inner: &f, phi1: &one, phi2: Phi2::Power(2.0) };
    let op = SemilinearOperator::new(&p, &coarse()).unwrap();
    let (c1, c2) = op.bracket();
    let mut r = rng(50);
    for _ in 0..10 {
        let u: Vec<f64> = (0..op.grid().len()).map(|_| r.random_range(c1..c2)).collect();
        let v: Vec<f64> = u.iter().map(|t| t + r.random_range(0.0..(c2 - t))).collect();
        let (tu, tv) = (op.apply(&u), op.apply(&v));
        assert!(tu.iter().zip(&tv).all(|(a, b)| *b <= *a + 1e-14));
        assert!(tu.iter().chain(&tv).all(|t| *t >= c1 - 1e-12 && *t <= c2 + 1e-12));
    }
}

#[test]
fn solutions_are_monotone_in_the_boundary_data() {
    let an = classical();
    let one = Constant(1.0);
    let hi = |x: &[f64]| 1.0 + 0.4 * x[0] * x[0];
    let lo = |x: &[f64]| 0.8 + 0.4 * x[0] * x[0] - 0.1 * x[1].abs();
    let solve = |f: &dyn ScalarField| {
        let p = SemilinearProblem { annulus: &an, outer: f, inner: f, phi1: &one, phi2: Phi2::Saturating };
        semilinear_solve(&p, &coarse(), 1e-9, 200).unwrap()
    };
    let (u, v) = (solve(&hi), solve(&lo));
    assert!(u.field.values().iter().zip(v.field.values()).all(|(a, b)| *b <= *a + 1e-5));
}

#[test]
fn bracket_violations_and_bad_inputs_are_reported() {
    let an = classical();
    let one = Constant(1.0);
    let p = SemilinearProblem { annulus: &an, outer: &one, inner: &one, phi1: &one, phi2: Phi2::Linear(1.0) };
    let op = SemilinearOperator::new(&p, &coarse()).unwrap();
    assert!(matches!(op.solve(&Initial::Constant(2.0), 1.0, 1e-8, 10), Err(Error::BracketViolation { .. })));
    assert!(matches!(op.solve(&Initial::Poisson, 1.0, 1e-14, 2), Err(Error::NoConvergence { .. })));
    assert!(op.solve(&Initial::Values(vec![0.5; 3]), 1.0, 1e-8, 10).is_err());
    assert!(op.solve(&Initial::Poisson, 0.0, 1e-8, 10).is_err());
    let mut cfg = coarse();
    cfg.theta = 1.5;
    assert!(SemilinearOperator::new(&p, &cfg).is_err());
}

#[test]
fn comparison_principle_examples() {
    let an = classical();
    let one = Constant(1.0);
    let phi2 = Phi2::Linear(1.0);
    let solve = |f: &dyn ScalarField| {
        let p = SemilinearProblem { annulus: &an, outer: f, inner: f, phi1: &one, phi2 };
        semilinear_solve(&p, &coarse(), 1e-10, 200).unwrap()
    };
    let f = Constant(1.0);
    let u = solve(&f);
    let cfg = ComparisonConfig::new(&an, 6).unwrap();
    let pts = samples(3, 40, 51);

    let same = comparison_check(&an, &u, &u, &one, phi2, &pts, &cfg).unwrap();
    assert_eq!(same.verdict, Verdict::Ordered);
    assert_eq!(same.max_excess, 0.0);

    let shifted = |x: &[f64]| u.eval(x) - 1e-3;
    let r = comparison_check(&an, &u, &shifted, &one, phi2, &pts, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Ordered, "{r:?}");

    let g = Constant(0.9);
    let v = solve(&g);
    let r = comparison_check(&an, &u, &v, &one, phi2, &pts, &cfg).unwrap();
    assert_ne!(r.verdict, Verdict::Violated, "{r:?}");
    assert!(r.max_excess <= 1e-5);

    // Swapping the roles breaks the boundary hypothesis.
    let r = comparison_check(&an, &v, &u, &one, phi2, &pts, &cfg).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
}

#[test]
fn poisson_jensen_for_harmonic_functions() {
    for an in [classical(), z2()] {
        let k = axis_multiplicities(&an);
        let h = harmonic_basis(3, &k).remove(0);
        let s = max_coeff(&h);
        let u = |x: &[f64]| 2.0 + h.eval(x) / s;
        let cfg = PoissonJensenConfig::new(&an).unwrap();
        let rep = poisson_jensen_check(&an, &u, &RieszMeasure::Zero, &samples(an.dim(), 10, 52), &cfg).unwrap();
        assert!(rep.max_defect < 1e-5, "{rep:?}");
    }
}

#[test]
fn poisson_jensen_for_a_newton_potential() {
    for an in [classical(), z2()] {
        let sys = an.system();
        let mut x0 = vec![0.0; an.dim()];
        x0[0] = 0.55;
        x0[1] = 0.4;
        let u = |x: &[f64]| -sys.newton(&x0, x).unwrap_or(f64::NEG_INFINITY);
        let cfg = PoissonJensenConfig::new(&an).unwrap();
        let pts = samples(an.dim(), 10, 53);
        let rep = poisson_jensen_check(&an, &u, &RieszMeasure::Atoms(vec![(x0.clone(), 1.0)]), &pts, &cfg).unwrap();
        assert!(rep.max_defect < 1e-5, "{rep:?}");
    }
}

#[test]
fn poisson_jensen_for_the_squared_norm() {
    let an = classical();
    let u = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let density = Constant(6.0);
    let cfg = PoissonJensenConfig::new(&an).unwrap();
    let rep = poisson_jensen_check(&an, &u, &RieszMeasure::Density(&density), &samples(3, 5, 54), &cfg).unwrap();
    assert!(rep.max_defect < 1e-3, "{rep:?}");
    // A wrong density is detected.
    let half = Constant(3.0);
    let bad = poisson_jensen_check(&an, &u, &RieszMeasure::Density(&half), &samples(3, 2, 54), &cfg).unwrap();
    assert!(bad.max_defect > 1e-2);
    assert!(poisson_jensen_check(&an, &u, &RieszMeasure::Atoms(vec![(vec![0.0, 0.0, 0.2], 1.0)]), &samples(3, 1, 1), &cfg).is_err());

    // Z_2^2: 2(d + 2 gamma) = 12.
    let an = z2();
    let density = Constant(12.0);
    let cfg = PoissonJensenConfig::new(&an).unwrap();
    let rep = poisson_jensen_check(&an, &u, &RieszMeasure::Density(&density), &samples(2, 4, 55), &cfg).unwrap();
    assert!(rep.max_defect < 1e-3, "{rep:?}");
}
