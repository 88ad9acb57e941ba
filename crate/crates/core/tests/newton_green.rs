mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use common::{classical, norm, rng, scale, shell_point, shell_point_clear, unit, z2, RHO};
use dunkl_annulus::green::{closed_form_coefficient, zonal_coefficient, GreenRoute, PotentialConfig};
use dunkl_annulus::kernels::Annulus;
use dunkl_annulus::quadrature::annulus_rule;
use dunkl_annulus::{Error, LaplacianStencil};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::Rng;

fn both() -> [Annulus; 2] {
    [classical(), z2()]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// A pair in the annulus whose orbit distance exceeds `sep`.
fn separated_pair(an: &Annulus, r: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64, sep: f64) -> (Vec<f64>, Vec<f64>) {
    loop {
        let x = shell_point(r, an.dim(), lo, hi);
        let y = shell_point(r, an.dim(), lo, hi);
        if an.system().roots().orbit_distance(&x, &y) > sep {
            return (x, y);
        }
    }
}

#[test]
fn newton_at_the_origin() {
    let mut r = rng(20);
    for an in both() {
        let sys = an.system();
        let zero = vec![0.0; an.dim()];
        for _ in 0..10 {
            let x = shell_point(&mut r, an.dim(), 0.2, 1.5);
            let closed = norm(&x).powf(-2.0 * sys.lambda()) / (2.0 * sys.d_k() * sys.lambda());
            assert_relative_eq!(sys.newton(&x, &zero).unwrap(), closed, max_relative = 1e-10);
            assert_relative_eq!(sys.newton_at_origin(&x), closed, max_relative = 1e-14);
        }
    }
}

#[test]
fn classical_newton_is_the_coulomb_kernel() {
    let c = classical();
    let mut r = rng(21);
    for _ in 0..50 {
        let x = shell_point(&mut r, 3, 0.0, 1.0);
        let y = shell_point(&mut r, 3, 0.0, 1.0);
        let exact = 1.0 / (4.0 * PI * dist(&x, &y));
        assert_relative_eq!(c.system().newton(&x, &y).unwrap(), exact, max_relative = 1e-9);
    }
}

#[test]
fn newton_is_symmetric_and_signals_the_pole() {
    let mut r = rng(22);
    for an in both() {
        let sys = an.system();
        for _ in 0..100 {
            let (x, y) = separated_pair(&an, &mut r, 0.1, 1.0, 0.02);
            let a = sys.newton(&x, &y).unwrap();
            let b = sys.newton(&y, &x).unwrap();
            assert!(a > 0.0);
            assert!((a - b).abs() < 1e-8 * a.max(1.0), "{x:?} {y:?}: {a} {b}");
        }
        let x = shell_point(&mut r, an.dim(), 0.6, 0.9);
        for g in sys.roots().group_elements() {
            assert!(matches!(sys.newton(&x, &g.apply(&x)), Err(Error::Pole { .. })));
        }
    }
}

#[test]
fn newton_series_examples() {
    let c = classical();
    let v = c.newton_series(&[0.9, 0.0, 0.0], &[0.3, 0.0, 0.0]).unwrap();
    assert_relative_eq!(v.value, 1.0 / (4.0 * PI * 0.6), max_relative = 1e-12);
    for an in both() {
        let sys = an.system();
        let x = scale(&unit(&mut rng(23), an.dim()), 0.7);
        let zero = vec![0.0; an.dim()];
        let v = an.newton_series(&x, &zero).unwrap();
        assert_eq!(v.degree, 0);
        assert_relative_eq!(v.value, sys.newton_at_origin(&x), max_relative = 1e-14);
        assert!(an.newton_series(&zero, &x).is_err());
        assert!(an.newton_series(&x, &x).is_err());
    }
}

#[test]
fn newton_series_matches_integral_form() {
    let mut r = rng(24);
    for an in both() {
        let sys = an.system();
        let mut n = 0;
        while n < 50 {
            let x = shell_point(&mut r, an.dim(), 0.3, 1.0);
            let y = shell_point(&mut r, an.dim(), 0.0, 0.9 * norm(&x));
            let s = an.newton_series(&x, &y).unwrap();
            let i = sys.newton(&x, &y).unwrap();
            assert!((s.value - i).abs() < 1e-7_f64.max(s.tail_bound), "{x:?} {y:?}: {} {i}", s.value);
            n += 1;
        }
    }
}

#[test]
fn kelvin_transform_basics() {
    let mut r = rng(25);
    for an in both() {
        let sys = an.system();
        let lam = sys.lambda();
        let one = sys.kelvin(|_: &[f64]| 1.0);
        let f = |p: &[f64]| (p[0] - 0.3 * p[1]).sin() + p.iter().map(|v| v * v).sum::<f64>();
        let twice = sys.kelvin(sys.kelvin(f));
        for _ in 0..20 {
            let x = shell_point(&mut r, an.dim(), 0.2, 2.0);
            assert_relative_eq!(one.try_eval(&x).unwrap(), norm(&x).powf(-2.0 * lam), max_relative = 1e-14);
            assert!((twice.try_eval(&x).unwrap() - f(&x)).abs() < 1e-10 * f(&x).abs().max(1.0));
        }
        assert!(one.try_eval(&vec![0.0; an.dim()]).is_err());
    }
}

#[test]
fn kelvin_transform_preserves_harmonicity() {
    let mut r = rng(26);
    let st = LaplacianStencil::default().with_richardson();
    for an in both() {
        let sys = an.system();
        for n in 1..=4 {
            let xi = unit(&mut r, an.dim());
            let k = sys.kelvin(|p: &[f64]| sys.zonal(n, p, &xi).unwrap());
            for _ in 0..4 {
                let x = shell_point_clear(&mut r, an.dim(), 0.6, 0.95, 0.1);
                let lap = sys.dunkl_laplacian(&k, &x, &st).unwrap();
                assert!(lap.abs() < 1e-4, "n={n} {x:?}: {lap}");
            }
        }
    }
}

#[test]
fn closed_series_coefficients_match_exactly() {
    // Three dimensions, k = 0: 2 lambda = 1.
    let rho = ratio(1, 2);
    for (rs, rl) in [((3, 5), (4, 5)), ((11, 20), (19, 20)), ((7, 10), (71, 100))] {
        let r_small = ratio(rs.0, rs.1);
        let r_large = ratio(rl.0, rl.1);
        for n in 0..=10 {
            let a = closed_form_coefficient(n, 1, rho.clone(), r_small.clone(), r_large.clone());
            let b = zonal_coefficient(n, 1, rho.clone(), r_small.clone(), r_large.clone());
            assert_eq!(a, b, "n={n}");
        }
    }
}

#[test]
fn closed_series_route_agrees_with_zonal_route() {
    let c = classical();
    let mut r = rng(27);
    for _ in 0..20 {
        let (x, y) = separated_pair(&c, &mut r, RHO + 0.05, 0.95, 0.05);
        let (x, y) = if norm(&y) < norm(&x) { (x, y) } else { (y, x) };
        if norm(&y) > 0.9 * norm(&x) {
            continue;
        }
        let a = c.green(&x, &y, GreenRoute::Closed).unwrap().value;
        let b = c.green(&x, &y, GreenRoute::Series).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }
    assert!(c.green(&[0.0, 0.0, 0.6], &[0.0, 0.7, 0.0], GreenRoute::Closed).is_err());
}

#[test]
fn green_is_symmetric_invariant_and_positive() {
    let mut r = rng(28);
    for an in both() {
        let group = an.system().roots().group_elements();
        for _ in 0..200 {
            let (x, y) = separated_pair(&an, &mut r, RHO + 0.01, 0.99, 0.01);
            let g = an.green(&x, &y, GreenRoute::Series).unwrap().value;
            let h = an.green(&y, &x, GreenRoute::Series).unwrap().value;
            assert!(g > 0.0, "{x:?} {y:?}: {g}");
            assert!((g - h).abs() < 1e-8, "{g} {h}");
            let el = &group[r.random_range(0..group.len())];
            let gw = an.green(&el.apply(&x), &el.apply(&y), GreenRoute::Series).unwrap().value;
            assert!((g - gw).abs() < 1e-8, "{g} {gw}");
        }
    }
}

/// Largest `G(x, .)` on the sphere of radius 0.01 around `x`.
fn near_pole_scale(an: &Annulus, x: &[f64], r: &mut rand_chacha::ChaCha8Rng) -> f64 {
    (0..20)
        .map(|_| {
            let u = unit(r, an.dim());
            let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + 0.01 * b).collect();
            an.green(x, &y, GreenRoute::Series).unwrap().value
        })
        .fold(0.0, f64::max)
}

#[test]
fn green_vanishes_linearly_at_the_boundary() {
    let mut r = rng(29);
    for an in both() {
        for _ in 0..5 {
            let x = shell_point(&mut r, an.dim(), 0.7, 0.8);
            let g = |y: &[f64]| an.green(&x, y, GreenRoute::Series).unwrap().value;
            for _ in 0..10 {
                let dir = unit(&mut r, an.dim());
                for (edge, inward) in [(1.0, -1.0), (RHO, 1.0)] {
                    let at = |t: f64| g(&scale(&dir, edge + inward * t));
                    let (g2, g3, g6) = (at(1e-2), at(1e-3), at(1e-6));
                    assert!(g2 > 0.0 && (g3 / g2 - 0.1).abs() < 0.02, "{g2} {g3}");
                    assert!(g6 < 2e-4 * g2, "{g6} {g2}");
                }
            }
        }
    }
}

#[test]
fn classical_green_is_small_near_the_boundary() {
    let c = classical();
    let mut r = rng(33);
    for _ in 0..5 {
        let x = shell_point(&mut r, 3, 0.7, 0.8);
        let interior = near_pole_scale(&c, &x, &mut r);
        for n in 0..40 {
            let y = scale(&unit(&mut r, 3), if n % 2 == 0 { 0.99 } else { RHO + 0.01 });
            let v = c.green(&x, &y, GreenRoute::Series).unwrap().value;
            assert!(v < 1e-2 * interior, "{x:?} {y:?}: {v} vs {interior}");
        }
    }
}

#[test]
fn green_is_harmonic_off_the_pole() {
    let mut r = rng(30);
    let st = LaplacianStencil::default().with_richardson();
    for an in both() {
        let sys = an.system();
        for _ in 0..6 {
            let x = shell_point(&mut r, an.dim(), RHO + 0.1, 0.9);
            let g = |y: &[f64]| an.green(&x, y, GreenRoute::Series).map(|v| v.value).unwrap_or(f64::NAN);
            let mut done = 0;
            while done < 3 {
                let y = shell_point_clear(&mut r, an.dim(), RHO + 0.1, 0.9, 0.1);
                if sys.roots().orbit_distance(&x, &y) <= 0.1 {
                    continue;
                }
                let lap = sys.dunkl_laplacian(&g, &y, &st).unwrap();
                assert!(lap.abs() < 1e-4, "{x:?} {y:?}: {lap}");
                done += 1;
            }
        }
    }
}

#[test]
fn routes_reject_points_outside_the_annulus() {
    for an in both() {
        let mut inside = vec![0.0; an.dim()];
        inside[0] = 0.7;
        let mut outside = inside.clone();
        outside[0] = 0.3;
        for route in [GreenRoute::Definition, GreenRoute::Series, GreenRoute::Closed] {
            assert!(an.green(&inside, &outside, route).is_err());
            assert!(matches!(an.green(&inside, &inside, route), Err(Error::Pole { .. }) | Err(Error::OutOfRange(_))));
        }
    }
}

#[test]
fn eta_is_monotone_small_and_below_the_shell_bound() {
    let c = classical();
    let mut r = rng(31);
    for _ in 0..5 {
        let x = shell_point(&mut r, 3, RHO + 0.15, 0.85);
        let mut prev = f64::INFINITY;
        for rad in [0.1, 0.05, 0.02, 0.01] {
            let e = c.eta(&x, rad, 8, 8).unwrap();
            assert!(e >= 0.0 && e <= prev);
            assert!(e <= c.eta_shell_bound(&x, rad) * (1.0 + 1e-12));
            prev = e;
        }
        assert!(prev < 1e-3);
    }
    let an = z2();
    let x = [0.45, 0.5];
    let a = an.eta(&x, 0.05, 8, 16).unwrap();
    let b = an.eta(&x, 0.1, 8, 16).unwrap();
    assert!(0.0 < a && a <= b && b <= an.eta_shell_bound(&x, 0.1));
    assert!(an.eta(&x, 0.6, 8, 8).is_err());
}

#[test]
fn green_potential_of_zero_and_of_a_positive_density() {
    let cfg = PotentialConfig::default();
    for (an, rule) in [(classical(), annulus_rule(3, RHO, 8, 10).unwrap()), (z2(), annulus_rule(2, RHO, 12, 48).unwrap())] {
        let x = scale(&unit(&mut rng(32), an.dim()), 0.72);
        let zero = an.green_potential(&|_: &[f64]| 0.0, &x, &rule, &cfg).unwrap();
        assert_eq!(zero.value, 0.0);
        let f = |y: &[f64]| 1.0 + y[0] * y[0];
        let p = an.green_potential(&f, &x, &rule, &cfg).unwrap();
        assert!(p.value > 0.0 && p.bracket >= 0.0, "{p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn closed_series_coefficients_match_for_rational_radii(n in 0usize..=10, a in 51i64..99, b in 51i64..99) {
        let (s, l) = if a < b { (a, b) } else { (b, a + 1) };
        let rho = ratio(1, 2);
        let x = closed_form_coefficient(n, 1, rho.clone(), ratio(s, 100), ratio(l, 100));
        let y = zonal_coefficient(n, 1, rho, ratio(s, 100), ratio(l, 100));
        prop_assert_eq!(x, y);
    }
}
