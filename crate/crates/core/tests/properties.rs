//! Property suites for the invariants of each module.

use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use proptest::prelude::*;

use mellin_core::asymptotics::{E_asymptotic, K_asymptotic};
use mellin_core::catalog::FunctionKind;
use mellin_core::saddle::{solve, solve_real, RegionKind, SolveOptions};
use mellin_core::transforms::{eval_K, ContourSpec};
use mellin_core::verification::verify_moments;
use mellin_core::{build, log_surface_pow, AdmissibleFunction, FunctionSpec, LogSurfacePoint, Tolerances, C64};

fn gamma() -> AdmissibleFunction {
    build(&FunctionSpec::gamma_shift(0.0)).unwrap()
}

fn loglog() -> AdmissibleFunction {
    build(&FunctionSpec::iterated_log(1.0, 1.0, 1, None)).unwrap()
}

fn catalog() -> Vec<AdmissibleFunction> {
    let g1 = FunctionSpec::gamma_shift(1.0);
    let ll = FunctionSpec::iterated_log(1.0, 1.0, 1, None);
    vec![
        gamma(),
        build(&g1).unwrap(),
        loglog(),
        build(&FunctionSpec::new(FunctionKind::Product).child(g1.clone()).child(ll)).unwrap(),
        build(&FunctionSpec::new(FunctionKind::Power).param("a", 2.0).child(g1)).unwrap(),
        build(&FunctionSpec::theorem3("power", 1.0, 1.0)).unwrap(),
    ]
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn sector_point() -> impl Strategy<Value = C64> {
    (0.0f64..4.6, -1.2f64..1.2).prop_map(|(lr, th)| C64::from_polar(lr.exp(), th))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn power_law_on_the_surface(lr in -5.0f64..5.0, psi in -20.0f64..20.0,
                                a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0) {
        let z = LogSurfacePoint::new(lr, psi).unwrap();
        let (s1, s2) = (C64::new(a, b), C64::new(c, d));
        let lhs = log_surface_pow(z, s1 + s2).unwrap();
        let rhs = log_surface_pow(z, s1).unwrap() * log_surface_pow(z, s2).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn sheets_differ_unless_exponent_is_integer(lr in -3.0f64..3.0, psi in -3.0f64..3.0, n in -6i32..6, frac in 0.05f64..0.95) {
        let z = LogSurfacePoint::new(lr, psi).unwrap();
        let w = LogSurfacePoint::new(lr, psi + TAU).unwrap();
        let k = C64::new(n as f64, 0.0);
        prop_assert!(rel(log_surface_pow(w, k).unwrap(), log_surface_pow(z, k).unwrap()) < 1e-12);
        let s = C64::new(n as f64 + frac, 0.0);
        prop_assert!(rel(log_surface_pow(w, s).unwrap(), log_surface_pow(z, s).unwrap()) > 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn schwarz_symmetry(s in sector_point()) {
        for f in catalog() {
            let a = f.log_gamma(s.conj());
            let b = f.log_gamma(s).conj();
            prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "{}: {a} vs {b}", f.label());
        }
    }

    #[test]
    fn derivative_matches_central_difference(s in sector_point()) {
        for f in catalog() {
            let h = 1e-5 * s.norm();
            let fd = (f.log_gamma(s + h) - f.log_gamma(s - h)) / (2.0 * h);
            let d = f.dlog_gamma(s);
            prop_assert!(rel(fd, d) < 1e-6, "{}: {fd} vs {d}", f.label());
        }
    }

    #[test]
    fn real_axis_is_real(sigma in 0.01f64..1000.0) {
        for f in catalog() {
            let x = sigma - f.c_gamma() * 0.99;
            if x <= 0.0 && f.label().starts_with("gamma_shift(c=0)") {
                continue;
            }
            let j = f.jet(C64::new(x, 0.0));
            prop_assert!(j.v.im.abs() <= 1e-10 * j.v.re.abs().max(1.0), "{} at {x}: {:?}", f.label(), j);
            prop_assert!(j.d1.im.abs() <= 1e-10 * j.d1.re.abs().max(1.0));
        }
    }

    #[test]
    fn product_is_sum_of_logs(s in sector_point()) {
        let g1 = FunctionSpec::gamma_shift(1.0);
        let ll = FunctionSpec::iterated_log(1.0, 1.0, 1, None);
        let p = build(&FunctionSpec::new(FunctionKind::Product).child(g1.clone()).child(ll.clone())).unwrap();
        let sum = build(&g1).unwrap().log_gamma(s) + build(&ll).unwrap().log_gamma(s);
        prop_assert_eq!(p.log_gamma(s), sum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn solver_residual_and_sign(lr in 0.5f64..40.0, psi in -2.5f64..2.5) {
        for f in [gamma(), loglog()] {
            let z = LogSurfacePoint::new(lr.ln() + 1.0, psi).unwrap();
            let Ok((sol, _)) = solve(&f, z, &SolveOptions::default()) else { continue };
            prop_assert!(sol.residual < 1e-10 * (1.0 + z.log().norm()), "residual {}", sol.residual);
            prop_assert!(sol.theta_z.abs() < f.alpha0());
            if psi != 0.0 {
                prop_assert_eq!(sol.theta_z.signum(), psi.signum());
            }
        }
    }

    #[test]
    fn solver_is_monotone_on_the_ray(a in 0.5f64..20.0, gap in 0.01f64..5.0) {
        for f in [gamma(), loglog()] {
            let (Ok(x), Ok(y)) = (solve_real(&f, a), solve_real(&f, a + gap)) else { continue };
            prop_assert!(x < y);
        }
    }
}

/// Newton on `Φ(e^σ) = w` in `σ = log s`, from an arbitrary start.
fn cold_newton(f: &AdmissibleFunction, w: C64, mut sigma: C64) -> Option<C64> {
    for _ in 0..100 {
        let (p, dp) = f.phi_log(sigma).ok()?;
        let step = (p - w) / dp;
        if !(step.re.is_finite() && step.im.is_finite()) {
            return None;
        }
        sigma -= step;
        if sigma.im.abs() > PI || sigma.re.abs() > 700.0 {
            return None;
        }
        if step.norm() < 1e-14 * (1.0 + sigma.norm()) {
            return Some(sigma);
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn saddle_is_unique_in_the_sector(lr in 1.0f64..4.0, psi in -1.5f64..1.5, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        for f in [gamma(), loglog()] {
            let z = LogSurfacePoint::new(lr, psi).unwrap();
            // No saddle inside the sector: nothing to be unique.
            let Ok((sol, _)) = solve(&f, z, &SolveOptions::default()) else { continue };
            let limit = f.alpha0() - 0.1;
            for _ in 0..50 {
                let start = C64::new(rng.gen_range(-1.0..8.0), rng.gen_range(-limit..limit));
                if let Some(s) = cold_newton(&f, z.log(), start) {
                    if s.im.abs() < limit && s.re.exp() > f.rho0() {
                        prop_assert!((s - sol.log_s()).norm() < 1e-8, "{}: second root {s} vs {}", f.label(), sol.log_s());
                    }
                }
            }
        }
    }

    #[test]
    fn routes_agree_on_the_ray(t in 1.0f64..20.0, which in 0usize..3) {
        let f = [gamma(), loglog(), build(&FunctionSpec::gamma_shift(1.0)).unwrap()][which].clone();
        let z = LogSurfacePoint::real(t).unwrap();
        let v = eval_K(&f, z, &ContourSpec::vertical_through_saddle(&f, z)).unwrap();
        let l = eval_K(&f, z, &ContourSpec::l_alpha_through_saddle(&f, z, 2.0)).unwrap();
        let (a, b) = (v.scaled_value(), l.scaled_value());
        prop_assert!((a - b).norm() <= 1e-7 * b.norm(), "{}: {a} vs {b}", f.label());
        prop_assert!((a - b).norm() <= 3.0 * (v.abs_error * v.log_scale.exp() + l.abs_error * l.log_scale.exp()) + 1e-14 * b.norm());
    }

    #[test]
    fn vertical_route_is_independent_of_c(t in 0.5f64..20.0) {
        let f = gamma();
        let z = LogSurfacePoint::real(t).unwrap();
        let vals: Vec<C64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&c| eval_K(&f, z, &ContourSpec::vertical(c)).unwrap().scaled_value())
            .collect();
        for v in &vals[1..] {
            prop_assert!(rel(*v, vals[0]) < 1e-8, "{v} vs {}", vals[0]);
        }
        prop_assert!(rel(vals[0], C64::new((-t).exp(), 0.0)) < 1e-8);
    }

    #[test]
    fn asymptotic_duality(lr in 1.0f64..6.0, psi in -1.3f64..1.3) {
        for f in [gamma(), loglog()] {
            let z = LogSurfacePoint::new(lr, psi).unwrap();
            let (Ok(k), Ok(e)) = (K_asymptotic(&f, z), E_asymptotic(&f, z)) else { continue };
            // Outside the E sector the formula is replaced by its bound.
            if !matches!(e.region.kind, RegionKind::Inside { .. }) {
                continue;
            }
            let s = k.saddle.unwrap().s_z;
            let want = s / f.eps(s);
            let got = (k.log_value() + e.log_value()).exp();
            // ±sε cancel exactly in the formulas but each is stored rounded.
            let exponent = (s * f.eps(s)).norm();
            prop_assert!(rel(got, want) < 1e-12 + 4.0 * f64::EPSILON * exponent, "{got} vs {want}");
        }
    }
}

#[test]
fn reports_are_byte_identical() {
    let f = gamma();
    let a = verify_moments(&f, 6).unwrap().to_json();
    let b = verify_moments(&f, 6).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn error_estimates_are_honest() {
    // K = e^{-t} for Γ; the reported error should bound the real one.
    let f = gamma();
    let mut honest = 0;
    let mut total = 0;
    for i in 0..40 {
        let t = 0.3 * 1.12f64.powi(i);
        let z = LogSurfacePoint::real(t).unwrap();
        for contour in [ContourSpec::vertical(1.0), ContourSpec::l_alpha(2.0, 1.0)] {
            let tol = Tolerances::quadrature().with_rel_tol(1e-6);
            let Ok(r) = eval_K(&f, z, &contour.with_tolerances(tol)) else { continue };
            let err = (r.scaled_value() - (-t).exp()).norm();
            total += 1;
            if err <= 3.0 * r.abs_error * r.log_scale.exp() + 4.0 * f64::EPSILON * (-t).exp() {
                honest += 1;
            }
        }
    }
    assert!(total >= 60);
    assert!(honest as f64 >= 0.95 * total as f64, "{honest}/{total}");
}

#[test]
fn prototype_matches_exp_on_both_routes() {
    let f = gamma();
    for t in [0.5, 1.0, 2.0, 5.0] {
        let z = LogSurfacePoint::real(t).unwrap();
        let v = eval_K(&f, z, &ContourSpec::vertical(1.0)).unwrap().scaled_value();
        assert_relative_eq!(v.re, (-t).exp(), max_relative = 1e-8);
    }
}
