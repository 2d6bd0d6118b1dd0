//! Transforms checked against closed forms computed independently here.

use std::f64::consts::{FRAC_PI_4, PI};

use mellin_core::catalog::build_theorem3;
use mellin_core::catalog::{EllKind, SlowlyVaryingEll};
use mellin_core::transforms::{eval_E_series, eval_K, eval_abel_plana_rhs, moment, ContourSpec};
use mellin_core::{build, FunctionSpec, LogSurfacePoint, C64};

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn k_of_gamma_off_the_ray() {
    // (1/2πi)∫ z^{-s} Γ(s) ds = e^{-z} for |arg z| < π/2
    let f = build(&FunctionSpec::gamma_shift(0.0)).unwrap();
    let z = LogSurfacePoint::from_polar(5.0, FRAC_PI_4).unwrap();
    let want = (-z.to_cartesian()).exp();
    for contour in [ContourSpec::vertical(1.0), ContourSpec::l_alpha(2.0, 1.0)] {
        let got = eval_K(&f, z, &contour).unwrap().scaled_value();
        assert!(rel(got, want) < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn shifted_gamma_transforms() {
    // γ = Γ(s+1): K = z e^{-z}, E = (e^z - 1)/z
    let f = build(&FunctionSpec::gamma_shift(1.0)).unwrap();
    for t in [0.5, 3.0, 12.0] {
        let z = LogSurfacePoint::real(t).unwrap();
        let k = eval_K(&f, z, &ContourSpec::vertical(0.5)).unwrap().scaled_value();
        assert!(rel(k, C64::new(t * (-t).exp(), 0.0)) < 1e-8);
        let e = eval_E_series(&f, z).unwrap().e.scaled_value();
        assert!(rel(e, C64::new(t.exp_m1() / t, 0.0)) < 1e-12);
    }
}

#[test]
fn abel_plana_on_the_imaginary_axis() {
    // Γ: z E(z) + 1/Γ(0) = z e^z
    let f = build(&FunctionSpec::gamma_shift(0.0)).unwrap();
    let z = LogSurfacePoint::from_polar(5.0, PI / 2.0).unwrap();
    let zc = z.to_cartesian();
    let want = zc * zc.exp();
    let got = eval_abel_plana_rhs(&f, z, 0.5).unwrap().total.scaled_value();
    assert!(rel(got, want) < 1e-10, "{got} vs {want}");
}

#[test]
fn theorem3_moments_match_direct_log_gamma() {
    // The catalog's quadrature for log γ(n+1) is the independent side.
    let f = build_theorem3(&SlowlyVaryingEll::new(EllKind::Power, 1.0, 1.0)).unwrap();
    for n in 0..=5u32 {
        let m = moment(&f, n).unwrap().scaled_value();
        let want = f.log_gamma(C64::new(n as f64 + 1.0, 0.0)).exp();
        assert!(rel(m, want) < 1e-6, "n={n}: {m} vs {want}");
    }
}

#[test]
fn loglog_series_against_trapezoid_sum() {
    // Far past the peak the terms are a smooth bump many indices wide, so
    // the sum equals a coarse trapezoid rule to all digits.
    let f = build(&FunctionSpec::iterated_log(1.0, 1.0, 1, None)).unwrap();
    let z = LogSurfacePoint::from_polar(20.0, 0.0).unwrap();
    let term = |n: f64| {
        mellin_core::summation::DoubleDouble::from_f64(n)
            .mul_f64(z.log_r)
            .sub(f.log_gamma_dd(n + 1.0).unwrap())
    };
    let mut peak = (f64::NEG_INFINITY, 0.0);
    let mut n = 1.0f64;
    while n < 1e12 {
        let v = term(n).to_f64();
        if v > peak.0 {
            peak = (v, n);
        }
        n *= 1.01;
    }
    let n0 = peak.1.round();
    let reference = term(n0).hi;
    let rd = mellin_core::summation::DoubleDouble::from_f64(reference);
    let h = (n0.sqrt() / 200.0).floor().max(1.0);
    let mut sum = 0.0;
    for dir in [1.0, -1.0] {
        let mut k = if dir > 0.0 { 0.0 } else { -1.0 };
        loop {
            let m = n0 + k * h;
            if m < 0.0 {
                break;
            }
            let v = term(m).sub(rd).to_f64().exp();
            sum += v;
            if v < 1e-30 {
                break;
            }
            k += dir;
        }
    }
    let want = sum * h;
    let s = eval_E_series(&f, z).unwrap().e;
    let got = s.value.re * (s.log_scale - reference).exp();
    assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
}
