//! Complex log-gamma, digamma and trigamma.
//!
//! The argument is shifted up by the recurrence until `|w| >= 15` and `w`
//! is either in the right half-plane or at least 7 away from the real axis;
//! there the Stirling series is accurate (the neglected reflection terms are
//! of order `exp(-2π|Im w|)`). Summing the principal logarithms of the
//! shifted factors keeps `ln_gamma` on the branch that is real on the
//! positive axis and continuous off the negative axis.

use std::f64::consts::PI;

use crate::types::C64;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const SHIFT_TARGET: f64 = 15.0;
const IMAG_CLEARANCE: f64 = 7.0;

/// B_{2k} for k = 1..=10.
const BERNOULLI: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

fn is_pole(w: C64) -> bool {
    w.im == 0.0 && w.re <= 0.0 && w.re == w.re.round()
}

fn pole_value() -> C64 {
    C64::new(f64::INFINITY, 0.0)
}

/// Number of unit shifts needed before the Stirling series is accurate.
fn shifts(w: C64) -> usize {
    let mut n = 0usize;
    let mut x = w;
    while (x.re < 0.0 && x.im.abs() < IMAG_CLEARANCE) || x.norm() < SHIFT_TARGET {
        x += 1.0;
        n += 1;
    }
    n
}

/// `ln Gamma(w)`; `+inf` at the poles.
pub fn ln_gamma(w: C64) -> C64 {
    if is_pole(w) {
        return pole_value();
    }
    let n = shifts(w);
    let mut acc = C64::new(0.0, 0.0);
    let mut x = w;
    for _ in 0..n {
        acc += x.ln();
        x += 1.0;
    }
    let inv = x.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut pow = inv;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = (k + 1) as f64;
        series += pow * (b / (2.0 * k * (2.0 * k - 1.0)));
        pow *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series - acc
}

/// Digamma `Gamma'/Gamma`; `+inf` at the poles.
pub fn digamma(w: C64) -> C64 {
    if is_pole(w) {
        return pole_value();
    }
    let n = shifts(w);
    let mut acc = C64::new(0.0, 0.0);
    let mut x = w;
    for _ in 0..n {
        acc += x.inv();
        x += 1.0;
    }
    let inv = x.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut pow = inv2;
    for (k, b) in BERNOULLI.iter().enumerate() {
        let k = (k + 1) as f64;
        series += pow * (b / (2.0 * k));
        pow *= inv2;
    }
    x.ln() - inv * 0.5 - series - acc
}

/// Trigamma, the derivative of digamma; `+inf` at the poles.
pub fn trigamma(w: C64) -> C64 {
    if is_pole(w) {
        return pole_value();
    }
    let n = shifts(w);
    let mut acc = C64::new(0.0, 0.0);
    let mut x = w;
    for _ in 0..n {
        acc += (x * x).inv();
        x += 1.0;
    }
    let inv = x.inv();
    let inv2 = inv * inv;
    let mut series = C64::new(0.0, 0.0);
    let mut pow = inv2 * inv;
    for b in BERNOULLI.iter() {
        series += pow * *b;
        pow *= inv2;
    }
    inv + inv2 * 0.5 + series + acc
}

/// `ln Gamma(x)` for real `x > 0`.
pub fn ln_gamma_real(x: f64) -> f64 {
    ln_gamma(C64::new(x, 0.0)).re
}

/// `pi cot(pi w)`, used by the reflection checks in tests and by callers
/// that need the digamma of a reflected argument.
pub fn pi_cot_pi(w: C64) -> C64 {
    let a = w * PI;
    a.cos() / a.sin() * PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn factorials() {
        let mut f = 1.0f64;
        for n in 1..30 {
            f *= n as f64;
            assert_relative_eq!(ln_gamma(c(n as f64 + 1.0, 0.0)).re, f.ln(), max_relative = 1e-14);
        }
    }

    #[test]
    fn half_integer() {
        assert_relative_eq!(ln_gamma(c(0.5, 0.0)).re, 0.5 * PI.ln(), max_relative = 1e-14);
    }

    #[test]
    fn against_statrs_on_axis() {
        for i in 1..400 {
            let x = 0.05 * i as f64;
            assert_relative_eq!(ln_gamma_real(x), statrs::function::gamma::ln_gamma(x), epsilon = 1e-13, max_relative = 1e-13);
            assert_relative_eq!(digamma(c(x, 0.0)).re, statrs::function::gamma::digamma(x), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn recurrence_off_axis() {
        for &(re, im) in &[(0.3, 2.0), (-2.7, 0.4), (12.0, -30.0), (-40.5, 3.0), (-40.5, 7.5), (-1e6, 1e5)] {
            let w = c(re, im);
            let lhs = ln_gamma(w + 1.0) - ln_gamma(w);
            let d = lhs - w.ln();
            // equal modulo 2 pi i
            let k = (d.im / (2.0 * PI)).round();
            let scale = ln_gamma(w).norm().max(1.0);
            assert!((d - c(0.0, 2.0 * PI * k)).norm() < 1e-14 * scale + 1e-12, "{w} {d}");
            assert!((digamma(w + 1.0) - digamma(w) - w.inv()).norm() < 1e-12);
            assert!((trigamma(w) - trigamma(w + 1.0) - (w * w).inv()).norm() < 1e-12);
        }
    }

    #[test]
    fn reflection() {
        // Gamma(w) Gamma(1-w) = pi / sin(pi w)
        for &(re, im) in &[(0.25, 0.5), (0.7, -1.3), (0.1, 4.0)] {
            let w = c(re, im);
            let lhs = (ln_gamma(w) + ln_gamma(c(1.0, 0.0) - w)).exp();
            let rhs = c(PI, 0.0) / (w * PI).sin();
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
            let dl = digamma(c(1.0, 0.0) - w) - digamma(w);
            assert!((dl - pi_cot_pi(w)).norm() < 1e-11);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-5;
        for &(re, im) in &[(3.0, 1.0), (0.6, -2.0), (25.0, 25.0)] {
            let w = c(re, im);
            let fd = (ln_gamma(w + h) - ln_gamma(w - h)) / (2.0 * h);
            assert!((fd - digamma(w)).norm() < 1e-8 * digamma(w).norm().max(1.0));
            let fd2 = (digamma(w + h) - digamma(w - h)) / (2.0 * h);
            assert!((fd2 - trigamma(w)).norm() < 1e-7 * trigamma(w).norm().max(1.0));
        }
    }

    #[test]
    fn schwarz_symmetry() {
        let w = c(2.3, 7.1);
        assert!((ln_gamma(w.conj()) - ln_gamma(w).conj()).norm() < 1e-14 * ln_gamma(w).norm());
    }

    #[test]
    fn poles_are_infinite() {
        assert!(ln_gamma(c(0.0, 0.0)).re.is_infinite());
        assert!(digamma(c(-3.0, 0.0)).re.is_infinite());
        assert!(trigamma(c(-1.0, 0.0)).re.is_infinite());
    }

    #[test]
    fn euler_constant() {
        assert_relative_eq!(digamma(c(1.0, 0.0)).re, -0.577_215_664_901_532_9, max_relative = 1e-14);
        assert_relative_eq!(trigamma(c(1.0, 0.0)).re, PI * PI / 6.0, max_relative = 1e-14);
    }
}
