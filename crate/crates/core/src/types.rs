//! Points on the Riemann surface of `log z`, tolerances and quadrature results.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MellinError, Result};

pub type C64 = Complex64;

/// Largest real exponent for which `f64::exp` stays finite.
pub const MAX_EXP: f64 = 709.782_712_893_384;

/// `z = exp(log_r + i psi)` with the argument kept unbounded, so that
/// `psi` and `psi + 2 pi` name different points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSurfacePoint {
    pub log_r: f64,
    pub psi: f64,
}

impl LogSurfacePoint {
    pub fn new(log_r: f64, psi: f64) -> Result<Self> {
        if !log_r.is_finite() || !psi.is_finite() {
            return Err(MellinError::InvalidInput(format!(
                "surface point needs finite log_r and psi, got ({log_r}, {psi})"
            )));
        }
        Ok(Self { log_r, psi })
    }

    pub fn from_polar(r: f64, psi: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(MellinError::InvalidInput(format!("modulus must be positive, got {r}")));
        }
        Self::new(r.ln(), psi)
    }

    /// Point on the principal sheet, `psi` in `(-pi, pi]`.
    pub fn from_cartesian(z: C64) -> Result<Self> {
        if z == C64::new(0.0, 0.0) {
            return Err(MellinError::InvalidInput("z = 0 is not on the surface".into()));
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn real(t: f64) -> Result<Self> {
        Self::from_polar(t, 0.0)
    }

    /// `log z = log_r + i psi`.
    pub fn log(&self) -> C64 {
        C64::new(self.log_r, self.psi)
    }

    pub fn modulus(&self) -> f64 {
        self.log_r.exp()
    }

    pub fn to_cartesian(&self) -> C64 {
        let r = self.log_r.exp();
        C64::new(r * self.psi.cos(), r * self.psi.sin())
    }

    pub fn conj(&self) -> Self {
        Self { log_r: self.log_r, psi: -self.psi }
    }
}

/// `z^s = exp(s (log_r + i psi))`, evaluated on the surface without any
/// branch cut. Overflow reports the real part of the exponent so the caller
/// can rescale.
pub fn log_surface_pow(z: LogSurfacePoint, s: C64) -> Result<C64> {
    let w = s * z.log();
    if w.re > MAX_EXP || w.re.is_nan() {
        return Err(MellinError::Overflow { exponent_re: w.re });
    }
    Ok(w.exp())
}

/// Numerical tolerances shared by the root finders and the quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_nodes: usize,
    /// Relative integrand magnitude at which infinite rays are cut off.
    pub truncation_drop: f64,
}

impl Tolerances {
    pub fn quadrature() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-300, max_nodes: 400_000, truncation_drop: 1e-16 }
    }

    pub fn root_finding() -> Self {
        Self { rel_tol: 1e-10, ..Self::quadrature() }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.rel_tol < 1.0
            && self.abs_tol > 0.0
            && self.max_nodes > 0
            && self.truncation_drop > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MellinError::InvalidInput(format!("invalid tolerances {self:?}")))
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::quadrature()
    }
}

/// A computed integral or sum. The represented quantity is
/// `value * exp(log_scale)`; `abs_error` is on the same scale as `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: C64,
    pub abs_error: f64,
    pub nodes: usize,
    pub converged: bool,
    pub log_scale: f64,
}

impl QuadratureResult {
    pub fn unscaled(value: C64, abs_error: f64, nodes: usize, converged: bool) -> Self {
        Self { value, abs_error, nodes, converged, log_scale: 0.0 }
    }

    /// Folds `log_scale` into `value` when the product is representable.
    pub fn normalized(mut self) -> Self {
        if self.log_scale != 0.0 && self.log_scale.abs() < MAX_EXP {
            let f = self.log_scale.exp();
            let v = self.value * f;
            let e = self.abs_error * f;
            let tiny = self.value.norm() > 0.0 && v.norm() < 1e-290;
            if v.re.is_finite() && v.im.is_finite() && e.is_finite() && !tiny {
                self.value = v;
                self.abs_error = e;
                self.log_scale = 0.0;
            }
        }
        self
    }

    /// Multiplies by `exp(delta)`. The rounding of `log_scale + delta` is
    /// pushed into `value`, which matters once the scale is near 1e10.
    pub fn shifted(mut self, delta: f64) -> Self {
        let sum = self.log_scale + delta;
        let bp = sum - self.log_scale;
        let lost = (self.log_scale - (sum - bp)) + (delta - bp);
        if lost != 0.0 {
            let f = lost.exp();
            self.value *= f;
            self.abs_error *= f;
        }
        self.log_scale = sum;
        self
    }

    /// `value * exp(log_scale)`; may overflow or underflow.
    pub fn scaled_value(&self) -> C64 {
        self.value * self.log_scale.exp()
    }

    /// Principal logarithm of the represented quantity.
    pub fn log_value(&self) -> C64 {
        self.value.ln() + self.log_scale
    }

    pub fn rel_error(&self) -> f64 {
        let m = self.value.norm();
        if m > 0.0 {
            self.abs_error / m
        } else {
            f64::INFINITY
        }
    }
}

/// Value and first two derivatives of `log gamma` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: C64,
    pub d1: C64,
    pub d2: C64,
}

impl Jet {
    pub fn new(v: C64, d1: C64, d2: C64) -> Self {
        Self { v, d1, d2 }
    }

    pub fn constant(v: C64) -> Self {
        Self::new(v, C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn scale(self, a: f64) -> Self {
        Self::new(self.v * a, self.d1 * a, self.d2 * a)
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl std::ops::Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.d1 - o.d1, self.d2 - o.d2)
    }
}
