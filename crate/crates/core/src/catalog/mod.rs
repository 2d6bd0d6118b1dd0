//! Moment functions `γ`: primitives, closure combinators, integral
//! representations and the numerical admissibility audit.
//!
//! Every function is evaluated through its jet `(log γ, Φ, Φ')` where
//! `Φ = (log γ)'`. Derivatives of composite functions are composed
//! analytically; finite differences only appear in the audit.

pub mod audit;
pub mod measure;
pub mod spec;

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{MellinError, Result};
use crate::special::{digamma, ln_gamma, trigamma};
use crate::summation::DoubleDouble;
use crate::types::{Jet, C64};

pub use audit::{audit_admissibility, default_audit_grid, AuditReport, AuditThresholds};
pub use measure::Measure;
pub use spec::{build, build_positive_type, build_theorem3, EllKind, FunctionKind, FunctionSpec, MeasureKind, PositiveTypeSpec, SlowlyVaryingEll};

/// Above this `Re log s` the value `s` itself is no longer representable and
/// nodes switch to their log-coordinate forms.
pub(crate) const DIRECT_LOG_LIMIT: f64 = 300.0;

pub type JetFn = Arc<dyn Fn(C64) -> Jet + Send + Sync>;

#[derive(Clone)]
pub(crate) enum Node {
    GammaShift { c: f64 },
    ExpTau { tau: f64, child: Box<Node> },
    ShiftNormalize { c: f64, offset: f64, child: Box<Node> },
    IteratedLog { a: f64, b: f64, k: u32, c: f64 },
    Power { a: f64, child: Box<Node> },
    Product(Box<Node>, Box<Node>),
    Quotient(Box<Node>, Box<Node>),
    LogOfL(Box<Node>),
    /// `A + B s + (s - a)^2 ∫ dμ(u)/(u+s)`; also carries the integral
    /// representation built from slowly varying data.
    Stieltjes(Arc<StieltjesNode>),
    Custom(JetFn),
}

pub(crate) struct StieltjesNode {
    pub big_a: f64,
    pub big_b: f64,
    pub a: f64,
    pub measure: Measure,
    pub cache: measure::JetCache,
}

impl StieltjesNode {
    fn jet(&self, s: C64) -> Result<Jet> {
        let w = s - self.a;
        let j = self.cache.get_or_insert(s, || self.measure.moments(s, w))?;
        let (j0, wj1, w2j2) = (j[0], j[1], j[2]);
        let v = w * w * j0 + self.big_a + s * self.big_b;
        let d1 = w * (j0 * 2.0 - wj1) + self.big_b;
        let d2 = j0 * 2.0 - wj1 * 4.0 + w2j2 * 2.0;
        Ok(Jet::new(v, d1, d2))
    }
}

/// Values of the iterated logarithm chain at `s + c`:
/// `y = log_{k+1}(s+c)`, `D = s y'`, `S = s^2 y''`.
fn iterated_log_chain(k: u32, c: f64, s: C64, sigma: Option<C64>) -> (C64, C64, C64) {
    // j = 1
    let (mut y, mut d, mut s2) = match sigma {
        Some(sg) => {
            let q = (-sg).exp() * c;
            let d1 = (q + 1.0).inv();
            (sg + q.ln_1p_c(), d1, -d1 * d1)
        }
        None => {
            // s/(s+c) written so that |s|^2 never forms
            let d1 = if s == C64::new(0.0, 0.0) { s } else { (C64::new(1.0, 0.0) + c / s).inv() };
            ((s + c).ln(), d1, -d1 * d1)
        }
    };
    for _ in 0..k {
        let yp = y;
        let dn = d / yp;
        let sn = s2 / yp - (d * d) / (yp * yp);
        y = yp.ln();
        d = dn;
        s2 = sn;
    }
    (y, d, s2)
}

trait Ln1p {
    fn ln_1p_c(self) -> C64;
}

impl Ln1p for C64 {
    /// `ln(1 + q)` accurate for small `q`.
    fn ln_1p_c(self) -> C64 {
        if self.norm() < 1e-4 {
            // ln(1+q) = q - q^2/2 + q^3/3 - ...
            let mut term = self;
            let mut sum = self;
            for n in 2..8 {
                term = -term * self;
                sum += term / n as f64;
            }
            sum
        } else {
            (self + 1.0).ln()
        }
    }
}

impl Node {
    fn jet(&self, s: C64) -> Result<Jet> {
        Ok(match self {
            Node::GammaShift { c } => {
                let w = s + *c;
                Jet::new(ln_gamma(w), digamma(w), trigamma(w))
            }
            Node::ExpTau { tau, child } => {
                let j = child.jet(s)?;
                Jet::new(j.v + s * *tau, j.d1 + *tau, j.d2)
            }
            Node::ShiftNormalize { c, offset, child } => {
                let j = child.jet(s + *c)?;
                Jet::new(j.v - *offset, j.d1, j.d2)
            }
            Node::IteratedLog { a, b, k, c } => {
                let (y, d, s2) = iterated_log_chain(*k, *c, s, None);
                let yb = y.powf(*b);
                let yb1 = yb / y;
                // log γ = a s y^b
                let v = s * yb * *a;
                // Φ = a y^b + a b y^(b-1) D
                let d1 = (yb + yb1 * d * *b) * *a;
                // sΦ' = a b [ y^(b-1) D + (b-1) y^(b-2) D^2 + y^(b-1)(D + S) ]
                let sdd = (yb1 * d + yb1 / y * d * d * (*b - 1.0) + yb1 * (d + s2)) * (*a * *b);
                Jet::new(v, d1, sdd / s)
            }
            Node::Power { a, child } => child.jet(s)?.scale(*a),
            Node::Product(l, r) => l.jet(s)? + r.jet(s)?,
            Node::Quotient(l, r) => l.jet(s)? - r.jet(s)?,
            Node::LogOfL(child) => {
                let u = s + 1.0;
                let j = child.jet(u)?;
                // M = log L(u) = V/u
                let m = j.v / u;
                let m1 = j.d1 / u - j.v / (u * u);
                let m2 = j.d2 / u - j.d1 * 2.0 / (u * u) + j.v * 2.0 / (u * u * u);
                let lm = m.ln();
                let r1 = m1 / m;
                let r2 = m2 / m - r1 * r1;
                Jet::new(s * lm, lm + s * r1, r1 * 2.0 + s * r2)
            }
            Node::Stieltjes(n) => n.jet(s)?,
            Node::Custom(f) => f(s),
        })
    }

    /// `log γ(x)` at a real point in double-double arithmetic, for the
    /// closed-form primitives whose values outgrow double resolution.
    fn log_gamma_dd(&self, x: DoubleDouble) -> Option<DoubleDouble> {
        match self {
            Node::IteratedLog { a, b, k, c } => {
                let mut y = x.add(DoubleDouble::from_f64(*c)).ln();
                for _ in 0..*k {
                    y = y.ln();
                }
                if !(y.hi > 0.0) {
                    return None;
                }
                Some(y.powf(*b).mul(x).mul_f64(*a))
            }
            Node::ExpTau { tau, child } => Some(child.log_gamma_dd(x)?.add(x.mul_f64(*tau))),
            Node::ShiftNormalize { c, offset, child } => {
                Some(child.log_gamma_dd(x.add(DoubleDouble::from_f64(*c)))?.sub(DoubleDouble::from_f64(*offset)))
            }
            Node::Power { a, child } => Some(child.log_gamma_dd(x)?.mul_f64(*a)),
            Node::Product(l, r) => Some(l.log_gamma_dd(x)?.add(r.log_gamma_dd(x)?)),
            Node::Quotient(l, r) => Some(l.log_gamma_dd(x)?.sub(r.log_gamma_dd(x)?)),
            _ => None,
        }
    }

    /// `(Φ(e^σ), dΦ/dσ)` without forming `s = e^σ` when that would overflow.
    fn phi_log(&self, sigma: C64) -> Result<(C64, C64)> {
        if sigma.re < DIRECT_LOG_LIMIT {
            let s = sigma.exp();
            let j = self.jet(s)?;
            return Ok((j.d1, s * j.d2));
        }
        let q = |c: f64| (-sigma).exp() * c;
        match self {
            Node::GammaShift { c } => {
                // ψ(s+c) = ln(s+c) + O(1/s); the remainder is below e^-300.
                let qc = q(*c);
                Ok((sigma + qc.ln_1p_c(), (qc + 1.0).inv()))
            }
            Node::ExpTau { tau, child } => {
                let (p, dp) = child.phi_log(sigma)?;
                Ok((p + *tau, dp))
            }
            Node::ShiftNormalize { c, child, .. } => {
                let qc = q(*c);
                let shifted = sigma + qc.ln_1p_c();
                let (p, dp) = child.phi_log(shifted)?;
                Ok((p, dp * (qc + 1.0).inv()))
            }
            Node::IteratedLog { a, b, k, c } => {
                let (y, d, s2) = iterated_log_chain(*k, *c, C64::new(0.0, 0.0), Some(sigma));
                let yb = y.powf(*b);
                let yb1 = yb / y;
                let d1 = (yb + yb1 * d * *b) * *a;
                let sdd = (yb1 * d + yb1 / y * d * d * (*b - 1.0) + yb1 * (d + s2)) * (*a * *b);
                Ok((d1, sdd))
            }
            Node::Power { a, child } => {
                let (p, dp) = child.phi_log(sigma)?;
                Ok((p * *a, dp * *a))
            }
            Node::Product(l, r) => {
                let (p1, d1) = l.phi_log(sigma)?;
                let (p2, d2) = r.phi_log(sigma)?;
                Ok((p1 + p2, d1 + d2))
            }
            Node::Quotient(l, r) => {
                let (p1, d1) = l.phi_log(sigma)?;
                let (p2, d2) = r.phi_log(sigma)?;
                Ok((p1 - p2, d1 - d2))
            }
            _ => Err(MellinError::Overflow { exponent_re: sigma.re }),
        }
    }
}

/// Static description attached to a built function.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionMeta {
    pub label: String,
    /// `γ` is analytic and non-vanishing in `|arg(s + c_gamma)| < alpha0`.
    pub c_gamma: f64,
    pub alpha0: f64,
    /// `γ` is positive on `(positive_from, ∞)`; equals `-c_gamma` except for
    /// the unshifted Gamma function.
    pub positive_from: f64,
    /// Built from a representation of positive type, so `K >= 0` on the ray.
    pub positive_type: bool,
    /// `log γ` is affine, so `K` is a point mass rather than a function.
    pub degenerate: bool,
    /// `1/γ` extends to an entire function (vanishing where `γ` has poles).
    pub reciprocal_entire: bool,
}

struct Inner {
    node: Node,
    meta: FunctionMeta,
    inv_gamma_at_zero: f64,
    rho0: OnceLock<f64>,
}

/// An admissible moment function `γ` with its derived quantities
/// `L = γ^(1/s)`, `ε = s L'/L`, `Φ = log L + ε`.
#[derive(Clone)]
pub struct AdmissibleFunction {
    inner: Arc<Inner>,
}

impl fmt::Debug for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdmissibleFunction").field("meta", &self.inner.meta).finish()
    }
}

impl AdmissibleFunction {
    pub(crate) fn from_node(node: Node, meta: FunctionMeta) -> Self {
        let inv = inv_gamma_at_zero(&node);
        Self { inner: Arc::new(Inner { node, meta, inv_gamma_at_zero: inv, rho0: OnceLock::new() }) }
    }

    /// A function given directly by its jet, e.g. non-admissible controls
    /// such as `exp(s^2)`. No admissibility is assumed or checked.
    pub fn custom(label: &str, c_gamma: f64, alpha0: f64, jet: impl Fn(C64) -> Jet + Send + Sync + 'static) -> Self {
        let meta = FunctionMeta {
            label: label.to_string(),
            c_gamma,
            alpha0,
            positive_from: -c_gamma,
            positive_type: false,
            degenerate: false,
            reciprocal_entire: false,
        };
        Self::from_node(Node::Custom(Arc::new(jet)), meta)
    }

    pub fn meta(&self) -> &FunctionMeta {
        &self.inner.meta
    }

    pub fn label(&self) -> &str {
        &self.inner.meta.label
    }

    pub fn c_gamma(&self) -> f64 {
        self.inner.meta.c_gamma
    }

    pub fn alpha0(&self) -> f64 {
        self.inner.meta.alpha0
    }

    pub fn is_positive_type(&self) -> bool {
        self.inner.meta.positive_type
    }

    /// `1/γ(0)`: zero when `γ` has a pole at the origin, otherwise
    /// `exp(-log γ(0))`, falling back to `σ = 1e-6` when the value at the
    /// origin is indeterminate.
    pub fn inv_gamma_at_zero(&self) -> f64 {
        self.inner.inv_gamma_at_zero
    }

    /// Jet of `log γ`; integral-backed functions may fail to converge.
    pub fn try_jet(&self, s: C64) -> Result<Jet> {
        self.inner.node.jet(s)
    }

    /// Jet of `log γ`, NaN where evaluation failed.
    pub fn jet(&self, s: C64) -> Jet {
        self.try_jet(s).unwrap_or_else(|_| {
            let nan = C64::new(f64::NAN, f64::NAN);
            Jet::new(nan, nan, nan)
        })
    }

    pub fn log_gamma(&self, s: C64) -> C64 {
        self.jet(s).v
    }

    /// `Φ = (log γ)'`, the left side of the saddle-point equation.
    pub fn dlog_gamma(&self, s: C64) -> C64 {
        self.jet(s).d1
    }

    /// `Φ'`.
    pub fn d2log_gamma(&self, s: C64) -> C64 {
        self.jet(s).d2
    }

    pub fn log_l(&self, s: C64) -> C64 {
        self.jet(s).v / s
    }

    /// `ε = Φ - log L`.
    pub fn eps(&self, s: C64) -> C64 {
        let j = self.jet(s);
        j.d1 - j.v / s
    }

    /// `ε' = Φ' - Φ/s + log γ / s^2`.
    pub fn deps(&self, s: C64) -> C64 {
        let j = self.jet(s);
        j.d2 - j.d1 / s + j.v / (s * s)
    }

    /// `ε` at a positive real point.
    pub fn eps_real(&self, rho: f64) -> f64 {
        self.eps(C64::new(rho, 0.0)).re
    }

    /// `(Φ(s), s Φ'(s))` at `s = e^σ`, valid far beyond the double range of `s`
    /// for the closed-form primitives and their algebraic combinations.
    pub fn phi_log(&self, sigma: C64) -> Result<(C64, C64)> {
        self.inner.node.phi_log(sigma)
    }

    /// `log γ(x)` for real `x` in double-double precision; `None` for nodes
    /// without a closed form.
    pub fn log_gamma_dd(&self, x: f64) -> Option<DoubleDouble> {
        self.inner.node.log_gamma_dd(DoubleDouble::from_f64(x))
    }

    /// Cached `ρ0` from the admissibility audit.
    pub fn rho0(&self) -> f64 {
        *self.inner.rho0.get_or_init(|| audit::estimate_rho0(self))
    }
}

fn inv_gamma_at_zero(node: &Node) -> f64 {
    let v0 = node.jet(C64::new(0.0, 0.0)).map(|j| j.v.re).unwrap_or(f64::NAN);
    if v0 == f64::INFINITY {
        0.0
    } else if v0.is_finite() {
        (-v0).exp()
    } else {
        let v = node.jet(C64::new(1e-6, 0.0)).map(|j| j.v.re).unwrap_or(f64::NAN);
        if v == f64::INFINITY {
            0.0
        } else {
            (-v).exp()
        }
    }
}

/// `E_j`: `E_{-1} = 0`, `E_0 = 1`, `E_j = exp(E_{j-1})`, so `log_j(E_j) = 1`.
pub(crate) fn tower(j: i32) -> f64 {
    let mut e = if j < 0 { return 0.0 } else { 1.0 };
    for _ in 0..j {
        e = f64::exp(e);
    }
    e
}

/// `log_k(x)` for real `x`; NaN once an intermediate value is non-positive.
pub(crate) fn iterated_log_real(k: u32, x: f64) -> f64 {
    let mut y = x;
    for _ in 0..k {
        if y <= 0.0 {
            return f64::NAN;
        }
        y = y.ln();
    }
    y
}

pub(crate) const FULL_ANGLE: f64 = PI;

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma(c: f64) -> AdmissibleFunction {
        let meta = FunctionMeta {
            label: "g".into(),
            c_gamma: c.max(1.0),
            alpha0: PI,
            positive_from: -c,
            positive_type: false,
            degenerate: false,
            reciprocal_entire: false,
        };
        AdmissibleFunction::from_node(Node::GammaShift { c }, meta)
    }

    #[test]
    fn plain_gamma_has_zero_reciprocal_at_origin() {
        assert_eq!(gamma(0.0).inv_gamma_at_zero(), 0.0);
        assert!((gamma(1.0).inv_gamma_at_zero() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eps_of_gamma_tends_to_one() {
        let f = gamma(1.0);
        let e = f.eps_real(1e6);
        assert!((e - 1.0).abs() < 1e-4, "{e}");
    }

    #[test]
    fn iterated_log_chain_matches_direct() {
        let s = C64::new(30.0, 12.0);
        let (y, d, s2) = iterated_log_chain(1, std::f64::consts::E, s, None);
        let (yl, dl, s2l) = iterated_log_chain(1, std::f64::consts::E, s, Some(s.ln()));
        assert!((y - yl).norm() < 1e-14);
        assert!((d - dl).norm() < 1e-14);
        assert!((s2 - s2l).norm() < 1e-14);
        assert!((y - (s + std::f64::consts::E).ln().ln()).norm() < 1e-14);
    }

    #[test]
    fn phi_log_continues_past_overflow() {
        let node = Node::IteratedLog { a: 1.0, b: 1.0, k: 1, c: std::f64::consts::E };
        let (p, dp) = node.phi_log(C64::new(2981.0, 0.5)).unwrap();
        // Φ ≈ log σ + 1/σ
        let sg = C64::new(2981.0, 0.5);
        assert!((p - (sg.ln() + sg.inv())).norm() < 1e-6);
        assert!(dp.norm() < 1e-3);
        let near = node.phi_log(C64::new(299.0, 0.2)).unwrap();
        let far = node.phi_log(C64::new(301.0, 0.2)).unwrap();
        assert!((near.0 - far.0).norm() < 1e-2, "{near:?} {far:?}");
    }

    #[test]
    fn double_double_log_gamma_agrees_with_jet() {
        let node = Node::IteratedLog { a: 1.0, b: 1.0, k: 1, c: std::f64::consts::E };
        for &x in &[3.0, 1e4, 3.9e12] {
            let dd = node.log_gamma_dd(DoubleDouble::from_f64(x)).unwrap();
            let v = node.jet(C64::new(x, 0.0)).unwrap().v.re;
            assert!((dd.to_f64() - v).abs() < 4.0 * f64::EPSILON * v.abs(), "{x}");
        }
        // the low word resolves differences far below one ulp of the value
        let a = node.log_gamma_dd(DoubleDouble::from_f64(3.9e12)).unwrap();
        let b = node.log_gamma_dd(DoubleDouble::from_f64(3.9e12 + 1.0)).unwrap();
        let slope = node.jet(C64::new(3.9e12 + 0.5, 0.0)).unwrap().d1.re;
        assert!((b.sub(a).to_f64() - slope).abs() < 1e-12);
        assert!(Node::GammaShift { c: 0.0 }.log_gamma_dd(DoubleDouble::from_f64(2.0)).is_none());
    }

    #[test]
    fn tower_values() {
        assert_eq!(tower(-1), 0.0);
        assert_eq!(tower(0), 1.0);
        assert!((tower(1) - std::f64::consts::E).abs() < 1e-15);
        assert!((iterated_log_real(2, tower(2)) - 1.0).abs() < 1e-14);
    }
}
