//! Numerical evaluation of `K` (inverse Mellin transform), `E` (moment
//! power series), the Abel–Plana right-hand side and the moments of `K`.
//!
//! Every integrand is handled through its logarithm `g`, integrated as
//! `exp(g - L)` with the largest sampled `Re g` as `L`, and reported with
//! `log_scale = L` so that values far outside the double range survive.

use std::cell::{Cell, RefCell};
use std::f64::consts::{LN_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::catalog::{AdmissibleFunction, DIRECT_LOG_LIMIT};
use crate::error::{MellinError, Result};
use crate::quadrature::{integrate, march_ray, MarchConfig};
use crate::saddle::{solve, solve_real_log, SolveOptions};
use crate::summation::{DoubleDouble, NeumaierSum};
use crate::types::{LogSurfacePoint, QuadratureResult, Tolerances, C64};

const I: C64 = C64::new(0.0, 1.0);
const U: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContourKind {
    /// Rays `vertex + e^{±iα} R_+`, traversed with increasing imaginary part.
    LAlpha { alpha: f64, vertex: f64 },
    /// The line `Re s = c`.
    Vertical { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    pub tolerances: Tolerances,
}

impl ContourSpec {
    pub fn l_alpha(alpha: f64, vertex: f64) -> Self {
        Self { kind: ContourKind::LAlpha { alpha, vertex }, tolerances: Tolerances::quadrature() }
    }

    pub fn vertical(c: f64) -> Self {
        Self { kind: ContourKind::Vertical { c }, tolerances: Tolerances::quadrature() }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tolerances = tol;
        self
    }

    /// Vertical line through the saddle `s_z`, which avoids the cancellation
    /// a far-off line suffers when `K(z)` is small.
    pub fn vertical_through_saddle(f: &AdmissibleFunction, z: LogSurfacePoint) -> Self {
        Self::vertical(saddle_anchor(f, z))
    }

    /// `ℒ_α` with its vertex at the real part of the saddle.
    pub fn l_alpha_through_saddle(f: &AdmissibleFunction, z: LogSurfacePoint, alpha: f64) -> Self {
        Self::l_alpha(alpha, saddle_anchor(f, z))
    }

    pub fn validate(&self, f: &AdmissibleFunction) -> Result<()> {
        self.tolerances.validate()?;
        match self.kind {
            ContourKind::LAlpha { alpha, vertex } => {
                if !(alpha > PI / 2.0 && alpha < f.alpha0()) {
                    return Err(MellinError::InvalidInput(format!(
                        "ℒ_α needs π/2 < alpha < α0 = {}, got {alpha}",
                        f.alpha0()
                    )));
                }
                if !(vertex >= 0.0 && vertex.is_finite()) {
                    return Err(MellinError::InvalidInput(format!("ℒ_α vertex must be >= 0, got {vertex}")));
                }
                let v = f.log_gamma(C64::new(vertex, 0.0));
                if !v.re.is_finite() {
                    return Err(MellinError::InvalidInput(format!("ℒ_α vertex {vertex} sits on a singularity of γ")));
                }
            }
            ContourKind::Vertical { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(MellinError::InvalidInput(format!("vertical contour needs c > 0, got {c}")));
                }
            }
        }
        Ok(())
    }
}

/// Positive real point near the saddle `s_z`: `Re s_z` when the solver
/// succeeds, otherwise the positive-ray saddle for `|z|`, never below 1/2.
pub fn saddle_anchor(f: &AdmissibleFunction, z: LogSurfacePoint) -> f64 {
    let from_solve = solve(f, z, &SolveOptions::default()).ok().map(|(s, _)| s.log_rho + s.theta_z.cos().max(1e-300).ln());
    let log_anchor = from_solve
        .or_else(|| solve_real_log(f, z.log_r, &Tolerances::root_finding()).ok())
        .unwrap_or(f64::NEG_INFINITY);
    log_anchor.min(DIRECT_LOG_LIMIT).exp().max(0.5)
}

/// Standard deviation of the Gaussian saddle model at `s = e^σ`,
/// `sqrt(|s| / |dΦ/dσ|)`.
fn saddle_width(f: &AdmissibleFunction, sigma: C64) -> f64 {
    match f.phi_log(sigma) {
        Ok((_, dp)) if dp.norm() > 0.0 && dp.norm().is_finite() => (0.5 * (sigma.re - dp.norm().ln())).exp().clamp(1e-2, 1e300),
        _ => 1.0,
    }
}

fn march_cfg(h0: f64) -> MarchConfig {
    MarchConfig { h0, ..MarchConfig::default() }
}

/// Breakpoints covering `[from, to]` (either orientation), with steps that
/// grow geometrically away from `from` and split where the phase turns.
fn march_between(g: &dyn Fn(f64) -> C64, from: f64, to: f64, h0: f64) -> Vec<f64> {
    let dir = if to >= from { 1.0 } else { -1.0 };
    let cfg = MarchConfig::default();
    let mut out = vec![from];
    let mut t = from;
    let mut gv = g(t);
    let mut h = h0;
    let mut step = 0usize;
    while (to - t) * dir > 0.0 {
        if step >= cfg.linear_steps {
            h *= cfg.growth;
        }
        step += 1;
        let tn = if (to - (t + dir * h)) * dir <= 0.5 * h { to } else { t + dir * h };
        let gn = g(tn);
        let dphase = if gn.re.is_finite() && gv.re.is_finite() { (gn.im - gv.im).abs() } else { 0.0 };
        let pieces = ((dphase / PI).ceil().clamp(1.0, 4096.0) as usize).next_power_of_two();
        for k in 1..pieces {
            out.push(t + (tn - t) * k as f64 / pieces as f64);
        }
        out.push(tn);
        t = tn;
        gv = gn;
    }
    if dir < 0.0 {
        out.reverse();
    }
    out
}

/// Ray breakpoints, cut at `limit` when the march runs past it.
fn march_until(g: &dyn Fn(f64) -> C64, t0: f64, limit: f64, h0: f64, drop: f64) -> Result<(Vec<f64>, f64)> {
    let clipped = |t: f64| if t > limit { C64::new(f64::NEG_INFINITY, 0.0) } else { g(t) };
    let plan = march_ray(&clipped, t0, march_cfg(h0), drop)?;
    let mut breaks: Vec<f64> = plan.breaks.into_iter().filter(|t| *t < limit).collect();
    if plan.log_max.is_finite() && limit.is_finite() && breaks.last().is_some_and(|t| *t < limit) {
        let last = *breaks.last().expect("non-empty");
        let tail = march_between(g, last, limit, (limit - last).max(h0 * 1e-3));
        breaks.extend(tail.into_iter().skip(1));
    }
    Ok((breaks, plan.log_max))
}

/// `coef · ∫ exp(g(t)) dt` over `breaks`, with `g` already shifted by a
/// common reference exponent.
struct Piece<'a> {
    g: Box<dyn Fn(f64) -> C64 + 'a>,
    breaks: Vec<f64>,
    coef: C64,
}

/// Contour parameter to `s`.
type PathMap = Box<dyn Fn(f64) -> C64>;

fn log_max_of(g: &dyn Fn(f64) -> C64, breaks: &[f64]) -> f64 {
    breaks.iter().map(|&t| g(t).re).filter(|x| !x.is_nan()).fold(f64::NEG_INFINITY, f64::max)
}

/// Integrates all pieces on one scale. The reported error adds the
/// cancellation floor `8u ∫|integrand|` to the quadrature estimates.
fn integrate_pieces(pieces: &[Piece], reference: f64, tol: &Tolerances) -> Result<QuadratureResult> {
    integrate_pieces_noisy(pieces, reference, 0.0, tol)
}

/// As [`integrate_pieces`], with `noise` the absolute rounding of the
/// exponent, which perturbs every integrand value by that relative amount.
fn integrate_pieces_noisy(pieces: &[Piece], reference: f64, noise: f64, tol: &Tolerances) -> Result<QuadratureResult> {
    let scale = pieces.iter().map(|p| log_max_of(&*p.g, &p.breaks)).fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return Ok(QuadratureResult { value: C64::new(0.0, 0.0), abs_error: 0.0, nodes: 0, converged: true, log_scale: 0.0 });
    }
    let mut sum = NeumaierSum::new();
    let mut err = 0.0;
    let mut l1 = 0.0;
    let mut nodes = 0;
    let mut converged = true;
    for p in pieces {
        if p.breaks.len() < 2 {
            continue;
        }
        let f = |t: f64| {
            let w = (p.g)(t);
            if w.re == f64::NEG_INFINITY {
                C64::new(0.0, 0.0)
            } else {
                (w - scale).exp()
            }
        };
        let r = integrate(&f, &p.breaks, tol)?;
        let c = p.coef.norm();
        sum.add(r.value * p.coef);
        err += c * r.abs_error;
        l1 += c * r.l1;
        nodes += r.nodes;
        converged &= r.converged;
    }
    let value = sum.total();
    let abs_error = err + (8.0 * U + noise) * l1;
    converged &= abs_error <= (tol.rel_tol * value.norm()).max(tol.abs_tol);
    Ok(QuadratureResult { value, abs_error, nodes, converged, log_scale: scale }.shifted(reference))
}

/// `Σ coef_i · r_i` on the largest of their scales.
fn combine(parts: &[(C64, QuadratureResult)]) -> QuadratureResult {
    let scale = parts
        .iter()
        .filter(|(_, r)| r.value.norm() > 0.0 || r.abs_error > 0.0)
        .map(|(_, r)| r.log_scale)
        .fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        let nodes = parts.iter().map(|(_, r)| r.nodes).sum();
        return QuadratureResult { value: C64::new(0.0, 0.0), abs_error: 0.0, nodes, converged: true, log_scale: 0.0 };
    }
    let mut sum = NeumaierSum::new();
    let mut err = 0.0;
    let mut nodes = 0;
    let mut converged = true;
    for (c, r) in parts {
        let f = (r.log_scale - scale).exp();
        sum.add(r.value * *c * f);
        err += r.abs_error * c.norm() * f;
        nodes += r.nodes;
        converged &= r.converged;
    }
    QuadratureResult { value: sum.total(), abs_error: err, nodes, converged, log_scale: scale }
}

fn exact(v: C64) -> QuadratureResult {
    QuadratureResult::unscaled(v, 0.0, 0, true)
}

/// `K(z) = (1/2πi) ∫ z^{-s} γ(s) ds` along the given contour.
#[allow(non_snake_case)]
pub fn eval_K(f: &AdmissibleFunction, z: LogSurfacePoint, contour: &ContourSpec) -> Result<QuadratureResult> {
    contour.validate(f)?;
    let tol = &contour.tolerances;
    let w = z.log();
    let g = move |s: C64| f.log_gamma(s) - s * w;
    // Each piece with its parametrisation `t -> s`.
    let (pieces, maps): (Vec<Piece>, [PathMap; 2]) = match contour.kind {
        ContourKind::Vertical { c } => {
            let h0 = saddle_width(f, C64::new(c.ln(), 0.0)) / 4.0;
            let up = move |y: f64| g(C64::new(c, y));
            let dn = move |y: f64| g(C64::new(c, -y));
            let pu = march_ray(&up, 0.0, march_cfg(h0), tol.truncation_drop)?;
            let pd = march_ray(&dn, 0.0, march_cfg(h0), tol.truncation_drop)?;
            (
                vec![
                    Piece { g: Box::new(up), breaks: pu.breaks, coef: C64::new(1.0 / TAU, 0.0) },
                    Piece { g: Box::new(dn), breaks: pd.breaks, coef: C64::new(1.0 / TAU, 0.0) },
                ],
                [Box::new(move |y| C64::new(c, y)), Box::new(move |y| C64::new(c, -y))],
            )
        }
        ContourKind::LAlpha { alpha, vertex } => {
            let e = C64::from_polar(1.0, alpha);
            let h0 = saddle_width(f, C64::new(vertex.max(0.5).ln(), 0.0)) / 4.0;
            let up = move |u: f64| g(e * u + vertex);
            let dn = move |u: f64| g(e.conj() * u + vertex);
            let pu = march_ray(&up, 0.0, march_cfg(h0), tol.truncation_drop)?;
            let pd = march_ray(&dn, 0.0, march_cfg(h0), tol.truncation_drop)?;
            let k = (I * TAU).inv();
            (
                vec![
                    Piece { g: Box::new(up), breaks: pu.breaks, coef: e * k },
                    Piece { g: Box::new(dn), breaks: pd.breaks, coef: -e.conj() * k },
                ],
                [Box::new(move |u| e * u + vertex), Box::new(move |u| e.conj() * u + vertex)],
            )
        }
    };
    // log γ and s log z are each rounded relative to their own size, which
    // at the peak of the integrand can far exceed the size of their sum.
    let peak = pieces
        .iter()
        .zip(&maps)
        .flat_map(|(p, m)| p.breaks.iter().map(move |&t| ((p.g)(t).re, m(t))))
        .filter(|(v, _)| !v.is_nan())
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, s)| s);
    let noise = peak.map_or(0.0, |s| 2.0 * U * (f.log_gamma(s).norm() + (s * w).norm()));
    Ok(integrate_pieces_noisy(&pieces, 0.0, noise, tol)?.normalized())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesMethod {
    /// Term by term in double precision.
    Direct,
    /// Term by term, with exponents anchored in double-double arithmetic.
    Anchored,
    /// Lindelöf's integral `-(1/2) ∫ a(s)/sin(πs) ds` over a vertical line,
    /// used when the terms cancel beyond what summation can resolve.
    Lindelof,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    /// `E(z)`.
    pub e: QuadratureResult,
    /// `z E(z) + 1/γ(0)`.
    pub ze_plus: QuadratureResult,
    pub method: SeriesMethod,
    /// Terms summed, or quadrature nodes for the integral route.
    pub terms: usize,
}

/// Default tolerances for the series and the Abel–Plana integrals.
pub fn series_tolerances() -> Tolerances {
    Tolerances::quadrature().with_rel_tol(1e-12)
}

/// `E(0) = 1/γ(1)`.
#[allow(non_snake_case)]
pub fn eval_E_at_origin(f: &AdmissibleFunction) -> f64 {
    (-f.log_gamma(C64::new(1.0, 0.0)).re).exp()
}

#[allow(non_snake_case)]
pub fn eval_E_series(f: &AdmissibleFunction, z: LogSurfacePoint) -> Result<SeriesValue> {
    eval_E_series_with(f, z, &series_tolerances())
}

/// `E(z) = Σ z^n/γ(n+1)`, summed in log space from the peak term outwards.
/// When the estimated error of the sum exceeds `rel_tol` (cancellation
/// for `z` away from the positive ray) Lindelöf's integral is tried and the
/// more accurate of the two is returned.
#[allow(non_snake_case)]
pub fn eval_E_series_with(f: &AdmissibleFunction, z: LogSurfacePoint, tol: &Tolerances) -> Result<SeriesValue> {
    tol.validate()?;
    // Off the ray the Lindelöf integral is cheap whenever it converges; the
    // direct sum is kept as the fallback and as the route for ψ = 0.
    let first = if z.psi != 0.0 {
        lindelof(f, z, tol).ok().filter(|(l, _)| l.rel_error() <= tol.rel_tol)
    } else {
        None
    };
    let (e, terms, method) = match first {
        Some((l, nodes)) => (l, nodes, SeriesMethod::Lindelof),
        None => {
            let direct = direct_series(f, z, tol);
            let needs_more = direct.as_ref().map_or(true, |(e, _, _)| e.rel_error() > tol.rel_tol);
            let alt = if needs_more { lindelof(f, z, tol).ok() } else { None };
            match (direct, alt) {
                (Ok(d), Some((l, nodes))) if l.rel_error() < d.0.rel_error() => (l, nodes, SeriesMethod::Lindelof),
                (Ok(d), _) => d,
                (Err(_), Some((l, nodes))) => (l, nodes, SeriesMethod::Lindelof),
                (Err(err), None) => return Err(err),
            }
        }
    };
    let zr = QuadratureResult { value: e.value * C64::from_polar(1.0, z.psi), ..e }.shifted(z.log_r);
    let ze_plus = combine(&[(C64::new(1.0, 0.0), zr), (C64::new(1.0, 0.0), exact(C64::new(f.inv_gamma_at_zero(), 0.0)))]);
    Ok(SeriesValue { e: e.normalized(), ze_plus: ze_plus.normalized(), method, terms })
}

/// Local expansion of the term exponent around an anchor index.
struct Anchor {
    n: f64,
    d: C64,
    slope: C64,
    curv: f64,
    /// Terms within `block` of `n` are taken from the quadratic model.
    block: f64,
    /// Rounding of the slope, per unit of `|j|`.
    slope_err: f64,
}

/// Longest block on which the dropped cubic term stays below 1e-15.
const MAX_BLOCK: f64 = 1024.0;

/// Reduces `n ψ` modulo `2π` in double-double arithmetic.
fn phase_dd(n: f64, psi: f64) -> f64 {
    const TAU_DD: DoubleDouble = DoubleDouble { hi: TAU, lo: 2.449_293_598_294_706_4e-16 };
    let p = DoubleDouble::from_f64(n).mul_f64(psi);
    let k = (p.hi / TAU).round();
    p.sub(TAU_DD.mul_f64(k)).to_f64()
}

fn direct_series(f: &AdmissibleFunction, z: LogSurfacePoint, tol: &Tolerances) -> Result<(QuadratureResult, usize, SeriesMethod)> {
    let w = z.log();
    let n_star = match solve_real_log(f, z.log_r, &Tolerances::root_finding()) {
        Ok(x) if x > 36.0 => {
            return Err(MellinError::InvalidInput(format!("series peak index e^{x:.1} exceeds 2^52")));
        }
        Ok(x) => (x.exp() - 1.0).max(0.0),
        Err(MellinError::NoSaddle(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let n0 = n_star.round();
    let width = if n0 > 10.0 { saddle_width(f, C64::new((n0 + 1.0).ln(), 0.0)) } else { 1.0 };
    if 20.0 * width > 2e9 {
        return Err(MellinError::InvalidInput(format!("series needs about {:.1e} terms", 20.0 * width)));
    }
    let f0 = f.log_gamma(C64::new(n0 + 1.0, 0.0));
    let anchored = U * (f0.norm() + (n0 * w).norm()) > 1e-3 * tol.rel_tol && f.log_gamma_dd(n0 + 1.0).is_some();

    // Reference exponent and the per-term exponent (minus reference) with
    // its rounding bound.
    let reference = if anchored {
        let dd = DoubleDouble::from_f64(n0).mul_f64(z.log_r).sub(f.log_gamma_dd(n0 + 1.0).expect("checked"));
        dd.hi
    } else {
        (n0 * w - f0).re
    };
    let anchor_at = |n: f64| -> Anchor {
        let dd = DoubleDouble::from_f64(n).mul_f64(z.log_r).sub(f.log_gamma_dd(n + 1.0).expect("checked"));
        let d = C64::new(dd.sub(DoubleDouble::from_f64(reference)).to_f64(), phase_dd(n, z.psi));
        let j = f.jet(C64::new(n + 1.0, 0.0));
        let third = (f.jet(C64::new(n + 1.0 + MAX_BLOCK, 0.0)).d2.re - j.d2.re).abs() / MAX_BLOCK;
        let block = if third > 0.0 { (6e-15 / third).cbrt().floor().clamp(1.0, MAX_BLOCK) } else { MAX_BLOCK };
        Anchor { n, d, slope: w - j.d1, curv: j.d2.re, block, slope_err: U * (w.norm() + j.d1.norm()) }
    };
    let anchor: RefCell<Option<Anchor>> = RefCell::new(None);
    let exponent = |n: f64| -> (C64, f64) {
        if anchored {
            let mut a = anchor.borrow_mut();
            if a.as_ref().is_none_or(|a| (n - a.n).abs() >= a.block) {
                *a = Some(anchor_at(n));
            }
            let a = a.as_ref().expect("set");
            let j = n - a.n;
            let err = 1e-15 + U * a.d.norm() + j.abs() * a.slope_err + U * a.curv.abs() * j * j;
            (a.d + a.slope * j - a.curv * j * j * 0.5, err)
        } else {
            let fv = f.log_gamma(C64::new(n + 1.0, 0.0));
            let e = n * w - fv - reference;
            (e, 2.0 * U * ((n * w).norm() + fv.norm() + reference.abs()))
        }
    };

    let mut sum = NeumaierSum::new();
    let mut l1 = 0.0;
    let mut err = 0.0;
    let mut peak = 0.0f64;
    let mut count = 0usize;
    let ln_drop = tol.truncation_drop.ln();
    for dir in [1.0, -1.0] {
        let mut n = if dir > 0.0 { n0 } else { n0 - 1.0 };
        let mut quiet = 0;
        while n >= 0.0 {
            let (e, de) = exponent(n);
            if e.re.is_nan() {
                return Err(MellinError::InvalidInput(format!("series term {n} is not finite")));
            }
            let t = e.exp();
            let m = t.norm();
            sum.add(t);
            l1 += m;
            err += m * de;
            peak = peak.max(m);
            count += 1;
            if e.re < peak.ln() + ln_drop {
                quiet += 1;
                if quiet >= 30 {
                    break;
                }
            } else {
                quiet = 0;
            }
            n += dir;
            if count > 2_000_000_000 {
                return Err(MellinError::InvalidInput("series did not settle within 2e9 terms".into()));
            }
        }
    }
    // The last 30 terms bound the neglected tails geometrically.
    let value = sum.total();
    let abs_error = err + 4.0 * U * l1 + 60.0 * tol.truncation_drop * peak;
    let converged = abs_error <= (tol.rel_tol * value.norm()).max(tol.abs_tol);
    let method = if anchored { SeriesMethod::Anchored } else { SeriesMethod::Direct };
    Ok((QuadratureResult { value, abs_error, nodes: count, converged, log_scale: reference }, count, method))
}

/// `log(1/sin(πs))`, stable for large `|Im s|`.
fn log_inv_sin_pi(s: C64) -> C64 {
    if s.im >= 0.0 {
        let q = (I * TAU * s).exp();
        C64::new(LN_2, -PI / 2.0) + I * PI * s - (C64::new(1.0, 0.0) - q).ln()
    } else {
        let q = (-I * TAU * s).exp();
        C64::new(LN_2, PI / 2.0) - I * PI * s - (C64::new(1.0, 0.0) - q).ln()
    }
}

/// `E(z) = -(1/2) ∫ a(c+iy)/sin(π(c+iy)) dy - Σ_{-k <= n < 0} z^n/γ(n+1)`
/// with `a(s) = (-z)^s/γ(s+1)` and `c = -k - 1/2`.
fn lindelof(f: &AdmissibleFunction, z: LogSurfacePoint, tol: &Tolerances) -> Result<(QuadratureResult, usize)> {
    let w = z.log();
    let sgn = if z.psi >= 0.0 { 1.0 } else { -1.0 };
    let wp = w - I * (PI * sgn);
    let g = move |s: C64| s * wp - f.log_gamma(s + 1.0) + log_inv_sin_pi(s);
    let entire = f.meta().reciprocal_entire;
    let c_gamma = f.c_gamma();

    // Pick the shift minimising the size of the integrand at y = 0 and of
    // the residue terms it brings in.
    let mut best = (0usize, f64::INFINITY);
    let mut residue_max = f64::NEG_INFINITY;
    for k in 0..=400usize {
        if k >= 1 {
            let n = -(k as f64);
            if !entire && !(n + 1.5 > -c_gamma) {
                break;
            }
            let fv = f.log_gamma(C64::new(n + 1.0, 0.0));
            if fv.re == f64::INFINITY {
                // 1/γ vanishes here
            } else if fv.re.is_finite() {
                residue_max = residue_max.max(n * z.log_r - fv.re);
            } else {
                break;
            }
        }
        let c = -(k as f64) - 0.5;
        let score = g(C64::new(c, 0.0)).re.max(residue_max);
        if !score.is_finite() {
            break;
        }
        if score < best.1 {
            best = (k, score);
        } else if score > best.1 + 50.0 {
            break;
        }
    }
    let k = best.0;
    let c = -(k as f64) - 0.5;
    let reference = g(C64::new(c, 0.0)).re;
    let up = move |y: f64| g(C64::new(c, y)) - reference;
    let dn = move |y: f64| g(C64::new(c, -y)) - reference;
    let pu = march_ray(&up, 0.0, march_cfg(0.25), tol.truncation_drop)?;
    let pd = march_ray(&dn, 0.0, march_cfg(0.25), tol.truncation_drop)?;
    let half = C64::new(-0.5, 0.0);
    let integral = integrate_pieces(
        &[Piece { g: Box::new(up), breaks: pu.breaks, coef: half }, Piece { g: Box::new(dn), breaks: pd.breaks, coef: half }],
        reference,
        tol,
    )?;
    let mut parts = vec![(C64::new(1.0, 0.0), integral)];
    for j in 1..=k {
        let n = -(j as f64);
        let fv = f.log_gamma(C64::new(n + 1.0, 0.0));
        if fv.re.is_finite() {
            let e = n * w - fv;
            parts.push((C64::new(-1.0, 0.0), QuadratureResult { value: C64::from_polar(1.0, e.im), abs_error: 4.0 * U * e.norm(), nodes: 0, converged: true, log_scale: e.re }));
        }
    }
    let r = combine(&parts);
    let nodes = r.nodes;
    Ok((r, nodes))
}

/// The three terms of the Abel–Plana right-hand side for
/// `Σ_{n>=0} z^n/γ(n) = z E(z) + 1/γ(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelPlanaValue {
    pub total: QuadratureResult,
    /// `∫_{-σ0}^∞ z^σ/γ(σ) dσ`.
    pub main: QuadratureResult,
    /// `-(1/2i) ∫_{-σ0}^{-σ0+i∞} z^s/γ(s) (cot πs + i) ds`.
    pub upper: QuadratureResult,
    /// `(1/2i) ∫_{-σ0}^{-σ0-i∞} z^s/γ(s) (cot πs - i) ds`.
    pub lower: QuadratureResult,
    /// Height of the horizontal leg the main integral was moved to.
    pub path_height: f64,
}

pub fn eval_abel_plana_rhs(f: &AdmissibleFunction, z: LogSurfacePoint, sigma0: f64) -> Result<AbelPlanaValue> {
    eval_abel_plana_rhs_with(f, z, sigma0, &series_tolerances())
}

/// Exponent `s log z - log γ(s) - reference`, in double-double arithmetic on
/// the positive ray when the value outgrows double resolution.
fn ap_exponent(f: &AdmissibleFunction, z: LogSurfacePoint, s: C64, reference: f64) -> C64 {
    let w = z.log();
    if s.im == 0.0 && z.psi == 0.0 && s.re > 1.0 {
        let fv = f.log_gamma(s);
        if U * fv.norm() > 1e-14 {
            if let Some(dd) = f.log_gamma_dd(s.re) {
                let e = DoubleDouble::from_f64(s.re).mul_f64(z.log_r).sub(dd).sub(DoubleDouble::from_f64(reference));
                return C64::new(e.to_f64(), 0.0);
            }
        }
        return s * w - fv - reference;
    }
    s * w - f.log_gamma(s) - reference
}

/// Evaluates the right-hand side with all three terms. The main integral
/// is taken along `[-σ0, -σ0 + iY] ∪ [-σ0 + iY, ∞ + iY]` (`Y` signed like
/// `ψ`), which equals the real-axis integral by Cauchy's theorem since
/// `z^s/γ(s)` decays faster than any exponential as `Re s → ∞`. `Y` is
/// chosen to minimise the largest integrand on the path, so that the
/// oscillating real-axis integrand does not cancel catastrophically.
pub fn eval_abel_plana_rhs_with(f: &AdmissibleFunction, z: LogSurfacePoint, sigma0: f64, tol: &Tolerances) -> Result<AbelPlanaValue> {
    tol.validate()?;
    let bound = f.c_gamma().min(1.0);
    if !(sigma0 > 0.0 && sigma0 < bound) {
        return Err(MellinError::InvalidInput(format!("sigma0 must lie in (0, {bound}), got {sigma0}")));
    }
    if z.psi.abs() > PI {
        return Err(MellinError::InvalidInput(format!("Abel–Plana needs |ψ| <= π, got {}", z.psi)));
    }
    let sgn = if z.psi >= 0.0 { 1.0 } else { -1.0 };
    let ray = solve_real_log(f, z.log_r, &Tolerances::root_finding()).ok();
    let peak_x = ray.map(|x| x.min(DIRECT_LOG_LIMIT).exp()).unwrap_or(1.0).max(1.0);
    let ex0 = move |s: C64| ap_exponent(f, z, s, 0.0);

    // Largest exponent along the path for a given height.
    let x_samples: Vec<f64> = {
        let mut v = vec![-sigma0];
        let mut d = 0.25;
        while d < 8.0 * peak_x + 100.0 {
            v.push(-sigma0 + d);
            d *= 1.5;
        }
        v.push(peak_x);
        v
    };
    let path_max = |y: f64| -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, -sigma0);
        for &x in &x_samples {
            let e = ex0(C64::new(x, sgn * y)).re;
            if e > best.0 {
                best = (e, x);
            }
        }
        let mut t = 0.25;
        while t < y {
            best.0 = best.0.max(ex0(C64::new(-sigma0, sgn * t)).re);
            t *= 1.5;
        }
        best
    };
    let mut height = 0.0;
    let (mut best, mut best_x) = path_max(0.0);
    if z.psi != 0.0 {
        let mut y = 0.25;
        while y < 1e16 {
            let (m, x) = path_max(y);
            if m < best - 1.0 {
                best = m;
                best_x = x;
                height = y;
            }
            y *= 1.5;
        }
    }

    // Each leg is exponentiated relative to its own size; subtracting a far
    // larger reference would cost digits in the exponent.
    let reference = if best.is_finite() { best } else { 0.0 };
    let ex = move |s: C64| ap_exponent(f, z, s, reference);

    // Horizontal leg: from its peak back to -σ0 and out to infinity.
    let yh = sgn * height;
    let h = move |x: f64| ex(C64::new(x, yh));
    let h0 = if best_x > 10.0 { saddle_width(f, C64::new(best_x.ln(), 0.0)) / 4.0 } else { 0.25 };
    let mut breaks = march_between(&h, best_x, -sigma0, h0);
    let right = march_ray(&h, best_x, march_cfg(h0), tol.truncation_drop)?;
    breaks.extend(right.breaks.into_iter().skip(1));
    let mut main_pieces = vec![Piece { g: Box::new(h), breaks, coef: C64::new(1.0, 0.0) }];
    if height > 0.0 {
        let v = move |t: f64| ex(C64::new(-sigma0, sgn * t));
        let (vb, _) = march_until(&v, 0.0, height, 0.25, tol.truncation_drop)?;
        let mut vb = vb;
        if vb.last().is_some_and(|t| *t < height) {
            // The vertical leg decayed before reaching the corner.
            vb.push(height);
        }
        main_pieces.push(Piece { g: Box::new(v), breaks: vb, coef: I * sgn });
    }
    let main = integrate_pieces(&main_pieces, reference, tol)?;

    let v_reference = ex0(C64::new(-sigma0, 0.0)).re;
    let v_reference = if v_reference.is_finite() { v_reference } else { 0.0 };
    let ex = move |s: C64| ap_exponent(f, z, s, v_reference);
    // Vertical corrections with kernels 2iq/(q-1), q = e^{2πis}, and
    // 2ip/(1-p), p = e^{-2πis}, both decaying like e^{-2π|t|}.
    let upper_g = move |t: f64| {
        let s = C64::new(-sigma0, t);
        let ln_q = I * TAU * s;
        ex(s) + ln_q - (ln_q.exp() - 1.0).ln()
    };
    let lower_g = move |t: f64| {
        let s = C64::new(-sigma0, -t);
        let ln_p = -I * TAU * s;
        ex(s) + ln_p - (C64::new(1.0, 0.0) - ln_p.exp()).ln()
    };
    let pu = march_ray(&upper_g, 0.0, march_cfg(0.25), tol.truncation_drop)?;
    let pl = march_ray(&lower_g, 0.0, march_cfg(0.25), tol.truncation_drop)?;
    let upper = integrate_pieces(&[Piece { g: Box::new(upper_g), breaks: pu.breaks, coef: -I }], v_reference, tol)?;
    let lower = integrate_pieces(&[Piece { g: Box::new(lower_g), breaks: pl.breaks, coef: -I }], v_reference, tol)?;
    let one = C64::new(1.0, 0.0);
    let total = combine(&[(one, main), (one, upper), (one, lower)]);
    Ok(AbelPlanaValue {
        total: total.normalized(),
        main: main.normalized(),
        upper: upper.normalized(),
        lower: lower.normalized(),
        path_height: yh,
    })
}

/// `∫_0^∞ t^n K(t) dt`.
pub fn moment(f: &AdmissibleFunction, n: u32) -> Result<QuadratureResult> {
    moment_with(f, n, &Tolerances::quadrature().with_rel_tol(1e-9))
}

/// Vertical abscissa for `K(t)`: the positive-ray saddle rounded to a grid
/// of ratio `2^(1/8)`, so that nearby `t` share contour nodes.
fn moment_abscissa(f: &AdmissibleFunction, log_t: f64) -> f64 {
    match solve_real_log(f, log_t, &Tolerances::root_finding()) {
        Ok(x) => {
            let q = (x / LN_2 * 8.0).round() / 8.0;
            (q * LN_2).min(DIRECT_LOG_LIMIT).exp().max(0.5)
        }
        Err(_) => 0.5,
    }
}

/// `∫_0^1` after `t = e^{-v}`, plus `∫_1^T` with `T` where `t^n |K|` has
/// fallen below `truncation_drop` of its peak.
pub fn moment_with(f: &AdmissibleFunction, n: u32, tol: &Tolerances) -> Result<QuadratureResult> {
    tol.validate()?;
    let inner = Tolerances { rel_tol: (tol.rel_tol * 1e-2).max(1e-13), ..*tol };
    let failure: RefCell<Option<MellinError>> = RefCell::new(None);
    let inner_nodes = Cell::new(0usize);
    let inner_err = Cell::new(0.0f64);
    let k_at = |log_t: f64| -> C64 {
        if failure.borrow().is_some() {
            return C64::new(0.0, 0.0);
        }
        let z = match LogSurfacePoint::new(log_t, 0.0) {
            Ok(z) => z,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                return C64::new(0.0, 0.0);
            }
        };
        let contour = ContourSpec::vertical(moment_abscissa(f, log_t)).with_tolerances(inner);
        match eval_K(f, z, &contour) {
            Ok(r) => {
                inner_nodes.set(inner_nodes.get() + r.nodes);
                let scale = (r.log_scale + n as f64 * log_t).exp();
                inner_err.set(inner_err.get() + r.abs_error * scale);
                r.value * scale
            }
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                C64::new(0.0, 0.0)
            }
        }
    };
    let nf = n as f64;
    // [0, 1]: t^{n+1} K(t) dv with t = e^{-v}
    let v_max = 45.0 / (nf + 0.5);
    let mut vb = vec![0.0];
    let mut v = 0.125f64.min(v_max);
    while v < v_max {
        vb.push(v);
        v *= 2.0;
    }
    vb.push(v_max);
    let low = |v: f64| k_at(-v) * (-v).exp();
    let r_low = integrate(&low, &vb, tol)?;
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }

    // [1, T]
    let mut tb = vec![1.0];
    let mut peak = 0.0f64;
    let mut quiet = 0;
    let mut t = 1.0f64;
    let mut step = 0.25;
    while quiet < 2 {
        t += step;
        step *= 1.25;
        let m = k_at(t.ln()).norm();
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        peak = peak.max(m);
        tb.push(t);
        if m < tol.truncation_drop * peak {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if tb.len() > 400 {
            return Err(MellinError::Quadrature { nodes: 0, abs_error: f64::INFINITY, worst_lo: 1.0, worst_hi: t });
        }
    }
    let high = |t: f64| k_at(t.ln());
    let r_high = integrate(&high, &tb, tol)?;
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let value = r_low.value + r_high.value;
    let abs_error = r_low.abs_error + r_high.abs_error + inner.rel_tol * (r_low.l1 + r_high.l1);
    Ok(QuadratureResult {
        value,
        abs_error,
        nodes: inner_nodes.get(),
        converged: r_low.converged && r_high.converged && abs_error <= (tol.rel_tol * value.norm()).max(tol.abs_tol),
        log_scale: 0.0,
    })
}
