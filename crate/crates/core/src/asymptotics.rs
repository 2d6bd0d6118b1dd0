//! Leading-order saddle-point asymptotics of `K` and `E`, and the local
//! Gaussian model of the contour integral near the saddle.
//!
//! With `s = s_z`, `L/L' = s/ε(s)` and `s²L'/L = s ε(s)`:
//!
//! * `K(z) ≈ sqrt(s/(2π ε)) e^{-s ε}`
//! * `z E(z) + 1/γ(0) ≈ sqrt(2π s/ε) e^{s ε}` inside `Ω(π/2 - δ)`, `o(1)` outside `Ω(π/2 + δ)`.
//!
//! The square root is `exp((log s - log ε)/2)` with `log s = log ρ_z + iθ_z`
//! taken from the continuation, so it is positive on `R_+` and continuous
//! along the homotopy in `arg z` without snapping to the principal branch.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::catalog::AdmissibleFunction;
use crate::error::{MellinError, Result};
use crate::quadrature::integrate;
use crate::saddle::{solve, RegionKind, RegionTag, SaddleSolution, SolveOptions};
use crate::types::{LogSurfacePoint, QuadratureResult, Tolerances, C64, MAX_EXP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticValue {
    /// The asserted quantity is `value · exp(log_scale)`.
    pub value: C64,
    pub log_scale: f64,
    pub region: RegionTag,
    /// Width of the additive `o(1)` band for `E`; zero for `K`.
    pub additive_band: f64,
    pub saddle: Option<SaddleSolution>,
    pub warnings: Vec<String>,
}

impl AsymptoticValue {
    fn from_log(lv: C64, region: RegionTag, saddle: Option<SaddleSolution>) -> Self {
        let (value, log_scale) = if lv.re.abs() < MAX_EXP - 10.0 { (lv.exp(), 0.0) } else { (C64::from_polar(1.0, lv.im), lv.re) };
        Self { value, log_scale, region, additive_band: 0.0, saddle, warnings: Vec::new() }
    }

    /// `log(value) + log_scale`; `-inf` real part for a zero value.
    pub fn log_value(&self) -> C64 {
        self.value.ln() + self.log_scale
    }

    /// `value · exp(log_scale)`; may overflow or underflow.
    pub fn scaled_value(&self) -> C64 {
        self.value * self.log_scale.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticOptions {
    /// Margin for the K sector `Ω(α0 - δ)`.
    pub delta_k: f64,
    /// Half-width of the E transition annulus around `arg s_z = π/2`.
    pub delta_e: f64,
    /// Exponent `1 - δ1` of the half-length `ρ_z^{1-δ1}` of the local segment.
    pub delta1: f64,
}

impl Default for AsymptoticOptions {
    fn default() -> Self {
        Self { delta_k: 0.1, delta_e: 0.05, delta1: 0.125 }
    }
}

/// `(log s - log ε(s))/2`, the log of `sqrt(L/L')` on the continued branch.
fn log_sqrt_ratio(f: &AdmissibleFunction, sol: &SaddleSolution) -> Result<(C64, C64)> {
    let eps = f.eps(sol.s_z);
    if !(eps.norm() > 0.0) || !eps.re.is_finite() {
        return Err(MellinError::InvalidInput(format!("ε(s_z) = {eps} is not usable")));
    }
    Ok((0.5 * (sol.log_s() - eps.ln()), eps))
}

fn rho0_warning(f: &AdmissibleFunction, sol: &SaddleSolution) -> Option<String> {
    let rho0 = f.rho0();
    (sol.rho_z < rho0).then(|| format!("rho_z = {:.4e} is below the audited rho0 = {rho0:.4e}", sol.rho_z))
}

#[allow(non_snake_case)]
pub fn K_asymptotic(f: &AdmissibleFunction, z: LogSurfacePoint) -> Result<AsymptoticValue> {
    K_asymptotic_with(f, z, &AsymptoticOptions::default())
}

/// `sqrt(s/(2π ε)) e^{-s ε}` at `s = s_z`; rejects `z` outside `Ω(α0 - δ)`.
#[allow(non_snake_case)]
pub fn K_asymptotic_with(f: &AdmissibleFunction, z: LogSurfacePoint, opts: &AsymptoticOptions) -> Result<AsymptoticValue> {
    let alpha = f.alpha0() - opts.delta_k;
    let solved = solve(f, z, &SolveOptions { delta: opts.delta_k, ..SolveOptions::default() });
    let (sol, tag) = match solved {
        Ok(x) => x,
        Err(e @ (MellinError::LeftSector { .. } | MellinError::NoSaddle(_))) => {
            return Err(MellinError::OutsideRegion(format!("K asymptotic not applicable at {z:?}: {e}")));
        }
        Err(e) => return Err(e),
    };
    if !tag.is_inside(alpha) {
        return Err(MellinError::OutsideRegion(format!(
            "K asymptotic not applicable: theta_z = {:.6} outside |theta| < {alpha:.6}",
            sol.theta_z
        )));
    }
    let (half, eps) = log_sqrt_ratio(f, &sol)?;
    let lv = half - 0.5 * TAU.ln() - sol.s_z * eps;
    let mut out = AsymptoticValue::from_log(lv, tag, Some(sol));
    out.warnings.extend(rho0_warning(f, &sol));
    Ok(out)
}

/// Largest `ε` over the top decades of the audit grid, as a stand-in for
/// `limsup ε`.
fn eps_limsup(f: &AdmissibleFunction) -> f64 {
    (48..=64).map(|i| f.eps_real(10f64.powf(i as f64 / 8.0))).fold(f64::NEG_INFINITY, f64::max)
}

#[allow(non_snake_case)]
pub fn E_asymptotic(f: &AdmissibleFunction, z: LogSurfacePoint) -> Result<AsymptoticValue> {
    E_asymptotic_with(f, z, &AsymptoticOptions::default())
}

/// Asserted value of `z E(z) + 1/γ(0)`: `sqrt(2π s/ε) e^{s ε}` when
/// `|θ_z| < π/2 + δ`, zero with `region = outside` beyond. In the annulus
/// `π/2 - δ <= |θ_z| < π/2 + δ` the formula is returned with a warning,
/// since the `o(1)` term may be of the same order there.
#[allow(non_snake_case)]
pub fn E_asymptotic_with(f: &AdmissibleFunction, z: LogSurfacePoint, opts: &AsymptoticOptions) -> Result<AsymptoticValue> {
    let mut warnings = Vec::new();
    let limsup = eps_limsup(f);
    if !(limsup < 2.0) {
        warnings.push(format!("limsup ε appears to be {limsup:.4} >= 2; the E asymptotic is not established"));
    }
    let band = 1.0f64.max(f.inv_gamma_at_zero().abs());
    let outer = FRAC_PI_2 + opts.delta_e;
    let outside = |warnings: Vec<String>, sol: Option<SaddleSolution>| AsymptoticValue {
        value: C64::new(0.0, 0.0),
        log_scale: 0.0,
        region: RegionTag { kind: RegionKind::Outside, rho0_used: 0.0 },
        additive_band: band,
        saddle: sol,
        warnings,
    };
    // The continuation only needs to reach |θ| = π/2 + δ.
    let delta = (f.alpha0() - outer).max(1e-3);
    let (sol, _) = match solve(f, z, &SolveOptions { delta, ..SolveOptions::default() }) {
        Ok(x) => x,
        Err(MellinError::LeftSector { .. }) if f.alpha0() > outer => return Ok(outside(warnings, None)),
        Err(MellinError::NoSaddle(m)) => {
            return Err(MellinError::IndeterminateRegion(format!("no saddle point for {z:?} and not provably outside: {m}")));
        }
        Err(e) => return Err(e),
    };
    if sol.theta_z.abs() >= outer {
        return Ok(outside(warnings, Some(sol)));
    }
    let inner = FRAC_PI_2 - opts.delta_e;
    if sol.theta_z.abs() >= inner {
        warnings.push(format!(
            "theta_z = {:.6} lies in the transition annulus [{inner:.4}, {outer:.4}); the alternative asserted value is 0",
            sol.theta_z
        ));
    }
    let (half, eps) = log_sqrt_ratio(f, &sol)?;
    let lv = half + 0.5 * TAU.ln() + sol.s_z * eps;
    let kind = RegionKind::Inside { alpha: if sol.theta_z.abs() < inner { inner } else { outer } };
    let mut out = AsymptoticValue::from_log(lv, RegionTag { kind, rho0_used: 0.0 }, Some(sol));
    out.additive_band = band;
    warnings.extend(rho0_warning(f, &sol));
    out.warnings = warnings;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalGaussian {
    /// `∫ e^{G(z,s)} ds` over the segment.
    pub integral: QuadratureResult,
    /// `i sqrt(2π L/L') e^{G(z, s_z)}`, on the scale of `integral`.
    pub model: C64,
    pub ratio: C64,
    pub half_length: f64,
    pub saddle: SaddleSolution,
}

pub fn local_gaussian_saddle(f: &AdmissibleFunction, z: LogSurfacePoint) -> Result<LocalGaussian> {
    local_gaussian_saddle_with(f, z, &AsymptoticOptions::default())
}

/// Integrates `e^{G(z,s)}`, `G = log γ(s) - s log z`, over
/// `s_z + i t e^{iθ_z/2}`, `|t| <= ρ_z^{1-δ1}`, scaled by `e^{-G(z, s_z)}`.
pub fn local_gaussian_saddle_with(f: &AdmissibleFunction, z: LogSurfacePoint, opts: &AsymptoticOptions) -> Result<LocalGaussian> {
    let alpha = f.alpha0() - opts.delta_k;
    let (sol, tag) = solve(f, z, &SolveOptions { delta: opts.delta_k, ..SolveOptions::default() })?;
    if !tag.is_inside(alpha) {
        return Err(MellinError::OutsideRegion(format!("theta_z = {:.6} outside |theta| < {alpha:.6}", sol.theta_z)));
    }
    let w = z.log();
    let g0 = f.log_gamma(sol.s_z) - sol.s_z * w;
    let dir = C64::new(0.0, 1.0) * C64::from_polar(1.0, sol.theta_z / 2.0);
    let half_length = sol.rho_z.powf(1.0 - opts.delta1);
    let integrand = |t: f64| {
        let s = sol.s_z + dir * t;
        (f.log_gamma(s) - s * w - g0).exp() * dir
    };
    let panels = 64;
    let breaks: Vec<f64> = (0..=panels).map(|i| -half_length + 2.0 * half_length * i as f64 / panels as f64).collect();
    let r = integrate(&integrand, &breaks, &Tolerances::quadrature())?;
    let integral = QuadratureResult { value: r.value, abs_error: r.abs_error, nodes: r.nodes, converged: r.converged, log_scale: g0.re };
    let (half, _) = log_sqrt_ratio(f, &sol)?;
    // e^{i Im G0} is kept in the model so the ratio is scale-free.
    let model = C64::new(0.0, 1.0) * (half + 0.5 * TAU.ln() + C64::new(0.0, g0.im)).exp();
    Ok(LocalGaussian { integral, model, ratio: r.value / model, half_length, saddle: sol })
}

/// Two-term expansion of the edge `|ψ| = Ψ(r)` of `Ω(π/2)` for
/// `L(s) = log^β(s+e)`:
/// `Ψ(r) = (πβ/2)(r^{-1/β} + (π²/8 - 1/2) r^{-3/β})`.
pub fn boundary_psi_log_power(beta: f64, log_r: f64) -> f64 {
    let x = (-log_r / beta).exp();
    PI * beta / 2.0 * (x + (PI * PI / 8.0 - 0.5) * x.powi(3))
}
