//! The saddle-point equation `Φ(s) = log z`.
//!
//! All iterations run in `σ = log s`, where `Φ` is evaluated through
//! [`AdmissibleFunction::phi_log`]. This keeps `θ_z = Im σ` unwrapped and
//! lets the solver follow saddles whose modulus is far outside the double
//! range, as happens for slowly growing `γ`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::catalog::{AdmissibleFunction, DIRECT_LOG_LIMIT};
use crate::error::{MellinError, Result};
use crate::types::{LogSurfacePoint, Tolerances, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    /// `ρ_z e^{iθ_z}`; infinite when `ρ_z` exceeds the double range.
    pub s_z: C64,
    pub rho_z: f64,
    /// `ln ρ_z`, always finite.
    pub log_rho: f64,
    pub theta_z: f64,
    /// `|Φ(s_z) - log z|`.
    pub residual: f64,
    pub iterations: usize,
}

impl SaddleSolution {
    fn from_sigma(sigma: C64, residual: f64, iterations: usize) -> Self {
        let rho = sigma.re.exp();
        let s = if rho.is_finite() { C64::from_polar(rho, sigma.im) } else { C64::new(f64::INFINITY, f64::INFINITY) };
        Self { s_z: s, rho_z: rho, log_rho: sigma.re, theta_z: sigma.im, residual, iterations }
    }

    pub fn log_s(&self) -> C64 {
        C64::new(self.log_rho, self.theta_z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    Inside { alpha: f64 },
    Outside,
    NoSaddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionTag {
    pub kind: RegionKind,
    pub rho0_used: f64,
}

impl RegionTag {
    pub fn is_inside(&self, alpha: f64) -> bool {
        matches!(self.kind, RegionKind::Inside { alpha: a } if a <= alpha + 1e-15)
    }

    pub fn name(&self) -> String {
        match self.kind {
            RegionKind::Inside { alpha } => format!("inside({alpha:.6})"),
            RegionKind::Outside => "outside".into(),
            RegionKind::NoSaddle => "no_saddle".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// The continuation stops once `|θ|` reaches `α0 - delta`.
    pub delta: f64,
    /// Region tags require `ρ_z > rho0`.
    pub rho0: f64,
    pub tol: Tolerances,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { delta: 0.1, rho0: 0.0, tol: Tolerances::root_finding() }
    }
}

/// Smallest modulus searched on the positive ray.
const RHO_MIN: f64 = 1e-8;
const MAX_LOG_RHO: f64 = 1e7;

fn phi(f: &AdmissibleFunction, sigma: C64) -> Result<(C64, C64)> {
    let (p, dp) = f.phi_log(sigma)?;
    if !(p.re.is_finite() && p.im.is_finite() && dp.re.is_finite() && dp.im.is_finite()) {
        return Err(MellinError::NoSaddle(format!("Φ is not finite at log s = {sigma}")));
    }
    Ok((p, dp))
}

fn residual_target(tol: &Tolerances, w: C64) -> f64 {
    // The residual invariant is stated relative to 1 + |log z|; iterate
    // two orders of magnitude below it.
    1e-2 * tol.rel_tol * (1.0 + w.norm())
}

/// `ln ρ` of the positive-ray saddle for `log z = log_r`.
pub fn solve_real_log(f: &AdmissibleFunction, log_r: f64, tol: &Tolerances) -> Result<f64> {
    if !log_r.is_finite() {
        return Err(MellinError::InvalidInput(format!("log_r must be finite, got {log_r}")));
    }
    let g = |x: f64| -> Result<(f64, f64)> {
        let (p, dp) = phi(f, C64::new(x, 0.0))?;
        Ok((p.re - log_r, dp.re))
    };
    let mut lo = RHO_MIN.ln();
    let (g_lo, _) = g(lo)?;
    if g_lo > 0.0 {
        return Err(MellinError::NoSaddle(format!(
            "log_r = {log_r} is below Φ({RHO_MIN:e}) = {:.6}",
            g_lo + log_r
        )));
    }
    let mut step = 1.0;
    let mut hi = lo + step;
    loop {
        let (gh, _) = g(hi)?;
        if gh >= 0.0 {
            break;
        }
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if hi > MAX_LOG_RHO {
            return Err(MellinError::RootFinding(format!(
                "no bracket for Φ(ρ) = {log_r} below ln ρ = {MAX_LOG_RHO:e}"
            )));
        }
    }
    let target = residual_target(tol, C64::new(log_r, 0.0));
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (gx, dg) = g(x)?;
        if gx.abs() <= target {
            return Ok(x);
        }
        if gx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - gx / dg;
        x = if dg > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
            let (gx, _) = g(x)?;
            if gx.abs() <= tol.rel_tol * (1.0 + log_r.abs()) {
                return Ok(x);
            }
            break;
        }
    }
    Err(MellinError::RootFinding(format!("bracket [{lo}, {hi}] in ln ρ collapsed without meeting the residual target")))
}

/// Positive-ray saddle `ρ` with `Φ(ρ) = log_r`.
pub fn solve_real(f: &AdmissibleFunction, log_r: f64) -> Result<f64> {
    let x = solve_real_log(f, log_r, &Tolerances::root_finding())?;
    if x > DIRECT_LOG_LIMIT {
        return Err(MellinError::Overflow { exponent_re: x });
    }
    Ok(x.exp())
}

struct Newton {
    sigma: C64,
    iterations: usize,
}

/// At most `max_iter` Newton steps on `Φ(e^σ) = w`.
fn newton(f: &AdmissibleFunction, mut sigma: C64, w: C64, target: f64, max_iter: usize, singular: f64) -> Result<Option<Newton>> {
    for it in 0..=max_iter {
        let (p, dp) = phi(f, sigma)?;
        if (p - w).norm() <= target {
            return Ok(Some(Newton { sigma, iterations: it }));
        }
        if it == max_iter {
            break;
        }
        if dp.norm() < singular {
            let s = C64::from_polar(sigma.re.min(DIRECT_LOG_LIMIT).exp(), sigma.im);
            return Err(MellinError::SingularJacobian { s_re: s.re, s_im: s.im });
        }
        sigma -= (p - w) / dp;
    }
    Ok(None)
}

fn continuation(
    f: &AdmissibleFunction,
    w: C64,
    sigma0: C64,
    limit: f64,
    target: f64,
    singular: f64,
    max_dtheta: f64,
) -> Result<(C64, usize)> {
    let psi = w.im;
    let log_r = w.re;
    let mut sigma = sigma0;
    let mut t = 0.0f64;
    let (_, dp0) = phi(f, sigma)?;
    let rate = (psi / dp0).norm().max(1e-300);
    let mut dt = (max_dtheta / rate).min(1.0);
    let mut total_iters = 0usize;
    let mut steps = 0usize;
    while t < 1.0 {
        steps += 1;
        if steps > 100_000 || dt < 1e-12 {
            return Err(MellinError::Continuation { last_t: t });
        }
        let h = dt.min(1.0 - t);
        let (_, dp) = phi(f, sigma)?;
        if dp.norm() < singular {
            return Err(MellinError::SingularJacobian { s_re: sigma.re, s_im: sigma.im });
        }
        let pred = sigma + C64::new(0.0, psi) * h / dp;
        let wt = C64::new(log_r, psi * (t + h));
        let step_target = if t + h >= 1.0 { target } else { target * 1e3 };
        match newton(f, pred, wt, step_target, 5, singular)? {
            Some(n) => {
                let jump = (n.sigma.im - sigma.im).abs();
                if jump > 4.0 * max_dtheta {
                    dt = h * 0.5;
                    continue;
                }
                sigma = n.sigma;
                t += h;
                total_iters += n.iterations;
                if sigma.im.abs() >= limit {
                    return Err(MellinError::LeftSector { last_t: t, theta: sigma.im, limit });
                }
                if n.iterations <= 2 {
                    dt = h * 1.5;
                }
                let (_, dpn) = phi(f, sigma)?;
                let rate = (psi / dpn).norm().max(1e-300);
                dt = dt.min(max_dtheta / rate);
            }
            None => dt = h * 0.5,
        }
    }
    Ok((sigma, total_iters))
}

/// Saddle `s_z` for `z` on the surface, continued from the positive ray at
/// fixed `|z|` through `arg z = tψ`, `t ∈ [0, 1]`, with the tightest region tag.
pub fn solve(f: &AdmissibleFunction, z: LogSurfacePoint, opts: &SolveOptions) -> Result<(SaddleSolution, RegionTag)> {
    opts.tol.validate()?;
    let limit = f.alpha0() - opts.delta;
    let w = z.log();
    let target = residual_target(&opts.tol, w);
    let x0 = solve_real_log(f, z.log_r, &opts.tol)?;
    let (p0, dp0) = phi(f, C64::new(x0, 0.0))?;
    let eps_scale = if x0 < DIRECT_LOG_LIMIT { f.eps_real(x0.exp()).abs() } else { dp0.norm() };
    let singular = 1e-14 * eps_scale.max(f64::MIN_POSITIVE);

    let (sigma, iterations) = if z.psi == 0.0 {
        (C64::new(x0, 0.0), 0)
    } else {
        match continuation(f, w, C64::new(x0, 0.0), limit, target, singular, 0.05) {
            Ok(r) => r,
            Err(MellinError::Continuation { .. }) | Err(MellinError::SingularJacobian { .. }) => {
                continuation(f, w, C64::new(x0, 0.0), limit, target, singular, 0.005)?
            }
            Err(e) => return Err(e),
        }
    };
    let (p, _) = phi(f, sigma)?;
    let residual = if z.psi == 0.0 { (p0 - w).norm() } else { (p - w).norm() };
    let sol = SaddleSolution::from_sigma(sigma, residual, iterations);
    let tag = tightest_tag(f, &sol, opts);
    Ok((sol, tag))
}

fn tightest_tag(f: &AdmissibleFunction, sol: &SaddleSolution, opts: &SolveOptions) -> RegionTag {
    let limit = f.alpha0() - opts.delta;
    let mut candidates = [FRAC_PI_2 - opts.delta, FRAC_PI_2 + opts.delta, limit];
    candidates.sort_by(|a, b| a.total_cmp(b));
    let kind = if sol.rho_z > opts.rho0 {
        candidates
            .iter()
            .copied()
            .filter(|a| *a <= limit + 1e-15)
            .find(|a| sol.theta_z.abs() < *a)
            .map(|alpha| RegionKind::Inside { alpha })
            .unwrap_or(RegionKind::Outside)
    } else {
        RegionKind::Outside
    };
    RegionTag { kind, rho0_used: opts.rho0 }
}

/// Membership of `z` in `Ω(alpha, rho0)`.
pub fn classify(f: &AdmissibleFunction, z: LogSurfacePoint, alpha: f64, rho0: f64) -> RegionTag {
    let a0 = f.alpha0();
    let delta = if alpha < a0 - 0.1 { 0.1 } else { 0.5 * (a0 - alpha).max(1e-6) };
    let opts = SolveOptions { delta, rho0, ..Default::default() };
    let kind = match solve(f, z, &opts) {
        Ok((sol, _)) if sol.theta_z.abs() < alpha && sol.rho_z > rho0 => RegionKind::Inside { alpha },
        Ok(_) => RegionKind::Outside,
        Err(MellinError::LeftSector { .. }) => RegionKind::Outside,
        Err(_) => RegionKind::NoSaddle,
    };
    RegionTag { kind, rho0_used: rho0 }
}

/// `θ_z` at `(log_r, ψ)`; `None` when the saddle left the sector first.
fn theta_at(f: &AdmissibleFunction, log_r: f64, psi: f64, opts: &SolveOptions) -> Result<Option<f64>> {
    let z = LogSurfacePoint::new(log_r, psi)?;
    match solve(f, z, opts) {
        Ok((sol, _)) => Ok(Some(sol.theta_z)),
        Err(MellinError::LeftSector { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The `ψ > 0` with `θ_z(e^{log_r + iψ}) = alpha`, i.e. the edge of
/// `Ω(alpha)` on the circle `|z| = e^{log_r}`.
pub fn boundary_psi(f: &AdmissibleFunction, log_r: f64, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha < 0.0 {
        return boundary_psi(f, log_r, -alpha).map(|p| -p);
    }
    let a0 = f.alpha0();
    if alpha >= a0 {
        return Err(MellinError::InvalidInput(format!("alpha = {alpha} must be below α0 = {a0}")));
    }
    let delta = (0.5 * (a0 - alpha)).min(0.1);
    let opts = SolveOptions { delta, ..Default::default() };
    let x0 = solve_real_log(f, log_r, &opts.tol)?;
    let (_, dp) = phi(f, C64::new(x0, 0.0))?;
    // Im Φ ≈ θ ε with ε ≈ dΦ/dσ on the ray.
    let eps = dp.re.max(1e-300);
    let cap = std::f64::consts::PI * eps.max(1.0) * 4.0;
    let tol_theta = 1e-8;

    let mut lo = 0.0f64;
    let mut f_lo = -alpha;
    let mut hi = (alpha * eps).min(cap);
    let mut f_hi = loop {
        match theta_at(f, log_r, hi, &opts)? {
            Some(th) if th >= alpha => break Some(th - alpha),
            None => break None,
            Some(th) => {
                lo = hi;
                f_lo = th - alpha;
                hi *= 2.0;
                if hi > cap {
                    return Err(MellinError::RootFinding(format!(
                        "θ_z stays below {alpha} for ψ up to {cap:.6e} at log_r = {log_r}"
                    )));
                }
            }
        }
    };
    // Illinois regula falsi; bisection while the upper end has no value.
    let mut side = 0i32;
    for _ in 0..200 {
        let mid = match f_hi {
            Some(fh) => {
                let m = (lo * fh - hi * f_lo) / (fh - f_lo);
                if m > lo && m < hi {
                    m
                } else {
                    0.5 * (lo + hi)
                }
            }
            None => 0.5 * (lo + hi),
        };
        match theta_at(f, log_r, mid, &opts)? {
            Some(th) => {
                let fm = th - alpha;
                if fm.abs() < tol_theta {
                    return Ok(mid);
                }
                if fm < 0.0 {
                    lo = mid;
                    f_lo = fm;
                    if side == -1 {
                        if let Some(fh) = f_hi.as_mut() {
                            *fh *= 0.5;
                        }
                    }
                    side = -1;
                } else {
                    hi = mid;
                    f_hi = Some(fm);
                    if side == 1 {
                        f_lo *= 0.5;
                    }
                    side = 1;
                }
            }
            None => {
                hi = mid;
                f_hi = None;
                side = 0;
            }
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Err(MellinError::RootFinding(format!("boundary search stalled in ψ ∈ [{lo:.6e}, {hi:.6e}]")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build, FunctionSpec};
    use std::f64::consts::PI;

    fn gamma() -> AdmissibleFunction {
        build(&FunctionSpec::gamma_shift(0.0)).unwrap()
    }

    #[test]
    fn digamma_root_near_ten() {
        let rho = solve_real(&gamma(), 10f64.ln()).unwrap();
        assert!(rho > 10.0 && rho < 11.0, "{rho}");
    }

    #[test]
    fn positive_ray_is_real() {
        let z = LogSurfacePoint::new(3.0, 0.0).unwrap();
        let (sol, tag) = solve(&gamma(), z, &SolveOptions::default()).unwrap();
        assert_eq!(sol.theta_z, 0.0);
        assert!(sol.residual < 1e-10 * 4.0);
        assert!(tag.is_inside(FRAC_PI_2 - 0.1));
    }

    #[test]
    fn below_range_is_no_saddle() {
        let f = build(&FunctionSpec::gamma_shift(1.0)).unwrap();
        // ψ(ρ+1) >= ψ(1) = -0.577...
        assert!(matches!(solve_real(&f, -5.0), Err(MellinError::NoSaddle(_))));
    }

    #[test]
    fn conjugate_points_give_conjugate_saddles() {
        let f = gamma();
        let z = LogSurfacePoint::new(20f64.ln(), PI / 4.0).unwrap();
        let (a, _) = solve(&f, z, &SolveOptions::default()).unwrap();
        let (b, _) = solve(&f, z.conj(), &SolveOptions::default()).unwrap();
        assert!((a.s_z - b.s_z.conj()).norm() < 1e-10 * a.s_z.norm());
    }

    #[test]
    fn decaying_eps_leaves_the_sector() {
        let f = build(&FunctionSpec::iterated_log(1.0, 1.0, 1, None)).unwrap();
        let z = LogSurfacePoint::new(3.0, 1.0).unwrap();
        let tag = classify(&f, z, FRAC_PI_2 + 0.05, 0.0);
        assert_eq!(tag.kind, RegionKind::Outside);
    }

    #[test]
    fn boundary_is_odd_and_vanishes_at_zero() {
        let f = gamma();
        assert_eq!(boundary_psi(&f, 3.0, 0.0).unwrap(), 0.0);
        let p = boundary_psi(&f, 3.0, 1.0).unwrap();
        assert!((boundary_psi(&f, 3.0, -1.0).unwrap() + p).abs() < 1e-12);
        let (sol, _) = solve(&f, LogSurfacePoint::new(3.0, p).unwrap(), &SolveOptions::default()).unwrap();
        assert!((sol.theta_z - 1.0).abs() < 1e-8);
    }
}
