//! Numerical probe of the admissibility conditions on a finite grid.

use serde::{Deserialize, Serialize};

use super::AdmissibleFunction;
use crate::types::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditThresholds {
    /// Bound on `ρ|ε'|/ε` over the tail of the grid.
    pub slow_variation: f64,
    /// Bound on `|ε(ρe^{iθ})/ε(ρ) - 1|` over the fan at the grid maximum.
    pub sector: f64,
    /// `ε` counts as bounded while its log-log slope over the tail stays below this.
    pub bounded_slope: f64,
    /// The last decade must add at least this fraction of `∫ε/ρ`.
    pub plateau: f64,
    /// The fan spans `|θ| <= α0 - fan_margin`.
    pub fan_margin: f64,
    pub fan_points: usize,
}

impl Default for AuditThresholds {
    fn default() -> Self {
        Self { slow_variation: 0.2, sector: 0.2, bounded_slope: 0.1, plateau: 1e-3, fan_margin: 0.1, fan_points: 21 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub label: String,
    pub grid: Vec<f64>,
    pub eps: Vec<f64>,
    /// `∫_{grid[0]}^{grid[i]} ε(ρ) dρ/ρ`.
    pub partial_integrals: Vec<f64>,
    pub eps_positive: bool,
    pub a_pass: bool,
    /// Largest `ρ|ε'|/ε` over the last quarter of the grid.
    pub b_max: f64,
    pub eps_tail_slope: f64,
    pub b_pass: bool,
    pub c_max: f64,
    pub c_pass: bool,
    pub thresholds: AuditThresholds,
    pub pass: bool,
}

/// Log-spaced `[1, 1e8]`, eight points per decade.
pub fn default_audit_grid() -> Vec<f64> {
    (0..=64).map(|i| 10f64.powf(i as f64 / 8.0)).collect()
}

fn slow_ratio(f: &AdmissibleFunction, rho: f64) -> f64 {
    let s = C64::new(rho, 0.0);
    rho * f.deps(s).re.abs() / f.eps(s).re
}

fn fan_deviation(f: &AdmissibleFunction, rho: f64, margin: f64, points: usize) -> f64 {
    let e0 = f.eps_real(rho);
    let span = f.alpha0() - margin;
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let theta = -span + 2.0 * span * i as f64 / (n - 1) as f64;
            let e = f.eps(C64::from_polar(rho, theta));
            let d = (e / e0 - 1.0).norm();
            if d.is_finite() {
                d
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Probes conditions (A)–(C). Never fails; the thresholds decide `pass`.
pub fn audit_admissibility(f: &AdmissibleFunction, grid: &[f64], th: &AuditThresholds) -> AuditReport {
    let grid: Vec<f64> = grid.iter().copied().filter(|r| *r > 0.0 && r.is_finite()).collect();
    let eps: Vec<f64> = grid.iter().map(|&r| f.eps_real(r)).collect();
    let eps_positive = eps.iter().all(|e| *e > 0.0);

    let mut partial = vec![0.0; grid.len()];
    for i in 1..grid.len() {
        let dl = (grid[i] / grid[i - 1]).ln();
        partial[i] = partial[i - 1] + 0.5 * (eps[i] + eps[i - 1]) * dl;
    }
    let increasing = partial.windows(2).all(|w| w[1] > w[0]);
    let a_pass = match (grid.last(), partial.last()) {
        (Some(&top), Some(&total)) if grid.len() > 2 => {
            let start = grid.iter().position(|&r| r >= top / 10.0).unwrap_or(0);
            let inc = total - partial[start.min(partial.len() - 1)];
            increasing && total > 0.0 && inc >= th.plateau * total
        }
        _ => false,
    };

    let tail_start = grid.len() - (grid.len() / 4).max(2).min(grid.len());
    let b_max = grid[tail_start..].iter().map(|&r| slow_ratio(f, r)).map(|x| if x.is_nan() { f64::INFINITY } else { x }).fold(0.0, f64::max);
    let eps_tail_slope = if grid.len() >= 2 && eps[tail_start] > 0.0 && eps[grid.len() - 1] > 0.0 {
        (eps[grid.len() - 1] / eps[tail_start]).ln() / (grid[grid.len() - 1] / grid[tail_start]).ln()
    } else {
        f64::INFINITY
    };
    let b_pass = b_max < th.slow_variation && eps_tail_slope < th.bounded_slope && eps_positive;

    let c_max = grid.last().map(|&r| fan_deviation(f, r, th.fan_margin, th.fan_points)).unwrap_or(f64::INFINITY);
    let c_pass = c_max < th.sector;

    AuditReport {
        label: f.label().to_string(),
        grid,
        eps,
        partial_integrals: partial,
        eps_positive,
        a_pass,
        b_max,
        eps_tail_slope,
        b_pass,
        c_max,
        c_pass,
        thresholds: *th,
        pass: a_pass && b_pass && c_pass,
    }
}

/// Smallest default-grid point from which `ρ|ε'|/ε` stays below the (B)
/// threshold and the (C) fan deviation at that point is below its threshold.
/// Falls back to the grid maximum.
pub(crate) fn estimate_rho0(f: &AdmissibleFunction) -> f64 {
    let th = AuditThresholds::default();
    let grid = default_audit_grid();
    let b: Vec<bool> = grid.iter().map(|&r| slow_ratio(f, r) < th.slow_variation).collect();
    let mut tail_ok = vec![false; grid.len() + 1];
    tail_ok[grid.len()] = true;
    for i in (0..grid.len()).rev() {
        tail_ok[i] = tail_ok[i + 1] && b[i];
    }
    for (i, &r) in grid.iter().enumerate() {
        if tail_ok[i] && fan_deviation(f, r, th.fan_margin, 9) < th.sector {
            return r;
        }
    }
    *grid.last().expect("grid is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::spec::{build, FunctionSpec};
    use crate::types::Jet;

    #[test]
    fn gamma_passes() {
        let f = build(&FunctionSpec::gamma_shift(1.0)).unwrap();
        let r = audit_admissibility(&f, &default_audit_grid(), &AuditThresholds::default());
        assert!(r.pass, "{r:?}");
        assert!((r.eps.last().unwrap() - 1.0).abs() < 1e-6);
        // the fan reaches close to the poles on the negative axis for small ρ
        assert!(f.rho0() > 1.0 && f.rho0() < 100.0);
    }

    #[test]
    fn exp_square_fails_boundedness() {
        let f = AdmissibleFunction::custom("exp(s^2)", 1.0, std::f64::consts::PI, |s| {
            Jet::new(s * s, s * 2.0, C64::new(2.0, 0.0))
        });
        let r = audit_admissibility(&f, &default_audit_grid(), &AuditThresholds::default());
        assert!(!r.b_pass);
        assert!(!r.pass);
    }
}
