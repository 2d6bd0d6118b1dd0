//! One evaluator per verb, each mapping a surface point to a [`Record`].

use std::f64::consts::FRAC_PI_2;

use mellin_core::asymptotics::{E_asymptotic, K_asymptotic, AsymptoticValue};
use mellin_core::saddle::{boundary_psi, solve, SaddleSolution, SolveOptions};
use mellin_core::transforms::{
    eval_E_series_with, eval_K, eval_abel_plana_rhs_with, moment_with, series_tolerances, ContourSpec,
};
use mellin_core::{AdmissibleFunction, LogSurfacePoint, MellinError, QuadratureResult, Result, Tolerances, C64};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::output::{Record, Row};

/// Settings shared by every point of one invocation.
pub struct Context {
    pub rel_tol: Option<f64>,
    pub max_nodes: Option<usize>,
    pub contour: Option<ContourSpec>,
}

impl Context {
    pub fn tolerances(&self, base: Tolerances) -> Tolerances {
        let mut t = base;
        if let Some(r) = self.rel_tol {
            t.rel_tol = r;
        }
        if let Some(n) = self.max_nodes {
            t.max_nodes = n;
        }
        t
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions { tol: self.tolerances(Tolerances::root_finding()), ..SolveOptions::default() }
    }
}

/// Best-effort saddle and region for the trailing columns.
fn saddle_columns(f: &AdmissibleFunction, z: LogSurfacePoint, ctx: &Context) -> (String, Option<f64>, Option<f64>) {
    match solve(f, z, &ctx.solve_options()) {
        Ok((s, tag)) => (tag.name(), Some(s.rho_z), Some(s.theta_z)),
        Err(MellinError::NoSaddle(_)) => ("no_saddle".into(), None, None),
        Err(_) => ("unresolved".into(), None, None),
    }
}

fn row(z: LogSurfacePoint, q: &QuadratureResult, cols: (String, Option<f64>, Option<f64>)) -> Row {
    Row {
        log_r: z.log_r,
        psi: z.psi,
        value_re: q.value.re,
        value_im: q.value.im,
        log_scale: q.log_scale,
        abs_error: q.abs_error,
        region: cols.0,
        rho_z: cols.1,
        theta_z: cols.2,
    }
}

fn object<T: Serialize>(v: T) -> Map<String, Value> {
    match serde_json::to_value(v) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    }
}

fn quadrature_json(q: &QuadratureResult) -> Value {
    json!({
        "value_re": q.value.re,
        "value_im": q.value.im,
        "log_scale": q.log_scale,
        "abs_error": q.abs_error,
        "nodes": q.nodes,
        "converged": q.converged,
    })
}

fn k_value(f: &AdmissibleFunction, z: LogSurfacePoint, ctx: &Context) -> Result<(QuadratureResult, ContourSpec)> {
    let contour = match ctx.contour {
        Some(c) => c.with_tolerances(ctx.tolerances(c.tolerances)),
        None => ContourSpec::vertical_through_saddle(f, z).with_tolerances(ctx.tolerances(Tolerances::quadrature())),
    };
    Ok((eval_K(f, z, &contour)?, contour))
}

pub fn eval_k(f: &AdmissibleFunction, z: LogSurfacePoint, ctx: &Context) -> Result<Record> {
    let (q, contour) = k_value(f, z, ctx)?;
    let extra = object(json!({ "nodes": q.nodes, "converged": q.converged, "contour": contour.kind }));
    Ok(Record { row: row(z, &q, saddle_columns(f, z, ctx)), extra })
}

pub fn eval_e(f: &AdmissibleFunction, z: LogSurfacePoint, ctx: &Context) -> Result<Record> {
    let s = eval_E_series_with(f, z, &ctx.tolerances(series_tolerances()))?;
    let extra = object(json!({
        "nodes": s.terms,
        "method": s.method,
        "z_e_plus_inverse_gamma_0": quadrature_json(&s.ze_plus),
    }));
    Ok(Record { row: row(z, &s.e, saddle_columns(f, z, ctx)), extra })
}

fn asymptotic_record(z: LogSurfacePoint, a: AsymptoticValue) -> Record {
    let (rho, theta) = a.saddle.map(|s| (Some(s.rho_z), Some(s.theta_z))).unwrap_or((None, None));
    let row = Row {
        log_r: z.log_r,
        psi: z.psi,
        value_re: a.value.re,
        value_im: a.value.im,
        log_scale: a.log_scale,
        abs_error: a.additive_band,
        region: a.region.name(),
        rho_z: rho,
        theta_z: theta,
    };
    let extra = object(json!({ "additive_band": a.additive_band, "warnings": a.warnings }));
    Record { row, extra }
}

pub fn asym_k(f: &AdmissibleFunction, z: LogSurfacePoint, _ctx: &Context) -> Result<Record> {
    Ok(asymptotic_record(z, K_asymptotic(f, z)?))
}

pub fn asym_e(f: &AdmissibleFunction, z: LogSurfacePoint, _ctx: &Context) -> Result<Record> {
    Ok(asymptotic_record(z, E_asymptotic(f, z)?))
}

#[derive(Serialize)]
struct SaddleOut {
    s_z_re: f64,
    s_z_im: f64,
    log_rho: f64,
    residual: f64,
    iterations: usize,
}

impl From<SaddleSolution> for SaddleOut {
    fn from(s: SaddleSolution) -> Self {
        Self {
            s_z_re: s.s_z.re,
            s_z_im: s.s_z.im,
            log_rho: s.log_rho,
            residual: s.residual,
            iterations: s.iterations,
        }
    }
}

/// The value columns carry `s_z`, `abs_error` the residual.
pub fn saddle(f: &AdmissibleFunction, z: LogSurfacePoint, ctx: &Context) -> Result<Record> {
    let (s, tag) = solve(f, z, &ctx.solve_options())?;
    let row = Row {
        log_r: z.log_r,
        psi: z.psi,
        value_re: s.s_z.re,
        value_im: s.s_z.im,
        log_scale: 0.0,
        abs_error: s.residual,
        region: tag.name(),
        rho_z: Some(s.rho_z),
        theta_z: Some(s.theta_z),
    };
    Ok(Record { row, extra: object(SaddleOut::from(s)) })
}

/// `σ0` for the Abel–Plana line: the middle of the admissible window.
pub fn default_sigma0(f: &AdmissibleFunction) -> f64 {
    0.5 * f.c_gamma().min(1.0)
}

pub fn abel_plana(f: &AdmissibleFunction, z: LogSurfacePoint, ctx: &Context) -> Result<Record> {
    let sigma0 = default_sigma0(f);
    let ap = eval_abel_plana_rhs_with(f, z, sigma0, &ctx.tolerances(series_tolerances()))?;
    let extra = object(json!({
        "sigma0": sigma0,
        "nodes": ap.total.nodes,
        "main": quadrature_json(&ap.main),
        "upper": quadrature_json(&ap.upper),
        "lower": quadrature_json(&ap.lower),
        "path_height": ap.path_height,
    }));
    Ok(Record { row: row(z, &ap.total, saddle_columns(f, z, ctx)), extra })
}

#[derive(Serialize)]
pub struct MomentRow {
    pub n: u32,
    pub value_re: f64,
    pub value_im: f64,
    pub log_scale: f64,
    pub abs_error: f64,
    pub nodes: usize,
    /// `log γ(n+1)`, the value the moment should reproduce.
    pub log_gamma: f64,
}

pub fn moments(f: &AdmissibleFunction, n_max: u32, ctx: &Context) -> Result<Vec<MomentRow>> {
    let tol = ctx.tolerances(Tolerances::quadrature().with_rel_tol(1e-9));
    (0..=n_max)
        .map(|n| {
            let q = moment_with(f, n, &tol)?;
            Ok(MomentRow {
                n,
                value_re: q.value.re,
                value_im: q.value.im,
                log_scale: q.log_scale,
                abs_error: q.abs_error,
                nodes: q.nodes,
                log_gamma: f.log_gamma(C64::new(n as f64 + 1.0, 0.0)).re,
            })
        })
        .collect()
}

#[derive(Serialize)]
pub struct BoundaryRow {
    pub log_r: f64,
    pub alpha: f64,
    pub psi_boundary: f64,
}

pub fn boundary(f: &AdmissibleFunction, log_r: f64, alpha: Option<f64>) -> Result<BoundaryRow> {
    let alpha = alpha.unwrap_or(FRAC_PI_2);
    Ok(BoundaryRow { log_r, alpha, psi_boundary: boundary_psi(f, log_r, alpha)? })
}

/// Numeric value, formula and their ratio at one point.
#[derive(Serialize)]
pub struct TableRow {
    pub log_r: f64,
    pub psi: f64,
    pub numeric_re: f64,
    pub numeric_im: f64,
    pub numeric_log_scale: f64,
    pub asymptotic_re: f64,
    pub asymptotic_im: f64,
    pub asymptotic_log_scale: f64,
    pub ratio_re: f64,
    pub ratio_im: f64,
    pub region: String,
    pub rho_z: Option<f64>,
    pub theta_z: Option<f64>,
}

/// For `E` the numeric side is `z E(z) + 1/γ(0)`, the quantity the
/// formula describes.
pub fn table(f: &AdmissibleFunction, z: LogSurfacePoint, which_e: bool, ctx: &Context) -> Result<TableRow> {
    let (num, a) = if which_e {
        let s = eval_E_series_with(f, z, &ctx.tolerances(series_tolerances()))?;
        (s.ze_plus, E_asymptotic(f, z)?)
    } else {
        (k_value(f, z, ctx)?.0, K_asymptotic(f, z)?)
    };
    let ratio = if a.value.norm() > 0.0 {
        num.value / a.value * (num.log_scale - a.log_scale).exp()
    } else {
        C64::new(f64::NAN, f64::NAN)
    };
    let (rho, theta) = a.saddle.map(|s| (Some(s.rho_z), Some(s.theta_z))).unwrap_or((None, None));
    Ok(TableRow {
        log_r: z.log_r,
        psi: z.psi,
        numeric_re: num.value.re,
        numeric_im: num.value.im,
        numeric_log_scale: num.log_scale,
        asymptotic_re: a.value.re,
        asymptotic_im: a.value.im,
        asymptotic_log_scale: a.log_scale,
        ratio_re: ratio.re,
        ratio_im: ratio.im,
        region: a.region.name(),
        rho_z: rho,
        theta_z: theta,
    })
}
