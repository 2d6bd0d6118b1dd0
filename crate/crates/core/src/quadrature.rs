//! Adaptive Gauss–Kronrod quadrature on real parameter intervals, plus a
//! marching planner that truncates semi-infinite rays of log-integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use crate::error::{MellinError, Result};
use crate::types::{QuadratureResult, Tolerances, C64};

/// Values that can be integrated: a small vector space with a sup norm.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        C64::norm(*self)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// Fixed-size stack of complex values integrated together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec<const N: usize>(pub [C64; N]);

impl<const N: usize> Add for CVec<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a += b;
        }
        CVec(r)
    }
}

impl<const N: usize> Sub for CVec<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a -= b;
        }
        CVec(r)
    }
}

impl<const N: usize> Mul<f64> for CVec<N> {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        CVec(self.0.map(|a| a * k))
    }
}

impl<const N: usize> QuadValue for CVec<N> {
    fn zero() -> Self {
        CVec([C64::new(0.0, 0.0); N])
    }
    fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
    fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const GK_NODES: usize = 15;

#[derive(Debug, Clone, Copy)]
struct Panel<V> {
    lo: f64,
    hi: f64,
    value: V,
    error: f64,
    /// Integral of |f| over the panel, used for the round-off floor.
    abs: f64,
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn gk15<V: QuadValue>(f: &dyn Fn(f64) -> V, lo: f64, hi: f64) -> Result<Panel<V>> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut fv = [V::zero(); 15];
    fv[7] = f(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    if !fv.iter().all(|v| v.is_finite()) {
        return Err(MellinError::Quadrature { nodes: GK_NODES, abs_error: f64::INFINITY, worst_lo: lo, worst_hi: hi });
    }
    let mut kron = fv[7] * WGK[7];
    let mut gauss = fv[7] * WG[3];
    let mut resabs = fv[7].norm() * WGK[7];
    for j in 0..7 {
        let pair = fv[j] + fv[14 - j];
        kron = kron + pair * WGK[j];
        resabs += WGK[j] * (fv[j].norm() + fv[14 - j].norm());
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[7] * (fv[7] - mean).norm();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).norm() + (fv[14 - j] - mean).norm());
    }
    let h = half.abs();
    let resasc = resasc * h;
    let resabs = resabs * h;
    let mut err = (kron - gauss).norm() * h;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    Ok(Panel { lo, hi, value: kron * half, error: err, abs: resabs })
}

struct HeapEntry(usize, f64, f64);

impl PartialEq for HeapEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, o: &Self) -> Ordering {
        // Largest error first; ties broken by position so runs are reproducible.
        self.1.total_cmp(&o.1).then_with(|| o.2.total_cmp(&self.2))
    }
}

/// Outcome of a generic adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<V> {
    pub value: V,
    pub abs_error: f64,
    pub nodes: usize,
    pub converged: bool,
    /// Integral of |f|, a scale for cancellation.
    pub l1: f64,
}

fn ordered_sum<V: QuadValue>(panels: &mut [Panel<V>]) -> (V, f64, f64) {
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    // Kahan summation, component-wise through the vector operations.
    let mut sum = V::zero();
    let mut comp = V::zero();
    let mut err = 0.0;
    let mut l1 = 0.0;
    for p in panels.iter() {
        let y = p.value - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        err += p.error;
        l1 += p.abs;
    }
    (sum, err, l1)
}

/// Adaptive global-bisection Gauss–Kronrod over the union of
/// `[breaks[i], breaks[i+1]]`. Converges when the summed error estimate is
/// below `max(rel_tol |I|, abs_tol)`. If the estimate stalls at the
/// round-off floor of a cancelling integrand the result is returned with
/// `converged = false`; exhausting `max_nodes` otherwise is an error.
pub fn integrate<V: QuadValue>(f: &dyn Fn(f64) -> V, breaks: &[f64], tol: &Tolerances) -> Result<Integral<V>> {
    if breaks.len() < 2 {
        return Err(MellinError::InvalidInput("quadrature needs at least one interval".into()));
    }
    let mut panels: Vec<Panel<V>> = Vec::with_capacity(breaks.len() * 4);
    for w in breaks.windows(2) {
        if w[1] != w[0] {
            panels.push(gk15(f, w[0], w[1])?);
        }
    }
    if panels.is_empty() {
        return Ok(Integral { value: V::zero(), abs_error: 0.0, nodes: 0, converged: true, l1: 0.0 });
    }
    let mut nodes = panels.len() * GK_NODES;
    let mut heap: BinaryHeap<HeapEntry> = panels.iter().enumerate().map(|(i, p)| HeapEntry(i, p.error, p.lo)).collect();
    let mut total = panels.iter().fold(V::zero(), |a, p| a + p.value);
    let mut err: f64 = panels.iter().map(|p| p.error).sum();
    let mut l1: f64 = panels.iter().map(|p| p.abs).sum();
    let mut refreshes = 0usize;
    loop {
        let target = (tol.rel_tol * total.norm()).max(tol.abs_tol);
        if err <= target {
            break;
        }
        let roundoff = 1e3 * f64::EPSILON * l1;
        if err <= roundoff.max(target) {
            let (value, abs_error, l1) = ordered_sum(&mut panels);
            return Ok(Integral { value, abs_error, nodes, converged: abs_error <= target, l1 });
        }
        if nodes + 2 * GK_NODES > tol.max_nodes {
            let worst = heap.peek().map(|e| panels[e.0]).unwrap_or(panels[0]);
            return Err(MellinError::Quadrature { nodes, abs_error: err, worst_lo: worst.lo, worst_hi: worst.hi });
        }
        let Some(HeapEntry(idx, _, _)) = heap.pop() else { break };
        let p = panels[idx];
        let mid = 0.5 * (p.lo + p.hi);
        if mid == p.lo || mid == p.hi {
            // Panel cannot be split further; its error stays.
            let (value, abs_error, l1) = ordered_sum(&mut panels);
            return Ok(Integral { value, abs_error, nodes, converged: false, l1 });
        }
        let left = gk15(f, p.lo, mid)?;
        let right = gk15(f, mid, p.hi)?;
        nodes += 2 * GK_NODES;
        total = total - p.value + left.value + right.value;
        err += left.error + right.error - p.error;
        l1 += left.abs + right.abs - p.abs;
        panels[idx] = left;
        heap.push(HeapEntry(idx, left.error, left.lo));
        panels.push(right);
        heap.push(HeapEntry(panels.len() - 1, right.error, right.lo));
        refreshes += 1;
        if refreshes.is_multiple_of(64) {
            // Running sums drift; recompute from scratch now and then.
            err = panels.iter().map(|p| p.error).sum();
            total = panels.iter().fold(V::zero(), |a, p| a + p.value);
        }
    }
    let (value, abs_error, l1) = ordered_sum(&mut panels);
    let target = (tol.rel_tol * value.norm()).max(tol.abs_tol);
    Ok(Integral { value, abs_error, nodes, converged: abs_error <= target, l1 })
}

/// Breakpoints and log-magnitude peak of a marched ray.
#[derive(Debug, Clone)]
pub struct RayPlan {
    pub breaks: Vec<f64>,
    pub log_max: f64,
}

/// Marching parameters for [`march_ray`].
#[derive(Debug, Clone, Copy)]
pub struct MarchConfig {
    /// First step length.
    pub h0: f64,
    /// Number of equal steps before geometric growth starts.
    pub linear_steps: usize,
    pub growth: f64,
    pub max_steps: usize,
}

impl Default for MarchConfig {
    fn default() -> Self {
        Self { h0: 0.5, linear_steps: 16, growth: 1.5, max_steps: 4000 }
    }
}

/// Walks `t = t0, t0 + h, ...` along a log-integrand `g` (so the integrand
/// is `exp(g)`), stopping once `Re g` has fallen below
/// `running max + ln(drop)` at two consecutive points. Steps are split so
/// that `Im g` changes by at most `pi` between breakpoints.
pub fn march_ray(g: &dyn Fn(f64) -> C64, t0: f64, cfg: MarchConfig, drop: f64) -> Result<RayPlan> {
    let ln_drop = drop.ln();
    let mut t = t0;
    let mut gv = g(t);
    if gv.re.is_nan() {
        return Err(MellinError::Quadrature { nodes: 0, abs_error: f64::INFINITY, worst_lo: t, worst_hi: t });
    }
    let mut log_max = gv.re;
    let mut breaks = vec![t];
    let mut h = cfg.h0;
    let mut below = 0usize;
    for step in 0..cfg.max_steps {
        if step >= cfg.linear_steps {
            h *= cfg.growth;
        }
        let tn = t + h;
        let gn = g(tn);
        if gn.re.is_nan() || gn.re == f64::INFINITY {
            return Err(MellinError::Quadrature { nodes: step, abs_error: f64::INFINITY, worst_lo: t, worst_hi: tn });
        }
        let dphase = if gn.re.is_finite() && gv.re.is_finite() { (gn.im - gv.im).abs() } else { 0.0 };
        // Powers of two keep the breakpoints on a dyadic grid of the step, so
        // integrands that share a step sequence share their nodes.
        let pieces = ((dphase / std::f64::consts::PI).ceil().clamp(1.0, 4096.0) as usize).next_power_of_two();
        for k in 1..pieces {
            breaks.push(t + h * k as f64 / pieces as f64);
        }
        breaks.push(tn);
        log_max = log_max.max(gn.re);
        if gn.re < log_max + ln_drop {
            below += 1;
            if below >= 2 {
                return Ok(RayPlan { breaks, log_max });
            }
        } else {
            below = 0;
        }
        t = tn;
        gv = gn;
    }
    Err(MellinError::Quadrature { nodes: cfg.max_steps, abs_error: f64::INFINITY, worst_lo: t0, worst_hi: t })
}

/// Integrates `exp(g(t) - log_scale)` over the planned breakpoints; the
/// result carries `log_scale`.
pub fn integrate_log(g: &dyn Fn(f64) -> C64, breaks: &[f64], log_scale: f64, tol: &Tolerances) -> Result<QuadratureResult> {
    let f = |t: f64| {
        let w = g(t);
        if w.re == f64::NEG_INFINITY {
            C64::new(0.0, 0.0)
        } else {
            (w - log_scale).exp()
        }
    };
    let r = integrate(&f, breaks, tol)?;
    Ok(QuadratureResult { value: r.value, abs_error: r.abs_error, nodes: r.nodes, converged: r.converged, log_scale })
}
