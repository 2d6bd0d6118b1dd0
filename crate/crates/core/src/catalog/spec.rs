//! Serializable function descriptions and the builders behind them.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::measure::{Density, JetCache, Measure};
use super::{iterated_log_real, tower, AdmissibleFunction, FunctionMeta, Node, StieltjesNode, FULL_ANGLE};
use crate::error::{MellinError, Result};
use crate::types::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    GammaShift,
    ExpTauScale,
    ShiftNormalize,
    IteratedLog,
    Power,
    Product,
    Quotient,
    #[serde(rename = "log_of_L")]
    LogOfL,
    Theorem3,
    PositiveType,
}

impl FunctionKind {
    fn arity(self) -> usize {
        match self {
            FunctionKind::Product | FunctionKind::Quotient => 2,
            FunctionKind::ExpTauScale | FunctionKind::ShiftNormalize | FunctionKind::Power | FunctionKind::LogOfL => 1,
            _ => 0,
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            FunctionKind::GammaShift | FunctionKind::ShiftNormalize => &["c"],
            FunctionKind::ExpTauScale => &["tau"],
            FunctionKind::IteratedLog => &["a", "b", "k", "c"],
            FunctionKind::Power => &["a"],
            FunctionKind::Product | FunctionKind::Quotient | FunctionKind::LogOfL => &[],
            FunctionKind::Theorem3 => &["ell", "a", "c"],
            FunctionKind::PositiveType => &["measure", "c", "A", "B", "a", "support_cut"],
        }
    }

    fn name(self) -> &'static str {
        match self {
            FunctionKind::GammaShift => "gamma_shift",
            FunctionKind::ExpTauScale => "exp_tau_scale",
            FunctionKind::ShiftNormalize => "shift_normalize",
            FunctionKind::IteratedLog => "iterated_log",
            FunctionKind::Power => "power",
            FunctionKind::Product => "product",
            FunctionKind::Quotient => "quotient",
            FunctionKind::LogOfL => "log_of_L",
            FunctionKind::Theorem3 => "theorem3",
            FunctionKind::PositiveType => "positive_type",
        }
    }
}

/// JSON form `{"kind": ..., "params": {...}, "children": [...]}`.
///
/// Numeric parameters may be given as numbers or as the strings `"e"`,
/// `"pi"`, `"-e"`, `"-pi"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub children: Vec<FunctionSpec>,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind) -> Self {
        Self { kind, params: Map::new(), children: vec![] }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn child(mut self, c: FunctionSpec) -> Self {
        self.children.push(c);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| MellinError::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("specs always serialize")
    }

    pub fn gamma_shift(c: f64) -> Self {
        Self::new(FunctionKind::GammaShift).param("c", c)
    }

    /// `exp(a s (log_{k+1}(s+c))^b)`; `c = None` picks the smallest valid shift.
    pub fn iterated_log(a: f64, b: f64, k: u32, c: Option<f64>) -> Self {
        let s = Self::new(FunctionKind::IteratedLog).param("a", a).param("b", b).param("k", k);
        match c {
            Some(c) => s.param("c", c),
            None => s,
        }
    }

    pub fn theorem3(ell: &str, a: f64, c: f64) -> Self {
        Self::new(FunctionKind::Theorem3).param("ell", ell).param("a", a).param("c", c)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        let Some(v) = self.params.get(key) else { return Ok(None) };
        let x = match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => match s.trim() {
                "e" => Some(E),
                "-e" => Some(-E),
                "pi" => Some(PI),
                "-pi" => Some(-PI),
                t => t.parse::<f64>().ok(),
            },
            _ => None,
        };
        match x {
            Some(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(MellinError::Spec(format!("{}: parameter '{key}' is not a finite number: {v}", self.kind.name()))),
        }
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn num_req(&self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| MellinError::Spec(format!("{}: missing parameter '{key}'", self.kind.name())))
    }

    fn text(&self, key: &str) -> Result<Option<&str>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(MellinError::Spec(format!("{}: parameter '{key}' must be a string, got {v}", self.kind.name()))),
        }
    }
}

fn spec_err(msg: impl Into<String>) -> MellinError {
    MellinError::Spec(msg.into())
}

fn fmt_num(x: f64) -> String {
    if (x - E).abs() < 1e-15 {
        "e".into()
    } else {
        format!("{x}")
    }
}

/// Slowly varying data `ℓ` for the integral constructor.
#[derive(Clone)]
pub enum EllKind {
    /// `ℓ(ρ) = (1+ρ)^a`
    Power,
    /// `ℓ(ρ) = exp(a sqrt(log(1+ρ)))`
    ExpSqrtLog,
    /// `ℓ(ρ) = log(e+ρ)^a`
    Log,
    Custom {
        name: String,
        log_ell: Density,
        dlog_ell: Density,
    },
}

impl fmt::Debug for EllKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EllKind::Power => f.write_str("Power"),
            EllKind::ExpSqrtLog => f.write_str("ExpSqrtLog"),
            EllKind::Log => f.write_str("Log"),
            EllKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlowlyVaryingEll {
    pub kind: EllKind,
    pub a: f64,
    /// Lower integration limit.
    pub c: f64,
}

impl SlowlyVaryingEll {
    pub fn new(kind: EllKind, a: f64, c: f64) -> Self {
        Self { kind, a, c }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            EllKind::Power => "power".into(),
            EllKind::ExpSqrtLog => "exp_sqrt_log".into(),
            EllKind::Log => "log".into(),
            EllKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn log_ell(&self, rho: f64) -> f64 {
        match &self.kind {
            EllKind::Power => self.a * rho.ln_1p(),
            EllKind::ExpSqrtLog => self.a * rho.ln_1p().sqrt(),
            EllKind::Log => self.a * (E + rho).ln().ln(),
            EllKind::Custom { log_ell, .. } => log_ell(rho),
        }
    }

    /// `ℓ'/ℓ`.
    pub fn dlog_ell(&self, rho: f64) -> f64 {
        match &self.kind {
            EllKind::Power => self.a / (1.0 + rho),
            EllKind::ExpSqrtLog => self.a / (2.0 * rho.ln_1p().sqrt() * (1.0 + rho)),
            EllKind::Log => self.a / ((E + rho) * (E + rho).ln()),
            EllKind::Custom { dlog_ell, .. } => dlog_ell(rho),
        }
    }

    fn density(&self) -> Density {
        let me = self.clone();
        Arc::new(move |u| me.dlog_ell(u))
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(spec_err(format!("theorem3: lower limit c must be positive, got {}", self.c)));
        }
        let mut worst = 0.0f64;
        for i in 0..=96 {
            let rho = self.c * 10f64.powf(i as f64 / 8.0);
            let h = self.dlog_ell(rho);
            if !(h > 0.0) || !h.is_finite() {
                return Err(spec_err(format!(
                    "theorem3: ell must be strictly increasing, but ell'/ell = {h} at rho = {rho:.6e}"
                )));
            }
            worst = worst.max(rho * h);
        }
        if worst > 1e3 {
            return Err(spec_err(format!("theorem3: rho ell'/ell is not bounded on the probe grid (reaches {worst:.3e})")));
        }
        let growth = self.log_ell(1e12) - self.log_ell(self.c);
        if !(growth > 1e-3) {
            return Err(spec_err("theorem3: ell must increase without bound"));
        }
        Ok(())
    }
}

/// Measures available to the positive-type constructor.
#[derive(Clone)]
pub enum MeasureKind {
    /// `dμ = [u]/u² du`, the representation of the Gamma function.
    GammaFloor,
    /// `dμ = λ(u)/u du` with `λ` the jump of `log log(c - u)` across the cut.
    LoglogJump { c: f64 },
    Zero,
    /// Density on `[lower, ∞)`.
    Density { lower: f64, density: Density },
}

impl fmt::Debug for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::GammaFloor => f.write_str("GammaFloor"),
            MeasureKind::LoglogJump { c } => write!(f, "LoglogJump {{ c: {c} }}"),
            MeasureKind::Zero => f.write_str("Zero"),
            MeasureKind::Density { lower, .. } => write!(f, "Density {{ lower: {lower} }}"),
        }
    }
}

/// `log γ(s) = A + B s + (s-a)² ∫ dμ(u)/(u+s)`.
#[derive(Debug, Clone)]
pub struct PositiveTypeSpec {
    pub big_a: f64,
    pub big_b: f64,
    pub a: f64,
    pub measure: MeasureKind,
    /// Where the `[u]/u²` density switches to its smooth tail model.
    pub support_cut: f64,
}

impl PositiveTypeSpec {
    /// The Gamma function `Γ(s+1)`: `A = 0`, `B = -γ_Euler`, `a = 0`.
    pub fn gamma_plus_one() -> Self {
        Self { big_a: 0.0, big_b: -EULER_GAMMA, a: 0.0, measure: MeasureKind::GammaFloor, support_cut: 64.0 }
    }

    /// `exp(s log log(s+c))` for `c >= e`.
    pub fn loglog(c: f64) -> Self {
        Self { big_a: 0.0, big_b: c.ln().ln(), a: 0.0, measure: MeasureKind::LoglogJump { c }, support_cut: 64.0 }
    }
}

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn gamma_floor_measure(cut: f64) -> Measure {
    let cut = cut.round().max(2.0);
    let body: Density = Arc::new(|u: f64| u.floor() / (u * u));
    // Euler–Maclaurin: [u] = u - 1/2 - ({u} - 1/2) and the periodic part
    // integrates to an endpoint mass 1/(12 U²) up to terms of order U^-4.
    let tail: Density = Arc::new(|u: f64| 1.0 / u - 0.5 / (u * u));
    Measure {
        lower: 1.0,
        breaks: (2..cut as usize).map(|k| k as f64).collect(),
        cut,
        body,
        tail,
        atoms: vec![(cut, 1.0 / (12.0 * cut * cut))],
    }
}

fn loglog_lambda(u: f64, c: f64) -> f64 {
    if u <= c - 1.0 {
        0.0
    } else if u <= c {
        1.0
    } else {
        PI.atan2((u - c).ln()) / PI
    }
}

fn loglog_measure(c: f64) -> Measure {
    let body: Density = Arc::new(move |u: f64| loglog_lambda(u, c) / u);
    Measure { lower: c - 1.0, breaks: vec![], cut: c, body: body.clone(), tail: body, atoms: vec![] }
}

fn zero_measure() -> Measure {
    let z: Density = Arc::new(|_| 0.0);
    Measure { lower: 1.0, breaks: vec![], cut: 1.0, body: z.clone(), tail: z, atoms: vec![] }
}

pub fn build_positive_type(p: &PositiveTypeSpec) -> Result<AdmissibleFunction> {
    let (node, meta) = positive_type_node(p)?;
    Ok(AdmissibleFunction::from_node(node, meta))
}

fn positive_type_node(p: &PositiveTypeSpec) -> Result<(Node, FunctionMeta)> {
    for (k, v) in [("A", p.big_a), ("B", p.big_b), ("a", p.a)] {
        if !v.is_finite() {
            return Err(spec_err(format!("positive_type: {k} must be finite")));
        }
    }
    let (measure, c_gamma, name, degenerate) = match &p.measure {
        MeasureKind::GammaFloor => {
            if !(p.support_cut >= 2.0) {
                return Err(spec_err("positive_type: support_cut must be at least 2"));
            }
            (gamma_floor_measure(p.support_cut), 1.0, "gamma_floor".to_string(), false)
        }
        MeasureKind::LoglogJump { c } => {
            if !(*c >= E - 1e-12) {
                return Err(spec_err(format!("positive_type: loglog_jump needs c >= e, got {c}")));
            }
            (loglog_measure(*c), c - 1.0, format!("loglog_jump(c={})", fmt_num(*c)), false)
        }
        MeasureKind::Zero => (zero_measure(), 1.0, "zero".to_string(), true),
        MeasureKind::Density { lower, density } => {
            if !(*lower >= 0.0) {
                return Err(spec_err("positive_type: density support must start at u >= 0"));
            }
            let m = Measure { lower: *lower, breaks: vec![], cut: *lower, body: density.clone(), tail: density.clone(), atoms: vec![] };
            (m, lower.max(1e-3), "density".to_string(), false)
        }
    };
    for i in 0..=80 {
        let u = measure.lower + 10f64.powf(i as f64 / 10.0 - 2.0);
        let d = if u <= measure.cut { (measure.body)(u) } else { (measure.tail)(u) };
        if !(d >= 0.0) {
            return Err(spec_err(format!("positive_type: measure density is negative at u = {u:.6e}")));
        }
    }
    let probe = measure.moments(C64::new(1.0, 0.0), C64::new(1.0, 0.0))?;
    if !probe[0].re.is_finite() {
        return Err(spec_err("positive_type: ∫ dμ(u)/(u+1) diverges"));
    }
    let label = format!("positive_type(A={},B={},a={},measure={name})", fmt_num(p.big_a), fmt_num(p.big_b), fmt_num(p.a));
    let node = Node::Stieltjes(Arc::new(StieltjesNode {
        big_a: p.big_a,
        big_b: p.big_b,
        a: p.a,
        measure,
        cache: JetCache::default(),
    }));
    let meta = FunctionMeta {
        label,
        c_gamma,
        alpha0: FULL_ANGLE,
        positive_from: -c_gamma,
        positive_type: true,
        degenerate,
        reciprocal_entire: false,
    };
    Ok((node, meta))
}

/// `log γ(s) = s² ∫_c^∞ (ℓ'/ℓ)(u) du/(s+u)`.
pub fn build_theorem3(ell: &SlowlyVaryingEll) -> Result<AdmissibleFunction> {
    let (node, meta) = theorem3_node(ell)?;
    Ok(AdmissibleFunction::from_node(node, meta))
}

fn theorem3_node(ell: &SlowlyVaryingEll) -> Result<(Node, FunctionMeta)> {
    ell.validate()?;
    let h = ell.density();
    let measure = Measure { lower: ell.c, breaks: vec![], cut: ell.c, body: h.clone(), tail: h, atoms: vec![] };
    let node = Node::Stieltjes(Arc::new(StieltjesNode { big_a: 0.0, big_b: 0.0, a: 0.0, measure, cache: JetCache::default() }));
    // Probe once so quadrature trouble surfaces at build time.
    node.jet(C64::new(1.0, 0.0))?;
    let meta = FunctionMeta {
        label: format!("theorem3(ell={},a={},c={})", ell.name(), fmt_num(ell.a), fmt_num(ell.c)),
        c_gamma: ell.c,
        alpha0: FULL_ANGLE,
        positive_from: -ell.c,
        positive_type: true,
        degenerate: false,
        reciprocal_entire: false,
    };
    Ok((node, meta))
}

/// Builds a function from its description.
pub fn build(spec: &FunctionSpec) -> Result<AdmissibleFunction> {
    let (node, meta) = build_node(spec)?;
    Ok(AdmissibleFunction::from_node(node, meta))
}

fn positive(spec: &FunctionSpec, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(spec_err(format!("{}: '{key}' must be positive, got {v}", spec.kind.name())))
    }
}

fn build_node(spec: &FunctionSpec) -> Result<(Node, FunctionMeta)> {
    let arity = spec.kind.arity();
    if spec.children.len() != arity {
        return Err(spec_err(format!(
            "{} takes {arity} child spec(s), got {}",
            spec.kind.name(),
            spec.children.len()
        )));
    }
    let keys = spec.kind.keys();
    if let Some(k) = spec.params.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(spec_err(format!("{}: unknown parameter '{k}' (expected one of {keys:?})", spec.kind.name())));
    }
    let children: Vec<(Node, FunctionMeta)> = spec.children.iter().map(build_node).collect::<Result<_>>()?;
    match spec.kind {
        FunctionKind::GammaShift => {
            let c = spec.num_or("c", 0.0)?;
            if !(c >= 0.0) {
                return Err(spec_err(format!("gamma_shift: c must be >= 0, got {c}")));
            }
            // Plain Γ has its pole at 0: it is positive only on (0, ∞), but 1/Γ is
            // entire, so the Abel–Plana window (0, 1) is still available.
            let (c_gamma, positive_from) = if c == 0.0 { (1.0, 0.0) } else { (c, -c) };
            let meta = FunctionMeta {
                label: format!("gamma_shift(c={})", fmt_num(c)),
                c_gamma,
                alpha0: FULL_ANGLE,
                positive_from,
                positive_type: false,
                degenerate: false,
                reciprocal_entire: true,
            };
            Ok((Node::GammaShift { c }, meta))
        }
        FunctionKind::ExpTauScale => {
            let tau = spec.num_req("tau")?;
            let (child, mut meta) = children.into_iter().next().expect("arity checked");
            meta.label = format!("exp_tau_scale(tau={},{})", fmt_num(tau), meta.label);
            Ok((Node::ExpTau { tau, child: Box::new(child) }, meta))
        }
        FunctionKind::ShiftNormalize => {
            let c = positive(spec, "c", spec.num_req("c")?)?;
            let (child, mut meta) = children.into_iter().next().expect("arity checked");
            let offset = child.jet(C64::new(c, 0.0))?.v.re;
            if !offset.is_finite() {
                return Err(spec_err(format!("shift_normalize: log γ({c}) is not finite")));
            }
            meta.label = format!("shift_normalize(c={},{})", fmt_num(c), meta.label);
            meta.c_gamma += c;
            meta.positive_from -= c;
            Ok((Node::ShiftNormalize { c, offset, child: Box::new(child) }, meta))
        }
        FunctionKind::IteratedLog => {
            let a = positive(spec, "a", spec.num_or("a", 1.0)?)?;
            let b = positive(spec, "b", spec.num_or("b", 1.0)?)?;
            let kf = spec.num_or("k", 1.0)?;
            if kf < 0.0 || kf.fract() != 0.0 || kf > 4.0 {
                return Err(spec_err(format!("iterated_log: k must be an integer in 0..=4, got {kf}")));
            }
            let k = kf as u32;
            if k == 0 && b > 1.0 {
                return Err(spec_err("iterated_log: b > 1 with k = 0 makes ε unbounded"));
            }
            let c = spec.num_or("c", tower(k as i32))?;
            let lk = iterated_log_real(k, c);
            if !(lk >= 1.0 - 1e-12) {
                return Err(spec_err(format!("iterated_log: need log_{k}(c) >= 1, got c = {c}")));
            }
            let integer_b = b.fract() == 0.0;
            let c_gamma = if integer_b { c - tower(k as i32 - 1) } else { c - tower(k as i32) };
            if !(c_gamma > 1e-9) {
                return Err(spec_err(format!(
                    "iterated_log: c = {c} leaves no positivity margin (c_gamma = {c_gamma}); increase c"
                )));
            }
            let meta = FunctionMeta {
                label: format!("iterated_log(a={},b={},k={k},c={})", fmt_num(a), fmt_num(b), fmt_num(c)),
                c_gamma,
                alpha0: FULL_ANGLE,
                positive_from: -c_gamma,
                positive_type: false,
                degenerate: false,
                reciprocal_entire: false,
            };
            Ok((Node::IteratedLog { a, b, k, c }, meta))
        }
        FunctionKind::Power => {
            let a = positive(spec, "a", spec.num_req("a")?)?;
            let (child, mut meta) = children.into_iter().next().expect("arity checked");
            meta.label = format!("power(a={},{})", fmt_num(a), meta.label);
            meta.reciprocal_entire &= a.fract() == 0.0;
            Ok((Node::Power { a, child: Box::new(child) }, meta))
        }
        FunctionKind::Product | FunctionKind::Quotient => {
            let mut it = children.into_iter();
            let (l, ml) = it.next().expect("arity checked");
            let (r, mr) = it.next().expect("arity checked");
            let quotient = spec.kind == FunctionKind::Quotient;
            if quotient {
                audit_quotient(&l, &r)?;
            }
            let meta = FunctionMeta {
                label: format!("{}({},{})", spec.kind.name(), ml.label, mr.label),
                c_gamma: ml.c_gamma.min(mr.c_gamma),
                alpha0: ml.alpha0.min(mr.alpha0),
                positive_from: ml.positive_from.max(mr.positive_from),
                positive_type: !quotient && ml.positive_type && mr.positive_type,
                degenerate: ml.degenerate && mr.degenerate,
                reciprocal_entire: !quotient && ml.reciprocal_entire && mr.reciprocal_entire,
            };
            let node = if quotient { Node::Quotient(Box::new(l), Box::new(r)) } else { Node::Product(Box::new(l), Box::new(r)) };
            Ok((node, meta))
        }
        FunctionKind::LogOfL => {
            let (child, mut meta) = children.into_iter().next().expect("arity checked");
            let c_new = log_of_l_margin(&child, meta.c_gamma)?;
            meta.label = format!("log_of_L({})", meta.label);
            meta.c_gamma = c_new;
            meta.positive_from = -c_new;
            meta.positive_type = false;
            meta.reciprocal_entire = false;
            Ok((Node::LogOfL(Box::new(child)), meta))
        }
        FunctionKind::Theorem3 => {
            let kind = match spec.text("ell")?.unwrap_or("power") {
                "power" => EllKind::Power,
                "exp_sqrt_log" => EllKind::ExpSqrtLog,
                "log" => EllKind::Log,
                other => return Err(spec_err(format!("theorem3: unknown ell '{other}' (power, exp_sqrt_log, log)"))),
            };
            let ell = SlowlyVaryingEll::new(kind, spec.num_or("a", 1.0)?, spec.num_or("c", 1.0)?);
            theorem3_node(&ell)
        }
        FunctionKind::PositiveType => {
            let measure = match spec.text("measure")?.unwrap_or("gamma_floor") {
                "gamma_floor" => MeasureKind::GammaFloor,
                "loglog_jump" => MeasureKind::LoglogJump { c: spec.num_or("c", E)? },
                "zero" => MeasureKind::Zero,
                other => {
                    return Err(spec_err(format!(
                        "positive_type: unknown measure '{other}' (gamma_floor, loglog_jump, zero)"
                    )))
                }
            };
            let p = PositiveTypeSpec {
                big_a: spec.num_or("A", 0.0)?,
                big_b: spec.num_or("B", 0.0)?,
                a: spec.num_or("a", 0.0)?,
                measure,
                support_cut: spec.num_or("support_cut", 64.0)?,
            };
            positive_type_node(&p)
        }
    }
}

/// The ratio rule needs `γ1 >= γ2` and `(γ1/γ2)^(1/ρ)` non-decreasing and
/// unbounded; both are probed on a log grid over `[1, 1e6]`.
fn audit_quotient(l: &Node, r: &Node) -> Result<()> {
    let mut prev: Option<f64> = None;
    let mut first = None;
    for i in 0..=48 {
        let rho = 10f64.powf(i as f64 / 8.0);
        let s = C64::new(rho, 0.0);
        let v1 = l.jet(s)?.v.re;
        let v2 = r.jet(s)?.v.re;
        let d = v1 - v2;
        let slack = 1e-12 * v1.abs().max(v2.abs()).max(1.0);
        if d < -slack {
            return Err(MellinError::QuotientAudit { rho });
        }
        let ratio = d / rho;
        if let Some(p) = prev {
            if ratio < p - slack / rho {
                return Err(MellinError::QuotientAudit { rho });
            }
        }
        first.get_or_insert(ratio);
        prev = Some(ratio);
    }
    match (first, prev) {
        (Some(a), Some(b)) if b > a => Ok(()),
        _ => Err(MellinError::QuotientAudit { rho: 1e6 }),
    }
}

/// Largest `c' <= min(1 + c_child, 1)` such that `log L(u) > 0` on
/// `[1 - c', 1]`, so `(log L(s+1))^s` stays positive on `(-c', ∞)`.
fn log_of_l_margin(child: &Node, c_child: f64) -> Result<f64> {
    let log_l = |u: f64| -> Result<f64> {
        let u = if u.abs() < 1e-9 { 1e-9 } else { u };
        Ok(child.jet(C64::new(u, 0.0))?.v.re / u)
    };
    if !(log_l(1.0)? > 0.0) {
        return Err(spec_err("log_of_L: needs L(1) > 1 so that log L(s+1) is positive near s = 0"));
    }
    let mut c = (1.0 + c_child).min(1.0) * 0.99;
    while c >= 1e-3 {
        let mut ok = true;
        for i in 0..=20 {
            let u = 1.0 - c * i as f64 / 20.0;
            if !(log_l(u)? > 0.0) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(c);
        }
        c *= 0.8;
    }
    Err(spec_err("log_of_L: log L(s+1) is not positive on any interval (-c, 0] with c >= 1e-3"))
}
