//! Stieltjes-type integrals `J_k(s) = ∫ dμ(u) / (u+s)^(k+1)`, k = 0, 1, 2,
//! for the integral-backed catalog entries.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::quadrature::{integrate, CVec};
use crate::types::{Tolerances, C64};

pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A non-negative measure on `[lower, ∞)`: an absolutely continuous part
/// given by `body` on `[lower, cut]` and by `tail` beyond, plus point masses.
#[derive(Clone)]
pub struct Measure {
    pub lower: f64,
    /// Interior breakpoints of `body`, strictly inside `(lower, cut)`.
    pub breaks: Vec<f64>,
    pub cut: f64,
    pub body: Density,
    pub tail: Density,
    pub atoms: Vec<(f64, f64)>,
}

impl fmt::Debug for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Measure")
            .field("lower", &self.lower)
            .field("cut", &self.cut)
            .field("breaks", &self.breaks.len())
            .field("atoms", &self.atoms)
            .finish()
    }
}

/// Extra length in `v = ln(u/cut)` past `max(|s|, cut)`; the tail integrand
/// has decayed by `e^-40` there.
const TAIL_SPAN: f64 = 40.0;
const CACHE_LIMIT: usize = 1 << 20;

fn tolerances() -> Tolerances {
    Tolerances { rel_tol: 1e-13, abs_tol: 1e-300, max_nodes: 60_000, truncation_drop: 1e-16 }
}

impl Measure {
    /// `[J0, w J1, w^2 J2]` at `s`. The weight `w` keeps the three components
    /// of comparable size so one error criterion controls all of them.
    pub fn moments(&self, s: C64, w: C64) -> Result<[C64; 3]> {
        let kernel = |u: f64, m: f64| {
            let inv = (s + u).inv();
            let a = inv * m;
            let b = a * inv * w;
            let c = b * inv * w;
            CVec([a, b, c])
        };
        let tol = tolerances();
        let mut total = [C64::new(0.0, 0.0); 3];
        let rs = s.norm();

        if self.cut > self.lower {
            let mut pts = Vec::with_capacity(self.breaks.len() + 3);
            pts.push(self.lower);
            pts.extend(self.breaks.iter().copied());
            pts.push(self.cut);
            if rs > self.lower && rs < self.cut && !self.breaks.iter().any(|b| (*b - rs).abs() < 1e-9 * rs) {
                pts.push(rs);
                pts.sort_by(|a, b| a.total_cmp(b));
            }
            let body = &self.body;
            let r = integrate(&|u: f64| kernel(u, body(u)), &pts, &tol)?;
            for (t, v) in total.iter_mut().zip(r.value.0) {
                *t += v;
            }
        }

        let top = (rs.max(self.cut) / self.cut).ln() + TAIL_SPAN;
        let mut pts = vec![0.0];
        if rs > self.cut {
            pts.push((rs / self.cut).ln());
        }
        pts.push(top);
        let cut = self.cut;
        let tail = &self.tail;
        let r = integrate(
            &|v: f64| {
                let u = cut * v.exp();
                kernel(u, tail(u) * u)
            },
            &pts,
            &tol,
        )?;
        for (t, v) in total.iter_mut().zip(r.value.0) {
            *t += v;
        }

        for &(u, m) in &self.atoms {
            let k = kernel(u, m).0;
            for (t, v) in total.iter_mut().zip(k) {
                *t += v;
            }
        }
        Ok(total)
    }
}

/// Memo table for expensive jets, keyed by the exact bits of `s`.
#[derive(Default)]
pub struct JetCache {
    map: Mutex<HashMap<(u64, u64), [C64; 3]>>,
}

impl JetCache {
    pub fn get_or_insert(&self, s: C64, f: impl FnOnce() -> Result<[C64; 3]>) -> Result<[C64; 3]> {
        let key = (s.re.to_bits(), s.im.to_bits());
        if let Some(v) = self.map.lock().map_err(|_| poisoned())?.get(&key) {
            return Ok(*v);
        }
        let v = f()?;
        let mut m = self.map.lock().map_err(|_| poisoned())?;
        if m.len() >= CACHE_LIMIT {
            m.clear();
        }
        m.insert(key, v);
        Ok(v)
    }
}

fn poisoned() -> crate::error::MellinError {
    crate::error::MellinError::InvalidInput("jet cache poisoned by a panicking thread".into())
}

impl fmt::Debug for JetCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("JetCache")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_measure(c: f64) -> Measure {
        let h: Density = Arc::new(|u: f64| 1.0 / (1.0 + u));
        Measure { lower: c, breaks: vec![], cut: c, body: h.clone(), tail: h, atoms: vec![] }
    }

    #[test]
    fn closed_form_first_moment() {
        // ∫_c^∞ du / ((1+u)(u+s)) = ln((s+c)/(1+c)) / (s-1)
        let m = power_measure(1.0);
        for s in [C64::new(3.0, 0.0), C64::new(50.0, 80.0), C64::new(-0.5, 2.0), C64::new(1e5, -3e4)] {
            let j = m.moments(s, s).unwrap();
            let exact = ((s + 1.0) / 2.0).ln() / (s - 1.0);
            assert!((j[0] - exact).norm() < 1e-12 * exact.norm(), "{s}: {} vs {exact}", j[0]);
        }
    }

    #[test]
    fn higher_moments_are_derivatives() {
        let m = power_measure(1.0);
        let s = C64::new(7.0, 3.0);
        let h = 1e-4;
        let j = m.moments(s, C64::new(1.0, 0.0)).unwrap();
        let jp = m.moments(s + h, C64::new(1.0, 0.0)).unwrap();
        let jm = m.moments(s - h, C64::new(1.0, 0.0)).unwrap();
        assert!(((jp[0] - jm[0]) / (2.0 * h) + j[1]).norm() < 1e-9);
        assert!(((jp[1] - jm[1]) / (2.0 * h) + j[2] * 2.0).norm() < 1e-9);
    }

    #[test]
    fn atoms_are_added() {
        let zero: Density = Arc::new(|_| 0.0);
        let m = Measure { lower: 1.0, breaks: vec![], cut: 1.0, body: zero.clone(), tail: zero, atoms: vec![(2.0, 3.0)] };
        let j = m.moments(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        assert!((j[0].re - 1.0).abs() < 1e-15);
        assert!((j[1].re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cache_returns_same_value() {
        let c = JetCache::default();
        let s = C64::new(1.0, 2.0);
        let a = c.get_or_insert(s, || Ok([s; 3])).unwrap();
        let b = c.get_or_insert(s, || panic!("should be cached")).unwrap();
        assert_eq!(a, b);
    }
}
