//! Compensated summation: Neumaier for plain doubles and a double-double
//! complex type for series with heavy cancellation.

use crate::types::C64;

/// Neumaier's improved Kahan summation on each component.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: C64,
    comp: C64,
}

fn neumaier_step(sum: f64, comp: f64, x: f64) -> (f64, f64) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
    (t, comp + c)
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: C64) {
        let (re, cre) = neumaier_step(self.sum.re, self.comp.re, x.re);
        let (im, cim) = neumaier_step(self.sum.im, self.comp.im, x.im);
        self.sum = C64::new(re, im);
        self.comp = C64::new(cre, cim);
    }

    pub fn total(&self) -> C64 {
        self.sum + self.comp
    }
}

impl Extend<C64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = C64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn neumaier(values: impl IntoIterator<Item = C64>) -> C64 {
    let mut s = NeumaierSum::new();
    s.extend(values);
    s.total()
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

// Named methods rather than operator traits keep the cost of each step visible.
#[allow(clippy::should_implement_trait)]
impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }.add(Self::from_f64(q3))
    }

    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Self { hi: self.hi * f, lo: self.lo * f }
    }

    /// `e^x` to about 30 digits: `x = k ln 2 + r`, Taylor series of
    /// `e^(r/1024)`, then ten squarings.
    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Self::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::from_f64(0.0);
        }
        let k = (self.hi / LN2.hi).round();
        let r = self.sub(LN2.mul_f64(k)).ldexp(-10);
        let mut term = r;
        let mut sum = Self::from_f64(1.0).add(r);
        for n in 2..=14 {
            term = term.mul(r).div(Self::from_f64(n as f64));
            sum = sum.add(term);
        }
        for _ in 0..10 {
            sum = sum.mul(sum);
        }
        sum.ldexp(k as i32)
    }

    /// Natural logarithm by one Newton step on `e^y = x` from the double guess.
    pub fn ln(self) -> Self {
        if !(self.hi > 0.0) {
            return Self::from_f64(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        let y = Self::from_f64(self.hi.ln());
        y.add(self.mul(y.neg().exp())).sub(Self::from_f64(1.0))
    }

    pub fn powf(self, b: f64) -> Self {
        if b == 1.0 {
            self
        } else {
            self.ln().mul_f64(b).exp()
        }
    }
}

const LN2: DoubleDouble = DoubleDouble { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };
