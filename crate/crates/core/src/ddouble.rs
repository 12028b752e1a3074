//! Minimal double-double arithmetic for re-testing near-boundary points.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub(crate) struct DD {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> DD {
    let s = a + b;
    DD { hi: s, lo: b - (s - a) }
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Square root of a nonnegative double, correct to about 106 bits.
    pub fn sqrt_of(a: f64) -> Self {
        if a <= 0.0 {
            return DD::ZERO;
        }
        let x = a.sqrt();
        let sq = DD::from_f64(x) * DD::from_f64(x);
        let r = DD::from_f64(a) - sq;
        DD::from_f64(x) + DD::from_f64(r.hi / (2.0 * x))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        for a in [2.0, 3.0, 0.75, 12345.0] {
            let s = DD::sqrt_of(a);
            let back = s * s - DD::from_f64(a);
            assert!(back.to_f64().abs() < 1e-28 * a, "{a}: {back:?}");
        }
    }

    #[test]
    fn cancellation_is_exact() {
        let a = DD::from_f64(1.0) + DD::from_f64(1e-20);
        let b = a - DD::from_f64(1.0);
        assert!((b.to_f64() - 1e-20).abs() < 1e-35);
    }
}
