//! Double-double arithmetic: unevaluated pairs hi + lo with
//! |lo| <= ulp(hi)/2, giving roughly 32 significant digits.
//!
//! The residue series of the H-function evaluator cancels heavily (the
//! e^{-z}-type families lose ~2z/ln(10) digits at argument z), so both the
//! term recurrence and the accumulator run in this representation. Only
//! +, -, *, / against other pairs or f64 are needed; no transcendentals.

/// a + b with |a| >= |b| assumed (Dekker).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// a + b, no magnitude assumption (Knuth).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

/// a * b exactly as hi + lo, via FMA.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    #[inline]
    pub fn neg(self) -> Self {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn add(self, o: Dd) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, x: f64) -> Self {
        let (s, e) = two_sum(self.hi, x);
        let e = e + self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Self {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Self {
        let (p, e) = two_prod(self.hi, x);
        let e = e + self.lo * x;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    /// Division by an f64: one Newton correction on the f64 quotient.
    #[inline]
    pub fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = ((self.hi - p) - e + self.lo) / d;
        let (hi, lo) = quick_two_sum(q1, r);
        Dd { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_exactness() {
        // (1 + 2^-30)^2 = 1 + 2^-29 + 2^-60 needs more than 53 bits.
        let x = Dd::from_f64(1.0).add_f64(2f64.powi(-30));
        let sq = x.mul(x);
        let expect_hi = 1.0 + 2f64.powi(-29);
        assert_eq!(sq.hi, expect_hi);
        assert_eq!(sq.lo, 2f64.powi(-60));
    }

    #[test]
    fn exp_series_beats_f64_cancellation() {
        // sum of (-20)^k / k! in dd; f64 loses ~17 digits here.
        let z = 20.0;
        let mut term = Dd::from_f64(1.0);
        let mut sum = term;
        for k in 0..400 {
            term = term.mul_f64(-z).div_f64((k + 1) as f64);
            sum = sum.add(term);
        }
        let exact = (-20.0f64).exp();
        assert!(((sum.to_f64() - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn div_roundtrip() {
        let x = Dd::from_f64(std::f64::consts::PI).mul_f64(1e8);
        let y = x.div_f64(7.0).mul_f64(7.0);
        assert!((y.sub(x).to_f64() / x.to_f64()).abs() < 1e-30);
    }
}
