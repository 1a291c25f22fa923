//! Double-double arithmetic (about 32 significant digits) and
//! re-evaluations of the closed-form bounds on top of it.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};
pub const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224_646_799_147_353_2e-16,
};

impl Dd {
    pub fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from(0.0);
        }
        let x = Dd::from(self.hi.sqrt());
        // one Newton step doubles the precision
        x + (self - x * x) / (x * Dd::from(2.0))
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from(f64::INFINITY);
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::from(k);
        let r = r / Dd::from(1024.0);
        let mut term = Dd::from(1.0);
        let mut sum = Dd::from(1.0);
        for i in 1..30 {
            term = term * r / Dd::from(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-40 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        let scale = 2f64.powi(k as i32);
        Dd {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }

    pub fn ln(self) -> Self {
        let mut y = Dd::from(self.hi.ln());
        for _ in 0..3 {
            y = y + self * (-y).exp() - Dd::from(1.0);
        }
        y
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

fn normal_pdf(z: Dd) -> Dd {
    (-(z * z) / Dd::from(2.0)).exp() / (Dd::from(2.0) * PI).sqrt()
}

/// `P(Z > z)` for `0 ≤ z ≲ 6` from the everywhere-positive series
/// `Φ(z) − ½ = φ(z) Σ_k z^{2k+1} / (1·3·…·(2k+1))`.
fn upper_tail(z: Dd) -> Dd {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut k = 1.0;
    loop {
        term = term * z2 / Dd::from(2.0 * k + 1.0);
        sum = sum + term;
        if term.hi < sum.hi * 1e-34 {
            break;
        }
        k += 1.0;
    }
    Dd::from(0.5) - normal_pdf(z) * sum
}

/// `z_{ξ/2}` to double-double precision, for `ξ ∈ [1e-9, 1)`.
pub fn z_critical(xi: f64) -> Dd {
    let target = Dd::from(xi) / Dd::from(2.0);
    let (mut lo, mut hi) = (0.0f64, 7.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if upper_tail(Dd::from(mid)).hi > target.hi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = Dd::from(0.5 * (lo + hi));
    for _ in 0..4 {
        z = z + (upper_tail(z) - target) / normal_pdf(z);
    }
    z
}

/// `(1/ε²)[(9^{9/4}/4)(√d/δ)^{9d/4} + 8 ln(2/ξ)]`.
pub fn sample_complexity(epsilon: f64, xi: f64, delta: f64, d: usize) -> Dd {
    let dd = Dd::from(d as f64);
    let c = Dd::from(2.25);
    let log_term = c * Dd::from(9.0).ln() - Dd::from(4.0).ln()
        + c * dd * (dd.ln() / Dd::from(2.0) - Dd::from(delta).ln());
    let conf = Dd::from(8.0) * (Dd::from(2.0) / Dd::from(xi)).ln();
    let e = Dd::from(epsilon);
    (log_term.exp() + conf) / (e * e)
}

/// `(ε − (1 − p̂) − z s) / (p̂ + z s)` with `s = √(p̂(1 − p̂)/n)`.
pub fn interior_error(epsilon: f64, xi: f64, interior: u64, total: u64) -> Dd {
    let n = Dd::from(total as f64);
    let p = Dd::from(interior as f64) / n;
    let one = Dd::from(1.0);
    let zs = z_critical(xi) * (p * (one - p) / n).sqrt();
    (Dd::from(epsilon) - (one - p) - zs) / (p + zs)
}
