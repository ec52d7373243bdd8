//! Small numeric helpers shared across modules.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// e(t) = exp(2 pi i t), with t reduced mod 1 first.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let r = t - t.floor();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// e(num / den) for integers, reduced exactly.
#[inline]
pub fn e_ratio(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    e(r)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanComplex {
    re: KahanSum,
    im: KahanSum,
}

impl KahanComplex {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn sum_compensated<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut s = KahanSum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Returns Some(k) with n = p^k.
pub fn log_p_exact(n: u64, p: u64) -> Option<u32> {
    if n == 0 || p < 2 {
        return None;
    }
    let mut k = 0;
    let mut m = n;
    while m % p == 0 {
        m /= p;
        k += 1;
    }
    (m == 1).then_some(k)
}

/// p-adic valuation of k, saturated at `cap` (k = 0 gives `cap`).
#[inline]
pub fn valuation(mut k: u64, p: u64, cap: u32) -> u32 {
    if k == 0 {
        return cap;
    }
    let mut v = 0;
    while k % p == 0 && v < cap {
        k /= p;
        v += 1;
    }
    v
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

pub fn l2_norm(a: &[Complex64]) -> f64 {
    sum_compensated(a.iter().map(|z| z.norm_sqr())).sqrt()
}
