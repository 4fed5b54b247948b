//! Truncated bivariate Taylor series ("jets").
//!
//! A `Jet` of order `n` about a base point `p` stores the coefficients
//! `c[p, q]` of `sum c[p, q] h1^p h2^q` for `p + q <= n`, i.e. the Taylor
//! polynomial of a smooth function at `p`. Arithmetic on jets propagates
//! exact derivatives through arbitrary compositions, which is how domain
//! walls obtain analytic derivatives without a symbolic layer.

use std::ops::{Add, Mul, Neg, Sub};

/// Largest supported jet order.
pub const MAX_ORDER: usize = 6;
const CAP: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[inline]
fn idx(p: usize, q: usize) -> usize {
    let d = p + q;
    d * (d + 1) / 2 + q
}

#[inline]
fn len_for(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; CAP],
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; CAP];
        c[0] = value;
        Jet { order, c }
    }

    /// The coordinate function `x1` expanded about `x1 = at`.
    pub fn var_x(at: f64, order: usize) -> Self {
        let mut j = Self::constant(at, order);
        if order >= 1 {
            j.c[idx(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate function `x2` expanded about `x2 = at`.
    pub fn var_y(at: f64, order: usize) -> Self {
        let mut j = Self::constant(at, order);
        if order >= 1 {
            j.c[idx(0, 1)] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of `h1^p h2^q` (zero beyond the order).
    pub fn coeff(&self, p: usize, q: usize) -> f64 {
        if p + q > self.order {
            0.0
        } else {
            self.c[idx(p, q)]
        }
    }

    /// Mixed partial derivative `d^(p+q) / dx1^p dx2^q` at the base point.
    pub fn derivative(&self, p: usize, q: usize) -> f64 {
        self.coeff(p, q) * factorial(p) * factorial(q)
    }

    pub fn is_finite(&self) -> bool {
        self.c[..len_for(self.order)].iter().all(|v| v.is_finite())
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut c = [0.0; CAP];
        let n = len_for(order);
        c[..n].copy_from_slice(&self.c[..n]);
        Jet { order, c }
    }

    /// Partial derivative in `x1`; the result has order one lower.
    pub fn d1(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut c = [0.0; CAP];
        for d in 0..=order {
            for q in 0..=d {
                let p = d - q;
                c[idx(p, q)] = (p + 1) as f64 * self.c[idx(p + 1, q)];
            }
        }
        Jet { order, c }
    }

    /// Partial derivative in `x2`; the result has order one lower.
    pub fn d2(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut c = [0.0; CAP];
        for d in 0..=order {
            for q in 0..=d {
                let p = d - q;
                c[idx(p, q)] = (q + 1) as f64 * self.c[idx(p, q + 1)];
            }
        }
        Jet { order, c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for v in out.c[..len_for(self.order)].iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn add_const(&self, s: f64) -> Self {
        let mut out = *self;
        out.c[0] += s;
        out
    }

    /// `sum_k coeffs[k] (self - self(0))^k`, with `coeffs[k] = f^(k)(a)/k!`.
    fn compose(&self, coeffs: &[f64]) -> Self {
        let order = self.order;
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut out = Jet::constant(coeffs[0], order);
        let mut power = Jet::constant(1.0, order);
        for &ck in coeffs.iter().take(order + 1).skip(1) {
            power = power * delta;
            out = out + power.scale(ck);
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = self.c[0];
        let mut coeffs = [0.0; MAX_ORDER + 1];
        let mut v = 1.0 / a;
        for ck in coeffs.iter_mut().take(self.order + 1) {
            *ck = v;
            v *= -1.0 / a;
        }
        self.compose(&coeffs)
    }

    pub fn powf(&self, exponent: f64) -> Self {
        let a = self.c[0];
        let mut coeffs = [0.0; MAX_ORDER + 1];
        // binomial series: a^(e-k) * C(e, k)
        let mut binom = 1.0;
        for (k, ck) in coeffs.iter_mut().enumerate().take(self.order + 1) {
            if k > 0 {
                binom *= (exponent - (k as f64 - 1.0)) / k as f64;
            }
            *ck = binom * a.powf(exponent - k as f64);
        }
        self.compose(&coeffs)
    }

    pub fn sqrt(&self) -> Self {
        if self.order == 0 {
            return Jet::constant(self.c[0].sqrt(), 0);
        }
        self.powf(0.5)
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        let mut coeffs = [0.0; MAX_ORDER + 1];
        for (k, ck) in coeffs.iter_mut().enumerate().take(self.order + 1) {
            *ck = e / factorial(k);
        }
        self.compose(&coeffs)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [s, c, -s, -c];
        let mut coeffs = [0.0; MAX_ORDER + 1];
        for (k, ck) in coeffs.iter_mut().enumerate().take(self.order + 1) {
            *ck = cycle[k % 4] / factorial(k);
        }
        self.compose(&coeffs)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        let cycle = [c, -s, -c, s];
        let mut coeffs = [0.0; MAX_ORDER + 1];
        for (k, ck) in coeffs.iter_mut().enumerate().take(self.order + 1) {
            *ck = cycle[k % 4] / factorial(k);
        }
        self.compose(&coeffs)
    }

    pub fn tanh(&self) -> Self {
        // tanh(u) = 1 - 2 / (exp(2u) + 1), stable for u >= 0; odd symmetry otherwise
        if self.c[0] < 0.0 {
            return -(-*self).tanh();
        }
        let e = self.scale(2.0).exp().add_const(1.0);
        e.recip().scale(-2.0).add_const(1.0)
    }

    pub fn square(&self) -> Self {
        *self * *self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = self.truncate(order);
        for i in 0..len_for(order) {
            out.c[i] += rhs.c[i];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [0.0; CAP];
        for d1 in 0..=order {
            for q1 in 0..=d1 {
                let a = self.c[idx(d1 - q1, q1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(order - d1) {
                    for q2 in 0..=d2 {
                        let p = d1 - q1 + d2 - q2;
                        c[idx(p, q1 + q2)] += a * rhs.c[idx(d2 - q2, q2)];
                    }
                }
            }
        }
        Jet { order, c }
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_coordinates() {
        let x = Jet::var_x(2.0, 3);
        let y = Jet::var_y(-1.0, 3);
        let f = x * y;
        assert_eq!(f.value(), -2.0);
        assert_eq!(f.derivative(1, 0), -1.0);
        assert_eq!(f.derivative(0, 1), 2.0);
        assert_eq!(f.derivative(1, 1), 1.0);
        assert_eq!(f.derivative(2, 0), 0.0);
    }

    #[test]
    fn sqrt_of_radius_matches_hand_derivatives() {
        let (x0, y0) = (0.6, 0.8);
        let x = Jet::var_x(x0, 3);
        let y = Jet::var_y(y0, 3);
        let r = (x.square() + y.square()).sqrt();
        assert!((r.value() - 1.0).abs() < 1e-15);
        assert!((r.derivative(1, 0) - x0).abs() < 1e-15);
        // d2/dx2 |x| = y^2 / |x|^3
        assert!((r.derivative(2, 0) - y0 * y0).abs() < 1e-14);
        assert!((r.derivative(1, 1) + x0 * y0).abs() < 1e-14);
        // d3/dx3 |x| = -3 x y^2 / |x|^5
        assert!((r.derivative(3, 0) + 3.0 * x0 * y0 * y0).abs() < 1e-13);
    }

    #[test]
    fn tanh_derivatives() {
        for &u0 in &[-1.3, 0.0, 0.7] {
            let t = Jet::var_x(u0, 3).tanh();
            let th = f64::tanh(u0);
            let s2 = 1.0 - th * th;
            assert!((t.value() - th).abs() < 1e-15);
            assert!((t.derivative(1, 0) - s2).abs() < 1e-14);
            assert!((t.derivative(2, 0) + 2.0 * th * s2).abs() < 1e-13);
            assert!((t.derivative(3, 0) - (-2.0 * s2 * s2 + 4.0 * th * th * s2)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_jet_is_jet_of_derivative() {
        let x = Jet::var_x(0.3, 5);
        let y = Jet::var_y(-0.4, 5);
        let f = (x * y).sin() + x.exp() * y.square();
        let fx = f.d1();
        let g = (x * y).cos() * y + x.exp() * y.square();
        for d in 0..=4 {
            for q in 0..=d {
                assert!((fx.coeff(d - q, q) - g.coeff(d - q, q)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recip_round_trip() {
        let x = Jet::var_x(1.7, 6);
        let y = Jet::var_y(0.2, 6);
        let f = x.square() + y.sin().add_const(2.0);
        let one = f * f.recip();
        assert!((one.value() - 1.0).abs() < 1e-15);
        for d in 1..=6 {
            for q in 0..=d {
                assert!(one.coeff(d - q, q).abs() < 1e-12);
            }
        }
    }
}
