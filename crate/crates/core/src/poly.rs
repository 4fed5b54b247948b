//! Bivariate polynomials of degree at most three.

use crate::wall::WallDerivatives;

/// `sum c[p][q] z1^p z2^q`, `p + q <= 3`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Poly3 {
    pub c: [[f64; 4]; 4],
}

impl Poly3 {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `(1/2) x^T H x`.
    pub fn quadratic_form(d: &WallDerivatives) -> Self {
        let h = d.hessian;
        let mut p = Self::zero();
        p.c[2][0] = 0.5 * h[0][0];
        p.c[1][1] = h[0][1];
        p.c[0][2] = 0.5 * h[1][1];
        p
    }

    /// `(1/6) sum kappa_ijk x_i x_j x_k`.
    pub fn cubic_form(d: &WallDerivatives) -> Self {
        let [k111, k112, k122, k222] = d.third;
        let mut p = Self::zero();
        p.c[3][0] = k111 / 6.0;
        p.c[2][1] = k112 / 2.0;
        p.c[1][2] = k122 / 2.0;
        p.c[0][3] = k222 / 6.0;
        p
    }

    pub fn eval(&self, z1: f64, z2: f64) -> f64 {
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..(4 - p) {
                s += self.c[p][q] * z1.powi(p as i32) * z2.powi(q as i32);
            }
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().flatten().all(|&v| v == 0.0)
    }

    /// The polynomial `z -> self(A z)`.
    pub fn substitute(&self, a: [[f64; 2]; 2]) -> Self {
        // powers of the two linear forms, as coefficient arrays
        let l1 = lin(a[0][0], a[0][1]);
        let l2 = lin(a[1][0], a[1][1]);
        let mut pw1 = [one(); 4];
        let mut pw2 = [one(); 4];
        for k in 1..4 {
            pw1[k] = mul(&pw1[k - 1], &l1);
            pw2[k] = mul(&pw2[k - 1], &l2);
        }
        let mut out = Self::zero();
        for p in 0..4 {
            for q in 0..(4 - p) {
                let coef = self.c[p][q];
                if coef == 0.0 {
                    continue;
                }
                let term = mul(&pw1[p], &pw2[q]);
                for i in 0..4 {
                    for j in 0..(4 - i) {
                        out.c[i][j] += coef * term[i][j];
                    }
                }
            }
        }
        out
    }
}

type Coeffs = [[f64; 4]; 4];

fn one() -> Coeffs {
    let mut c = [[0.0; 4]; 4];
    c[0][0] = 1.0;
    c
}

fn lin(a1: f64, a2: f64) -> Coeffs {
    let mut c = [[0.0; 4]; 4];
    c[1][0] = a1;
    c[0][1] = a2;
    c
}

fn mul(x: &Coeffs, y: &Coeffs) -> Coeffs {
    let mut c = [[0.0; 4]; 4];
    for p in 0..4 {
        for q in 0..(4 - p) {
            if x[p][q] == 0.0 {
                continue;
            }
            for r in 0..(4 - p) {
                for s in 0..(4 - p - q).saturating_sub(r) {
                    c[p + r][q + s] += x[p][q] * y[r][s];
                }
            }
        }
    }
    c
}
