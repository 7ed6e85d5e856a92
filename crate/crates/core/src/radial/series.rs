//! Truncated power series in one variable, enough to expand the rational
//! coefficients of the radial equation about any point.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub c: Vec<f64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Series { c: vec![0.0; order + 1] }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.c[0] = v;
        s
    }

    /// `y0 + ζ`, the expansion variable shifted to the point `y0`.
    pub fn ident(y0: f64, order: usize) -> Self {
        let mut s = Self::constant(y0, order);
        if order >= 1 {
            s.c[1] = 1.0;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn scale(&self, k: f64) -> Self {
        Series { c: self.c.iter().map(|x| x * k).collect() }
    }

    pub fn add_const(&self, k: f64) -> Self {
        let mut s = self.clone();
        s.c[0] += k;
        s
    }

    /// Division; the divisor must not vanish at the origin.
    pub fn div(&self, d: &Series) -> Series {
        let n = self.c.len().min(d.c.len());
        let mut out = vec![0.0; n];
        let d0 = d.c[0];
        for k in 0..n {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc -= d.c[i] * out[k - i];
            }
            out[k] = acc / d0;
        }
        Series { c: out }
    }

    /// Divide by `ζ`, assuming the constant term is (numerically) zero.
    pub fn shift_down(&self) -> Series {
        let mut c: Vec<f64> = self.c[1..].to_vec();
        c.push(0.0);
        Series { c }
    }

    /// Multiply by `ζ`.
    pub fn shift_up(&self) -> Series {
        let mut c = vec![0.0];
        c.extend_from_slice(&self.c[..self.c.len() - 1]);
        Series { c }
    }

    pub fn deriv(&self) -> Series {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for k in 1..n {
            c[k - 1] = k as f64 * self.c[k];
        }
        Series { c }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &x| acc * z + x)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, o: &Series) -> Series {
        let n = self.c.len().min(o.c.len());
        Series { c: (0..n).map(|i| self.c[i] + o.c[i]).collect() }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, o: &Series) -> Series {
        let n = self.c.len().min(o.c.len());
        Series { c: (0..n).map(|i| self.c[i] - o.c[i]).collect() }
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, o: &Series) -> Series {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![0.0; n];
        for i in 0..n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Series { c }
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_by_division() {
        let one = Series::constant(1.0, 10);
        let d = &one - &Series::ident(0.0, 10);
        let g = one.div(&d);
        assert!(g.c.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn product_matches_pointwise() {
        let x = Series::ident(0.3, 12);
        let a = &(&x * &x) + &x;
        let b = x.add_const(2.0);
        let p = &a * &b;
        let z = 0.1;
        let xv = 0.3 + z;
        assert!((p.eval(z) - (xv * xv + xv) * (xv + 2.0)).abs() < 1e-14);
    }
}
