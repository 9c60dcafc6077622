use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg;

/// Above this degree companion-matrix roots lose too many digits to be trusted.
pub const MAX_ROOT_DEGREE: usize = 30;

/// Real polynomial stored with ascending coefficients, `c[0] + c[1] s + ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial, trimming exact trailing zeros.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim_exact();
        p
    }

    pub fn from_slice(c: &[f64]) -> Self {
        Self::new(c.to_vec())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `s`.
    pub fn s() -> Self {
        Self { coeffs: vec![0.0, 1.0] }
    }

    /// `s + a`
    pub fn linear(a: f64) -> Self {
        Self::new(vec![a, 1.0])
    }

    /// Monic polynomial with the given roots; complex roots must come in conjugate pairs.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c.into_iter().map(|z| z.re).collect())
    }

    fn trim_exact(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    /// Drops leading coefficients below `rel * max|c|`.
    pub fn trimmed(mut self, rel: f64) -> Self {
        let scale = self.norm_inf();
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().abs() <= rel * scale {
            self.coeffs.pop();
        }
        if scale == 0.0 || (self.coeffs.len() == 1 && self.coeffs[0].abs() <= rel * scale) {
            return Self::zero();
        }
        self
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |a, c| a.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    /// `sum |c_k| |s|^k`, the natural scale for relative residuals at `s`.
    pub fn abs_eval(&self, s: Complex64) -> f64 {
        let r = s.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.abs())
    }

    /// `|p(s)| / sum |c_k| |s|^k`
    pub fn relative_residual(&self, s: Complex64) -> f64 {
        let scale = self.abs_eval(s);
        if scale == 0.0 {
            return 0.0;
        }
        self.eval_complex(s).norm() / scale
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// Euclidean division; `divisor` must not be zero.
    pub fn div_rem(&self, divisor: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.degree();
        if self.degree() < dd {
            return (Self::zero(), self.clone());
        }
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * dc;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd.max(1));
        (Self::new(quot), Self::new(rem))
    }

    /// Roots from the eigenvalues of the balanced companion matrix, polished by Newton steps.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let p = self.clone().trimmed(0.0);
        let n = p.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        if n > MAX_ROOT_DEGREE {
            log::warn!("root finding on a degree-{n} polynomial; companion eigenvalues are poorly conditioned");
        }
        let lead = p.leading();
        let mut comp = DMatrix::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -p.coeffs[i] / lead;
        }
        let mut roots = linalg::eigenvalues(&comp)?;
        let dp = p.derivative();
        for r in roots.iter_mut() {
            let mut best = *r;
            let mut best_res = p.eval_complex(best).norm();
            let mut z = *r;
            for _ in 0..3 {
                let d = dp.eval_complex(z);
                if d.norm() == 0.0 {
                    break;
                }
                z -= p.eval_complex(z) / d;
                let res = p.eval_complex(z).norm();
                if res.is_finite() && res < best_res {
                    best = z;
                    best_res = res;
                }
            }
            // keep real roots real
            if r.im == 0.0 {
                best.im = 0.0;
            }
            *r = best;
        }
        Ok(roots)
    }
}

impl Default for Polynomial {
    fn default() -> Self {
        Self::zero()
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0.0 && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}s")?,
                _ => write!(f, "{a}s^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_zeros_trimmed_and_zero_is_canonical() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        let z = Polynomial::new(vec![0.0, 0.0]);
        assert_eq!(z, Polynomial::zero());
        assert!(z.is_zero());
        assert_eq!(Polynomial::new(vec![]), Polynomial::zero());
    }

    #[test]
    fn arithmetic_and_division() {
        let a = Polynomial::from_slice(&[1.0, 1.0]); // s + 1
        let b = Polynomial::from_slice(&[2.0, 1.0]); // s + 2
        let prod = &a * &b;
        assert_eq!(prod.coeffs(), &[2.0, 3.0, 1.0]);
        let (q, r) = prod.div_rem(&a);
        assert_eq!(q, b);
        assert!(r.is_zero());
        let (q, r) = Polynomial::from_slice(&[1.0, 0.0, 1.0]).div_rem(&a);
        assert_eq!(q.coeffs(), &[-1.0, 1.0]);
        assert_eq!(r.coeffs(), &[2.0]);
    }

    #[test]
    fn roots_of_known_polynomials() {
        let p = Polynomial::from_roots(&[
            Complex64::new(-1.0, 0.0),
            Complex64::new(-0.5, 2.0),
            Complex64::new(-0.5, -2.0),
            Complex64::new(3.0, 0.0),
        ]);
        let mut r = p.roots().unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        assert!((r[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(-0.5, -2.0)).norm() < 1e-12);
        assert!((r[2] - Complex64::new(-0.5, 2.0)).norm() < 1e-12);
        assert!((r[3] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        assert!(Polynomial::constant(4.0).roots().unwrap().is_empty());
    }

    #[test]
    fn relative_residual_vanishes_at_root() {
        let p = Polynomial::from_slice(&[6.0, -5.0, 1.0]);
        assert!(p.relative_residual(Complex64::new(2.0, 0.0)) < 1e-15);
        assert!(p.relative_residual(Complex64::new(0.0, 0.0)) > 0.9);
    }
}
