use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use super::{FrequencyResponse, HighFrequency};
use crate::error::{Error, Result};

pub const DEFAULT_TOL_CANCEL: f64 = 1e-8;
pub const DEFAULT_TOL_POLE: f64 = 1e-12;

/// Relative size below which a leading coefficient is treated as rounding noise.
const TRIM_REL: f64 = 1e-14;

/// Scalar real-rational transfer function `num(s) / den(s)` with a monic denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    /// Normalizes the denominator to be monic. No cancellation is attempted.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        let den = den.trimmed(TRIM_REL);
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let lead = den.leading();
        let num = num.trimmed(TRIM_REL).scale(1.0 / lead);
        let den = den.scale(1.0 / lead);
        Ok(Self { num, den })
    }

    /// Monic form with common factors cancelled at the default tolerance.
    pub fn canonical(num: Polynomial, den: Polynomial) -> Result<Self> {
        Ok(Self::new(num, den)?.reduce_minimal(DEFAULT_TOL_CANCEL))
    }

    /// Builds from ascending coefficient slices.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::canonical(Polynomial::from_slice(num), Polynomial::from_slice(den))
    }

    pub fn constant(c: f64) -> Self {
        Self {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// The function `s`.
    pub fn s() -> Self {
        Self {
            num: Polynomial::s(),
            den: Polynomial::one(),
        }
    }

    /// `1 / (a s + b)`
    pub fn first_order_lag(a: f64, b: f64) -> Result<Self> {
        Self::new(Polynomial::one(), Polynomial::from_slice(&[b, a]))
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.num.degree() < self.den.degree()
    }

    /// `deg den - deg num`; negative for improper functions.
    pub fn relative_degree(&self) -> i64 {
        self.den.degree() as i64 - self.num.degree() as i64
    }

    pub fn eval_with_tol(&self, s: Complex64, tol_pole: f64) -> Result<Complex64> {
        let dv = self.den.eval_complex(s);
        let scale = self.den.abs_eval(s);
        if dv.norm() <= tol_pole * scale {
            return Err(Error::PoleProximity { s });
        }
        Ok(self.num.eval_complex(s) / dv)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    /// Pole with the largest real part, if any.
    pub fn rightmost_pole(&self) -> Result<Option<Complex64>> {
        Ok(self
            .poles()?
            .into_iter()
            .max_by(|a, b| a.re.total_cmp(&b.re)))
    }

    /// All poles strictly in the open left half-plane and the function proper.
    pub fn is_stable(&self) -> Result<bool> {
        if !self.is_proper() {
            return Ok(false);
        }
        Ok(self.poles()?.iter().all(|p| p.re < 0.0))
    }

    pub fn dc_gain(&self) -> Option<f64> {
        let d0 = self.den.coeff(0);
        if d0 == 0.0 {
            None
        } else {
            Some(self.num.coeff(0) / d0)
        }
    }

    /// Value of the limit as `|s| -> inf`, `None` when improper.
    pub fn high_frequency_gain(&self) -> Option<f64> {
        match self.relative_degree() {
            0 => Some(self.num.leading()),
            r if r > 0 => Some(0.0),
            _ => None,
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn try_div(&self, rhs: &Self) -> Result<Self> {
        Ok((self * &rhs.inv()?).reduce_minimal(DEFAULT_TOL_CANCEL))
    }

    /// Cancels pole/zero pairs whose relative residuals are below `tol`.
    ///
    /// Nearly real roots are removed as linear factors, the rest as conjugate quadratics.
    pub fn reduce_minimal(&self, tol: f64) -> Self {
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        if num.is_zero() {
            return Self::zero();
        }
        // exact common powers of s
        let zeros = |p: &Polynomial| p.coeffs().iter().take_while(|c| **c == 0.0).count();
        let k = zeros(&num).min(zeros(&den));
        if k > 0 {
            num = Polynomial::from_slice(&num.coeffs()[k..]);
            den = Polynomial::from_slice(&den.coeffs()[k..]);
        }
        'outer: loop {
            if den.degree() == 0 || num.degree() == 0 {
                break;
            }
            let Ok(roots) = den.roots() else { break };
            for r in roots {
                if r.im < 0.0 {
                    continue;
                }
                let real_ok = r.im.abs() <= 1e-6 * r.norm().max(1e-300);
                let candidates: Vec<Polynomial> = if real_ok {
                    vec![Polynomial::linear(-r.re)]
                } else {
                    vec![Polynomial::from_slice(&[r.norm_sqr(), -2.0 * r.re, 1.0])]
                };
                for factor in candidates {
                    let probe = if factor.degree() == 1 {
                        Complex64::new(r.re, 0.0)
                    } else {
                        r
                    };
                    if factor.degree() > num.degree() {
                        continue;
                    }
                    if num.relative_residual(probe) < tol && den.relative_residual(probe) < tol {
                        let n2 = num.div_rem(&factor).0;
                        let d2 = den.div_rem(&factor).0;
                        // small residuals also occur near clusters of distinct roots
                        if same_response(&num, &den, &n2, &d2, r.norm()) {
                            num = n2;
                            den = d2;
                            continue 'outer;
                        }
                    }
                }
            }
            break;
        }
        let lead = den.leading();
        Self {
            num: num.scale(1.0 / lead).trimmed(TRIM_REL),
            den: den.scale(1.0 / lead),
        }
    }

    fn sum(&self, rhs: &Self, sign: f64) -> Self {
        let a = &self.num * &rhs.den;
        let b = (&rhs.num * &self.den).scale(sign);
        // coefficients that cancel to rounding level are set to zero so that exact
        // identities such as 1 - 1 produce the zero polynomial
        let n = a.coeffs().len().max(b.coeffs().len());
        let coeffs = (0..n)
            .map(|k| {
                let (x, y) = (a.coeff(k), b.coeff(k));
                let v = x + y;
                if v.abs() <= 64.0 * f64::EPSILON * (x.abs() + y.abs()) {
                    0.0
                } else {
                    v
                }
            })
            .collect();
        let den = &self.den * &rhs.den;
        Self::new(Polynomial::new(coeffs), den)
            .expect("product of monic denominators is nonzero")
            .reduce_minimal(DEFAULT_TOL_CANCEL)
    }
}

impl Default for RationalFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl<'a> Add<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        self.sum(rhs, 1.0)
    }
}

impl<'a> Sub<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self.sum(rhs, -1.0)
    }
}

impl<'a> Mul<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::new(&self.num * &rhs.num, &self.den * &rhs.den)
            .expect("product of monic denominators is nonzero")
            .reduce_minimal(DEFAULT_TOL_CANCEL)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        self.scale(-1.0)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

impl FrequencyResponse for RationalFunction {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        self.eval_with_tol(s, DEFAULT_TOL_POLE)
    }

    fn dc_value(&self) -> Option<Complex64> {
        self.dc_gain().map(|v| Complex64::new(v, 0.0))
    }

    fn high_frequency(&self) -> HighFrequency {
        match self.high_frequency_gain() {
            Some(v) => HighFrequency::Limit(Complex64::new(v, 0.0)),
            None => HighFrequency::Unbounded,
        }
    }

    fn check_stable(&self) -> Result<()> {
        if !self.is_proper() {
            return Err(Error::ImproperFunction {
                num: self.num.degree(),
                den: self.den.degree(),
            });
        }
        match self.rightmost_pole()? {
            Some(p) if p.re >= 0.0 => Err(Error::UnstableP(p)),
            _ => Ok(()),
        }
    }

    fn as_rational(&self) -> Option<RationalFunction> {
        Some(self.clone())
    }
}

/// Compares `n1/d1` with `n2/d2` on the imaginary axis around `scale`.
fn same_response(n1: &Polynomial, d1: &Polynomial, n2: &Polynomial, d2: &Polynomial, scale: f64) -> bool {
    let scale = scale.max(1e-6);
    [1e-2, 0.3, 1.0, 3.0, 1e2].iter().all(|&f| {
        let s = Complex64::new(0.0, f * scale);
        let (a, b) = (n1.eval_complex(s) / d1.eval_complex(s), n2.eval_complex(s) / d2.eval_complex(s));
        !a.is_finite() || !b.is_finite() || (a - b).norm() <= 1e-10 * a.norm().max(b.norm()).max(1e-300)
    })
}
