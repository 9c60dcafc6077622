//! Transfer-function algebra: polynomials, rational and delayed functions,
//! 2x2 generalized plants, state-space realizations and frequency grids.

mod delay;
mod grid;
mod poly;
mod rational;
mod ss;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use delay::{winding_number, DelayFunction, DelayTerm, DroopDelayLoop};
pub use grid::FrequencyGrid;
pub use poly::{Polynomial, MAX_ROOT_DEGREE};
pub use rational::{RationalFunction, DEFAULT_TOL_CANCEL, DEFAULT_TOL_POLE};
pub use ss::{realize_state_space, series_h_over_s, StateSpaceRealization};

use crate::error::{Error, Result};

/// Behaviour of a response as `|omega| -> inf` on the imaginary axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HighFrequency {
    Limit(Complex64),
    /// Bounded but without a limit (delayed terms).
    Bounded,
    Unbounded,
}

/// Anything that can be evaluated in the complex plane and checked for stability.
pub trait FrequencyResponse: Send + Sync {
    fn eval(&self, s: Complex64) -> Result<Complex64>;

    fn eval_jw(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Value at `s = 0`, `None` for a pole there.
    fn dc_value(&self) -> Option<Complex64>;

    fn high_frequency(&self) -> HighFrequency;

    /// `Ok` when the function is analytic and bounded on the closed right half-plane.
    fn check_stable(&self) -> Result<()>;

    fn as_rational(&self) -> Option<RationalFunction> {
        None
    }
}

impl<T: FrequencyResponse + ?Sized> FrequencyResponse for &T {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        (**self).eval(s)
    }
    fn dc_value(&self) -> Option<Complex64> {
        (**self).dc_value()
    }
    fn high_frequency(&self) -> HighFrequency {
        (**self).high_frequency()
    }
    fn check_stable(&self) -> Result<()> {
        (**self).check_stable()
    }
    fn as_rational(&self) -> Option<RationalFunction> {
        (**self).as_rational()
    }
}

impl<T: FrequencyResponse + ?Sized> FrequencyResponse for Box<T> {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        (**self).eval(s)
    }
    fn dc_value(&self) -> Option<Complex64> {
        (**self).dc_value()
    }
    fn high_frequency(&self) -> HighFrequency {
        (**self).high_frequency()
    }
    fn check_stable(&self) -> Result<()> {
        (**self).check_stable()
    }
    fn as_rational(&self) -> Option<RationalFunction> {
        (**self).as_rational()
    }
}

/// `gamma * f`
#[derive(Clone, Debug)]
pub struct Scaled<F> {
    pub inner: F,
    pub gamma: f64,
}

impl<F: FrequencyResponse> FrequencyResponse for Scaled<F> {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.inner.eval(s)? * self.gamma)
    }
    fn dc_value(&self) -> Option<Complex64> {
        self.inner.dc_value().map(|v| v * self.gamma)
    }
    fn high_frequency(&self) -> HighFrequency {
        match self.inner.high_frequency() {
            HighFrequency::Limit(v) => HighFrequency::Limit(v * self.gamma),
            other => other,
        }
    }
    fn check_stable(&self) -> Result<()> {
        self.inner.check_stable()
    }
    fn as_rational(&self) -> Option<RationalFunction> {
        self.inner.as_rational().map(|r| r.scale(self.gamma))
    }
}

/// Generalized plant with scalar blocks `[[g11, g12], [g21, g22]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix2x2 {
    pub g11: RationalFunction,
    pub g12: RationalFunction,
    pub g21: RationalFunction,
    pub g22: RationalFunction,
}

impl TransferMatrix2x2 {
    pub fn new(g11: RationalFunction, g12: RationalFunction, g21: RationalFunction, g22: RationalFunction) -> Self {
        Self { g11, g12, g21, g22 }
    }

    /// All four blocks equal to `g`.
    pub fn uniform(g: RationalFunction) -> Self {
        Self::new(g.clone(), g.clone(), g.clone(), g)
    }

    pub fn eval(&self, s: Complex64) -> Result<[[Complex64; 2]; 2]> {
        Ok([
            [self.g11.eval(s)?, self.g12.eval(s)?],
            [self.g21.eval(s)?, self.g22.eval(s)?],
        ])
    }
}

/// Lower LFT `G11 + G12 c (1 - G22 c)^{-1} G21`, reduced.
///
/// Formed as one quotient of polynomials. Factors that appear verbatim in both terms, or in
/// the numerator and denominator, are cancelled before the numeric reduction, so shared
/// plant poles never go through root finding.
pub fn lft_lower(g: &TransferMatrix2x2, c: &RationalFunction) -> Result<RationalFunction> {
    if c.is_zero() {
        return Ok(g.g11.clone());
    }
    let loop_poly = &(g.g22.den() * c.den()) - &(g.g22.num() * c.num());
    if loop_poly.clone().trimmed(1e-14).is_zero() {
        return Err(Error::SingularLoop);
    }
    let mut t1 = vec![g.g11.num(), g.g12.den(), g.g21.den(), &loop_poly];
    let mut t2 = vec![g.g11.den(), g.g12.num(), c.num(), g.g21.num(), g.g22.den()];
    let mut den = vec![g.g11.den(), g.g12.den(), g.g21.den(), &loop_poly];
    let mut common = Vec::new();
    let mut k = 0;
    while k < t1.len() {
        if let Some(pos) = t2.iter().position(|f| *f == t1[k]) {
            common.push(t1.remove(k));
            t2.remove(pos);
        } else {
            k += 1;
        }
    }
    common.retain(|f| match den.iter().position(|d| d == f) {
        Some(pos) => {
            den.remove(pos);
            false
        }
        None => true,
    });
    let prod = |fs: &[&Polynomial]| fs.iter().fold(Polynomial::one(), |acc, f| &acc * *f);
    let sum = &prod(&t1) + &prod(&t2);
    let num = &prod(&common) * &sum;
    Ok(RationalFunction::new(num, prod(&den))?.reduce_minimal(DEFAULT_TOL_CANCEL))
}

/// Scalar LFT applied to already evaluated blocks.
pub fn lft_lower_value(g: &[[Complex64; 2]; 2], c: Complex64) -> Complex64 {
    g[0][0] + g[0][1] * c * g[1][0] / (1.0 - g[1][1] * c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(n: &[f64], d: &[f64]) -> RationalFunction {
        RationalFunction::from_coeffs(n, d).unwrap()
    }

    #[test]
    fn lft_with_zero_controller_is_g11() {
        let g = TransferMatrix2x2::new(
            rf(&[1.0], &[1.0, 1.0]),
            rf(&[2.0], &[3.0, 1.0]),
            rf(&[1.0, 1.0], &[5.0, 1.0]),
            rf(&[1.0], &[1.0, 2.0]),
        );
        assert_eq!(lft_lower(&g, &RationalFunction::zero()).unwrap(), g.g11);
    }

    #[test]
    fn droop_lft_closed_form() {
        let (m, d, r) = (0.16, 0.02, 2.5);
        let g = TransferMatrix2x2::uniform(RationalFunction::first_order_lag(m, d).unwrap());
        let c = RationalFunction::constant(-1.0 / r);
        let cl = lft_lower(&g, &c).unwrap();
        let want = RationalFunction::first_order_lag(m, d + 1.0 / r).unwrap();
        assert_eq!(cl.den().degree(), 1);
        for (x, y) in cl.den().coeffs().iter().zip(want.den().coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((cl.num().coeff(0) - want.num().coeff(0)).abs() < 1e-12);
    }

    #[test]
    fn singular_loop_detected() {
        let g = TransferMatrix2x2::uniform(RationalFunction::one());
        assert_eq!(lft_lower(&g, &RationalFunction::one()).unwrap_err(), Error::SingularLoop);
    }

    #[test]
    fn lft_commutes_with_evaluation() {
        let g = TransferMatrix2x2::new(
            rf(&[1.0, 0.5], &[2.0, 3.0, 1.0]),
            rf(&[2.0], &[3.0, 1.0]),
            rf(&[1.0, 1.0], &[5.0, 1.0]),
            rf(&[1.0], &[1.0, 2.0]),
        );
        let c = rf(&[-0.3, 0.1], &[0.0, 1.0]);
        let cl = lft_lower(&g, &c).unwrap();
        for k in 0..30 {
            let s = Complex64::new(0.0, 10f64.powf(-2.0 + 0.15 * k as f64));
            let want = lft_lower_value(&g.eval(s).unwrap(), c.eval(s).unwrap());
            let got = cl.eval(s).unwrap();
            assert!((want - got).norm() < 1e-10 * want.norm().max(1.0));
        }
    }
}
