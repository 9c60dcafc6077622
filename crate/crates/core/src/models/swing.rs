use serde::{Deserialize, Serialize};

use crate::cert::pr_test_biquad;
use crate::error::{Error, Result};
use crate::tf::{RationalFunction, TransferMatrix2x2};

/// Uncontrolled rotor dynamics `m theta'' + d theta' = P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwingParams {
    pub m: f64,
    pub d: f64,
}

impl SwingParams {
    pub fn new(m: f64, d: f64) -> Result<Self> {
        if !(m >= 0.0 && d > 0.0 && m.is_finite() && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("swing bus needs m >= 0 and d > 0 (got m={m}, d={d})")));
        }
        Ok(Self { m, d })
    }

    /// `1 / (m s + d)`
    pub fn transfer(&self) -> RationalFunction {
        RationalFunction::first_order_lag(self.m, self.d).expect("d > 0")
    }
}

pub fn swing_plant(p: &SwingParams) -> TransferMatrix2x2 {
    TransferMatrix2x2::uniform(p.transfer())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwingCertificate {
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilon: f64,
}

impl SwingCertificate {
    /// Ascending numerator and denominator of `h(s)(1 + gamma p(s)/s) - epsilon` for `h = s/(s+T)`.
    pub fn biquad(&self, p: &SwingParams, gamma: f64) -> ([f64; 3], [f64; 3]) {
        let (m, d, t, e) = (p.m, p.d, self.t, self.epsilon);
        (
            [gamma - t * d * e, d - d * e - t * e * m, (1.0 - e) * m],
            [t * d, d + t * m, m],
        )
    }
}

/// Multiplier corner `T` and ESPR margin `epsilon` certifying `gamma / (m s + d)`.
///
/// `T = gamma/d` meets the first requirement with equality; `epsilon` is half of its
/// admissible upper bound. `T` doubles if the biquadratic check disagrees numerically.
pub fn swing_certificate(p: &SwingParams, gamma: f64) -> Result<SwingCertificate> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let (m, d) = (p.m, p.d);
    let mut t = gamma / d;
    for _ in 0..60 {
        let epsilon = 0.5 * d * d / (d * (d + t * m) + t * t * m * m);
        let first = (1.0 - epsilon) * m * t * d >= m * (gamma - t * d * epsilon);
        let cert = SwingCertificate { t, epsilon };
        let (a, b) = cert.biquad(p, gamma);
        if first && pr_test_biquad(a, b)? {
            return Ok(cert);
        }
        t *= 2.0;
    }
    Err(Error::SearchExhausted(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::{espr_margin_grid, Multiplier, MembershipFunction};
    use crate::tf::FrequencyGrid;

    #[test]
    fn plant_examples() {
        let g = swing_plant(&SwingParams::new(1.0, 1.0).unwrap());
        assert_eq!(g.g11, RationalFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap());
        let g = swing_plant(&SwingParams::new(0.0, 1.0).unwrap());
        assert_eq!(g.g22, RationalFunction::one());
        assert!(SwingParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn certificate_examples() {
        let p = SwingParams::new(1.0, 1.0).unwrap();
        let c = swing_certificate(&p, 1.0).unwrap();
        let (a, b) = c.biquad(&p, 1.0);
        assert!(pr_test_biquad(a, b).unwrap());

        let p = SwingParams::new(0.16, 0.02).unwrap();
        let c = swing_certificate(&p, 2.0).unwrap();
        assert!(c.t >= 100.0);
        let bound = p.d * p.d / (p.d * (p.d + c.t * p.m) + c.t * c.t * p.m * p.m);
        assert!(c.epsilon <= bound);
        let h = Multiplier::first_order(c.t).unwrap();
        let pt = p.transfer();
        let f = MembershipFunction { p: &pt, h: &h, gamma: 2.0 };
        let grid = FrequencyGrid::default().widened(1e-6, 1e6);
        assert!(espr_margin_grid(&f, &grid).unwrap().epsilon_margin >= c.epsilon);

        let p = SwingParams::new(0.0, 0.5).unwrap();
        let c = swing_certificate(&p, 3.0).unwrap();
        let (a, b) = c.biquad(&p, 3.0);
        assert!(pr_test_biquad(a, b).unwrap());
    }
}
