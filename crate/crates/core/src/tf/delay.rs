use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rational::RationalFunction;
use super::{FrequencyResponse, HighFrequency};
use crate::error::{Error, Result};

/// `gain(s) * exp(-s * delay)`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayTerm {
    pub gain: RationalFunction,
    pub delay: f64,
}

impl DelayTerm {
    pub fn new(gain: RationalFunction, delay: f64) -> Result<Self> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::InvalidParameter(format!("delay must be finite and >= 0, got {delay}")));
        }
        Ok(Self { gain, delay })
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.gain.eval(s)? * (-s * self.delay).exp())
    }
}

/// Sum of delayed rational terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayFunction {
    terms: Vec<DelayTerm>,
}

impl DelayFunction {
    pub fn new(terms: Vec<DelayTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("delay function needs at least one term".into()));
        }
        Ok(Self { terms })
    }

    pub fn pure_delay(delay: f64) -> Result<Self> {
        Self::new(vec![DelayTerm::new(RationalFunction::one(), delay)?])
    }

    pub fn terms(&self) -> &[DelayTerm] {
        &self.terms
    }

    /// The rational function this reduces to when every delay is zero.
    pub fn to_rational(&self) -> Option<RationalFunction> {
        if self.terms.iter().any(|t| t.delay != 0.0) {
            return None;
        }
        let mut acc = RationalFunction::zero();
        for t in &self.terms {
            acc = &acc + &t.gain;
        }
        Some(acc)
    }
}

impl FrequencyResponse for DelayFunction {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        self.terms.iter().map(|t| t.eval(s)).sum()
    }

    fn dc_value(&self) -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.gain.dc_gain()?;
        }
        Some(acc)
    }

    fn high_frequency(&self) -> HighFrequency {
        let mut limit = 0.0;
        let mut oscillates = false;
        for t in &self.terms {
            match t.gain.high_frequency_gain() {
                None => return HighFrequency::Unbounded,
                Some(v) if t.delay == 0.0 => limit += v,
                Some(v) => oscillates |= v != 0.0,
            }
        }
        if oscillates {
            HighFrequency::Bounded
        } else {
            HighFrequency::Limit(Complex64::new(limit, 0.0))
        }
    }

    fn check_stable(&self) -> Result<()> {
        for t in &self.terms {
            t.gain.check_stable()?;
        }
        Ok(())
    }

    fn as_rational(&self) -> Option<RationalFunction> {
        self.to_rational()
    }
}

/// Closed loop of a swing bus under delayed droop, `1 / (m s + d + e^{-s tau} / r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopDelayLoop {
    pub m: f64,
    pub d: f64,
    pub r: f64,
    pub tau: f64,
}

impl DroopDelayLoop {
    pub fn new(m: f64, d: f64, r: f64, tau: f64) -> Result<Self> {
        if !(m >= 0.0 && d >= 0.0 && r > 0.0 && tau >= 0.0) || ![m, d, r, tau].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "droop loop needs m >= 0, d >= 0, r > 0, tau >= 0 (got m={m}, d={d}, r={r}, tau={tau})"
            )));
        }
        Ok(Self { m, d, r, tau })
    }

    /// Characteristic quasi-polynomial `m s + d + e^{-s tau} / r`.
    pub fn characteristic(&self, s: Complex64) -> Complex64 {
        self.m * s + self.d + (-s * self.tau).exp() / self.r
    }

    /// Number of right half-plane roots of the characteristic quasi-polynomial,
    /// from its winding number along a D-contour sampled at `n` points.
    pub fn rhp_root_count(&self, n: usize) -> i64 {
        if self.m == 0.0 {
            // d + e^{-s tau}/r vanishes on Re s = ln(1/(d r))/tau, a whole chain of
            // roots; the inverse is in H-infinity only when d r > 1. Reported as 1.
            if self.tau == 0.0 {
                return if self.d + 1.0 / self.r > 0.0 { 0 } else { 1 };
            }
            return if self.d > 1.0 / self.r { 0 } else { 1 };
        }
        let tau_hat = if self.tau > 0.0 { self.tau } else { 1.0 };
        let radius = 10.0 * (1.0 / (self.m * self.r) + 1.0 / tau_hat + self.d / self.m + 1.0);
        winding_number(|s| self.characteristic(s), radius, n.max(1000))
    }

    pub fn is_stable(&self) -> bool {
        self.rhp_root_count(10_000) == 0
    }

    pub fn rational_part(&self) -> Option<RationalFunction> {
        if self.tau != 0.0 {
            return None;
        }
        RationalFunction::new(
            super::Polynomial::one(),
            super::Polynomial::from_slice(&[self.d + 1.0 / self.r, self.m]),
        )
        .ok()
    }
}

impl FrequencyResponse for DroopDelayLoop {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        let c = self.characteristic(s);
        let scale = self.m * s.norm() + self.d + (-s.re * self.tau).exp() / self.r;
        if c.norm() <= super::rational::DEFAULT_TOL_POLE * scale {
            return Err(Error::PoleProximity { s });
        }
        Ok(1.0 / c)
    }

    fn dc_value(&self) -> Option<Complex64> {
        Some(Complex64::new(1.0 / (self.d + 1.0 / self.r), 0.0))
    }

    fn high_frequency(&self) -> HighFrequency {
        if self.m > 0.0 {
            HighFrequency::Limit(Complex64::new(0.0, 0.0))
        } else if self.tau == 0.0 {
            HighFrequency::Limit(Complex64::new(1.0 / (self.d + 1.0 / self.r), 0.0))
        } else {
            HighFrequency::Bounded
        }
    }

    fn check_stable(&self) -> Result<()> {
        match self.rhp_root_count(10_000) {
            0 => Ok(()),
            k => Err(Error::UnstableLocalLoop(k)),
        }
    }

    fn as_rational(&self) -> Option<RationalFunction> {
        self.rational_part()
    }
}

/// Winding number of `f` around the origin along the D-contour of the given radius
/// (imaginary axis from `-jR` to `jR`, closed by the right semicircle).
pub fn winding_number<F: Fn(Complex64) -> Complex64>(f: F, radius: f64, n: usize) -> i64 {
    let half = n / 2;
    let mut path = Vec::with_capacity(2 * half + 2);
    // imaginary axis, denser near the origin
    for k in 0..=half {
        let u = -1.0 + 2.0 * k as f64 / half as f64;
        let w = radius * u * u.abs();
        path.push(Complex64::new(0.0, w));
    }
    // right semicircle from jR back to -jR, clockwise
    for k in 1..half {
        let phi = PI / 2.0 - PI * k as f64 / half as f64;
        path.push(Complex64::from_polar(radius, phi));
    }
    path.push(path[0]);
    let mut total = 0.0;
    let mut prev = f(path[0]);
    for s in &path[1..] {
        let cur = f(*s);
        total += (cur / prev).arg();
        prev = cur;
    }
    // the contour is traversed clockwise, so enclosed zeros give negative winding
    -(total / (2.0 * PI)).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_delay_at_j_pi() {
        let e = DelayFunction::pure_delay(1.0).unwrap();
        let v = e.eval(Complex64::new(0.0, PI)).unwrap();
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(DelayTerm::new(RationalFunction::one(), -1.0).is_err());
    }

    #[test]
    fn zero_delay_reduces_to_rational() {
        let g = RationalFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let f = DelayFunction::new(vec![DelayTerm::new(g.clone(), 0.0).unwrap()]).unwrap();
        assert_eq!(f.to_rational().unwrap(), g);
        let s = Complex64::new(0.3, 2.0);
        assert!((f.eval(s).unwrap() - g.eval(s).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn droop_loop_matches_rational_when_delay_free() {
        let l = DroopDelayLoop::new(0.16, 0.02, 2.5, 0.0).unwrap();
        let rat = l.rational_part().unwrap();
        for w in [0.01, 1.0, 30.0] {
            let s = Complex64::new(0.0, w);
            assert!((l.eval(s).unwrap() - rat.eval(s).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn winding_counts_roots() {
        // (s-1)(s+2)(s-3+j)(s-3-j) has three RHP roots
        let f = |s: Complex64| (s - 1.0) * (s + 2.0) * ((s - 3.0).powi(2) + 1.0);
        assert_eq!(winding_number(f, 50.0, 20_000), 3);
        assert_eq!(winding_number(|s| s + 1.0, 50.0, 2_000), 0);
    }

    #[test]
    fn droop_loop_stability_changes_with_delay() {
        // with d = 0, m s + e^{-s tau}/r is stable iff tau < pi m r / 2
        let (m, r) = (0.16, 2.5);
        let crit = PI * m * r / 2.0;
        assert!(DroopDelayLoop::new(m, 0.0, r, 0.9 * crit).unwrap().is_stable());
        assert!(!DroopDelayLoop::new(m, 0.0, r, 1.1 * crit).unwrap().is_stable());
    }
}
