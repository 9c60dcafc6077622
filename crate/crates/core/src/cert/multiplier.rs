use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::{FrequencyResponse, HighFrequency, Polynomial, RationalFunction};

/// `h(s) = s/(s+T) * prod_k (s+alpha_k)/(s+beta_k)` with `0 < beta_1 < alpha_1 < beta_2 < ... < T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMultiplier", into = "RawMultiplier")]
pub struct Multiplier {
    t: f64,
    /// `(alpha_k, beta_k)` in increasing order.
    stages: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawMultiplier {
    #[serde(rename = "T")]
    t: f64,
    #[serde(default)]
    stages: Vec<(f64, f64)>,
}

impl TryFrom<RawMultiplier> for Multiplier {
    type Error = Error;
    fn try_from(r: RawMultiplier) -> Result<Self> {
        Multiplier::new(r.t, r.stages)
    }
}

impl From<Multiplier> for RawMultiplier {
    fn from(m: Multiplier) -> Self {
        RawMultiplier {
            t: m.t,
            stages: m.stages,
        }
    }
}

impl Multiplier {
    pub fn new(t: f64, stages: Vec<(f64, f64)>) -> Result<Self> {
        let mut chain = Vec::with_capacity(2 * stages.len() + 1);
        for &(a, b) in &stages {
            chain.push(b);
            chain.push(a);
        }
        chain.push(t);
        if chain.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidMultiplier("all constants must be finite and positive".into()));
        }
        if let Some(w) = chain.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMultiplier(format!(
                "interlacing 0 < beta_1 < alpha_1 < ... < T violated at {} >= {}",
                w[0], w[1]
            )));
        }
        Ok(Self { t, stages })
    }

    /// `s / (s + T)`
    pub fn first_order(t: f64) -> Result<Self> {
        Self::new(t, Vec::new())
    }

    /// Geometric family: the sequence `beta_1, alpha_1, ..., alpha_n, T` has constant ratio `rho`.
    pub fn geometric(t: f64, rho: f64, n: usize) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(Error::InvalidMultiplier(format!("stage ratio must exceed 1, got {rho}")));
        }
        let mut stages = Vec::with_capacity(n);
        for k in 0..n {
            // stage k (0-based) sits 2(n-k) and 2(n-k)-1 ratios below T
            let beta = t / rho.powi(2 * (n - k) as i32);
            let alpha = t / rho.powi(2 * (n - k) as i32 - 1);
            stages.push((alpha, beta));
        }
        Self::new(t, stages)
    }

    #[allow(non_snake_case)]
    pub fn T(&self) -> f64 {
        self.t
    }

    pub fn stages(&self) -> &[(f64, f64)] {
        &self.stages
    }

    /// `h(inf)`, always 1 for this family.
    pub fn h_inf(&self) -> f64 {
        1.0
    }

    /// `prod (s+alpha)/(s+beta)`
    pub fn g_eval(&self, s: Complex64) -> Complex64 {
        self.stages
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &(a, b)| acc * (s + a) / (s + b))
    }

    /// `h(s) / s`
    pub fn h_over_s_eval(&self, s: Complex64) -> Complex64 {
        self.g_eval(s) / (s + self.t)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        s * self.h_over_s_eval(s)
    }

    /// Phase of `h(j omega)` in radians.
    pub fn phase(&self, omega: f64) -> f64 {
        let mut ph = std::f64::consts::FRAC_PI_2 - (omega / self.t).atan();
        for &(a, b) in &self.stages {
            ph += (omega / a).atan() - (omega / b).atan();
        }
        ph
    }

    /// Value of `h(s)/s` at `s = 0`.
    pub fn h_over_s_dc(&self) -> f64 {
        self.stages.iter().fold(1.0 / self.t, |acc, &(a, b)| acc * a / b)
    }

    /// Smallest and largest corner frequency.
    pub fn corner_band(&self) -> (f64, f64) {
        let lo = self.stages.first().map(|s| s.1).unwrap_or(self.t);
        (lo, self.t)
    }

    pub fn g_rational(&self) -> RationalFunction {
        let mut num = Polynomial::one();
        let mut den = Polynomial::one();
        for &(a, b) in &self.stages {
            num = &num * &Polynomial::linear(a);
            den = &den * &Polynomial::linear(b);
        }
        RationalFunction::new(num, den).expect("monic denominator")
    }

    pub fn h_over_s_rational(&self) -> RationalFunction {
        let g = self.g_rational();
        RationalFunction::new(g.num().clone(), g.den() * &Polynomial::linear(self.t)).expect("monic denominator")
    }

    pub fn to_rational(&self) -> RationalFunction {
        let hs = self.h_over_s_rational();
        RationalFunction::new(hs.num() * &Polynomial::s(), hs.den().clone()).expect("monic denominator")
    }
}

impl FrequencyResponse for Multiplier {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(Multiplier::eval(self, s))
    }
    fn dc_value(&self) -> Option<Complex64> {
        Some(Complex64::new(0.0, 0.0))
    }
    fn high_frequency(&self) -> HighFrequency {
        HighFrequency::Limit(Complex64::new(1.0, 0.0))
    }
    fn check_stable(&self) -> Result<()> {
        Ok(())
    }
    fn as_rational(&self) -> Option<RationalFunction> {
        Some(self.to_rational())
    }
}

/// `h(s) (1 + gamma p(s) / s)`, evaluated as `h(s) + gamma (h(s)/s) p(s)`.
pub struct MembershipFunction<'a, P: ?Sized> {
    pub p: &'a P,
    pub h: &'a Multiplier,
    pub gamma: f64,
}

impl<P: FrequencyResponse + ?Sized> FrequencyResponse for MembershipFunction<'_, P> {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.h.eval(s) + self.gamma * self.h.h_over_s_eval(s) * self.p.eval(s)?)
    }

    fn dc_value(&self) -> Option<Complex64> {
        self.p.dc_value().map(|p0| p0 * self.gamma * self.h.h_over_s_dc())
    }

    fn high_frequency(&self) -> HighFrequency {
        match self.p.high_frequency() {
            HighFrequency::Unbounded => HighFrequency::Unbounded,
            _ => HighFrequency::Limit(Complex64::new(self.h.h_inf(), 0.0)),
        }
    }

    fn check_stable(&self) -> Result<()> {
        self.p.check_stable()
    }

    fn as_rational(&self) -> Option<RationalFunction> {
        let p = self.p.as_rational()?;
        let hs = self.h.h_over_s_rational();
        Some(&self.h.to_rational() + &(&hs * &p.scale(self.gamma)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interlacing_enforced() {
        assert!(Multiplier::new(10.0, vec![(2.0, 1.0), (5.0, 3.0)]).is_ok());
        assert!(Multiplier::new(10.0, vec![(1.0, 2.0)]).is_err());
        assert!(Multiplier::new(4.0, vec![(5.0, 1.0)]).is_err());
        assert!(Multiplier::new(-1.0, vec![]).is_err());
        assert!(Multiplier::new(10.0, vec![(3.0, 1.0), (5.0, 2.0)]).is_err());
    }

    #[test]
    fn geometric_family_interlaces() {
        let h = Multiplier::geometric(100.0, 2.0, 3).unwrap();
        assert_eq!(h.stages().len(), 3);
        assert!((h.stages()[0].1 - 100.0 / 64.0).abs() < 1e-12);
        assert!((h.stages()[2].0 - 50.0).abs() < 1e-12);
    }

    #[test]
    fn rational_forms_agree_with_direct_evaluation() {
        let h = Multiplier::new(50.0, vec![(2.0, 0.5), (20.0, 8.0)]).unwrap();
        let r = h.to_rational();
        for w in [0.01, 0.7, 3.0, 40.0, 900.0] {
            let s = Complex64::new(0.0, w);
            assert!((r.eval(s).unwrap() - h.eval(s)).norm() < 1e-12);
            assert!((h.eval(s).arg() - h.phase(w)).abs() < 1e-12);
            assert!(h.eval(s).re >= 0.0);
        }
    }

    #[test]
    fn serde_uses_capital_t() {
        let h = Multiplier::new(3.0, vec![(2.0, 1.0)]).unwrap();
        let js = serde_json::to_string(&h).unwrap();
        assert_eq!(js, r#"{"T":3.0,"stages":[[2.0,1.0]]}"#);
        let back: Multiplier = serde_json::from_str(&js).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<Multiplier>(r#"{"T":1.0,"stages":[[2.0,1.0]]}"#).is_err());
    }
}
