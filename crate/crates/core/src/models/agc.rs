use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cert::{auto_multiplier, gamma_star, AutoSearch, CertOptions, Multiplier};
use crate::error::{Error, Result};
use crate::network::BusModel;
use crate::tf::{lft_lower, FrequencyGrid, FrequencyResponse, Polynomial, RationalFunction, TransferMatrix2x2};

/// Area model with governor, turbine, droop and integral frequency-bias control.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgcParams {
    pub m: f64,
    pub d: f64,
    pub tg: f64,
    pub tt: f64,
    pub r: f64,
    pub beta: f64,
    pub k: f64,
}

/// Reference parameter sets `(m, d, Tg, Tt, r, beta, k)`.
pub const AGC_TABLE: [AgcParams; 3] = [
    AgcParams {
        m: 0.16,
        d: 0.02,
        tg: 0.08,
        tt: 0.40,
        r: 3.00,
        beta: 0.33,
        k: 0.30,
    },
    AgcParams {
        m: 0.20,
        d: 0.02,
        tg: 0.06,
        tt: 0.44,
        r: 2.73,
        beta: 0.40,
        k: 0.20,
    },
    AgcParams {
        m: 0.12,
        d: 0.02,
        tg: 0.07,
        tt: 0.30,
        r: 2.82,
        beta: 0.38,
        k: 0.40,
    },
];

impl AgcParams {
    /// `r = inf` switches droop off; `beta` and `k` may be zero.
    pub fn validate(&self) -> Result<()> {
        let pos = [self.m, self.d, self.tg, self.tt, self.r];
        if pos.iter().any(|x| !(*x > 0.0)) || !(self.beta >= 0.0 && self.k >= 0.0) {
            return Err(Error::InvalidParameter(format!("invalid AGC parameters {self:?}")));
        }
        if [self.m, self.d, self.tg, self.tt, self.beta, self.k].iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite AGC parameter in {self:?}")));
        }
        Ok(())
    }

    pub fn with_gains(&self, beta: f64, k: f64) -> Self {
        Self { beta, k, ..*self }
    }

    fn inv_r(&self) -> f64 {
        1.0 / self.r
    }

    /// `(1 + s Tg)(1 + s Tt)`
    fn actuator_den(&self) -> Polynomial {
        &Polynomial::from_slice(&[1.0, self.tg]) * &Polynomial::from_slice(&[1.0, self.tt])
    }

    /// Plant and scalar controller of the reduced loop: `G11 = G21 = P(1 + GT k/s)`,
    /// `G12 = G22 = P GT`, `c = -1/r - k beta / s`.
    pub fn reduced(&self) -> Result<(TransferMatrix2x2, RationalFunction)> {
        self.validate()?;
        let p = RationalFunction::first_order_lag(self.m, self.d)?;
        let gt = RationalFunction::new(Polynomial::one(), self.actuator_den())?;
        let integ = RationalFunction::new(Polynomial::constant(self.k), Polynomial::s())?;
        let top = &p * &(&RationalFunction::one() + &(&gt * &integ));
        let pg = &p * &gt;
        let c = RationalFunction::new(
            Polynomial::from_slice(&[-self.k * self.beta, -self.inv_r()]),
            Polynomial::s(),
        )?;
        Ok((TransferMatrix2x2::new(top.clone(), pg.clone(), top, pg), c))
    }

    /// Closed loop from frequency-bias disturbance to frequency, by LFT of the reduced form.
    pub fn closed_loop(&self) -> Result<RationalFunction> {
        let (g, c) = self.reduced()?;
        lft_lower(&g, &c)
    }

    /// Closed form of the block diagram,
    /// `(s A(s) + k) / (s (m s + d) A(s) + s/r + k beta)` with `A = (1+sTg)(1+sTt)`.
    pub fn block_diagram(&self, s: Complex64) -> Complex64 {
        let a = (1.0 + s * self.tg) * (1.0 + s * self.tt);
        (s * a + self.k) / (s * (self.m * s + self.d) * a + s * self.inv_r() + self.k * self.beta)
    }
}

/// Frequency-bias value commonly used for AGC, `1/r + d`.
pub fn beta_guidance(r: f64, d: f64) -> f64 {
    1.0 / r + d
}

pub fn agc_model(p: &AgcParams) -> Result<BusModel> {
    p.validate()?;
    Ok(BusModel::Agc(*p))
}

#[derive(Clone, Debug, PartialEq)]
pub enum MultiplierChoice {
    Fixed(Multiplier),
    Auto(AutoSearch),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgcSweep {
    pub betas: Vec<f64>,
    pub ks: Vec<f64>,
    /// `gamma[i][j]` for `betas[i]`, `ks[j]`; NaN where the loop is unstable or infeasible.
    pub gamma: Vec<Vec<f64>>,
}

impl AgcSweep {
    /// Largest finite cell as `(i, j, value)`.
    pub fn argmax(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in self.gamma.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_finite() && best.is_none_or(|b| v > b.2) {
                    best = Some((i, j, v));
                }
            }
        }
        best
    }

    /// Per-beta maximum over `k`, NaN for rows without a finite cell.
    pub fn row_max(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .map(|row| row.iter().copied().filter(|v| v.is_finite()).fold(f64::NAN, f64::max))
            .collect()
    }
}

/// `gamma*` of a single AGC parameter set under the given multiplier choice. NaN when the
/// closed loop is unstable or no positive scaling is feasible.
pub fn agc_gamma_star(p: &AgcParams, h: &MultiplierChoice, opts: &CertOptions) -> Result<f64> {
    let g = p.closed_loop()?;
    if g.check_stable().is_err() {
        return Ok(f64::NAN);
    }
    let h = match h {
        MultiplierChoice::Fixed(h) => h.clone(),
        MultiplierChoice::Auto(search) => auto_multiplier(&[(g.clone(), 1.0)], search, opts)?.multiplier,
    };
    let gs = gamma_star(&g, &h, opts)?;
    Ok(if gs.value > 0.0 { gs.effective(opts.gamma_cap) } else { f64::NAN })
}

/// Margin grid over `(beta, k)`, computed in parallel.
pub fn agc_sweep(
    p: &AgcParams,
    betas: &[f64],
    ks: &[f64],
    h: &MultiplierChoice,
    opts: &CertOptions,
) -> Result<AgcSweep> {
    if betas.iter().chain(ks).any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidParameter("sweep ranges must be positive".into()));
    }
    let cells: Vec<(usize, usize)> = (0..betas.len()).flat_map(|i| (0..ks.len()).map(move |j| (i, j))).collect();
    let vals = cells
        .par_iter()
        .map(|&(i, j)| agc_gamma_star(&p.with_gains(betas[i], ks[j]), h, opts))
        .collect::<Result<Vec<f64>>>()?;
    let gamma = vals.chunks(ks.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(AgcSweep {
        betas: betas.to_vec(),
        ks: ks.to_vec(),
        gamma,
    })
}

/// `n` log-spaced values on `[lo, hi]`.
pub fn log_range(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    Ok(FrequencyGrid::log_spaced(lo, hi, n)?.points().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lft_matches_block_diagram() {
        for p in AGC_TABLE {
            let g = p.closed_loop().unwrap();
            for k in 0..100 {
                let s = Complex64::new(0.0, 10f64.powf(-3.0 + 6.0 * k as f64 / 99.0));
                let a = g.eval(s).unwrap();
                let b = p.block_diagram(s);
                assert!((a - b).norm() < 1e-9 * b.norm(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn dc_gain_is_inverse_bias() {
        let p = AGC_TABLE[0];
        let g = p.closed_loop().unwrap();
        assert!((g.dc_gain().unwrap() - 1.0 / p.beta).abs() < 1e-9);
    }

    #[test]
    fn pure_droop_and_open_loop_limits() {
        let p = AGC_TABLE[0].with_gains(0.7, 0.0);
        let g = p.closed_loop().unwrap();
        for w in [0.01, 1.0, 50.0] {
            let s = Complex64::new(0.0, w);
            let direct = 1.0 / ((p.m * s + p.d) + (1.0 / p.r) / ((1.0 + s * p.tg) * (1.0 + s * p.tt)));
            assert!((g.eval(s).unwrap() - direct).norm() < 1e-10 * direct.norm());
        }
        let open = AgcParams {
            r: f64::INFINITY,
            ..AGC_TABLE[0].with_gains(0.0, 0.0)
        };
        let g = open.closed_loop().unwrap();
        assert_eq!(g.den().degree(), 1);
        assert!((g.den().coeff(0) - p.d / p.m).abs() < 1e-9);
    }

    #[test]
    fn unstable_cells_are_nan() {
        let p = AGC_TABLE[0];
        let h = MultiplierChoice::Fixed(Multiplier::first_order(10.0).unwrap());
        let s = agc_sweep(&p, &[0.33], &[0.3, 50.0], &h, &CertOptions::default()).unwrap();
        assert!(s.gamma[0][0].is_finite() && s.gamma[0][0] > 0.0);
        assert!(s.gamma[0][1].is_nan());
    }

    #[test]
    fn guidance_value() {
        assert!((beta_guidance(3.0, 0.02) - (1.0 / 3.0 + 0.02)).abs() < 1e-15);
    }
}
