use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::{FrequencyGrid, FrequencyResponse};

use super::espr::espr_margin_grid_with;
use super::membership::{gamma_star_affine, ph_membership, CertOptions};
use super::multiplier::Multiplier;
use super::optimize::golden_min;

/// Closest a target phase may come to `pi/2`.
pub const PHASE_GUARD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    pub multiplier: Multiplier,
    /// Maximum of `|arg h(j omega) - theta|` over the band, radians.
    pub max_error: f64,
}

fn phase_error(h: &Multiplier, theta: f64, band: &[f64]) -> f64 {
    band.iter().fold(0.0_f64, |m, &w| m.max((h.phase(w) - theta).abs()))
}

/// Lead-lag multiplier whose phase stays close to `theta` on `[omega_lo, omega_hi]`.
///
/// Stage corners are log-periodic between `omega_lo e^{-e}` and `omega_hi e^{e}`, with
/// `alpha_k / beta_k = q^kappa`; `e` and `kappa` are tuned by golden-section sweeps.
/// The plain `s/(s+T)` with tuned `T` is always a candidate.
pub fn fit_constant_phase_multiplier(theta: f64, band: (f64, f64), n_stages: usize) -> Result<PhaseFit> {
    let (w_lo, w_hi) = band;
    if !(w_lo > 0.0 && w_hi > w_lo) {
        return Err(Error::InvalidParameter(format!("invalid band [{w_lo}, {w_hi}]")));
    }
    if !(theta >= 0.0) || theta >= FRAC_PI_2 - PHASE_GUARD {
        return Err(Error::InfeasibleTheta {
            theta,
            error_deg: f64::NAN,
        });
    }
    let samples: Vec<f64> = FrequencyGrid::log_spaced(w_lo, w_hi, 240)?.points().to_vec();

    // single term s/(s+T)
    let (lo, hi) = (w_lo.ln() - 12.0, w_hi.ln() + 12.0);
    let err_t = |x: f64| phase_error(&Multiplier::first_order(x.exp()).unwrap(), theta, &samples);
    let (xt, et) = golden_min(err_t, lo, hi, 1e-10, 300);
    let mut best = PhaseFit {
        multiplier: Multiplier::first_order(xt.exp())?,
        max_error: et,
    };

    if n_stages > 0 {
        let build = |e: f64, kappa: f64| -> Option<Multiplier> {
            let beta1 = w_lo * (-e).exp();
            let t = w_hi * e.exp();
            if !(t > beta1) {
                return None;
            }
            let q = (t / beta1).powf(1.0 / n_stages as f64);
            let kappa = kappa.clamp(1e-3, 1.0 - 1e-3);
            let stages = (0..n_stages)
                .map(|k| {
                    let b = beta1 * q.powi(k as i32);
                    (b * q.powf(kappa), b)
                })
                .collect();
            Multiplier::new(t, stages).ok()
        };
        let score = |e: f64, kappa: f64| build(e, kappa).map_or(f64::INFINITY, |h| phase_error(&h, theta, &samples));
        let mut e = 1.0;
        let mut kappa = 1.0 - 2.0 * theta / std::f64::consts::PI;
        for _ in 0..6 {
            e = golden_min(|x| score(x, kappa), -3.0, 8.0, 1e-8, 200).0;
            kappa = golden_min(|k| score(e, k), 1e-3, 1.0 - 1e-3, 1e-9, 200).0;
        }
        if let Some(h) = build(e, kappa) {
            let err = phase_error(&h, theta, &samples);
            if err < best.max_error {
                best = PhaseFit {
                    multiplier: h,
                    max_error: err,
                };
            }
        }
    }
    Ok(best)
}

/// Doubles `T` from 1 until `s/(s+T)` certifies every `p` at unit scaling.
pub fn passivity_multiplier_t<P: FrequencyResponse>(ps: &[P], opts: &CertOptions) -> Result<(f64, bool)> {
    const MAX_DOUBLINGS: usize = 40;
    for (index, p) in ps.iter().enumerate() {
        let r = espr_margin_grid_with(p, &opts.grid, &opts.espr)?;
        if !r.is_espr {
            return Err(Error::NotEsprInput {
                index,
                margin: r.epsilon_margin,
            });
        }
    }
    let mut t = 1.0;
    for _ in 0..=MAX_DOUBLINGS {
        let h = Multiplier::first_order(t)?;
        let ok = ps
            .par_iter()
            .map(|p| ph_membership(p, &h, 1.0, opts).map(|r| r.member))
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .all(|b| b);
        if ok {
            return Ok((t, true));
        }
        t *= 2.0;
    }
    Err(Error::SearchExhausted(t / 2.0))
}

/// Search space of the automatic multiplier design.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoSearch {
    pub t_values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_stages: usize,
    pub sweeps: usize,
}

impl Default for AutoSearch {
    fn default() -> Self {
        Self {
            t_values: (0..=10).map(|k| 10f64.powf(0.5 * k as f64)).collect(),
            ratios: vec![1.5, 2.0, 3.0, 5.0],
            max_stages: 4,
            sweeps: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoResult {
    pub multiplier: Multiplier,
    /// `min_i gamma_i* / gamma_i` under the fast margin estimate.
    pub score: f64,
}

/// Coordinate descent over `(T, ratio, stages)` of the geometric family,
/// maximizing `min_i gamma_i* / gamma_required_i`.
///
/// Buses whose `p` fails the preconditions are ignored here; they fail certification anyway.
pub fn auto_multiplier<P: FrequencyResponse>(
    buses: &[(P, f64)],
    search: &AutoSearch,
    opts: &CertOptions,
) -> Result<AutoResult> {
    if search.t_values.is_empty() || search.ratios.is_empty() {
        return Err(Error::InvalidParameter("empty multiplier search space".into()));
    }
    let cap = opts.gamma_cap;
    let mut cache: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut score_of = |ti: usize, ri: usize, n: usize| -> f64 {
        let key = (ti, if n == 0 { 0 } else { ri }, n);
        if let Some(v) = cache.get(&key) {
            return *v;
        }
        let v = match Multiplier::geometric(search.t_values[ti], search.ratios[ri], n) {
            Ok(h) => buses
                .par_iter()
                .filter_map(|(p, g)| gamma_star_affine(p, &h, opts).ok().map(|s| s.min(cap) / g))
                .reduce(|| f64::INFINITY, f64::min),
            Err(_) => f64::NEG_INFINITY,
        };
        cache.insert(key, v);
        v
    };
    let (mut ti, mut ri, mut n) = (search.t_values.len() / 2, 0, 0);
    let mut best = score_of(ti, ri, n);
    for _ in 0..search.sweeps {
        for coord in 0..3 {
            let range = match coord {
                0 => search.t_values.len(),
                1 => search.ratios.len(),
                _ => search.max_stages + 1,
            };
            for v in 0..range {
                let (a, b, c) = match coord {
                    0 => (v, ri, n),
                    1 => (ti, v, n),
                    _ => (ti, ri, v),
                };
                let s = score_of(a, b, c);
                if s > best {
                    best = s;
                    (ti, ri, n) = (a, b, c);
                }
            }
        }
    }
    Ok(AutoResult {
        multiplier: Multiplier::geometric(search.t_values[ti], search.ratios[ri], n)?,
        score: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::RationalFunction;

    fn deg(x: f64) -> f64 {
        x.to_degrees()
    }

    #[test]
    fn phase_fit_examples() {
        let f = fit_constant_phase_multiplier(0.0, (1e-2, 1e2), 2).unwrap();
        assert!(deg(f.max_error) < 2.0, "{}", deg(f.max_error));

        let theta = (6.0 / std::f64::consts::PI).atan();
        let f = fit_constant_phase_multiplier(theta, (1e-2, 1e2), 4).unwrap();
        assert!(deg(f.max_error) <= 5.0, "{}", deg(f.max_error));
        assert_eq!(f.multiplier.stages().len(), 4);

        let f = fit_constant_phase_multiplier(FRAC_PI_2 - 0.01, (1e-2, 1.0), 0).unwrap();
        assert!(deg(f.max_error) < 1.0);
        assert!(f.multiplier.T() > 10.0);

        assert!(matches!(
            fit_constant_phase_multiplier(FRAC_PI_2, (1.0, 2.0), 3),
            Err(Error::InfeasibleTheta { .. })
        ));
    }

    #[test]
    fn passivity_examples() {
        let opts = CertOptions::default();
        let (t, ok) = passivity_multiplier_t(&[RationalFunction::one()], &opts).unwrap();
        assert!(ok && t == 1.0);
        let p = RationalFunction::from_coeffs(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
        let (t, ok) = passivity_multiplier_t(&[p], &opts).unwrap();
        assert!(ok && t <= 1.0);
        let lag = RationalFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            passivity_multiplier_t(&[lag], &opts),
            Err(Error::NotEsprInput { index: 0, .. })
        ));
    }

    #[test]
    fn auto_search_improves_on_starting_point() {
        let p = RationalFunction::first_order_lag(0.16, 0.02).unwrap();
        let buses = vec![(p, 2.0)];
        let opts = CertOptions::default();
        let r = auto_multiplier(&buses, &AutoSearch::default(), &opts).unwrap();
        assert!(r.score > 1.0);
    }
}
