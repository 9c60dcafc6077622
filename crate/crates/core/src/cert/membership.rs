use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tf::{realize_state_space, series_h_over_s, FrequencyGrid, FrequencyResponse, DEFAULT_TOL_CANCEL};

use super::espr::{espr_check_state_space_with, espr_margin_grid_with, state_space_strictly_above, EsprOptions};
use super::multiplier::{MembershipFunction, Multiplier};
use super::optimize::golden_min;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Grid,
    StateSpace,
}

/// Shared numerical settings for membership and margin computations.
#[derive(Clone, Debug, PartialEq)]
pub struct CertOptions {
    pub grid: FrequencyGrid,
    pub espr: EsprOptions,
    /// Relative bracket width at which the gamma bisection stops.
    pub tol_rel: f64,
    pub gamma_cap: f64,
    /// `|p(0)|` at or below this counts as zero.
    pub tol_dc: f64,
    pub method: Method,
    /// Extend the grid to cover the multiplier corners and the poles of rational inputs.
    pub auto_widen: bool,
}

impl Default for CertOptions {
    fn default() -> Self {
        Self {
            grid: FrequencyGrid::default(),
            espr: EsprOptions::default(),
            tol_rel: 1e-6,
            gamma_cap: 1e6,
            tol_dc: 1e-12,
            method: Method::Grid,
            auto_widen: true,
        }
    }
}

impl CertOptions {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// Grid widened to two decades beyond every characteristic frequency of `h` and `p`.
    pub fn grid_for<P: FrequencyResponse + ?Sized>(&self, p: &P, h: &Multiplier) -> FrequencyGrid {
        if !self.auto_widen {
            return self.grid.clone();
        }
        let (mut lo, mut hi) = h.corner_band();
        if let Some(r) = p.as_rational() {
            for z in r.poles().unwrap_or_default().into_iter().chain(r.zeros().unwrap_or_default()) {
                let m = z.norm();
                if m > 0.0 && m.is_finite() {
                    lo = lo.min(m);
                    hi = hi.max(m);
                }
            }
        }
        self.grid.widened(lo / 100.0, hi * 100.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipChecks {
    pub p_stable: bool,
    pub dc_nonzero: bool,
    pub espr: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    pub margin: f64,
    pub worst_omega: f64,
    pub checks: MembershipChecks,
}

/// Checks the preconditions on `p`: stable and `p(0)` away from zero.
pub fn check_p<P: FrequencyResponse + ?Sized>(p: &P, tol_dc: f64) -> Result<f64> {
    p.check_stable()?;
    let p0 = p.dc_value().ok_or(Error::UnstableP(Complex64::new(0.0, 0.0)))?;
    if p0.norm() <= tol_dc {
        return Err(Error::ZeroDc(p0.re));
    }
    Ok(p0.re)
}

/// Decides `p` in the class defined by `h` at scaling `gamma`.
pub fn ph_membership<P: FrequencyResponse + ?Sized>(
    p: &P,
    h: &Multiplier,
    gamma: f64,
    opts: &CertOptions,
) -> Result<MembershipReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    check_p(p, opts.tol_dc)?;
    let report = espr_of_composite(p, h, gamma, opts)?;
    Ok(MembershipReport {
        member: report.is_espr,
        margin: report.epsilon_margin,
        worst_omega: report.worst_omega,
        checks: MembershipChecks {
            p_stable: true,
            dc_nonzero: true,
            espr: report.is_espr,
        },
    })
}

fn espr_of_composite<P: FrequencyResponse + ?Sized>(
    p: &P,
    h: &Multiplier,
    gamma: f64,
    opts: &CertOptions,
) -> Result<super::EsprReport> {
    match opts.method {
        Method::Grid => {
            let f = MembershipFunction { p, h, gamma };
            espr_margin_grid_with(&f, &opts.grid_for(p, h), &opts.espr)
        }
        Method::StateSpace => {
            let g = composite_realization(p, h, gamma)?;
            espr_check_state_space_with(&g, &opts.espr)
        }
    }
}

fn composite_realization<P: FrequencyResponse + ?Sized>(
    p: &P,
    h: &Multiplier,
    gamma: f64,
) -> Result<crate::tf::StateSpaceRealization> {
    let pr = p.as_rational().ok_or(Error::NotRational)?;
    let ps = realize_state_space(&pr)?;
    let hs = realize_state_space(&h.h_over_s_rational())?;
    Ok(series_h_over_s(&ps, &hs, gamma)?.reduce_minimal(DEFAULT_TOL_CANCEL * 1e-2))
}

fn is_member<P: FrequencyResponse + ?Sized>(p: &P, h: &Multiplier, gamma: f64, opts: &CertOptions) -> Result<bool> {
    match opts.method {
        Method::Grid => Ok(espr_of_composite(p, h, gamma, opts)?.is_espr),
        Method::StateSpace => state_space_strictly_above(&composite_realization(p, h, gamma)?, opts.espr.tol_espr),
    }
}

/// Largest scaling keeping `gamma p` in the class, `value = +inf` when capped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStar {
    pub value: f64,
    /// Last feasible and first infeasible gamma (`hi = +inf` when capped).
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub capped: bool,
}

impl GammaStar {
    /// Finite value or the cap, for ratios and comparisons.
    pub fn effective(&self, cap: f64) -> f64 {
        if self.capped {
            cap
        } else {
            self.value
        }
    }
}

/// Doubling from 1 to bracket the boundary, then bisection in `ln gamma`.
///
/// When no gamma down to `1e-12` is feasible the value is 0 and the bracket is `(0, 1e-12)`.
pub fn gamma_star<P: FrequencyResponse + ?Sized>(p: &P, h: &Multiplier, opts: &CertOptions) -> Result<GammaStar> {
    check_p(p, opts.tol_dc)?;
    let cap = opts.gamma_cap;
    let mut iterations = 0;
    let mut probe = |g: f64| {
        iterations += 1;
        is_member(p, h, g, opts)
    };
    let seed = 1.0_f64.min(cap);
    let (mut lo, mut hi);
    if probe(seed)? {
        lo = seed;
        hi = f64::NAN;
        while lo < cap {
            let next = (2.0 * lo).min(cap);
            if probe(next)? {
                lo = next;
            } else {
                hi = next;
                break;
            }
        }
        if hi.is_nan() {
            return Ok(GammaStar {
                value: f64::INFINITY,
                bracket: (cap, f64::INFINITY),
                iterations,
                capped: true,
            });
        }
    } else {
        hi = seed;
        lo = f64::NAN;
        let floor = 1e-12;
        let mut g = seed;
        while g > floor {
            g *= 0.5;
            if probe(g)? {
                lo = g;
                break;
            }
            hi = g;
        }
        if lo.is_nan() {
            log::debug!("gamma_star: no feasible gamma down to {floor:e}");
            return Ok(GammaStar {
                value: 0.0,
                bracket: (0.0, floor),
                iterations,
                capped: false,
            });
        }
    }
    while hi / lo > 1.0 + opts.tol_rel {
        let mid = (lo * hi).sqrt();
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaStar {
        value: lo,
        bracket: (lo, hi),
        iterations,
        capped: false,
    })
}

/// Direct evaluation of the margin from `Re h + gamma Re(h p / s) > tol_espr`,
/// which is affine in gamma at every frequency: the infimum over frequencies
/// with negative slope of `(Re h - tol) / -Re(h p / s)`.
///
/// Returns `f64::INFINITY` when no frequency constrains gamma, `0` when `p(0) < 0`.
pub fn gamma_star_affine<P: FrequencyResponse + ?Sized>(p: &P, h: &Multiplier, opts: &CertOptions) -> Result<f64> {
    let p0 = check_p(p, opts.tol_dc)?;
    if p0 < 0.0 {
        return Ok(0.0);
    }
    let tol = opts.espr.tol_espr;
    let ratio = |w: f64| -> Result<f64> {
        let s = Complex64::new(0.0, w);
        let a = h.eval(s).re - tol;
        let b = (h.h_over_s_eval(s) * p.eval(s)?).re;
        Ok(if b < 0.0 { a / -b } else { f64::INFINITY })
    };
    let grid = opts.grid_for(p, h);
    let pts = grid.points();
    let mut vals = Vec::with_capacity(pts.len());
    for &w in pts {
        vals.push(ratio(w)?);
    }
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    // polish every sampled local minimum, including ones at the ends of a constrained run
    for i in 0..vals.len() {
        if !vals[i].is_finite() {
            continue;
        }
        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < vals.len() { vals[i + 1] } else { f64::INFINITY };
        if vals[i] <= left && vals[i] <= right {
            let a = pts[i.saturating_sub(1)].ln();
            let b = pts[(i + 1).min(pts.len() - 1)].ln();
            let (_, v) = golden_min(|x| ratio(x.exp()).unwrap_or(f64::INFINITY), a, b, 1e-13, 300);
            best = best.min(v);
        }
    }
    Ok(best)
}
