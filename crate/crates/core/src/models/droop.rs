use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cert::optimize::golden_min;
use crate::cert::{espr_margin_grid_with, EsprOptions};
use crate::error::{Error, Result};
use crate::tf::{DroopDelayLoop, FrequencyGrid, FrequencyResponse, HighFrequency};

/// Swing bus under droop control with measurement delay, `c = -(1/r) e^{-s tau}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopDelayParams {
    pub m: f64,
    pub d: f64,
    pub r: f64,
    pub tau: f64,
}

impl DroopDelayParams {
    pub fn new(m: f64, d: f64, r: f64, tau: f64) -> Result<Self> {
        DroopDelayLoop::new(m, d, r, tau)?;
        Ok(Self { m, d, r, tau })
    }

    pub fn closed_loop(&self) -> DroopDelayLoop {
        DroopDelayLoop {
            m: self.m,
            d: self.d,
            r: self.r,
            tau: self.tau,
        }
    }

    pub fn canonical(&self, gamma: f64) -> DroopCanonical {
        DroopCanonical {
            k: 1.0 / (self.m * gamma * self.r * self.r),
            t: self.tau / (self.m * self.r),
            dr: self.d * self.r,
        }
    }
}

/// Scale-free coordinates `k = 1/(m gamma r^2)`, `t = tau/(m r)`, with `omega~ = m r omega`.
/// `dr` is the damping term `d r` that remains after scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopCanonical {
    pub k: f64,
    pub t: f64,
    pub dr: f64,
}

impl DroopCanonical {
    pub fn omega_tilde(m: f64, r: f64, omega: f64) -> f64 {
        m * r * omega
    }

    /// `j w (j w + d r + e^{-t j w})`
    pub fn curve(&self, w: f64) -> Complex64 {
        let jw = Complex64::new(0.0, w);
        jw * (jw + self.dr + (-jw * self.t).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopBounds {
    pub r_max: f64,
    pub tau_max: f64,
}

/// Largest droop constant and delay bound for a given half-plane angle `alpha`.
///
/// `r_max = sqrt(pi (pi - 2 alpha) / (4 alpha^2 m gamma))` and `tau_max = alpha m r`,
/// which for `alpha = pi/4` are `sqrt(2/(gamma m))` and `pi m r / 4`. `tau_max` is
/// evaluated at `r` when supplied, else at `r_max`.
pub fn droop_delay_bounds(m: f64, gamma: f64, r: Option<f64>, alpha: f64) -> Result<DroopBounds> {
    if !(m > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("need m > 0 and gamma > 0 (got m={m}, gamma={gamma})")));
    }
    if !(alpha > 0.0 && alpha < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, pi/2), got {alpha}")));
    }
    let r_max = if alpha == FRAC_PI_4 {
        (2.0 / (gamma * m)).sqrt()
    } else {
        (PI * (PI - 2.0 * alpha) / (4.0 * alpha * alpha * m * gamma)).sqrt()
    };
    let r = r.unwrap_or(r_max);
    if r > r_max {
        return Err(Error::InfeasibleR { r, r_max });
    }
    Ok(DroopBounds {
        r_max,
        tau_max: alpha * m * r,
    })
}

/// Rotation `pi + 2j (pi - alpha)/alpha` of the separating half-plane.
pub fn half_plane_direction(alpha: f64) -> Complex64 {
    Complex64::new(PI, 2.0 * (PI - alpha) / alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroopCheck {
    pub check: bool,
    /// Infimum of the normalized half-plane expression.
    pub margin: f64,
    pub worst_omega: f64,
}

/// `c (1 + gamma p(s)/s) / |c|` for the delayed droop loop `p`.
struct HalfPlane {
    p: DroopDelayLoop,
    gamma: f64,
    c: Complex64,
}

impl FrequencyResponse for HalfPlane {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        Ok(self.c * (1.0 + self.gamma * self.p.eval(s)? / s) / self.c.norm())
    }
    fn dc_value(&self) -> Option<Complex64> {
        None
    }
    fn high_frequency(&self) -> HighFrequency {
        HighFrequency::Limit(self.c / self.c.norm())
    }
    fn check_stable(&self) -> Result<()> {
        self.p.check_stable()
    }
}

/// Half-plane test `Re((pi + 2j(pi-alpha)/alpha)(1 + gamma p(j w)/(j w))) > 0` on a grid,
/// after confirming the local loop has no right half-plane roots.
pub fn droop_delay_check(p: &DroopDelayParams, gamma: f64, alpha: f64, grid: &FrequencyGrid) -> Result<DroopCheck> {
    let lp = p.closed_loop();
    lp.check_stable()?;
    let hp = HalfPlane {
        p: lp,
        gamma,
        c: half_plane_direction(alpha),
    };
    // the expression tends to +inf as w -> 0, so only the upper limit is used
    let mut g = grid.clone();
    g.include_zero = false;
    let base = 1.0 / (p.m * p.r).max(1e-12);
    let g = g.widened(base * 1e-3, base * 1e3);
    let opts = EsprOptions {
        tol_espr: 1e-9,
        ..EsprOptions::default()
    };
    let r = espr_margin_grid_with(&hp, &g, &opts)?;
    Ok(DroopCheck {
        check: r.is_espr,
        margin: r.epsilon_margin,
        worst_omega: r.worst_omega,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleDistance {
    /// Minimum of `|z(w) - centre| - radius`; positive means outside.
    pub min_distance: f64,
    pub worst_omega_tilde: f64,
}

/// Distance of the canonical curve to the circle bounding the excluded region.
///
/// With `k = 1/2` the circle has centre `-1 - 6j/pi` and radius `sqrt(1 + 36/pi^2)`;
/// general `k` scales both by `1/(2k)`. The circle passes through the origin, where the
/// curve starts, so the scan begins at the lower end of `omega_tilde_grid`.
pub fn droop_circle_check(p: &DroopDelayParams, gamma: f64, omega_tilde_grid: &FrequencyGrid) -> Result<CircleDistance> {
    p.closed_loop().check_stable()?;
    let can = p.canonical(gamma);
    let scale = 1.0 / (2.0 * can.k);
    let centre = Complex64::new(-1.0, -6.0 / PI) * scale;
    let radius = (1.0 + 36.0 / (PI * PI)).sqrt() * scale;
    let dist = |w: f64| (can.curve(w) - centre).norm() - radius;
    let pts = omega_tilde_grid.points();
    let vals: Vec<f64> = pts.iter().map(|&w| dist(w)).collect();
    let mut best = (f64::INFINITY, f64::NAN);
    for (i, (&w, &v)) in pts.iter().zip(&vals).enumerate() {
        if v < best.0 {
            best = (v, w);
        }
        let left = if i > 0 { vals[i - 1] } else { f64::INFINITY };
        let right = vals.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if v <= left && v <= right && i > 0 && i + 1 < pts.len() {
            let (x, fv) = golden_min(|x| dist(x.exp()), pts[i - 1].ln(), pts[i + 1].ln(), 1e-12, 200);
            if fv < best.0 {
                best = (fv, x.exp());
            }
        }
    }
    Ok(CircleDistance {
        min_distance: best.0,
        worst_omega_tilde: best.1,
    })
}

/// Default scan for [`droop_circle_check`]: 2000 points on `[1e-2, 1e2]`.
pub fn default_canonical_grid() -> FrequencyGrid {
    FrequencyGrid::log_spaced(1e-2, 1e2, 2000).expect("valid grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_examples() {
        let b = droop_delay_bounds(0.16, 2.0, None, FRAC_PI_4).unwrap();
        assert!((b.r_max - 2.5).abs() < 1e-12);
        assert!((b.tau_max - PI * 0.16 * 2.5 / 4.0).abs() < 1e-12);
        // general formula agrees at pi/4
        let general = (PI * (PI - 2.0 * FRAC_PI_4) / (4.0 * FRAC_PI_4 * FRAC_PI_4 * 0.16 * 2.0)).sqrt();
        assert!((general - b.r_max).abs() < 1e-12);
        assert!(matches!(
            droop_delay_bounds(0.16, 2.0, Some(3.0), FRAC_PI_4),
            Err(Error::InfeasibleR { .. })
        ));
        let b8 = droop_delay_bounds(0.16, 2.0, None, PI / 8.0).unwrap();
        let want = (PI * (3.0 * PI / 4.0) / (4.0 * (PI / 8.0).powi(2) * 0.32)).sqrt();
        assert!((b8.r_max - want).abs() < 1e-12);
        assert!((b8.tau_max - PI / 8.0 * 0.16 * b8.r_max).abs() < 1e-12);
    }

    #[test]
    fn general_alpha_bound_is_checked_just_below_delay_limit() {
        let alpha = PI / 8.0;
        let b = droop_delay_bounds(0.16, 2.0, None, alpha).unwrap();
        let p = DroopDelayParams::new(0.16, 0.0, b.r_max, 0.97 * b.tau_max).unwrap();
        assert!(droop_delay_check(&p, 2.0, alpha, &FrequencyGrid::default()).unwrap().check);
    }

    #[test]
    fn check_examples() {
        let grid = FrequencyGrid::default();
        let p = DroopDelayParams::new(0.16, 0.0, 2.5, 0.30).unwrap();
        assert!(droop_delay_check(&p, 2.0, FRAC_PI_4, &grid).unwrap().check);
        for d in [0.0, 0.1, 1.0] {
            let p = DroopDelayParams::new(0.16, d, 2.5, 0.0).unwrap();
            assert!(droop_delay_check(&p, 2.0, FRAC_PI_4, &grid).unwrap().check);
        }
        let (m, gamma) = (0.16_f64, 2.0);
        let r = (2.0 / (m * gamma)).sqrt();
        let p = DroopDelayParams::new(m, 0.0, r, 1.05 * PI / 4.0 * m * r).unwrap();
        let c = droop_delay_check(&p, gamma, FRAC_PI_4, &grid).unwrap();
        assert!(!c.check);
        assert!(c.worst_omega.is_finite());
    }

    #[test]
    fn circle_examples() {
        let grid = default_canonical_grid();
        let (m, gamma) = (0.3_f64, 1.5);
        let r = (2.0 / (m * gamma)).sqrt();
        let at = |t_factor: f64, d: f64| {
            let p = DroopDelayParams::new(m, d, r, t_factor * PI / 4.0 * m * r).unwrap();
            droop_circle_check(&p, gamma, &grid).unwrap().min_distance
        };
        assert!(at(0.9, 0.0) > 0.0);
        assert!(at(1.0, 0.0).abs() < 1e-3);
        assert!(at(1.05, 0.0) < 0.0);
        let ds = [0.0, 0.05, 0.2, 0.5];
        let dist: Vec<f64> = ds.iter().map(|&d| at(1.05, d)).collect();
        assert!(dist.windows(2).all(|w| w[1] >= w[0]), "{dist:?}");
    }

    #[test]
    fn canonical_coordinates_reproduce_the_loop() {
        let p = DroopDelayParams::new(0.2, 0.05, 1.7, 0.11).unwrap();
        let gamma = 2.3;
        let can = p.canonical(gamma);
        let lp = p.closed_loop();
        for w in [0.1, 1.0, 7.0] {
            let s = Complex64::new(0.0, w);
            let direct = gamma * lp.eval(s).unwrap() / s;
            let wt = DroopCanonical::omega_tilde(p.m, p.r, w);
            let via = 1.0 / (can.k * can.curve(wt));
            assert!((direct - via).norm() < 1e-12 * direct.norm());
        }
    }
}
