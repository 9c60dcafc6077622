use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tf::{FrequencyGrid, FrequencyResponse, HighFrequency, StateSpaceRealization};

use super::optimize::golden_min;

/// Outcome of an ESPR test. `worst_omega` is `f64::INFINITY` when the infimum sits at infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsprReport {
    pub is_espr: bool,
    pub epsilon_margin: f64,
    pub worst_omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EsprOptions {
    /// Margins at or below this are reported as not ESPR.
    pub tol_espr: f64,
    /// Adjacent samples differing by more than this fraction of the sampled range get bisected.
    pub refine_tol: f64,
    pub max_refine: usize,
    /// Golden-section polishing of sampled local minima.
    pub polish: bool,
}

impl Default for EsprOptions {
    fn default() -> Self {
        Self {
            tol_espr: 1e-9,
            refine_tol: 1e-2,
            max_refine: 6,
            polish: true,
        }
    }
}

/// Biquadratic positive-real test on ascending coefficients `a0 + a1 s + a2 s^2` over `b0 + b1 s + b2 s^2`.
pub fn pr_test_biquad(a: [f64; 3], b: [f64; 3]) -> Result<bool> {
    if b.iter().all(|x| *x == 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    if a.iter().chain(b.iter()).any(|x| *x < 0.0) {
        return Ok(false);
    }
    let lhs = ((a[2] * b[0]).sqrt() - (a[0] * b[2]).sqrt()).powi(2);
    Ok(lhs <= a[1] * b[1])
}

fn re_at<G: FrequencyResponse + ?Sized>(g: &G, omega: f64) -> Result<f64> {
    let v = g.eval_jw(omega).map_err(|e| Error::EvaluationFailure {
        omega,
        reason: e.to_string(),
    })?;
    if !v.re.is_finite() {
        return Err(Error::EvaluationFailure {
            omega,
            reason: format!("non-finite value {v}"),
        });
    }
    Ok(v.re)
}

/// Infimum of `Re g(j omega)` over a grid with adaptive refinement and local polishing,
/// plus the analytic limits at `omega = 0` and `omega = inf` when the grid asks for them.
pub fn espr_margin_grid<G: FrequencyResponse + ?Sized>(g: &G, grid: &FrequencyGrid) -> Result<EsprReport> {
    espr_margin_grid_with(g, grid, &EsprOptions::default())
}

pub fn espr_margin_grid_with<G: FrequencyResponse + ?Sized>(
    g: &G,
    grid: &FrequencyGrid,
    opts: &EsprOptions,
) -> Result<EsprReport> {
    let mut best = (f64::INFINITY, f64::NAN);
    let mut consider = |v: f64, w: f64| {
        if v < best.0 {
            best = (v, w);
        }
    };

    if grid.include_infinity {
        match g.high_frequency() {
            HighFrequency::Limit(v) => consider(v.re, f64::INFINITY),
            HighFrequency::Bounded => {}
            HighFrequency::Unbounded => consider(f64::NEG_INFINITY, f64::INFINITY),
        }
    }
    if grid.include_zero {
        match g.dc_value() {
            Some(v) => consider(v.re, 0.0),
            None => {
                return Err(Error::EvaluationFailure {
                    omega: 0.0,
                    reason: "pole at s = 0".into(),
                })
            }
        }
    }

    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
    for &w in grid.points() {
        samples.push((w, re_at(g, w)?));
    }
    if samples.len() >= 2 {
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| (l.min(s.1), h.max(s.1)));
        let thresh = opts.refine_tol * (hi - lo).max(1e-12 * hi.abs().max(1.0));
        let mut refined = Vec::with_capacity(samples.len() * 2);
        refined.push(samples[0]);
        for pair in samples.windows(2) {
            refine(g, pair[0], pair[1], thresh, opts.max_refine, &mut refined)?;
        }
        samples = refined;
    }
    for &(w, v) in &samples {
        consider(v, w);
    }

    if opts.polish && samples.len() >= 3 {
        let mut minima: Vec<usize> = (1..samples.len() - 1)
            .filter(|&i| samples[i].1 <= samples[i - 1].1 && samples[i].1 <= samples[i + 1].1)
            .collect();
        minima.sort_by(|&i, &j| samples[i].1.total_cmp(&samples[j].1));
        minima.truncate(16);
        for i in minima {
            let (a, b) = (samples[i - 1].0.ln(), samples[i + 1].0.ln());
            let f = |x: f64| re_at(g, x.exp()).unwrap_or(f64::INFINITY);
            let (x, v) = golden_min(f, a, b, 1e-12, 200);
            consider(v, x.exp());
        }
        // a minimum at either end of the grid is also polished towards the interior
        let n = samples.len();
        for (i, j) in [(0usize, 1usize), (n - 1, n - 2)] {
            if samples[i].1 < samples[j].1 {
                let (a, b) = (samples[i].0.ln().min(samples[j].0.ln()), samples[i].0.ln().max(samples[j].0.ln()));
                let (x, v) = golden_min(|x| re_at(g, x.exp()).unwrap_or(f64::INFINITY), a, b, 1e-12, 200);
                consider(v, x.exp());
            }
        }
    }

    let (margin, worst) = best;
    Ok(EsprReport {
        is_espr: margin > opts.tol_espr,
        epsilon_margin: margin,
        worst_omega: worst,
    })
}

fn refine<G: FrequencyResponse + ?Sized>(
    g: &G,
    left: (f64, f64),
    right: (f64, f64),
    thresh: f64,
    depth: usize,
    out: &mut Vec<(f64, f64)>,
) -> Result<()> {
    if depth > 0 && (left.1 - right.1).abs() > thresh {
        let wm = (left.0 * right.0).sqrt();
        let mid = (wm, re_at(g, wm)?);
        refine(g, left, mid, thresh, depth - 1, out)?;
        refine(g, mid, right, thresh, depth - 1, out)?;
    } else {
        out.push(right);
    }
    Ok(())
}

/// Result of the Hamiltonian test at a single shift.
struct ShiftTest {
    feasible: bool,
    /// Frequency of the lowest sampled `Re g` when infeasible.
    worst: Option<f64>,
}

/// `Re g(j omega) > eps` for all omega, given `A` Hurwitz and `eps < D`.
///
/// The imaginary parts of the Hamiltonian eigenvalues contain every frequency where
/// `Re g(j omega) = eps`. `Re g` is sampled at those frequencies and the midpoints between
/// them, so nearly-imaginary eigenvalues never decide the outcome on their own.
fn shift_feasible(g: &StateSpaceRealization, eps: f64) -> Result<ShiftTest> {
    let n = g.order();
    let d = g.d[(0, 0)];
    let r = 2.0 * (d - eps);
    if !(r > 0.0) {
        return Ok(ShiftTest {
            feasible: false,
            worst: Some(f64::INFINITY),
        });
    }
    if n == 0 {
        return Ok(ShiftTest {
            feasible: true,
            worst: None,
        });
    }
    let (a, b, c) = (&g.a, &g.b, &g.c);
    let ri = 1.0 / r;
    let a11 = a - b * c * ri;
    let a12 = -(b * b.transpose()) * ri;
    let a21 = c.transpose() * c * ri;
    let a22 = -a.transpose() + c.transpose() * b.transpose() * ri;
    let h = linalg::block2(&a11, &a12, &a21, &a22);
    let eig = linalg::eigenvalues(&h)?;
    let mut cands: Vec<f64> = eig.iter().map(|z| z.im.abs()).filter(|w| w.is_finite()).collect();
    cands.push(0.0);
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let mut probes = cands.clone();
    probes.extend(cands.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let mut worst: Option<(f64, f64)> = None;
    for w in probes {
        let Ok(v) = g.eval(num_complex::Complex64::new(0.0, w)) else { continue };
        if v.re <= eps && worst.is_none_or(|(_, best)| v.re < best) {
            worst = Some((w, v.re));
        }
    }
    Ok(ShiftTest {
        feasible: worst.is_none(),
        worst: worst.map(|(w, _)| w),
    })
}

/// Whether `Re g(j omega) > eps` on the whole extended axis for a Hurwitz realization.
pub fn state_space_strictly_above(g: &StateSpaceRealization, eps: f64) -> Result<bool> {
    if g.order() > 0 {
        if let Some(z) = linalg::spectral_abscissa(&g.a)? {
            if z.re >= 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(shift_feasible(g, eps)?.feasible)
}

/// Grid-free ESPR test: Hurwitz `A`, then bisection on the shift `eps` of the
/// Hamiltonian whose imaginary eigenvalues mark `Re g(j omega) = eps`.
pub fn espr_check_state_space(g: &StateSpaceRealization) -> Result<EsprReport> {
    espr_check_state_space_with(g, &EsprOptions::default())
}

pub fn espr_check_state_space_with(g: &StateSpaceRealization, opts: &EsprOptions) -> Result<EsprReport> {
    if g.inputs() != 1 || g.outputs() != 1 {
        return Err(Error::DimensionMismatch("ESPR test needs a SISO realization".into()));
    }
    let d = g.d[(0, 0)];
    if !d.is_finite() {
        return Err(Error::IndefiniteFeedthrough(d));
    }
    if g.order() > 0 {
        if let Some(z) = linalg::spectral_abscissa(&g.a)? {
            if z.re >= 0.0 {
                return Ok(EsprReport {
                    is_espr: false,
                    epsilon_margin: f64::NEG_INFINITY,
                    worst_omega: z.im.abs(),
                });
            }
        }
    }
    let scale = d.abs().max(1.0);
    // find a feasible lower shift
    let mut gap = 1e-3 * scale;
    let mut lo = d - gap;
    let mut last_bad: Option<ShiftTest> = None;
    loop {
        let t = shift_feasible(g, lo)?;
        if t.feasible {
            break;
        }
        last_bad = Some(t);
        gap *= 2.0;
        lo = d - gap;
        if gap > 1e15 * scale {
            return Ok(EsprReport {
                is_espr: false,
                epsilon_margin: f64::NEG_INFINITY,
                worst_omega: f64::NAN,
            });
        }
    }
    let mut hi = d;
    let tol = 1e-10 * scale;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let t = shift_feasible(g, mid)?;
        if t.feasible {
            lo = mid;
        } else {
            hi = mid;
            last_bad = Some(t);
        }
    }
    let worst_omega = match last_bad {
        Some(ShiftTest { worst: Some(w), .. }) if hi < d => w,
        _ => f64::INFINITY,
    };
    Ok(EsprReport {
        is_espr: lo > opts.tol_espr,
        epsilon_margin: lo,
        worst_omega,
    })
}
