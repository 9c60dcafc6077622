//! Destabilizing networks for buses that fail the decentralized condition.
//!
//! If `Re h(jw0)(1 + x) < 0` with `x = gamma1 p1(jw0)/jw0`, a partner `p` in the class with
//! `p(jw0)/jw0 = -2 - x` together with a rank-one admissible `L` puts a closed-loop pole at `jw0`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cert::optimize::golden_min;
use crate::cert::{espr_margin_grid, ph_membership, CertOptions, Multiplier};
use crate::error::{Error, Result};
use crate::network::{BusLimits, BusModel, LineData, NetworkSpec};
use crate::tf::{FrequencyGrid, FrequencyResponse, Polynomial, RationalFunction};

/// Depth below zero, relative to `|h(1 + gamma1 p1/s)|` at the witness, that counts as a violation.
pub const TOL_VIOLATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub omega0: f64,
    /// `h(jw0) (1 + gamma1 p1(jw0) / jw0)`, with negative real part.
    pub value: Complex64,
    pub bus_index: usize,
}

fn violation_value<P: FrequencyResponse + ?Sized>(p1: &P, h: &Multiplier, gamma1: f64, w: f64) -> Option<Complex64> {
    let s = Complex64::new(0.0, w);
    let p = p1.eval(s).ok()?;
    Some(h.eval(s) * (1.0 + gamma1 * p / s))
}

/// Most negative point of `Re h(1 + gamma1 p1/s)` on the grid, polished in `ln w`.
/// `None` when the real part stays above `-TOL_VIOLATION` times the modulus there.
pub fn find_violation<P: FrequencyResponse + ?Sized>(
    p1: &P,
    h: &Multiplier,
    gamma1: f64,
    grid: &FrequencyGrid,
) -> Option<ViolationWitness> {
    let pts = grid.points();
    let re = |w: f64| violation_value(p1, h, gamma1, w).map_or(f64::INFINITY, |v| v.re);
    let vals: Vec<f64> = pts.par_iter().map(|&w| re(w)).collect();
    let (k, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let lo = pts[k.saturating_sub(1)].ln();
    let hi = pts[(k + 1).min(pts.len() - 1)].ln();
    let (x, fx) = golden_min(|x| re(x.exp()), lo, hi, 1e-12, 200);
    let (omega0, depth) = if fx < vals[k] { (x.exp(), fx) } else { (pts[k], vals[k]) };
    let value = violation_value(p1, h, gamma1, omega0)?;
    (depth < -TOL_VIOLATION * value.norm()).then_some(ViolationWitness {
        omega0,
        value,
        bus_index: 0,
    })
}

/// ESPR rational `q` with `q(jw0) = z0` and `q(inf) = h_inf`.
///
/// `q = h_inf + a b s/(s^2 + b s + w0^2) + c s/(s^2 + beta s + w1^2)`. The resonant term is
/// real and equal to `a` at `w0`; the detuned term carries the imaginary part and has a
/// nonnegative real part everywhere. The resonance is narrowed until the grid check passes.
pub fn interpolate_espr_point(z0: Complex64, omega0: f64, h_inf: f64) -> Result<RationalFunction> {
    if !(z0.re > 0.0) {
        return Err(Error::NonPositiveTarget(z0));
    }
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega0 must be positive, got {omega0}")));
    }
    if !(h_inf >= 0.0) {
        return Err(Error::InvalidParameter(format!("h_inf must be nonnegative, got {h_inf}")));
    }
    let w0 = omega0;
    let tol = 1e-12 * z0.norm().max(1.0);
    let base = RationalFunction::constant(h_inf);

    let mut reactive = RationalFunction::zero();
    let mut re_reactive = 0.0;
    if z0.im.abs() > tol {
        let w1 = if z0.im > 0.0 { 2.0 * w0 } else { 0.5 * w0 };
        let beta = 0.2 * w0;
        let s0 = Complex64::new(0.0, w0);
        let unit = s0 / (w1 * w1 - w0 * w0 + beta * s0);
        let c = z0.im / unit.im;
        re_reactive = c * unit.re;
        reactive = RationalFunction::new(Polynomial::from_slice(&[0.0, c]), Polynomial::from_slice(&[w1 * w1, beta, 1.0]))?;
    }
    let a = z0.re - h_inf - re_reactive;
    if a.abs() <= tol && z0.im.abs() <= tol {
        return Ok(base);
    }
    let grid = FrequencyGrid::log_spaced(w0 * 1e-4, w0 * 1e4, 800)?;
    let mut b = w0;
    let mut last = String::new();
    for _ in 0..=20 {
        let resonant = RationalFunction::new(
            Polynomial::from_slice(&[0.0, a * b]),
            Polynomial::from_slice(&[w0 * w0, b, 1.0]),
        )?;
        let q = sum_exact(&[&base, &resonant, &reactive])?;
        let hit = q.eval(Complex64::new(0.0, w0))?;
        let rep = espr_margin_grid(&q, &grid)?;
        if rep.is_espr && (hit - z0).norm() <= 1e-8 * z0.norm().max(1.0) && q.is_stable()? {
            return Ok(q);
        }
        last = format!("b = {b:e}: margin {:e}, |q(jw0) - z0| = {:e}", rep.epsilon_margin, (hit - z0).norm());
        b *= 0.5;
    }
    Err(Error::InterpolationFailure(last))
}

/// Sum over the product of denominators without root-based reduction.
fn sum_exact(terms: &[&RationalFunction]) -> Result<RationalFunction> {
    let den = terms.iter().fold(Polynomial::one(), |acc, t| &acc * t.den());
    let mut num = Polynomial::zero();
    for (k, t) in terms.iter().enumerate() {
        let others = terms
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .fold(Polynomial::one(), |acc, (_, u)| &acc * u.den());
        num = &num + &(t.num() * &others);
    }
    RationalFunction::new(num, den)
}

/// Rank-one admissible `L = v v^T`, `v = [1/sqrt 2, -1/sqrt(2(n-1)) 1_{n-1}]`.
pub fn rank_one_l(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("counterexample needs n >= 2, got {n}")));
    }
    let tail = -(1.0 / (2.0 * (n - 1) as f64)).sqrt();
    let v = nalgebra::DVector::from_fn(n, |i, _| if i == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { tail });
    Ok(&v * v.transpose())
}

/// `det(I + L diag(values) / jw)`
pub fn det_m(l: &DMatrix<f64>, values: &[Complex64], omega: f64) -> Complex64 {
    let n = values.len();
    let s = Complex64::new(0.0, omega);
    let m = DMatrix::from_fn(n, n, |i, j| {
        let e = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        e + l[(i, j)] * values[j] / s
    });
    m.determinant()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleSpec {
    /// Common `p` of buses `2..n`.
    pub p_partners: RationalFunction,
    pub l: DMatrix<f64>,
    pub n: usize,
    pub omega0: f64,
    pub gamma1: f64,
    pub witness: ViolationWitness,
    /// The interpolant `h (1 + p/s)` of the partners.
    pub q: RationalFunction,
}

impl CounterexampleSpec {
    /// Bus functions `[gamma1 p1, p, ..., p]` at the level of the class `L`.
    pub fn bus_functions(&self, p1: &RationalFunction) -> Vec<RationalFunction> {
        let mut v = vec![p1.scale(self.gamma1)];
        v.extend(std::iter::repeat_n(self.p_partners.clone(), self.n - 1));
        v
    }

    /// `det M(jw0)` from the full matrix.
    pub fn det_at_omega0<P: FrequencyResponse + ?Sized>(&self, p1: &P) -> Result<Complex64> {
        let s = Complex64::new(0.0, self.omega0);
        let mut vals = vec![self.gamma1 * p1.eval(s)?];
        let pp = self.p_partners.eval(s)?;
        vals.extend(std::iter::repeat_n(pp, self.n - 1));
        Ok(det_m(&self.l, &vals, self.omega0))
    }

    /// Physical two-bus form: one line with `b = 1/2` and unit voltage caps, so that
    /// `gamma_i = 1` and the scaled Laplacian equals `L`.
    pub fn to_network(&self, p1: &RationalFunction) -> Result<NetworkSpec> {
        if self.n != 2 {
            return Err(Error::InvalidParameter("physical mapping is only defined for n = 2".into()));
        }
        NetworkSpec::new(
            self.bus_functions(p1).into_iter().map(BusModel::from_closed_loop).collect(),
            vec![LineData { i: 0, j: 1, b: 0.5 }],
            BusLimits { vmax: vec![1.0; 2] },
            None,
        )
    }
}

/// Partners and `L` that make the interconnection with `gamma1 p1` at bus 1 unstable.
///
/// With `h = s/(s+T) g`, `p = (s+T)(q - h)/g` reduces to `(q_n h_d - h_n q_d) / (q_d prod(s + alpha))`.
pub fn build_counterexample<P: FrequencyResponse + ?Sized>(
    p1: &P,
    h: &Multiplier,
    gamma1: f64,
    n: usize,
    opts: &CertOptions,
) -> Result<CounterexampleSpec> {
    let l = rank_one_l(n)?;
    let witness = find_violation(p1, h, gamma1, &opts.grid_for(p1, h)).ok_or(Error::NoViolation)?;
    let w0 = witness.omega0;
    let s0 = Complex64::new(0.0, w0);
    let x = gamma1 * p1.eval(s0)? / s0;
    let target = h.eval(s0) * (-1.0 - x);
    let q = interpolate_espr_point(target, w0, h.h_inf())?;

    let hr = h.to_rational();
    let mut num = &(q.num() * hr.den()) - &(hr.num() * q.den());
    // q(inf) = h(inf) cancels the leading term exactly
    let top = num.degree();
    if top == q.den().degree() + hr.den().degree() {
        let mut c = num.coeffs().to_vec();
        c[top] = 0.0;
        num = Polynomial::from_slice(&c);
    }
    let alphas = h
        .stages()
        .iter()
        .fold(Polynomial::one(), |acc, &(a, _)| &acc * &Polynomial::linear(a));
    let p = RationalFunction::new(num, q.den() * &alphas)?;

    let member = ph_membership(&p, h, 1.0, opts)?;
    if !member.member {
        return Err(Error::InterpolationFailure(format!(
            "partner fails membership (margin {:e} at {})",
            member.margin, member.worst_omega
        )));
    }
    let spec = CounterexampleSpec {
        p_partners: p,
        l,
        n,
        omega0: w0,
        gamma1,
        witness,
        q,
    };
    let det = spec.det_at_omega0(p1)?;
    if det.norm() >= 1e-6 {
        return Err(Error::InterpolationFailure(format!("|det M(j w0)| = {:e}", det.norm())));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::network::closed_loop_oracle_with;

    fn lag() -> RationalFunction {
        RationalFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn violation_examples() {
        let h = Multiplier::first_order(1.0).unwrap();
        let grid = CertOptions::default().grid_for(&lag(), &h);
        assert!(find_violation(&lag(), &h, 5.0, &grid).is_none());
        let w = find_violation(&lag(), &h, 7.0, &grid).unwrap();
        assert!(w.value.re < 0.0 && w.omega0 > 0.0);
        // a passive p with a slow multiplier never violates
        let big = Multiplier::first_order(1e4).unwrap();
        assert!(find_violation(&lag(), &big, 3.0, &CertOptions::default().grid_for(&lag(), &big)).is_none());
    }

    #[test]
    fn interpolation_examples() {
        let q = interpolate_espr_point(Complex64::new(1.0, 0.0), 1.0, 1.0).unwrap();
        assert_eq!(q, RationalFunction::constant(1.0));
        let z0 = Complex64::new(1.0, -0.5);
        let q = interpolate_espr_point(z0, 2.0, 1.0).unwrap();
        assert!((q.eval(Complex64::new(0.0, 2.0)).unwrap() - z0).norm() < 1e-8);
        assert!((q.high_frequency_gain().unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(
            interpolate_espr_point(Complex64::new(-1.0, 1.0), 1.0, 1.0),
            Err(Error::NonPositiveTarget(Complex64::new(-1.0, 1.0)))
        );
        for z in [Complex64::new(0.05, 3.0), Complex64::new(4.0, -2.0), Complex64::new(0.3, 0.0)] {
            let q = interpolate_espr_point(z, 0.7, 1.0).unwrap();
            assert!((q.eval(Complex64::new(0.0, 0.7)).unwrap() - z).norm() < 1e-8);
        }
    }

    #[test]
    fn rank_one_l_is_admissible() {
        let l = rank_one_l(2).unwrap();
        assert!((l - DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5])).abs().max() < 1e-15);
        let ev = linalg::symmetric_eigenvalues(&rank_one_l(5).unwrap());
        assert!(ev[..4].iter().all(|e| e.abs() < 1e-12) && (ev[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lag_counterexample() {
        let h = Multiplier::first_order(1.0).unwrap();
        let opts = CertOptions::default();
        for n in [2, 5] {
            let ce = build_counterexample(&lag(), &h, 7.0, n, &opts).unwrap();
            assert!(ce.det_at_omega0(&lag()).unwrap().norm() < 1e-6);
            let v = closed_loop_oracle_with(&ce.bus_functions(&lag()), &ce.l).unwrap();
            assert!(!v.is_stable());
            let z = v.worst_eigenvalue.unwrap();
            assert!((Complex64::new(z.re, z.im.abs()) - Complex64::new(0.0, ce.omega0)).norm() < 1e-5, "{z} vs {}", ce.omega0);
        }
        assert_eq!(
            build_counterexample(&lag(), &h, 5.0, 2, &opts).map(|_| ()),
            Err(Error::NoViolation)
        );
    }
}
