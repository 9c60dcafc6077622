#![allow(dead_code)]

use gridcert::cert::Multiplier;
use gridcert::tf::{Polynomial, RationalFunction};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use std::ops::RangeInclusive;

/// Stable pole set: real poles and complex pairs in the open left half-plane.
pub fn random_poles<R: Rng>(rng: &mut R, degree: usize) -> Vec<Complex64> {
    let mut poles = Vec::with_capacity(degree);
    while poles.len() < degree {
        if degree - poles.len() >= 2 && rng.gen_bool(0.4) {
            let re = -10f64.powf(rng.gen_range(-1.3..1.0));
            let im = 10f64.powf(rng.gen_range(-1.0..1.0));
            poles.push(Complex64::new(re, im));
            poles.push(Complex64::new(re, -im));
        } else {
            poles.push(Complex64::new(-10f64.powf(rng.gen_range(-1.0..1.0)), 0.0));
        }
    }
    poles
}

/// Proper stable rational function of the given degree with `f(0) > 0`.
pub fn random_stable<R: Rng>(rng: &mut R, degrees: RangeInclusive<usize>, strictly_proper: bool) -> RationalFunction {
    let degree = rng.gen_range(degrees);
    let den = Polynomial::from_roots(&random_poles(rng, degree));
    let top = if strictly_proper { degree.saturating_sub(1) } else { degree };
    let mut num: Vec<f64> = (0..=top).map(|_| rng.gen_range(-1.0..1.0)).collect();
    num[0] = den.coeff(0) * rng.gen_range(0.2..2.0);
    if degree == 0 {
        num[0] = rng.gen_range(0.2..2.0);
    }
    RationalFunction::new(Polynomial::from_slice(&num), den).unwrap()
}

/// Stable function with a positive high-frequency value `d0`, `d0 + strictly proper part`.
pub fn random_with_feedthrough<R: Rng>(rng: &mut R, degrees: RangeInclusive<usize>, d0: f64) -> RationalFunction {
    let sp = random_stable(rng, degrees, true);
    let num = &sp.den().scale(d0) + sp.num();
    RationalFunction::new(num, sp.den().clone()).unwrap()
}

/// Multiplier with corners log-uniform in `[1e-2, 1e3]`.
pub fn random_multiplier<R: Rng>(rng: &mut R, max_stages: usize) -> Multiplier {
    let n = rng.gen_range(0..=max_stages);
    loop {
        let mut c: Vec<f64> = (0..2 * n + 1).map(|_| 10f64.powf(rng.gen_range(-2.0..3.0))).collect();
        c.sort_by(f64::total_cmp);
        let stages = (0..n).map(|k| (c[2 * k + 1], c[2 * k])).collect();
        if let Ok(h) = Multiplier::new(c[2 * n], stages) {
            return h;
        }
    }
}

/// Seeded RNG strategy for proptest cases.
pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn jw(w: f64) -> Complex64 {
    Complex64::new(0.0, w)
}

pub fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Closed loops of a delay-free network.
pub fn bus_rationals(spec: &gridcert::network::NetworkSpec) -> Vec<RationalFunction> {
    use gridcert::tf::FrequencyResponse;
    spec.buses
        .iter()
        .map(|b| b.closed_loop().unwrap().as_rational().unwrap())
        .collect()
}

/// Fresh angles in `[-0.6, 0.6]` (voltages unchanged) meeting the angle/voltage assumption.
pub fn redraw_angles<R: Rng>(rng: &mut R, spec: &gridcert::network::NetworkSpec) -> gridcert::network::NetworkSpec {
    use gridcert::network::{check_assumption1, OperatingPoint};
    let v0 = spec.operating_point_or_default().v0;
    loop {
        let op = OperatingPoint {
            v0: v0.clone(),
            theta0: (0..spec.n()).map(|_| rng.gen_range(-0.6..=0.6)).collect(),
        };
        if check_assumption1(&spec.lines, &op, &spec.limits).ok {
            let mut out = spec.clone();
            out.operating_point = Some(op);
            return out;
        }
    }
}

/// Random proper subset of `0..n` with at least one element, sorted.
pub fn random_keep<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let keep: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !keep.is_empty() && keep.len() < n {
            return keep;
        }
    }
}
