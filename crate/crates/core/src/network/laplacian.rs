use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BusLimits, LineData, OperatingPoint};
use crate::error::{Error, Result};
use crate::linalg;

/// Weighted Laplacian with off-diagonals `-V_i V_j b_ij cos(theta_i - theta_j)`.
pub fn build_laplacian(n: usize, lines: &[LineData], op: &OperatingPoint) -> Result<DMatrix<f64>> {
    if op.v0.len() != n || op.theta0.len() != n {
        return Err(Error::DimensionMismatch(format!("operating point does not cover {n} buses")));
    }
    let mut l = DMatrix::zeros(n, n);
    for line in lines {
        let (i, j) = (line.i, line.j);
        if i >= n || j >= n || i == j {
            return Err(Error::Index(format!("invalid line {i}-{j}")));
        }
        let w = op.v0[i] * op.v0[j] * line.b * (op.theta0[i] - op.theta0[j]).cos();
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    Ok(l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    AngleDifference { line: usize, i: usize, j: usize, difference: f64 },
    Voltage { bus: usize, v0: f64, vmax: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Angle differences below `pi/2` on every energized line and `V0 <= Vmax` at every bus.
pub fn check_assumption1(lines: &[LineData], op: &OperatingPoint, limits: &BusLimits) -> Assumption1Report {
    let mut violations = Vec::new();
    for (k, l) in lines.iter().enumerate() {
        if l.b > 0.0 {
            let diff = (op.theta0[l.i] - op.theta0[l.j]).abs();
            if diff >= FRAC_PI_2 {
                violations.push(Violation::AngleDifference {
                    line: k,
                    i: l.i,
                    j: l.j,
                    difference: diff,
                });
            }
        }
    }
    for (bus, (&v0, &vmax)) in op.v0.iter().zip(&limits.vmax).enumerate() {
        if v0 > vmax {
            violations.push(Violation::Voltage { bus, v0, vmax });
        }
    }
    Assumption1Report {
        ok: violations.is_empty(),
        violations,
    }
}

/// Per-bus requirements `gamma_i = 2 sum_j Vmax_i Vmax_j b_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaScaling {
    pub gamma: Vec<f64>,
}

impl GammaScaling {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.gamma.clone()))
    }

    pub fn inv_sqrt(&self, keep: &[usize]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            keep.len(),
            keep.iter().map(|&i| 1.0 / self.gamma[i].sqrt()),
        ))
    }
}

pub fn gamma_bounds(n: usize, lines: &[LineData], limits: &BusLimits) -> Result<GammaScaling> {
    if limits.vmax.len() != n {
        return Err(Error::DimensionMismatch(format!("vmax has {} entries for {n} buses", limits.vmax.len())));
    }
    let mut gamma = vec![0.0; n];
    for l in lines {
        let w = 2.0 * limits.vmax[l.i] * limits.vmax[l.j] * l.b;
        gamma[l.i] += w;
        gamma[l.j] += w;
    }
    if let Some(i) = gamma.iter().position(|g| *g <= 0.0) {
        return Err(Error::IsolatedBus(i));
    }
    Ok(GammaScaling { gamma })
}

/// `Gamma_keep^{-1/2} L Gamma_keep^{-1/2}`
pub fn scaled_laplacian(l: &DMatrix<f64>, scaling: &GammaScaling, keep: &[usize]) -> DMatrix<f64> {
    let s = scaling.inv_sqrt(keep);
    &s * l * &s
}

/// Schur complement of `L` onto `keep` (sorted, unique indices).
pub fn kron_reduce(l: &DMatrix<f64>, keep: &[usize]) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&i| i >= n) {
        return Err(Error::Index(format!("keep set {keep:?} invalid for {n} buses")));
    }
    let elim: Vec<usize> = (0..n).filter(|i| !keep_sorted.contains(i)).collect();
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |a, b| l[(rows[a], cols[b])]);
    let l11 = sub(&keep_sorted, &keep_sorted);
    if elim.is_empty() {
        return Ok(l11);
    }
    let l12 = sub(&keep_sorted, &elim);
    let l22 = sub(&elim, &elim);
    let ev = linalg::symmetric_eigenvalues(&l22);
    let scale = linalg::max_abs(&l22).max(f64::MIN_POSITIVE);
    if ev.first().is_none_or(|&m| m <= 1e-12 * scale) {
        return Err(Error::SingularInterior);
    }
    let chol = l22.clone().cholesky().ok_or(Error::SingularInterior)?;
    let x = chol.solve(&l12.transpose());
    let red = l11 - &l12 * x;
    // symmetrize rounding
    Ok((&red + red.transpose()) * 0.5)
}
