use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{build_laplacian, NetworkSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tf::{realize_state_space, FrequencyResponse, RationalFunction};

/// Eigenvalues within this distance of the imaginary axis are reported as marginal.
pub const ORACLE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityKind {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    /// Rightmost closed-loop eigenvalue; `None` for a loop without states.
    pub worst_eigenvalue: Option<Complex64>,
    /// Largest eigenvalue modulus, 0 without states.
    pub spectral_radius: f64,
    pub order: usize,
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        self.kind == StabilityKind::Stable
    }
}

/// `L = F F^T` from the eigenvalues above `1e-10`.
pub fn rank_factor(l: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = linalg::symmetric_eigen(l);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-10).collect();
    DMatrix::from_fn(l.nrows(), keep.len(), |i, c| {
        eig.eigenvectors[(i, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
    })
}

/// Eigenvalue test of the full network for rational buses at the given Laplacian.
///
/// Each bus `theta_i' = g_i(s) u_i` with `u = -L delta`, `delta' = theta'`. With `L = F F^T`
/// and `eta = F^T delta` the loop is `[[A, -B F], [F^T C, -F^T D F]]`.
pub fn closed_loop_oracle_with(buses: &[RationalFunction], l: &DMatrix<f64>) -> Result<StabilityVerdict> {
    let n = buses.len();
    if l.nrows() != n || l.ncols() != n {
        return Err(Error::DimensionMismatch(format!("Laplacian is {}x{} for {n} buses", l.nrows(), l.ncols())));
    }
    let real: Vec<_> = buses
        .iter()
        .enumerate()
        .map(|(i, g)| realize_state_space(g).map(|r| r.reduce_minimal(1e-10)).map_err(|e| e.at_bus(i)))
        .collect::<Result<_>>()?;
    let nx: usize = real.iter().map(|r| r.order()).sum();
    let f = rank_factor(l);
    let rank = f.ncols();
    let mut a = DMatrix::zeros(nx, nx);
    let mut b = DMatrix::zeros(nx, n);
    let mut c = DMatrix::zeros(n, nx);
    let mut d = DMatrix::zeros(n, n);
    let mut off = 0;
    for (i, r) in real.iter().enumerate() {
        let k = r.order();
        a.view_mut((off, off), (k, k)).copy_from(&r.a);
        b.view_mut((off, i), (k, 1)).copy_from(&r.b);
        c.view_mut((i, off), (1, k)).copy_from(&r.c);
        d[(i, i)] = r.d[(0, 0)];
        off += k;
    }
    let ft = f.transpose();
    let top_right = -(&b * &f);
    let bottom_left = &ft * &c;
    let bottom_right = -(&ft * &d * &f);
    let m = if rank == 0 { a } else { linalg::block2(&a, &top_right, &bottom_left, &bottom_right) };
    let order = m.nrows();
    let eig = linalg::eigenvalues(&m)?;
    let spectral_radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let worst = linalg::rightmost(eig);
    let kind = match worst {
        None => StabilityKind::Stable,
        Some(z) if z.re < -ORACLE_TOL => StabilityKind::Stable,
        Some(z) if z.re <= ORACLE_TOL => StabilityKind::Marginal,
        Some(_) => StabilityKind::Unstable,
    };
    Ok(StabilityVerdict {
        kind,
        worst_eigenvalue: worst,
        spectral_radius,
        order,
    })
}

/// Oracle at the network's own Laplacian (operating point, or flat angles at `Vmax`).
pub fn closed_loop_oracle(spec: &NetworkSpec) -> Result<StabilityVerdict> {
    spec.validate()?;
    let mut gs = Vec::with_capacity(spec.n());
    for (i, b) in spec.buses.iter().enumerate() {
        if b.has_delay() {
            return Err(Error::DelayModelPresent(i));
        }
        let g = b.closed_loop().map_err(|e| e.at_bus(i))?;
        gs.push(g.as_rational().ok_or(Error::DelayModelPresent(i))?);
    }
    let op = spec.operating_point_or_default();
    let l = build_laplacian(spec.n(), &spec.lines, &op)?;
    closed_loop_oracle_with(&gs, &l)
}
