use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::rational::RationalFunction;
use crate::error::{Error, Result};
use crate::linalg;

/// `x' = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceRealization {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpaceRealization {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {n}x{n} but B has {} rows and C has {} columns",
                b.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Static gain with no states.
    pub fn gain(k: f64) -> Self {
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, 1),
            c: DMatrix::zeros(1, 0),
            d: DMatrix::from_element(1, 1, k),
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    fn check_siso(&self) -> Result<()> {
        if self.inputs() != 1 || self.outputs() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected a SISO realization, got {} outputs x {} inputs",
                self.outputs(),
                self.inputs()
            )));
        }
        Ok(())
    }

    /// `C (sI - A)^{-1} B + D`
    pub fn eval_matrix(&self, s: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.order();
        let dc = self.d.map(|x| Complex64::new(x, 0.0));
        if n == 0 {
            return Ok(dc);
        }
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let v = Complex64::new(-self.a[(i, j)], 0.0);
            if i == j {
                v + s
            } else {
                v
            }
        });
        let bc = self.b.map(|x| Complex64::new(x, 0.0));
        let x = m.lu().solve(&bc).ok_or(Error::PoleProximity { s })?;
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::PoleProximity { s });
        }
        Ok(self.c.map(|x| Complex64::new(x, 0.0)) * x + dc)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        self.check_siso()?;
        Ok(self.eval_matrix(s)?[(0, 0)])
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a)
    }

    /// Removes uncontrollable then unobservable directions by orthogonal Krylov projection.
    pub fn reduce_minimal(&self, tol: f64) -> Self {
        if self.order() == 0 {
            return self.clone();
        }
        let v = krylov_basis(&self.a, &self.b, tol);
        let a1 = v.transpose() * &self.a * &v;
        let b1 = v.transpose() * &self.b;
        let c1 = &self.c * &v;
        if a1.nrows() == 0 {
            return Self {
                a: a1,
                b: b1,
                c: c1,
                d: self.d.clone(),
            };
        }
        let w = krylov_basis(&a1.transpose(), &c1.transpose(), tol);
        Self {
            a: w.transpose() * &a1 * &w,
            b: w.transpose() * &b1,
            c: &c1 * &w,
            d: self.d.clone(),
        }
    }
}

/// Orthonormal basis of span{B, AB, A^2 B, ...}, accepting directions whose
/// residual after double Gram-Schmidt exceeds `tol` relative to the operator scale.
fn krylov_basis(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let scale_a = a.norm().max(f64::MIN_POSITIVE);
    let scale_b = b.norm().max(f64::MIN_POSITIVE);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let try_add = |basis: &mut Vec<DVector<f64>>, mut v: DVector<f64>, scale: f64| -> bool {
        for _ in 0..2 {
            for q in basis.iter() {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let nv = v.norm();
        if nv > tol * scale && basis.len() < n {
            basis.push(v / nv);
            true
        } else {
            false
        }
    };
    let mut frontier: Vec<usize> = Vec::new();
    for j in 0..b.ncols() {
        if try_add(&mut basis, b.column(j).into_owned(), scale_b) {
            frontier.push(basis.len() - 1);
        }
    }
    while !frontier.is_empty() && basis.len() < n {
        let mut next = Vec::new();
        for idx in frontier {
            let v = a * &basis[idx];
            if try_add(&mut basis, v, scale_a) {
                next.push(basis.len() - 1);
            }
        }
        frontier = next;
    }
    if basis.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    DMatrix::from_columns(&basis)
}

/// Controllable canonical form, diagonally balanced.
pub fn realize_state_space(f: &RationalFunction) -> Result<StateSpaceRealization> {
    if !f.is_proper() {
        return Err(Error::ImproperFunction {
            num: f.num().degree(),
            den: f.den().degree(),
        });
    }
    let den = f.den();
    let n = den.degree();
    let lead = den.leading();
    let a_coef: Vec<f64> = (0..=n).map(|k| den.coeff(k) / lead).collect();
    let b_coef: Vec<f64> = (0..=n).map(|k| f.num().coeff(k) / lead).collect();
    let d = b_coef[n];
    if n == 0 {
        return Ok(StateSpaceRealization::gain(d));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -a_coef[j];
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let mut c = DMatrix::zeros(1, n);
    for j in 0..n {
        c[(0, j)] = b_coef[j] - d * a_coef[j];
    }
    let scaling = balance_parlett_reinsch(&mut a);
    for i in 0..n {
        b[(i, 0)] /= scaling[i];
        c[(0, i)] *= scaling[i];
    }
    StateSpaceRealization::new(a, b, c, DMatrix::from_element(1, 1, d))
}

/// Realization of `h(s) (1 + gamma p(s) / s)` from `p` and a strictly proper `h(s)/s`.
pub fn series_h_over_s(
    p: &StateSpaceRealization,
    h_over_s: &StateSpaceRealization,
    gamma: f64,
) -> Result<StateSpaceRealization> {
    p.check_siso()?;
    h_over_s.check_siso()?;
    if h_over_s.d[(0, 0)] != 0.0 {
        return Err(Error::DimensionMismatch("h(s)/s must be strictly proper (D = 0)".into()));
    }
    let (a1, b1, c1, d1) = (&p.a, &p.b, &p.c, p.d[(0, 0)]);
    let (a2, b2, c2) = (&h_over_s.a, &h_over_s.b, &h_over_s.c);
    let (n1, n2) = (a1.nrows(), a2.nrows());
    let a = linalg::block2(a1, &(b1 * c2), &DMatrix::zeros(n2, n1), a2);
    let mut b = DMatrix::zeros(n1 + n2, 1);
    b.view_mut((n1, 0), (n2, 1)).copy_from(b2);
    let mut c = DMatrix::zeros(1, n1 + n2);
    c.view_mut((0, 0), (1, n1)).copy_from(&(c1 * gamma));
    c.view_mut((0, n1), (1, n2)).copy_from(&(c2 * (gamma * d1) + c2 * a2));
    let d = c2 * b2;
    StateSpaceRealization::new(a, b, c, d)
}
