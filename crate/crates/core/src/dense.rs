//! Dense reference for `Ẽ = (h² + 2P_{h^{1/2}v})^{1/2}` on small mode sets.
//!
//! Used by the Fock-space verifier on truncated lunes and as the reference for the
//! integral representation; the secular solver never calls into this module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::spectral::OneBodyProblem;

/// Largest dimension assembled densely.
pub const DENSE_CAP: usize = 4096;

/// `Ẽ` for diagonal `h = diag(λ)` and vector `v`, together with its eigensystem.
#[derive(Clone, Debug)]
pub struct DenseOneBody {
    pub lambdas: Vec<f64>,
    pub v: Vec<f64>,
    /// Eigenvalues of `Ẽ`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `n` is the eigenvector for `eigenvalues[n]`.
    pub eigenvectors: DMatrix<f64>,
    pub e_tilde: DMatrix<f64>,
}

impl DenseOneBody {
    pub fn new(lambdas: &[f64], v: &[f64]) -> Result<Self> {
        let n = lambdas.len();
        if v.len() != n {
            return Err(Error::InvalidInput(format!("h has dimension {n}, v has {}", v.len())));
        }
        if n > DENSE_CAP {
            return Err(Error::DimensionCap { dim: n, cap: DENSE_CAP });
        }
        let u = DVector::from_iterator(n, lambdas.iter().zip(v).map(|(l, x)| l.sqrt() * x));
        let mut sq = &u * u.transpose() * 2.0;
        for i in 0..n {
            sq[(i, i)] += lambdas[i] * lambdas[i];
        }
        let eig = SymmetricEigen::new(sq);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (c, &i) in order.iter().enumerate() {
            eigenvectors.set_column(c, &eig.eigenvectors.column(i));
        }
        let diag = DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone()));
        let e_tilde = &eigenvectors * diag * eigenvectors.transpose();
        Ok(DenseOneBody { lambdas: lambdas.to_vec(), v: v.to_vec(), eigenvalues, eigenvectors, e_tilde })
    }

    /// Expands a histogram problem mode by mode, levels in increasing order.
    pub fn from_problem(problem: &OneBodyProblem) -> Result<Self> {
        let n = problem.histogram().size as usize;
        if n > DENSE_CAP {
            return Err(Error::DimensionCap { dim: n, cap: DENSE_CAP });
        }
        let mut lambdas = Vec::with_capacity(n);
        for &(t, m) in &problem.histogram().levels {
            lambdas.extend(std::iter::repeat(t as f64 / 2.0).take(m as usize));
        }
        let v = vec![problem.weight_per_mode().sqrt(); n];
        Self::new(&lambdas, &v)
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// `Ẽ − h`, from `ẼX + Xh = 2uuᵀ` with `u = h^{1/2}v` solved entrywise in `Ẽ`'s eigenbasis.
    /// Subtracting `h` from `e_tilde` instead loses all digits below `‖h‖·ε`.
    pub fn e_minus_h(&self) -> DMatrix<f64> {
        let n = self.dim();
        let u = DVector::from_iterator(n, self.lambdas.iter().zip(&self.v).map(|(l, x)| l.sqrt() * x));
        let qu = self.eigenvectors.transpose() * &u;
        let y = DMatrix::from_fn(n, n, |a, i| {
            let den = self.eigenvalues[a] + self.lambdas[i];
            if den > 0.0 {
                2.0 * qu[a] * u[i] / den
            } else {
                0.0
            }
        });
        let x = &self.eigenvectors * y;
        // symmetric up to rounding; symmetrize so downstream Hermiticity checks see exact symmetry
        (&x + x.transpose()) * 0.5
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.e_minus_h().norm_squared()
    }

    /// Top eigenvector with the sign fixed so that `⟨h^{1/2}v, φ⟩ ≥ 0`.
    pub fn top_eigenvector(&self) -> Vec<f64> {
        let n = self.dim();
        let col = self.eigenvectors.column(n - 1);
        let overlap: f64 = (0..n).map(|i| self.lambdas[i].sqrt() * self.v[i] * col[i]).sum();
        let s = if overlap < 0.0 { -1.0 } else { 1.0 };
        col.iter().map(|x| s * x).collect()
    }
}
