//! MSE matrices and weight matrices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::group::GroupStructure;

/// Relative eigenvalue floor applied by the SPD repair, as a fraction of `trace / k`.
pub const SPD_FLOOR: f64 = 1e-10;
/// Largest condition number accepted after repair.
pub const MAX_CONDITION: f64 = 1e12;

/// Symmetric positive-definite estimate of `E[(T - Jθ)(T - Jθ)ᵀ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseMatrix {
    entries: DMatrix<f64>,
    ridge: f64,
}

impl MseMatrix {
    /// Symmetrizes `entries` and lifts the spectrum when its smallest
    /// eigenvalue falls below `SPD_FLOOR * trace / k`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let k = entries.nrows();
        if k == 0 || entries.ncols() != k {
            return Err(Error::DimensionMismatch { expected: k.max(1), got: entries.ncols() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("MSE matrix"));
        }
        let mut sym = (&entries + entries.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        let lo = eig.eigenvalues.min();
        let trace = sym.trace();
        // An all-zero estimate has no scale of its own; fall back to unit scale.
        let scale = if trace > 0.0 { trace / k as f64 } else { 1.0 };
        let floor = SPD_FLOOR * scale;
        let mut ridge = 0.0;
        if lo < floor {
            ridge = floor - lo;
            for i in 0..k {
                sym[(i, i)] += ridge;
            }
        }
        let hi = eig.eigenvalues.max() + ridge;
        let cond = hi / (lo + ridge);
        if !(cond.is_finite() && cond <= MAX_CONDITION) {
            return Err(Error::Singular(cond));
        }
        Ok(Self { entries: sym, ridge })
    }

    pub fn identity(k: usize) -> Self {
        Self { entries: DMatrix::identity(k, k), ridge: 0.0 }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Amount added to the diagonal by the SPD repair (0 when none was needed).
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Principal submatrix on `indices`.
    pub fn principal(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(indices.len(), indices.len(), |r, c| self.entries[(indices[r], indices[c])])
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.entries.clone()).ok_or(Error::Singular(f64::INFINITY))
    }

    /// `xᵀ Σ x`
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.entries * x))
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.entries * c)
    }
}

/// Averaging weights `λ ∈ ℝ^{k×d}`; column `j` combines `T` into `θ̂_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
    group: GroupStructure,
}

impl WeightMatrix {
    pub fn new(entries: DMatrix<f64>, group: GroupStructure) -> Result<Self> {
        if entries.nrows() != group.k() {
            return Err(Error::DimensionMismatch { expected: group.k(), got: entries.nrows() });
        }
        if entries.ncols() != group.d() {
            return Err(Error::DimensionMismatch { expected: group.d(), got: entries.ncols() });
        }
        Ok(Self { entries, group })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn group(&self) -> &GroupStructure {
        &self.group
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.entries.column(j).into_owned()
    }

    /// Largest entry of `|λᵀJ - I|`.
    pub fn constraint_residual(&self) -> f64 {
        let d = self.group.d();
        let lj = self.entries.transpose() * self.group.selector();
        (lj - DMatrix::<f64>::identity(d, d)).amax()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_input() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let s = MseMatrix::new(m).unwrap();
        assert_eq!(s.entries()[(0, 1)], 0.5);
        assert_eq!(s.entries()[(1, 0)], 0.5);
        assert_eq!(s.ridge(), 0.0);
    }

    #[test]
    fn zero_matrix_gets_ridge() {
        let s = MseMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(s.ridge() > 0.0);
        assert!(s.cholesky().is_ok());
    }

    #[test]
    fn rank_deficient_gets_ridge() {
        // ones(2,2) has eigenvalues 0 and 2.
        let s = MseMatrix::new(DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!((s.ridge() - 1e-10).abs() < 1e-20);
        assert!(s.cholesky().is_ok());
    }

    #[test]
    fn rejects_ill_conditioned_after_repair() {
        // Negative eigenvalue far below the floor cannot be repaired within the condition cap.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e3]);
        assert!(matches!(MseMatrix::new(m), Err(Error::Singular(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(MseMatrix::new(m).is_err());
    }
}
