//! Diagnostics comparing an estimated MSE matrix with the true one.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::averaging::ConstraintSet;
use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::matrix::MseMatrix;

/// Largest singular value of `AB⁻¹ - BA⁻¹`, an upper bound on the divergence
/// over every constraint set.
pub fn divergence_upper_bound(a: &MseMatrix, b: &MseMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    // AB⁻¹ = (B⁻¹A)ᵀ since both are symmetric
    let ab_inv = b.cholesky()?.solve(a.entries()).transpose();
    let ba_inv = a.cholesky()?.solve(b.entries()).transpose();
    let diff = ab_inv - ba_inv;
    Ok(diff.singular_values().max())
}

fn ratio_divergence(a: &MseMatrix, b: &MseMatrix, lambda: &DMatrix<f64>) -> f64 {
    let ta: f64 = (0..lambda.ncols()).map(|j| a.quadratic_form(&lambda.column(j).into_owned())).sum();
    let tb: f64 = (0..lambda.ncols()).map(|j| b.quadratic_form(&lambda.column(j).into_owned())).sum();
    (1.0 - ta / tb).abs().max((1.0 - tb / ta).abs())
}

/// A random element of the constraint set.
pub fn random_feasible<R: Rng + ?Sized>(
    constraint: ConstraintSet,
    group: &GroupStructure,
    rng: &mut R,
) -> DMatrix<f64> {
    let (k, d) = (group.k(), group.d());
    let mut lambda = DMatrix::zeros(k, d);
    match constraint {
        ConstraintSet::Maximal => {
            // J(JᵀJ)⁻¹ plus the projection of Z onto {λ : λᵀJ = 0}
            let z = DMatrix::from_fn(k, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            for i in 0..k {
                let g = group.group_of(i);
                let kg = group.sizes()[g] as f64;
                lambda[(i, g)] += 1.0 / kg;
                for j in 0..d {
                    let block_mean = group.range(g).map(|r| z[(r, j)]).sum::<f64>() / kg;
                    lambda[(i, j)] += z[(i, j)] - block_mean;
                }
            }
        }
        ConstraintSet::ComponentWise => {
            for j in 0..d {
                let r = group.range(j);
                let z: Vec<f64> = r.clone().map(|_| rng.sample(StandardNormal)).collect();
                let shift = (1.0 - z.iter().sum::<f64>()) / z.len() as f64;
                for (i, zi) in r.zip(z) {
                    lambda[(i, j)] = zi + shift;
                }
            }
        }
        ConstraintSet::Convex => {
            for j in 0..d {
                let r = group.range(j);
                let e: Vec<f64> = r.clone().map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                for (i, ei) in r.zip(e) {
                    lambda[(i, j)] = ei / total;
                }
            }
        }
        ConstraintSet::Selection => {
            for j in 0..d {
                let r = group.range(j);
                let pick = rng.random_range(r);
                lambda[(pick, j)] = 1.0;
            }
        }
    }
    lambda
}

/// Lower bound on the divergence over `constraint`, from `n_samples`
/// random feasible weights.
pub fn divergence_sampled<R: Rng + ?Sized>(
    a: &MseMatrix,
    b: &MseMatrix,
    constraint: ConstraintSet,
    group: &GroupStructure,
    n_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if a.dim() != group.k() || b.dim() != group.k() {
        return Err(Error::DimensionMismatch { expected: group.k(), got: a.dim().max(b.dim()) });
    }
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let lambda = random_feasible(constraint, group, rng);
        let v = ratio_divergence(a, b, &lambda);
        if v.is_finite() {
            best = best.max(v);
        }
    }
    Ok(best)
}

/// `(2δ + δ²) ‖S‖² R*`, the bound on `‖θ̂ - θ̂*‖²`.
pub fn oracle_distance_bound(delta: f64, s_norm_sq: f64, oracle_risk: f64) -> f64 {
    (2.0 * delta + delta * delta) * s_norm_sq * oracle_risk
}

/// `‖S‖² = (T - Jθ)ᵀ Σ⁻¹ (T - Jθ)`.
pub fn standardized_norm_sq(error: &DVector<f64>, sigma: &MseMatrix) -> Result<f64> {
    let chol = sigma.cholesky()?;
    Ok(error.dot(&chol.solve(error)))
}
