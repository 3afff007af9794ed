use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sizes `(k_1, ..., k_d)` of the per-parameter estimator collections.
///
/// Estimators are stacked group by group, so group `j` occupies the
/// contiguous index range [`GroupStructure::range`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl GroupStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidGroup("at least one parameter is required".into()));
        }
        if let Some(j) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidGroup(format!("group {j} is empty")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &s in &sizes {
            acc += s;
            offsets.push(acc);
        }
        Ok(Self { sizes, offsets })
    }

    /// One parameter estimated by `k` estimators.
    pub fn single(k: usize) -> Result<Self> {
        Self::new(vec![k])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Total number of estimators.
    pub fn k(&self) -> usize {
        self.offsets[self.sizes.len()]
    }

    /// Number of parameters.
    pub fn d(&self) -> usize {
        self.sizes.len()
    }

    pub fn range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Group owning estimator `i`.
    pub fn group_of(&self, i: usize) -> usize {
        debug_assert!(i < self.k());
        self.offsets[1..].iter().position(|&end| i < end).unwrap()
    }

    /// The k×d block selector `J` with `1_{k_j}` down the block diagonal.
    pub fn selector(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.k(), self.d());
        for g in 0..self.d() {
            for i in self.range(g) {
                j[(i, g)] = 1.0;
            }
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_three_one() {
        let g = GroupStructure::new(vec![3, 1]).unwrap();
        let j = g.selector();
        let expected = DMatrix::from_row_slice(4, 2, &[1., 0., 1., 0., 1., 0., 0., 1.]);
        assert_eq!(j, expected);
    }

    #[test]
    fn selector_single() {
        let g = GroupStructure::single(1).unwrap();
        assert_eq!(g.selector(), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn selector_two_two() {
        let g = GroupStructure::new(vec![2, 2]).unwrap();
        let j = g.selector();
        assert_eq!(j.column(0).as_slice(), &[1., 1., 0., 0.]);
        assert_eq!(j.column(1).as_slice(), &[0., 0., 1., 1.]);
        let jtj = j.transpose() * &j;
        assert_eq!(jtj, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2., 2.])));
    }

    #[test]
    fn rejects_empty_groups() {
        assert!(GroupStructure::new(vec![]).is_err());
        assert!(GroupStructure::new(vec![2, 0]).is_err());
    }

    #[test]
    fn group_lookup() {
        let g = GroupStructure::new(vec![2, 1, 3]).unwrap();
        let owners: Vec<_> = (0..g.k()).map(|i| g.group_of(i)).collect();
        assert_eq!(owners, vec![0, 0, 1, 2, 2, 2]);
        assert_eq!(g.range(2), 3..6);
    }
}
