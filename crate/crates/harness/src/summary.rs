//! MSE and coverage tables over replicates.

use crate::experiment::ReplicationRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: String,
    /// Mean squared error over the replicates where the estimator exists.
    pub mse: Option<f64>,
    /// Standard error of `mse`; needs at least two values.
    pub mse_se: Option<f64>,
    /// Percentage of intervals covering the truth.
    pub coverage: Option<f64>,
    /// Replicates without a value for this estimator.
    pub dropped: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, estimator: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }

    /// MSE of `estimator`, panicking when it is missing. Meant for tests.
    pub fn mse(&self, estimator: &str) -> f64 {
        self.row(estimator).and_then(|r| r.mse).unwrap_or_else(|| panic!("no MSE for {estimator}"))
    }
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let m = values.len();
    if m == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    (Some(mean), Some((var / m as f64).sqrt()))
}

/// Coverage percentage of each row; `None` for rows without intervals.
pub fn coverage_summary(records: &[ReplicationRecord], rows: usize) -> Vec<Option<f64>> {
    (0..rows)
        .map(|j| {
            let (hit, total) = records
                .iter()
                .filter_map(|r| r.hits.get(j).copied().flatten())
                .fold((0usize, 0usize), |(h, t), x| (h + x as usize, t + 1));
            (total > 0).then(|| 100.0 * hit as f64 / total as f64)
        })
        .collect()
}

/// One row per label, in label order, against `truth`.
pub fn mse_summary(records: &[ReplicationRecord], labels: &[String], truth: &[f64]) -> SummaryTable {
    let coverage = coverage_summary(records, labels.len());
    let rows = labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let sq: Vec<f64> = records
                .iter()
                .filter_map(|r| r.values.get(j).copied().flatten())
                .map(|v| (v - truth[j]) * (v - truth[j]))
                .collect();
            let (mse, mse_se) = mean_and_se(&sq);
            SummaryRow {
                estimator: label.clone(),
                mse,
                mse_se,
                coverage: coverage[j],
                dropped: records.len() - sq.len(),
            }
        })
        .collect();
    SummaryTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(index: usize, v: f64, hit: Option<bool>) -> ReplicationRecord {
        ReplicationRecord {
            index,
            values: vec![Some(v)],
            hits: vec![hit],
            risks: vec![None],
            diagnostics: Vec::new(),
            failure: None,
        }
    }

    #[test]
    fn exact_estimates_have_zero_mse_full_coverage() {
        let recs: Vec<_> = (0..5).map(|i| record(i, 2.0, Some(true))).collect();
        let t = mse_summary(&recs, &["x".into()], &[2.0]);
        assert_eq!(t.rows[0].mse, Some(0.0));
        assert_eq!(t.rows[0].mse_se, Some(0.0));
        assert_eq!(t.rows[0].coverage, Some(100.0));
    }

    #[test]
    fn half_coverage() {
        let recs: Vec<_> = (0..4).map(|i| record(i, 0.0, Some(i % 2 == 0))).collect();
        assert_eq!(coverage_summary(&recs, 1), vec![Some(50.0)]);
    }

    #[test]
    fn single_record_has_no_standard_error() {
        let t = mse_summary(&[record(0, 3.0, None)], &["x".into()], &[1.0]);
        assert_eq!(t.rows[0].mse, Some(4.0));
        assert_eq!(t.rows[0].mse_se, None);
        assert_eq!(t.rows[0].coverage, None);
    }

    #[test]
    fn missing_values_count_as_dropped() {
        let mut recs = vec![record(0, 1.0, None), record(1, 1.0, None)];
        recs[1].values[0] = None;
        let t = mse_summary(&recs, &["x".into()], &[0.0]);
        assert_eq!(t.rows[0].dropped, 1);
        assert_eq!(t.rows[0].mse, Some(1.0));
    }
}
