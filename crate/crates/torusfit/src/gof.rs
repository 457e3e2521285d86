//! Pearson chi-square goodness of fit over merged cell groups.
//!
//! The m1 x m2 table is flattened row-major (first row left to right, then
//! the second row, and so on; cells are numbered from 1). Because most cells
//! of a sparse contingency table have tiny expected frequencies, consecutive
//! flat cells are merged into groups before the test, following the rule
//! that every group's expected count stays above 1 and at least 80% of the
//! groups reach 5.

use serde::{Deserialize, Serialize};

use crate::dist::PmfTable;
use crate::error::{domain, Result};
use crate::inference::CountTable;
use crate::special::{chi_square_critical, chi_square_sf};
use crate::torus::TorusGrid;

/// 1-based inclusive ranges over the flattened cell array.
pub type GroupSpec = Vec<(usize, usize)>;

/// Flatten counts row-major: cell 1 is (k=0, l=0), cell m2 is (k=0, l=m2-1).
pub fn flatten_row_major(table: &CountTable) -> Vec<u64> {
    table.flat().to_vec()
}

/// Rebuild a count table from its row-major flattening.
pub fn unflatten_row_major(grid: TorusGrid, flat: &[u64]) -> Result<CountTable> {
    CountTable::new(grid, flat.to_vec())
}

/// The report of one chi-square test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofReport {
    /// 1-based inclusive flat-index ranges.
    pub groups: GroupSpec,
    pub expected: Vec<f64>,
    pub observed: Vec<u64>,
    /// Pearson statistic sum (O - E)^2 / E.
    pub x2: f64,
    /// groups - 1 - fitted parameter count.
    pub df: usize,
    /// The 5% critical value of the reference chi-square distribution.
    pub critical: f64,
    pub p_value: f64,
}

fn validate_groups(groups: &GroupSpec, cells: usize) -> Result<()> {
    if groups.is_empty() {
        return Err(domain("no groups given"));
    }
    let mut next = 1usize;
    for &(start, end) in groups {
        if start != next || end < start {
            return Err(domain(format!(
                "groups must partition 1..={cells} in order; got range {start}:{end} where \
                 {next} was expected"
            )));
        }
        next = end + 1;
    }
    if next != cells + 1 {
        return Err(domain(format!(
            "groups cover 1..={} but the table has {cells} cells",
            next - 1
        )));
    }
    Ok(())
}

/// Pearson chi-square test of a fitted model against observed counts, over
/// a given grouping of the flattened cells. `p_params` is the number of
/// parameters estimated from the data (df = groups - 1 - p_params).
pub fn chisq_gof(
    data: &CountTable,
    model: &PmfTable,
    groups: &GroupSpec,
    p_params: usize,
) -> Result<GofReport> {
    if data.grid() != model.grid() {
        return Err(domain("data and model are on different grids"));
    }
    let cells = data.grid().len();
    validate_groups(groups, cells)?;
    if groups.len() < p_params + 2 {
        return Err(domain(format!(
            "{} groups leave no degrees of freedom after {p_params} parameters",
            groups.len()
        )));
    }

    let n = data.n() as f64;
    let flat_counts = data.flat();
    let flat_p = model.flat();
    let mut expected = Vec::with_capacity(groups.len());
    let mut observed = Vec::with_capacity(groups.len());
    for &(start, end) in groups {
        let e: f64 = flat_p[start - 1..end].iter().sum::<f64>() * n;
        if e <= 0.0 {
            return Err(domain(format!("group {start}:{end} has zero expected frequency")));
        }
        expected.push(e);
        observed.push(flat_counts[start - 1..end].iter().sum::<u64>());
    }

    let x2: f64 = expected
        .iter()
        .zip(&observed)
        .map(|(e, o)| {
            let d = *o as f64 - e;
            d * d / e
        })
        .sum();
    let df = groups.len() - 1 - p_params;
    Ok(GofReport {
        groups: groups.clone(),
        expected,
        observed,
        x2,
        df,
        critical: chi_square_critical(0.05, df)?,
        p_value: chi_square_sf(x2, df)?,
    })
}

/// Greedy merge of consecutive flat cells: accumulate until the group's
/// expected frequency reaches `min_expected`, with a trailing remainder
/// folded into the final group. The result satisfies the merging rule
/// (every group >= `min_floor`, at least 80% of groups >= `min_expected`).
pub fn auto_merge_groups(
    expected_flat: &[f64],
    min_expected: f64,
    min_floor: f64,
) -> Result<GroupSpec> {
    if expected_flat.is_empty() || expected_flat.iter().any(|e| e.is_nan() || *e < 0.0) {
        return Err(domain("expected frequencies must be non-negative"));
    }
    let mut groups: GroupSpec = Vec::new();
    let mut start = 1usize;
    let mut acc = 0.0;
    for (i, e) in expected_flat.iter().enumerate() {
        acc += e;
        if acc >= min_expected {
            groups.push((start, i + 1));
            start = i + 2;
            acc = 0.0;
        }
    }
    if start <= expected_flat.len() {
        // remainder below the threshold: merge it backward
        match groups.pop() {
            Some((s, _)) => groups.push((s, expected_flat.len())),
            None => groups.push((1, expected_flat.len())),
        }
    }
    if groups.len() < 2 {
        return Err(domain(
            "not enough expected mass to form at least two groups; the test is undefined",
        ));
    }
    let sums: Vec<f64> = groups
        .iter()
        .map(|&(s, e)| expected_flat[s - 1..e].iter().sum())
        .collect();
    if sums.iter().any(|s| *s < min_floor) {
        return Err(domain("merged grouping leaves a group below the floor"));
    }
    let ok = sums.iter().filter(|s| **s >= min_expected).count();
    if (ok as f64) < 0.8 * groups.len() as f64 {
        return Err(domain("merged grouping violates the 80% rule"));
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_round_trips() {
        let grid = TorusGrid::new(2, 2).unwrap();
        let data = CountTable::new(grid, vec![1, 2, 3, 4]).unwrap();
        let flat = flatten_row_major(&data);
        assert_eq!(flat, vec![1, 2, 3, 4]);
        assert_eq!(unflatten_row_major(grid, &flat).unwrap(), data);
        assert_eq!(data.value(0, 1), 2);
        assert_eq!(data.value(1, 0), 3);
    }

    #[test]
    fn perfect_fit_has_zero_statistic() {
        // model equals the empirical frequencies
        let grid = TorusGrid::new(2, 2).unwrap();
        let data = CountTable::new(grid, vec![10, 20, 30, 40]).unwrap();
        let model = pmf_from(&[0.1, 0.2, 0.3, 0.4], grid);
        let groups = vec![(1, 1), (2, 2), (3, 3), (4, 4)];
        let report = chisq_gof(&data, &model, &groups, 1).unwrap();
        assert!(report.x2.abs() < 1e-12);
        assert_eq!(report.df, 2);
        assert!((report.p_value - 1.0).abs() < 1e-9);
    }

    fn pmf_from(p: &[f64], grid: TorusGrid) -> PmfTable {
        PmfTable::from_probabilities(grid, p.to_vec()).unwrap()
    }

    #[test]
    fn group_validation_catches_gaps_overlaps_and_short_cover() {
        let grid = TorusGrid::new(2, 2).unwrap();
        let data = CountTable::new(grid, vec![5, 5, 5, 5]).unwrap();
        let model = pmf_from(&[0.25; 4], grid);
        for bad in [
            vec![(1, 2), (4, 4)],         // gap
            vec![(1, 2), (2, 4)],         // overlap
            vec![(1, 2)],                 // short cover
            vec![(1, 2), (3, 4), (5, 5)], // beyond the table
        ] {
            assert!(chisq_gof(&data, &model, &bad, 0).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn auto_merge_uniform_cases() {
        // all expected 10 with threshold 5: singleton groups
        let flat = vec![10.0; 8];
        let groups = auto_merge_groups(&flat, 5.0, 1.0).unwrap();
        assert_eq!(groups, (1..=8).map(|i| (i, i)).collect::<GroupSpec>());

        // uniform 256 cells with expected 1 each: groups of 5, last larger
        let flat = vec![1.0; 256];
        let groups = auto_merge_groups(&flat, 5.0, 1.0).unwrap();
        assert_eq!(groups[0], (1, 5));
        assert_eq!(groups.len(), 51);
        assert_eq!(groups.last(), Some(&(251, 256)));
        let sums: Vec<f64> = groups.iter().map(|&(s, e)| flat[s - 1..e].iter().sum()).collect();
        assert!(sums.iter().all(|s| *s >= 5.0));
    }

    #[test]
    fn auto_merge_rejects_tiny_totals() {
        assert!(auto_merge_groups(&[0.5, 0.5, 0.5], 5.0, 1.0).is_err());
    }
}
