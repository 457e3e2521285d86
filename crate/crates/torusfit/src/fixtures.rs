//! Embedded wind-direction datasets and the published goodness-of-fit
//! group presets, so every analysis and test is hermetic.
//!
//! Each dataset is a 16 x 16 contingency table of paired wind directions at
//! two Indian stations (calm periods excluded), shipped as CSV fixtures in
//! the printed orientation and parsed once on first use. The `gw`, `mb`,
//! and `rc` shorthands below are Gwalior Fort, Marina Beach (Chennai), and
//! Rao Circle (Mangaluru).

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::gof::GroupSpec;
use crate::inference::CountTable;
use crate::io::parse_count_table;

/// dataset1: Gwalior Fort (X1) vs Rao Circle (X2), n = 93.
pub const DATASET1_CSV: &str = include_str!("../fixtures/dataset1.csv");
/// dataset2: Marina Beach (X1) vs Gwalior Fort (X2), n = 106.
pub const DATASET2_CSV: &str = include_str!("../fixtures/dataset2.csv");
/// dataset3: Marina Beach (X1) vs Rao Circle (X2), n = 99.
pub const DATASET3_CSV: &str = include_str!("../fixtures/dataset3.csv");

/// Names accepted by `dataset` and `preset_groups`.
pub const DATASET_NAMES: [&str; 3] = ["dataset1", "dataset2", "dataset3"];

fn parse_fixture(csv: &str) -> CountTable {
    parse_count_table(csv.as_bytes(), 16, 16).expect("embedded fixture parses")
}

/// The embedded contingency table of one dataset.
pub fn dataset(name: &str) -> Result<&'static CountTable> {
    static TABLES: [OnceLock<CountTable>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let idx = match name {
        "dataset1" => 0,
        "dataset2" => 1,
        "dataset3" => 2,
        other => return Err(domain(format!("unknown dataset {other:?}"))),
    };
    let csv = [DATASET1_CSV, DATASET2_CSV, DATASET3_CSV][idx];
    Ok(TABLES[idx].get_or_init(|| parse_fixture(csv)))
}

/// The published cell-merge boundaries used for the chi-square tests, as
/// 1-based inclusive ranges over the row-major flattening.
pub fn preset_groups(name: &str) -> Result<GroupSpec> {
    match name {
        "dataset1" => Ok(vec![
            (1, 13),
            (14, 17),
            (18, 31),
            (32, 45),
            (46, 60),
            (61, 77),
            (78, 100),
            (101, 125),
            (126, 150),
            (151, 175),
            (176, 192),
            (193, 207),
            (208, 212),
            (213, 225),
            (226, 240),
            (241, 256),
        ]),
        "dataset2" => Ok(vec![
            (1, 6),
            (7, 17),
            (18, 19),
            (20, 21),
            (22, 23),
            (24, 27),
            (28, 30),
            (31, 32),
            (33, 34),
            (35, 38),
            (39, 43),
            (44, 46),
            (47, 48),
            (49, 64),
            (65, 256),
        ]),
        "dataset3" => Ok(vec![
            (1, 14),
            (15, 17),
            (18, 20),
            (21, 27),
            (28, 30),
            (31, 32),
            (33, 34),
            (35, 36),
            (37, 38),
            (39, 45),
            (46, 47),
            (48, 50),
            (51, 57),
            (58, 75),
            (76, 256),
        ]),
        other => Err(domain(format!("no preset groups for {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Marginal totals transcribed independently of the cell matrix
    // (double-entry bookkeeping): row sums over l per k, column sums over k
    // per l, and grand totals.
    const D1_SUM_OVER_L: [u64; 16] = [9, 4, 11, 7, 6, 7, 4, 1, 1, 2, 4, 2, 2, 11, 12, 10];
    const D1_SUM_OVER_K: [u64; 16] = [13, 4, 5, 9, 12, 3, 1, 1, 1, 0, 2, 3, 12, 13, 7, 7];
    const D2_SUM_OVER_L: [u64; 16] = [16, 33, 39, 9, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 9];
    const D2_SUM_OVER_K: [u64; 16] = [9, 5, 11, 8, 7, 10, 7, 1, 3, 2, 5, 2, 2, 12, 12, 10];
    const D3_SUM_OVER_L: [u64; 16] = [13, 28, 41, 10, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 7];
    const D3_SUM_OVER_K: [u64; 16] = [13, 4, 6, 11, 14, 3, 1, 1, 1, 0, 2, 3, 12, 13, 7, 8];

    fn check_marginals(name: &str, over_l: &[u64; 16], over_k: &[u64; 16], n: u64) {
        let t = dataset(name).unwrap();
        assert_eq!(t.n(), n, "{name} grand total");
        for k in 0..16 {
            let row: u64 = (0..16).map(|l| t.value(k, l)).sum();
            assert_eq!(row, over_l[k], "{name} row sum at k={k}");
        }
        for l in 0..16 {
            let col: u64 = (0..16).map(|k| t.value(k, l)).sum();
            assert_eq!(col, over_k[l], "{name} column sum at l={l}");
        }
    }

    #[test]
    fn fixture_integrity_against_double_entry_marginals() {
        check_marginals("dataset1", &D1_SUM_OVER_L, &D1_SUM_OVER_K, 93);
        check_marginals("dataset2", &D2_SUM_OVER_L, &D2_SUM_OVER_K, 106);
        check_marginals("dataset3", &D3_SUM_OVER_L, &D3_SUM_OVER_K, 99);
    }

    #[test]
    fn preset_groups_partition_the_flattened_table() {
        for name in DATASET_NAMES {
            let groups = preset_groups(name).unwrap();
            let mut next = 1;
            for (s, e) in &groups {
                assert_eq!(*s, next, "{name}");
                assert!(e >= s);
                next = e + 1;
            }
            assert_eq!(next, 257, "{name}");
        }
        assert_eq!(preset_groups("dataset1").unwrap().len(), 16);
        assert_eq!(preset_groups("dataset2").unwrap().len(), 15);
        assert_eq!(preset_groups("dataset3").unwrap().len(), 15);
        assert!(preset_groups("dataset9").is_err());
    }

    #[test]
    fn observed_group_sums_match_the_published_tallies() {
        let published: [(&str, &[u64]); 3] = [
            ("dataset1", &[6, 3, 3, 7, 8, 8, 9, 5, 3, 4, 2, 2, 5, 7, 11, 10]),
            ("dataset2", &[13, 6, 3, 3, 6, 3, 6, 9, 7, 7, 5, 9, 11, 9, 9]),
            ("dataset3", &[10, 6, 9, 8, 4, 4, 6, 8, 4, 10, 9, 5, 5, 4, 7]),
        ];
        for (name, expect) in published {
            let t = dataset(name).unwrap();
            let groups = preset_groups(name).unwrap();
            let flat = t.flat();
            let sums: Vec<u64> =
                groups.iter().map(|&(s, e)| flat[s - 1..e].iter().sum()).collect();
            assert_eq!(sums, expect, "{name}");
        }
    }
}
