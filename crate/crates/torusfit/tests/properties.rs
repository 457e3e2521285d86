//! Randomized invariants over the public surface.

use proptest::prelude::*;

use torusfit::gof::auto_merge_groups;
use torusfit::inference::CountTable;
use torusfit::io::{
    emit_pmf_heatmap, parse_count_table, parse_heatmap, parse_observations, write_count_table,
};
use torusfit::sampling::{sample_indices, sample_joint};
use torusfit::special::chi_square_sf;
use torusfit::{
    compass_label, compass_to_index, pmf_table, wsg_pmf_vec, zeta, BwgParams, Delta, TorusGrid,
    TorusModel, WsgParams,
};

fn delta_strategy() -> impl Strategy<Value = Delta> {
    prop_oneof![Just(Delta::Rotational), Just(Delta::AntiRotational)]
}

/// Parameters with q, s anywhere in the closed unit square (boundary rows
/// included) on grids up to 12 x 12.
fn bwg_strategy() -> impl Strategy<Value = BwgParams> {
    (1usize..=12, 1usize..=12).prop_flat_map(|(m1, m2)| {
        (
            0..m1,
            0..m2,
            prop_oneof![Just(0.0), Just(1.0), 0.01f64..0.99],
            prop_oneof![Just(0.0), Just(1.0), 0.01f64..0.99],
            -1.0f64..=1.0,
            delta_strategy(),
        )
            .prop_map(move |(alpha, beta, q, s, rho, delta)| {
                BwgParams::new(TorusGrid::new(m1, m2).unwrap(), alpha, beta, q, s, rho, delta)
                    .unwrap()
            })
    })
}

proptest! {
    #[test]
    fn zeta_translation_invariance(m in 1usize..=16, k in 0usize..16, alpha in 0usize..16, t in 0usize..16) {
        let k = k % m;
        let alpha = alpha % m;
        let base = zeta(k, alpha as f64, m).unwrap();
        let shifted = zeta((k + t) % m, ((alpha + t) % m) as f64, m).unwrap();
        prop_assert_eq!(base, shifted);
        prop_assert!(base >= 0.0 && base < m as f64);
    }

    #[test]
    fn wsg_normalizes_and_is_symmetric(m in 1usize..=16, alpha in 0usize..16, q in 0.0f64..=1.0) {
        let alpha = alpha % m;
        let pmf = wsg_pmf_vec(&WsgParams::new(m, alpha, q).unwrap());
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for t in 0..m {
            let up = pmf[(alpha + t) % m];
            let down = pmf[(alpha + m - t % m) % m];
            prop_assert!((up - down).abs() < 1e-14);
        }
    }

    #[test]
    fn bwg_tables_normalize_everywhere(p in bwg_strategy()) {
        let table = pmf_table(&TorusModel::Bwg(p)).unwrap();
        let sum: f64 = table.flat().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "sum = {} for {:?}", sum, p);
        prop_assert!(table.flat().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn count_table_csv_round_trips(
        m1 in 1usize..=8,
        m2 in 1usize..=8,
        seed in 0u64..1000,
    ) {
        let grid = TorusGrid::new(m1, m2).unwrap();
        let counts: Vec<u64> = (0..grid.len()).map(|i| (seed.wrapping_mul(i as u64 + 7)) % 9 + 1).collect();
        let table = CountTable::new(grid, counts).unwrap();
        let mut buf = Vec::new();
        write_count_table(&table, &mut buf).unwrap();
        let back = parse_count_table(&buf[..], m1, m2).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn heatmap_round_trips(p in bwg_strategy()) {
        let table = pmf_table(&TorusModel::Bwg(p)).unwrap();
        let mut buf = Vec::new();
        emit_pmf_heatmap(&table, &mut buf).unwrap();
        let (grid, values) = parse_heatmap(&buf[..]).unwrap();
        prop_assert_eq!(grid, table.grid());
        for (a, b) in values.iter().zip(table.flat()) {
            // 12 significant digits survive the text round trip
            prop_assert!((a - b).abs() <= 1e-11 * b.max(1e-300));
        }
    }

    #[test]
    fn compass_labels_and_indices_are_interchangeable(idx in 0usize..16, n in 1usize..5) {
        let label = compass_label(idx).unwrap();
        prop_assert_eq!(compass_to_index(label).unwrap(), idx);
        let rows: String = (0..n).map(|_| format!("{label},{idx}\n")).collect();
        let tally = parse_observations(rows.as_bytes()).unwrap();
        prop_assert_eq!(tally.table.value(idx, idx), n as u64);
        prop_assert_eq!(tally.table.n(), n as u64);
    }

    #[test]
    fn sampling_is_deterministic_and_on_grid(p in bwg_strategy(), seed in 0u64..500, n in 1usize..64) {
        let model = TorusModel::Bwg(p);
        let a = sample_joint(&model, n, seed).unwrap();
        let b = sample_joint(&model, n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.pairs.iter().all(|pt| p.grid.contains(*pt)));
    }

    #[test]
    fn inverse_cdf_respects_zero_cells(seed in 0u64..500) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pmf = [0.0, 0.5, 0.0, 0.25, 0.25, 0.0];
        let draws = sample_indices(&pmf, 200, &mut rng).unwrap();
        prop_assert!(draws.iter().all(|d| [1usize, 3, 4].contains(d)));
    }

    #[test]
    fn auto_merge_satisfies_the_rule(cells in prop::collection::vec(0.0f64..4.0, 16..256)) {
        prop_assume!(cells.iter().sum::<f64>() >= 10.0);
        let groups = auto_merge_groups(&cells, 5.0, 1.0).unwrap();
        let mut next = 1;
        for &(s, e) in &groups {
            prop_assert_eq!(s, next);
            prop_assert!(e >= s);
            next = e + 1;
        }
        prop_assert_eq!(next, cells.len() + 1);
        let sums: Vec<f64> = groups.iter().map(|&(s, e)| cells[s - 1..e].iter().sum()).collect();
        prop_assert!(sums.iter().all(|v| *v >= 1.0));
        let ok = sums.iter().filter(|v| **v >= 5.0).count();
        prop_assert!(ok as f64 >= 0.8 * groups.len() as f64);
    }

    #[test]
    fn chi_square_sf_is_a_probability(x in 0.0f64..400.0, df in 1usize..80) {
        let p = chi_square_sf(x, df).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let p2 = chi_square_sf(x + 10.0, df).unwrap();
        prop_assert!(p2 <= p + 1e-12);
    }
}
