//! Monte Carlo study of the two-step estimators: repeated simulate-and-fit
//! with per-replicate derived seeds, summarized as means and sample
//! standard deviations of the continuous estimates and frequency tallies of
//! the discrete ones.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Delta, TorusModel};
use crate::error::Result;
use crate::inference::{fit_bgwg, fit_bwg, CountTable, Family, FitOptions, FittedParams};
use crate::sampling::{derive_seed, sample_joint, GENERATOR};

/// Configuration of one study: a generating model, sample sizes, replicate
/// count, and the base seed from which each replicate's stream is derived.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStudyConfig {
    pub truth: TorusModel,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default = "FitOptions::default")]
    pub fit_options: FitOptions,
}

/// Mean and sample standard deviation of one continuous estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Frequency tally of one discrete estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteSummary {
    pub name: String,
    pub truth: i64,
    /// estimate value -> count over replicates
    pub counts: BTreeMap<i64, usize>,
}

impl DiscreteSummary {
    /// Fraction of replicates that hit the true value.
    pub fn truth_frequency(&self, replicates: usize) -> f64 {
        *self.counts.get(&self.truth).unwrap_or(&0) as f64 / replicates as f64
    }
}

/// Summaries for one sample size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStudyBlock {
    pub n: usize,
    pub replicates: usize,
    pub continuous: Vec<ContinuousSummary>,
    pub discrete: Vec<DiscreteSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStudySummary {
    pub config: SimStudyConfig,
    pub generator: String,
    pub blocks: Vec<SimStudyBlock>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn tally(values: impl Iterator<Item = i64>) -> BTreeMap<i64, usize> {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
}

/// Run the study: for every sample size, `replicates` independent
/// simulate-and-fit rounds on seeds derived from (base_seed, block, index).
pub fn run_simulation_study(config: &SimStudyConfig) -> Result<SimStudySummary> {
    let mut blocks = Vec::with_capacity(config.sample_sizes.len());
    for (block_idx, &n) in config.sample_sizes.iter().enumerate() {
        let fits: Vec<FittedParams> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let seed = derive_seed(
                    config.base_seed,
                    (block_idx * config.replicates + rep) as u64,
                );
                let batch = sample_joint(&config.truth, n, seed)?;
                let data = CountTable::from_pairs(config.truth.grid(), &batch.pairs)?;
                let fit = match config.truth {
                    TorusModel::Bwg(_) => fit_bwg(&data, &config.fit_options)?,
                    TorusModel::Bgwg(_) => fit_bgwg(&data, &config.fit_options)?,
                };
                Ok(fit.params)
            })
            .collect::<Result<_>>()?;

        let block = match &config.truth {
            TorusModel::Bwg(truth) => {
                let ps: Vec<_> = fits
                    .iter()
                    .map(|f| match f {
                        FittedParams::Bwg(p) => p,
                        _ => unreachable!("bwg study produces bwg fits"),
                    })
                    .collect();
                let summary = |name: &str, truth: f64, get: &dyn Fn(&&crate::dist::BwgParams) -> f64| {
                    let values: Vec<f64> = ps.iter().map(get).collect();
                    let (mean, sd) = mean_sd(&values);
                    ContinuousSummary { name: name.to_string(), truth, mean, sd }
                };
                SimStudyBlock {
                    n,
                    replicates: config.replicates,
                    continuous: vec![
                        summary("q", truth.q, &|p| p.q),
                        summary("s", truth.s, &|p| p.s),
                        summary("rho", truth.rho, &|p| p.rho),
                    ],
                    discrete: vec![
                        DiscreteSummary {
                            name: "alpha".into(),
                            truth: truth.alpha as i64,
                            counts: tally(ps.iter().map(|p| p.alpha as i64)),
                        },
                        DiscreteSummary {
                            name: "beta".into(),
                            truth: truth.beta as i64,
                            counts: tally(ps.iter().map(|p| p.beta as i64)),
                        },
                        DiscreteSummary {
                            name: "delta".into(),
                            truth: i8::from(truth.delta) as i64,
                            counts: tally(ps.iter().map(|p| i8::from(p.delta) as i64)),
                        },
                    ],
                }
            }
            TorusModel::Bgwg(truth) => {
                let ps: Vec<_> = fits
                    .iter()
                    .map(|f| match f {
                        FittedParams::Bgwg(p) => p,
                        _ => unreachable!("bgwg study produces bgwg fits"),
                    })
                    .collect();
                let summary =
                    |name: &str, truth: f64, get: &dyn Fn(&&crate::dist::BgwgParams) -> f64| {
                        let values: Vec<f64> = ps.iter().map(get).collect();
                        let (mean, sd) = mean_sd(&values);
                        ContinuousSummary { name: name.to_string(), truth, mean, sd }
                    };
                SimStudyBlock {
                    n,
                    replicates: config.replicates,
                    continuous: vec![
                        summary("alpha", truth.alpha, &|p| p.alpha),
                        summary("beta", truth.beta, &|p| p.beta),
                        summary("q", truth.q, &|p| p.q),
                        summary("s", truth.s, &|p| p.s),
                        summary("rho", truth.rho, &|p| p.rho),
                    ],
                    discrete: vec![DiscreteSummary {
                        name: "delta".into(),
                        truth: i8::from(truth.delta) as i64,
                        counts: tally(ps.iter().map(|p| i8::from(p.delta) as i64)),
                    }],
                }
            }
        };
        blocks.push(block);
    }
    Ok(SimStudySummary {
        config: config.clone(),
        generator: GENERATOR.to_string(),
        blocks,
    })
}

/// The family a study estimates (mirrors the generating model).
pub fn study_family(config: &SimStudyConfig) -> Family {
    match config.truth {
        TorusModel::Bwg(_) => Family::Bwg,
        TorusModel::Bgwg(_) => Family::Bgwg,
    }
}

/// Used in tests and the acceptance suite: the delta tally as a
/// (anti-rotational, rotational) pair, mirroring frequency columns like
/// "(0, 1000)".
pub fn delta_frequencies(block: &SimStudyBlock) -> (usize, usize) {
    let delta = block
        .discrete
        .iter()
        .find(|d| d.name == "delta")
        .expect("delta summary present");
    (
        *delta.counts.get(&i64::from(i8::from(Delta::AntiRotational))).unwrap_or(&0),
        *delta.counts.get(&i64::from(i8::from(Delta::Rotational))).unwrap_or(&0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::BwgParams;
    use crate::torus::TorusGrid;

    #[test]
    fn single_replicate_summary_equals_the_single_fit() {
        let grid = TorusGrid::new(5, 6).unwrap();
        let truth = BwgParams::new(grid, 0, 0, 0.2, 0.3, -0.5, Delta::Rotational).unwrap();
        let config = SimStudyConfig {
            truth: TorusModel::Bwg(truth),
            sample_sizes: vec![200],
            replicates: 1,
            base_seed: 31,
            fit_options: FitOptions::default(),
        };
        let summary = run_simulation_study(&config).unwrap();
        let block = &summary.blocks[0];
        assert_eq!(block.continuous[0].sd, 0.0);

        // reproduce the one replicate by hand
        let seed = derive_seed(31, 0);
        let batch = sample_joint(&config.truth, 200, seed).unwrap();
        let data = CountTable::from_pairs(grid, &batch.pairs).unwrap();
        let fit = fit_bwg(&data, &config.fit_options).unwrap();
        let FittedParams::Bwg(p) = fit.params else { panic!() };
        assert_eq!(block.continuous[0].mean, p.q);
        assert_eq!(block.continuous[2].mean, p.rho);
    }

    #[test]
    fn error_shrinks_with_sample_size() {
        let grid = TorusGrid::new(5, 6).unwrap();
        let truth = BwgParams::new(grid, 0, 0, 0.2, 0.3, -0.5, Delta::Rotational).unwrap();
        let config = SimStudyConfig {
            truth: TorusModel::Bwg(truth),
            sample_sizes: vec![50, 200, 500],
            replicates: 24,
            base_seed: 1234,
            fit_options: FitOptions::default(),
        };
        let summary = run_simulation_study(&config).unwrap();
        let mae: Vec<f64> = summary
            .blocks
            .iter()
            .map(|b| {
                b.continuous
                    .iter()
                    .map(|c| (c.mean - c.truth).abs())
                    .sum::<f64>()
                    / b.continuous.len() as f64
            })
            .collect();
        assert!(
            mae[2] <= mae[0] + 1e-9,
            "mean absolute error should shrink from n=50 to n=500: {mae:?}"
        );
    }
}
