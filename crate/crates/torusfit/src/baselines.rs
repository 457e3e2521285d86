//! Discretized continuous competitors for AIC comparison: the bivariate
//! wrapped Cauchy and the von Mises sine and cosine models.
//!
//! Discretization evaluates the unnormalized density kernel at the grid
//! angles and renormalizes over the grid, which cancels every continuous
//! normalizing constant (no Bessel functions needed). All three are fitted
//! by the same multinomial maximum likelihood as the torus families, with
//! five continuous parameters each.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::PmfTable;
use crate::error::{domain, Result};
use crate::inference::{
    aic, neg_loglik, standard_errors, CountTable, Family, FitOptions, FitResult, FittedParams,
};
use crate::optim::{nelder_mead, Bounds};
use crate::torus::TorusGrid;

/// Which competitor density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineModel {
    WrappedCauchy,
    VmSine,
    VmCosine,
}

impl BaselineModel {
    pub fn family(self) -> Family {
        match self {
            BaselineModel::WrappedCauchy => Family::WrappedCauchy,
            BaselineModel::VmSine => Family::VmSine,
            BaselineModel::VmCosine => Family::VmCosine,
        }
    }
}

/// Five-parameter record of a baseline model: two mean directions, two
/// concentrations, one association.
///
/// For the von Mises models the concentrations are kappa >= 0 and `assoc`
/// is the sine-model lambda or the cosine-model kappa3. For the wrapped
/// Cauchy they are the Mobius concentrations in [0, 1) and `assoc` is the
/// dependence rho_c in (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub model: BaselineModel,
    pub mu1: f64,
    pub mu2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub assoc: f64,
}

impl BaselineParams {
    pub fn new(
        model: BaselineModel,
        mu1: f64,
        mu2: f64,
        kappa1: f64,
        kappa2: f64,
        assoc: f64,
    ) -> Result<Self> {
        match model {
            BaselineModel::VmSine | BaselineModel::VmCosine => {
                if kappa1 < 0.0 || kappa2 < 0.0 {
                    return Err(domain("von Mises concentrations must be non-negative"));
                }
            }
            BaselineModel::WrappedCauchy => {
                if !(0.0..1.0).contains(&kappa1) || !(0.0..1.0).contains(&kappa2) {
                    return Err(domain("wrapped Cauchy concentrations must lie in [0, 1)"));
                }
                if assoc.abs() >= 1.0 {
                    return Err(domain("wrapped Cauchy association must lie in (-1, 1)"));
                }
            }
        }
        Ok(Self { model, mu1, mu2, kappa1, kappa2, assoc })
    }
}

/// Unnormalized density kernel at a pair of angles.
pub fn baseline_kernel(params: &BaselineParams, theta1: f64, theta2: f64) -> Result<f64> {
    // revalidate: fitted records are constructed checked, but this is also
    // a public entry point
    let p = BaselineParams::new(
        params.model,
        params.mu1,
        params.mu2,
        params.kappa1,
        params.kappa2,
        params.assoc,
    )?;
    Ok(kernel_unchecked(&p, theta1, theta2))
}

fn kernel_unchecked(p: &BaselineParams, theta1: f64, theta2: f64) -> f64 {
    let d1 = theta1 - p.mu1;
    let d2 = theta2 - p.mu2;
    match p.model {
        BaselineModel::VmSine => {
            (p.kappa1 * d1.cos() + p.kappa2 * d2.cos() + p.assoc * d1.sin() * d2.sin()).exp()
        }
        BaselineModel::VmCosine => {
            (p.kappa1 * d1.cos() + p.kappa2 * d2.cos() - p.assoc * (d1 - d2).cos()).exp()
        }
        BaselineModel::WrappedCauchy => {
            let (e1, e2, r) = (p.kappa1, p.kappa2, p.assoc);
            let ra = r.abs();
            let c0 = (1.0 + r * r) * (1.0 + e1 * e1) * (1.0 + e2 * e2) - 8.0 * ra * e1 * e2;
            let c1 = 2.0 * (1.0 + r * r) * e1 * (1.0 + e2 * e2) - 4.0 * ra * (1.0 + e1 * e1) * e2;
            let c2 = 2.0 * (1.0 + r * r) * (1.0 + e1 * e1) * e2 - 4.0 * ra * e1 * (1.0 + e2 * e2);
            let c3 =
                -4.0 * (1.0 + r * r) * e1 * e2 + 2.0 * ra * (1.0 + e1 * e1) * (1.0 + e2 * e2);
            let c4 = 2.0 * r * (1.0 - e1 * e1) * (1.0 - e2 * e2);
            let den = c0
                - c1 * d1.cos()
                - c2 * d2.cos()
                - c3 * d1.cos() * d2.cos()
                - c4 * d1.sin() * d2.sin();
            if den <= 0.0 {
                0.0
            } else {
                1.0 / den
            }
        }
    }
}

/// Kernel at the grid angles, renormalized to a probability table.
pub fn discretize(params: &BaselineParams, grid: TorusGrid) -> Result<PmfTable> {
    let theta1: Vec<f64> = (0..grid.m1()).map(|k| TAU * k as f64 / grid.m1() as f64).collect();
    let theta2: Vec<f64> = (0..grid.m2()).map(|l| TAU * l as f64 / grid.m2() as f64).collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    for t1 in &theta1 {
        for t2 in &theta2 {
            let v = baseline_kernel(params, *t1, *t2)?;
            values.push(v);
            total += v;
        }
    }
    if !total.is_finite() || total <= 0.0 {
        return Err(domain("baseline kernel vanished or overflowed on the whole grid"));
    }
    for v in &mut values {
        *v /= total;
    }
    PmfTable::from_probabilities(grid, values)
}

fn fill_kernel(
    p: &BaselineParams,
    theta1: &[f64],
    theta2: &[f64],
    out: &mut [f64],
) -> f64 {
    let mut total = 0.0;
    let mut i = 0;
    for t1 in theta1 {
        for t2 in theta2 {
            let v = kernel_unchecked(p, *t1, *t2);
            out[i] = v;
            total += v;
            i += 1;
        }
    }
    total
}

/// Maximum-likelihood fit of a discretized baseline (P = 5).
pub fn fit_baseline(
    data: &CountTable,
    model: BaselineModel,
    options: &FitOptions,
) -> Result<FitResult> {
    let grid = data.grid();
    let occupied = data.occupied();
    let n = data.n() as f64;
    let theta1: Vec<f64> = (0..grid.m1()).map(|k| TAU * k as f64 / grid.m1() as f64).collect();
    let theta2: Vec<f64> = (0..grid.m2()).map(|l| TAU * l as f64 / grid.m2() as f64).collect();

    let (bounds, conc_starts): (Bounds, [f64; 2]) = match model {
        BaselineModel::WrappedCauchy => (
            Bounds::new(
                vec![0.0, 0.0, 0.0, 0.0, -1.0 + 1e-6],
                vec![TAU, TAU, 1.0 - 1e-6, 1.0 - 1e-6, 1.0 - 1e-6],
            ),
            [0.3, 0.7],
        ),
        _ => (
            Bounds::new(vec![0.0, 0.0, 0.0, 0.0, -50.0], vec![TAU, TAU, 50.0, 50.0, 50.0]),
            [1.0, 8.0],
        ),
    };

    let step1 = (grid.m1() / options.anchors_per_axis).max(1);
    let step2 = (grid.m2() / options.anchors_per_axis).max(1);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for k in (0..grid.m1()).step_by(step1) {
        for l in (0..grid.m2()).step_by(step2) {
            for c in conc_starts {
                starts.push(vec![theta1[k], theta2[l], c, c, 0.0]);
            }
        }
    }

    let params_from = |x: &[f64]| BaselineParams {
        model,
        mu1: x[0].rem_euclid(TAU),
        mu2: x[1].rem_euclid(TAU),
        kappa1: x[2],
        kappa2: x[3],
        assoc: x[4],
    };

    let runs: Vec<crate::optim::Minimum> = starts
        .par_iter()
        .map_init(
            || vec![0.0; grid.len()],
            |buffer, start| {
                let mut objective = |x: &[f64]| {
                    let total = fill_kernel(&params_from(x), &theta1, &theta2, buffer);
                    neg_loglik(buffer, total, &occupied, n)
                };
                nelder_mead(&mut objective, start, &bounds, options.nm())
            },
        )
        .collect();

    let mut evaluations: usize = runs.iter().map(|r| r.evaluations).sum();
    let incumbent = runs
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| domain("no starts"))?;

    let mut buffer = vec![0.0; grid.len()];
    let mut objective = |x: &[f64]| {
        let total = fill_kernel(&params_from(x), &theta1, &theta2, &mut buffer);
        neg_loglik(&buffer, total, &occupied, n)
    };
    let polish = nelder_mead(&mut objective, &incumbent.x, &bounds, options.nm_tight());
    evaluations += polish.evaluations;
    let best = if polish.value < incumbent.value { &polish } else { incumbent };

    let params = params_from(&best.x);
    let loglik = -best.value;
    let names = match model {
        BaselineModel::WrappedCauchy => ["mu1", "mu2", "eps1", "eps2", "rho_c"],
        BaselineModel::VmSine => ["mu1", "mu2", "kappa1", "kappa2", "lambda"],
        BaselineModel::VmCosine => ["mu1", "mu2", "kappa1", "kappa2", "kappa3"],
    };
    let mut buffer2 = vec![0.0; grid.len()];
    let mut se_objective = |x: &[f64]| {
        let total = fill_kernel(&params_from(x), &theta1, &theta2, &mut buffer2);
        neg_loglik(&buffer2, total, &occupied, n)
    };
    let (se, se_flags) = standard_errors(&mut se_objective, &best.x, &bounds, &names);

    let family = model.family();
    Ok(FitResult {
        family,
        params: FittedParams::Baseline(params),
        loglik,
        aic: aic(loglik, family.n_params()),
        se,
        se_flags,
        discrete_search: Vec::new(),
        converged: best.converged,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m1: usize, m2: usize) -> TorusGrid {
        TorusGrid::new(m1, m2).unwrap()
    }

    #[test]
    fn flat_kernels_discretize_to_uniform() {
        let p = BaselineParams::new(BaselineModel::VmSine, 0.3, 1.2, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(baseline_kernel(&p, 1.0, 2.0).unwrap(), 1.0);
        let table = discretize(&p, grid(4, 4)).unwrap();
        for v in table.flat() {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_association_factorizes() {
        for model in [BaselineModel::VmSine, BaselineModel::VmCosine] {
            let p = BaselineParams::new(model, 0.5, 2.5, 2.0, 1.0, 0.0).unwrap();
            let table = discretize(&p, grid(8, 6)).unwrap();
            let m1: Vec<f64> =
                (0..8).map(|k| (0..6).map(|l| table.value(k, l)).sum()).collect();
            let m2: Vec<f64> =
                (0..6).map(|l| (0..8).map(|k| table.value(k, l)).sum()).collect();
            for k in 0..8 {
                for l in 0..6 {
                    assert!((table.value(k, l) - m1[k] * m2[l]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn concentrated_von_mises_peaks_at_its_mean_grid_angle() {
        let mu = TAU * 3.0 / 8.0;
        let p = BaselineParams::new(BaselineModel::VmSine, mu, 0.0, 20.0, 0.1, 0.0).unwrap();
        let table = discretize(&p, grid(8, 8)).unwrap();
        let marg: Vec<f64> = (0..8).map(|k| (0..8).map(|l| table.value(k, l)).sum()).collect();
        let argmax = marg.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax, 3);
    }

    #[test]
    fn tables_normalize() {
        let p =
            BaselineParams::new(BaselineModel::WrappedCauchy, 1.0, 4.0, 0.6, 0.4, -0.7).unwrap();
        let table = discretize(&p, grid(16, 16)).unwrap();
        assert!((table.flat().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(table.flat().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(BaselineParams::new(BaselineModel::VmSine, 0.0, 0.0, -1.0, 0.0, 0.0).is_err());
        assert!(
            BaselineParams::new(BaselineModel::WrappedCauchy, 0.0, 0.0, 1.0, 0.5, 0.0).is_err()
        );
        assert!(
            BaselineParams::new(BaselineModel::WrappedCauchy, 0.0, 0.0, 0.5, 0.5, 1.0).is_err()
        );
    }

    #[test]
    fn shift_equivariance_of_the_fit() {
        // rotating the data by one grid step leaves the maximized
        // log-likelihood unchanged
        let g = grid(8, 8);
        let mut counts = vec![0u64; 64];
        for (i, c) in [(0usize, 20u64), (9, 15), (18, 10), (27, 5), (36, 3)] {
            counts[i] = c;
        }
        let data = CountTable::new(g, counts.clone()).unwrap();
        let mut shifted = vec![0u64; 64];
        for k in 0..8 {
            for l in 0..8 {
                shifted[((k + 1) % 8) * 8 + (l + 1) % 8] = counts[k * 8 + l];
            }
        }
        let data_shifted = CountTable::new(g, shifted).unwrap();
        let opts = FitOptions::default();
        for model in [BaselineModel::VmSine, BaselineModel::VmCosine] {
            let a = fit_baseline(&data, model, &opts).unwrap();
            let b = fit_baseline(&data_shifted, model, &opts).unwrap();
            assert!(
                (a.loglik - b.loglik).abs() < 1e-8,
                "{model:?}: {} vs {}",
                a.loglik,
                b.loglik
            );
        }
    }

    #[test]
    fn nested_sine_submodel_cannot_beat_the_full_fit() {
        let g = grid(8, 8);
        let mut counts = vec![0u64; 64];
        for k in 0..8usize {
            for l in 0..8usize {
                counts[k * 8 + l] = ((k * 3 + l * 5) % 7 + 1) as u64;
            }
        }
        let data = CountTable::new(g, counts).unwrap();
        let opts = FitOptions::default();
        let full = fit_baseline(&data, BaselineModel::VmSine, &opts).unwrap();

        // profile the lambda = 0 submodel directly over (mu1, mu2, k1, k2)
        let occupied = data.occupied();
        let n = data.n() as f64;
        let theta: Vec<f64> = (0..8).map(|k| TAU * k as f64 / 8.0).collect();
        let bounds = Bounds::new(vec![0.0, 0.0, 0.0, 0.0], vec![TAU, TAU, 50.0, 50.0]);
        let mut buffer = vec![0.0; 64];
        let mut objective = |x: &[f64]| {
            let p = BaselineParams {
                model: BaselineModel::VmSine,
                mu1: x[0],
                mu2: x[1],
                kappa1: x[2],
                kappa2: x[3],
                assoc: 0.0,
            };
            let total = fill_kernel(&p, &theta, &theta, &mut buffer);
            neg_loglik(&buffer, total, &occupied, n)
        };
        let mut sub_best = f64::INFINITY;
        for mu1 in [0.0, TAU / 4.0, TAU / 2.0] {
            for mu2 in [0.0, TAU / 2.0] {
                let m = nelder_mead(&mut objective, &[mu1, mu2, 1.0, 1.0], &bounds, opts.nm());
                sub_best = sub_best.min(m.value);
            }
        }
        let sub_loglik = -sub_best;
        // removing a parameter cannot increase the maximized likelihood
        assert!(sub_loglik <= full.loglik + 1e-6, "{sub_loglik} vs {}", full.loglik);
        let sub_aic = aic(sub_loglik, 5);
        assert!(sub_aic >= full.aic - 2.0);
    }
}
