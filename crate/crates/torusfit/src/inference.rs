//! Multinomial log-likelihood and two-step maximum-likelihood fitting over
//! the mixed discrete/continuous parameter spaces of the torus families.
//!
//! The two-step scheme enumerates every discrete parameter combination,
//! maximizes the continuous parameters for each with a box-constrained
//! Nelder-Mead search, and keeps the combination with the highest
//! log-likelihood. Candidates are reduced in lexicographic order with
//! near-ties (1e-9) resolved toward the earlier candidate, so results are
//! deterministic and invariant under the parallel sweep.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::BaselineParams;
use crate::dist::kernel::KernelWorkspace;
use crate::dist::{BgwgParams, BwgParams, Delta, PmfTable};
use crate::error::{domain, Result};
use crate::optim::{nelder_mead, Bounds, Options};
use crate::torus::{GridPoint, TorusGrid};

/// Observed bivariate contingency counts on the grid, stored row-major
/// (k outer, l inner) like every other table in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    grid: TorusGrid,
    counts: Vec<u64>,
    n: u64,
}

impl CountTable {
    pub fn new(grid: TorusGrid, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(domain("count table does not match the grid size"));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(domain("count table is empty (n = 0)"));
        }
        Ok(Self { grid, counts, n })
    }

    pub fn from_pairs(grid: TorusGrid, pairs: &[GridPoint]) -> Result<Self> {
        let mut counts = vec![0u64; grid.len()];
        for p in pairs {
            if !grid.contains(*p) {
                return Err(domain(format!("pair ({}, {}) outside the grid", p.k, p.l)));
            }
            counts[grid.flat_index(*p)] += 1;
        }
        Self::new(grid, counts)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn value(&self, k: usize, l: usize) -> u64 {
        self.counts[k * self.grid.m2() + l]
    }

    /// Row-major flat view (k outer, l inner).
    pub fn flat(&self) -> &[u64] {
        &self.counts
    }

    /// The (flat index, count) pairs of occupied cells.
    pub fn occupied(&self) -> Vec<(usize, f64)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, c)| (i, *c as f64))
            .collect()
    }
}

/// Multinomial log-likelihood sum counts * ln pmf. Returns negative
/// infinity when an occupied cell has zero probability.
pub fn log_likelihood(data: &CountTable, model: &PmfTable) -> f64 {
    debug_assert_eq!(data.grid(), model.grid());
    let mut ll = 0.0;
    for (idx, count) in data.occupied() {
        let p = model.flat()[idx];
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += count * p.ln();
    }
    ll
}

/// Log-likelihood of a torus model's parameter record against the data.
pub fn model_log_likelihood(data: &CountTable, model: &crate::TorusModel) -> Result<f64> {
    Ok(log_likelihood(data, &crate::pmf_table(model)?))
}

/// AIC = 2 * parameter count + 2 * negative log-likelihood.
pub fn aic(loglik: f64, n_params: usize) -> f64 {
    2.0 * n_params as f64 - 2.0 * loglik
}

/// Model family identifiers used in fit reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bwg,
    Bgwg,
    WrappedCauchy,
    VmSine,
    VmCosine,
}

impl Family {
    /// Free parameters counted by AIC, discrete ones included.
    pub fn n_params(self) -> usize {
        match self {
            Family::Bwg | Family::Bgwg => 6,
            _ => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Bwg => "bwg",
            Family::Bgwg => "bgwg",
            Family::WrappedCauchy => "wrapped_cauchy",
            Family::VmSine => "vm_sine",
            Family::VmCosine => "vm_cosine",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bwg" => Ok(Family::Bwg),
            "bgwg" => Ok(Family::Bgwg),
            "wc" | "wrapped_cauchy" => Ok(Family::WrappedCauchy),
            "vms" | "vm_sine" => Ok(Family::VmSine),
            "vmc" | "vm_cosine" => Ok(Family::VmCosine),
            other => Err(domain(format!("unknown family {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fitted parameter record of any supported family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedParams {
    Bwg(BwgParams),
    Bgwg(BgwgParams),
    Baseline(BaselineParams),
}

/// One examined discrete-parameter candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCandidate {
    pub delta: Delta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<usize>,
    pub loglik: f64,
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub params: FittedParams,
    pub loglik: f64,
    pub aic: f64,
    /// Standard errors of the continuous parameters, from the numeric
    /// observed information (absent for discrete parameters).
    pub se: BTreeMap<String, f64>,
    /// Diagnostics: `boundary:<param>` for one-sided estimates at a box
    /// edge, `pseudo_inverse` when the Hessian was not positive definite.
    pub se_flags: Vec<String>,
    pub discrete_search: Vec<DiscreteCandidate>,
    pub converged: bool,
    pub evaluations: usize,
}

/// Tuning knobs of the two-step fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    /// Box inset for concentrations: q, s are searched on
    /// [epsilon, 1 - epsilon].
    pub epsilon: f64,
    /// Objective tolerance of one simplex run.
    pub ftol: f64,
    /// Evaluation budget of one simplex run.
    pub max_evals: usize,
    /// Maximum location anchors per axis for the multi-start searches.
    pub anchors_per_axis: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, ftol: 1e-9, max_evals: 5000, anchors_per_axis: 8 }
    }
}

impl FitOptions {
    pub(crate) fn nm(&self) -> Options {
        Options { ftol: self.ftol, max_evals: self.max_evals, init_step: 0.1 }
    }

    /// Settings for the finalist refinement pass: a small fresh simplex
    /// around the incumbent, driven to a much tighter objective tolerance.
    pub(crate) fn nm_tight(&self) -> Options {
        Options { ftol: 1e-13, max_evals: 4 * self.max_evals, init_step: 0.02 }
    }
}

/// Candidates within this margin of the incumbent get a tight refinement
/// pass before the final comparison. Near the s = 1 boundary the model has
/// twin representations (beta and beta + m2/2 with the dependence sign
/// flipped) whose likelihoods differ only at the 1e-10 scale; refinement
/// resolves that ordering instead of leaving it to tie-breaking.
const FINALIST_WINDOW: f64 = 1e-6;

/// Refined log-likelihood ties within this margin are broken toward the
/// lexicographically earlier discrete candidate (delta = -1 first).
const TIE_TOLERANCE: f64 = 1e-11;

pub(crate) fn neg_loglik(
    table: &[f64],
    total: f64,
    occupied: &[(usize, f64)],
    n: f64,
) -> f64 {
    if !total.is_finite() || total <= 0.0 {
        return f64::INFINITY;
    }
    let mut ll = -n * total.ln();
    for (idx, count) in occupied {
        let v = table[*idx];
        if v <= 0.0 {
            return f64::INFINITY;
        }
        ll += count * v.ln();
    }
    -ll
}

/// Moment-matched starting concentration: solves
/// (1 - q)^2 / (1 + q^2 - 2 q cos(2 pi/m)) = c for q, where c is the mean
/// cosine of the wrapped offsets about the anchor; clamped into the box.
fn heuristic_concentration(component: f64, m: usize, epsilon: f64) -> f64 {
    let lo = epsilon;
    let hi = 1.0 - epsilon;
    if component <= 0.0 {
        return 0.9f64.clamp(lo, hi);
    }
    if component >= 1.0 {
        return lo;
    }
    let c1 = (std::f64::consts::TAU / m as f64).cos();
    let b = 1.0 - component * c1;
    let disc = (b * b - (1.0 - component) * (1.0 - component)).max(0.0);
    ((b - disc.sqrt()) / (1.0 - component)).clamp(lo, hi)
}

/// Mean cosine of the empirical marginal offsets about a candidate location.
fn resultant_component(marginal: &[f64], n: f64, anchor: f64) -> f64 {
    let m = marginal.len();
    let tau = std::f64::consts::TAU / m as f64;
    marginal
        .iter()
        .enumerate()
        .map(|(k, c)| c / n * (tau * (k as f64 - anchor)).cos())
        .sum()
}

fn empirical_marginals(data: &CountTable) -> (Vec<f64>, Vec<f64>) {
    let grid = data.grid();
    let mut m1 = vec![0.0; grid.m1()];
    let mut m2 = vec![0.0; grid.m2()];
    for k in 0..grid.m1() {
        for l in 0..grid.m2() {
            let c = data.value(k, l) as f64;
            m1[k] += c;
            m2[l] += c;
        }
    }
    (m1, m2)
}

#[derive(Debug, Clone)]
struct CandidateFit {
    x: Vec<f64>,
    neg_loglik: f64,
    converged: bool,
    evaluations: usize,
}

/// Best of several simplex starts, then one restart from the incumbent to
/// shake off a collapsed simplex.
fn polished_search(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    starts: &[Vec<f64>],
    bounds: &Bounds,
    opts: Options,
) -> CandidateFit {
    let mut evaluations = 0;
    let mut best: Option<crate::optim::Minimum> = None;
    for start in starts {
        let m = nelder_mead(&mut *objective, start, bounds, opts);
        evaluations += m.evaluations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let incumbent = best.expect("at least one start");
    let polish = nelder_mead(&mut *objective, &incumbent.x, bounds, opts);
    evaluations += polish.evaluations;
    let chosen = if polish.value < incumbent.value { polish } else { incumbent };
    CandidateFit {
        x: chosen.x,
        neg_loglik: chosen.value,
        converged: chosen.converged,
        evaluations,
    }
}

/// Tight refinement of one candidate from its incumbent point; keeps the
/// incumbent if refinement does not improve it.
fn refine(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    fit: &CandidateFit,
    bounds: &Bounds,
    opts: Options,
) -> CandidateFit {
    let refined = nelder_mead(&mut *objective, &fit.x, bounds, opts);
    if refined.value < fit.neg_loglik {
        CandidateFit {
            x: refined.x,
            neg_loglik: refined.value,
            converged: refined.converged,
            evaluations: fit.evaluations + refined.evaluations,
        }
    } else {
        CandidateFit { evaluations: fit.evaluations + refined.evaluations, ..fit.clone() }
    }
}

/// Indices of candidates whose value sits within the finalist window of the
/// best, in their original (lexicographic) order.
fn finalist_indices(values: impl Iterator<Item = f64> + Clone) -> Vec<usize> {
    let best = values.clone().fold(f64::INFINITY, f64::min);
    values
        .enumerate()
        .filter(|(_, v)| *v <= best + FINALIST_WINDOW)
        .map(|(i, _)| i)
        .collect()
}

/// Two-step fit of the BWG family: every (delta, alpha, beta) combination
/// is profiled over (q, s, rho), then the global best is selected.
pub fn fit_bwg(data: &CountTable, options: &FitOptions) -> Result<FitResult> {
    let grid = data.grid();
    let (m1, m2) = (grid.m1(), grid.m2());
    let occupied = data.occupied();
    let n = data.n() as f64;
    let eps = options.epsilon;
    let bounds = Bounds::new(vec![eps, eps, -1.0], vec![1.0 - eps, 1.0 - eps, 1.0]);
    let (marg1, marg2) = empirical_marginals(data);

    // lexicographic candidate order: delta = -1 first, then alpha, beta
    let combos: Vec<(Delta, usize, usize)> = Delta::ALL
        .iter()
        .flat_map(|&d| (0..m1).flat_map(move |a| (0..m2).map(move |b| (d, a, b))))
        .collect();

    let fits: Vec<CandidateFit> = combos
        .par_iter()
        .map_init(
            || KernelWorkspace::new(grid),
            |ws, &(delta, alpha, beta)| {
                let mut objective = |x: &[f64]| {
                    let total = ws.fill(alpha as f64, beta as f64, x[0], x[1], x[2], delta);
                    neg_loglik(&ws.table, total, &occupied, n)
                };
                let q0 = heuristic_concentration(
                    resultant_component(&marg1, n, alpha as f64),
                    m1,
                    eps,
                );
                let s0 = heuristic_concentration(
                    resultant_component(&marg2, n, beta as f64),
                    m2,
                    eps,
                );
                let starts = [vec![0.5, 0.5, 0.0], vec![q0, s0, 0.0]];
                polished_search(&mut objective, &starts, &bounds, options.nm())
            },
        )
        .collect();

    // refine the near-tied finalists at tight tolerance before comparing
    let mut fits = fits;
    let mut ws = KernelWorkspace::new(grid);
    for idx in finalist_indices(fits.iter().map(|f| f.neg_loglik)) {
        let (delta, alpha, beta) = combos[idx];
        let mut objective = |x: &[f64]| {
            let total = ws.fill(alpha as f64, beta as f64, x[0], x[1], x[2], delta);
            neg_loglik(&ws.table, total, &occupied, n)
        };
        fits[idx] = refine(&mut objective, &fits[idx], &bounds, options.nm_tight());
    }

    let mut best_idx = 0;
    for (i, fit) in fits.iter().enumerate() {
        if fit.neg_loglik < fits[best_idx].neg_loglik - TIE_TOLERANCE {
            best_idx = i;
        }
    }
    let search = combos
        .iter()
        .zip(&fits)
        .map(|(&(delta, alpha, beta), fit)| DiscreteCandidate {
            delta,
            alpha: Some(alpha),
            beta: Some(beta),
            loglik: -fit.neg_loglik,
        })
        .collect();

    let (delta, alpha, beta) = combos[best_idx];
    let best = &fits[best_idx];
    let params = BwgParams::new(grid, alpha, beta, best.x[0], best.x[1], best.x[2], delta)?;
    let loglik = -best.neg_loglik;

    let mut ws = KernelWorkspace::new(grid);
    let mut objective = |y: &[f64]| {
        let total = ws.fill(alpha as f64, beta as f64, y[0], y[1], y[2], delta);
        neg_loglik(&ws.table, total, &occupied, n)
    };
    let (se, se_flags) = standard_errors(&mut objective, &best.x, &bounds, &["q", "s", "rho"]);

    Ok(FitResult {
        family: Family::Bwg,
        params: FittedParams::Bwg(params),
        loglik,
        aic: aic(loglik, Family::Bwg.n_params()),
        se,
        se_flags,
        discrete_search: search,
        converged: best.converged,
        evaluations: fits.iter().map(|f| f.evaluations).sum(),
    })
}

/// Evenly spaced integer location anchors, at most `max_anchors` of them.
fn anchors(m: usize, max_anchors: usize) -> Vec<f64> {
    let count = m.min(max_anchors.max(1));
    let step = m as f64 / count as f64;
    (0..count).map(|i| (i as f64 * step).floor()).collect()
}

/// Two-step fit of the BGWG family: delta is enumerated, the remaining five
/// parameters are maximized continuously from a grid of location anchors.
pub fn fit_bgwg(data: &CountTable, options: &FitOptions) -> Result<FitResult> {
    let grid = data.grid();
    let (m1, m2) = (grid.m1(), grid.m2());
    let occupied = data.occupied();
    let n = data.n() as f64;
    let eps = options.epsilon;
    let bounds = Bounds::new(
        vec![0.0, 0.0, eps, eps, -1.0],
        vec![m1 as f64 - 1e-9, m2 as f64 - 1e-9, 1.0 - eps, 1.0 - eps, 1.0],
    );
    let (marg1, marg2) = empirical_marginals(data);

    let anchor_pairs: Vec<(Delta, f64, f64)> = Delta::ALL
        .iter()
        .flat_map(|&d| {
            let a1 = anchors(m1, options.anchors_per_axis);
            let a2 = anchors(m2, options.anchors_per_axis);
            a1.into_iter().flat_map(move |a| a2.clone().into_iter().map(move |b| (d, a, b)))
        })
        .collect();

    let runs: Vec<CandidateFit> = anchor_pairs
        .par_iter()
        .map_init(
            || KernelWorkspace::new(grid),
            |ws, &(delta, a0, b0)| {
                let mut objective = |x: &[f64]| {
                    let total = ws.fill(x[0], x[1], x[2], x[3], x[4], delta);
                    neg_loglik(&ws.table, total, &occupied, n)
                };
                let q0 = heuristic_concentration(resultant_component(&marg1, n, a0), m1, eps);
                let s0 = heuristic_concentration(resultant_component(&marg2, n, b0), m2, eps);
                let starts = [vec![a0, b0, 0.5, 0.5, 0.0], vec![a0, b0, q0, s0, 0.0]];
                let mut evaluations = 0;
                let mut best: Option<crate::optim::Minimum> = None;
                for start in &starts {
                    let m = nelder_mead(&mut objective, start, &bounds, options.nm());
                    evaluations += m.evaluations;
                    if best.as_ref().is_none_or(|b| m.value < b.value) {
                        best = Some(m);
                    }
                }
                let b = best.expect("two starts");
                CandidateFit {
                    x: b.x,
                    neg_loglik: b.value,
                    converged: b.converged,
                    evaluations,
                }
            },
        )
        .collect();

    let mut evaluations: usize = runs.iter().map(|r| r.evaluations).sum();
    let mut search = Vec::with_capacity(2);
    let mut per_delta: Vec<(Delta, CandidateFit)> = Vec::with_capacity(2);
    let mut ws = KernelWorkspace::new(grid);
    for &delta in &Delta::ALL {
        let mut objective = |x: &[f64]| {
            let total = ws.fill(x[0], x[1], x[2], x[3], x[4], delta);
            neg_loglik(&ws.table, total, &occupied, n)
        };
        // refine every near-tied basin of this branch (covers the boundary
        // twin representations), then keep the branch winner
        let branch: Vec<&CandidateFit> = runs
            .iter()
            .zip(&anchor_pairs)
            .filter(|(_, &(d, _, _))| d == delta)
            .map(|(run, _)| run)
            .collect();
        let mut chosen: Option<CandidateFit> = None;
        for idx in finalist_indices(branch.iter().map(|r| r.neg_loglik)) {
            let refined = refine(&mut objective, branch[idx], &bounds, options.nm_tight());
            evaluations += refined.evaluations - branch[idx].evaluations;
            if chosen
                .as_ref()
                .is_none_or(|c| refined.neg_loglik < c.neg_loglik - TIE_TOLERANCE)
            {
                chosen = Some(refined);
            }
        }
        let chosen = chosen.expect("anchors non-empty");
        search.push(DiscreteCandidate {
            delta,
            alpha: None,
            beta: None,
            loglik: -chosen.neg_loglik,
        });
        per_delta.push((delta, chosen));
    }

    let mut best_idx = 0;
    for i in 1..per_delta.len() {
        if per_delta[i].1.neg_loglik < per_delta[best_idx].1.neg_loglik - TIE_TOLERANCE {
            best_idx = i;
        }
    }
    let (delta, best) = &per_delta[best_idx];
    let x = &best.x;
    let params = BgwgParams::new(grid, x[0], x[1], x[2], x[3], x[4], *delta)?;
    let loglik = -best.neg_loglik;

    let d = *delta;
    let mut objective = |y: &[f64]| {
        let total = ws.fill(y[0], y[1], y[2], y[3], y[4], d);
        neg_loglik(&ws.table, total, &occupied, n)
    };
    let (se, se_flags) =
        standard_errors(&mut objective, x, &bounds, &["alpha", "beta", "q", "s", "rho"]);

    Ok(FitResult {
        family: Family::Bgwg,
        params: FittedParams::Bgwg(params),
        loglik,
        aic: aic(loglik, Family::Bgwg.n_params()),
        se,
        se_flags,
        discrete_search: search,
        converged: best.converged,
        evaluations,
    })
}

/// Dispatch over the two torus families.
pub fn fit_torus_model(
    data: &CountTable,
    family: Family,
    options: &FitOptions,
) -> Result<FitResult> {
    match family {
        Family::Bwg => fit_bwg(data, options),
        Family::Bgwg => fit_bgwg(data, options),
        other => Err(domain(format!("{other} is not a torus family; use fit_baseline"))),
    }
}

/// Standard errors from the numeric observed information: square roots of
/// the diagonal of the inverse Hessian of the negative log-likelihood,
/// central differences with per-parameter step 1e-4 * max(1, |x|). Stencils
/// for parameters within a step of a box edge are shifted inward and
/// flagged; a non-positive-definite Hessian falls back to the Moore-Penrose
/// pseudo-inverse.
pub(crate) fn standard_errors(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    bounds: &Bounds,
    names: &[&str],
) -> (BTreeMap<String, f64>, Vec<String>) {
    let dim = x.len();
    let mut flags = Vec::new();
    let steps: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();

    // shift the expansion point inward where a central stencil would leave
    // the box; those estimates are one-sided and flagged
    let mut center = x.to_vec();
    for i in 0..dim {
        if center[i] + steps[i] > bounds.hi[i] {
            center[i] = bounds.hi[i] - steps[i];
            flags.push(format!("boundary:{}", names[i]));
        } else if center[i] - steps[i] < bounds.lo[i] {
            center[i] = bounds.lo[i] + steps[i];
            flags.push(format!("boundary:{}", names[i]));
        }
    }

    let mut hessian = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let f0 = objective(&center);
    for i in 0..dim {
        let mut up = center.clone();
        up[i] += steps[i];
        let mut down = center.clone();
        down[i] -= steps[i];
        hessian[(i, i)] = (objective(&up) - 2.0 * f0 + objective(&down)) / (steps[i] * steps[i]);
        for j in 0..i {
            let mut pp = center.clone();
            pp[i] += steps[i];
            pp[j] += steps[j];
            let mut pm = center.clone();
            pm[i] += steps[i];
            pm[j] -= steps[j];
            let mut mp = center.clone();
            mp[i] -= steps[i];
            mp[j] += steps[j];
            let mut mm = center.clone();
            mm[i] -= steps[i];
            mm[j] -= steps[j];
            let v = (objective(&pp) - objective(&pm) - objective(&mp) + objective(&mm))
                / (4.0 * steps[i] * steps[j]);
            hessian[(i, j)] = v;
            hessian[(j, i)] = v;
        }
    }

    let inverse = match nalgebra::Cholesky::new(hessian.clone()) {
        Some(chol) => chol.inverse(),
        None => {
            flags.push("pseudo_inverse".to_string());
            hessian.pseudo_inverse(1e-12).unwrap_or_else(|_| nalgebra::DMatrix::zeros(dim, dim))
        }
    };

    let se = names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), inverse[(i, i)].max(0.0).sqrt()))
        .collect();
    (se, flags)
}
