//! Box-constrained Nelder-Mead simplex minimizer.
//!
//! Derivative-free, deterministic, with every trial point clamped into the
//! feasible box. Used for the continuous-parameter step of the two-step
//! maximum-likelihood fits, where the objective is smooth but gradients of
//! the normalizing constants are unpleasant to hand-code.

/// Inclusive lower/upper bounds per coordinate.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a < b), "empty box");
        Self { lo, hi }
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Convergence tolerance on the spread of simplex objective values.
    pub ftol: f64,
    /// Evaluation budget for one run.
    pub max_evals: usize,
    /// Initial simplex step as a fraction of each box width.
    pub init_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { ftol: 1e-9, max_evals: 5000, init_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const ALPHA: f64 = 1.0; // reflection
const GAMMA: f64 = 2.0; // expansion
const BETA: f64 = 0.5; // contraction
const SIGMA: f64 = 0.5; // shrink

/// Minimize `f` from `start` inside `bounds`. The objective may return
/// infinity to reject a point.
pub fn nelder_mead<F>(mut f: F, start: &[f64], bounds: &Bounds, opts: Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    assert_eq!(n, bounds.lo.len());
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    // initial simplex: start plus one step along each coordinate
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    simplex.push(x0.clone());
    for i in 0..n {
        let mut v = x0.clone();
        let width = bounds.hi[i] - bounds.lo[i];
        let step = opts.init_step * width;
        v[i] = if v[i] + step <= bounds.hi[i] { v[i] + step } else { v[i] - step };
        bounds.clamp(&mut v);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    while evals < opts.max_evals {
        // order the simplex, ties broken by index for determinism
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = values[worst] - values[best];
        if spread.abs() <= opts.ftol && values[best].is_finite() {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (i, v) in simplex.iter().enumerate() {
            if i != worst {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
        }

        let blend = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            bounds.clamp(&mut x);
            x
        };

        let reflected = blend(ALPHA);
        let fr = eval(&reflected, &mut evals);
        if fr < values[best] {
            let expanded = blend(GAMMA);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = blend(-BETA);
            let fc = eval(&contracted, &mut evals);
            if fc < values[worst] {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = simplex[best].clone();
                for (i, v) in simplex.iter_mut().enumerate() {
                    if i != best {
                        for (x, a) in v.iter_mut().zip(&anchor) {
                            *x = a + SIGMA * (*x - a);
                        }
                        bounds.clamp(v);
                        values[i] = eval(v, &mut evals);
                    }
                }
            }
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .expect("simplex non-empty");
    Minimum { x: simplex[best].clone(), value: values[best], evaluations: evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 4.0 * (x[1] + 0.7).powi(2);
        let bounds = Bounds::new(vec![-2.0, -2.0], vec![2.0, 2.0]);
        let m = nelder_mead(f, &[1.0, 1.0], &bounds, Options::default());
        assert!(m.converged);
        assert!((m.x[0] - 0.3).abs() < 1e-4, "{:?}", m.x);
        assert!((m.x[1] + 0.7).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_box_constraints() {
        // unconstrained minimum at (-3, 5) lies outside the box
        let f = |x: &[f64]| (x[0] + 3.0).powi(2) + (x[1] - 5.0).powi(2);
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let m = nelder_mead(f, &[0.5, 0.5], &bounds, Options::default());
        assert!(m.x[0] >= 0.0 && m.x[0] <= 1.0);
        assert!(m.x[1] >= 0.0 && m.x[1] <= 1.0);
        assert!((m.x[0] - 0.0).abs() < 1e-6);
        assert!((m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn handles_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let bounds = Bounds::new(vec![-5.0, -5.0], vec![5.0, 5.0]);
        let m = nelder_mead(f, &[-1.2, 1.0], &bounds, Options::default());
        assert!(m.value < 1e-7, "value {}", m.value);
    }

    #[test]
    fn infinity_rejections_do_not_crash() {
        let f = |x: &[f64]| if x[0] < 0.25 { f64::INFINITY } else { (x[0] - 0.5).powi(2) };
        let bounds = Bounds::new(vec![0.0], vec![1.0]);
        let m = nelder_mead(f, &[0.9], &bounds, Options::default());
        assert!((m.x[0] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn deterministic_across_runs() {
        let f = |x: &[f64]| x[0].sin() * x[1].cos() + x[0] * x[0] * 0.1;
        let bounds = Bounds::new(vec![-3.0, -3.0], vec![3.0, 3.0]);
        let a = nelder_mead(f, &[1.0, -2.0], &bounds, Options::default());
        let b = nelder_mead(f, &[1.0, -2.0], &bounds, Options::default());
        assert_eq!(a.x, b.x);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn stops_at_evaluation_budget() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let bounds = Bounds::new(vec![-1.0; 5], vec![1.0; 5]);
        let m = nelder_mead(f, &[0.9; 5], &bounds, Options { max_evals: 40, ..Default::default() });
        assert!(m.evaluations <= 46); // budget plus one final sweep
    }
}
