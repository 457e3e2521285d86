//! Trigonometric moments of the torus distributions, closed-form variance
//! and covariance expressions, and the Jupp-Mardia squared circular
//! correlation derived from the planar embedding
//! (cos X1, sin X1, cos X2, sin X2).
//!
//! Every closed form here has a brute-force companion (exact finite sums
//! over the pmf table); the brute route is the default engine and the
//! correctness anchor for the closed one.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::dist::{one_minus_pow, pmf_table, BgwgParams, BwgParams, Delta, PmfTable, TorusModel};
use crate::error::{domain, Error, Result};

/// First, second, and cross trigonometric moments of (X1, X2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigMoments {
    pub e_cos1: f64,
    pub e_cos2: f64,
    pub e_sin1: f64,
    pub e_sin2: f64,
    /// E[cos^2 X1]
    pub e_cos1cos1: f64,
    pub e_cos2cos2: f64,
    /// E[sin^2 X1]
    pub e_sin1sin1: f64,
    pub e_sin2sin2: f64,
    pub e_cos1cos2: f64,
    pub e_cos1sin2: f64,
    pub e_sin1cos2: f64,
    pub e_sin1sin2: f64,
    /// E[cos X1 sin X1]
    pub e_cos1sin1: f64,
    pub e_cos2sin2: f64,
}

/// Moments by direct summation over the probability table.
pub fn trig_moments_brute(table: &PmfTable) -> TrigMoments {
    let grid = table.grid();
    let (m1, m2) = (grid.m1(), grid.m2());
    let cos1: Vec<f64> = (0..m1).map(|k| (TAU * k as f64 / m1 as f64).cos()).collect();
    let sin1: Vec<f64> = (0..m1).map(|k| (TAU * k as f64 / m1 as f64).sin()).collect();
    let cos2: Vec<f64> = (0..m2).map(|l| (TAU * l as f64 / m2 as f64).cos()).collect();
    let sin2: Vec<f64> = (0..m2).map(|l| (TAU * l as f64 / m2 as f64).sin()).collect();
    let mut m = TrigMoments {
        e_cos1: 0.0,
        e_cos2: 0.0,
        e_sin1: 0.0,
        e_sin2: 0.0,
        e_cos1cos1: 0.0,
        e_cos2cos2: 0.0,
        e_sin1sin1: 0.0,
        e_sin2sin2: 0.0,
        e_cos1cos2: 0.0,
        e_cos1sin2: 0.0,
        e_sin1cos2: 0.0,
        e_sin1sin2: 0.0,
        e_cos1sin1: 0.0,
        e_cos2sin2: 0.0,
    };
    for k in 0..m1 {
        for l in 0..m2 {
            let p = table.value(k, l);
            m.e_cos1 += p * cos1[k];
            m.e_cos2 += p * cos2[l];
            m.e_sin1 += p * sin1[k];
            m.e_sin2 += p * sin2[l];
            m.e_cos1cos1 += p * cos1[k] * cos1[k];
            m.e_cos2cos2 += p * cos2[l] * cos2[l];
            m.e_sin1sin1 += p * sin1[k] * sin1[k];
            m.e_sin2sin2 += p * sin2[l] * sin2[l];
            m.e_cos1cos2 += p * cos1[k] * cos2[l];
            m.e_cos1sin2 += p * cos1[k] * sin2[l];
            m.e_sin1cos2 += p * sin1[k] * cos2[l];
            m.e_sin1sin2 += p * sin1[k] * sin2[l];
            m.e_cos1sin1 += p * cos1[k] * sin1[k];
            m.e_cos2sin2 += p * cos2[l] * sin2[l];
        }
    }
    m
}

/// The recurring denominators 1 + q^2 - 2 q cos(2 pi i / m), i = 0..3.
fn quad_factors(q: f64, m: usize) -> [f64; 4] {
    std::array::from_fn(|i| 1.0 + q * q - 2.0 * q * (TAU * i as f64 / m as f64).cos())
}

struct AxisSeries {
    /// Cosine-weighted wrapped sums, harmonics 0..3.
    h: [f64; 4],
    /// Sine-weighted wrapped sums, harmonics 0..3.
    g: [f64; 4],
}

fn axis_series(q: f64, frac: f64, m: usize) -> AxisSeries {
    let a = quad_factors(q, m);
    let one_minus_qm = one_minus_pow(q, m);
    let mut h = [0.0; 4];
    let mut g = [0.0; 4];
    for i in 0..4 {
        let ci = (TAU * i as f64 / m as f64).cos();
        let si = (TAU * i as f64 / m as f64).sin();
        h[i] = one_minus_qm
            * (q.powf(frac) - q.powf(2.0 - frac) - q * (q.powf(frac) - q.powf(-frac)) * ci)
            / a[i];
        g[i] = q * one_minus_qm * (q.powf(-frac) - q.powf(frac)) * si / a[i];
    }
    AxisSeries { h, g }
}

/// Closed-form moments, using the within-unit-cell reduction: the grid is
/// rotated by the integer parts of (alpha, beta), the closed forms are
/// evaluated at the fractional locations, and the moments are rotated back.
pub fn trig_moments_closed(params: &BgwgParams) -> Result<TrigMoments> {
    let (m1, m2) = (params.grid.m1(), params.grid.m2());
    let (a, b) = (params.a(), params.b());
    let rho = params.rho;
    let reduced = BgwgParams::new(params.grid, a, b, params.q, params.s, rho, params.delta)?;
    let c7 = 1.0 / crate::dist::bgwg_recip_normalizer_closed(&reduced);

    let x = axis_series(params.q, a, m1);
    let y = axis_series(params.s, b, m2);
    let (h, g, n, mm) = (&x.h, &x.g, &y.h, &y.g);

    let d = params.delta.sign();
    // phase: 2 pi a / m1 - delta 2 pi b / m2 (the delta = -1 branch flips
    // both the phase sign on the second axis and the sine-mixing signs)
    let phase = TAU * (a / m1 as f64 - d * b / m2 as f64);
    let (sp, cp) = phase.sin_cos();

    let m = if params.delta == Delta::Rotational {
        TrigMoments {
            e_cos1: c7
                * (h[1] * n[0]
                    + 0.5 * rho
                        * ((h[2] * n[1] + g[2] * mm[1] + h[0] * n[1]) * cp
                            - (h[2] * mm[1] - g[2] * n[1] + h[0] * mm[1]) * sp)),
            e_cos2: c7
                * (h[0] * n[1]
                    + 0.5 * rho
                        * ((h[1] * n[0] + h[1] * n[2] + g[1] * mm[2]) * cp
                            + (g[1] * n[0] - h[1] * mm[2] + g[1] * n[2]) * sp)),
            e_sin1: c7
                * (g[1] * n[0]
                    + 0.5 * rho
                        * ((h[0] * mm[1] - h[2] * mm[1] + g[2] * n[1]) * cp
                            + (h[0] * n[1] - h[2] * n[1] - g[2] * mm[1]) * sp)),
            e_sin2: c7
                * (h[0] * mm[1]
                    + 0.5 * rho
                        * ((g[1] * n[0] + h[1] * mm[2] - g[1] * n[2]) * cp
                            + (h[1] * n[2] + g[1] * mm[2] - h[1] * n[0]) * sp)),
            e_cos1cos1: 0.5
                * c7
                * (h[0] * n[0] + h[2] * n[0]
                    + 0.5 * rho
                        * (((3.0 * h[1] + h[3]) * n[1] + (g[1] + g[3]) * mm[1]) * cp
                            - ((3.0 * h[1] + h[3]) * mm[1] - (g[1] + g[3]) * n[1]) * sp)),
            e_cos2cos2: 0.5
                * c7
                * (h[0] * n[0] + h[0] * n[2]
                    + 0.5 * rho
                        * (((3.0 * n[1] + n[3]) * h[1] + (mm[1] + mm[3]) * g[1]) * cp
                            - ((mm[1] + mm[3]) * h[1] - (3.0 * n[1] + n[3]) * g[1]) * sp)),
            e_sin1sin1: 0.5
                * c7
                * (h[0] * n[0] - h[2] * n[0]
                    + 0.5 * rho
                        * (((h[1] - h[3]) * n[1] + (3.0 * g[1] - g[3]) * mm[1]) * cp
                            - ((h[1] - h[3]) * mm[1] - (3.0 * g[1] - g[3]) * n[1]) * sp)),
            e_sin2sin2: 0.5
                * c7
                * (h[0] * n[0] - h[0] * n[2]
                    + 0.5 * rho
                        * (((n[1] - n[3]) * h[1] + (3.0 * mm[1] - mm[3]) * g[1]) * cp
                            - ((3.0 * mm[1] - mm[3]) * h[1] - (n[1] - n[3]) * g[1]) * sp)),
            e_cos1cos2: c7
                * (h[1] * n[1]
                    + 0.25 * rho
                        * ((h[2] * n[0] + h[0] * n[2] + h[2] * n[2] + g[2] * mm[2] + h[0] * n[0])
                            * cp
                            + (g[2] * n[0] - h[0] * mm[2] - h[2] * mm[2] + g[2] * n[2]) * sp)),
            e_cos1sin2: c7
                * (h[1] * mm[1]
                    + 0.25 * rho
                        * ((g[2] * n[0] + h[0] * mm[2] - g[2] * n[2] + h[2] * mm[2]) * cp
                            + (h[0] * n[2] - h[2] * n[0] + h[2] * n[2] + g[2] * mm[2]
                                - h[0] * n[0])
                                * sp)),
            e_sin1cos2: c7
                * (g[1] * n[1]
                    + 0.25 * rho
                        * ((g[2] * n[0] + h[0] * mm[2] - h[2] * mm[2] + g[2] * n[2]) * cp
                            + (h[0] * n[2] - h[2] * n[0] - h[2] * n[2] - g[2] * mm[2]
                                + h[0] * n[0])
                                * sp)),
            e_sin1sin2: c7
                * (g[1] * mm[1]
                    - 0.25 * rho
                        * ((h[2] * n[0] + h[0] * n[2] - h[2] * n[2] - g[2] * mm[2] - h[0] * n[0])
                            * cp
                            + (g[2] * n[0] - h[0] * mm[2] + h[2] * mm[2] - g[2] * n[2]) * sp)),
            e_cos1sin1: 0.5
                * c7
                * (g[2] * n[0]
                    + 0.5 * rho
                        * ((h[1] * mm[1] - h[3] * mm[1] + g[1] * n[1] + g[3] * n[1]) * cp
                            + (h[1] * n[1] - h[3] * n[1] - g[1] * mm[1] - g[3] * mm[1]) * sp)),
            e_cos2sin2: 0.5
                * c7
                * (h[0] * mm[2]
                    + 0.5 * rho
                        * ((mm[1] * h[1] + mm[3] * h[1] + n[1] * g[1] - n[3] * g[1]) * cp
                            + (n[3] * h[1] - n[1] * h[1] + mm[1] * g[1] + mm[3] * g[1]) * sp)),
        }
    } else {
        TrigMoments {
            e_cos1: c7
                * (h[1] * n[0]
                    + 0.5 * rho
                        * ((h[2] * n[1] - g[2] * mm[1] + h[0] * n[1]) * cp
                            + (h[2] * mm[1] + g[2] * n[1] + h[0] * mm[1]) * sp)),
            e_cos2: c7
                * (h[0] * n[1]
                    + 0.5 * rho
                        * ((h[1] * n[2] - g[1] * mm[2] + h[1] * n[0]) * cp
                            + (h[1] * mm[2] + g[1] * n[2] + g[1] * n[0]) * sp)),
            e_sin1: c7
                * (g[1] * n[0]
                    + 0.5 * rho
                        * ((h[2] * mm[1] + g[2] * n[1] - h[0] * mm[1]) * cp
                            + (g[2] * mm[1] - h[2] * n[1] + h[0] * n[1]) * sp)),
            e_sin2: c7
                * (h[0] * mm[1]
                    + 0.5 * rho
                        * ((h[1] * mm[2] + g[1] * n[2] - g[1] * n[0]) * cp
                            + (g[1] * mm[2] - h[1] * n[2] + h[1] * n[0]) * sp)),
            e_cos1cos1: 0.5
                * c7
                * (h[0] * n[0] + h[2] * n[0]
                    + 0.5 * rho
                        * ((3.0 * h[1] * n[1] - g[1] * mm[1] + h[3] * n[1] - g[3] * mm[1]) * cp
                            + (3.0 * h[1] * mm[1]
                                + g[1] * n[1]
                                + h[3] * mm[1]
                                + g[3] * n[1])
                                * sp)),
            e_cos2cos2: 0.5
                * c7
                * (h[0] * n[0] + h[0] * n[2]
                    + 0.5 * rho
                        * ((3.0 * h[1] * n[1] - g[1] * mm[1] + h[1] * n[3] - g[1] * mm[3]) * cp
                            + (h[1] * mm[1]
                                + 3.0 * g[1] * n[1]
                                + h[1] * mm[3]
                                + g[1] * n[3])
                                * sp)),
            e_sin1sin1: 0.5
                * c7
                * (h[0] * n[0] - h[2] * n[0]
                    + 0.5 * rho
                        * ((h[1] * n[1] - 3.0 * g[1] * mm[1] - h[3] * n[1] + g[3] * mm[1]) * cp
                            + (h[1] * mm[1] + 3.0 * g[1] * n[1]
                                - h[3] * mm[1]
                                - g[3] * n[1])
                                * sp)),
            e_sin2sin2: 0.5
                * c7
                * (h[0] * n[0] - h[0] * n[2]
                    + 0.5 * rho
                        * ((h[1] * n[1] - 3.0 * g[1] * mm[1] - h[1] * n[3] + g[1] * mm[3]) * cp
                            + (3.0 * h[1] * mm[1] + g[1] * n[1]
                                - h[1] * mm[3]
                                - g[1] * n[3])
                                * sp)),
            e_cos1cos2: c7
                * (h[1] * n[1]
                    + 0.25 * rho
                        * ((h[2] * n[2] - g[2] * mm[2] + h[0] * n[0] + h[2] * n[0] + h[0] * n[2])
                            * cp
                            + (h[2] * mm[2] + g[2] * n[2] + g[2] * n[0] + h[0] * mm[2]) * sp)),
            e_cos1sin2: c7
                * (h[1] * mm[1]
                    + 0.25 * rho
                        * ((h[2] * mm[2] + g[2] * n[2] - g[2] * n[0] + h[0] * mm[2]) * cp
                            + (g[2] * mm[2] - h[2] * n[2] + h[0] * n[0] + h[2] * n[0]
                                - h[0] * n[2])
                                * sp)),
            e_sin1cos2: c7
                * (g[1] * n[1]
                    + 0.25 * rho
                        * ((h[2] * mm[2] + g[2] * n[2] + g[2] * n[0] - h[0] * mm[2]) * cp
                            - (h[2] * n[2] - g[2] * mm[2] - h[0] * n[0] + h[2] * n[0]
                                - h[0] * n[2])
                                * sp)),
            e_sin1sin2: c7
                * (g[1] * mm[1]
                    - 0.25 * rho
                        * ((h[2] * n[2] - g[2] * mm[2] + h[0] * n[0] - h[2] * n[0] - h[0] * n[2])
                            * cp
                            + (h[2] * mm[2] + g[2] * n[2] - g[2] * n[0] - h[0] * mm[2]) * sp)),
            e_cos1sin1: 0.5
                * c7
                * (g[2] * n[0]
                    + 0.5 * rho
                        * ((h[3] * mm[1] + g[3] * n[1] - h[1] * mm[1] + g[1] * n[1]) * cp
                            + (h[1] * n[1] + g[1] * mm[1] - h[3] * n[1] + g[3] * mm[1]) * sp)),
            e_cos2sin2: 0.5
                * c7
                * (h[0] * mm[2]
                    + 0.5 * rho
                        * ((h[1] * mm[1] + h[1] * mm[3] - g[1] * n[1] + g[1] * n[3]) * cp
                            + (h[1] * n[1] - h[1] * n[3] + g[1] * mm[1] + g[1] * mm[3]) * sp)),
        }
    };

    let shift1 = TAU * (params.alpha - a) / m1 as f64;
    let shift2 = TAU * (params.beta - b) / m2 as f64;
    Ok(rotate_moments(&m, shift1, shift2))
}

/// Rotate the moment set of (X1', X2') to the one of
/// (X1' + shift1, X2' + shift2).
fn rotate_moments(m: &TrigMoments, shift1: f64, shift2: f64) -> TrigMoments {
    let (s1, c1) = shift1.sin_cos();
    let (s2, c2) = shift2.sin_cos();
    let (s21, c21) = (2.0 * shift1).sin_cos();
    let (s22, c22) = (2.0 * shift2).sin_cos();

    // double-angle identities for the quadratic self-moments
    let ec2x1 = 2.0 * m.e_cos1cos1 - 1.0;
    let es2x1 = 2.0 * m.e_cos1sin1;
    let ec2x2 = 2.0 * m.e_cos2cos2 - 1.0;
    let es2x2 = 2.0 * m.e_cos2sin2;
    let e_cos1cos1 = 0.5 * (1.0 + ec2x1 * c21 - es2x1 * s21);
    let e_cos1sin1 = 0.5 * (es2x1 * c21 + ec2x1 * s21);
    let e_cos2cos2 = 0.5 * (1.0 + ec2x2 * c22 - es2x2 * s22);
    let e_cos2sin2 = 0.5 * (es2x2 * c22 + ec2x2 * s22);

    TrigMoments {
        e_cos1: m.e_cos1 * c1 - m.e_sin1 * s1,
        e_sin1: m.e_sin1 * c1 + m.e_cos1 * s1,
        e_cos2: m.e_cos2 * c2 - m.e_sin2 * s2,
        e_sin2: m.e_sin2 * c2 + m.e_cos2 * s2,
        e_cos1cos1,
        e_sin1sin1: 1.0 - e_cos1cos1,
        e_cos1sin1,
        e_cos2cos2,
        e_sin2sin2: 1.0 - e_cos2cos2,
        e_cos2sin2,
        e_cos1cos2: c1 * c2 * m.e_cos1cos2 - c1 * s2 * m.e_cos1sin2 - s1 * c2 * m.e_sin1cos2
            + s1 * s2 * m.e_sin1sin2,
        e_cos1sin2: c1 * s2 * m.e_cos1cos2 + c1 * c2 * m.e_cos1sin2
            - s1 * s2 * m.e_sin1cos2
            - s1 * c2 * m.e_sin1sin2,
        e_sin1cos2: s1 * c2 * m.e_cos1cos2 - s1 * s2 * m.e_cos1sin2 + c1 * c2 * m.e_sin1cos2
            - c1 * s2 * m.e_sin1sin2,
        e_sin1sin2: s1 * s2 * m.e_cos1cos2
            + s1 * c2 * m.e_cos1sin2
            + c1 * s2 * m.e_sin1cos2
            + c1 * c2 * m.e_sin1sin2,
    }
}

/// Variances and covariances of the embedded coordinates for the BWG
/// distribution with alpha = beta = 0 and rotational coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BwgVarCov {
    pub var_cos1: f64,
    pub var_sin1: f64,
    pub var_cos2: f64,
    pub var_sin2: f64,
    pub cov_cos: f64,
    pub cov_sin: f64,
}

/// Closed-form variance/covariance expressions; requires alpha = beta = 0,
/// delta = +1, and interior concentrations.
pub fn bwg_varcov_closed(params: &BwgParams) -> Result<BwgVarCov> {
    if params.alpha != 0 || params.beta != 0 || params.delta != Delta::Rotational {
        return Err(domain(
            "closed-form variances assume alpha = beta = 0 and delta = +1",
        ));
    }
    if params.on_boundary() {
        return Err(domain("closed-form variances need q, s in (0, 1)"));
    }
    let (m1, m2) = (params.grid.m1(), params.grid.m2());
    let (q, s, rho) = (params.q, params.s, params.rho);
    let a = quad_factors(q, m1);
    let b = quad_factors(s, m2);
    let omq = 1.0 - q;
    let oms = 1.0 - s;
    let h = 1.0 / (a[1] * b[1] + rho * omq * omq * oms * oms);

    let var_sin1 = 0.5
        * omq
        * a[1]
        * h
        * (b[1] * (1.0 / omq - omq / a[2])
            + omq * oms * oms * (1.0 / a[1] - 0.5 * (1.0 / a[3] + 1.0 / a[1])) * rho);
    let var_sin2 = 0.5
        * oms
        * b[1]
        * h
        * (a[1] * (1.0 / oms - oms / b[2])
            + omq * omq * oms * (1.0 / b[1] - 0.5 * (1.0 / b[3] + 1.0 / b[1])) * rho);
    let var_cos1 = omq
        * a[1]
        * h
        * h
        * (a[1] * b[1] * b[1] / 2.0 * (1.0 / omq + omq / a[2]) - b[1] * b[1] * omq.powi(3) / a[1]
            + (a[1] * b[1] * omq * oms * oms / 4.0 * (1.0 / a[3] + 3.0 / a[1])
                - b[1] * omq * omq / 2.0 * oms * oms * (1.0 / omq + omq / a[2]))
                * rho
            - 0.25
                * (a[1] * omq * oms.powi(4) * (1.0 / omq + omq / a[2]).powi(2)
                    - omq.powi(3) * oms.powi(4) * (1.0 / a[3] + 3.0 / a[1]))
                * rho
                * rho);
    let var_cos2 = oms
        * b[1]
        * h
        * h
        * (a[1] * a[1] * b[1] / 2.0 * (1.0 / oms + oms / b[2]) - a[1] * a[1] * oms.powi(3) / b[1]
            + (a[1] * b[1] * omq * omq * oms / 4.0 * (1.0 / b[3] + 3.0 / b[1])
                - a[1] * oms * oms / 2.0 * omq * omq * (1.0 / oms + oms / b[2]))
                * rho
            - 0.25
                * (b[1] * omq.powi(4) * oms * (1.0 / oms + oms / b[2]).powi(2)
                    - omq.powi(4) * oms.powi(3) * (1.0 / b[3] + 3.0 / b[1]))
                * rho
                * rho);
    let cov_sin = 0.25
        * omq
        * oms
        * a[1]
        * b[1]
        * h
        * (oms / b[2] - 1.0 / oms)
        * (omq / a[2] - 1.0 / omq)
        * rho;
    let cov_cos = omq
        * oms
        * h
        * h
        * (a[1] * a[1] / 2.0 * (1.0 / omq + omq / a[2]) - omq.powi(3))
        * (b[1] * b[1] / 2.0 * (1.0 / oms + oms / b[2]) - oms.powi(3))
        * rho;

    Ok(BwgVarCov { var_cos1, var_sin1, var_cos2, var_sin2, cov_cos, cov_sin })
}

/// Which computation backs the moments entering the correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentEngine {
    /// Exact finite sums over the pmf table (the default).
    #[default]
    Brute,
    /// Closed-form expressions (BGWG-parameterized; integer locations are a
    /// special case).
    Closed,
}

const H2_TOLERANCE: f64 = 1e-14;

/// Trigonometric moments of a model through the selected engine.
pub fn trig_moments(model: &TorusModel, engine: MomentEngine) -> Result<TrigMoments> {
    match engine {
        MomentEngine::Brute => Ok(trig_moments_brute(&pmf_table(model)?)),
        MomentEngine::Closed => {
            let p = match model {
                TorusModel::Bgwg(p) => *p,
                TorusModel::Bwg(p) => BgwgParams::new(
                    p.grid,
                    p.alpha as f64,
                    p.beta as f64,
                    p.q,
                    p.s,
                    p.rho,
                    p.delta,
                )?,
            };
            trig_moments_closed(&p)
        }
    }
}

/// Jupp-Mardia squared circular correlation
/// tr(S11^-1 S12 S22^-1 S21) of the planar embedding.
pub fn jupp_mardia_rho1sq(model: &TorusModel, engine: MomentEngine) -> Result<f64> {
    if let TorusModel::Bwg(p) = model {
        if p.q == 0.0 || p.s == 0.0 {
            return Err(domain("a degenerate marginal (q = 0 or s = 0) has no correlation"));
        }
    }
    rho1sq_from_moments(&trig_moments(model, engine)?)
}

/// The correlation from an explicit moment set.
pub fn rho1sq_from_moments(m: &TrigMoments) -> Result<f64> {
    let a = m.e_cos1cos1 - m.e_cos1 * m.e_cos1; // var cos X1
    let b = m.e_sin1sin1 - m.e_sin1 * m.e_sin1; // var sin X1
    let c = m.e_cos1sin1 - m.e_cos1 * m.e_sin1;
    let d = m.e_cos2cos2 - m.e_cos2 * m.e_cos2;
    let e = m.e_sin2sin2 - m.e_sin2 * m.e_sin2;
    let f = m.e_cos2sin2 - m.e_cos2 * m.e_sin2;
    let gcc = m.e_cos1cos2 - m.e_cos1 * m.e_cos2;
    let gcs = m.e_cos1sin2 - m.e_cos1 * m.e_sin2;
    let gsc = m.e_sin1cos2 - m.e_sin1 * m.e_cos2;
    let gss = m.e_sin1sin2 - m.e_sin1 * m.e_sin2;

    let h2 = (a * b - c * c) * (d * e - f * f);
    if h2 <= H2_TOLERANCE {
        return Err(Error::Singular(format!(
            "embedded covariance determinant {h2} at or below tolerance {H2_TOLERANCE}"
        )));
    }
    let h1 = e * b * gcc * gcc
        + d * b * gcs * gcs
        + e * a * gsc * gsc
        + d * a * gss * gss
        - 2.0 * b * f * gcc * gcs
        - 2.0 * c * e * gcc * gsc
        + 2.0 * c * f * gcs * gsc
        + 2.0 * c * f * gcc * gss
        - 2.0 * c * d * gcs * gss
        - 2.0 * a * f * gsc * gss;
    Ok(h1 / h2)
}

/// The probe's verdict on one dependence-parameter sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub rho_grid: Vec<f64>,
    pub rho1sq: Vec<f64>,
    /// Non-decreasing over the rho >= 0 portion of the grid (1e-10 slack).
    pub nondecreasing_nonneg: bool,
    /// Non-increasing over the rho <= 0 portion of the grid (1e-10 slack).
    pub nonincreasing_nonpos: bool,
}

impl MonotonicityReport {
    pub fn passes(&self) -> bool {
        self.nondecreasing_nonneg && self.nonincreasing_nonpos
    }
}

const MONOTONE_SLACK: f64 = 1e-10;

/// Evaluate rho1sq along an ascending grid of dependence values, replacing
/// the model's own rho, and flag monotonicity on both sides of zero.
pub fn monotonicity_probe(base: &TorusModel, rho_grid: &[f64]) -> Result<MonotonicityReport> {
    if rho_grid.windows(2).any(|w| w[0] >= w[1]) && rho_grid.len() > 1 {
        return Err(domain("rho grid must be strictly ascending"));
    }
    if rho_grid.iter().any(|r| r.abs() > 1.0) {
        return Err(domain("rho grid entries must lie in [-1, 1]"));
    }
    let values: Vec<f64> = rho_grid
        .iter()
        .map(|&rho| jupp_mardia_rho1sq(&base.with_rho(rho)?, MomentEngine::Brute))
        .collect::<Result<_>>()?;
    let mut nondec = true;
    let mut noninc = true;
    for (w, v) in rho_grid.windows(2).zip(values.windows(2)) {
        if w[0] >= 0.0 && v[1] < v[0] - MONOTONE_SLACK {
            nondec = false;
        }
        if w[0] < 0.0 && w[1] <= 0.0 && v[1] > v[0] + MONOTONE_SLACK {
            noninc = false;
        }
    }
    Ok(MonotonicityReport {
        rho_grid: rho_grid.to_vec(),
        rho1sq: values,
        nondecreasing_nonneg: nondec,
        nonincreasing_nonpos: noninc,
    })
}
