//! Grid geometry for the discrete torus: index/angle arithmetic, the wrapped
//! offset shared by every distribution in this crate, and the 16-point
//! compass rose used by wind-direction data.
//!
//! Internally everything works on integer grid indices (plus real-valued
//! locations); angles are derived views only, so wrap arithmetic never
//! accumulates floating-point error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// The m1 x m2 lattice of equally spaced direction pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    m1: usize,
    m2: usize,
}

impl TorusGrid {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(domain("grid sizes must be at least 1"));
        }
        Ok(Self { m1, m2 })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    /// Number of grid cells, m1 * m2.
    pub fn len(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major iteration: k outer, l inner.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        let m2 = self.m2;
        (0..self.m1).flat_map(move |k| (0..m2).map(move |l| GridPoint { k, l }))
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.k < self.m1 && p.l < self.m2
    }

    /// Flat row-major cell index of a point (k outer, l inner, 0-based).
    pub fn flat_index(&self, p: GridPoint) -> usize {
        p.k * self.m2 + p.l
    }
}

/// One cell of the grid: 0 <= k < m1, 0 <= l < m2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub k: usize,
    pub l: usize,
}

impl GridPoint {
    pub fn new(k: usize, l: usize) -> Self {
        Self { k, l }
    }
}

/// Angle 2*pi*k/m of grid index k, in [0, 2*pi).
pub fn angle_of(k: usize, m: usize) -> Result<f64> {
    if m == 0 || k >= m {
        return Err(domain(format!("index {k} out of range for grid size {m}")));
    }
    Ok(2.0 * PI * k as f64 / m as f64)
}

/// Wrapped offset (k - alpha) mod m, reduced into [0, m).
///
/// `alpha` may be real-valued; when it is an integer the result is
/// integer-valued exactly.
pub fn zeta(k: usize, alpha: f64, m: usize) -> Result<f64> {
    if m == 0 || k >= m {
        return Err(domain(format!("index {k} out of range for grid size {m}")));
    }
    if !(0.0..(m as f64)).contains(&alpha) {
        return Err(domain(format!("location {alpha} outside [0, {m})")));
    }
    let z = (k as f64 - alpha).rem_euclid(m as f64);
    // rem_euclid can round up to m when k - alpha is a tiny negative number
    Ok(if z >= m as f64 { 0.0 } else { z })
}

/// Wrapped offset for integer locations, staying in integer arithmetic.
pub(crate) fn zeta_int(k: usize, alpha: usize, m: usize) -> usize {
    (k + m - alpha % m) % m
}

/// The sixteen compass labels in clockwise order, N first.
pub const COMPASS_LABELS: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW",
    "NNW",
];

/// Grid index 0..16 of a compass label, case-insensitive. N maps to 0 and
/// indices increase clockwise (NNE=1, ..., NNW=15).
pub fn compass_to_index(label: &str) -> Result<usize> {
    let needle = label.trim();
    COMPASS_LABELS
        .iter()
        .position(|l| l.eq_ignore_ascii_case(needle))
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

/// Compass label of a grid index in Z_16.
pub fn compass_label(index: usize) -> Result<&'static str> {
    COMPASS_LABELS
        .get(index)
        .copied()
        .ok_or_else(|| domain(format!("index {index} out of range for the 16-point rose")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(angle_of(0, 16).unwrap(), 0.0);
        assert_eq!(angle_of(8, 16).unwrap(), PI);
        assert!((angle_of(3, 5).unwrap() - 6.0 * PI / 5.0).abs() < 1e-15);
        assert!(angle_of(5, 5).is_err());
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(2, 2.0, 5).unwrap(), 0.0);
        assert_eq!(zeta(0, 3.0, 5).unwrap(), 2.0);
        assert!((zeta(1, 0.4, 16).unwrap() - 0.6).abs() < 1e-15);
        assert!(zeta(1, -0.1, 16).is_err());
        assert!(zeta(1, 16.0, 16).is_err());
    }

    #[test]
    fn zeta_identity_and_translation() {
        for m in [1usize, 2, 3, 7, 16] {
            for k in 0..m {
                assert_eq!(zeta(k, 0.0, m).unwrap(), k as f64);
                for alpha in 0..m {
                    for t in 0..m {
                        let lhs = zeta((k + t) % m, ((alpha + t) % m) as f64, m).unwrap();
                        let rhs = zeta(k, alpha as f64, m).unwrap();
                        assert_eq!(lhs, rhs);
                        assert_eq!(zeta_int(k, alpha, m) as f64, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn compass_round_trip() {
        assert_eq!(compass_to_index("N").unwrap(), 0);
        assert_eq!(compass_to_index("E").unwrap(), 4);
        assert_eq!(compass_to_index("NNW").unwrap(), 15);
        assert_eq!(compass_to_index("sse").unwrap(), 7);
        for i in 0..16 {
            assert_eq!(compass_to_index(compass_label(i).unwrap()).unwrap(), i);
        }
        match compass_to_index("NNNE") {
            Err(Error::UnknownLabel(t)) => assert_eq!(t, "NNNE"),
            other => panic!("expected unknown label, got {other:?}"),
        }
    }
}
