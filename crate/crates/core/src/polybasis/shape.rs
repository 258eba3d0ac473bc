//! Hierarchical shape functions: two hat functions plus integrated-Legendre bubbles.
//!
//! Local ordering is `[N_0, N_1, N_2, .., N_p]` with
//! `N_0 = (1 - xi)/2`, `N_1 = (1 + xi)/2` and, for `k >= 2`,
//! `N_k(xi) = int_{-1}^{xi} P_{k-1} = (P_k(xi) - P_{k-2}(xi)) / (2k - 1)`.

use super::legendre::{fill_legendre, LegendreCoeffs};
use crate::error::{HpError, Result};

/// Values and reference derivatives of the `p + 1` local shape functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

pub fn shape_functions(p: usize, xi: f64) -> Result<ShapeValues> {
    if p == 0 {
        return Err(HpError::InvalidDegree(p));
    }
    if !(xi.abs() <= 1.0 + 1e-12) {
        return Err(HpError::Domain(format!(
            "shape function point {xi} outside [-1, 1]"
        )));
    }
    let mut values = vec![0.0; p + 1];
    let mut derivatives = vec![0.0; p + 1];
    let mut leg = vec![0.0; p + 1];
    fill_shape(xi, &mut leg, &mut values, &mut derivatives);
    Ok(ShapeValues {
        values,
        derivatives,
    })
}

/// Allocation-free kernel. All slices must have length `p + 1`.
pub(crate) fn fill_shape(xi: f64, leg: &mut [f64], values: &mut [f64], derivs: &mut [f64]) {
    let n = values.len();
    fill_legendre(xi, leg);
    values[0] = 0.5 * (1.0 - xi);
    values[1] = 0.5 * (1.0 + xi);
    derivs[0] = -0.5;
    derivs[1] = 0.5;
    for k in 2..n {
        values[k] = (leg[k] - leg[k - 2]) / (2 * k - 1) as f64;
        derivs[k] = leg[k - 1];
    }
}

/// Converts shape-function coefficients into Legendre coefficients.
pub fn shape_to_legendre(shape_coeffs: &[f64]) -> LegendreCoeffs {
    let n = shape_coeffs.len();
    let mut leg = vec![0.0; n.max(2)];
    if n >= 1 {
        leg[0] += 0.5 * shape_coeffs[0];
        leg[1] -= 0.5 * shape_coeffs[0];
    }
    if n >= 2 {
        leg[0] += 0.5 * shape_coeffs[1];
        leg[1] += 0.5 * shape_coeffs[1];
    }
    for k in 2..n {
        let s = shape_coeffs[k] / (2 * k - 1) as f64;
        leg[k] += s;
        leg[k - 2] -= s;
    }
    LegendreCoeffs::new(leg)
}
