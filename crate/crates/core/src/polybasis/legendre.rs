//! Legendre polynomials on the reference interval `[-1, 1]`.

use crate::error::{HpError, Result};

const DOMAIN_SLACK: f64 = 1e-12;

/// Values of `P_0..=P_p` at `x`, by the three-term recurrence
/// `(k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}`.
pub fn legendre_eval(p: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.abs() <= 1.0 + DOMAIN_SLACK) {
        return Err(HpError::Domain(format!(
            "Legendre evaluation point {x} outside [-1, 1]"
        )));
    }
    let mut values = vec![0.0; p + 1];
    fill_legendre(x, &mut values);
    Ok(values)
}

/// Recurrence without the domain check; fills `out[k] = P_k(x)`.
pub(crate) fn fill_legendre(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 1..out.len().saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Coefficients of a polynomial in the Legendre basis on `[-1, 1]`;
/// `coeffs[k]` multiplies `P_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LegendreCoeffs {
    coeffs: Vec<f64>,
}

impl LegendreCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: vec![0.0; len],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Nominal degree, `len - 1`.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Clenshaw summation of `sum_k c_k P_k(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.coeffs.len();
        if n == 0 {
            return 0.0;
        }
        // b_k = c_k + alpha_k(x) b_{k+1} + beta_{k+1} b_{k+2},
        // alpha_k = (2k+1) x / (k+1), beta_k = -k / (k+1).
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for k in (0..n).rev() {
            let kf = k as f64;
            let alpha = (2.0 * kf + 1.0) * x / (kf + 1.0);
            let beta = -(kf + 1.0) / (kf + 2.0);
            let b0 = self.coeffs[k] + alpha * b1 + beta * b2;
            b2 = b1;
            b1 = b0;
        }
        b1
    }

    /// Legendre coefficients of the derivative with respect to the reference
    /// coordinate. The output has `max(len - 1, 1)` entries.
    pub fn differentiate(&self) -> LegendreCoeffs {
        legendre_differentiate(self)
    }

    /// Value at `+1`, i.e. the coefficient sum.
    pub fn value_right(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Value at `-1`.
    pub fn value_left(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { *c } else { -*c })
            .sum()
    }

    /// Derivative at `+1` using `P_k'(1) = k(k+1)/2`.
    pub fn derivative_right(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (k * (k + 1)) as f64 / 2.0)
            .sum()
    }

    /// Derivative at `-1` using `P_k'(-1) = (-1)^{k+1} k(k+1)/2`.
    pub fn derivative_left(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let v = c * (k * (k + 1)) as f64 / 2.0;
                if k % 2 == 0 {
                    -v
                } else {
                    v
                }
            })
            .sum()
    }

    /// `int_{-1}^{1} q(x)^2 dx` from orthogonality, `||P_k||^2 = 2/(2k+1)`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * c * 2.0 / (2 * k + 1) as f64)
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= factor);
    }
}

impl From<Vec<f64>> for LegendreCoeffs {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

/// Derivative in the Legendre basis via the backward recurrence
/// `d_{k-1} = (2k-1) (c_k + d_{k+1} / (2k+3))`.
pub fn legendre_differentiate(c: &LegendreCoeffs) -> LegendreCoeffs {
    let c = c.as_slice();
    let n = c.len();
    if n <= 1 {
        return LegendreCoeffs::zeros(1);
    }
    let mut d = vec![0.0; n - 1];
    for k in (1..n).rev() {
        let next = d.get(k + 1).copied().unwrap_or(0.0);
        d[k - 1] = (2 * k - 1) as f64 * (c[k] + next / (2 * k + 3) as f64);
    }
    LegendreCoeffs::new(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_order_values() {
        assert_eq!(legendre_eval(0, 0.7).unwrap(), vec![1.0]);
        assert_eq!(legendre_eval(1, 0.5).unwrap(), vec![1.0, 0.5]);
        let v = legendre_eval(2, 0.5).unwrap();
        assert_abs_diff_eq!(v[2], -0.125, epsilon = 1e-15);
    }

    #[test]
    fn unit_at_one() {
        let v = legendre_eval(30, 1.0).unwrap();
        for pk in v {
            assert_abs_diff_eq!(pk, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_outside_domain() {
        assert!(matches!(legendre_eval(3, 1.1), Err(HpError::Domain(_))));
        assert!(legendre_eval(3, 1.0 + 1e-13).is_ok());
        assert!(legendre_eval(3, f64::NAN).is_err());
    }

    #[test]
    fn differentiate_examples() {
        let d = legendre_differentiate(&LegendreCoeffs::new(vec![5.0]));
        assert_eq!(d.as_slice(), &[0.0]);
        let d = legendre_differentiate(&LegendreCoeffs::new(vec![0.0, 1.0]));
        assert_eq!(d.as_slice(), &[1.0]);
        let d = legendre_differentiate(&LegendreCoeffs::new(vec![0.0, 0.0, 1.0]));
        assert_eq!(d.as_slice(), &[0.0, 3.0]);
    }

    #[test]
    fn differentiate_p3_and_p4() {
        // P_3' = 5 P_2 + P_0, P_4' = 7 P_3 + 3 P_1
        let d = legendre_differentiate(&LegendreCoeffs::new(vec![0.0, 0.0, 0.0, 1.0]));
        assert_eq!(d.as_slice(), &[1.0, 0.0, 5.0]);
        let d = legendre_differentiate(&LegendreCoeffs::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]));
        assert_eq!(d.as_slice(), &[0.0, 3.0, 0.0, 7.0]);
    }

    #[test]
    fn clenshaw_matches_recurrence() {
        let c = LegendreCoeffs::new(vec![0.3, -1.2, 0.5, 2.0, -0.7, 0.1]);
        for &x in &[-1.0, -0.3, 0.0, 0.42, 1.0] {
            let p = legendre_eval(5, x).unwrap();
            let direct: f64 = p.iter().zip(c.as_slice()).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(c.eval(x), direct, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(c.eval(1.0), c.value_right(), epsilon = 1e-13);
        assert_abs_diff_eq!(c.eval(-1.0), c.value_left(), epsilon = 1e-13);
        let d = c.differentiate();
        assert_abs_diff_eq!(d.eval(1.0), c.derivative_right(), epsilon = 1e-12);
        assert_abs_diff_eq!(d.eval(-1.0), c.derivative_left(), epsilon = 1e-12);
    }
}
