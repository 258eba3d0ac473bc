use crate::assembly::banded::SolveReport;
use crate::mesh::HpMesh;
use crate::polybasis::LegendreCoeffs;

/// Discrete solution: per element, Legendre coefficients of `u_hp` in the
/// reference coordinate `xi = (2x - x_l - x_r) / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HpSolution {
    mesh: HpMesh,
    element_coeffs: Vec<LegendreCoeffs>,
    report: Option<SolveReport>,
}

impl HpSolution {
    /// Panics when the number of coefficient vectors does not match the mesh.
    pub fn from_coeffs(mesh: HpMesh, element_coeffs: Vec<LegendreCoeffs>) -> Self {
        assert_eq!(mesh.num_elements(), element_coeffs.len());
        Self {
            mesh,
            element_coeffs,
            report: None,
        }
    }

    pub(crate) fn with_report(mut self, report: SolveReport) -> Self {
        self.report = Some(report);
        self
    }

    pub fn mesh(&self) -> &HpMesh {
        &self.mesh
    }

    pub fn coeffs(&self, j: usize) -> &LegendreCoeffs {
        &self.element_coeffs[j]
    }

    pub fn all_coeffs(&self) -> &[LegendreCoeffs] {
        &self.element_coeffs
    }

    pub fn report(&self) -> Option<&SolveReport> {
        self.report.as_ref()
    }

    fn to_reference(&self, j: usize, x: f64) -> f64 {
        let (xl, xr) = self.mesh.element(j);
        ((2.0 * x - xl - xr) / (xr - xl)).clamp(-1.0, 1.0)
    }

    /// Physical derivative of order `order` on element `j`, as Legendre
    /// coefficients in the reference coordinate.
    pub fn derivative_coeffs(&self, j: usize, order: usize) -> LegendreCoeffs {
        let scale = 2.0 / self.mesh.h(j);
        let mut c = self.element_coeffs[j].clone();
        for _ in 0..order {
            c = c.differentiate();
            c.scale(scale);
        }
        c
    }

    pub fn eval_on(&self, j: usize, x: f64) -> f64 {
        self.element_coeffs[j].eval(self.to_reference(j, x))
    }

    pub fn derivative_on(&self, j: usize, x: f64) -> f64 {
        let xi = self.to_reference(j, x);
        self.element_coeffs[j].differentiate().eval(xi) * 2.0 / self.mesh.h(j)
    }

    /// `u_hp(x)`, or `None` outside the domain.
    pub fn eval(&self, x: f64) -> Option<f64> {
        self.mesh.locate(x).map(|j| self.eval_on(j, x))
    }

    /// One-sided derivatives of element `j` at its left and right ends.
    pub fn end_derivatives(&self, j: usize) -> (f64, f64) {
        let c = &self.element_coeffs[j];
        let s = 2.0 / self.mesh.h(j);
        (c.derivative_left() * s, c.derivative_right() * s)
    }

    /// `(x, u_hp(x))` at `per_element` equispaced points per element,
    /// endpoints included, so shared nodes appear twice.
    pub fn sample(&self, per_element: usize) -> Vec<(f64, f64)> {
        let m = per_element.max(2);
        let mut out = Vec::with_capacity(m * self.mesh.num_elements());
        for j in 0..self.mesh.num_elements() {
            let c = &self.element_coeffs[j];
            let (xl, xr) = self.mesh.element(j);
            for k in 0..m {
                let xi = -1.0 + 2.0 * k as f64 / (m - 1) as f64;
                let x = match k {
                    0 => xl,
                    _ if k == m - 1 => xr,
                    _ => 0.5 * (xl + xr) + 0.5 * (xr - xl) * xi,
                };
                out.push((x, c.eval(xi)));
            }
        }
        out
    }

    /// Largest mismatch of left/right values at interior nodes and of the
    /// values at the domain ends.
    pub fn continuity_defect(&self) -> (f64, f64) {
        let n = self.mesh.num_elements();
        let interior = (1..n)
            .map(|i| {
                (self.element_coeffs[i - 1].value_right() - self.element_coeffs[i].value_left())
                    .abs()
            })
            .fold(0.0, f64::max);
        let boundary = self.element_coeffs[0]
            .value_left()
            .abs()
            .max(self.element_coeffs[n - 1].value_right().abs());
        (interior, boundary)
    }
}
