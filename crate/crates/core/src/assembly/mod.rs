//! Galerkin discretization of `eps (u', v') + (d u, v) = (f, v)` on an hp-mesh.
//!
//! Unknowns are ordered element by element: the bubbles of element 0, the
//! vertex shared by elements 0 and 1, the bubbles of element 1, and so on.
//! Every element then touches a contiguous block of at most `p_j + 1`
//! unknowns and the matrix bandwidth is bounded by `max p_j`.

mod banded;
mod solution;

pub use banded::{BandMatrix, Factorization, SolveReport, PIVOT_TOL};
pub use solution::HpSolution;

use crate::error::Result;
use crate::mesh::HpMesh;
use crate::polybasis::{element_quadrature_points, fill_shape, gauss_legendre_cached, QuadratureRule};
use crate::problem::ProblemSpec;

const RESIDUAL_TOL: f64 = 1e-10;

/// Dense local matrix (row-major) and load vector in local shape ordering
/// `[left hat, right hat, bubbles...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSystem {
    pub degree: usize,
    pub matrix: Vec<f64>,
    pub load: Vec<f64>,
}

impl ElementSystem {
    pub fn entry(&self, i: usize, k: usize) -> f64 {
        self.matrix[i * (self.degree + 1) + k]
    }
}

/// Local matrix `eps int N_i' N_k' + int d N_i N_k` and load `int f N_i`.
pub fn element_system(
    element: (f64, f64),
    degree: usize,
    problem: &ProblemSpec,
    quad: &QuadratureRule,
) -> ElementSystem {
    element_system_with(
        element,
        degree,
        problem.epsilon(),
        &|x| problem.d(x),
        &|x| (problem.f(x), 0.0),
        quad,
    )
}

/// Generalized local system. `load(x)` returns `(g0, g1)` for the functional
/// `v -> int g0 v + g1 v'`.
pub fn element_system_with(
    (xl, xr): (f64, f64),
    degree: usize,
    epsilon: f64,
    d: &dyn Fn(f64) -> f64,
    load: &dyn Fn(f64) -> (f64, f64),
    quad: &QuadratureRule,
) -> ElementSystem {
    let n = degree + 1;
    let h = xr - xl;
    let jac = 0.5 * h;
    let dscale = 2.0 / h;
    let mut matrix = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut leg = vec![0.0; n];
    let mut val = vec![0.0; n];
    let mut der = vec![0.0; n];
    for (xi, w) in quad.iter() {
        let x = 0.5 * (xl + xr) + jac * xi;
        fill_shape(xi, &mut leg, &mut val, &mut der);
        let wd = w * jac * d(x);
        let ws = w * jac * epsilon * dscale * dscale;
        let (g0, g1) = load(x);
        for i in 0..n {
            for k in i..n {
                let v = ws * der[i] * der[k] + wd * val[i] * val[k];
                matrix[i * n + k] += v;
            }
            rhs[i] += w * jac * (g0 * val[i] + g1 * der[i] * dscale);
        }
    }
    for i in 0..n {
        for k in 0..i {
            matrix[i * n + k] = matrix[k * n + i];
        }
    }
    ElementSystem {
        degree,
        matrix,
        load: rhs,
    }
}

/// Local-to-global map; `None` marks the eliminated Dirichlet vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    element_dofs: Vec<Vec<Option<usize>>>,
    num_dofs: usize,
}

impl DofMap {
    pub fn new(mesh: &HpMesh) -> Self {
        let n = mesh.num_elements();
        let mut element_dofs = Vec::with_capacity(n);
        let mut next = 0usize;
        let mut left_vertex: Option<usize> = None;
        for j in 0..n {
            let p = mesh.degree(j);
            let mut local = vec![None; p + 1];
            local[0] = left_vertex;
            for slot in local.iter_mut().skip(2) {
                *slot = Some(next);
                next += 1;
            }
            if j + 1 < n {
                local[1] = Some(next);
                left_vertex = Some(next);
                next += 1;
            }
            element_dofs.push(local);
        }
        Self {
            element_dofs,
            num_dofs: next,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn element(&self, j: usize) -> &[Option<usize>] {
        &self.element_dofs[j]
    }

    pub fn bandwidth(&self) -> usize {
        self.element_dofs
            .iter()
            .map(|dofs| {
                let it = dofs.iter().flatten();
                match (it.clone().min(), it.max()) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub mesh: HpMesh,
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
    pub dof_map: DofMap,
    /// `d >= 0` at every quadrature point; selects the Cholesky path.
    pub nonnegative_reaction: bool,
}

/// Assembles the Galerkin system for `problem` on `mesh` with
/// `p_j + 10` Gauss points per element.
pub fn assemble(mesh: &HpMesh, problem: &ProblemSpec) -> GlobalSystem {
    assemble_with(
        mesh,
        problem.epsilon(),
        &|x| problem.d(x),
        &|x| (problem.f(x), 0.0),
        0,
    )
}

/// Assembly with a general reaction coefficient and load density (see
/// [`element_system_with`]); `extra_points` adds Gauss points per element.
pub fn assemble_with(
    mesh: &HpMesh,
    epsilon: f64,
    d: &dyn Fn(f64) -> f64,
    load: &dyn Fn(f64) -> (f64, f64),
    extra_points: usize,
) -> GlobalSystem {
    let dof_map = DofMap::new(mesh);
    let n = dof_map.num_dofs();
    let bw = dof_map.bandwidth();
    let mut matrix = BandMatrix::zeros(n, bw, bw);
    let mut rhs = vec![0.0; n];
    let nonnegative = std::cell::Cell::new(true);
    let d_checked = |x: f64| {
        let v = d(x);
        if v < 0.0 {
            nonnegative.set(false);
        }
        v
    };
    for j in 0..mesh.num_elements() {
        let p = mesh.degree(j);
        let quad = gauss_legendre_cached(element_quadrature_points(p) + extra_points);
        let local = element_system_with(mesh.element(j), p, epsilon, &d_checked, load, &quad);
        let dofs = dof_map.element(j);
        for (a, ga) in dofs.iter().enumerate() {
            let Some(ga) = *ga else { continue };
            rhs[ga] += local.load[a];
            for (b, gb) in dofs.iter().enumerate() {
                if let Some(gb) = *gb {
                    matrix.add(ga, gb, local.entry(a, b));
                }
            }
        }
    }
    GlobalSystem {
        mesh: mesh.clone(),
        matrix,
        rhs,
        dof_map,
        nonnegative_reaction: nonnegative.get(),
    }
}

fn direct_solve(system: &GlobalSystem, b: &[f64]) -> Result<(Vec<f64>, f64, Factorization)> {
    if system.nonnegative_reaction {
        if let Some((x, cond)) = system.matrix.solve_cholesky(b)? {
            return Ok((x, cond, Factorization::Cholesky));
        }
    }
    let (x, cond) = system.matrix.solve_lu(b)?;
    Ok((x, cond, Factorization::PivotedLu))
}

/// Direct banded solve followed by conversion to per-element Legendre
/// coefficients. One step of iterative refinement is applied if the relative
/// residual exceeds `1e-10`.
pub fn solve_system(system: &GlobalSystem) -> Result<HpSolution> {
    let n = system.dof_map.num_dofs();
    let (x, report) = if n == 0 {
        (
            Vec::new(),
            SolveReport {
                method: Factorization::Cholesky,
                relative_residual: 0.0,
                condition_estimate: 1.0,
            },
        )
    } else {
        let (mut x, cond, method) = direct_solve(system, &system.rhs)?;
        let mut res = banded::relative_residual(&system.matrix, &x, &system.rhs);
        if res > RESIDUAL_TOL {
            let ax = system.matrix.matvec(&x);
            let r: Vec<f64> = system.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let (dx, _, _) = direct_solve(system, &r)?;
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            res = banded::relative_residual(&system.matrix, &x, &system.rhs);
        }
        (
            x,
            SolveReport {
                method,
                relative_residual: res,
                condition_estimate: cond,
            },
        )
    };
    let mesh = &system.mesh;
    let coeffs = (0..mesh.num_elements())
        .map(|j| {
            let shape: Vec<f64> = system
                .dof_map
                .element(j)
                .iter()
                .map(|g| g.map_or(0.0, |g| x[g]))
                .collect();
            crate::polybasis::shape_to_legendre(&shape)
        })
        .collect();
    Ok(HpSolution::from_coeffs(mesh.clone(), coeffs).with_report(report))
}

/// Assemble and solve in one step.
pub fn solve(mesh: &HpMesh, problem: &ProblemSpec) -> Result<HpSolution> {
    solve_system(&assemble(mesh, problem))
}
