//! hp-meshes on an interval: breakpoints plus one polynomial degree per element.
//!
//! Elements are numbered from zero, left to right. Element `j` is
//! `(x_j, x_{j+1})`, so node `i` separates elements `i - 1` and `i`.

use crate::error::{HpError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HpMesh {
    breakpoints: Vec<f64>,
    degrees: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefinementKind {
    Bisect,
    RaiseDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RefinementDecision {
    pub element: usize,
    pub kind: RefinementKind,
}

/// One row of a mesh snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementRecord {
    pub x_left: f64,
    pub x_right: f64,
    pub degree: usize,
}

impl HpMesh {
    pub fn new(breakpoints: Vec<f64>, degrees: Vec<usize>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(HpError::InvalidInput(
                "a mesh needs at least two breakpoints".into(),
            ));
        }
        if degrees.len() != breakpoints.len() - 1 {
            return Err(HpError::InvalidInput(format!(
                "{} degrees given for {} elements",
                degrees.len(),
                breakpoints.len() - 1
            )));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(HpError::InvalidInput("non-finite breakpoint".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(HpError::InvalidInput(format!(
                "breakpoints not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
        if let Some(&p) = degrees.iter().find(|&&p| p == 0) {
            return Err(HpError::InvalidDegree(p));
        }
        Ok(Self {
            breakpoints,
            degrees,
        })
    }

    /// `n` equal elements of degree `p` on `(a, b)`.
    pub fn uniform(a: f64, b: f64, n: usize, p: usize) -> Result<Self> {
        if !(a < b) {
            return Err(HpError::Domain(format!("empty interval ({a}, {b})")));
        }
        if n == 0 {
            return Err(HpError::InvalidInput("element count must be positive".into()));
        }
        if p == 0 {
            return Err(HpError::InvalidDegree(0));
        }
        let h = (b - a) / n as f64;
        let mut breakpoints: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        breakpoints[n] = b;
        Self::new(breakpoints, vec![p; n])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn num_elements(&self) -> usize {
        self.degrees.len()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    pub fn element(&self, j: usize) -> (f64, f64) {
        (self.breakpoints[j], self.breakpoints[j + 1])
    }

    pub fn h(&self, j: usize) -> f64 {
        self.breakpoints[j + 1] - self.breakpoints[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.degrees[j]
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Free unknowns after eliminating the Dirichlet vertices:
    /// `(N - 1)` vertex functions plus `sum (p_j - 1)` bubbles.
    pub fn num_dofs(&self) -> usize {
        let n = self.num_elements();
        (n - 1) + self.degrees.iter().map(|p| p - 1).sum::<usize>()
    }

    /// Index of the element containing `x` (the left element at breakpoints,
    /// except at the left end of the domain).
    pub fn locate(&self, x: f64) -> Option<usize> {
        let (a, b) = self.domain();
        if x < a || x > b || x.is_nan() {
            return None;
        }
        let idx = self.breakpoints.partition_point(|&bp| bp < x);
        Some(idx.saturating_sub(1).min(self.num_elements() - 1))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.num_elements() {
            return Err(HpError::IndexOutOfRange {
                index: j,
                valid: format!("0..{}", self.num_elements()),
            });
        }
        Ok(())
    }

    /// Element `j` together with its neighbours.
    pub fn patch(&self, j: usize) -> Result<Vec<usize>> {
        self.check_index(j)?;
        let lo = j.saturating_sub(1);
        let hi = (j + 1).min(self.num_elements() - 1);
        Ok((lo..=hi).collect())
    }

    /// Spatial extent of [`HpMesh::patch`].
    pub fn patch_interval(&self, j: usize) -> Result<(f64, f64)> {
        let patch = self.patch(j)?;
        let first = patch[0];
        let last = patch[patch.len() - 1];
        Ok((self.breakpoints[first], self.breakpoints[last + 1]))
    }

    /// Smallest `mu >= 1` bounding the size and degree ratios of neighbours.
    pub fn shape_regularity(&self) -> f64 {
        let mut mu: f64 = 1.0;
        for j in 0..self.num_elements().saturating_sub(1) {
            let (h0, h1) = (self.h(j), self.h(j + 1));
            let (p0, p1) = (self.degrees[j] as f64, self.degrees[j + 1] as f64);
            mu = mu.max(h0 / h1).max(h1 / h0).max(p0 / p1).max(p1 / p0);
        }
        mu
    }

    /// Applies bisections and degree increments; elements are renumbered left
    /// to right afterwards.
    pub fn apply_refinements(&self, decisions: &[RefinementDecision]) -> Result<HpMesh> {
        let n = self.num_elements();
        let mut kinds: Vec<Option<RefinementKind>> = vec![None; n];
        for d in decisions {
            self.check_index(d.element)?;
            if kinds[d.element].replace(d.kind).is_some() {
                return Err(HpError::InvalidInput(format!(
                    "more than one refinement decision for element {}",
                    d.element
                )));
            }
        }
        let bisections = kinds
            .iter()
            .filter(|k| matches!(k, Some(RefinementKind::Bisect)))
            .count();
        let mut breakpoints = Vec::with_capacity(n + bisections + 1);
        let mut degrees = Vec::with_capacity(n + bisections);
        breakpoints.push(self.breakpoints[0]);
        for (j, kind) in kinds.iter().enumerate() {
            let (xl, xr) = self.element(j);
            let p = self.degrees[j];
            match kind {
                Some(RefinementKind::Bisect) => {
                    breakpoints.push(0.5 * (xl + xr));
                    breakpoints.push(xr);
                    degrees.push(p);
                    degrees.push(p);
                }
                Some(RefinementKind::RaiseDegree) => {
                    breakpoints.push(xr);
                    degrees.push(p + 1);
                }
                None => {
                    breakpoints.push(xr);
                    degrees.push(p);
                }
            }
        }
        HpMesh::new(breakpoints, degrees)
    }

    pub fn records(&self) -> impl Iterator<Item = ElementRecord> + '_ {
        (0..self.num_elements()).map(move |j| ElementRecord {
            x_left: self.breakpoints[j],
            x_right: self.breakpoints[j + 1],
            degree: self.degrees[j],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_examples() {
        let m = HpMesh::uniform(-1.0, 1.0, 2, 1).unwrap();
        assert_eq!(m.breakpoints(), &[-1.0, 0.0, 1.0]);
        assert_eq!(m.degrees(), &[1, 1]);

        let m = HpMesh::uniform(-1.0, 1.0, 10, 1).unwrap();
        assert_eq!(m.breakpoints().len(), 11);
        for j in 0..10 {
            assert!((m.h(j) - 0.2).abs() < 1e-15);
        }

        let m = HpMesh::uniform(0.0, 1.0, 1, 3).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.degrees(), &[3]);
        assert!(HpMesh::uniform(1.0, 1.0, 3, 1).is_err());
        assert!(HpMesh::uniform(0.0, 1.0, 3, 0).is_err());
    }

    #[test]
    fn patches() {
        let m = HpMesh::uniform(0.0, 1.0, 10, 1).unwrap();
        assert_eq!(m.patch(4).unwrap(), vec![3, 4, 5]);
        assert_eq!(m.patch(0).unwrap(), vec![0, 1]);
        assert_eq!(m.patch(9).unwrap(), vec![8, 9]);
        assert!(m.patch(10).is_err());
        let single = HpMesh::uniform(0.0, 1.0, 1, 1).unwrap();
        assert_eq!(single.patch(0).unwrap(), vec![0]);
        assert_eq!(m.patch_interval(4).unwrap().0, m.breakpoints()[3]);
    }

    #[test]
    fn regularity_examples() {
        assert!((HpMesh::uniform(0.0, 3.0, 7, 4).unwrap().shape_regularity() - 1.0).abs() < 1e-14);
        let m = HpMesh::new(vec![0.0, 0.5, 0.75], vec![1, 1]).unwrap();
        assert_eq!(m.shape_regularity(), 2.0);
        let m = HpMesh::new(vec![0.0, 1.0, 2.0], vec![2, 6]).unwrap();
        assert_eq!(m.shape_regularity(), 3.0);
    }

    #[test]
    fn refinement_examples() {
        let m = HpMesh::uniform(-1.0, 1.0, 1, 3).unwrap();
        let r = m
            .apply_refinements(&[RefinementDecision {
                element: 0,
                kind: RefinementKind::Bisect,
            }])
            .unwrap();
        assert_eq!(r.breakpoints(), &[-1.0, 0.0, 1.0]);
        assert_eq!(r.degrees(), &[3, 3]);

        let m = HpMesh::uniform(-1.0, 1.0, 2, 1).unwrap();
        let r = m
            .apply_refinements(&[RefinementDecision {
                element: 0,
                kind: RefinementKind::RaiseDegree,
            }])
            .unwrap();
        assert_eq!(r.degrees(), &[2, 1]);
        assert_eq!(m.apply_refinements(&[]).unwrap(), m);

        let dup = [
            RefinementDecision {
                element: 1,
                kind: RefinementKind::RaiseDegree,
            },
            RefinementDecision {
                element: 1,
                kind: RefinementKind::Bisect,
            },
        ];
        assert!(matches!(
            m.apply_refinements(&dup),
            Err(HpError::InvalidInput(_))
        ));
    }

    #[test]
    fn dof_count() {
        let m = HpMesh::new(vec![0.0, 1.0, 2.0, 3.0], vec![1, 3, 2]).unwrap();
        // 2 interior vertices, bubbles 0 + 2 + 1
        assert_eq!(m.num_dofs(), 5);
        assert_eq!(HpMesh::uniform(0.0, 1.0, 1, 3).unwrap().num_dofs(), 2);
    }

    #[test]
    fn locate_points() {
        let m = HpMesh::uniform(0.0, 1.0, 4, 1).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.3), Some(1));
        assert_eq!(m.locate(0.25), Some(0));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.5), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn refinement_sequences_stay_valid(
            steps in prop::collection::vec(prop::collection::vec((0usize..64, any::<bool>()), 0..6), 1..8)
        ) {
            let mut mesh = HpMesh::uniform(-1.0, 1.0, 3, 1).unwrap();
            for step in steps {
                let n = mesh.num_elements();
                let mut seen = std::collections::HashSet::new();
                let decisions: Vec<_> = step
                    .into_iter()
                    .map(|(j, b)| (j % n, b))
                    .filter(|(j, _)| seen.insert(*j))
                    .map(|(element, b)| RefinementDecision {
                        element,
                        kind: if b { RefinementKind::Bisect } else { RefinementKind::RaiseDegree },
                    })
                    .collect();
                let old = mesh.clone();
                mesh = mesh.apply_refinements(&decisions).unwrap();
                prop_assert!(mesh.breakpoints().windows(2).all(|w| w[0] < w[1]));
                prop_assert!(mesh.degrees().iter().all(|&p| p >= 1));
                prop_assert_eq!(mesh.domain(), old.domain());
                // bisected children are exact halves
                let mut k = 0;
                for j in 0..old.num_elements() {
                    let kind = decisions.iter().find(|d| d.element == j).map(|d| d.kind);
                    if kind == Some(RefinementKind::Bisect) {
                        let half = old.h(j) / 2.0;
                        // rounding of the midpoint scales with |x|, not with h
                        let (xl, xr) = old.element(j);
                        let tol = 4.0 * f64::EPSILON * xl.abs().max(xr.abs());
                        prop_assert!((mesh.h(k) - half).abs() <= tol);
                        prop_assert!((mesh.h(k + 1) - half).abs() <= tol);
                        k += 2;
                    } else {
                        k += 1;
                    }
                }
            }
        }
    }
}
