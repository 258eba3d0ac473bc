use hp_robust::assembly::assemble;
use hp_robust::estimator::{check_weight_windows, estimate};
use hp_robust::polybasis::{gauss_legendre, legendre_differentiate, shape_functions, LegendreCoeffs};
use hp_robust::{solve, HpMesh, ProblemSpec};
use proptest::prelude::*;

/// Random hp-mesh on (-1, 1): sorted interior points and degrees.
fn mesh_strategy() -> impl Strategy<Value = HpMesh> {
    (prop::collection::vec(0.001f64..0.999, 1..12), prop::collection::vec(1usize..9, 13)).prop_map(|(mut cuts, degs)| {
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut breaks = vec![-1.0];
        breaks.extend(cuts.iter().map(|c| 2.0 * c - 1.0));
        breaks.push(1.0);
        let n = breaks.len() - 1;
        HpMesh::new(breaks, degs[..n].to_vec()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gauss_rules_are_exact(n in 1usize..21, seed in prop::collection::vec(-1.0f64..1.0, 41)) {
        let coeffs = &seed[..2 * n];
        let rule = gauss_legendre(n);
        let q = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { 2.0 * c / (k + 1) as f64 } else { 0.0 })
            .sum();
        let norm: f64 = coeffs.iter().map(|c| c.abs()).sum();
        prop_assert!((rule.integrate(-1.0, 1.0, q) - exact).abs() <= 1e-12 * norm);
    }

    #[test]
    fn differentiation_matches_finite_differences(
        c in prop::collection::vec(-1.0f64..1.0, 1..15),
        x in -0.99f64..0.99,
    ) {
        let poly = LegendreCoeffs::new(c);
        let d = legendre_differentiate(&poly);
        let h = 1e-5;
        let fd = (poly.eval(x + h) - poly.eval(x - h)) / (2.0 * h);
        let scale = poly.as_slice().iter().map(|v| v.abs()).sum::<f64>() * (poly.len() * poly.len()) as f64;
        prop_assert!((d.eval(x) - fd).abs() <= 1e-6 * scale.max(1.0), "{} vs {fd}", d.eval(x));
    }

    #[test]
    fn matrices_are_symmetric_and_definite_for_nonnegative_reaction(mesh in mesh_strategy(), e in -8i32..1) {
        let p = ProblemSpec::example1(10f64.powi(e)).unwrap();
        let sys = assemble(&mesh, &p);
        prop_assert!(sys.matrix.asymmetry() <= 1e-12 * sys.matrix.norm_inf());
        prop_assert!(sys.nonnegative_reaction);
        prop_assert!(sys.matrix.solve_cholesky(&sys.rhs).unwrap().is_some());
    }

    #[test]
    fn weight_windows_and_bounds(mesh in mesh_strategy(), e in -10i32..1, airy in any::<bool>()) {
        let eps = 10f64.powi(e);
        let p = if airy { ProblemSpec::example2(eps) } else { ProblemSpec::example1(eps) }.unwrap();
        let sol = solve(&mesh, &p).unwrap();
        let est = estimate(&sol, &p).unwrap();
        prop_assert!(check_weight_windows(&est, &mesh, eps).is_ok());
        if !airy {
            // d = 1: alpha <= min(h^2/(eps p^2), 1), so beta <= 3 sqrt(alpha/eps)
            // and eps^2 alpha gamma <= 3 (alpha eps)^{3/2} <= 3
            for (j, ind) in est.indicators.iter().enumerate() {
                prop_assert!(ind.alpha <= 1.0);
                for g in [est.gammas[j], est.gammas[j + 1]] {
                    let w = eps * eps * ind.alpha * g;
                    prop_assert!(w <= 3.0 * (ind.alpha * eps).powf(1.5) * (1.0 + 1e-12));
                    prop_assert!(w <= 3.0);
                }
            }
        }
    }
}

#[test]
fn shape_gram_matrices_are_positive_definite() {
    for p in 1..=20 {
        let rule = gauss_legendre(p + 2);
        let n = p + 1;
        let mut g = vec![vec![0.0; n]; n];
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let s = shape_functions(p, x).unwrap();
            for (row, va) in g.iter_mut().zip(&s.values) {
                for (entry, vb) in row.iter_mut().zip(&s.values) {
                    *entry += w * va * vb;
                }
            }
        }
        // dense Cholesky; a non-positive pivot means a singular Gram matrix
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let d = g[k][k] - (0..k).map(|m| g[k][m] * g[k][m]).sum::<f64>();
            assert!(d > 0.0, "p = {p}: pivot {d}");
            let d = d.sqrt();
            min_pivot = min_pivot.min(d);
            g[k][k] = d;
            for i in k + 1..n {
                g[i][k] = (g[i][k] - (0..k).map(|m| g[i][m] * g[k][m]).sum::<f64>()) / d;
            }
        }
        assert!(min_pivot > 1e-8, "p = {p}: {min_pivot}");
    }
}
