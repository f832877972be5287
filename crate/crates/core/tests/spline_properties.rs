mod common;

use common::DenseOracle;
use proptest::prelude::*;
use splinecolloc::basis::{monomial_eval, HermiteBasis1D, PartitionGrid};
use splinecolloc::osc1d::{poly_exact_coeffs, poly_ode_problem, solve_osc1d, InterpSystem};
use splinecolloc::osc2d::{tensor_collocation_matrix, CollocationField, SurfaceFitter};

/// Sorted breakpoints on [0, 1] with cell widths bounded below.
fn breakpoints() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.3f64..1.0, 1..8).prop_map(|w| {
        let total: f64 = w.iter().sum();
        let mut bp = vec![0.0];
        let mut acc = 0.0;
        for v in &w {
            acc += v / total;
            bp.push(acc);
        }
        *bp.last_mut().unwrap() = 1.0;
        bp
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interp_reproduces_polynomials(bp in breakpoints(), r in 2usize..6, coeffs in prop::collection::vec(-2.0f64..2.0, 6)) {
        let c = &coeffs[..=r];
        let grid = PartitionGrid::new(bp, r).unwrap();
        let pts = grid.sample_points();
        let sys = InterpSystem::new(grid, &pts).unwrap();
        let vals: Vec<f64> = pts.iter().map(|&x| monomial_eval(c, x, 0)).collect();
        let s = sys.solve(&vals).unwrap();
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            prop_assert!((s.evaluate(x, 0).unwrap() - monomial_eval(c, x, 0)).abs() <= 1e-11);
        }
        let (d0, d1) = s.continuity_defect();
        prop_assert!(d0 <= 1e-10 && d1 <= 1e-10);
    }

    #[test]
    fn ode_solution_is_c1_and_exact(cells in 1usize..8, r in 2usize..6) {
        let s = solve_osc1d(&poly_ode_problem(cells, r).unwrap()).unwrap();
        let c = poly_exact_coeffs(r);
        let (d0, d1) = s.continuity_defect();
        prop_assert!(d0 <= 1e-10 && d1 <= 1e-10);
        for k in 0..=40 {
            let x = k as f64 / 40.0;
            prop_assert!((s.evaluate(x, 0).unwrap() - monomial_eval(&c, x, 0)).abs() <= 1e-11);
        }
    }

    #[test]
    fn surface_reproduces_bicubics(bx in breakpoints(), by in breakpoints(), a in prop::collection::vec(-1.0f64..1.0, 16)) {
        let f = |x: f64, y: f64| {
            let mut v = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    v += a[4 * i + j] * x.powi(i as i32) * y.powi(j as i32);
                }
            }
            v
        };
        let field = CollocationField::sample(bx, by, f).unwrap();
        let s = SurfaceFitter::for_field(&field).unwrap().fit(field.values()).unwrap();
        prop_assert!(s.continuity_defect(5) <= 1e-10);
        for i in 0..=12 {
            for j in 0..=12 {
                let (x, y) = (i as f64 / 12.0, j as f64 / 12.0);
                prop_assert!((s.evaluate(x, y, 0, 0).unwrap() - f(x, y)).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn tensor_fit_matches_dense_system(bx in breakpoints(), by in breakpoints(), seed in any::<u64>()) {
        let field = CollocationField::sample(bx.clone(), by.clone(), |x, y| {
            ((seed % 97) as f64 * 0.01 + 3.0 * x).sin() * (2.0 * y + 0.5).cos() + x * y * y
        }).unwrap();
        let s = SurfaceFitter::for_field(&field).unwrap().fit(field.values()).unwrap();
        let hx = HermiteBasis1D::new(bx).unwrap();
        let hy = HermiteBasis1D::new(by).unwrap();
        let pts: Vec<(f64, f64)> = field.ys().iter().flat_map(|&y| field.xs().iter().map(move |&x| (x, y))).collect();
        let a = tensor_collocation_matrix(&hx, &hy, &pts).unwrap();
        let dense = DenseOracle::new(&a).solve(field.values().data());
        let scale = common::norm_inf(&dense).max(1.0);
        for (u, v) in s.coeffs().data().iter().zip(&dense) {
            prop_assert!((u - v).abs() <= 1e-9 * scale);
        }
    }
}
