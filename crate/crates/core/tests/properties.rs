use std::sync::Arc;

use dgapost_core::adapt::mark_indicators;
use dgapost_core::coeff::ScalarFn;
use dgapost_core::estimate::estimate_energy_laplace;
use dgapost_core::mesh::{make_unit_square, signed_area, Mesh};
use dgapost_core::quadrature::{integrate_cell, triangle_rule};
use dgapost_core::reconstruct::oswald;
use dgapost_core::space::{FeFunction, FeSpace};
use proptest::prelude::*;

fn triangle() -> impl Strategy<Value = [[f64; 2]; 3]> {
    prop::array::uniform3(prop::array::uniform2(-2.0f64..2.0))
        .prop_filter("non-degenerate", |p| signed_area(*p).abs() > 1e-2)
        .prop_map(|mut p| {
            if signed_area(p) < 0.0 {
                p.swap(1, 2);
            }
            p
        })
}

fn broken(s: &FeSpace, values: &[f64]) -> FeFunction {
    let c = (0..s.num_dofs())
        .map(|i| values[i % values.len()] * (1.0 + i as f64).sqrt())
        .collect();
    FeFunction::new(s.clone(), c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_integrates_quadratics_on_any_triangle(p in triangle(), c in prop::array::uniform3(-3.0f64..3.0)) {
        let mesh = Mesh::new(p.to_vec(), vec![[0, 1, 2]]).unwrap();
        let area = signed_area(p);
        let x: Vec<f64> = p.iter().map(|v| v[0]).collect();
        let sq = x.iter().map(|a| a * a).sum::<f64>() + x[0] * x[1] + x[0] * x[2] + x[1] * x[2];
        let centroid = mesh.centroid(0);
        let exact = area * (c[0] + c[1] * centroid[0] + c[2] * centroid[1]) + area / 6.0 * sq;
        for s in 2..=6 {
            let q = integrate_cell(|y| c[0] + c[1] * y[0] + c[2] * y[1] + y[0] * y[0], &mesh, 0, &triangle_rule(s).unwrap());
            prop_assert!((q - exact).abs() <= 1e-11 * (1.0 + exact.abs()), "s={s}: {q} vs {exact}");
        }
    }

    #[test]
    fn averaging_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1usize..=3,
                           u in prop::collection::vec(-1.0f64..1.0, 7), w in prop::collection::vec(-1.0f64..1.0, 5)) {
        let s = FeSpace::dg(Arc::new(make_unit_square(3).unwrap()), k).unwrap();
        let (u, w) = (broken(&s, &u), broken(&s, &w));
        let lhs = oswald(&u.axpby(a, &w, b).unwrap()).unwrap();
        let (eu, ew) = (oswald(&u).unwrap(), oswald(&w).unwrap());
        for ((l, x), y) in lhs.coeffs().iter().zip(eu.coeffs()).zip(ew.coeffs()) {
            prop_assert!((l - (a * x + b * y)).abs() < 1e-12);
        }
    }

    #[test]
    fn averaging_is_idempotent(k in 1usize..=3, u in prop::collection::vec(-1.0f64..1.0, 6)) {
        let s = FeSpace::dg(Arc::new(make_unit_square(3).unwrap()), k).unwrap();
        let e = oswald(&broken(&s, &u)).unwrap();
        let ee = oswald(&e.to_dg().unwrap()).unwrap();
        for (x, y) in e.coeffs().iter().zip(ee.coeffs()) {
            prop_assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn energy_estimator_is_homogeneous(scale in 0.01f64..100.0, u in prop::collection::vec(-1.0f64..1.0, 5)) {
        let u = broken(&FeSpace::dg(Arc::new(make_unit_square(2).unwrap()), 1).unwrap(), &u);
        let f: ScalarFn = Arc::new(|p| p[0] - p[1] * p[1]);
        let g: ScalarFn = { let f = f.clone(); Arc::new(move |p| scale * f(p)) };
        let base = estimate_energy_laplace(&u, &f, 10.0).unwrap();
        let scaled = estimate_energy_laplace(&u.axpby(scale, &u, 0.0).unwrap(), &g, 10.0).unwrap();
        prop_assert!((scaled.total() - scale * base.total()).abs() <= 1e-10 * scaled.total());
    }

    #[test]
    fn refinement_stays_conforming(marked in prop::collection::vec(0usize..32, 1..8), rounds in 1usize..4) {
        let mut mesh = make_unit_square(4).unwrap();
        let initial = mesh.shape_regularity();
        for r in 0..rounds {
            let cells: Vec<usize> = marked.iter().map(|&c| (c * (r + 1)) % mesh.num_cells()).collect();
            let next = mesh.refine(&cells).unwrap();
            prop_assert!(next.num_cells() > mesh.num_cells());
            prop_assert!(next.is_conforming());
            prop_assert!((next.total_area() - 1.0).abs() < 1e-13);
            prop_assert!(next.shape_regularity() >= 0.5 * initial);
            mesh = next;
        }
    }

    #[test]
    fn marking_respects_thresholds(eta in prop::collection::vec(0.0f64..1.0, 1..50), theta in 0.05f64..1.0) {
        let m = mark_indicators(&eta, theta, 0.0).unwrap();
        let top = eta.iter().copied().fold(0.0, f64::max);
        for (i, &e) in eta.iter().enumerate() {
            prop_assert_eq!(m.refine.contains(&i), e >= theta * top);
        }
        prop_assert!(m.coarsen.iter().all(|&i| eta[i] <= 0.0));
    }
}

#[test]
fn averaging_reproduces_constants_at_free_nodes() {
    let mesh = Arc::new(make_unit_square(2).unwrap());
    let one = FeFunction::interpolate(FeSpace::dg(mesh, 2).unwrap(), |_| 1.0);
    let e = oswald(&one).unwrap();
    assert!(!e.coeffs().is_empty());
    assert!(e.coeffs().iter().all(|v| (v - 1.0).abs() < 1e-14));
}
