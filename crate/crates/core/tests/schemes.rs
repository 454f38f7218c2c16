use std::sync::Arc;

use dgapost_core::coeff::{Coefficient, ScalarFn, SolutionFn};
use dgapost_core::estimate::{true_error, ErrorNorm};
use dgapost_core::forms::{assemble, default_sigma, Scheme};
use dgapost_core::mesh::make_unit_square;
use dgapost_core::solver::{solve, LinearSolverConfig, Method, Preconditioner};
use dgapost_core::space::{Eval, FeFunction};

fn exact() -> SolutionFn {
    use std::f64::consts::PI;
    Arc::new(|p| {
        let (s, c) = ((PI * p[0]).sin_cos(), (PI * p[1]).sin_cos());
        Eval {
            value: s.0 * c.0,
            grad: [PI * s.1 * c.0, PI * s.0 * c.1],
            hess: [
                [-PI * PI * s.0 * c.0, PI * PI * s.1 * c.1],
                [PI * PI * s.1 * c.1, -PI * PI * s.0 * c.0],
            ],
        }
    })
}

fn poisson() -> Coefficient {
    let f: ScalarFn = Arc::new(|p| {
        2.0 * std::f64::consts::PI.powi(2)
            * (std::f64::consts::PI * p[0]).sin()
            * (std::f64::consts::PI * p[1]).sin()
    });
    Coefficient::laplace(f)
}

fn solve_ip(n: usize, k: usize, config: &LinearSolverConfig) -> FeFunction {
    let mesh = Arc::new(make_unit_square(n).unwrap());
    let space = Scheme::Ip.space(mesh, k).unwrap();
    let system = assemble(Scheme::Ip, &space, &poisson(), default_sigma(k)).unwrap();
    let (x, report) = solve(&system, config).unwrap();
    assert!(report.residual < 1e-9, "{:?}", report);
    FeFunction::new(space, x).unwrap()
}

#[test]
fn linear_solvers_agree() {
    let direct = solve_ip(
        4,
        2,
        &LinearSolverConfig {
            method: Method::Direct,
            ..Default::default()
        },
    );
    for (method, preconditioner) in [
        (Method::Cg, Preconditioner::Jacobi),
        (Method::Gmres, Preconditioner::Ilu0),
        (Method::BiCgStab, Preconditioner::Ilu0),
    ] {
        let config = LinearSolverConfig {
            method,
            preconditioner,
            tolerance: 1e-12,
            ..Default::default()
        };
        let u = solve_ip(4, 2, &config);
        let diff = u
            .coeffs()
            .iter()
            .zip(direct.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{method:?}: {diff:e}");
    }
}

#[test]
fn interior_penalty_converges_at_optimal_rates() {
    let u = exact();
    for k in 1..=2 {
        let errors: Vec<(f64, f64)> = [4, 8, 16]
            .iter()
            .map(|&n| {
                let uh = solve_ip(n, k, &LinearSolverConfig::default());
                (
                    true_error(&uh, &*u, ErrorNorm::Energy).unwrap(),
                    true_error(&uh, &*u, ErrorNorm::L2).unwrap(),
                )
            })
            .collect();
        let rate = |a: f64, b: f64| (a / b).log2();
        let (e, l) = (
            rate(errors[1].0, errors[2].0),
            rate(errors[1].1, errors[2].1),
        );
        assert!((e - k as f64).abs() < 0.2, "k={k} energy rate {e}");
        assert!((l - (k + 1) as f64).abs() < 0.25, "k={k} L2 rate {l}");
    }
}

#[test]
fn linear_functions_are_reproduced() {
    let mesh = Arc::new(make_unit_square(2).unwrap());
    let space = Scheme::Ip.space(mesh, 1).unwrap();
    let uh = FeFunction::interpolate(space, |p| p[0] + 2.0 * p[1]);
    let linear: SolutionFn = Arc::new(|p| Eval {
        value: p[0] + 2.0 * p[1],
        grad: [1.0, 2.0],
        hess: [[0.0; 2]; 2],
    });
    assert!(true_error(&uh, &*linear, ErrorNorm::Energy).unwrap() < 1e-13);
    assert!(true_error(&uh, &*linear, ErrorNorm::H2).unwrap() < 1e-12);
}
