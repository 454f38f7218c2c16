//! Quick invariant checks behind the `check` command.

use std::sync::Arc;

use dgapost_core::adapt::Problem;
use dgapost_core::estimate::EstimatorFamily;
use dgapost_core::forms::{assemble_ip, default_sigma, Scheme};
use dgapost_core::mesh::make_unit_square;
use dgapost_core::quadrature::{edge_rule, triangle_rule};
use dgapost_core::reconstruct::oswald;
use dgapost_core::solver::{min_eigenvalue_estimate, LinearSolverConfig};
use dgapost_core::space::{trace, FeFunction, FeSpace};

use crate::data::{coefficient, manufactured_source, sine_product, Diffusion, Operator};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} (limit {limit:.0e})"),
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn quadrature_error() -> f64 {
    let mut worst = 0.0f64;
    for s in 0..=6 {
        let (t, e) = (
            triangle_rule(s).expect("shipped order"),
            edge_rule(s).expect("shipped order"),
        );
        for a in 0..=s as u32 {
            let exact = 1.0 / f64::from(a + 1);
            worst = worst.max((e.integrate_reference(|x| x.powi(a as i32)) - exact).abs() / exact);
            for b in 0..=(s as u32 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let q = t.integrate_reference(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                worst = worst.max((q - exact).abs() / exact);
            }
        }
    }
    worst
}

fn continuous_jump() -> f64 {
    let mesh = Arc::new(make_unit_square(3).expect("mesh"));
    let space = FeSpace::cg(mesh.clone(), 2).expect("space");
    let u = FeFunction::interpolate(space, |p| {
        (p[0] * (1.0 - p[0])) * (1.0 + p[1] * p[1]) * p[1] * (1.0 - p[1])
    });
    let rule = edge_rule(4).expect("rule");
    let mut worst = 0.0f64;
    for e in 0..mesh.skeleton().edges.len() {
        for j in trace(&u, e, &rule).jump() {
            worst = worst.max(j[0].abs()).max(j[1].abs());
        }
    }
    worst
}

fn oswald_identity() -> f64 {
    let space = FeSpace::cg(Arc::new(make_unit_square(4).expect("mesh")), 2).expect("space");
    let u = FeFunction::interpolate(space, |p| (p[0] * p[1] * (1.0 - p[0]) * (1.0 - p[1])).sin());
    let e = oswald(&u).expect("oswald");
    e.coeffs()
        .iter()
        .zip(u.coeffs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn ip_spd() -> (f64, f64) {
    let space = FeSpace::dg(Arc::new(make_unit_square(2).expect("mesh")), 1).expect("space");
    let a = assemble_ip(&space, default_sigma(1)).expect("assembly");
    (
        a.asymmetry(),
        min_eigenvalue_estimate(&a).expect("eigenvalue"),
    )
}

fn galerkin_residual() -> f64 {
    let mesh = Arc::new(make_unit_square(2).expect("mesh").translated([-0.5, -0.5]));
    let u = sine_product(2.0);
    let mut worst = 0.0f64;
    let schemes = [
        (Scheme::Ip, EstimatorFamily::Energy, Operator::Laplace),
        (Scheme::Bz, EstimatorFamily::Energy, Operator::Laplace),
        (
            Scheme::BzOverpen { beta: 3.0 },
            EstimatorFamily::Energy,
            Operator::Laplace,
        ),
        (
            Scheme::CgQuad,
            EstimatorFamily::CgQuad,
            Operator::Divergence,
        ),
        (
            Scheme::IpQuad,
            EstimatorFamily::DgQuad,
            Operator::Divergence,
        ),
        (
            Scheme::Nonvar,
            EstimatorFamily::Nonvar,
            Operator::Nondivergence,
        ),
        (
            Scheme::NonvarConsistent,
            EstimatorFamily::NonvarConsistent,
            Operator::Nondivergence,
        ),
        (
            Scheme::NonvarQuad,
            EstimatorFamily::NonvarQuad,
            Operator::Nondivergence,
        ),
    ];
    for (scheme, family, op) in schemes {
        let a = Diffusion::slowly_varying();
        let f = manufactured_source(op, &a, &u);
        let problem = Problem {
            scheme,
            degree: 2,
            sigma: default_sigma(2),
            coefficient: coefficient(op, &a, f, Some(u.clone())),
            family,
            solver: LinearSolverConfig::default(),
        };
        let (_, _, r) = problem.solve(&mesh).expect("solve");
        worst = worst.max(r);
    }
    worst
}

/// Runs every check; each entry reports its measured value against its limit.
pub fn run_checks() -> Vec<Check> {
    let (asym, min_eig) = ip_spd();
    vec![
        check(
            "quadrature exactness up to order 6",
            quadrature_error(),
            1e-12,
        ),
        check("jumps of continuous functions", continuous_jump(), 1e-11),
        check(
            "averaging fixes continuous functions",
            oswald_identity(),
            1e-11,
        ),
        check("interior penalty symmetry", asym, 1e-10),
        Check {
            name: "interior penalty positive definite",
            passed: min_eig > 0.0,
            detail: format!("smallest eigenvalue {min_eig:.3e}"),
        },
        check(
            "Galerkin residual of every scheme",
            galerkin_residual(),
            1e-9,
        ),
    ]
}
