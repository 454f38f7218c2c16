//! Problem data: diffusion tensors, manufactured solutions and sources.

use std::f64::consts::PI;
use std::sync::Arc;

use dgapost_core::coeff::{Coefficient, ScalarFn, SolutionFn, TensorFn};
use dgapost_core::geom::{Mat2, Point};
use dgapost_core::space::Eval;

use crate::expr::Expr;

/// Form of the differential operator a scheme discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// `-Δu = f`.
    Laplace,
    /// `-div(A∇u) = f`.
    Divergence,
    /// `A:D²u = f`.
    Nondivergence,
}

/// Diffusion tensor with its row divergence `(div A)_j = Σ_i ∂_i A_ij`.
#[derive(Clone)]
pub struct Diffusion {
    pub tensor: TensorFn,
    pub divergence: Arc<dyn Fn(Point) -> Point + Send + Sync>,
}

impl std::fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Diffusion")
    }
}

fn diag(a: f64, b: f64) -> Mat2 {
    [[a, 0.0], [0.0, b]]
}

impl Diffusion {
    pub fn identity() -> Self {
        Self {
            tensor: Arc::new(|_| diag(1.0, 1.0)),
            divergence: Arc::new(|_| [0.0, 0.0]),
        }
    }

    /// `diag(2, sin 2πx sin 2πy + 2)`.
    pub fn slowly_varying() -> Self {
        Self {
            tensor: Arc::new(|p| {
                diag(2.0, (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).sin() + 2.0)
            }),
            divergence: Arc::new(|p| {
                [
                    0.0,
                    2.0 * PI * (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos(),
                ]
            }),
        }
    }

    /// `diag(1, arctan(1000 |(x + 1/2)² + (y - 1/2)² - 1|) + 2)`.
    pub fn arctan_layer() -> Self {
        let s = |p: Point| (p[0] + 0.5).powi(2) + (p[1] - 0.5).powi(2) - 1.0;
        Self {
            tensor: Arc::new(move |p| diag(1.0, (1000.0 * s(p).abs()).atan() + 2.0)),
            divergence: Arc::new(move |p| {
                let v = s(p);
                let d = 1000.0 * v.signum() / (1.0 + 1e6 * v * v);
                [0.0, d * 2.0 * (p[1] - 0.5)]
            }),
        }
    }

    /// `diag(1, a)` with `a = 10 sin 100πx sin 100πy + 11` where `x, y ≥ 0`, else `11`.
    pub fn oscillatory_quadrant() -> Self {
        let w = 100.0 * PI;
        Self {
            tensor: Arc::new(move |p| {
                let a = if p[0] >= 0.0 && p[1] >= 0.0 {
                    10.0 * (w * p[0]).sin() * (w * p[1]).sin() + 11.0
                } else {
                    11.0
                };
                diag(1.0, a)
            }),
            divergence: Arc::new(move |p| {
                let d = if p[0] >= 0.0 && p[1] >= 0.0 {
                    10.0 * w * (w * p[0]).sin() * (w * p[1]).cos()
                } else {
                    0.0
                };
                [0.0, d]
            }),
        }
    }

    /// Tensor from four entry expressions; the divergence uses central differences.
    pub fn from_expressions(entries: [Expr; 4]) -> Self {
        let e = Arc::new(entries);
        let t = e.clone();
        let tensor: TensorFn =
            Arc::new(move |p| [[t[0].eval(p), t[1].eval(p)], [t[2].eval(p), t[3].eval(p)]]);
        let divergence = Arc::new(move |p: Point| {
            const H: f64 = 1e-6;
            let dx = |f: &Expr| (f.eval([p[0] + H, p[1]]) - f.eval([p[0] - H, p[1]])) / (2.0 * H);
            let dy = |f: &Expr| (f.eval([p[0], p[1] + H]) - f.eval([p[0], p[1] - H])) / (2.0 * H);
            [dx(&e[0]) + dy(&e[2]), dx(&e[1]) + dy(&e[3])]
        });
        Self { tensor, divergence }
    }

    /// `-A` for nondivergence problems posed as `-A:D²u = f`.
    pub fn negated(&self) -> Self {
        let t = self.tensor.clone();
        let d = self.divergence.clone();
        Self {
            tensor: Arc::new(move |p| {
                let a = t(p);
                [[-a[0][0], -a[0][1]], [-a[1][0], -a[1][1]]]
            }),
            divergence: Arc::new(move |p| {
                let v = d(p);
                [-v[0], -v[1]]
            }),
        }
    }
}

/// `sin(aπx) sin(aπy)`.
pub fn sine_product(a: f64) -> SolutionFn {
    let w = a * PI;
    Arc::new(move |p| {
        let (sx, cx, sy, cy) = (
            (w * p[0]).sin(),
            (w * p[0]).cos(),
            (w * p[1]).sin(),
            (w * p[1]).cos(),
        );
        Eval {
            value: sx * sy,
            grad: [w * cx * sy, w * sx * cy],
            hess: [
                [-w * w * sx * sy, w * w * cx * cy],
                [w * w * cx * cy, -w * w * sx * sy],
            ],
        }
    })
}

/// `(cos(8π|x - c|²) + 1) / 4` inside `|x - c|² ≤ 1/8`, zero outside.
pub fn cosine_bump(c: Point) -> SolutionFn {
    Arc::new(move |p| {
        let d = [p[0] - c[0], p[1] - c[1]];
        let s = d[0] * d[0] + d[1] * d[1];
        if s > 0.125 {
            return Eval::default();
        }
        let (sn, cs) = ((8.0 * PI * s).sin(), (8.0 * PI * s).cos());
        let g = -4.0 * PI * sn;
        let q = -64.0 * PI * PI * cs;
        Eval {
            value: 0.25 * (cs + 1.0),
            grad: [g * d[0], g * d[1]],
            hess: [
                [g + q * d[0] * d[0], q * d[0] * d[1]],
                [q * d[0] * d[1], g + q * d[1] * d[1]],
            ],
        }
    })
}

/// Source term making `u` the exact solution of `op` with diffusion `a`.
pub fn manufactured_source(op: Operator, a: &Diffusion, u: &SolutionFn) -> ScalarFn {
    let (t, d, u) = (a.tensor.clone(), a.divergence.clone(), u.clone());
    match op {
        Operator::Laplace => Arc::new(move |p| {
            let h = u(p).hess;
            -(h[0][0] + h[1][1])
        }),
        Operator::Divergence => Arc::new(move |p| {
            let e = u(p);
            let m = t(p);
            let dv = d(p);
            -(frob(&m, &e.hess) + dv[0] * e.grad[0] + dv[1] * e.grad[1])
        }),
        Operator::Nondivergence => Arc::new(move |p| frob(&t(p), &u(p).hess)),
    }
}

fn frob(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Assembles the coefficient bundle of a problem.
pub fn coefficient(
    op: Operator,
    a: &Diffusion,
    source: ScalarFn,
    exact: Option<SolutionFn>,
) -> Coefficient {
    let tensor = match op {
        Operator::Laplace => Diffusion::identity().tensor,
        _ => a.tensor.clone(),
    };
    let c = Coefficient::new(tensor, source);
    match exact {
        Some(u) => c.with_exact(u),
        None => c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(u: &SolutionFn, p: Point) {
        let h = 1e-5;
        let e = u(p);
        let ex = u([p[0] + h, p[1]]);
        let emx = u([p[0] - h, p[1]]);
        let ey = u([p[0], p[1] + h]);
        let emy = u([p[0], p[1] - h]);
        let scale = 1.0 + e.hess[0][0].abs() + e.hess[1][1].abs();
        assert!(((ex.value - emx.value) / (2.0 * h) - e.grad[0]).abs() < 1e-6 * scale);
        assert!(((ey.value - emy.value) / (2.0 * h) - e.grad[1]).abs() < 1e-6 * scale);
        assert!(((ex.grad[0] - emx.grad[0]) / (2.0 * h) - e.hess[0][0]).abs() < 1e-5 * scale);
        assert!(((ey.grad[0] - emy.grad[0]) / (2.0 * h) - e.hess[1][0]).abs() < 1e-5 * scale);
        assert!(((ey.grad[1] - emy.grad[1]) / (2.0 * h) - e.hess[1][1]).abs() < 1e-5 * scale);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(&sine_product(2.0), [0.13, -0.31]);
        fd_check(&cosine_bump([0.0, 0.0]), [0.1, 0.17]);
        fd_check(&cosine_bump([0.5, 0.5]), [0.3, 0.6]);
    }

    #[test]
    fn bump_is_c1_across_its_support() {
        let u = cosine_bump([0.0, 0.0]);
        let r = (0.125f64).sqrt();
        let inside = u([r - 1e-9, 0.0]);
        assert!(inside.value.abs() < 1e-12 && inside.grad[0].abs() < 1e-6);
    }

    #[test]
    fn divergence_of_presets() {
        for a in [
            Diffusion::slowly_varying(),
            Diffusion::arctan_layer(),
            Diffusion::oscillatory_quadrant(),
        ] {
            let p = [0.0123, 0.0217];
            let h = 1e-7;
            let t = &a.tensor;
            let dy = (t([p[0], p[1] + h])[1][1] - t([p[0], p[1] - h])[1][1]) / (2.0 * h);
            let d = (a.divergence)(p);
            assert!(
                (d[1] - dy).abs() < 1e-4 * (1.0 + dy.abs()),
                "{} vs {}",
                d[1],
                dy
            );
        }
    }
}
