//! Positive-weight quadrature on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`
//! and the reference edge `[0, 1]`.
//!
//! Orders 1–5 on triangles use fully symmetric rules; orders 6–10 use the
//! collapsed (conical product) Gauss rule, which keeps every weight positive.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::mesh::Mesh;

/// Highest exactness degree shipped.
pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    /// Reference coordinates `(ξ, η)`.
    pub points: Vec<Point>,
    /// Weights summing to the reference area `1/2`.
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub order: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn barycentric(&self, q: usize) -> [f64; 3] {
        let [x, y] = self.points[q];
        [1.0 - x - y, x, y]
    }

    /// Applies the rule on the reference triangle.
    pub fn integrate_reference(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    /// Parameters in `[0, 1]`.
    pub points: Vec<f64>,
    /// Weights summing to `1`.
    pub weights: Vec<f64>,
    pub order: usize,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate_reference(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule on `[0, 1]` exact for degree `s`.
pub fn edge_rule(s: usize) -> Result<EdgeRule> {
    if s > MAX_ORDER {
        return Err(Error::UnsupportedOrder(s));
    }
    let n = ((s + 2) / 2).max(1);
    let (points, weights) = gauss_legendre(n);
    Ok(EdgeRule {
        points,
        weights,
        order: s,
    })
}

/// Rule exact on `P_s` of the reference triangle. Order 0 is served by the
/// centroid rule.
pub fn triangle_rule(s: usize) -> Result<TriangleRule> {
    if s > MAX_ORDER {
        return Err(Error::UnsupportedOrder(s));
    }
    let rule = match s {
        0 | 1 => symmetric(&[(Orbit::Centroid, 1.0)]),
        2 => symmetric(&[(Orbit::Two(1.0 / 6.0), 1.0 / 3.0)]),
        3 => symmetric(&[(
            Orbit::Six(0.659_027_622_374_092, 0.231_933_368_553_031),
            1.0 / 6.0,
        )]),
        4 => symmetric(&[
            (Orbit::Two(0.445_948_490_915_965), 0.223_381_589_678_011),
            (Orbit::Two(0.091_576_213_509_771), 0.109_951_743_655_322),
        ]),
        5 => symmetric(&[
            (Orbit::Centroid, 0.225),
            (Orbit::Two(0.470_142_064_105_115), 0.132_394_152_788_506),
            (Orbit::Two(0.101_286_507_323_456), 0.125_939_180_544_827),
        ]),
        _ => conical(s),
    };
    Ok(TriangleRule { order: s, ..rule })
}

enum Orbit {
    Centroid,
    /// barycentric `(a, a, 1 - 2a)` and permutations
    Two(f64),
    /// barycentric `(a, b, 1 - a - b)` and permutations
    Six(f64, f64),
}

/// Builds a rule from symmetry orbits; `w` is the weight of one point
/// normalised to unit area.
/// Rule of order `s` applied on each of the `4^levels` congruent
/// subtriangles of the reference triangle.
pub fn composite_triangle_rule(s: usize, levels: u32) -> Result<TriangleRule> {
    let base = triangle_rule(s)?;
    let n = 1usize << levels;
    let h = 1.0 / n as f64;
    let scale = h * h;
    let mut points = Vec::with_capacity(base.len() * n * n);
    let mut weights = Vec::with_capacity(base.len() * n * n);
    let mut push = |v0: Point, v1: Point, v2: Point| {
        for (p, w) in base.points.iter().zip(&base.weights) {
            points.push([
                v0[0] + (v1[0] - v0[0]) * p[0] + (v2[0] - v0[0]) * p[1],
                v0[1] + (v1[1] - v0[1]) * p[0] + (v2[1] - v0[1]) * p[1],
            ]);
            weights.push(w * scale);
        }
    };
    for j in 0..n {
        for i in 0..n - j {
            let (x, y) = (i as f64 * h, j as f64 * h);
            push([x, y], [x + h, y], [x, y + h]);
            if i + j + 1 < n {
                push([x + h, y], [x + h, y + h], [x, y + h]);
            }
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        order: s,
    })
}

fn symmetric(orbits: &[(Orbit, f64)]) -> TriangleRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (orbit, w) in orbits {
        let bary: Vec<[f64; 3]> = match *orbit {
            Orbit::Centroid => alloc::vec![[1.0 / 3.0; 3]],
            Orbit::Two(a) => {
                let c = 1.0 - 2.0 * a;
                alloc::vec![[a, a, c], [a, c, a], [c, a, a]]
            }
            Orbit::Six(a, b) => {
                let c = 1.0 - a - b;
                alloc::vec![
                    [a, b, c],
                    [a, c, b],
                    [b, a, c],
                    [b, c, a],
                    [c, a, b],
                    [c, b, a]
                ]
            }
        };
        for l in bary {
            points.push([l[1], l[2]]);
            weights.push(0.5 * w);
        }
    }
    TriangleRule {
        points,
        weights,
        order: 0,
    }
}

/// Collapsed Gauss rule: `(ξ, η) = (u (1 - v), v)` with Jacobian `1 - v`.
fn conical(s: usize) -> TriangleRule {
    let (nu, nv) = ((s + 2) / 2, (s + 3) / 2);
    let (u, wu) = gauss_legendre(nu);
    let (v, wv) = gauss_legendre(nv);
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (vj, wj) in v.iter().zip(&wv) {
        for (ui, wi) in u.iter().zip(&wu) {
            points.push([ui * (1.0 - vj), *vj]);
            weights.push(wi * wj * (1.0 - vj));
        }
    }
    TriangleRule {
        points,
        weights,
        order: s,
    }
}

/// Jacobian-weighted pullback of `rule` onto a physical cell.
pub fn integrate_cell(
    f: impl Fn(Point) -> f64,
    mesh: &Mesh,
    cell: usize,
    rule: &TriangleRule,
) -> f64 {
    let map = mesh.cell_map(cell);
    let jac = map.det.abs();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&p, &w)| w * jac * f(map.to_physical(p)))
        .sum()
}

/// Length-weighted pullback of `rule` onto a skeleton edge.
pub fn integrate_edge(f: impl Fn(Point) -> f64, mesh: &Mesh, edge: usize, rule: &EdgeRule) -> f64 {
    let e = &mesh.skeleton().edges[edge];
    let a = mesh.vertices()[e.vertices[0]];
    let b = mesh.vertices()[e.vertices[1]];
    let d = geom::sub(b, a);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| w * e.length * f([a[0] + t * d[0], a[1] + t * d[1]]))
        .sum()
}
