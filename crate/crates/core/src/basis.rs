//! Nodal Lagrange bases on the reference triangle, degrees 0 through 3.
//!
//! Local node order: the three vertices, then the nodes of edge 0, 1, 2
//! (edge `e` is opposite vertex `e` and is walked from vertex `e + 1` to
//! vertex `e + 2`), then interior nodes. Degree 0 uses the centroid.

use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Point};

pub const MAX_DEGREE: usize = 3;
/// Local dimension of the highest supported degree.
pub const MAX_LOCAL: usize = 10;

pub const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

pub fn local_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Where a local node sits, used to identify shared nodes between cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSite {
    Vertex(usize),
    /// Local edge and position `1..k` counted from its start vertex.
    Edge(usize, usize),
    Interior,
}

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    nodes: Vec<Point>,
    sites: Vec<NodeSite>,
    exps: Vec<(i32, i32)>,
    /// `coef[j * n + i]`: coefficient of monomial `j` in basis function `i`.
    coef: Vec<f64>,
}

/// Reference-coordinate values and derivatives of every basis function at a
/// list of points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n: usize,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
    pub hessians: Vec<Mat2>,
}

impl Tabulation {
    #[inline]
    pub fn value(&self, q: usize, i: usize) -> f64 {
        self.values[q * self.n + i]
    }

    #[inline]
    pub fn grad(&self, q: usize, i: usize) -> Point {
        self.grads[q * self.n + i]
    }

    #[inline]
    pub fn hessian(&self, q: usize, i: usize) -> Mat2 {
        self.hessians[q * self.n + i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(alloc::format!(
                "polynomial degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let (nodes, sites) = nodes(degree);
        let mut exps = Vec::new();
        for d in 0..=degree as i32 {
            for b in 0..=d {
                exps.push((d - b, b));
            }
        }
        let n = exps.len();
        let mut v = DenseMatrix::zeros(n, n);
        for (i, p) in nodes.iter().enumerate() {
            for (j, &(a, b)) in exps.iter().enumerate() {
                v[(i, j)] = powi(p[0], a) * powi(p[1], b);
            }
        }
        let inv = v.inverse()?;
        let coef = inv.as_slice().to_vec();
        Ok(Self {
            degree,
            nodes,
            sites,
            exps,
            coef,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn sites(&self) -> &[NodeSite] {
        &self.sites
    }

    /// Values, reference gradients and reference Hessians at `p`.
    pub fn eval_all(&self, p: Point, values: &mut [f64], grads: &mut [Point], hess: &mut [Mat2]) {
        let n = self.len();
        let mut mv = [0.0; MAX_LOCAL];
        let mut mx = [0.0; MAX_LOCAL];
        let mut my = [0.0; MAX_LOCAL];
        let mut mxx = [0.0; MAX_LOCAL];
        let mut mxy = [0.0; MAX_LOCAL];
        let mut myy = [0.0; MAX_LOCAL];
        for (j, &(a, b)) in self.exps.iter().enumerate() {
            let (x, y) = (p[0], p[1]);
            let (af, bf) = (a as f64, b as f64);
            mv[j] = powi(x, a) * powi(y, b);
            mx[j] = if a > 0 {
                af * powi(x, a - 1) * powi(y, b)
            } else {
                0.0
            };
            my[j] = if b > 0 {
                bf * powi(x, a) * powi(y, b - 1)
            } else {
                0.0
            };
            mxx[j] = if a > 1 {
                af * (af - 1.0) * powi(x, a - 2) * powi(y, b)
            } else {
                0.0
            };
            mxy[j] = if a > 0 && b > 0 {
                af * bf * powi(x, a - 1) * powi(y, b - 1)
            } else {
                0.0
            };
            myy[j] = if b > 1 {
                bf * (bf - 1.0) * powi(x, a) * powi(y, b - 2)
            } else {
                0.0
            };
        }
        for i in 0..n {
            let (mut v, mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..n {
                let c = self.coef[j * n + i];
                v += c * mv[j];
                gx += c * mx[j];
                gy += c * my[j];
                hxx += c * mxx[j];
                hxy += c * mxy[j];
                hyy += c * myy[j];
            }
            values[i] = v;
            grads[i] = [gx, gy];
            hess[i] = [[hxx, hxy], [hxy, hyy]];
        }
    }

    pub fn values(&self, p: Point) -> Vec<f64> {
        let n = self.len();
        let mut v = alloc::vec![0.0; n];
        let mut g = alloc::vec![[0.0; 2]; n];
        let mut h = alloc::vec![[[0.0; 2]; 2]; n];
        self.eval_all(p, &mut v, &mut g, &mut h);
        v
    }

    pub fn tabulate(&self, points: &[Point]) -> Tabulation {
        let n = self.len();
        let nq = points.len();
        let mut values = alloc::vec![0.0; n * nq];
        let mut grads = alloc::vec![[0.0; 2]; n * nq];
        let mut hessians = alloc::vec![[[0.0; 2]; 2]; n * nq];
        for (q, &p) in points.iter().enumerate() {
            let r = q * n..(q + 1) * n;
            self.eval_all(
                p,
                &mut values[r.clone()],
                &mut grads[r.clone()],
                &mut hessians[r],
            );
        }
        Tabulation {
            n,
            points: points.to_vec(),
            values,
            grads,
            hessians,
        }
    }

    /// Tabulation along local edge `edge` at edge parameters `ts`; with
    /// `reversed` the edge is walked from its end vertex back to its start.
    pub fn tabulate_edge(&self, edge: usize, reversed: bool, ts: &[f64]) -> Tabulation {
        let pts: Vec<Point> = ts
            .iter()
            .map(|&t| edge_point(edge, if reversed { 1.0 - t } else { t }))
            .collect();
        self.tabulate(&pts)
    }
}

/// Reference point at parameter `t` on local edge `edge`.
pub fn edge_point(edge: usize, t: f64) -> Point {
    let a = REF_VERTICES[(edge + 1) % 3];
    let b = REF_VERTICES[(edge + 2) % 3];
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

#[inline]
fn powi(x: f64, n: i32) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

fn nodes(k: usize) -> (Vec<Point>, Vec<NodeSite>) {
    if k == 0 {
        return (
            alloc::vec![[1.0 / 3.0, 1.0 / 3.0]],
            alloc::vec![NodeSite::Interior],
        );
    }
    let mut pts = REF_VERTICES.to_vec();
    let mut sites: Vec<NodeSite> = (0..3).map(NodeSite::Vertex).collect();
    let kf = k as f64;
    for e in 0..3 {
        for j in 1..k {
            pts.push(edge_point(e, j as f64 / kf));
            sites.push(NodeSite::Edge(e, j));
        }
    }
    for j in 1..k {
        for i in 1..k {
            if i + j < k {
                pts.push([i as f64 / kf, j as f64 / kf]);
                sites.push(NodeSite::Interior);
            }
        }
    }
    (pts, sites)
}
