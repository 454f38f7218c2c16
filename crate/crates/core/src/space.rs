//! Broken polynomial spaces `P_k(T)`, their continuous subspace with zero
//! boundary values, finite element functions, traces, projections and the
//! mesh-dependent norms.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{self, LagrangeBasis, NodeSite, Tabulation, MAX_LOCAL};
use crate::dense::DenseMatrix;
use crate::error::{invalid, Error, Result};
use crate::geom::{self, Mat2, Point};
use crate::mesh::{CellMap, Mesh};
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule, TriangleRule};

/// Marker for a local node without a global unknown (boundary node of a
/// continuous space, fixed to zero).
pub const FIXED: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Continuity {
    Discontinuous,
    /// Continuous with homogeneous Dirichlet values imposed strongly.
    Continuous,
}

#[derive(Debug)]
struct SpaceData {
    mesh: Arc<Mesh>,
    degree: usize,
    continuity: Continuity,
    basis: LagrangeBasis,
    dofs: Vec<usize>,
    num_dofs: usize,
}

/// Cheaply clonable handle to a finite element space.
#[derive(Debug, Clone)]
pub struct FeSpace(Arc<SpaceData>);

impl PartialEq for FeSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl FeSpace {
    /// Broken space `P_k(T)`; degree 0 is allowed for projections.
    pub fn dg(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        let basis = LagrangeBasis::new(degree)?;
        let n = basis.len();
        let num_dofs = mesh.num_cells() * n;
        let dofs = (0..num_dofs).collect();
        Ok(Self(Arc::new(SpaceData {
            mesh,
            degree,
            continuity: Continuity::Discontinuous,
            basis,
            dofs,
            num_dofs,
        })))
    }

    /// Continuous Lagrange space `P_k(T) ∩ H¹₀`.
    pub fn cg(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(invalid("continuous spaces need degree >= 1"));
        }
        let basis = LagrangeBasis::new(degree)?;
        let n = basis.len();
        let sk = mesh.skeleton();
        let mut vertex_dof = vec![FIXED; mesh.num_vertices()];
        let mut edge_dof: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
        let mut dofs = vec![FIXED; mesh.num_cells() * n];
        let mut next = 0;
        for (k, c) in mesh.cells().iter().enumerate() {
            for (i, site) in basis.sites().iter().enumerate() {
                let id = match *site {
                    NodeSite::Vertex(v) => {
                        let g = c[v];
                        if mesh.is_boundary_vertex(g) {
                            FIXED
                        } else {
                            if vertex_dof[g] == FIXED {
                                vertex_dof[g] = next;
                                next += 1;
                            }
                            vertex_dof[g]
                        }
                    }
                    NodeSite::Edge(e, j) => {
                        if sk.edges[sk.cell_edges[k][e]].is_boundary() {
                            FIXED
                        } else {
                            let (a, b) = (c[(e + 1) % 3], c[(e + 2) % 3]);
                            let key = if a < b { (a, b, j) } else { (b, a, degree - j) };
                            *edge_dof.entry(key).or_insert_with(|| {
                                next += 1;
                                next - 1
                            })
                        }
                    }
                    NodeSite::Interior => {
                        next += 1;
                        next - 1
                    }
                };
                dofs[k * n + i] = id;
            }
        }
        Ok(Self(Arc::new(SpaceData {
            mesh,
            degree,
            continuity: Continuity::Continuous,
            basis,
            dofs,
            num_dofs: next,
        })))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.0.mesh
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn continuity(&self) -> Continuity {
        self.0.continuity
    }

    pub fn is_continuous(&self) -> bool {
        self.0.continuity == Continuity::Continuous
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.0.basis
    }

    pub fn num_dofs(&self) -> usize {
        self.0.num_dofs
    }

    /// Local dimension `(k+1)(k+2)/2`.
    pub fn local_dim(&self) -> usize {
        self.0.basis.len()
    }

    /// Global unknowns of a cell's local nodes; [`FIXED`] marks constrained nodes.
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let n = self.local_dim();
        &self.0.dofs[cell * n..(cell + 1) * n]
    }

    /// Physical location of every local node of `cell`.
    pub fn node_points(&self, cell: usize) -> Vec<Point> {
        let map = self.0.mesh.cell_map(cell);
        self.0
            .basis
            .nodes()
            .iter()
            .map(|&p| map.to_physical(p))
            .collect()
    }
}

/// Value, gradient and Hessian at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub grad: Point,
    pub hess: Mat2,
}

impl Eval {
    pub fn sub(&self, o: &Eval) -> Eval {
        Eval {
            value: self.value - o.value,
            grad: geom::sub(self.grad, o.grad),
            hess: [
                [
                    self.hess[0][0] - o.hess[0][0],
                    self.hess[0][1] - o.hess[0][1],
                ],
                [
                    self.hess[1][0] - o.hess[1][0],
                    self.hess[1][1] - o.hess[1][1],
                ],
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    space: FeSpace,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: FeSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::InvalidArgument(alloc::format!(
                "coefficient length {} does not match {} unknowns",
                coeffs.len(),
                space.num_dofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: FeSpace) -> Self {
        let n = space.num_dofs();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    /// Nodal interpolant; constrained nodes of a continuous space stay zero.
    pub fn interpolate(space: FeSpace, f: impl Fn(Point) -> f64) -> Self {
        let mut coeffs = vec![0.0; space.num_dofs()];
        for k in 0..space.mesh().num_cells() {
            let pts = space.node_points(k);
            for (&d, p) in space.cell_dofs(k).iter().zip(pts) {
                if d != FIXED {
                    coeffs[d] = f(p);
                }
            }
        }
        Self { space, coeffs }
    }

    pub fn space(&self) -> &FeSpace {
        &self.space
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space.mesh()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Local nodal values of `cell` (constrained nodes read as zero).
    pub fn local(&self, cell: usize) -> LocalCoeffs {
        let mut c = [0.0; MAX_LOCAL];
        let dofs = self.space.cell_dofs(cell);
        for (ci, &d) in c.iter_mut().zip(dofs) {
            *ci = if d == FIXED { 0.0 } else { self.coeffs[d] };
        }
        LocalCoeffs { c, n: dofs.len() }
    }

    /// Evaluation at a reference point of `cell`.
    pub fn eval(&self, cell: usize, xi: Point) -> Eval {
        let b = self.space.basis();
        let n = b.len();
        let mut v = [0.0; MAX_LOCAL];
        let mut g = [[0.0; 2]; MAX_LOCAL];
        let mut h = [[[0.0; 2]; 2]; MAX_LOCAL];
        b.eval_all(xi, &mut v[..n], &mut g[..n], &mut h[..n]);
        let map = self.mesh().cell_map(cell);
        self.local(cell).combine(&map, &v[..n], &g[..n], &h[..n])
    }

    /// Evaluation at tabulated point `q`.
    #[inline]
    pub fn eval_tab(&self, local: &LocalCoeffs, map: &CellMap, tab: &Tabulation, q: usize) -> Eval {
        let r = q * tab.n..(q + 1) * tab.n;
        local.combine(
            map,
            &tab.values[r.clone()],
            &tab.grads[r.clone()],
            &tab.hessians[r],
        )
    }

    /// Same function viewed in the broken space of equal degree.
    pub fn to_dg(&self) -> Result<FeFunction> {
        if !self.space.is_continuous() {
            return Ok(self.clone());
        }
        let dg = FeSpace::dg(self.mesh().clone(), self.space.degree())?;
        let n = dg.local_dim();
        let mut coeffs = vec![0.0; dg.num_dofs()];
        for k in 0..self.mesh().num_cells() {
            coeffs[k * n..(k + 1) * n].copy_from_slice(self.local(k).as_slice());
        }
        FeFunction::new(dg, coeffs)
    }

    /// `a·self + b·other` on the same space.
    pub fn axpby(&self, a: f64, other: &FeFunction, b: f64) -> Result<FeFunction> {
        if self.space != other.space {
            return Err(invalid("functions live on different spaces"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| a * x + b * y)
            .collect();
        FeFunction::new(self.space.clone(), coeffs)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LocalCoeffs {
    c: [f64; MAX_LOCAL],
    n: usize,
}

impl LocalCoeffs {
    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.n]
    }

    #[inline]
    fn combine(&self, map: &CellMap, v: &[f64], g: &[Point], h: &[Mat2]) -> Eval {
        let mut e = Eval::default();
        let mut gr = [0.0; 2];
        let mut hr = [[0.0; 2]; 2];
        for i in 0..self.n {
            let c = self.c[i];
            e.value += c * v[i];
            gr[0] += c * g[i][0];
            gr[1] += c * g[i][1];
            hr[0][0] += c * h[i][0][0];
            hr[0][1] += c * h[i][0][1];
            hr[1][0] += c * h[i][1][0];
            hr[1][1] += c * h[i][1][1];
        }
        e.grad = map.push_gradient(gr);
        e.hess = map.push_hessian(&hr);
        e
    }
}

/// Physical gradients of all basis functions at tabulated point `q`.
#[inline]
pub fn physical_grads(map: &CellMap, tab: &Tabulation, q: usize, out: &mut [Point]) {
    for (i, o) in out.iter_mut().enumerate().take(tab.n) {
        *o = map.push_gradient(tab.grad(q, i));
    }
}

/// Physical Hessians of all basis functions at tabulated point `q`.
#[inline]
pub fn physical_hessians(map: &CellMap, tab: &Tabulation, q: usize, out: &mut [Mat2]) {
    for (i, o) in out.iter_mut().enumerate().take(tab.n) {
        *o = map.push_hessian(&tab.hessian(q, i));
    }
}

/// Basis tabulations on all three local edges in both directions.
#[derive(Debug, Clone)]
pub struct EdgeTabs {
    tabs: Vec<Tabulation>,
}

impl EdgeTabs {
    pub fn new(basis: &LagrangeBasis, rule: &EdgeRule) -> Self {
        let mut tabs = Vec::with_capacity(6);
        for e in 0..3 {
            for rev in [false, true] {
                tabs.push(basis.tabulate_edge(e, rev, &rule.points));
            }
        }
        Self { tabs }
    }

    #[inline]
    pub fn get(&self, local_edge: usize, reversed: bool) -> &Tabulation {
        &self.tabs[2 * local_edge + reversed as usize]
    }
}

/// One side of an edge as seen from an incident cell.
#[derive(Debug, Clone, Copy)]
pub struct Side {
    pub cell: usize,
    pub local_edge: usize,
    /// The right cell walks the edge backwards.
    pub reversed: bool,
    /// `+1` on the left cell (normal points outward), `-1` on the right.
    pub sign: f64,
    /// Weight of this trace in the average: `1/2` inside, `1` on the boundary.
    pub avg: f64,
}

/// Incident sides of skeleton edge `edge`, left first.
pub fn edge_sides(mesh: &Mesh, edge: usize) -> ([Side; 2], usize) {
    let e = &mesh.skeleton().edges[edge];
    let left = Side {
        cell: e.left,
        local_edge: e.left_local,
        reversed: false,
        sign: 1.0,
        avg: if e.is_boundary() { 1.0 } else { 0.5 },
    };
    match (e.right, e.right_local) {
        (Some(r), Some(rl)) => (
            [
                left,
                Side {
                    cell: r,
                    local_edge: rl,
                    reversed: true,
                    sign: -1.0,
                    avg: 0.5,
                },
            ],
            2,
        ),
        _ => ([left, left], 1),
    }
}

/// Traces of a function on one edge at the points of an edge rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub edge: usize,
    pub left: Vec<Eval>,
    /// `None` on boundary edges.
    pub right: Option<Vec<Eval>>,
    pub normal: Point,
}

impl TraceSample {
    /// `⟦u⟧ = u⁺n⁺ + u⁻n⁻`, `u n` on the boundary.
    pub fn jump(&self) -> Vec<Point> {
        let n = self.normal;
        (0..self.left.len())
            .map(|q| {
                let d = self.left[q].value - self.right.as_ref().map_or(0.0, |r| r[q].value);
                [d * n[0], d * n[1]]
            })
            .collect()
    }

    /// `{u}`; the trace itself on the boundary.
    pub fn average(&self) -> Vec<f64> {
        (0..self.left.len())
            .map(|q| match &self.right {
                Some(r) => 0.5 * (self.left[q].value + r[q].value),
                None => self.left[q].value,
            })
            .collect()
    }

    /// Scalar jump `⟦∇u⟧ = ∇u⁺·n⁺ + ∇u⁻·n⁻` of the gradient.
    pub fn jump_grad(&self) -> Vec<f64> {
        (0..self.left.len())
            .map(|q| {
                let r = self.right.as_ref().map_or([0.0; 2], |r| r[q].grad);
                geom::dot(geom::sub(self.left[q].grad, r), self.normal)
            })
            .collect()
    }

    /// `{∇u}`.
    pub fn average_grad(&self) -> Vec<Point> {
        (0..self.left.len())
            .map(|q| match &self.right {
                Some(r) => geom::midpoint(self.left[q].grad, r[q].grad),
                None => self.left[q].grad,
            })
            .collect()
    }

    /// Tensor jump `Σ n_a ∂_b u` of the gradient, entry `[a][b]`.
    pub fn tensor_jump_grad(&self) -> Vec<Mat2> {
        let n = self.normal;
        (0..self.left.len())
            .map(|q| {
                let r = self.right.as_ref().map_or([0.0; 2], |r| r[q].grad);
                let d = geom::sub(self.left[q].grad, r);
                [[n[0] * d[0], n[0] * d[1]], [n[1] * d[0], n[1] * d[1]]]
            })
            .collect()
    }
}

/// Traces of `u` on `edge` sampled at the points of `rule`.
pub fn trace(u: &FeFunction, edge: usize, rule: &EdgeRule) -> TraceSample {
    let mesh = u.mesh();
    let (sides, ns) = edge_sides(mesh, edge);
    let basis = u.space().basis();
    let sample = |s: &Side| -> Vec<Eval> {
        let tab = basis.tabulate_edge(s.local_edge, s.reversed, &rule.points);
        let map = mesh.cell_map(s.cell);
        let local = u.local(s.cell);
        (0..tab.len())
            .map(|q| u.eval_tab(&local, &map, &tab, q))
            .collect()
    };
    TraceSample {
        edge,
        left: sample(&sides[0]),
        right: if ns == 2 {
            Some(sample(&sides[1]))
        } else {
            None
        },
        normal: mesh.skeleton().edges[edge].normal,
    }
}

/// Per-cell discrete L² projection onto `P_m`: `Q(P f · q) = Q(f · q)` for
/// every `q ∈ P_m(K)`, with `Q` the triangle rule of order `order`.
///
/// `f(cell, xi, x)` receives reference and physical coordinates.
pub fn l2_project(
    mesh: &Arc<Mesh>,
    degree: usize,
    order: usize,
    f: impl Fn(usize, Point, Point) -> f64,
) -> Result<FeFunction> {
    let space = FeSpace::dg(mesh.clone(), degree)?;
    let rule = triangle_rule(order.max(2 * degree))?;
    let tab = space.basis().tabulate(&rule.points);
    let n = space.local_dim();
    let mass_inv = reference_mass_inverse(&tab, &rule)?;
    let mut coeffs = vec![0.0; space.num_dofs()];
    let mut rhs = [0.0; MAX_LOCAL];
    for k in 0..mesh.num_cells() {
        let map = mesh.cell_map(k);
        rhs[..n].iter_mut().for_each(|v| *v = 0.0);
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let fv = w * f(k, p, map.to_physical(p));
            for (i, r) in rhs[..n].iter_mut().enumerate() {
                *r += fv * tab.value(q, i);
            }
        }
        // the Jacobian cancels between mass matrix and load
        for i in 0..n {
            coeffs[k * n + i] = (0..n).map(|j| mass_inv[(i, j)] * rhs[j]).sum();
        }
    }
    FeFunction::new(space, coeffs)
}

/// Inverse of the reference mass matrix integrated with `rule`.
pub fn reference_mass_inverse(tab: &Tabulation, rule: &TriangleRule) -> Result<DenseMatrix> {
    let n = tab.n;
    let mut m = DenseMatrix::zeros(n, n);
    for (q, &w) in rule.weights.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * tab.value(q, i) * tab.value(q, j);
            }
        }
    }
    m.inverse()
        .map_err(|_| Error::Internal("singular local mass matrix".into()))
}

/// Squared pieces of the broken norms of `w = u - exact`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormParts {
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub h2_sq: f64,
    /// `‖⟦w⟧‖²_e` per edge (boundary edges included).
    pub jump_sq: Vec<f64>,
    /// `‖⟦∇w⟧‖²_e` per edge (zero on boundary edges).
    pub grad_jump_sq: Vec<f64>,
    pub edge_h: Vec<f64>,
}

impl NormParts {
    fn weighted_jumps(&self, beta: f64) -> f64 {
        self.jump_sq
            .iter()
            .zip(&self.edge_h)
            .map(|(j, h)| j * libm::pow(*h, -beta))
            .sum()
    }

    pub fn l2(&self) -> f64 {
        geom::sqrt(self.l2_sq)
    }

    pub fn h1_seminorm(&self) -> f64 {
        geom::sqrt(self.h1_sq)
    }

    pub fn h2_seminorm(&self) -> f64 {
        geom::sqrt(self.h2_sq)
    }

    /// `(‖∇_h w‖² + Σ h_e⁻¹‖⟦w⟧‖²)^{1/2}`.
    pub fn enorm(&self) -> f64 {
        self.opnorm(1.0)
    }

    /// `(‖∇_h w‖² + Σ h_e^{-β}‖⟦w⟧‖²)^{1/2}`.
    pub fn opnorm(&self, beta: f64) -> f64 {
        geom::sqrt(self.h1_sq + self.weighted_jumps(beta))
    }

    /// `(‖Hess_h w‖² + Σ h_e⁻¹‖⟦∇w⟧‖² + Σ h_e⁻³‖⟦w⟧‖²)^{1/2}`.
    pub fn eenorm(&self) -> f64 {
        let g: f64 = self
            .grad_jump_sq
            .iter()
            .zip(&self.edge_h)
            .map(|(j, h)| j / h)
            .sum();
        geom::sqrt(self.h2_sq + g + self.weighted_jumps(3.0))
    }

    /// `Σ h_e⁻¹‖⟦∇w⟧‖² + h_e⁻³‖⟦w⟧‖²`.
    pub fn h2_jump_part(&self) -> f64 {
        let g: f64 = self
            .grad_jump_sq
            .iter()
            .zip(&self.edge_h)
            .map(|(j, h)| j / h)
            .sum();
        g + self.weighted_jumps(3.0)
    }
}

/// Exact solution data: value, gradient and Hessian at a physical point.
pub type ExactFn<'a> = &'a dyn Fn(Point) -> Eval;

/// Broken norms of `u - exact` (or of `u` when `exact` is `None`) with
/// quadrature of order `order` on cells and edges.
pub fn norm_parts(u: &FeFunction, exact: Option<ExactFn<'_>>, order: usize) -> Result<NormParts> {
    let mesh = u.mesh();
    let basis = u.space().basis();
    let rule = triangle_rule(order)?;
    let tab = basis.tabulate(&rule.points);
    let erule = edge_rule(order)?;
    let etabs = EdgeTabs::new(basis, &erule);
    let w_at = |local: &LocalCoeffs, map: &CellMap, tab: &Tabulation, q: usize| -> Eval {
        let e = u.eval_tab(local, map, tab, q);
        match exact {
            Some(f) => e.sub(&f(map.to_physical(tab.points[q]))),
            None => e,
        }
    };
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for k in 0..mesh.num_cells() {
        let map = mesh.cell_map(k);
        let local = u.local(k);
        let jac = map.det.abs();
        for (q, &w) in rule.weights.iter().enumerate() {
            let e = w_at(&local, &map, &tab, q);
            let wq = w * jac;
            l2 += wq * e.value * e.value;
            h1 += wq * geom::dot(e.grad, e.grad);
            h2 += wq * geom::frob(&e.hess, &e.hess);
        }
    }
    let sk = mesh.skeleton();
    let mut jump_sq = vec![0.0; sk.edges.len()];
    let mut grad_jump_sq = vec![0.0; sk.edges.len()];
    for (id, edge) in sk.edges.iter().enumerate() {
        let (sides, ns) = edge_sides(mesh, id);
        let mut vals = [[0.0; 16]; 2];
        let mut grads = [[[0.0; 2]; 16]; 2];
        for (s, side) in sides.iter().take(ns).enumerate() {
            let map = mesh.cell_map(side.cell);
            let local = u.local(side.cell);
            let t = etabs.get(side.local_edge, side.reversed);
            for q in 0..erule.len() {
                let e = w_at(&local, &map, t, q);
                vals[s][q] = e.value;
                grads[s][q] = e.grad;
            }
        }
        for (q, &w) in erule.weights.iter().enumerate() {
            let wl = w * edge.length;
            if ns == 2 {
                let d = vals[0][q] - vals[1][q];
                let g = geom::dot(geom::sub(grads[0][q], grads[1][q]), edge.normal);
                jump_sq[id] += wl * d * d;
                grad_jump_sq[id] += wl * g * g;
            } else {
                jump_sq[id] += wl * vals[0][q] * vals[0][q];
            }
        }
    }
    let edge_h = sk.edges.iter().map(|e| e.length).collect();
    Ok(NormParts {
        l2_sq: l2,
        h1_sq: h1,
        h2_sq: h2,
        jump_sq,
        grad_jump_sq,
        edge_h,
    })
}

/// Local dimension of degree `k`.
pub fn local_dim(k: usize) -> usize {
    basis::local_dim(k)
}
