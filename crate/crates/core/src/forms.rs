//! Assembly of the discrete bilinear and linear forms.
//!
//! Conventions on an edge with normal `n` (pointing out of the left cell):
//! the left trace enters jumps with sign `+1` and the right trace with `-1`;
//! averages weight each trace by `1/2`. On the boundary the single trace is
//! both the average and (times `n`) the jump. Gradient jumps `⟦∇u⟧` are the
//! scalar normal jumps and live on interior edges only.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{Tabulation, MAX_LOCAL};
use crate::coeff::{Coefficient, Definiteness, ScalarFn, TensorFn};
use crate::dense::DenseMatrix;
use crate::error::{invalid, Error, Result};
use crate::geom::{self, Mat2, Point};
use crate::mesh::{CellMap, Mesh};
use crate::quadrature::{edge_rule, triangle_rule, MAX_ORDER};
use crate::solver::{CsrMatrix, SparseSystem, TripletBuilder};
use crate::space::{
    edge_sides, l2_project, physical_grads, physical_hessians, reference_mass_inverse, EdgeTabs,
    FeFunction, FeSpace, LocalCoeffs, Side, FIXED,
};

/// Quadrature order used wherever an integral is meant to be exact.
pub fn overkill_order(k: usize) -> usize {
    (2 * k + 4).min(MAX_ORDER)
}

/// Cell quadrature order `2k - 2` of the quadrature-based schemes.
pub fn scheme_order(k: usize) -> usize {
    (2 * k).saturating_sub(2)
}

/// Default interior penalty parameter `10 k²`.
pub fn default_sigma(k: usize) -> f64 {
    10.0 * (k * k) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Symmetric interior penalty for `-Δu = f`.
    Ip,
    /// Babuška–Zlámal penalty-only method for `-Δu = f`.
    Bz,
    /// Babuška–Zlámal with penalty weight `h_e^{-β}`.
    BzOverpen { beta: f64 },
    /// Conforming elements with cell quadrature of order `2k - 2` for `-div(A∇u) = f`.
    CgQuad,
    /// Interior penalty under quadrature for `-div(A∇u) = f`.
    IpQuad,
    /// Nonvariational `A:D²u = f` through the finite element Hessian.
    Nonvar,
    /// Nonvariational with the consistent broken-Hessian form.
    NonvarConsistent,
    /// [`Scheme::Nonvar`] with cell quadrature of order `2k - 2`.
    NonvarQuad,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Ip => "ip",
            Scheme::Bz => "bz",
            Scheme::BzOverpen { .. } => "bz-overpen",
            Scheme::CgQuad => "cg-quad",
            Scheme::IpQuad => "ip-quad",
            Scheme::Nonvar => "nonvar",
            Scheme::NonvarConsistent => "nonvar-consistent",
            Scheme::NonvarQuad => "nonvar-quad",
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Scheme::CgQuad)
    }

    pub fn is_nonvariational(&self) -> bool {
        matches!(
            self,
            Scheme::Nonvar | Scheme::NonvarConsistent | Scheme::NonvarQuad
        )
    }

    pub fn is_symmetric(&self) -> bool {
        !self.is_nonvariational()
    }

    pub fn min_degree(&self) -> usize {
        if self.is_nonvariational() {
            2
        } else {
            1
        }
    }

    /// Builds the matching finite element space on `mesh`.
    pub fn space(&self, mesh: alloc::sync::Arc<Mesh>, k: usize) -> Result<FeSpace> {
        if k < self.min_degree() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} needs degree >= {}",
                self.name(),
                self.min_degree()
            )));
        }
        if self.is_continuous() {
            FeSpace::cg(mesh, k)
        } else {
            FeSpace::dg(mesh, k)
        }
    }
}

/// Assembles matrix and load vector of `scheme`. Laplace schemes ignore the
/// diffusion tensor of `coeff` and use `A = I`.
pub fn assemble(
    scheme: Scheme,
    space: &FeSpace,
    coeff: &Coefficient,
    sigma: f64,
) -> Result<SparseSystem> {
    check_sigma(sigma)?;
    let k = space.degree();
    if k < scheme.min_degree() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} needs degree >= {}",
            scheme.name(),
            scheme.min_degree()
        )));
    }
    if space.is_continuous() != scheme.is_continuous() {
        return Err(invalid("space continuity does not match the scheme"));
    }
    match scheme {
        Scheme::Ip => SparseSystem::new(
            assemble_ip(space, sigma)?,
            load_exact(space, &coeff.source)?,
            true,
        ),
        Scheme::Bz => SparseSystem::new(
            assemble_bz(space, sigma)?,
            load_exact(space, &coeff.source)?,
            true,
        ),
        Scheme::BzOverpen { beta } => SparseSystem::new(
            assemble_bz_overpen(space, sigma, beta)?,
            load_exact(space, &coeff.source)?,
            true,
        ),
        Scheme::CgQuad => assemble_cg_quad(space, coeff),
        Scheme::IpQuad => assemble_ip_quad(space, coeff, sigma),
        Scheme::Nonvar => assemble_nonvar(space, coeff, sigma, false),
        Scheme::NonvarQuad => assemble_nonvar(space, coeff, sigma, true),
        Scheme::NonvarConsistent => assemble_nonvar_consistent(space, coeff, sigma),
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("penalty parameter must be positive"));
    }
    Ok(())
}

fn scatter(t: &mut TripletBuilder, rows: &[usize], cols: &[usize], local: &[f64]) {
    let nc = cols.len();
    for (i, &r) in rows.iter().enumerate() {
        if r == FIXED {
            continue;
        }
        for (j, &c) in cols.iter().enumerate() {
            let v = local[i * nc + j];
            if c != FIXED && v != 0.0 {
                t.add(r, c, v);
            }
        }
    }
}

/// Broken stiffness `Σ_K Q_K^order((A∇u)·∇v)`; `A = I` when `a` is `None`.
pub fn assemble_stiffness(
    space: &FeSpace,
    a: Option<&TensorFn>,
    order: usize,
) -> Result<CsrMatrix> {
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_stiffness(space, a, order, &mut t)?;
    Ok(t.build())
}

fn add_stiffness(
    space: &FeSpace,
    a: Option<&TensorFn>,
    order: usize,
    t: &mut TripletBuilder,
) -> Result<()> {
    let mesh = space.mesh();
    let rule = triangle_rule(order)?;
    let tab = space.basis().tabulate(&rule.points);
    let n = space.local_dim();
    let mut g = [[0.0; 2]; MAX_LOCAL];
    let mut local = vec![0.0; n * n];
    for k in 0..mesh.num_cells() {
        let map = mesh.cell_map(k);
        let jac = map.det.abs();
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in rule.weights.iter().enumerate() {
            physical_grads(&map, &tab, q, &mut g[..n]);
            let am = a.map(|f| f(map.to_physical(rule.points[q])));
            let wq = w * jac;
            for j in 0..n {
                let agj = match &am {
                    Some(m) => geom::mat_vec(m, g[j]),
                    None => g[j],
                };
                for i in 0..n {
                    local[i * n + j] += wq * geom::dot(agj, g[i]);
                }
            }
        }
        let d = space.cell_dofs(k);
        scatter(t, d, d, &local);
    }
    Ok(())
}

/// Traces of the basis on one side of an edge at edge-rule points.
struct SideData {
    side: Side,
    vals: Vec<f64>,
    grads: Vec<Point>,
}

struct EdgeCtx {
    sides: Vec<SideData>,
    normal: Point,
    h: f64,
    /// Edge-rule weights times edge length.
    weights: Vec<f64>,
    points: Vec<Point>,
    n: usize,
}

impl EdgeCtx {
    fn interior(&self) -> bool {
        self.sides.len() == 2
    }
}

/// Runs `body` on every edge and scatters the returned local matrix, whose
/// rows and columns are the concatenated side dofs (left first).
fn edge_loop(
    space: &FeSpace,
    order: usize,
    t: &mut TripletBuilder,
    mut body: impl FnMut(&EdgeCtx, &mut [f64]),
) -> Result<()> {
    let mesh = space.mesh();
    let rule = edge_rule(order)?;
    let etabs = EdgeTabs::new(space.basis(), &rule);
    let n = space.local_dim();
    let nq = rule.len();
    let mut local = Vec::new();
    let mut dofs = Vec::with_capacity(2 * n);
    for (id, edge) in mesh.skeleton().edges.iter().enumerate() {
        let (sides, ns) = edge_sides(mesh, id);
        let a = mesh.vertices()[edge.vertices[0]];
        let b = mesh.vertices()[edge.vertices[1]];
        let points = rule
            .points
            .iter()
            .map(|&s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
            .collect();
        let mut data = Vec::with_capacity(ns);
        dofs.clear();
        for side in sides.iter().take(ns) {
            let map = mesh.cell_map(side.cell);
            let tab = etabs.get(side.local_edge, side.reversed);
            let mut grads = vec![[0.0; 2]; nq * n];
            for q in 0..nq {
                physical_grads(&map, tab, q, &mut grads[q * n..(q + 1) * n]);
            }
            data.push(SideData {
                side: *side,
                vals: tab.values.clone(),
                grads,
            });
            dofs.extend_from_slice(space.cell_dofs(side.cell));
        }
        let ctx = EdgeCtx {
            sides: data,
            normal: edge.normal,
            h: edge.length,
            weights: rule.weights.iter().map(|w| w * edge.length).collect(),
            points,
            n,
        };
        local.clear();
        local.resize(ns * n * ns * n, 0.0);
        body(&ctx, &mut local);
        scatter(t, &dofs, &dofs, &local);
    }
    Ok(())
}

/// Adds `scale · (-∫_E ⟦u⟧·{A∇v} + ⟦v⟧·{A∇u})` with edge quadrature of order `order`.
fn add_consistency(
    space: &FeSpace,
    a: Option<&TensorFn>,
    order: usize,
    scale: f64,
    t: &mut TripletBuilder,
) -> Result<()> {
    edge_loop(space, order, t, |ctx, local| {
        let n = ctx.n;
        let m = ctx.sides.len() * n;
        for (q, &w) in ctx.weights.iter().enumerate() {
            let am = a.map(|f| f(ctx.points[q]));
            for (s, ds) in ctx.sides.iter().enumerate() {
                for (tt, dt) in ctx.sides.iter().enumerate() {
                    for i in 0..n {
                        let vi = ds.vals[q * n + i];
                        let gi = ds.grads[q * n + i];
                        let agi = am.as_ref().map_or(gi, |m| geom::mat_vec(m, gi));
                        let ni = geom::dot(ctx.normal, agi) * ds.side.avg;
                        for j in 0..n {
                            let vj = dt.vals[q * n + j];
                            let gj = dt.grads[q * n + j];
                            let agj = am.as_ref().map_or(gj, |m| geom::mat_vec(m, gj));
                            let nj = geom::dot(ctx.normal, agj) * dt.side.avg;
                            let val = dt.side.sign * vj * ni + ds.side.sign * vi * nj;
                            local[(s * n + i) * m + tt * n + j] -= scale * w * val;
                        }
                    }
                }
            }
        }
    })
}

/// Adds `scale · σ Σ_e h_e^{-β} ∫_e ⟦u⟧·⟦v⟧` over all edges.
fn add_penalty(
    space: &FeSpace,
    sigma: f64,
    beta: f64,
    order: usize,
    scale: f64,
    t: &mut TripletBuilder,
) -> Result<()> {
    edge_loop(space, order, t, |ctx, local| {
        let n = ctx.n;
        let m = ctx.sides.len() * n;
        let c = scale * sigma * libm::pow(ctx.h, -beta);
        for (q, &w) in ctx.weights.iter().enumerate() {
            for (s, ds) in ctx.sides.iter().enumerate() {
                for (tt, dt) in ctx.sides.iter().enumerate() {
                    let sg = ds.side.sign * dt.side.sign;
                    for i in 0..n {
                        let vi = ds.vals[q * n + i];
                        for j in 0..n {
                            local[(s * n + i) * m + tt * n + j] +=
                                c * w * sg * vi * dt.vals[q * n + j];
                        }
                    }
                }
            }
        }
    })
}

/// Adds `scale · σ Σ_{e interior} h_e ∫_e ⟦∇u⟧⟦∇v⟧`.
fn add_grad_penalty(
    space: &FeSpace,
    sigma: f64,
    order: usize,
    scale: f64,
    t: &mut TripletBuilder,
) -> Result<()> {
    edge_loop(space, order, t, |ctx, local| {
        if !ctx.interior() {
            return;
        }
        let n = ctx.n;
        let m = 2 * n;
        let c = scale * sigma * ctx.h;
        for (q, &w) in ctx.weights.iter().enumerate() {
            for (s, ds) in ctx.sides.iter().enumerate() {
                for (tt, dt) in ctx.sides.iter().enumerate() {
                    let sg = ds.side.sign * dt.side.sign;
                    for i in 0..n {
                        let gi = geom::dot(ds.grads[q * n + i], ctx.normal);
                        for j in 0..n {
                            let gj = geom::dot(dt.grads[q * n + j], ctx.normal);
                            local[(s * n + i) * m + tt * n + j] += c * w * sg * gi * gj;
                        }
                    }
                }
            }
        }
    })
}

/// IP consistency block `-∫_E (⟦u⟧·{∇v} + ⟦v⟧·{∇u})` on its own.
pub fn assemble_ip_consistency(space: &FeSpace) -> Result<CsrMatrix> {
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_consistency(space, None, 2 * space.degree(), 1.0, &mut t)?;
    Ok(t.build())
}

/// Penalty block `σ Σ_e h_e^{-β} ∫_e ⟦u⟧·⟦v⟧` on its own.
pub fn assemble_penalty(space: &FeSpace, sigma: f64, beta: f64) -> Result<CsrMatrix> {
    check_sigma(sigma)?;
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_penalty(space, sigma, beta, 2 * space.degree(), 1.0, &mut t)?;
    Ok(t.build())
}

/// Gradient-jump penalty block `σ Σ_{e interior} h_e ∫_e ⟦∇u⟧⟦∇v⟧` on its own.
pub fn assemble_grad_penalty(space: &FeSpace, sigma: f64) -> Result<CsrMatrix> {
    check_sigma(sigma)?;
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_grad_penalty(space, sigma, 2 * space.degree(), 1.0, &mut t)?;
    Ok(t.build())
}

/// Symmetric interior penalty matrix for the Laplacian.
pub fn assemble_ip(space: &FeSpace, sigma: f64) -> Result<CsrMatrix> {
    check_sigma(sigma)?;
    let k = space.degree();
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_stiffness(space, None, 2 * k, &mut t)?;
    add_consistency(space, None, 2 * k, 1.0, &mut t)?;
    add_penalty(space, sigma, 1.0, 2 * k, 1.0, &mut t)?;
    Ok(t.build())
}

/// Babuška–Zlámal matrix (`β = 1`).
pub fn assemble_bz(space: &FeSpace, sigma: f64) -> Result<CsrMatrix> {
    assemble_bz_overpen(space, sigma, 1.0)
}

/// Over-penalized Babuška–Zlámal matrix with weight `h_e^{-β}`.
pub fn assemble_bz_overpen(space: &FeSpace, sigma: f64, beta: f64) -> Result<CsrMatrix> {
    check_sigma(sigma)?;
    if !(beta >= 1.0 && beta.is_finite()) {
        return Err(invalid("over-penalization exponent must be >= 1"));
    }
    let k = space.degree();
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_stiffness(space, None, 2 * k, &mut t)?;
    add_penalty(space, sigma, beta, 2 * k, 1.0, &mut t)?;
    Ok(t.build())
}

/// `∫ f v` with overkill quadrature.
pub fn load_exact(space: &FeSpace, f: &ScalarFn) -> Result<Vec<f64>> {
    load_with(space, overkill_order(space.degree()), |_, _, x| f(x))
}

fn load_with(
    space: &FeSpace,
    order: usize,
    f: impl Fn(usize, Point, Point) -> f64,
) -> Result<Vec<f64>> {
    let mesh = space.mesh();
    let rule = triangle_rule(order)?;
    let tab = space.basis().tabulate(&rule.points);
    let n = space.local_dim();
    let mut b = vec![0.0; space.num_dofs()];
    for k in 0..mesh.num_cells() {
        let map = mesh.cell_map(k);
        let jac = map.det.abs();
        let dofs = space.cell_dofs(k);
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let fv = w * jac * f(k, p, map.to_physical(p));
            for (i, &d) in dofs.iter().enumerate().take(n) {
                if d != FIXED {
                    b[d] += fv * tab.value(q, i);
                }
            }
        }
    }
    Ok(b)
}

/// Discrete projection `P_{max(k-2,0)} f` computed with the scheme rule.
pub fn project_source(space: &FeSpace, f: &ScalarFn) -> Result<FeFunction> {
    let k = space.degree();
    l2_project(
        space.mesh(),
        k.saturating_sub(2),
        scheme_order(k),
        |_, _, x| f(x),
    )
}

/// `Σ_K Q_K^{2k-2}((P_{k-2} f) v) = ∫ P_{k-2} f v`.
pub fn load_projected(space: &FeSpace, f: &ScalarFn) -> Result<Vec<f64>> {
    let pf = project_source(space, f)?;
    load_with(space, scheme_order(space.degree()), |cell, xi, _| {
        pf.eval(cell, xi).value
    })
}

/// Conforming scheme with every cell integral at quadrature order `2k - 2`.
pub fn assemble_cg_quad(space: &FeSpace, coeff: &Coefficient) -> Result<SparseSystem> {
    if !space.is_continuous() {
        return Err(invalid("cg-quad needs a continuous space"));
    }
    let k = space.degree();
    let matrix = assemble_stiffness(space, Some(&coeff.diffusion), scheme_order(k))?;
    SparseSystem::new(matrix, load_projected(space, &coeff.source)?, true)
}

/// Interior penalty under quadrature: cells at order `2k-2`, consistency
/// terms at `2k-1`, penalty at `2k`.
pub fn assemble_ip_quad(space: &FeSpace, coeff: &Coefficient, sigma: f64) -> Result<SparseSystem> {
    check_sigma(sigma)?;
    if space.is_continuous() {
        return Err(invalid("ip-quad needs a discontinuous space"));
    }
    let k = space.degree();
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    add_stiffness(space, Some(&coeff.diffusion), scheme_order(k), &mut t)?;
    add_consistency(space, Some(&coeff.diffusion), 2 * k - 1, 1.0, &mut t)?;
    add_penalty(space, sigma, 1.0, 2 * k, 1.0, &mut t)?;
    SparseSystem::new(t.build(), load_projected(space, &coeff.source)?, true)
}

/// Matrix-valued finite element function; component `2a + b` holds entry `[a][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeHessian {
    pub components: [FeFunction; 4],
}

impl FeHessian {
    pub fn eval(&self, cell: usize, xi: Point) -> Mat2 {
        let c = |i: usize| self.components[i].eval(cell, xi).value;
        [[c(0), c(1)], [c(2), c(3)]]
    }

    /// Local nodal values of the four components.
    pub fn local(&self, cell: usize) -> [LocalCoeffs; 4] {
        [0, 1, 2, 3].map(|i| self.components[i].local(cell))
    }

    /// Value at tabulated point `q` from [`FeHessian::local`] data.
    pub fn eval_tab(local: &[LocalCoeffs; 4], tab: &Tabulation, q: usize) -> Mat2 {
        let v = |c: &LocalCoeffs| {
            c.as_slice()
                .iter()
                .enumerate()
                .map(|(i, x)| x * tab.value(q, i))
                .sum::<f64>()
        };
        [[v(&local[0]), v(&local[1])], [v(&local[2]), v(&local[3])]]
    }
}

/// Cell-local pieces of the Hessian lifting.
struct Lifting<'a> {
    space: &'a FeSpace,
    rule_w: Vec<f64>,
    tab: Tabulation,
    etabs: EdgeTabs,
    edge_w: Vec<f64>,
    mass_inv: DenseMatrix,
}

/// Right-hand sides of the lifting on one cell: rows are the cell's test
/// functions, columns the trial functions of the cell itself followed by
/// its three edge neighbours (`cells[1 + e]` across local edge `e`).
struct LiftBlocks {
    cells: [Option<usize>; 4],
    r: [Vec<f64>; 4],
}

impl<'a> Lifting<'a> {
    fn new(space: &'a FeSpace) -> Result<Self> {
        let k = space.degree();
        let rule = triangle_rule(2 * k)?;
        let tab = space.basis().tabulate(&rule.points);
        let erule = edge_rule(2 * k)?;
        let etabs = EdgeTabs::new(space.basis(), &erule);
        let mass_inv = reference_mass_inverse(&tab, &rule)?;
        Ok(Self {
            space,
            rule_w: rule.weights,
            tab,
            etabs,
            edge_w: erule.weights,
            mass_inv,
        })
    }

    fn blocks(&self, cell: usize) -> LiftBlocks {
        let mesh = self.space.mesh();
        let n = self.space.local_dim();
        let m = 4 * n;
        let map = mesh.cell_map(cell);
        let jac = map.det.abs();
        let mut r = [
            vec![0.0; n * m],
            vec![0.0; n * m],
            vec![0.0; n * m],
            vec![0.0; n * m],
        ];
        let mut cells = [Some(cell), None, None, None];
        let mut hess = [[[0.0; 2]; 2]; MAX_LOCAL];
        for (q, &w) in self.rule_w.iter().enumerate() {
            physical_hessians(&map, &self.tab, q, &mut hess[..n]);
            for i in 0..n {
                let vi = w * jac * self.tab.value(q, i);
                for (j, hj) in hess.iter().enumerate().take(n) {
                    for a in 0..2 {
                        for b in 0..2 {
                            r[2 * a + b][i * m + j] += vi * hj[a][b];
                        }
                    }
                }
            }
        }
        let sk = mesh.skeleton();
        let mut gi = [[0.0; 2]; MAX_LOCAL];
        let mut gj = [[0.0; 2]; MAX_LOCAL];
        for le in 0..3 {
            let e = sk.cell_edges[cell][le];
            let edge = &sk.edges[e];
            let (sides, ns) = edge_sides(mesh, e);
            let si = if sides[0].cell == cell { 0 } else { 1 };
            let test = sides[si];
            let ttab = self.etabs.get(test.local_edge, test.reversed);
            let nrm = edge.normal;
            let interior = ns == 2;
            let trials: &[(Side, usize)] = &if interior {
                [(test, 0), (sides[1 - si], 1 + le)]
            } else {
                [(test, 0), (test, usize::MAX)]
            }[..if interior { 2 } else { 1 }];
            if interior {
                cells[1 + le] = Some(sides[1 - si].cell);
            }
            for &(trial, blk) in trials {
                let tmap = mesh.cell_map(trial.cell);
                let jtab = self.etabs.get(trial.local_edge, trial.reversed);
                for (q, &w) in self.edge_w.iter().enumerate() {
                    let wl = w * edge.length;
                    physical_grads(&map, ttab, q, &mut gi[..n]);
                    physical_grads(&tmap, jtab, q, &mut gj[..n]);
                    for i in 0..n {
                        let vi = ttab.value(q, i) * test.avg;
                        for j in 0..n {
                            let vj = jtab.value(q, j) * trial.sign;
                            let col = i * m + blk * n + j;
                            for a in 0..2 {
                                for b in 0..2 {
                                    let mut val = vj * nrm[b] * test.avg * gi[i][a];
                                    if interior {
                                        val -= trial.sign * nrm[a] * gj[j][b] * vi;
                                    }
                                    r[2 * a + b][col] += wl * val;
                                }
                            }
                        }
                    }
                }
            }
        }
        LiftBlocks { cells, r }
    }
}

/// Finite element Hessian: for each entry `[a][b]`, the broken function
/// `H_ab ∈ P_k(T)` with
/// `∫ H φ = ∫ Hess_h u φ - ∫_{E int} (n ⊗ ⟦∇u⟧) {φ} + ∫_E ({∇φ} ⊗ ⟦u⟧)`.
pub fn fe_hessian(u: &FeFunction) -> Result<FeHessian> {
    let u = u.to_dg()?;
    let space = u.space();
    let n = space.local_dim();
    let lift = Lifting::new(space)?;
    let mesh = space.mesh();
    let mut comps = [
        vec![0.0; space.num_dofs()],
        vec![0.0; space.num_dofs()],
        vec![0.0; space.num_dofs()],
        vec![0.0; space.num_dofs()],
    ];
    let mut ucols = vec![0.0; 4 * n];
    let mut rhs = vec![0.0; n];
    for k in 0..mesh.num_cells() {
        let blocks = lift.blocks(k);
        ucols.iter_mut().for_each(|v| *v = 0.0);
        for (b, c) in blocks.cells.iter().enumerate() {
            if let Some(c) = c {
                ucols[b * n..(b + 1) * n].copy_from_slice(u.local(*c).as_slice());
            }
        }
        let jac = mesh.cell_map(k).det.abs();
        for (ab, comp) in comps.iter_mut().enumerate() {
            for (i, ri) in rhs.iter_mut().enumerate() {
                *ri = (0..4 * n)
                    .map(|j| blocks.r[ab][i * 4 * n + j] * ucols[j])
                    .sum();
            }
            for i in 0..n {
                comp[k * n + i] = (0..n).map(|j| lift.mass_inv[(i, j)] * rhs[j]).sum::<f64>() / jac;
            }
        }
    }
    let [c0, c1, c2, c3] = comps;
    Ok(FeHessian {
        components: [
            FeFunction::new(space.clone(), c0)?,
            FeFunction::new(space.clone(), c1)?,
            FeFunction::new(space.clone(), c2)?,
            FeFunction::new(space.clone(), c3)?,
        ],
    })
}

/// Sign of the stabilizing penalties: `+1` when `A` is negative definite,
/// `-1` when positive definite.
fn penalty_sign(space: &FeSpace, coeff: &Coefficient) -> Result<f64> {
    Ok(match coeff.definiteness(space.mesh(), 2)? {
        Definiteness::Positive => -1.0,
        Definiteness::Negative => 1.0,
    })
}

/// Nonvariational scheme `∫ A:H(u) v ± σ(Σ h⟦∇u⟧⟦∇v⟧ + Σ h⁻¹⟦u⟧·⟦v⟧) = ∫ f v`
/// with `H` eliminated cell by cell. With `quadrature` set, the cell term
/// uses order `2k - 2` and the load `∫ P_{k-2} f v`.
pub fn assemble_nonvar(
    space: &FeSpace,
    coeff: &Coefficient,
    sigma: f64,
    quadrature: bool,
) -> Result<SparseSystem> {
    check_sigma(sigma)?;
    nonvar_degree(space)?;
    let k = space.degree();
    let sign = penalty_sign(space, coeff)?;
    let mesh = space.mesh();
    let n = space.local_dim();
    let lift = Lifting::new(space)?;
    let order = if quadrature {
        scheme_order(k)
    } else {
        overkill_order(k)
    };
    let rule = triangle_rule(order)?;
    let tab = space.basis().tabulate(&rule.points);
    let mut t = TripletBuilder::with_capacity(
        space.num_dofs(),
        space.num_dofs(),
        mesh.num_cells() * 4 * n * n * 2,
    );
    let mut weighted = [
        DenseMatrix::zeros(n, n),
        DenseMatrix::zeros(n, n),
        DenseMatrix::zeros(n, n),
        DenseMatrix::zeros(n, n),
    ];
    let mut block = vec![0.0; n * 4 * n];
    for cell in 0..mesh.num_cells() {
        let map = mesh.cell_map(cell);
        let jac = map.det.abs();
        for w in weighted.iter_mut() {
            *w = DenseMatrix::zeros(n, n);
        }
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let a = coeff.a(map.to_physical(p));
            for i in 0..n {
                for m in 0..n {
                    let base = w * jac * tab.value(q, i) * tab.value(q, m);
                    for ab in 0..4 {
                        weighted[ab][(i, m)] += base * a[ab / 2][ab % 2];
                    }
                }
            }
        }
        let blocks = lift.blocks(cell);
        block.iter_mut().for_each(|v| *v = 0.0);
        for ab in 0..4 {
            // weighted mass times inverse cell mass, then times the lifting rows
            let g = weighted[ab].matmul(&lift.mass_inv);
            for i in 0..n {
                for mm in 0..n {
                    let gim = g[(i, mm)] / jac;
                    if gim == 0.0 {
                        continue;
                    }
                    let row = &blocks.r[ab][mm * 4 * n..(mm + 1) * 4 * n];
                    for (bv, rv) in block[i * 4 * n..(i + 1) * 4 * n].iter_mut().zip(row) {
                        *bv += gim * rv;
                    }
                }
            }
        }
        let rows = space.cell_dofs(cell);
        for (b, c) in blocks.cells.iter().enumerate() {
            if let Some(c) = c {
                let cols = space.cell_dofs(*c);
                for i in 0..n {
                    for j in 0..n {
                        let v = block[i * 4 * n + b * n + j];
                        if v != 0.0 {
                            t.add(rows[i], cols[j], v);
                        }
                    }
                }
            }
        }
    }
    add_grad_penalty(space, sigma, 2 * k, sign, &mut t)?;
    add_penalty(space, sigma, 1.0, 2 * k, sign, &mut t)?;
    let rhs = if quadrature {
        load_projected(space, &coeff.source)?
    } else {
        load_exact(space, &coeff.source)?
    };
    SparseSystem::new(t.build(), rhs, false)
}

fn nonvar_degree(space: &FeSpace) -> Result<()> {
    if space.is_continuous() || space.degree() < 2 {
        return Err(invalid(
            "nonvariational schemes need a discontinuous space of degree >= 2",
        ));
    }
    Ok(())
}

/// Consistent nonvariational scheme
/// `∫ A:Hess_h u v - Σ_{e int} ∫ (n ⊗ ⟦∇u⟧):{A v} ± penalties = ∫ f v`.
pub fn assemble_nonvar_consistent(
    space: &FeSpace,
    coeff: &Coefficient,
    sigma: f64,
) -> Result<SparseSystem> {
    check_sigma(sigma)?;
    nonvar_degree(space)?;
    let k = space.degree();
    let sign = penalty_sign(space, coeff)?;
    let mesh = space.mesh();
    let n = space.local_dim();
    let order = overkill_order(k);
    let rule = triangle_rule(order)?;
    let tab = space.basis().tabulate(&rule.points);
    let mut t = TripletBuilder::new(space.num_dofs(), space.num_dofs());
    let mut hess = [[[0.0; 2]; 2]; MAX_LOCAL];
    let mut local = vec![0.0; n * n];
    for cell in 0..mesh.num_cells() {
        let map: CellMap = mesh.cell_map(cell);
        let jac = map.det.abs();
        local.iter_mut().for_each(|v| *v = 0.0);
        for (q, (&p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let a = coeff.a(map.to_physical(p));
            physical_hessians(&map, &tab, q, &mut hess[..n]);
            for j in 0..n {
                let ah = geom::frob(&a, &hess[j]);
                for i in 0..n {
                    local[i * n + j] += w * jac * ah * tab.value(q, i);
                }
            }
        }
        let d = space.cell_dofs(cell);
        scatter(&mut t, d, d, &local);
    }
    let a = coeff.diffusion.clone();
    edge_loop(space, order, &mut t, |ctx, local| {
        if !ctx.interior() {
            return;
        }
        let m = 2 * n;
        for (q, &w) in ctx.weights.iter().enumerate() {
            let an = geom::mat_vec(&a(ctx.points[q]), ctx.normal);
            for (s, ds) in ctx.sides.iter().enumerate() {
                for (tt, dt) in ctx.sides.iter().enumerate() {
                    for i in 0..n {
                        let vi = ds.vals[q * n + i] * ds.side.avg;
                        for j in 0..n {
                            let gj = geom::dot(an, dt.grads[q * n + j]) * dt.side.sign;
                            local[(s * n + i) * m + tt * n + j] -= w * gj * vi;
                        }
                    }
                }
            }
        }
    })?;
    add_grad_penalty(space, sigma, 2 * k, sign, &mut t)?;
    add_penalty(space, sigma, 1.0, 2 * k, sign, &mut t)?;
    SparseSystem::new(t.build(), load_exact(space, &coeff.source)?, false)
}
