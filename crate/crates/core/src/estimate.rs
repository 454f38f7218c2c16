//! A posteriori error estimators.
//!
//! Every report stores unsquared local contributions: a residual and an
//! inconsistency part per cell and a jump part per edge. Totals are square
//! roots of sums of squares. Gradient jumps enter on interior edges only.

use alloc::vec;
use alloc::vec::Vec;

use crate::coeff::{Coefficient, ScalarFn};
use crate::error::{invalid, Result};
use crate::forms::{fe_hessian, overkill_order, project_source, scheme_order, FeHessian};
use crate::geom::{self, Point};
use crate::mesh::Mesh;
use crate::quadrature::{composite_triangle_rule, edge_rule, triangle_rule, TriangleRule};
use crate::reconstruct::oswald;
use crate::space::{l2_project, norm_parts, trace, Eval, FeFunction, NormParts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorFamily {
    /// Energy-norm estimator for IP and BZ solutions of `-Δu = f`.
    Energy,
    /// L² estimator for IP and over-penalized BZ solutions of `-Δu = f`.
    Dual,
    /// Conforming elements under quadrature.
    CgQuad,
    /// Interior penalty under quadrature.
    DgQuad,
    /// Nonvariational scheme with the finite element Hessian.
    Nonvar,
    /// Nonvariational scheme with the broken Hessian.
    NonvarConsistent,
    /// Nonvariational scheme under quadrature.
    NonvarQuad,
    /// L² estimator of the nonvariational scheme.
    NonvarDual,
}

impl EstimatorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorFamily::Energy => "energy",
            EstimatorFamily::Dual => "dual",
            EstimatorFamily::CgQuad => "cg-quad",
            EstimatorFamily::DgQuad => "dg-quad",
            EstimatorFamily::Nonvar => "nonvar",
            EstimatorFamily::NonvarConsistent => "nonvar-consistent",
            EstimatorFamily::NonvarQuad => "nonvar-quad",
            EstimatorFamily::NonvarDual => "nonvar-dual",
        }
    }

    /// Norm in which the estimator bounds the error.
    pub fn norm(&self) -> ErrorNorm {
        match self {
            EstimatorFamily::Energy | EstimatorFamily::CgQuad | EstimatorFamily::DgQuad => {
                ErrorNorm::Energy
            }
            EstimatorFamily::Dual | EstimatorFamily::NonvarDual => ErrorNorm::L2,
            EstimatorFamily::Nonvar
            | EstimatorFamily::NonvarConsistent
            | EstimatorFamily::NonvarQuad => ErrorNorm::H2,
        }
    }

    pub fn has_inconsistency(&self) -> bool {
        matches!(
            self,
            EstimatorFamily::CgQuad | EstimatorFamily::DgQuad | EstimatorFamily::NonvarQuad
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorNorm {
    /// `(‖∇_h w‖² + Σ h_e⁻¹‖⟦w⟧‖²)^{1/2}`.
    Energy,
    L2,
    /// `(‖Hess_h w‖² + Σ h_e⁻¹‖⟦∇w⟧‖² + Σ h_e⁻³‖⟦w⟧‖²)^{1/2}`.
    H2,
}

impl ErrorNorm {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorNorm::Energy => "energy",
            ErrorNorm::L2 => "l2",
            ErrorNorm::H2 => "h2",
        }
    }

    pub fn of(&self, parts: &NormParts) -> f64 {
        match self {
            ErrorNorm::Energy => parts.enorm(),
            ErrorNorm::L2 => parts.l2(),
            ErrorNorm::H2 => parts.eenorm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub family: EstimatorFamily,
    pub norm: ErrorNorm,
    /// Residual part per cell.
    pub residual: Vec<f64>,
    /// Inconsistency part per cell evaluated on the discrete solution
    /// (all zero for families without data approximation).
    pub inconsistency: Vec<f64>,
    /// Inconsistency part evaluated on a conforming reconstruction, where
    /// the upper bound asks for it.
    pub reconstructed_inconsistency: Option<Vec<f64>>,
    /// Jump part per edge.
    pub jump: Vec<f64>,
    /// The H² reconstruction is replaced by the Hessian of the nodal average.
    pub surrogate_reconstruction: bool,
    /// Reliability rests on the well-posedness of a dual problem.
    pub assumes_dual_regularity: bool,
    /// Over-penalization exponent below the value covered by the L² bound.
    pub weak_overpenalization: bool,
}

fn total(v: &[f64]) -> f64 {
    geom::sqrt(v.iter().map(|x| x * x).sum())
}

impl EstimateReport {
    fn new(family: EstimatorFamily, residual: Vec<f64>, jump: Vec<f64>) -> Self {
        let n = residual.len();
        Self {
            family,
            norm: family.norm(),
            residual,
            inconsistency: vec![0.0; n],
            reconstructed_inconsistency: None,
            jump,
            surrogate_reconstruction: false,
            assumes_dual_regularity: false,
            weak_overpenalization: false,
        }
    }

    pub fn has_inconsistency(&self) -> bool {
        self.family.has_inconsistency()
    }

    /// Inconsistency part entering the upper bound.
    pub fn bound_inconsistency(&self) -> &[f64] {
        self.reconstructed_inconsistency
            .as_deref()
            .unwrap_or(&self.inconsistency)
    }

    pub fn total_residual(&self) -> f64 {
        total(&self.residual)
    }

    pub fn total_jump(&self) -> f64 {
        total(&self.jump)
    }

    /// Upper-bound inconsistency total.
    pub fn total_inconsistency(&self) -> f64 {
        total(self.bound_inconsistency())
    }

    /// Inconsistency total on the discrete solution, as used by lower bounds.
    pub fn total_inconsistency_discrete(&self) -> f64 {
        total(&self.inconsistency)
    }

    pub fn total(&self) -> f64 {
        let (r, i, j) = (
            self.total_residual(),
            self.total_inconsistency(),
            self.total_jump(),
        );
        geom::sqrt(r * r + i * i + j * j)
    }

    /// `(R + J) / (error + I)` with the discrete inconsistency.
    pub fn efficiency_ratio(&self, error: f64) -> f64 {
        (self.total_residual() + self.total_jump())
            / (error + self.total_inconsistency_discrete()).max(1e-300)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Effectivity {
    pub estimate: f64,
    pub error: f64,
    /// `estimate / error`; `+∞` when the error vanishes and the estimate does not.
    pub index: f64,
}

impl Effectivity {
    pub fn is_infinite(&self) -> bool {
        self.index.is_infinite()
    }
}

pub fn effectivity(report: &EstimateReport, error: f64) -> Effectivity {
    let estimate = report.total();
    let index = if error > 0.0 {
        estimate / error
    } else if estimate > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Effectivity {
        estimate,
        error,
        index,
    }
}

/// Error of `u` against `exact` in `norm`, with overkill quadrature.
pub fn true_error(u: &FeFunction, exact: &dyn Fn(Point) -> Eval, norm: ErrorNorm) -> Result<f64> {
    let parts = norm_parts(u, Some(exact), overkill_order(u.space().degree()))?;
    Ok(norm.of(&parts))
}

/// `(∫_K g²)^{1/2}` per cell with `g(cell, xi, x)`.
fn cell_norms(
    mesh: &Mesh,
    order: usize,
    g: impl Fn(usize, Point, Point) -> f64,
) -> Result<Vec<f64>> {
    Ok(cell_norms_with(mesh, &triangle_rule(order)?, g))
}

fn cell_norms_with(
    mesh: &Mesh,
    rule: &TriangleRule,
    g: impl Fn(usize, Point, Point) -> f64,
) -> Vec<f64> {
    (0..mesh.num_cells())
        .map(|k| {
            let map = mesh.cell_map(k);
            let jac = map.det.abs();
            let s: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(&p, &w)| {
                    let v = g(k, p, map.to_physical(p));
                    w * jac * v * v
                })
                .sum();
            geom::sqrt(s)
        })
        .collect()
}

/// Overkill rule on 16 subtriangles, used for data that may vary on scales
/// far below the mesh size.
pub fn inconsistency_rule(k: usize) -> Result<TriangleRule> {
    composite_triangle_rule(overkill_order(k), 2)
}

/// Squared value and gradient jumps of `u` per edge.
fn jumps(u: &FeFunction) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let p = norm_parts(u, None, 2 * u.space().degree().max(1))?;
    Ok((p.jump_sq, p.grad_jump_sq, p.edge_h))
}

fn jump_part(
    u: &FeFunction,
    grad_power: f64,
    value_power: f64,
    value_weight: f64,
) -> Result<Vec<f64>> {
    let (j, g, h) = jumps(u)?;
    Ok(j.iter()
        .zip(&g)
        .zip(&h)
        .map(|((j, g), h)| {
            geom::sqrt(
                libm::pow(*h, grad_power) * g + value_weight * libm::pow(*h, value_power) * j,
            )
        })
        .collect())
}

fn laplace_residual(u: &FeFunction, f: &ScalarFn, h_power: i32) -> Result<Vec<f64>> {
    let mesh = u.mesh();
    let mut r = cell_norms(mesh, overkill_order(u.space().degree()), |k, xi, x| {
        let h = u.eval(k, xi).hess;
        f(x) + h[0][0] + h[1][1]
    })?;
    for (k, v) in r.iter_mut().enumerate() {
        *v *= libm::pow(mesh.diameter(k), h_power as f64);
    }
    Ok(r)
}

/// `h_K²‖f + Δu‖²_K` and `h_e‖⟦∇u⟧‖²_e + σ h_e⁻¹‖⟦u⟧‖²_e`; shared by IP and BZ.
pub fn estimate_energy_laplace(u: &FeFunction, f: &ScalarFn, sigma: f64) -> Result<EstimateReport> {
    let residual = laplace_residual(u, f, 1)?;
    let jump = jump_part(u, 1.0, -1.0, sigma)?;
    Ok(EstimateReport::new(EstimatorFamily::Energy, residual, jump))
}

/// `h_K⁴‖f + Δu‖²_K` and `h_e³‖⟦∇u⟧‖²_e + σ h_e‖⟦u⟧‖²_e`. Pass the
/// over-penalization exponent of a BZ solve as `beta`.
pub fn estimate_l2_dual(
    u: &FeFunction,
    f: &ScalarFn,
    sigma: f64,
    beta: Option<f64>,
) -> Result<EstimateReport> {
    let residual = laplace_residual(u, f, 2)?;
    let jump = jump_part(u, 3.0, 1.0, sigma)?;
    let mut r = EstimateReport::new(EstimatorFamily::Dual, residual, jump);
    r.weak_overpenalization = beta.is_some_and(|b| b < 3.0);
    Ok(r)
}

/// Per-cell projection `P_{k-1}(A∇u)`, computed with the scheme rule.
fn projected_flux(u: &FeFunction, coeff: &Coefficient) -> Result<[FeFunction; 2]> {
    let k = u.space().degree();
    let comp = |a: usize| {
        l2_project(u.mesh(), k - 1, scheme_order(k), |cell, xi, x| {
            geom::mat_vec(&coeff.a(x), u.eval(cell, xi).grad)[a]
        })
    };
    Ok([comp(0)?, comp(1)?])
}

struct QuadParts {
    residual: Vec<f64>,
    flux_jump_sq: Vec<f64>,
    inconsistency: Vec<f64>,
}

fn quad_parts(u: &FeFunction, coeff: &Coefficient, eval_order: usize) -> Result<QuadParts> {
    let mesh = u.mesh();
    let k = u.space().degree();
    let pf = project_source(u.space(), &coeff.source)?;
    let [gx, gy] = projected_flux(u, coeff)?;
    let mut residual = cell_norms(mesh, eval_order, |c, xi, _| {
        pf.eval(c, xi).value + gx.eval(c, xi).grad[0] + gy.eval(c, xi).grad[1]
    })?;
    for (c, v) in residual.iter_mut().enumerate() {
        *v *= mesh.diameter(c);
    }
    let erule = edge_rule(eval_order.max(2 * k - 2))?;
    let sk = mesh.skeleton();
    let flux_jump_sq = (0..sk.edges.len())
        .map(|e| {
            let edge = &sk.edges[e];
            if edge.is_boundary() {
                return 0.0;
            }
            let (tx, ty) = (trace(&gx, e, &erule), trace(&gy, e, &erule));
            let (jx, jy) = (tx.jump(), ty.jump());
            erule
                .weights
                .iter()
                .enumerate()
                .map(|(q, w)| {
                    let d = jx[q][0] + jy[q][1];
                    w * edge.length * d * d
                })
                .sum::<f64>()
                * edge.length
        })
        .collect();
    let inconsistency = data_inconsistency(u, coeff, &pf, &[gx, gy], u)?;
    Ok(QuadParts {
        residual,
        flux_jump_sq,
        inconsistency,
    })
}

/// `(h_K²‖f - P f‖² + ‖P(A∇u) - A∇w‖²)^{1/2}` per cell with overkill quadrature.
fn data_inconsistency(
    u: &FeFunction,
    coeff: &Coefficient,
    pf: &FeFunction,
    flux: &[FeFunction; 2],
    w: &FeFunction,
) -> Result<Vec<f64>> {
    let mesh = u.mesh();
    let rule = inconsistency_rule(u.space().degree())?;
    let tw = w.space().basis().tabulate(&rule.points);
    let tp = pf.space().basis().tabulate(&rule.points);
    let tf = flux[0].space().basis().tabulate(&rule.points);
    Ok((0..mesh.num_cells())
        .map(|c| {
            let map = mesh.cell_map(c);
            let jac = map.det.abs();
            let (lw, lp) = (w.local(c), pf.local(c));
            let (lx, ly) = (flux[0].local(c), flux[1].local(c));
            let (mut data, mut s) = (0.0, 0.0);
            for (q, (&p, &wq)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let x = map.to_physical(p);
                let r = coeff.f(x) - pf.eval_tab(&lp, &map, &tp, q).value;
                let ag = geom::mat_vec(&coeff.a(x), w.eval_tab(&lw, &map, &tw, q).grad);
                let d = [
                    flux[0].eval_tab(&lx, &map, &tf, q).value - ag[0],
                    flux[1].eval_tab(&ly, &map, &tf, q).value - ag[1],
                ];
                data += wq * jac * r * r;
                s += wq * jac * geom::dot(d, d);
            }
            let h = mesh.diameter(c);
            geom::sqrt(h * h * data + s)
        })
        .collect())
}

/// Conforming scheme under quadrature. Residual and jump parts are exact
/// polynomial integrals at the scheme order.
pub fn estimate_cg_quad(u: &FeFunction, coeff: &Coefficient) -> Result<EstimateReport> {
    estimate_cg_quad_at(u, coeff, scheme_order(u.space().degree()))
}

/// [`estimate_cg_quad`] with residual and jump parts evaluated at quadrature order `eval_order`.
pub fn estimate_cg_quad_at(
    u: &FeFunction,
    coeff: &Coefficient,
    eval_order: usize,
) -> Result<EstimateReport> {
    if !u.space().is_continuous() {
        return Err(invalid("cg-quad estimator needs a continuous solution"));
    }
    let p = quad_parts(u, coeff, eval_order)?;
    let jump = p.flux_jump_sq.iter().map(|s| geom::sqrt(*s)).collect();
    let mut r = EstimateReport::new(EstimatorFamily::CgQuad, p.residual, jump);
    r.inconsistency = p.inconsistency;
    Ok(r)
}

/// Interior penalty under quadrature; the upper-bound inconsistency uses
/// the nodal average of `u`.
pub fn estimate_dg_quad(u: &FeFunction, coeff: &Coefficient, sigma: f64) -> Result<EstimateReport> {
    estimate_dg_quad_at(u, coeff, sigma, scheme_order(u.space().degree()))
}

pub fn estimate_dg_quad_at(
    u: &FeFunction,
    coeff: &Coefficient,
    sigma: f64,
    eval_order: usize,
) -> Result<EstimateReport> {
    if u.space().is_continuous() {
        return Err(invalid("dg-quad estimator needs a discontinuous solution"));
    }
    let p = quad_parts(u, coeff, eval_order)?;
    let (j, _, h) = jumps(u)?;
    let jump = p
        .flux_jump_sq
        .iter()
        .zip(&j)
        .zip(&h)
        .map(|((f, j), h)| geom::sqrt(f + sigma * j / h))
        .collect();
    let e = oswald(u)?;
    let pf = project_source(u.space(), &coeff.source)?;
    let flux = projected_flux(u, coeff)?;
    let tilde = data_inconsistency(u, coeff, &pf, &flux, &e)?;
    let mut r = EstimateReport::new(EstimatorFamily::DgQuad, p.residual, jump);
    r.inconsistency = p.inconsistency;
    r.reconstructed_inconsistency = Some(tilde);
    Ok(r)
}

fn frob_with(coeff: &Coefficient, x: Point, h: &[[f64; 2]; 2]) -> f64 {
    geom::frob(&coeff.a(x), h)
}

/// Nonvariational estimator: `‖f - A:H(u)‖²_K` (or `A:Hess_h u` in the
/// consistent mode) and `h_e⁻¹‖⟦∇u⟧‖²_e + h_e⁻³‖⟦u⟧‖²_e`.
pub fn estimate_nonvar(
    u: &FeFunction,
    coeff: &Coefficient,
    hessian: Option<&FeHessian>,
    consistent: bool,
) -> Result<EstimateReport> {
    let mesh = u.mesh();
    let order = overkill_order(u.space().degree());
    let residual = if consistent {
        if hessian.is_some() {
            return Err(invalid("the consistent estimator uses the broken Hessian"));
        }
        cell_norms(mesh, order, |c, xi, x| {
            coeff.f(x) - frob_with(coeff, x, &u.eval(c, xi).hess)
        })?
    } else {
        let owned;
        let h = match hessian {
            Some(h) => h,
            None => {
                owned = fe_hessian(u)?;
                &owned
            }
        };
        cell_norms(mesh, order, |c, xi, x| {
            coeff.f(x) - frob_with(coeff, x, &h.eval(c, xi))
        })?
    };
    let jump = jump_part(u, -1.0, -3.0, 1.0)?;
    let family = if consistent {
        EstimatorFamily::NonvarConsistent
    } else {
        EstimatorFamily::Nonvar
    };
    Ok(EstimateReport::new(family, residual, jump))
}

/// Nonvariational estimator under quadrature with `P = P_{k-2}`:
/// residual `‖P f - P(A:H(u))‖`, inconsistency `‖(P - Id)(A:H(u))‖² + ‖f - P f‖²`,
/// reconstructed inconsistency with `H` of the nodal average of `u`.
pub fn estimate_nonvar_quad(
    u: &FeFunction,
    coeff: &Coefficient,
    hessian: Option<&FeHessian>,
) -> Result<EstimateReport> {
    let mesh = u.mesh();
    let k = u.space().degree();
    let owned;
    let h = match hessian {
        Some(h) => h,
        None => {
            owned = fe_hessian(u)?;
            &owned
        }
    };
    let pf = project_source(u.space(), &coeff.source)?;
    let project = |h: &FeHessian| {
        l2_project(mesh, k.saturating_sub(2), scheme_order(k), |c, xi, x| {
            frob_with(coeff, x, &h.eval(c, xi))
        })
    };
    let pah = project(h)?;
    let residual = cell_norms(mesh, 2 * k.saturating_sub(2), |c, xi, _| {
        pf.eval(c, xi).value - pah.eval(c, xi).value
    })?;
    let rule = inconsistency_rule(k)?;
    let data = cell_norms_with(mesh, &rule, |c, xi, x| coeff.f(x) - pf.eval(c, xi).value);
    let incons = |h: &FeHessian, ph: &FeFunction| -> Result<Vec<f64>> {
        let v = cell_norms_with(mesh, &rule, |c, xi, x| {
            ph.eval(c, xi).value - frob_with(coeff, x, &h.eval(c, xi))
        });
        Ok(v.iter()
            .zip(&data)
            .map(|(a, b)| geom::sqrt(a * a + b * b))
            .collect())
    };
    let inconsistency = incons(h, &pah)?;
    let he = fe_hessian(&oswald(u)?)?;
    let tilde = incons(&he, &project(&he)?)?;
    let jump = jump_part(u, -1.0, -3.0, 1.0)?;
    let mut r = EstimateReport::new(EstimatorFamily::NonvarQuad, residual, jump);
    r.inconsistency = inconsistency;
    r.reconstructed_inconsistency = Some(tilde);
    r.surrogate_reconstruction = true;
    Ok(r)
}

/// L² estimator of the nonvariational scheme: `h_K⁴‖f - A:H(u)‖²_K` and
/// `h_e³‖⟦∇u⟧‖²_e + h_e‖⟦u⟧‖²_e`.
pub fn estimate_nonvar_dual(
    u: &FeFunction,
    coeff: &Coefficient,
    hessian: Option<&FeHessian>,
) -> Result<EstimateReport> {
    let mut r = estimate_nonvar(u, coeff, hessian, false)?;
    let mesh = u.mesh();
    for (c, v) in r.residual.iter_mut().enumerate() {
        let h = mesh.diameter(c);
        *v *= h * h;
    }
    r.jump = jump_part(u, 3.0, 1.0, 1.0)?;
    r.family = EstimatorFamily::NonvarDual;
    r.norm = ErrorNorm::L2;
    r.assumes_dual_regularity = true;
    Ok(r)
}

/// `‖Hess_h u - H(u)‖²` together with `Σ h_e⁻¹‖⟦∇u⟧‖² + h_e⁻³‖⟦u⟧‖²`.
pub fn hessian_stability(u: &FeFunction, hessian: &FeHessian) -> Result<(f64, f64)> {
    let mesh = u.mesh();
    let order = 2 * u.space().degree();
    let rule = triangle_rule(order)?;
    let mut lhs = 0.0;
    for c in 0..mesh.num_cells() {
        let jac = mesh.cell_map(c).det.abs();
        for (&p, &w) in rule.points.iter().zip(&rule.weights) {
            let a = u.eval(c, p).hess;
            let b = hessian.eval(c, p);
            let d = [
                [a[0][0] - b[0][0], a[0][1] - b[0][1]],
                [a[1][0] - b[1][0], a[1][1] - b[1][1]],
            ];
            lhs += w * jac * geom::frob(&d, &d);
        }
    }
    let p = norm_parts(u, None, order)?;
    Ok((lhs, p.h2_jump_part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_unit_square;
    use crate::space::FeSpace;
    use alloc::sync::Arc;

    fn coeff_const(f: f64) -> Coefficient {
        Coefficient::laplace(Arc::new(move |_| f))
    }

    #[test]
    fn zero_residual_pair_gives_zero() {
        let s = FeSpace::cg(Arc::new(make_unit_square(4).unwrap()), 2).unwrap();
        let u = FeFunction::zeros(s);
        let f: ScalarFn = Arc::new(|_| 0.0);
        let r = estimate_energy_laplace(&u.to_dg().unwrap(), &f, 10.0).unwrap();
        assert!(r.total() < 1e-14);
    }

    #[test]
    fn cg_quad_constant_data_has_no_inconsistency() {
        let s = FeSpace::cg(Arc::new(make_unit_square(3).unwrap()), 2).unwrap();
        let u = FeFunction::interpolate(s, |p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]));
        let r = estimate_cg_quad(&u, &coeff_const(2.0)).unwrap();
        assert!(
            r.total_inconsistency() < 1e-12,
            "{}",
            r.total_inconsistency()
        );
        assert!(r.total_residual() > 0.0);
        let hi = estimate_cg_quad_at(&u, &coeff_const(2.0), 10).unwrap();
        for (a, b) in r.residual.iter().zip(&hi.residual) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn totals_are_root_sum_of_squares() {
        let s = FeSpace::dg(Arc::new(make_unit_square(2).unwrap()), 1).unwrap();
        let u = FeFunction::interpolate(s, |p| p[0] + 2.0 * p[1]);
        let r = estimate_energy_laplace(&u, &(Arc::new(|_| 1.0) as ScalarFn), 10.0).unwrap();
        let sq: f64 = r.residual.iter().chain(&r.jump).map(|v| v * v).sum();
        assert!((r.total() * r.total() - sq).abs() < 1e-12 * sq);
    }
}
