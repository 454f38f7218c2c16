//! Maximum-strategy adaptive loop with inconsistency weighting.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::coeff::Coefficient;
use crate::error::{invalid, Error, Result};
use crate::estimate::{
    estimate_cg_quad, estimate_dg_quad, estimate_energy_laplace, estimate_l2_dual, estimate_nonvar,
    estimate_nonvar_dual, estimate_nonvar_quad, EstimateReport, EstimatorFamily,
};
use crate::forms::{assemble, fe_hessian, Scheme};
use crate::mesh::Mesh;
use crate::solver::{solve, LinearSolverConfig, SolveReport};
use crate::space::FeFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptConfig {
    /// Weights of the residual, inconsistency and jump totals; they sum to one.
    pub weights: [f64; 3],
    pub tolerance: f64,
    pub refine_threshold: f64,
    pub coarsen_threshold: f64,
    pub max_iterations: usize,
    /// Stop before a sweep would start from more unknowns than this.
    pub max_dofs: Option<usize>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            weights: [1.0 / 3.0; 3],
            tolerance: 0.0,
            refine_threshold: 0.5,
            coarsen_threshold: 0.05,
            max_iterations: 25,
            max_dofs: None,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.weights.iter().any(|w| *w < 0.0) {
            return Err(invalid(
                "adaptivity weights must be nonnegative and sum to one",
            ));
        }
        if !(self.coarsen_threshold >= 0.0
            && self.coarsen_threshold < self.refine_threshold
            && self.refine_threshold <= 1.0)
        {
            return Err(invalid(
                "thresholds must satisfy 0 <= coarsen < refine <= 1",
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(invalid("tolerance must be nonnegative"));
        }
        Ok(())
    }

    /// Weighted total; without an inconsistency part the remaining weights
    /// are rescaled to sum to one.
    pub fn weighted_total(&self, report: &EstimateReport) -> f64 {
        let [a, b, c] = self.weights;
        let (r, i, j) = (
            report.total_residual(),
            report.total_inconsistency(),
            report.total_jump(),
        );
        if report.has_inconsistency() {
            a * r + b * i + c * j
        } else if a + c > 0.0 {
            (a * r + c * j) / (a + c)
        } else {
            0.0
        }
    }
}

/// `η_K = residual + ½ Σ_{e ⊂ K} jump + inconsistency` per cell.
pub fn cell_indicators(report: &EstimateReport, mesh: &Mesh) -> Result<Vec<f64>> {
    if report.residual.len() != mesh.num_cells() || report.jump.len() != mesh.skeleton().edges.len()
    {
        return Err(invalid("estimate does not cover the mesh"));
    }
    let incons = report.bound_inconsistency();
    Ok((0..mesh.num_cells())
        .map(|k| {
            let j: f64 = mesh.skeleton().cell_edges[k]
                .iter()
                .map(|&e| report.jump[e])
                .sum();
            report.residual[k] + 0.5 * j + incons[k]
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Marking {
    pub refine: Vec<usize>,
    pub coarsen: Vec<usize>,
}

/// Refines every cell with `η ≥ θ max η` and coarsens those with `η ≤ θ_c max η`.
pub fn mark_indicators(
    eta: &[f64],
    refine_threshold: f64,
    coarsen_threshold: f64,
) -> Result<Marking> {
    if eta.is_empty() {
        return Err(invalid("cannot mark an empty mesh"));
    }
    let max = eta.iter().cloned().fold(0.0, f64::max);
    let mut m = Marking::default();
    for (k, &v) in eta.iter().enumerate() {
        if v >= refine_threshold * max {
            m.refine.push(k);
        } else if v <= coarsen_threshold * max {
            m.coarsen.push(k);
        }
    }
    Ok(m)
}

pub fn mark(report: &EstimateReport, mesh: &Mesh, config: &AdaptConfig) -> Result<Marking> {
    mark_indicators(
        &cell_indicators(report, mesh)?,
        config.refine_threshold,
        config.coarsen_threshold,
    )
}

/// Scheme, data and estimator of a problem to be solved on varying meshes.
#[derive(Debug, Clone)]
pub struct Problem {
    pub scheme: Scheme,
    pub degree: usize,
    pub sigma: f64,
    pub coefficient: Coefficient,
    pub family: EstimatorFamily,
    pub solver: LinearSolverConfig,
}

/// Solution, estimate and (with an exact solution) error on one mesh.
#[derive(Debug, Clone)]
pub struct Step {
    pub solution: FeFunction,
    pub report: EstimateReport,
    pub solve: SolveReport,
    pub galerkin_residual: f64,
    pub error: Option<f64>,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        use EstimatorFamily as F;
        let ok = match self.family {
            F::Energy => matches!(
                self.scheme,
                Scheme::Ip | Scheme::Bz | Scheme::BzOverpen { .. }
            ),
            F::Dual => matches!(self.scheme, Scheme::Ip | Scheme::BzOverpen { .. }),
            F::CgQuad => self.scheme == Scheme::CgQuad,
            F::DgQuad => self.scheme == Scheme::IpQuad,
            F::Nonvar | F::NonvarDual => self.scheme == Scheme::Nonvar,
            F::NonvarConsistent => self.scheme == Scheme::NonvarConsistent,
            F::NonvarQuad => self.scheme == Scheme::NonvarQuad,
        };
        if !ok {
            return Err(Error::InvalidArgument(alloc::format!(
                "estimator {} does not apply to scheme {}",
                self.family.name(),
                self.scheme.name()
            )));
        }
        if self.degree < self.scheme.min_degree() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} needs degree >= {}",
                self.scheme.name(),
                self.scheme.min_degree()
            )));
        }
        self.solver.validate()
    }

    pub fn solve(&self, mesh: &Arc<Mesh>) -> Result<(FeFunction, SolveReport, f64)> {
        let space = self.scheme.space(mesh.clone(), self.degree)?;
        let system = assemble(self.scheme, &space, &self.coefficient, self.sigma)?;
        let (x, report) = solve(&system, &self.solver)?;
        let res = system.galerkin_residual(&x);
        Ok((FeFunction::new(space, x)?, report, res))
    }

    pub fn estimate(&self, u: &FeFunction) -> Result<EstimateReport> {
        let c = &self.coefficient;
        match self.family {
            EstimatorFamily::Energy => estimate_energy_laplace(u, &c.source, self.sigma),
            EstimatorFamily::Dual => {
                let beta = match self.scheme {
                    Scheme::BzOverpen { beta } => Some(beta),
                    _ => None,
                };
                estimate_l2_dual(u, &c.source, self.sigma, beta)
            }
            EstimatorFamily::CgQuad => estimate_cg_quad(u, c),
            EstimatorFamily::DgQuad => estimate_dg_quad(u, c, self.sigma),
            EstimatorFamily::Nonvar => estimate_nonvar(u, c, Some(&fe_hessian(u)?), false),
            EstimatorFamily::NonvarConsistent => estimate_nonvar(u, c, None, true),
            EstimatorFamily::NonvarQuad => estimate_nonvar_quad(u, c, None),
            EstimatorFamily::NonvarDual => estimate_nonvar_dual(u, c, None),
        }
    }

    /// Error in the estimator's norm against the exact solution, if known.
    pub fn error(&self, u: &FeFunction) -> Result<Option<f64>> {
        match &self.coefficient.exact {
            Some(exact) => Ok(Some(crate::estimate::true_error(
                u,
                &**exact,
                self.family.norm(),
            )?)),
            None => Ok(None),
        }
    }

    pub fn step(&self, mesh: &Arc<Mesh>) -> Result<Step> {
        let (solution, solve, galerkin_residual) = self.solve(mesh)?;
        let report = self.estimate(&solution)?;
        let error = self.error(&solution)?;
        Ok(Step {
            solution,
            report,
            solve,
            galerkin_residual,
            error,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptRecord {
    pub iterate: usize,
    pub cells: usize,
    pub dofs: usize,
    pub residual: f64,
    pub inconsistency: f64,
    pub jump: f64,
    pub estimate: f64,
    pub weighted_total: f64,
    pub refined: usize,
    pub coarsened: usize,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdaptTrace {
    pub records: Vec<AdaptRecord>,
}

/// Final state of a completed loop.
#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub trace: AdaptTrace,
    pub mesh: Arc<Mesh>,
    pub last: Step,
}

/// Aborted loop with everything recorded up to the failure.
#[derive(Debug, Clone)]
pub struct AdaptFailure {
    pub error: Error,
    pub trace: AdaptTrace,
}

impl core::fmt::Display for AdaptFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "adaptive loop stopped after {} iterates: {}",
            self.trace.records.len(),
            self.error
        )
    }
}

/// Runs the loop from `mesh`, calling `observe` after each estimate.
pub fn adaptive_loop(
    problem: &Problem,
    mesh: Arc<Mesh>,
    config: &AdaptConfig,
    mut observe: impl FnMut(usize, &Arc<Mesh>, &Step),
) -> core::result::Result<AdaptOutcome, AdaptFailure> {
    let mut trace = AdaptTrace::default();
    let fail = |error: Error, trace: AdaptTrace| AdaptFailure { error, trace };
    if let Err(e) = config.validate().and_then(|_| problem.validate()) {
        return Err(fail(e, trace));
    }
    let mut mesh = mesh;
    let mut fresh = vec![false; mesh.num_cells()];
    let mut iterate = 0;
    loop {
        let step = match problem.step(&mesh) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, trace)),
        };
        observe(iterate, &mesh, &step);
        let r = &step.report;
        let weighted = config.weighted_total(r);
        let mut record = AdaptRecord {
            iterate,
            cells: mesh.num_cells(),
            dofs: step.solution.space().num_dofs(),
            residual: r.total_residual(),
            inconsistency: r.total_inconsistency(),
            jump: r.total_jump(),
            estimate: r.total(),
            weighted_total: weighted,
            refined: 0,
            coarsened: 0,
            error: step.error,
        };
        let over_budget = config.max_dofs.is_some_and(|m| record.dofs >= m);
        if weighted <= config.tolerance || iterate >= config.max_iterations || over_budget {
            trace.records.push(record);
            return Ok(AdaptOutcome {
                trace,
                mesh,
                last: step,
            });
        }
        let mut marking = match mark(r, &mesh, config) {
            Ok(m) => m,
            Err(e) => return Err(fail(e, trace)),
        };
        // cells created by the previous refinement are kept for one sweep
        marking.coarsen.retain(|&k| !fresh[k]);
        let next = (|| -> Result<(Mesh, usize)> {
            let c = mesh.coarsen(&marking.coarsen)?;
            record.coarsened = 2 * c.merged;
            let refine: Vec<usize> = marking.refine.iter().map(|&k| c.cell_map[k]).collect();
            record.refined = refine.len();
            let nodes = c.mesh.forest().len();
            Ok((c.mesh.refine(&refine)?, nodes))
        })();
        trace.records.push(record);
        match next {
            Ok((m, nodes)) => {
                fresh = (0..m.num_cells())
                    .map(|k| m.cell_node(k) >= nodes)
                    .collect();
                mesh = Arc::new(m);
            }
            Err(e) => return Err(fail(e, trace)),
        }
        iterate += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marking_rules() {
        let m = mark_indicators(&[1.0, 0.5, 0.1], 0.5, 0.05).unwrap();
        assert_eq!(m.refine, [0, 1]);
        assert!(m.coarsen.is_empty());
        let m = mark_indicators(&[2.0, 2.0, 2.0], 0.5, 0.05).unwrap();
        assert_eq!(m.refine, [0, 1, 2]);
        let m = mark_indicators(&[1.0, 3.0, 0.01], 1.0, 0.05).unwrap();
        assert_eq!(m.refine, [1]);
        assert_eq!(m.coarsen, [2]);
        assert!(mark_indicators(&[], 0.5, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AdaptConfig::default().validate().is_ok());
        let bad = AdaptConfig {
            weights: [0.5, 0.5, 0.5],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AdaptConfig {
            coarsen_threshold: 0.6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
