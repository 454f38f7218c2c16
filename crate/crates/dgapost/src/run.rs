//! Execution of an experiment: solve, estimate, refine and write artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dgapost_core::adapt::{adaptive_loop, Step};
use dgapost_core::estimate::effectivity;
use dgapost_core::mesh::Mesh;
use dgapost_core::solver::Method;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::output::{write_indicator_vtk, write_solution_vtk, write_table, write_trace, TraceRow};
use crate::table::{ConvergenceTable, Refinement, Row};

/// Environment variable overriding the output directory of every run.
pub const OUTPUT_DIR_ENV: &str = "DGAPOST_OUTPUT_DIR";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ConvergenceTable,
    pub trace: Vec<TraceRow>,
    pub directory: PathBuf,
}

/// Output directory by precedence: explicit argument, environment, config
/// file, then `output/<name>`.
pub fn output_dir(config: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    if let Some(p) = &config.output.directory {
        return p.clone();
    }
    let name = if config.name.is_empty() {
        "experiment"
    } else {
        &config.name
    };
    Path::new("output").join(name)
}

fn row(step_index: usize, mesh: &Mesh, step: &Step) -> Row {
    let r = &step.report;
    Row {
        step: step_index,
        cells: mesh.num_cells(),
        dofs: step.solution.space().num_dofs(),
        h: mesh.max_diameter(),
        eta_r: r.total_residual(),
        eta_i: r.total_inconsistency(),
        eta_j: r.total_jump(),
        total: r.total(),
        error: step.error,
        effectivity: step.error.map(|e| effectivity(r, e).index),
        efficiency_ratio: step.error.map(|e| r.efficiency_ratio(e)),
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Auto => "auto",
        Method::Direct => "direct",
        Method::Cg => "cg",
        Method::Gmres => "gmres",
        Method::BiCgStab => "bicgstab",
    }
}

fn trace_row(step_index: usize, mesh: &Mesh, step: &Step) -> TraceRow {
    TraceRow {
        step: step_index,
        cells: mesh.num_cells(),
        dofs: step.solution.space().num_dofs(),
        solver: method_name(step.solve.method).into(),
        iterations: step.solve.iterations,
        solver_residual: step.solve.residual,
        galerkin_residual: step.galerkin_residual,
        weighted_total: None,
        refined: 0,
        coarsened: 0,
    }
}

struct Artifacts<'a> {
    dir: &'a Path,
    vtk: bool,
}

impl Artifacts<'_> {
    fn step(&self, i: usize, mesh: &Mesh, step: &Step) -> Result<()> {
        if self.vtk {
            write_solution_vtk(&self.dir.join(format!("mesh_{i}.vtk")), &step.solution)?;
            write_indicator_vtk(
                &self.dir.join(format!("indicators_{i}.vtk")),
                mesh,
                &step.report,
            )?;
        }
        Ok(())
    }
}

/// Runs `config`, writing `table.csv`, `trace.csv` and per-step VTK files into `dir`.
pub fn run(config: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    config.validate()?;
    let problem = config.problem()?;
    let mesh = Arc::new(config.initial_mesh()?);
    std::fs::create_dir_all(dir)?;
    let out = Artifacts {
        dir,
        vtk: config.output.vtk,
    };
    let (table, trace) = match config.adapt_config() {
        None => {
            let levels = match config.mode {
                crate::config::ModeConfig::Uniform { levels } => levels,
                _ => unreachable!("adaptive mode carries an adapt config"),
            };
            let mut table = ConvergenceTable::new(Refinement::Uniform);
            let mut trace = Vec::new();
            let mut mesh = mesh;
            for level in 0..levels {
                let step = problem.step(&mesh).map_err(Error::Solver)?;
                table.rows.push(row(level, &mesh, &step));
                trace.push(trace_row(level, &mesh, &step));
                out.step(level, &mesh, &step)?;
                if level + 1 < levels {
                    mesh = Arc::new(mesh.refine_uniform().map_err(Error::Solver)?);
                }
            }
            (table, trace)
        }
        Some(adapt) => {
            let mut table = ConvergenceTable::new(Refinement::Adaptive);
            let mut trace = Vec::new();
            let mut io: Result<()> = Ok(());
            let outcome = adaptive_loop(&problem, mesh, &adapt, |i, mesh, step| {
                table.rows.push(row(i, mesh, step));
                trace.push(trace_row(i, mesh, step));
                if io.is_ok() {
                    io = out.step(i, mesh, step);
                }
            });
            io?;
            let records = match &outcome {
                Ok(o) => &o.trace.records,
                Err(f) => &f.trace.records,
            };
            for (t, r) in trace.iter_mut().zip(records) {
                t.weighted_total = Some(r.weighted_total);
                t.refined = r.refined;
                t.coarsened = r.coarsened;
            }
            if let Err(f) = outcome {
                write_table(&dir.join("table.csv"), &table)?;
                write_trace(&dir.join("trace.csv"), &trace)?;
                return Err(Error::Solver(f.error));
            }
            (table, trace)
        }
    };
    write_table(&dir.join("table.csv"), &table)?;
    write_trace(&dir.join("trace.csv"), &trace)?;
    Ok(RunOutput {
        table,
        trace,
        directory: dir.to_path_buf(),
    })
}
