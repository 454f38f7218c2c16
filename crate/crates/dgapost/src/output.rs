//! CSV tables and legacy VTK files.

use std::path::Path;

use dgapost_core::adapt::cell_indicators;
use dgapost_core::estimate::EstimateReport;
use dgapost_core::mesh::Mesh;
use dgapost_core::space::FeFunction;
use vtkio::model::{
    Attribute, Attributes, ByteOrder, CellType, Cells, DataSet, UnstructuredGridPiece, Version,
    VertexNumbers, Vtk,
};

use crate::error::{Error, Result};
use crate::table::{ConvergenceTable, Refinement};

/// Solver and loop diagnostics of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub cells: usize,
    pub dofs: usize,
    pub solver: String,
    pub iterations: usize,
    pub solver_residual: f64,
    pub galerkin_residual: f64,
    pub weighted_total: Option<f64>,
    pub refined: usize,
    pub coarsened: usize,
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_table(path: &Path, table: &ConvergenceTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let first = match table.refinement {
        Refinement::Uniform => "level",
        Refinement::Adaptive => "iterate",
    };
    w.write_record([
        first,
        "cells",
        "dofs",
        "h",
        "eta_R",
        "eta_I",
        "eta_J",
        "total",
        "error",
        "effectivity",
        "efficiency_ratio",
        "eoc_error",
        "eoc_estimate",
    ])?;
    let (ee, es) = (table.error_eoc(), table.estimate_eoc());
    for (i, r) in table.rows.iter().enumerate() {
        let rate = |v: &[Option<f64>]| if i == 0 { String::new() } else { opt(v[i - 1]) };
        w.write_record([
            r.step.to_string(),
            r.cells.to_string(),
            r.dofs.to_string(),
            num(r.h),
            num(r.eta_r),
            num(r.eta_i),
            num(r.eta_j),
            num(r.total),
            opt(r.error),
            opt(r.effectivity),
            opt(r.efficiency_ratio),
            rate(&ee),
            rate(&es),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "step",
        "cells",
        "dofs",
        "solver",
        "iterations",
        "solver_residual",
        "galerkin_residual",
        "weighted_total",
        "refined",
        "coarsened",
    ])?;
    for r in rows {
        w.write_record([
            r.step.to_string(),
            r.cells.to_string(),
            r.dofs.to_string(),
            r.solver.clone(),
            r.iterations.to_string(),
            num(r.solver_residual),
            num(r.galerkin_residual),
            opt(r.weighted_total),
            r.refined.to_string(),
            r.coarsened.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn export(title: &str, piece: UnstructuredGridPiece, path: &Path) -> Result<()> {
    let vtk = Vtk {
        version: Version::new((2, 0)),
        title: title.into(),
        byte_order: ByteOrder::BigEndian,
        data: DataSet::inline(piece),
        file_path: None,
    };
    vtk.export_ascii(path)
        .map_err(|e| Error::Vtk(format!("{}: {e}", path.display())))
}

fn triangles(n: usize, vertex: impl Fn(usize, usize) -> u32) -> Cells {
    let mut vertices = Vec::with_capacity(4 * n);
    for k in 0..n {
        vertices.extend([3, vertex(k, 0), vertex(k, 1), vertex(k, 2)]);
    }
    Cells {
        cell_verts: VertexNumbers::Legacy {
            num_cells: n as u32,
            vertices,
        },
        types: vec![CellType::Triangle; n],
    }
}

/// The solution as a field of disconnected triangles, so broken functions
/// keep their jumps; values are sampled at the cell vertices.
pub fn write_solution_vtk(path: &Path, u: &FeFunction) -> Result<()> {
    let mesh = u.mesh();
    let n = mesh.num_cells();
    let mut points = Vec::with_capacity(9 * n);
    let mut values = Vec::with_capacity(3 * n);
    for k in 0..n {
        for (p, xi) in mesh
            .cell_points(k)
            .iter()
            .zip([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        {
            points.extend([p[0], p[1], 0.0]);
            values.push(u.eval(k, xi).value);
        }
    }
    let piece = UnstructuredGridPiece {
        points: points.into(),
        cells: triangles(n, |k, i| (3 * k + i) as u32),
        data: Attributes {
            point: vec![Attribute::scalars("solution", 1).with_data(values)],
            cell: Vec::new(),
        },
    };
    export("solution", piece, path)
}

/// Residual, inconsistency, jump and marking indicators as cell data.
pub fn write_indicator_vtk(path: &Path, mesh: &Mesh, report: &EstimateReport) -> Result<()> {
    let n = mesh.num_cells();
    let points: Vec<f64> = mesh
        .vertices()
        .iter()
        .flat_map(|p| [p[0], p[1], 0.0])
        .collect();
    let sk = mesh.skeleton();
    let jump: Vec<f64> = (0..n)
        .map(|k| {
            0.5 * sk.cell_edges[k]
                .iter()
                .map(|&e| report.jump[e])
                .sum::<f64>()
        })
        .collect();
    let indicator = cell_indicators(report, mesh).map_err(Error::Solver)?;
    let cells = mesh.cells();
    let piece = UnstructuredGridPiece {
        points: points.into(),
        cells: triangles(n, |k, i| cells[k][i] as u32),
        data: Attributes {
            point: Vec::new(),
            cell: vec![
                Attribute::scalars("residual", 1).with_data(report.residual.clone()),
                Attribute::scalars("inconsistency", 1)
                    .with_data(report.bound_inconsistency().to_vec()),
                Attribute::scalars("jump", 1).with_data(jump),
                Attribute::scalars("indicator", 1).with_data(indicator),
            ],
        },
    };
    export("indicators", piece, path)
}
