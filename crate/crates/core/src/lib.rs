//! Adaptive discontinuous Galerkin finite elements on 2D triangulations.
//!
//! The crate covers the full pipeline for second-order elliptic problems in
//! divergence and nondivergence form:
//!
//! * [`mesh`]: conforming triangulations, newest-vertex bisection, sibling coarsening;
//! * [`quadrature`]: positive-weight rules on the reference triangle and edge;
//! * [`space`]: nodal Lagrange spaces (broken and continuous), jumps, averages, norms;
//! * [`forms`]: interior penalty, Babuška–Zlámal, quadrature-inconsistent and
//!   nonvariational schemes, including the finite element Hessian;
//! * [`solver`]: sparse storage with direct and Krylov solvers;
//! * [`reconstruct`]: Oswald averaging into the conforming subspace;
//! * [`estimate`]: residual a posteriori estimators and effectivity;
//! * [`adapt`]: maximum-strategy marking and the adaptive loop.
//!
//! Everything here is `no_std` with `alloc`; file formats and the command line
//! live in the companion `dgapost` crate.
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod adapt;
pub mod basis;
pub mod coeff;
pub mod dense;
pub mod error;
pub mod estimate;
pub mod forms;
pub mod geom;
pub mod mesh;
pub mod quadrature;
pub mod reconstruct;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
