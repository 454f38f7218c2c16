//! Sparse matrices and linear solvers.
//!
//! The direct path is a sparse LU with partial pivoting; the iterative path
//! offers preconditioned CG for symmetric systems and restarted GMRES or
//! BiCGStab for nonsymmetric ones. Every iteration starts from zero.

use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::dense::DenseMatrix;
use crate::error::{invalid, Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator; duplicates are summed on build.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, cap: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.entries.push((i, j, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.add(i, i, 1.0);
        }
        t.build()
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut t = TripletBuilder::new(a.rows(), a.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] != 0.0 {
                    t.add(i, j, a[(i, j)]);
                }
            }
        }
        t.build()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |p| v[p])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = TripletBuilder::with_capacity(self.cols, self.rows, self.nnz());
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                t.add(j, i, a);
            }
        }
        t.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(invalid("matrix dimensions differ"));
        }
        let mut t = TripletBuilder::with_capacity(self.rows, self.cols, self.nnz() + other.nnz());
        for (m, s) in [(self, a), (other, b)] {
            for i in 0..m.rows {
                let (c, v) = m.row(i);
                for (&j, &x) in c.iter().zip(v) {
                    t.add(i, j, s * x);
                }
            }
        }
        Ok(t.build())
    }

    /// `max |A - Aᵀ| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self
            .axpby(1.0, &self.transpose(), -1.0)
            .map(|m| m.max_abs())
            .unwrap_or(f64::INFINITY);
        let s = self.max_abs();
        if s == 0.0 {
            0.0
        } else {
            d / s
        }
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.rows == self.cols && self.asymmetry() <= rel_tol
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[(i, j)] = a;
            }
        }
        d
    }

    /// Entries in row-major order as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &a)| (i, j, a))
        })
    }
}

/// Assembled matrix and load vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Set for forms that are symmetric by construction.
    pub symmetric: bool,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, symmetric: bool) -> Result<Self> {
        if matrix.rows() != matrix.cols() || rhs.len() != matrix.rows() {
            return Err(invalid("system must be square with matching load vector"));
        }
        Ok(Self {
            matrix,
            rhs,
            symmetric,
        })
    }

    pub fn dofs(&self) -> usize {
        self.rhs.len()
    }

    /// Galerkin residual of `x` over all test functions, as the normwise
    /// backward error `‖Ax - b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
    pub fn galerkin_residual(&self, x: &[f64]) -> f64 {
        backward_error(&self.matrix, x, &self.rhs)
    }
}

/// Normwise backward error `‖Ax - b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)`.
pub fn backward_error(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let inf = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0, |m: f64, x| m.max(x.abs()));
    let r = inf(&mut ax.iter().zip(b).map(|(a, b)| a - b));
    let an = (0..a.rows())
        .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let scale = an * inf(&mut x.iter().copied()) + inf(&mut b.iter().copied());
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Direct below `direct_limit` unknowns, Krylov above (falling back to direct).
    Auto,
    Direct,
    Cg,
    Gmres,
    BiCgStab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolverConfig {
    pub method: Method,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
    pub restart: usize,
    pub direct_limit: usize,
}

impl Default for LinearSolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            tolerance: 1e-12,
            max_iterations: 10_000,
            preconditioner: Preconditioner::Ilu0,
            restart: 60,
            direct_limit: 400_000,
        }
    }
}

impl LinearSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-2) {
            return Err(invalid("solver tolerance must lie in (0, 1e-2]"));
        }
        if self.max_iterations == 0 || self.restart == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// `‖Ax - b‖ / ‖b‖` of the returned vector.
    pub residual: f64,
}

fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

pub fn solve(
    system: &SparseSystem,
    config: &LinearSolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    config.validate()?;
    let a = &system.matrix;
    let b = &system.rhs;
    let n = b.len();
    if a.rows() != n || a.cols() != n {
        return Err(invalid("system must be square with matching load vector"));
    }
    if config.method == Method::Cg && !system.symmetric {
        return Err(invalid(
            "conjugate gradients requested for a nonsymmetric system",
        ));
    }
    if n == 0 || norm2(b) == 0.0 {
        let method = config.method;
        return Ok((
            vec![0.0; n],
            SolveReport {
                method,
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    match config.method {
        Method::Direct => direct(a, b, config.tolerance),
        Method::Auto => {
            if n <= config.direct_limit {
                direct(a, b, config.tolerance)
            } else {
                let method = if system.symmetric {
                    Method::Cg
                } else {
                    Method::Gmres
                };
                krylov(a, b, &LinearSolverConfig { method, ..*config })
                    .or_else(|_| direct(a, b, config.tolerance))
            }
        }
        _ => krylov(a, b, config),
    }
}

fn krylov(
    a: &CsrMatrix,
    b: &[f64],
    config: &LinearSolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let pre = Precond::new(a, config.preconditioner)?;
    let (x, iterations) = match config.method {
        Method::Cg => cg(a, b, &pre, config),
        Method::BiCgStab => bicgstab(a, b, &pre, config),
        _ => gmres(a, b, &pre, config),
    }?;
    let residual = relative_residual(a, &x, b);
    if residual > config.tolerance * 10.0 || !residual.is_finite() {
        return Err(Error::SolverFailure {
            iterations,
            residual,
        });
    }
    Ok((
        x,
        SolveReport {
            method: config.method,
            iterations,
            residual,
        },
    ))
}

/// Sparse LU with partial pivoting plus a few steps of iterative refinement.
fn direct(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    let n = b.len();
    let trips: Vec<Triplet<usize, usize, f64>> =
        a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
        .map_err(|_| Error::Internal("sparse matrix conversion failed".into()))?;
    let lu = mat.sp_lu().map_err(|_| Error::SolverFailure {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let solve_col = |rhs: &[f64]| -> Vec<f64> {
        let col = faer::Col::<f64>::from_fn(n, |i| rhs[i]);
        let x = lu.solve(&col);
        (0..n).map(|i| x[i]).collect()
    };
    let mut x = solve_col(b);
    let mut residual = relative_residual(a, &x, b);
    let mut steps = 1;
    while residual > tol && steps < 4 && residual.is_finite() {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx = solve_col(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
        let res = relative_residual(a, &cand, b);
        steps += 1;
        if res >= residual {
            break;
        }
        x = cand;
        residual = res;
    }
    if !residual.is_finite() || backward_error(a, &x, b) > tol.max(1e-12) {
        return Err(Error::SolverFailure {
            iterations: steps,
            residual,
        });
    }
    Ok((
        x,
        SolveReport {
            method: Method::Direct,
            iterations: steps,
            residual,
        },
    ))
}

enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Ilu(Ilu0),
}

impl Precond {
    fn new(a: &CsrMatrix, kind: Preconditioner) -> Result<Self> {
        Ok(match kind {
            Preconditioner::None => Precond::Identity,
            Preconditioner::Jacobi => Precond::Jacobi(
                a.diagonal()
                    .iter()
                    .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
                    .collect(),
            ),
            Preconditioner::Ilu0 => Precond::Ilu(Ilu0::new(a)?),
        })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Identity => z.copy_from_slice(r),
            Precond::Jacobi(d) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(d) {
                    *zi = ri * di;
                }
            }
            Precond::Ilu(f) => f.solve(r, z),
        }
    }
}

/// Incomplete LU on the sparsity pattern of `A`.
struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.rows;
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            let (c, _) = lu.row(i);
            if let Ok(p) = c.binary_search(&i) {
                *d = lu.row_ptr[i] + p;
            }
        }
        if diag.contains(&usize::MAX) {
            return Err(invalid("ILU(0) needs a full diagonal"));
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                pos[lu.col_idx[p]] = p;
            }
            for p in start..end {
                let k = lu.col_idx[p];
                if k >= i {
                    break;
                }
                let pivot = lu.values[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::Internal("zero pivot in ILU(0)".into()));
                }
                let l = lu.values[p] / pivot;
                lu.values[p] = l;
                for q in (diag[k] + 1)..lu.row_ptr[k + 1] {
                    let j = lu.col_idx[q];
                    let t = pos[j];
                    if t != usize::MAX {
                        lu.values[t] -= l * lu.values[q];
                    }
                }
            }
            for p in start..end {
                pos[lu.col_idx[p]] = usize::MAX;
            }
            if lu.values[diag[i]] == 0.0 {
                return Err(Error::Internal("zero pivot in ILU(0)".into()));
            }
        }
        Ok(Self { lu, diag })
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let mut s = r[i];
            for p in self.lu.row_ptr[i]..self.diag[i] {
                s -= self.lu.values[p] * z[self.lu.col_idx[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in (self.diag[i] + 1)..self.lu.row_ptr[i + 1] {
                s -= self.lu.values[p] * z[self.lu.col_idx[p]];
            }
            z[i] = s / self.lu.values[self.diag[i]];
        }
    }
}

fn cg(
    a: &CsrMatrix,
    b: &[f64],
    pre: &Precond,
    cfg: &LinearSolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=cfg.max_iterations {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap == 0.0 || !pap.is_finite() {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: norm2(&r) / nb,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= cfg.tolerance * nb {
            return Ok((x, it));
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: cfg.max_iterations,
        residual: norm2(&r) / nb,
    })
}

fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    pre: &Precond,
    cfg: &LinearSolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=cfg.max_iterations {
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: norm2(&r) / nb,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut phat);
        a.mul_vec_into(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= cfg.tolerance * nb {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, it));
        }
        pre.apply(&s, &mut shat);
        a.mul_vec_into(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let res = norm2(&r);
        if !res.is_finite() {
            return Err(Error::SolverFailure {
                iterations: it,
                residual: res,
            });
        }
        if res <= cfg.tolerance * nb {
            return Ok((x, it));
        }
    }
    Err(Error::SolverFailure {
        iterations: cfg.max_iterations,
        residual: norm2(&r) / nb,
    })
}

/// Restarted GMRES with right preconditioning.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    pre: &Precond,
    cfg: &LinearSolverConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let m = cfg.restart.min(n.max(1));
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    let mut total = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm2(&r);
        if beta <= cfg.tolerance * nb {
            return Ok((x, total));
        }
        if total >= cfg.max_iterations {
            return Err(Error::SolverFailure {
                iterations: total,
                residual: beta / nb,
            });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            total += 1;
            pre.apply(&basis[j], &mut z);
            a.mul_vec_into(&z, &mut w);
            for (i, vi) in basis.iter().enumerate() {
                h[i][j] = dot(&w, vi);
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= h[i][j] * vk;
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = libm::hypot(h[j][j], h[j + 1][j]);
            if d == 0.0 {
                used = j;
                break;
            }
            cs[j] = h[j][j] / d;
            sn[j] = h[j + 1][j] / d;
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if hn == 0.0
                || g[j + 1].abs() <= cfg.tolerance * nb * 0.5
                || total >= cfg.max_iterations
            {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in (i + 1)..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&basis) {
            for (u, v) in update.iter_mut().zip(vi) {
                *u += yi * v;
            }
        }
        pre.apply(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if used == 0 {
            return Err(Error::SolverFailure {
                iterations: total,
                residual: beta / nb,
            });
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix: dense Jacobi sweeps up to 400
/// unknowns, Lanczos with full reorthogonalization beyond.
pub fn min_eigenvalue_estimate(a: &CsrMatrix) -> Result<f64> {
    if a.rows() != a.cols() {
        return Err(invalid("eigenvalue estimate of a non-square matrix"));
    }
    if !a.is_symmetric(1e-10) {
        return Err(invalid("eigenvalue estimate requires a symmetric matrix"));
    }
    let n = a.rows();
    if n == 0 {
        return Err(invalid("empty matrix"));
    }
    if n <= 400 {
        return Ok(a.to_dense().symmetric_eigenvalues()[0]);
    }
    let m = n.min(300);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let start: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * libm::sin(i as f64 * 1.618))
        .collect();
    let s = norm2(&start);
    q.push(start.iter().map(|v| v / s).collect());
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    for j in 0..m {
        let mut w = a.mul_vec(&q[j]);
        alpha.push(dot(&w, &q[j]));
        for _ in 0..2 {
            for qi in &q {
                let c = dot(&w, qi);
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= c * qk;
                }
            }
        }
        let b = norm2(&w);
        if j + 1 == m || b <= 1e-14 * a.max_abs() {
            break;
        }
        beta.push(b);
        q.push(w.iter().map(|v| v / b).collect());
    }
    let k = alpha.len();
    let mut t = DenseMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    Ok(t.symmetric_eigenvalues()[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.add(i, i, 2.0);
            if i > 0 {
                t.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.add(i, i + 1, -1.0);
            }
        }
        t.build()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let mut t = TripletBuilder::new(2, 2);
        t.add(1, 0, 1.0);
        t.add(0, 0, 2.0);
        t.add(1, 0, 3.0);
        let m = t.build();
        assert_eq!(m.get(1, 0), 4.0);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn trivial_systems() {
        let sys = SparseSystem::new(CsrMatrix::identity(3), vec![1.0, -2.0, 3.0], true).unwrap();
        let (x, _) = solve(&sys, &LinearSolverConfig::default()).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        let mut t = TripletBuilder::new(2, 2);
        t.add(0, 0, 2.0);
        t.add(1, 1, 3.0);
        let sys = SparseSystem::new(t.build(), vec![2.0, 3.0], true).unwrap();
        for method in [Method::Direct, Method::Cg, Method::Gmres, Method::BiCgStab] {
            let (x, _) = solve(
                &sys,
                &LinearSolverConfig {
                    method,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn krylov_methods_agree_with_direct() {
        let a = laplace_1d(200);
        let b: Vec<f64> = (0..200).map(|i| libm::cos(i as f64)).collect();
        let sys = SparseSystem::new(a, b, true).unwrap();
        let (xd, _) = solve(
            &sys,
            &LinearSolverConfig {
                method: Method::Direct,
                ..Default::default()
            },
        )
        .unwrap();
        for (method, pc) in [
            (Method::Cg, Preconditioner::Jacobi),
            (Method::Cg, Preconditioner::Ilu0),
            (Method::Gmres, Preconditioner::Ilu0),
            (Method::BiCgStab, Preconditioner::Ilu0),
        ] {
            let cfg = LinearSolverConfig {
                method,
                preconditioner: pc,
                tolerance: 1e-11,
                ..Default::default()
            };
            let (x, rep) = solve(&sys, &cfg).unwrap();
            assert!(rep.residual <= 1e-10);
            let err = x
                .iter()
                .zip(&xd)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-6, "{method:?}: {err}");
        }
    }

    #[test]
    fn nonsymmetric_gmres() {
        let n = 150;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.add(i, i, 3.0);
            if i > 0 {
                t.add(i, i - 1, -1.5);
            }
            if i + 1 < n {
                t.add(i, i + 1, -0.5);
            }
        }
        let sys = SparseSystem::new(t.build(), vec![1.0; n], false).unwrap();
        let (x, _) = solve(
            &sys,
            &LinearSolverConfig {
                method: Method::Gmres,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(sys.galerkin_residual(&x) < 1e-10);
        let err = solve(
            &sys,
            &LinearSolverConfig {
                method: Method::Cg,
                ..Default::default()
            },
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn eigenvalue_estimates() {
        let mut t = TripletBuilder::new(3, 3);
        for i in 0..3 {
            t.add(i, i, (i + 1) as f64);
        }
        assert!((min_eigenvalue_estimate(&t.build()).unwrap() - 1.0).abs() < 1e-14);
        let n = 500;
        let a = laplace_1d(n);
        let exact = 2.0 - 2.0 * libm::cos(core::f64::consts::PI / (n + 1) as f64);
        let est = min_eigenvalue_estimate(&a).unwrap();
        assert!(est > 0.0 && est < 2.0 * exact + 1e-3);
        let mut ns = TripletBuilder::new(2, 2);
        ns.add(0, 1, 1.0);
        assert!(min_eigenvalue_estimate(&ns.build()).is_err());
    }

    #[test]
    fn config_validation() {
        let sys = SparseSystem::new(CsrMatrix::identity(2), vec![1.0, 1.0], true).unwrap();
        let bad = LinearSolverConfig {
            tolerance: 0.5,
            ..Default::default()
        };
        assert!(solve(&sys, &bad).is_err());
    }
}
