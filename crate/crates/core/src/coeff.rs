//! Problem data: diffusion tensor, source term and optional exact solution.

use alloc::sync::Arc;

use crate::error::{invalid, Result};
use crate::geom::{self, Mat2, Point};
use crate::mesh::Mesh;
use crate::quadrature::triangle_rule;
use crate::space::Eval;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;
pub type SolutionFn = Arc<dyn Fn(Point) -> Eval + Send + Sync>;

/// Sign class of the diffusion tensor on the sampled points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    Positive,
    Negative,
}

#[derive(Clone)]
pub struct Coefficient {
    pub diffusion: TensorFn,
    pub source: ScalarFn,
    pub exact: Option<SolutionFn>,
}

impl core::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Coefficient")
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl Coefficient {
    pub fn new(diffusion: TensorFn, source: ScalarFn) -> Self {
        Self {
            diffusion,
            source,
            exact: None,
        }
    }

    /// `A = I` with source `f`.
    pub fn laplace(source: ScalarFn) -> Self {
        Self::new(Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]), source)
    }

    pub fn with_exact(mut self, exact: SolutionFn) -> Self {
        self.exact = Some(exact);
        self
    }

    #[inline]
    pub fn a(&self, x: Point) -> Mat2 {
        (self.diffusion)(x)
    }

    #[inline]
    pub fn f(&self, x: Point) -> f64 {
        (self.source)(x)
    }

    /// Checks that `A` is uniformly definite at the quadrature points of an
    /// order-`order` rule on every cell and reports its sign.
    pub fn definiteness(&self, mesh: &Mesh, order: usize) -> Result<Definiteness> {
        let rule = triangle_rule(order)?;
        let (mut pos, mut neg) = (true, true);
        for k in 0..mesh.num_cells() {
            let map = mesh.cell_map(k);
            for &p in &rule.points {
                let a = self.a(map.to_physical(p));
                if (a[0][1] - a[1][0]).abs() > 1e-12 * (1.0 + a[0][1].abs()) {
                    return Err(invalid("diffusion tensor is not symmetric"));
                }
                let (lo, hi) = geom::sym_eigenvalues(&a);
                pos &= lo > 0.0;
                neg &= hi < 0.0;
            }
        }
        match (pos, neg) {
            (true, _) => Ok(Definiteness::Positive),
            (_, true) => Ok(Definiteness::Negative),
            _ => Err(invalid("diffusion tensor is indefinite")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_unit_square;

    #[test]
    fn definiteness_classes() {
        let m = make_unit_square(2).unwrap();
        let f: ScalarFn = Arc::new(|_| 0.0);
        assert_eq!(
            Coefficient::laplace(f.clone()).definiteness(&m, 2).unwrap(),
            Definiteness::Positive
        );
        let neg = Coefficient::new(Arc::new(|_| [[-1.0, 0.0], [0.0, -2.0]]), f.clone());
        assert_eq!(neg.definiteness(&m, 2).unwrap(), Definiteness::Negative);
        let ind = Coefficient::new(Arc::new(|_| [[1.0, 0.0], [0.0, -1.0]]), f);
        assert!(ind.definiteness(&m, 2).is_err());
    }
}
