//! Conforming reconstruction by nodal averaging and its stability bounds.

use alloc::vec;

use crate::error::Result;
use crate::space::{norm_parts, FeFunction, FeSpace, FIXED};

/// Averages the traces of `u` at every Lagrange node into the continuous
/// space of equal degree; boundary nodes are set to zero.
pub fn oswald(u: &FeFunction) -> Result<FeFunction> {
    let cg = FeSpace::cg(u.mesh().clone(), u.space().degree().max(1))?;
    oswald_into(u, cg)
}

/// [`oswald`] into a given continuous space on the same mesh.
pub fn oswald_into(u: &FeFunction, cg: FeSpace) -> Result<FeFunction> {
    let mesh = u.mesh();
    let mut sum = vec![0.0; cg.num_dofs()];
    let mut count = vec![0u32; cg.num_dofs()];
    let same_degree = u.space().degree() == cg.degree();
    for k in 0..mesh.num_cells() {
        let dofs = cg.cell_dofs(k);
        let values: alloc::vec::Vec<f64> = if same_degree {
            u.local(k).as_slice().to_vec()
        } else {
            cg.basis()
                .nodes()
                .iter()
                .map(|&p| u.eval(k, p).value)
                .collect()
        };
        for (&d, v) in dofs.iter().zip(values) {
            if d != FIXED {
                sum[d] += v;
                count[d] += 1;
            }
        }
    }
    let coeffs = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    FeFunction::new(cg, coeffs)
}

/// Both sides of the two reconstruction bounds
/// `‖E u - u‖² ≤ C Σ h_e ‖⟦u⟧‖²` and `enorm(E u - u)² ≤ C Σ h_e⁻¹ ‖⟦u⟧‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionReport {
    /// `‖E u - u‖_{L²}`.
    pub l2_difference: f64,
    /// `enorm(E u - u)`.
    pub energy_difference: f64,
    /// `Σ h_e ‖⟦u⟧‖²_e`.
    pub jump_h: f64,
    /// `Σ h_e⁻¹ ‖⟦u⟧‖²_e`.
    pub jump_h_inv: f64,
    /// `‖E u - u‖² / Σ h_e ‖⟦u⟧‖²`.
    pub l2_ratio: f64,
    /// `enorm(E u - u)² / Σ h_e⁻¹ ‖⟦u⟧‖²`.
    pub energy_ratio: f64,
}

pub fn reconstruction_report(u: &FeFunction) -> Result<ReconstructionReport> {
    let u = u.to_dg()?;
    let e = oswald(&u)?;
    let n = u.space().local_dim();
    let mut diff = vec![0.0; u.space().num_dofs()];
    for k in 0..u.mesh().num_cells() {
        let el = e.local(k);
        let ul = u.local(k);
        for i in 0..n {
            diff[k * n + i] = el.as_slice()[i] - ul.as_slice()[i];
        }
    }
    let diff = FeFunction::new(u.space().clone(), diff)?;
    let order = 2 * u.space().degree().max(1);
    let d = norm_parts(&diff, None, order)?;
    let j = norm_parts(&u, None, order)?;
    let jump_h: f64 = j.jump_sq.iter().zip(&j.edge_h).map(|(s, h)| s * h).sum();
    let jump_h_inv: f64 = j.jump_sq.iter().zip(&j.edge_h).map(|(s, h)| s / h).sum();
    let l2 = d.l2();
    let en = d.enorm();
    Ok(ReconstructionReport {
        l2_difference: l2,
        energy_difference: en,
        jump_h,
        jump_h_inv,
        l2_ratio: l2 * l2 / jump_h.max(1e-300),
        energy_ratio: en * en / jump_h_inv.max(1e-300),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_unit_square, Mesh};
    use alloc::sync::Arc;

    #[test]
    fn two_cells_average_on_shared_edge() {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        )
        .unwrap();
        let s = FeSpace::dg(Arc::new(m), 1).unwrap();
        let mut c = vec![0.0; s.num_dofs()];
        c[3..6].iter_mut().for_each(|v| *v = 1.0);
        let u = FeFunction::new(s, c).unwrap();
        let e = oswald(&u).unwrap();
        // the centre is the only free node and is shared by all four cells
        assert_eq!(e.coeffs().len(), 1);
        assert!((e.coeffs()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn continuous_input_is_fixed() {
        let s = FeSpace::cg(Arc::new(make_unit_square(3).unwrap()), 2).unwrap();
        let u = FeFunction::interpolate(s, |p| p[0] * (1.0 - p[0]) * p[1]);
        let e = oswald(&u).unwrap();
        for (a, b) in e.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        let r = reconstruction_report(&u).unwrap();
        assert!(r.l2_difference < 1e-14 && r.l2_ratio == 0.0);
    }
}
