//! Convergence tables, observed orders and fitted rates.

use serde::Serialize;

/// One solve on one mesh: a uniform level or an adaptive iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub step: usize,
    pub cells: usize,
    pub dofs: usize,
    /// Largest cell diameter.
    pub h: f64,
    pub eta_r: f64,
    pub eta_i: f64,
    pub eta_j: f64,
    pub total: f64,
    pub error: Option<f64>,
    pub effectivity: Option<f64>,
    /// `(Η_R + Η_J) / (error + Η_I)`.
    pub efficiency_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub refinement: Refinement,
    pub rows: Vec<Row>,
}

impl ConvergenceTable {
    pub fn new(refinement: Refinement) -> Self {
        Self {
            refinement,
            rows: Vec::new(),
        }
    }

    /// Observed orders of the errors; `None` where a rate is undefined.
    pub fn error_eoc(&self) -> Vec<Option<f64>> {
        let e: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.error.unwrap_or(f64::NAN))
            .collect();
        self.eoc_of(&e)
    }

    pub fn estimate_eoc(&self) -> Vec<Option<f64>> {
        let e: Vec<f64> = self.rows.iter().map(|r| r.total).collect();
        self.eoc_of(&e)
    }

    fn eoc_of(&self, values: &[f64]) -> Vec<Option<f64>> {
        match self.refinement {
            Refinement::Uniform => {
                let h: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
                eoc(values, &h)
            }
            Refinement::Adaptive => {
                let n: Vec<f64> = self.rows.iter().map(|r| r.dofs as f64).collect();
                eoc_dofs(values, &n)
            }
        }
    }
}

fn log_ratio(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()).then(|| (a / b).ln())
}

/// `log(e_{i-1}/e_i) / log(h_{i-1}/h_i)` for consecutive rows; one entry per
/// row after the first.
pub fn eoc(errors: &[f64], h: &[f64]) -> Vec<Option<f64>> {
    (1..errors.len().min(h.len()))
        .map(|i| {
            let de = log_ratio(errors[i - 1], errors[i])?;
            let dh = log_ratio(h[i - 1], h[i]).filter(|d| *d != 0.0)?;
            Some(de / dh)
        })
        .collect()
}

/// Decay exponent in the number of unknowns, `log(e_{i-1}/e_i) / log(N_i/N_{i-1})`.
pub fn eoc_dofs(errors: &[f64], dofs: &[f64]) -> Vec<Option<f64>> {
    (1..errors.len().min(dofs.len()))
        .map(|i| {
            let de = log_ratio(errors[i - 1], errors[i])?;
            let dn = log_ratio(dofs[i], dofs[i - 1]).filter(|d| *d != 0.0)?;
            Some(de / dn)
        })
        .collect()
}

/// Least-squares exponent `p` of `y ≈ C x^{-p}`; `None` with fewer than two
/// usable points or no spread in `x`.
pub fn fit_rate(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_examples() {
        let r = eoc(&[0.4, 0.1], &[0.5, 0.25]);
        assert!((r[0].unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(eoc(&[0.3, 0.3], &[0.5, 0.25]), vec![Some(0.0)]);
        assert!(eoc(&[0.3], &[0.5]).is_empty());
        assert_eq!(eoc(&[0.3, 0.0], &[0.5, 0.25]), vec![None]);
    }

    #[test]
    fn dof_exponent() {
        let r = eoc_dofs(&[1.0, 0.5], &[100.0, 400.0]);
        assert!((r[0].unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fitted_rate_recovers_power_law() {
        let x = [10.0, 100.0, 1000.0, 1e4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.25)).collect();
        assert!((fit_rate(&x, &y).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(fit_rate(&[1.0], &[1.0]), None);
    }
}
