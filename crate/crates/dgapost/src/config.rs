//! Experiment configuration files.
//!
//! ```toml
//! name = "ip-smooth"
//! scheme = "ip"           # ip | bz | bz-overpen | cg-quad | ip-quad | nonvar | nonvar-consistent | nonvar-quad
//! degree = 1
//! sigma = 10.0            # optional, defaults to 10 k²
//! beta = 3.0              # bz-overpen only
//! estimator = "energy"    # optional, defaults to the scheme's natural estimator
//!
//! [domain]
//! kind = "unit-square"    # unit-square | l-shape
//! n = 2
//! shift = [0.0, 0.0]
//!
//! [data]
//! coefficient = "identity"          # identity | eq-diffusion | lshape-arctan | test3-oscillatory
//! # tensor = ["1", "0", "0", "2"]   # entry expressions instead of a preset
//! exact = "u-smooth"                # u-smooth | u-notsosmooth | sine | none
//! frequency = 1.0                   # for exact = "sine"
//! # source = "1"                    # expression; defaults to the manufactured source
//!
//! [mode]
//! kind = "uniform"                  # uniform | adaptive
//! levels = 5
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use dgapost_core::adapt::{AdaptConfig, Problem};
use dgapost_core::coeff::{ScalarFn, SolutionFn};
use dgapost_core::estimate::EstimatorFamily;
use dgapost_core::forms::{default_sigma, Scheme};
use dgapost_core::mesh::{make_lshape, make_unit_square, Mesh};
use dgapost_core::solver::{LinearSolverConfig, Method, Preconditioner};

use crate::data::{
    coefficient, cosine_bump, manufactured_source, sine_product, Diffusion, Operator,
};
use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub scheme: SchemeKind,
    pub degree: usize,
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub estimator: Option<EstimatorKind>,
    pub domain: DomainConfig,
    pub data: DataConfig,
    pub mode: ModeConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Ip,
    Bz,
    BzOverpen,
    CgQuad,
    IpQuad,
    Nonvar,
    NonvarConsistent,
    NonvarQuad,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Energy,
    Dual,
    CgQuad,
    DgQuad,
    Nonvar,
    NonvarConsistent,
    NonvarQuad,
    NonvarDual,
}

impl From<EstimatorKind> for EstimatorFamily {
    fn from(k: EstimatorKind) -> Self {
        match k {
            EstimatorKind::Energy => EstimatorFamily::Energy,
            EstimatorKind::Dual => EstimatorFamily::Dual,
            EstimatorKind::CgQuad => EstimatorFamily::CgQuad,
            EstimatorKind::DgQuad => EstimatorFamily::DgQuad,
            EstimatorKind::Nonvar => EstimatorFamily::Nonvar,
            EstimatorKind::NonvarConsistent => EstimatorFamily::NonvarConsistent,
            EstimatorKind::NonvarQuad => EstimatorFamily::NonvarQuad,
            EstimatorKind::NonvarDual => EstimatorFamily::NonvarDual,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    UnitSquare,
    LShape,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    /// Squares per side (unit square) or per half side (L-shape) of the initial mesh.
    pub n: usize,
    #[serde(default)]
    pub shift: [f64; 2],
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientPreset {
    Identity,
    EqDiffusion,
    LshapeArctan,
    Test3Oscillatory,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ExactPreset {
    /// `sin 2πx sin 2πy`.
    USmooth,
    /// Cosine bump centred at the domain centre.
    UNotsosmooth,
    /// `sin(aπx) sin(aπy)` with `a = frequency`.
    Sine,
    None,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub coefficient: Option<CoefficientPreset>,
    /// Row-major tensor entries as expressions in `x` and `y`.
    pub tensor: Option<[String; 4]>,
    pub exact: ExactPreset,
    pub frequency: Option<f64>,
    pub source: Option<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModeConfig {
    Uniform {
        levels: usize,
    },
    Adaptive {
        #[serde(default = "default_weights")]
        weights: [f64; 3],
        #[serde(default)]
        tolerance: f64,
        #[serde(default = "default_refine")]
        refine_threshold: f64,
        #[serde(default = "default_coarsen")]
        coarsen_threshold: f64,
        #[serde(default = "default_iterations")]
        max_iterations: usize,
        max_dofs: Option<usize>,
    },
}

fn default_weights() -> [f64; 3] {
    AdaptConfig::default().weights
}
fn default_refine() -> f64 {
    AdaptConfig::default().refine_threshold
}
fn default_coarsen() -> f64 {
    AdaptConfig::default().coarsen_threshold
}
fn default_iterations() -> usize {
    AdaptConfig::default().max_iterations
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    #[default]
    Auto,
    Direct,
    Cg,
    Gmres,
    Bicgstab,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default)]
    pub method: SolverMethod,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub directory: Option<PathBuf>,
    /// Write mesh and indicator VTK files.
    #[serde(default = "yes")]
    pub vtk: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            directory: None,
            vtk: true,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.problem()?.validate().map_err(config_error)?;
        self.adapt_config()
            .map(|c| c.validate())
            .transpose()
            .map_err(config_error)?;
        if self.domain.n == 0 {
            return Err(Error::Config("domain.n must be positive".into()));
        }
        if let ModeConfig::Uniform { levels: 0 } = self.mode {
            return Err(Error::Config("mode.levels must be positive".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Ok(match self.scheme {
            SchemeKind::Ip => Scheme::Ip,
            SchemeKind::Bz => Scheme::Bz,
            SchemeKind::BzOverpen => {
                let beta = self
                    .beta
                    .ok_or_else(|| Error::Config("bz-overpen needs beta".into()))?;
                Scheme::BzOverpen { beta }
            }
            SchemeKind::CgQuad => Scheme::CgQuad,
            SchemeKind::IpQuad => Scheme::IpQuad,
            SchemeKind::Nonvar => Scheme::Nonvar,
            SchemeKind::NonvarConsistent => Scheme::NonvarConsistent,
            SchemeKind::NonvarQuad => Scheme::NonvarQuad,
        })
    }

    pub fn operator(&self) -> Operator {
        match self.scheme {
            SchemeKind::Ip | SchemeKind::Bz | SchemeKind::BzOverpen => Operator::Laplace,
            SchemeKind::CgQuad | SchemeKind::IpQuad => Operator::Divergence,
            _ => Operator::Nondivergence,
        }
    }

    pub fn family(&self) -> EstimatorFamily {
        if let Some(e) = self.estimator {
            return e.into();
        }
        match self.scheme {
            SchemeKind::Ip | SchemeKind::Bz | SchemeKind::BzOverpen => EstimatorFamily::Energy,
            SchemeKind::CgQuad => EstimatorFamily::CgQuad,
            SchemeKind::IpQuad => EstimatorFamily::DgQuad,
            SchemeKind::Nonvar => EstimatorFamily::Nonvar,
            SchemeKind::NonvarConsistent => EstimatorFamily::NonvarConsistent,
            SchemeKind::NonvarQuad => EstimatorFamily::NonvarQuad,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or_else(|| default_sigma(self.degree))
    }

    pub fn initial_mesh(&self) -> Result<Mesh> {
        let m = match self.domain.kind {
            DomainKind::UnitSquare => make_unit_square(self.domain.n),
            DomainKind::LShape => make_lshape(self.domain.n),
        }
        .map_err(config_error)?;
        Ok(if self.domain.shift == [0.0, 0.0] {
            m
        } else {
            m.translated(self.domain.shift)
        })
    }

    fn diffusion(&self) -> Result<Diffusion> {
        match (&self.data.coefficient, &self.data.tensor) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either data.coefficient or data.tensor".into(),
            )),
            (None, Some(t)) => {
                let parse = |s: &String| {
                    Expr::parse(s).map_err(|e| Error::Config(format!("tensor entry {s:?}: {e}")))
                };
                Ok(Diffusion::from_expressions([
                    parse(&t[0])?,
                    parse(&t[1])?,
                    parse(&t[2])?,
                    parse(&t[3])?,
                ]))
            }
            (c, None) => Ok(match c.unwrap_or(CoefficientPreset::Identity) {
                CoefficientPreset::Identity => Diffusion::identity(),
                CoefficientPreset::EqDiffusion => Diffusion::slowly_varying(),
                CoefficientPreset::LshapeArctan => Diffusion::arctan_layer(),
                CoefficientPreset::Test3Oscillatory => Diffusion::oscillatory_quadrant(),
            }),
        }
    }

    fn exact(&self) -> Result<Option<SolutionFn>> {
        let [sx, sy] = self.domain.shift;
        Ok(match self.data.exact {
            ExactPreset::USmooth => Some(sine_product(2.0)),
            ExactPreset::UNotsosmooth => {
                let centre = match self.domain.kind {
                    DomainKind::UnitSquare => [0.5 + sx, 0.5 + sy],
                    DomainKind::LShape => {
                        return Err(Error::Config("u-notsosmooth needs the unit square".into()))
                    }
                };
                Some(cosine_bump(centre))
            }
            ExactPreset::Sine => {
                let a = self
                    .data
                    .frequency
                    .ok_or_else(|| Error::Config("exact = \"sine\" needs frequency".into()))?;
                Some(sine_product(a))
            }
            ExactPreset::None => None,
        })
    }

    /// Scheme, data and estimator described by the file.
    pub fn problem(&self) -> Result<Problem> {
        let op = self.operator();
        let a = self.diffusion()?;
        if op == Operator::Laplace
            && (self.data.tensor.is_some()
                || self
                    .data
                    .coefficient
                    .is_some_and(|c| c != CoefficientPreset::Identity))
        {
            return Err(Error::Config(format!(
                "{:?} solves the Laplacian; the coefficient must be identity",
                self.scheme
            )));
        }
        let exact = self.exact()?;
        let source: ScalarFn = match (&self.data.source, &exact) {
            (Some(s), _) => {
                let e = Expr::parse(s).map_err(|e| Error::Config(format!("source {s:?}: {e}")))?;
                Arc::new(move |p| e.eval(p))
            }
            (None, Some(u)) => manufactured_source(op, &a, u),
            (None, None) => {
                return Err(Error::Config(
                    "data.source is required without an exact solution".into(),
                ))
            }
        };
        let mut solver = LinearSolverConfig {
            method: self.solver.method.into(),
            ..Default::default()
        };
        if let Some(t) = self.solver.tolerance {
            solver.tolerance = t;
        }
        if let Some(m) = self.solver.max_iterations {
            solver.max_iterations = m;
        }
        if solver.method == Method::Cg {
            solver.preconditioner = Preconditioner::Jacobi;
        }
        Ok(Problem {
            scheme: self.scheme()?,
            degree: self.degree,
            sigma: self.sigma(),
            coefficient: coefficient(op, &a, source, exact),
            family: self.family(),
            solver,
        })
    }

    pub fn adapt_config(&self) -> Option<AdaptConfig> {
        match &self.mode {
            ModeConfig::Uniform { .. } => None,
            &ModeConfig::Adaptive {
                weights,
                tolerance,
                refine_threshold,
                coarsen_threshold,
                max_iterations,
                max_dofs,
            } => Some(AdaptConfig {
                weights,
                tolerance,
                refine_threshold,
                coarsen_threshold,
                max_iterations,
                max_dofs,
            }),
        }
    }
}

impl From<SolverMethod> for Method {
    fn from(m: SolverMethod) -> Self {
        match m {
            SolverMethod::Auto => Method::Auto,
            SolverMethod::Direct => Method::Direct,
            SolverMethod::Cg => Method::Cg,
            SolverMethod::Gmres => Method::Gmres,
            SolverMethod::Bicgstab => Method::BiCgStab,
        }
    }
}

fn config_error(e: dgapost_core::Error) -> Error {
    Error::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        scheme = "ip"
        degree = 1
        [domain]
        kind = "unit-square"
        n = 2
        [data]
        exact = "sine"
        frequency = 1.0
        [mode]
        kind = "uniform"
        levels = 3
    "#;

    #[test]
    fn parses_a_minimal_file() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.scheme, SchemeKind::Ip);
        assert_eq!(c.sigma(), 10.0);
        assert_eq!(c.family(), EstimatorFamily::Energy);
        assert!(c.output.vtk);
    }

    #[test]
    fn rejects_bad_pairings_and_fields() {
        let bad = BASE.replace("degree = 1", "degree = 1\nestimator = \"nonvar\"");
        assert!(matches!(
            ExperimentConfig::parse(&bad),
            Err(Error::Config(_))
        ));
        let bad = BASE.replace("degree = 1", "degree = 1\ncolour = 3");
        assert!(matches!(
            ExperimentConfig::parse(&bad),
            Err(Error::Config(_))
        ));
        let bad = BASE.replace("scheme = \"ip\"", "scheme = \"bz-overpen\"");
        assert!(matches!(
            ExperimentConfig::parse(&bad),
            Err(Error::Config(_))
        ));
        let bad = BASE.replace("[data]", "[data]\ncoefficient = \"eq-diffusion\"");
        assert!(matches!(
            ExperimentConfig::parse(&bad),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn expression_tensor() {
        let text = BASE
            .replace("scheme = \"ip\"", "scheme = \"cg-quad\"")
            .replace(
                "[data]",
                "[data]\ntensor = [\"1\", \"0\", \"0\", \"2 + x\"]",
            );
        let p = ExperimentConfig::parse(&text).unwrap().problem().unwrap();
        assert_eq!(p.coefficient.a([0.5, 0.0])[1][1], 2.5);
    }
}
