//! Built-in experiment configurations.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal) => {
        Preset {
            name: $name,
            summary: $summary,
            source: include_str!(concat!("../presets/", $name, ".toml")),
        }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!(
        "ip-smooth",
        "interior penalty, k=1, sin(πx)sin(πy), energy estimator, 5 uniform levels"
    ),
    preset!(
        "bz-smooth",
        "Babuška–Zlámal, k=1, sin(πx)sin(πy), energy estimator, 5 uniform levels"
    ),
    preset!(
        "ip-dual",
        "interior penalty, k=1, L² estimator, 5 uniform levels"
    ),
    preset!(
        "bz-overpen-dual",
        "over-penalized Babuška–Zlámal (β=3), L² estimator, 4 uniform levels"
    ),
    preset!(
        "lshape-arctan",
        "conforming k=2 with order-2 quadrature, arctan layer on the L-shape, adaptive"
    ),
    preset!(
        "test1",
        "nondivergence form, k=2, slowly varying A, smooth solution, 4 uniform levels"
    ),
    preset!(
        "test1-notsosmooth",
        "nondivergence form, k=2, slowly varying A, H² bump solution, 4 uniform levels"
    ),
    preset!(
        "test2",
        "nondivergence form, k=2, H² bump solution, adaptive"
    ),
    preset!("test2-uniform", "uniform counterpart of test2, 5 levels"),
    preset!(
        "test3",
        "nondivergence form under quadrature, oscillatory quadrant, smooth solution, adaptive"
    ),
    preset!(
        "test4",
        "nondivergence form under quadrature, oscillatory quadrant, H² bump solution, adaptive"
    ),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn load(name: &str) -> Result<ExperimentConfig> {
    let p = find(name).ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
    ExperimentConfig::parse(p.source)
}
