//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses its own subset


use mvoprobit::model::{CorrMatrix, EquationSpec, ModelSpec, ParameterSet};
use mvoprobit::simulate::{CovariateGenerator, CovariateKind};

pub fn eq(name: &str, n_stages: usize, covs: &[&str]) -> EquationSpec {
    EquationSpec {
        name: name.into(),
        n_stages,
        covariates: covs.iter().map(|s| s.to_string()).collect(),
    }
}

/// The trivariate 3/3/4 recovery scenario: two covariates per equation and
/// correlations (0.44, 0.18, -0.10).
pub fn scenario_334() -> (ModelSpec, ParameterSet, CovariateGenerator) {
    let spec = ModelSpec {
        equations: vec![
            eq("cycling", 3, &["x1", "x2"]),
            eq("bikeshare", 3, &["x1", "x3"]),
            eq("walking", 4, &["x2", "x3"]),
        ],
        outcome_columns: vec!["y_cycling".into(), "y_bikeshare".into(), "y_walking".into()],
    };
    let params = ParameterSet {
        beta: vec![vec![0.5, -0.3], vec![0.4, 0.25], vec![-0.35, 0.45]],
        thresholds: vec![vec![-0.6, 0.7], vec![0.1, 1.1], vec![-1.2, -0.1, 0.9]],
        corr: CorrMatrix::new(3, vec![0.44, 0.18, -0.10]).unwrap(),
    };
    let gen = CovariateGenerator::new(vec![
        ("x1".into(), CovariateKind::StdNormal),
        ("x2".into(), CovariateKind::Uniform { low: -1.5, high: 1.5 }),
        ("x3".into(), CovariateKind::Bernoulli { p: 0.45 }),
    ])
    .unwrap();
    (spec, params, gen)
}

/// Two-equation scenario for quicker joint fits.
pub fn scenario_2eq() -> (ModelSpec, ParameterSet, CovariateGenerator) {
    let spec = ModelSpec {
        equations: vec![eq("a", 3, &["x1", "x2"]), eq("b", 3, &["x1"])],
        outcome_columns: vec!["ya".into(), "yb".into()],
    };
    let params = ParameterSet {
        beta: vec![vec![0.7, -0.4], vec![0.5]],
        thresholds: vec![vec![-0.5, 0.6], vec![-0.2, 0.8]],
        corr: CorrMatrix::new(2, vec![0.35]).unwrap(),
    };
    let gen = CovariateGenerator::new(vec![
        ("x1".into(), CovariateKind::StdNormal),
        ("x2".into(), CovariateKind::Uniform { low: -1.0, high: 1.0 }),
    ])
    .unwrap();
    (spec, params, gen)
}
