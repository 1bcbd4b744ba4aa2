//! Browser bindings for the interactive demo page: adoption contour maps,
//! stage-probability curves, and the multimodality indices. All entry points
//! speak JSON strings so the page needs no generated TypeScript types, and
//! every function is plain Rust underneath, so the crate is testable on
//! native targets too.

use mvoprobit::features::{hhi, sei};
use mvoprobit::model::{ModelSpec, ParameterSet};
use mvoprobit::predict::{contour_grid, marginal_stage_probs, ContourRequest, STAGE_PALETTE};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DemoModel {
    spec: ModelSpec,
    params: ParameterSet,
}

fn parse_model(model_json: &str) -> Result<DemoModel, String> {
    let model: DemoModel =
        serde_json::from_str(model_json).map_err(|e| format!("model JSON: {e}"))?;
    model
        .params
        .validate(&model.spec)
        .map_err(|e| e.to_string())?;
    Ok(model)
}

/// A canned three-equation stage-of-change model for the demo page: two
/// shared behavioral covariates with 3/3/4 stages and moderately coupled
/// errors.
#[wasm_bindgen]
pub fn demo_model_json() -> String {
    let json = r#"{
  "spec": {
    "equations": [
      {"name": "cycling", "n_stages": 3, "covariates": ["identity", "multimodality"]},
      {"name": "bikeshare", "n_stages": 3, "covariates": ["identity", "multimodality"]},
      {"name": "walking", "n_stages": 4, "covariates": ["identity", "multimodality"]}
    ],
    "outcome_columns": ["y_cycling", "y_bikeshare", "y_walking"]
  },
  "params": {
    "beta": [[0.45, 0.9], [0.35, 1.1], [0.55, 0.5]],
    "thresholds": [[-0.6, 0.75], [0.2, 1.1], [-1.25, -0.3, 0.85]],
    "correlations": [0.18, 0.44, -0.1]
  }
}"#;
    json.to_string()
}

#[derive(Debug, Serialize)]
struct ContourOut {
    axis_a: Vec<f64>,
    axis_b: Vec<f64>,
    palette: Vec<String>,
    equations: Vec<ContourEq>,
}

#[derive(Debug, Serialize)]
struct ContourEq {
    name: String,
    n_stages: usize,
    /// Row-major over (b, a): index = ib * resolution + ia.
    argmax: Vec<usize>,
    /// Probability of the most likely stage per node (for shading).
    confidence: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ContourReqIn {
    var_a: String,
    var_b: String,
    range_a: (f64, f64),
    range_b: (f64, f64),
    resolution: usize,
    #[serde(default)]
    baseline: BTreeMap<String, f64>,
}

/// Argmax adoption contours over a two-covariate sweep.
#[wasm_bindgen]
pub fn contour_json(model_json: &str, request_json: &str) -> Result<String, String> {
    let model = parse_model(model_json)?;
    let req_in: ContourReqIn =
        serde_json::from_str(request_json).map_err(|e| format!("request JSON: {e}"))?;
    let req = ContourRequest {
        var_a: req_in.var_a,
        var_b: req_in.var_b,
        range_a: req_in.range_a,
        range_b: req_in.range_b,
        resolution: req_in.resolution,
        baseline: req_in.baseline,
        joint_argmax: false,
    };
    let grid = contour_grid(&model.params, &model.spec, &req).map_err(|e| e.to_string())?;
    let out = ContourOut {
        axis_a: grid.axis_a,
        axis_b: grid.axis_b,
        palette: STAGE_PALETTE.iter().map(|s| s.to_string()).collect(),
        equations: grid
            .equations
            .into_iter()
            .map(|e| {
                let confidence = e
                    .probs
                    .iter()
                    .zip(&e.argmax)
                    .map(|(p, &a)| p[a])
                    .collect();
                ContourEq {
                    name: e.name,
                    n_stages: e.n_stages,
                    argmax: e.argmax,
                    confidence,
                }
            })
            .collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct CurvesOut {
    equation: String,
    covariate: String,
    x: Vec<f64>,
    /// stage-major: curves[j][i] = P(stage j) at x[i].
    curves: Vec<Vec<f64>>,
}

/// Marginal stage-probability curves for one equation as one covariate
/// sweeps a range, the others held at the baseline.
#[wasm_bindgen]
pub fn stage_curves_json(
    model_json: &str,
    equation: &str,
    covariate: &str,
    low: f64,
    high: f64,
    points: usize,
    baseline_json: &str,
) -> Result<String, String> {
    let model = parse_model(model_json)?;
    if !(low < high) || points < 2 {
        return Err("need low < high and at least two points".into());
    }
    let baseline: BTreeMap<String, f64> =
        serde_json::from_str(baseline_json).map_err(|e| format!("baseline JSON: {e}"))?;
    let eq = model
        .spec
        .equations
        .iter()
        .find(|e| e.name == equation)
        .ok_or_else(|| format!("unknown equation {equation:?}"))?;
    let sweep_idx = eq
        .covariates
        .iter()
        .position(|c| c == covariate)
        .ok_or_else(|| format!("equation {equation:?} does not use covariate {covariate:?}"))?;
    let mut row: Vec<f64> = Vec::with_capacity(eq.covariates.len());
    for c in &eq.covariates {
        if c == covariate {
            row.push(0.0);
        } else {
            row.push(
                *baseline
                    .get(c)
                    .ok_or_else(|| format!("baseline is missing covariate {c:?}"))?,
            );
        }
    }

    let x: Vec<f64> = (0..points)
        .map(|i| low + (high - low) * i as f64 / (points - 1) as f64)
        .collect();
    let mut curves = vec![Vec::with_capacity(points); eq.n_stages];
    for &xi in &x {
        row[sweep_idx] = xi;
        let probs = marginal_stage_probs(&model.params, &model.spec, equation, &row)
            .map_err(|e| e.to_string())?;
        for (j, p) in probs.into_iter().enumerate() {
            curves[j].push(p);
        }
    }
    serde_json::to_string(&CurvesOut {
        equation: equation.to_string(),
        covariate: covariate.to_string(),
        x,
        curves,
    })
    .map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct MultimodalityOut {
    sei: f64,
    hhi: f64,
}

/// SEI and HHI of a vector of per-mode trip frequencies.
#[wasm_bindgen]
pub fn multimodality_json(frequencies: &[f64]) -> Result<String, String> {
    let s = sei(frequencies).map_err(|e| e.to_string())?;
    let h = hhi(frequencies).map_err(|e| e.to_string())?;
    serde_json::to_string(&MultimodalityOut { sei: s, hhi: h }).map_err(|e| e.to_string())
}
