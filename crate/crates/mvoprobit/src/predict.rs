//! Stage-probability prediction and two-covariate adoption contour grids.

use crate::error::Error;
use crate::likelihood::{cell_prob_joint, cell_prob_uni, linear_predictor, JointProbEvaluator};
use crate::model::{ModelSpec, ParameterSet};
use crate::par;
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Marginal stage probabilities of one equation at a covariate row. The
/// marginal of each equation in the joint model is univariate probit, so the
/// output never depends on the correlation entries.
pub fn marginal_stage_probs(
    params: &ParameterSet,
    spec: &ModelSpec,
    equation: &str,
    x: &[f64],
) -> Result<Vec<f64>> {
    params.validate(spec)?;
    let e = spec
        .equations
        .iter()
        .position(|eq| eq.name == equation)
        .ok_or_else(|| Error::InvalidSpec(format!("unknown equation {equation:?}")))?;
    let eq = &spec.equations[e];
    let xb = linear_predictor(&params.beta[e], x)?;
    (0..eq.n_stages)
        .map(|j| cell_prob_uni(eq, &params.thresholds[e], j, xb))
        .collect()
}

/// Joint stage-probability tensor over all stage combinations, flattened
/// with the last equation's stage index varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStageTensor {
    pub dims: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointStageTensor {
    pub fn get(&self, stages: &[usize]) -> f64 {
        let mut idx = 0;
        for (d, &s) in self.dims.iter().zip(stages) {
            let _ = d;
            idx = idx * d + s;
        }
        self.probs[idx]
    }

    /// Marginal probability vector of one equation (sum over the others).
    pub fn marginal(&self, equation: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[equation]];
        let mut stages = vec![0usize; self.dims.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let mut rem = flat;
            for (e, &d) in self.dims.iter().enumerate().rev() {
                stages[e] = rem % d;
                rem /= d;
            }
            out[stages[equation]] += p;
        }
        out
    }
}

/// Joint probabilities of every stage combination at a covariate map.
/// `x_by_equation` supplies one covariate row per equation.
pub fn joint_stage_probs(
    params: &ParameterSet,
    spec: &ModelSpec,
    x_by_equation: &[Vec<f64>],
) -> Result<JointStageTensor> {
    params.validate(spec)?;
    if x_by_equation.len() != spec.n_equations() {
        return Err(Error::ShapeMismatch(
            "one covariate row is required per equation".into(),
        ));
    }
    let mut xb = Vec::with_capacity(spec.n_equations());
    for (e, x) in x_by_equation.iter().enumerate() {
        xb.push(linear_predictor(&params.beta[e], x)?);
    }
    let dims: Vec<usize> = spec.equations.iter().map(|e| e.n_stages).collect();
    let total: usize = dims.iter().product();
    let evaluator = JointProbEvaluator::new(params, spec)?;
    let mut probs = Vec::with_capacity(total);
    let mut stages = vec![0usize; dims.len()];
    for flat in 0..total {
        let mut rem = flat;
        for (e, &d) in dims.iter().enumerate().rev() {
            stages[e] = rem % d;
            rem /= d;
        }
        probs.push(evaluator.prob(&stages, &xb)?);
    }
    Ok(JointStageTensor { dims, probs })
}

/// Request for a two-covariate contour sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRequest {
    pub var_a: String,
    pub var_b: String,
    pub range_a: (f64, f64),
    pub range_b: (f64, f64),
    /// Grid nodes per axis.
    pub resolution: usize,
    /// Values for every other covariate any equation uses.
    pub baseline: BTreeMap<String, f64>,
    /// Also compute the jointly most likely stage combination per node
    /// (costs a full tensor evaluation per node).
    pub joint_argmax: bool,
}

impl Default for ContourRequest {
    fn default() -> Self {
        ContourRequest {
            var_a: String::new(),
            var_b: String::new(),
            range_a: (0.0, 1.0),
            range_b: (0.0, 1.0),
            resolution: 101,
            baseline: BTreeMap::new(),
            joint_argmax: false,
        }
    }
}

/// Contour output for one equation: per-node stage probabilities and the
/// most likely stage. Nodes are row-major over (b, a): index = ib *
/// resolution + ia.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationContour {
    pub name: String,
    pub n_stages: usize,
    /// node-major, then stage.
    pub probs: Vec<Vec<f64>>,
    pub argmax: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub axis_a: Vec<f64>,
    pub axis_b: Vec<f64>,
    pub equations: Vec<EquationContour>,
    /// Jointly most likely stage combination per node, when requested.
    pub joint_argmax: Option<Vec<Vec<usize>>>,
}

impl ContourRequest {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.var_a == self.var_b {
            return Err(Error::InvalidParameter(
                "contour covariates must be distinct".into(),
            ));
        }
        if self.resolution < 2 {
            return Err(Error::InvalidParameter(
                "contour resolution must be at least 2".into(),
            ));
        }
        for (name, (lo, hi)) in [
            (&self.var_a, self.range_a),
            (&self.var_b, self.range_b),
        ] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "range for {name:?} must satisfy low < high, got ({lo}, {hi})"
                )));
            }
        }
        let used: Vec<&String> = spec
            .equations
            .iter()
            .flat_map(|e| e.covariates.iter())
            .collect();
        if !used.iter().any(|c| **c == self.var_a) && !used.iter().any(|c| **c == self.var_b) {
            return Err(Error::InvalidParameter(format!(
                "neither {:?} nor {:?} appears in any equation",
                self.var_a, self.var_b
            )));
        }
        // Baseline must cover exactly the remaining covariates.
        for c in &used {
            if **c != self.var_a && **c != self.var_b && !self.baseline.contains_key(*c) {
                return Err(Error::InvalidParameter(format!(
                    "baseline is missing covariate {c:?}"
                )));
            }
        }
        for key in self.baseline.keys() {
            if key == &self.var_a || key == &self.var_b {
                return Err(Error::InvalidParameter(format!(
                    "baseline must not override the swept covariate {key:?}"
                )));
            }
            if !used.iter().any(|c| *c == key) {
                return Err(Error::InvalidParameter(format!(
                    "baseline covariate {key:?} is not used by any equation"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates marginal stage probabilities (and optionally the joint argmax
/// combination) on the full grid. Deterministic; nodes are independent and
/// evaluated in parallel with row-major output ordering.
pub fn contour_grid(
    params: &ParameterSet,
    spec: &ModelSpec,
    req: &ContourRequest,
) -> Result<ContourGrid> {
    params.validate(spec)?;
    req.validate(spec)?;

    let res = req.resolution;
    let axis = |range: (f64, f64)| -> Vec<f64> {
        (0..res)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (res - 1) as f64)
            .collect()
    };
    let axis_a = axis(req.range_a);
    let axis_b = axis(req.range_b);

    // Per equation: the column index of var_a/var_b in its covariate list
    // (if used) and the baseline row.
    struct EqPlan {
        idx_a: Option<usize>,
        idx_b: Option<usize>,
        base_row: Vec<f64>,
    }
    let mut plans = Vec::with_capacity(spec.n_equations());
    for eq in &spec.equations {
        let mut base_row = Vec::with_capacity(eq.covariates.len());
        for c in &eq.covariates {
            if c == &req.var_a || c == &req.var_b {
                base_row.push(0.0);
            } else {
                base_row.push(*req.baseline.get(c).expect("validated"));
            }
        }
        plans.push(EqPlan {
            idx_a: eq.covariates.iter().position(|c| c == &req.var_a),
            idx_b: eq.covariates.iter().position(|c| c == &req.var_b),
            base_row,
        });
    }

    let n_nodes = res * res;
    // Per-node linear predictors for every equation.
    let mut xb_nodes = vec![[0.0f64; 3]; n_nodes];
    par::fill_indexed(&mut xb_nodes, |node| {
        let ia = node % res;
        let ib = node / res;
        let mut out = [0.0f64; 3];
        for (e, plan) in plans.iter().enumerate() {
            let mut row = plan.base_row.clone();
            if let Some(i) = plan.idx_a {
                row[i] = axis_a[ia];
            }
            if let Some(i) = plan.idx_b {
                row[i] = axis_b[ib];
            }
            out[e] = row
                .iter()
                .zip(&params.beta[e])
                .map(|(v, b)| v * b)
                .sum::<f64>();
        }
        out
    });

    let mut equations = Vec::with_capacity(spec.n_equations());
    for (e, eq) in spec.equations.iter().enumerate() {
        let mut probs = vec![Vec::new(); n_nodes];
        par::fill_indexed(&mut probs, |node| {
            let xb = xb_nodes[node][e];
            (0..eq.n_stages)
                .map(|j| {
                    cell_prob_uni(eq, &params.thresholds[e], j, xb)
                        .expect("stage indices within range")
                })
                .collect::<Vec<f64>>()
        });
        let argmax = probs.iter().map(|p| argmax_index(p)).collect();
        equations.push(EquationContour {
            name: eq.name.clone(),
            n_stages: eq.n_stages,
            probs,
            argmax,
        });
    }

    let joint_argmax = if req.joint_argmax {
        let dims: Vec<usize> = spec.equations.iter().map(|e| e.n_stages).collect();
        let total: usize = dims.iter().product();
        let mut winners = vec![Vec::new(); n_nodes];
        par::fill_indexed(&mut winners, |node| {
            let xb = &xb_nodes[node][..spec.n_equations()];
            let mut best = (0usize, f64::NEG_INFINITY);
            let mut stages = vec![0usize; dims.len()];
            for flat in 0..total {
                let mut rem = flat;
                for (e, &d) in dims.iter().enumerate().rev() {
                    stages[e] = rem % d;
                    rem /= d;
                }
                let p = cell_prob_joint(params, spec, &stages, xb)
                    .expect("stage indices within range");
                if p > best.1 {
                    best = (flat, p);
                }
            }
            let mut rem = best.0;
            let mut out = vec![0usize; dims.len()];
            for (e, &d) in dims.iter().enumerate().rev() {
                out[e] = rem % d;
                rem /= d;
            }
            out
        });
        Some(winners)
    } else {
        None
    };

    Ok(ContourGrid {
        axis_a,
        axis_b,
        equations,
        joint_argmax,
    })
}

fn argmax_index(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Fixed palette for argmax heat maps, early stages red through mature use
/// green. Equations with fewer than four stages spread across the palette.
pub const STAGE_PALETTE: [&str; 4] = ["#d73027", "#fdae61", "#a6d96a", "#1a9850"];

/// Renders one equation's argmax contour as a flat-cell SVG heat map.
pub fn render_contour_svg(grid: &ContourGrid, equation: &str) -> Result<String> {
    use std::fmt::Write;
    let eq = grid
        .equations
        .iter()
        .find(|e| e.name == equation)
        .ok_or_else(|| Error::InvalidSpec(format!("unknown equation {equation:?}")))?;
    let res_a = grid.axis_a.len();
    let res_b = grid.axis_b.len();
    let cell = 6.0_f64;
    let margin = 28.0_f64;
    let w = margin * 2.0 + cell * res_a as f64;
    let h = margin * 2.0 + cell * res_b as f64;
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = write!(
        svg,
        r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#
    );
    for ib in 0..res_b {
        for ia in 0..res_a {
            let stage = eq.argmax[ib * res_a + ia];
            let color = if eq.n_stages <= 1 {
                STAGE_PALETTE[0]
            } else {
                let idx = (stage * (STAGE_PALETTE.len() - 1) + (eq.n_stages - 1) / 2)
                    / (eq.n_stages - 1);
                STAGE_PALETTE[idx.min(STAGE_PALETTE.len() - 1)]
            };
            // SVG y grows downward; put low var_b values at the bottom.
            let x = margin + ia as f64 * cell;
            let y = margin + (res_b - 1 - ib) as f64 * cell;
            let _ = write!(
                svg,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{color}"/>"#
            );
        }
    }
    let _ = write!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 8.0,
        equation
    );
    svg.push_str("</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CorrMatrix, EquationSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn eq(name: &str, n_stages: usize, covs: &[&str]) -> EquationSpec {
        EquationSpec {
            name: name.into(),
            n_stages,
            covariates: covs.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn spec334() -> ModelSpec {
        ModelSpec {
            equations: vec![
                eq("cycling", 3, &["x1", "x2"]),
                eq("bikeshare", 3, &["x1"]),
                eq("walking", 4, &["x2", "x3"]),
            ],
            outcome_columns: vec!["y1".into(), "y2".into(), "y3".into()],
        }
    }

    fn params334(corr: Vec<f64>) -> ParameterSet {
        ParameterSet {
            beta: vec![vec![0.3, -0.4], vec![0.25], vec![-0.2, 0.5]],
            thresholds: vec![vec![-0.6, 0.7], vec![0.0, 1.2], vec![-1.3, -0.2, 0.9]],
            corr: CorrMatrix::new(3, corr).unwrap(),
        }
    }

    #[test]
    fn marginals_sum_to_one_and_ignore_correlations() {
        let spec = spec334();
        let p1 = params334(vec![0.0, 0.0, 0.0]);
        let p2 = params334(vec![0.44, 0.18, -0.10]);
        let x = [0.7, -0.3];
        let m1 = marginal_stage_probs(&p1, &spec, "cycling", &x).unwrap();
        let m2 = marginal_stage_probs(&p2, &spec, "cycling", &x).unwrap();
        assert_eq!(m1, m2, "marginals must not read the correlation entries");
        assert!((m1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(marginal_stage_probs(&p1, &spec, "swimming", &x).is_err());
    }

    #[test]
    fn symmetric_thresholds_give_symmetric_marginals() {
        let spec = ModelSpec {
            equations: vec![eq("e", 3, &["x"])],
            outcome_columns: vec!["y".into()],
        };
        let params = ParameterSet {
            beta: vec![vec![1.0]],
            thresholds: vec![vec![-1.0, 1.0]],
            corr: CorrMatrix::identity(1),
        };
        let m = marginal_stage_probs(&params, &spec, "e", &[0.0]).unwrap();
        assert!((m[0] - m[2]).abs() < 1e-14);
    }

    #[test]
    fn joint_tensor_is_outer_product_at_identity() {
        let spec = spec334();
        let params = params334(vec![0.0, 0.0, 0.0]);
        let xs = vec![vec![0.4, -0.2], vec![0.4], vec![-0.2, 1.0]];
        let tensor = joint_stage_probs(&params, &spec, &xs).unwrap();
        let marg: Vec<Vec<f64>> = (0..3)
            .map(|e| {
                marginal_stage_probs(&params, &spec, &spec.equations[e].name, &xs[e]).unwrap()
            })
            .collect();
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..4 {
                    let expect = marg[0][j] * marg[1][k] * marg[2][l];
                    let got = tensor.get(&[j, k, l]);
                    assert!((got - expect).abs() < 1e-9, "({j},{k},{l}): {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn joint_tensor_marginalizes_consistently() {
        // Everywhere on a 10x10 grid of two shared covariate values, the
        // tensor sums to one and its one-way margins match the direct
        // univariate probabilities.
        let spec = spec334();
        let params = params334(vec![0.44, 0.18, -0.10]);
        for ia in 0..10 {
            for ib in 0..10 {
                let x1 = -1.8 + 3.6 * ia as f64 / 9.0;
                let x2 = -1.8 + 3.6 * ib as f64 / 9.0;
                let xs = vec![vec![x1, x2], vec![x1], vec![x2, 0.5]];
                let tensor = joint_stage_probs(&params, &spec, &xs).unwrap();
                assert!((tensor.probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                for e in 0..3 {
                    let from_tensor = tensor.marginal(e);
                    let direct =
                        marginal_stage_probs(&params, &spec, &spec.equations[e].name, &xs[e])
                            .unwrap();
                    for (a, b) in from_tensor.iter().zip(&direct) {
                        assert!((a - b).abs() < 1e-6, "eq {e}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn positive_correlation_lifts_the_joint_top_cell() {
        // With rho(cycling,walking) > 0 the both-top-stage cell exceeds the
        // product of the matched marginals.
        let spec = spec334();
        let dependent = params334(vec![0.181, 0.439, -0.097]);
        let xs = vec![vec![0.2, 0.1], vec![0.2], vec![0.1, 0.3]];
        let tensor = joint_stage_probs(&dependent, &spec, &xs).unwrap();
        // Marginalize bikeshare away: P(cycling=2, walking=3).
        let mut joint_top = 0.0;
        for k in 0..3 {
            joint_top += tensor.get(&[2, k, 3]);
        }
        let m_c = marginal_stage_probs(&dependent, &spec, "cycling", &xs[0]).unwrap();
        let m_w = marginal_stage_probs(&dependent, &spec, "walking", &xs[2]).unwrap();
        let independent = m_c[2] * m_w[3];
        assert!(
            joint_top > independent + 1e-6,
            "joint {joint_top} vs independent {independent}"
        );
    }

    fn contour_spec() -> (ModelSpec, ParameterSet) {
        // var_b is absent from the first equation.
        let spec = ModelSpec {
            equations: vec![eq("first", 3, &["a"]), eq("second", 4, &["a", "b"])],
            outcome_columns: vec!["y1".into(), "y2".into()],
        };
        let params = ParameterSet {
            beta: vec![vec![1.2], vec![0.8, 1.5]],
            thresholds: vec![vec![-0.8, 0.8], vec![-1.5, 0.0, 1.5]],
            corr: CorrMatrix::new(2, vec![0.3]).unwrap(),
        };
        (spec, params)
    }

    fn contour_req(resolution: usize) -> ContourRequest {
        ContourRequest {
            var_a: "a".into(),
            var_b: "b".into(),
            range_a: (-2.0, 2.0),
            range_b: (-2.0, 2.0),
            resolution,
            baseline: BTreeMap::new(),
            joint_argmax: true,
        }
    }

    #[test]
    fn grid_matches_direct_evaluation_at_resolution_two() {
        let (spec, params) = contour_spec();
        let grid = contour_grid(&params, &spec, &contour_req(2)).unwrap();
        for (ib, &b) in grid.axis_b.iter().enumerate() {
            for (ia, &a) in grid.axis_a.iter().enumerate() {
                let node = ib * 2 + ia;
                let direct = marginal_stage_probs(&params, &spec, "second", &[a, b]).unwrap();
                for (x, y) in grid.equations[1].probs[node].iter().zip(&direct) {
                    assert_eq!(x, y);
                }
            }
        }
    }

    #[test]
    fn absent_covariate_leaves_contour_constant_along_its_axis() {
        let (spec, params) = contour_spec();
        let grid = contour_grid(&params, &spec, &contour_req(21)).unwrap();
        let res = 21;
        for ia in 0..res {
            let first_col = &grid.equations[0].probs[ia];
            for ib in 1..res {
                assert_eq!(
                    &grid.equations[0].probs[ib * res + ia],
                    first_col,
                    "equation without var_b must be constant along the b axis"
                );
            }
        }
    }

    #[test]
    fn argmax_transitions_are_single_crossings() {
        let (spec, params) = contour_spec();
        let res = 41;
        let grid = contour_grid(&params, &spec, &contour_req(res)).unwrap();
        for eqc in &grid.equations {
            // Along each row (fixed b), argmax must be monotone in a.
            for ib in 0..res {
                let line: Vec<usize> = (0..res).map(|ia| eqc.argmax[ib * res + ia]).collect();
                let increasing = line.windows(2).all(|w| w[0] <= w[1]);
                let decreasing = line.windows(2).all(|w| w[0] >= w[1]);
                assert!(
                    increasing || decreasing,
                    "{}: argmax not monotone along a: {line:?}",
                    eqc.name
                );
            }
            for ia in 0..res {
                let line: Vec<usize> = (0..res).map(|ib| eqc.argmax[ib * res + ia]).collect();
                let increasing = line.windows(2).all(|w| w[0] <= w[1]);
                let decreasing = line.windows(2).all(|w| w[0] >= w[1]);
                assert!(increasing || decreasing);
            }
        }
    }

    #[test]
    fn argmax_is_invariant_to_correlation_changes() {
        let (spec, params) = contour_spec();
        let mut recorrelated = params.clone();
        recorrelated.corr = CorrMatrix::new(2, vec![-0.6]).unwrap();
        let g1 = contour_grid(&params, &spec, &contour_req(11)).unwrap();
        let g2 = contour_grid(&recorrelated, &spec, &contour_req(11)).unwrap();
        for (e1, e2) in g1.equations.iter().zip(&g2.equations) {
            assert_eq!(e1.argmax, e2.argmax);
            assert_eq!(e1.probs, e2.probs);
        }
        // The joint argmax may differ; it is the R-sensitive output.
        assert!(g1.joint_argmax.is_some() && g2.joint_argmax.is_some());
    }

    #[test]
    fn request_validation() {
        let (spec, _) = contour_spec();
        let mut r = contour_req(11);
        r.var_b = "a".into();
        assert!(r.validate(&spec).is_err());

        let mut r = contour_req(1);
        r.resolution = 1;
        assert!(r.validate(&spec).is_err());

        let mut r = contour_req(11);
        r.var_a = "nope".into();
        r.var_b = "alsono".into();
        assert!(r.validate(&spec).is_err());

        // Missing baseline entry for a third covariate.
        let spec3 = ModelSpec {
            equations: vec![eq("first", 3, &["a", "c"]), eq("second", 4, &["a", "b"])],
            outcome_columns: vec!["y1".into(), "y2".into()],
        };
        let r = contour_req(11);
        assert!(r.validate(&spec3).is_err());
        let mut r2 = contour_req(11);
        r2.baseline.insert("c".into(), 0.5);
        assert!(r2.validate(&spec3).is_ok());

        // Baseline overriding a swept covariate is rejected.
        let mut r3 = contour_req(11);
        r3.baseline.insert("a".into(), 0.0);
        assert!(r3.validate(&spec).is_err());
    }

    #[test]
    fn svg_renders_with_fixed_palette() {
        let (spec, params) = contour_spec();
        let grid = contour_grid(&params, &spec, &contour_req(8)).unwrap();
        let svg = render_contour_svg(&grid, "second").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        // All four palette entries appear over this range for a 4-stage map.
        for color in STAGE_PALETTE {
            assert!(svg.contains(color), "missing {color}");
        }
        assert!(render_contour_svg(&grid, "third").is_err());
    }
}
