//! Per-observation cell probabilities, the sample log-likelihood, and its
//! finite-difference gradient.
//!
//! Observations are evaluated independently (optionally in parallel) and the
//! per-row log terms are combined by a fixed-shape pairwise sum, so serial
//! and parallel runs agree bit for bit.

use crate::error::Error;
use crate::model::{from_unconstrained, EquationSpec, ModelSpec, ParameterSet, UnconstrainedVector};
use crate::mvn::{bvn_cdf_unchecked, phi, TvnContext};
use crate::par;
use crate::Result;

/// Probabilities are floored here before taking logs; far below anything
/// reachable with clamped integration bounds, but it keeps early optimizer
/// iterations finite.
pub const PROB_FLOOR: f64 = 1e-300;

/// A column-oriented table of numeric covariates and 0-indexed ordinal
/// outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    columns: Vec<(String, Vec<f64>)>,
    n_rows: usize,
}

impl ObservationTable {
    pub fn new(columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidData("table has no columns".into()));
        }
        let n_rows = columns[0].1.len();
        for (name, values) in &columns {
            if values.len() != n_rows {
                return Err(Error::InvalidData(format!(
                    "column {name:?} has {} rows, expected {n_rows}",
                    values.len()
                )));
            }
        }
        for (i, (name, _)) in columns.iter().enumerate() {
            if columns[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidData(format!("duplicate column {name:?}")));
            }
        }
        Ok(ObservationTable { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn columns(&self) -> &[(String, Vec<f64>)] {
        &self.columns
    }

    /// Checks that every column the spec references exists, carries no
    /// missing values, and that outcomes are integers within stage range.
    pub fn validate_for(&self, spec: &ModelSpec) -> Result<()> {
        spec.validate()?;
        if self.n_rows == 0 {
            return Err(Error::InvalidData("table has no rows".into()));
        }
        for eq in &spec.equations {
            for c in &eq.covariates {
                let col = self
                    .column(c)
                    .ok_or_else(|| Error::InvalidData(format!("missing covariate column {c:?}")))?;
                if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidData(format!(
                        "non-finite value in column {c:?} at row {row}"
                    )));
                }
            }
        }
        for (eq, outcome) in spec.equations.iter().zip(&spec.outcome_columns) {
            let col = self
                .column(outcome)
                .ok_or_else(|| Error::InvalidData(format!("missing outcome column {outcome:?}")))?;
            for (row, &v) in col.iter().enumerate() {
                if !v.is_finite() || v.fract() != 0.0 || v < 0.0 {
                    return Err(Error::InvalidData(format!(
                        "outcome column {outcome:?} row {row}: {v} is not a stage index"
                    )));
                }
                if v as usize >= eq.n_stages {
                    return Err(Error::StageOutOfRange {
                        equation: eq.name.clone(),
                        stage: v as usize,
                        n_stages: eq.n_stages,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Dot product of a coefficient vector with a covariate row.
pub fn linear_predictor(beta: &[f64], x: &[f64]) -> Result<f64> {
    if beta.len() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficients vs {} covariates",
            beta.len(),
            x.len()
        )));
    }
    Ok(beta.iter().zip(x).map(|(b, v)| b * v).sum())
}

/// Bounds of the latent-scale interval censored into stage `j`:
/// (mu_{j-1} - xb, mu_j - xb] with mu_0 = -inf and mu_J = +inf.
#[inline]
pub(crate) fn stage_bounds(thresholds: &[f64], n_stages: usize, j: usize, xb: f64) -> (f64, f64) {
    let lower = if j == 0 {
        f64::NEG_INFINITY
    } else {
        thresholds[j - 1] - xb
    };
    let upper = if j == n_stages - 1 {
        f64::INFINITY
    } else {
        thresholds[j] - xb
    };
    (lower, upper)
}

/// P(stage = j) for a single equation: F(mu_j - xb) - F(mu_{j-1} - xb) with
/// the standard normal F.
pub fn cell_prob_uni(eq: &EquationSpec, thresholds: &[f64], j: usize, xb: f64) -> Result<f64> {
    if thresholds.len() != eq.n_thresholds() {
        return Err(Error::ShapeMismatch(format!(
            "{} thresholds for {} stages",
            thresholds.len(),
            eq.n_stages
        )));
    }
    if j >= eq.n_stages {
        return Err(Error::StageOutOfRange {
            equation: eq.name.clone(),
            stage: j,
            n_stages: eq.n_stages,
        });
    }
    let (lower, upper) = stage_bounds(thresholds, eq.n_stages, j, xb);
    Ok((uni_cdf(upper) - uni_cdf(lower)).max(0.0))
}

#[inline]
fn uni_cdf(b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        0.0
    } else if b == f64::INFINITY {
        1.0
    } else {
        phi(b)
    }
}

/// Joint probability of the stage combination `stages` given linear
/// predictors `xb`, one entry per equation.
pub fn cell_prob_joint(
    params: &ParameterSet,
    spec: &ModelSpec,
    stages: &[usize],
    xb: &[f64],
) -> Result<f64> {
    params.validate(spec)?;
    if stages.len() != spec.n_equations() || xb.len() != spec.n_equations() {
        return Err(Error::ShapeMismatch(
            "one stage and one linear predictor are required per equation".into(),
        ));
    }
    for (eq, &j) in spec.equations.iter().zip(stages) {
        if j >= eq.n_stages {
            return Err(Error::StageOutOfRange {
                equation: eq.name.clone(),
                stage: j,
                n_stages: eq.n_stages,
            });
        }
    }
    let tvn = match spec.n_equations() {
        3 => Some(TvnContext::new(params.corr.corr3()?)?),
        _ => None,
    };
    Ok(joint_prob(params, spec, tvn.as_ref(), stages, xb))
}

/// Prepared joint-probability evaluator: validates once, builds the
/// trivariate quadrature context once, and then prices stage combinations
/// cheaply. Used by tensor and goodness-of-fit code that evaluates many
/// cells per parameter set.
pub struct JointProbEvaluator<'a> {
    params: &'a ParameterSet,
    spec: &'a ModelSpec,
    tvn: Option<TvnContext>,
}

impl<'a> JointProbEvaluator<'a> {
    pub fn new(params: &'a ParameterSet, spec: &'a ModelSpec) -> Result<Self> {
        params.validate(spec)?;
        let tvn = match spec.n_equations() {
            3 => Some(TvnContext::new(params.corr.corr3()?)?),
            _ => None,
        };
        Ok(JointProbEvaluator { params, spec, tvn })
    }

    /// Joint probability of `stages` at linear predictors `xb`.
    pub fn prob(&self, stages: &[usize], xb: &[f64]) -> Result<f64> {
        if stages.len() != self.spec.n_equations() || xb.len() != self.spec.n_equations() {
            return Err(Error::ShapeMismatch(
                "one stage and one linear predictor are required per equation".into(),
            ));
        }
        for (eq, &j) in self.spec.equations.iter().zip(stages) {
            if j >= eq.n_stages {
                return Err(Error::StageOutOfRange {
                    equation: eq.name.clone(),
                    stage: j,
                    n_stages: eq.n_stages,
                });
            }
        }
        Ok(joint_prob(self.params, self.spec, self.tvn.as_ref(), stages, xb))
    }
}

/// Hot-path joint probability; inputs are valid by construction.
#[inline]
fn joint_prob(
    params: &ParameterSet,
    spec: &ModelSpec,
    tvn: Option<&TvnContext>,
    stages: &[usize],
    xb: &[f64],
) -> f64 {
    match spec.n_equations() {
        1 => {
            let eq = &spec.equations[0];
            let (l, u) = stage_bounds(&params.thresholds[0], eq.n_stages, stages[0], xb[0]);
            (uni_cdf(u) - uni_cdf(l)).max(0.0)
        }
        2 => {
            let (l1, u1) = stage_bounds(
                &params.thresholds[0],
                spec.equations[0].n_stages,
                stages[0],
                xb[0],
            );
            let (l2, u2) = stage_bounds(
                &params.thresholds[1],
                spec.equations[1].n_stages,
                stages[1],
                xb[1],
            );
            let r = params.corr.entry(0, 1);
            let c = |a: f64, b: f64| {
                if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
                    0.0
                } else {
                    bvn_cdf_unchecked(a, b, r)
                }
            };
            (c(u1, u2) - c(l1, u2) - c(u1, l2) + c(l1, l2)).clamp(0.0, 1.0)
        }
        3 => {
            let mut lower = [0.0; 3];
            let mut upper = [0.0; 3];
            for e in 0..3 {
                let (l, u) = stage_bounds(
                    &params.thresholds[e],
                    spec.equations[e].n_stages,
                    stages[e],
                    xb[e],
                );
                lower[e] = l;
                upper[e] = u;
            }
            tvn.expect("trivariate context is built for 3-equation models")
                .rectangle_unchecked(lower, upper)
        }
        _ => unreachable!(),
    }
}

/// Resolved design: per-equation covariate matrices and outcomes extracted
/// from an [`ObservationTable`] once, so repeated likelihood evaluations do
/// not touch the name-indexed table.
#[derive(Debug, Clone)]
pub struct Design {
    spec: ModelSpec,
    n: usize,
    /// Row-major n x p_e covariate matrix per equation.
    x: Vec<Vec<f64>>,
    /// Outcome stages per equation.
    y: Vec<Vec<usize>>,
}

impl Design {
    pub fn new(spec: &ModelSpec, table: &ObservationTable) -> Result<Self> {
        table.validate_for(spec)?;
        let n = table.n_rows();
        let mut x = Vec::with_capacity(spec.equations.len());
        let mut y = Vec::with_capacity(spec.equations.len());
        for (eq, outcome) in spec.equations.iter().zip(&spec.outcome_columns) {
            let p = eq.covariates.len();
            let cols: Vec<&[f64]> = eq
                .covariates
                .iter()
                .map(|c| table.column(c).expect("validated"))
                .collect();
            let mut m = vec![0.0; n * p];
            for i in 0..n {
                for (k, col) in cols.iter().enumerate() {
                    m[i * p + k] = col[i];
                }
            }
            x.push(m);
            y.push(
                table
                    .column(outcome)
                    .expect("validated")
                    .iter()
                    .map(|&v| v as usize)
                    .collect(),
            );
        }
        Ok(Design {
            spec: spec.clone(),
            n,
            x,
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn outcomes(&self, equation: usize) -> &[usize] {
        &self.y[equation]
    }

    /// Per-stage observation counts for one equation.
    pub fn stage_counts(&self, equation: usize) -> Vec<usize> {
        let eq = &self.spec.equations[equation];
        let mut counts = vec![0usize; eq.n_stages];
        for &j in &self.y[equation] {
            counts[j] += 1;
        }
        counts
    }

    fn linear_predictors(&self, params: &ParameterSet) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.spec.equations.len());
        for (e, eq) in self.spec.equations.iter().enumerate() {
            let p = eq.covariates.len();
            let beta = &params.beta[e];
            let mut xb = vec![0.0; self.n];
            if p > 0 {
                let m = &self.x[e];
                for i in 0..self.n {
                    let row = &m[i * p..(i + 1) * p];
                    xb[i] = row.iter().zip(beta).map(|(v, b)| v * b).sum();
                }
            }
            out.push(xb);
        }
        out
    }

    /// Sample log-likelihood at a validated parameter set.
    pub fn loglik(&self, params: &ParameterSet) -> Result<f64> {
        params.validate(&self.spec)?;
        Ok(self.loglik_unchecked(params))
    }

    pub(crate) fn loglik_unchecked(&self, params: &ParameterSet) -> f64 {
        let xb = self.linear_predictors(params);
        let tvn = if self.spec.n_equations() == 3 {
            Some(TvnContext::new(params.corr.corr3().expect("validated")).expect("validated"))
        } else {
            None
        };
        let n_eq = self.spec.n_equations();
        let mut terms = vec![0.0f64; self.n];
        par::fill_indexed(&mut terms, |i| {
            let mut stages = [0usize; 3];
            let mut xbi = [0.0f64; 3];
            for e in 0..n_eq {
                stages[e] = self.y[e][i];
                xbi[e] = xb[e][i];
            }
            let p = joint_prob(params, &self.spec, tvn.as_ref(), &stages[..n_eq], &xbi[..n_eq]);
            p.max(PROB_FLOOR).ln()
        });
        par::tree_sum(&terms)
    }

    /// Log-likelihood as a function of the unconstrained vector.
    pub fn loglik_unconstrained(&self, v: &UnconstrainedVector) -> Result<f64> {
        let params = from_unconstrained(v, &self.spec)?;
        Ok(self.loglik_unchecked(&params))
    }

    /// Central finite-difference gradient of the unconstrained objective,
    /// with per-coordinate step h = cbrt(machine epsilon) * max(1, |v_i|).
    pub fn grad_central(&self, v: &UnconstrainedVector) -> Result<Vec<f64>> {
        self.grad_central_with_step(v, f64::EPSILON.cbrt())
    }

    /// Central finite-difference gradient with an explicit base step.
    pub fn grad_central_with_step(&self, v: &UnconstrainedVector, step: f64) -> Result<Vec<f64>> {
        let k = v.len();
        if k != self.spec.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "gradient requested for a vector of length {k}, spec implies {}",
                self.spec.param_count()
            )));
        }
        let mut evals = vec![0.0f64; 2 * k];
        par::fill_indexed(&mut evals, |idx| {
            let coord = idx / 2;
            let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
            let h = step * v.0[coord].abs().max(1.0);
            let mut vv = v.0.clone();
            vv[coord] += sign * h;
            let params = from_unconstrained(&UnconstrainedVector(vv), &self.spec)
                .expect("perturbed vectors stay valid by construction");
            self.loglik_unchecked(&params)
        });
        Ok((0..k)
            .map(|i| {
                let h = step * v.0[i].abs().max(1.0);
                (evals[2 * i] - evals[2 * i + 1]) / (2.0 * h)
            })
            .collect())
    }

    /// Forward finite-difference gradient; a diagnostic counterpart used to
    /// verify the central scheme's higher-order convergence.
    pub fn grad_forward_with_step(&self, v: &UnconstrainedVector, step: f64) -> Result<Vec<f64>> {
        let k = v.len();
        let base = self.loglik_unconstrained(v)?;
        let mut evals = vec![0.0f64; k];
        par::fill_indexed(&mut evals, |coord| {
            let h = step * v.0[coord].abs().max(1.0);
            let mut vv = v.0.clone();
            vv[coord] += h;
            let params = from_unconstrained(&UnconstrainedVector(vv), &self.spec)
                .expect("perturbed vectors stay valid by construction");
            self.loglik_unchecked(&params)
        });
        Ok((0..k)
            .map(|i| {
                let h = step * v.0[i].abs().max(1.0);
                (evals[i] - base) / h
            })
            .collect())
    }
}

/// Sample log-likelihood of `params` on `data`.
pub fn loglik(params: &ParameterSet, data: &ObservationTable, spec: &ModelSpec) -> Result<f64> {
    let design = Design::new(spec, data)?;
    design.loglik(params)
}

/// Central finite-difference gradient of the unconstrained objective.
pub fn loglik_grad(
    v: &UnconstrainedVector,
    data: &ObservationTable,
    spec: &ModelSpec,
) -> Result<Vec<f64>> {
    let design = Design::new(spec, data)?;
    design.grad_central(v)
}
