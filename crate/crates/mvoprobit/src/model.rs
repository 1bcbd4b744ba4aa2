//! Model specification and parameter containers, plus the bijective map
//! between constrained parameters and the unconstrained optimization vector.
//!
//! The unconstrained layout is: all coefficients (equation-major, covariate
//! order), then per equation the first threshold followed by log-spacings,
//! then the correlation angles. Thresholds rebuilt from any real vector are
//! strictly increasing by construction, and correlations rebuilt through
//! hyperspherical Cholesky angles are positive definite for every real
//! input, so the optimizer can roam freely.

use crate::error::Error;
use crate::mvn::Corr3;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Relative floor on threshold spacings. Keeps `mu_{j} > mu_{j-1}` true in
/// floating point even for raw spacings as extreme as exp(-50) next to huge
/// thresholds, at the cost of restricting representable spacings to values
/// above the floor.
const SPACING_FLOOR: f64 = 1e-14;

fn spacing_floor(prev: f64) -> f64 {
    SPACING_FLOOR * prev.abs().max(1.0)
}

/// Hyperspherical angles live in (ANGLE_MARGIN, pi - ANGLE_MARGIN). The
/// margin bounds |rho| away from 1 (max ~0.99995) and keeps the positive
/// definiteness check well clear of rounding noise.
const ANGLE_MARGIN: f64 = 0.01;

/// One outcome equation: an ordinal outcome with `n_stages` categories and a
/// linear index over named covariate columns. No intercept is permitted; the
/// thresholds absorb location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub name: String,
    pub n_stages: usize,
    pub covariates: Vec<String>,
}

impl EquationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidSpec("equation name must be non-empty".into()));
        }
        if self.n_stages < 2 {
            return Err(Error::InvalidSpec(format!(
                "equation {} must have at least 2 stages, got {}",
                self.name, self.n_stages
            )));
        }
        for (i, c) in self.covariates.iter().enumerate() {
            if self.covariates[..i].contains(c) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate covariate {c:?} in equation {}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Number of threshold parameters (mu_1 ... mu_{J-1}).
    pub fn n_thresholds(&self) -> usize {
        self.n_stages - 1
    }
}

/// A 1-3 equation model: equations plus the outcome column each one censors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub equations: Vec<EquationSpec>,
    pub outcome_columns: Vec<String>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.equations.is_empty() || self.equations.len() > 3 {
            return Err(Error::InvalidSpec(format!(
                "model must have 1-3 equations, got {}",
                self.equations.len()
            )));
        }
        if self.outcome_columns.len() != self.equations.len() {
            return Err(Error::InvalidSpec(
                "one outcome column is required per equation".into(),
            ));
        }
        for (i, c) in self.outcome_columns.iter().enumerate() {
            if self.outcome_columns[..i].contains(c) {
                return Err(Error::InvalidSpec(format!(
                    "outcome column {c:?} used by more than one equation"
                )));
            }
        }
        for (i, eq) in self.equations.iter().enumerate() {
            eq.validate()?;
            if self.equations[..i].iter().any(|e| e.name == eq.name) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate equation name {:?}",
                    eq.name
                )));
            }
        }
        Ok(())
    }

    pub fn n_equations(&self) -> usize {
        self.equations.len()
    }

    /// Number of correlation parameters, C(n_eq, 2).
    pub fn n_correlations(&self) -> usize {
        let n = self.equations.len();
        n * (n - 1) / 2
    }

    /// Total parameter count: sum of |beta| + sum of (n_stages - 1) + C(n, 2).
    pub fn param_count(&self) -> usize {
        self.equations
            .iter()
            .map(|e| e.covariates.len() + e.n_thresholds())
            .sum::<usize>()
            + self.n_correlations()
    }

    /// Flat parameter labels in the same order as the unconstrained layout.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.param_count());
        for eq in &self.equations {
            for c in &eq.covariates {
                names.push(format!("{}:{}", eq.name, c));
            }
        }
        for eq in &self.equations {
            for j in 1..eq.n_stages {
                names.push(format!("{}:mu_{}", eq.name, j));
            }
        }
        for i in 0..self.equations.len() {
            for j in (i + 1)..self.equations.len() {
                names.push(format!(
                    "rho({},{})",
                    self.equations[i].name, self.equations[j].name
                ));
            }
        }
        names
    }
}

/// Unit-diagonal correlation matrix for up to three equations, stored as the
/// off-diagonal entries in (1,2), (1,3), (2,3) order. Serialized as a plain
/// array, so one-equation models carry `[]` and trivariate ones `[r12, r13,
/// r23]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CorrMatrix {
    n_eq: usize,
    values: Vec<f64>,
}

impl CorrMatrix {
    pub fn identity(n_eq: usize) -> Self {
        CorrMatrix {
            n_eq,
            values: vec![0.0; n_eq * (n_eq - 1) / 2],
        }
    }

    pub fn new(n_eq: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_eq * (n_eq - 1) / 2 {
            return Err(Error::ShapeMismatch(format!(
                "{} correlations supplied for {} equations",
                values.len(),
                n_eq
            )));
        }
        let m = CorrMatrix { n_eq, values };
        m.validate()?;
        Ok(m)
    }

    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Off-diagonal entry for equations i < j.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < j && j < self.n_eq);
        match (i, j) {
            (0, 1) => self.values[0],
            (0, 2) => self.values[1],
            (1, 2) => self.values[2],
            _ => unreachable!(),
        }
    }

    pub fn corr3(&self) -> Result<Corr3> {
        if self.n_eq != 3 {
            return Err(Error::ShapeMismatch(format!(
                "corr3 requested for a {}-equation model",
                self.n_eq
            )));
        }
        Ok(Corr3 {
            r12: self.values[0],
            r13: self.values[1],
            r23: self.values[2],
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self.n_eq {
            1 => Ok(()),
            2 => {
                let r = self.values[0];
                if !r.is_finite() || r.abs() >= 1.0 {
                    Err(Error::DegenerateCorrelation(r))
                } else {
                    Ok(())
                }
            }
            3 => self.corr3()?.validate(),
            n => Err(Error::InvalidSpec(format!("{n} equations unsupported"))),
        }
    }

    /// Lower-triangular Cholesky factor (row-major, n_eq x n_eq).
    pub fn cholesky(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let n = self.n_eq;
        let mut l = vec![vec![0.0; n]; n];
        l[0][0] = 1.0;
        if n >= 2 {
            let r12 = self.values[0];
            l[1][0] = r12;
            l[1][1] = (1.0 - r12 * r12).sqrt();
        }
        if n == 3 {
            let (r12, r13, r23) = (self.values[0], self.values[1], self.values[2]);
            l[2][0] = r13;
            l[2][1] = (r23 - r12 * r13) / l[1][1];
            let rem = 1.0 - l[2][0] * l[2][0] - l[2][1] * l[2][1];
            if rem <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!(
                    "Cholesky pivot {rem} <= 0"
                )));
            }
            l[2][2] = rem.sqrt();
        }
        Ok(l)
    }
}

impl From<CorrMatrix> for Vec<f64> {
    fn from(m: CorrMatrix) -> Self {
        m.values
    }
}

impl TryFrom<Vec<f64>> for CorrMatrix {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        let n_eq = match values.len() {
            0 => 1,
            1 => 2,
            3 => 3,
            n => {
                return Err(Error::ShapeMismatch(format!(
                    "{n} correlation entries do not correspond to 1-3 equations"
                )))
            }
        };
        CorrMatrix::new(n_eq, values)
    }
}

/// Complete parameter set: per-equation coefficients, strictly increasing
/// thresholds, and the cross-equation correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub beta: Vec<Vec<f64>>,
    pub thresholds: Vec<Vec<f64>>,
    #[serde(rename = "correlations")]
    pub corr: CorrMatrix,
}

impl ParameterSet {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        spec.validate()?;
        if self.beta.len() != spec.equations.len() || self.thresholds.len() != spec.equations.len()
        {
            return Err(Error::ShapeMismatch(
                "beta/thresholds must have one vector per equation".into(),
            ));
        }
        for (eq, b) in spec.equations.iter().zip(&self.beta) {
            if b.len() != eq.covariates.len() {
                return Err(Error::ShapeMismatch(format!(
                    "equation {} expects {} coefficients, got {}",
                    eq.name,
                    eq.covariates.len(),
                    b.len()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite coefficient in equation {}",
                    eq.name
                )));
            }
        }
        for (eq, mu) in spec.equations.iter().zip(&self.thresholds) {
            if mu.len() != eq.n_thresholds() {
                return Err(Error::ShapeMismatch(format!(
                    "equation {} expects {} thresholds, got {}",
                    eq.name,
                    eq.n_thresholds(),
                    mu.len()
                )));
            }
            for (j, w) in mu.windows(2).enumerate() {
                if !(w[0] < w[1]) {
                    return Err(Error::InvalidParameter(format!(
                        "thresholds of equation {} must be strictly increasing \
                         (mu_{} = {} >= mu_{} = {})",
                        eq.name,
                        j + 1,
                        w[0],
                        j + 2,
                        w[1]
                    )));
                }
            }
            if mu.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite threshold in equation {}",
                    eq.name
                )));
            }
        }
        if self.corr.n_eq() != spec.equations.len() {
            return Err(Error::ShapeMismatch(
                "correlation matrix size does not match the equation count".into(),
            ));
        }
        self.corr.validate()
    }

    /// Flat constrained vector in the reporting order: coefficients, then
    /// thresholds, then correlations.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.beta {
            out.extend_from_slice(b);
        }
        for mu in &self.thresholds {
            out.extend_from_slice(mu);
        }
        out.extend_from_slice(self.corr.values());
        out
    }
}

/// Flat unconstrained optimization vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconstrainedVector(pub Vec<f64>);

impl UnconstrainedVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn angle_from_raw(raw: f64) -> f64 {
    ANGLE_MARGIN + (std::f64::consts::PI - 2.0 * ANGLE_MARGIN) * sigmoid(raw)
}

fn raw_from_angle(theta: f64) -> Result<f64> {
    let span = std::f64::consts::PI - 2.0 * ANGLE_MARGIN;
    let u = (theta - ANGLE_MARGIN) / span;
    if !(0.0 < u && u < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation outside the parameterization range (angle {theta})"
        )));
    }
    Ok(logit(u))
}

/// Correlations from hyperspherical Cholesky angles. All raw inputs yield a
/// positive definite matrix; raw zeros yield the identity.
fn corr_from_raw(n_eq: usize, raw: &[f64]) -> CorrMatrix {
    match n_eq {
        1 => CorrMatrix::identity(1),
        2 => {
            let r = angle_from_raw(raw[0]).cos();
            CorrMatrix {
                n_eq: 2,
                values: vec![r],
            }
        }
        3 => {
            let t1 = angle_from_raw(raw[0]);
            let t2 = angle_from_raw(raw[1]);
            let t3 = angle_from_raw(raw[2]);
            let r12 = t1.cos();
            let r13 = t2.cos();
            let r23 = t1.cos() * t2.cos() + t1.sin() * t2.sin() * t3.cos();
            CorrMatrix {
                n_eq: 3,
                values: vec![r12, r13, r23],
            }
        }
        _ => unreachable!("model validation limits equations to 1-3"),
    }
}

fn raw_from_corr(corr: &CorrMatrix) -> Result<Vec<f64>> {
    corr.validate()?;
    match corr.n_eq {
        1 => Ok(vec![]),
        2 => Ok(vec![raw_from_angle(corr.values[0].acos())?]),
        3 => {
            let (r12, r13, r23) = (corr.values[0], corr.values[1], corr.values[2]);
            let t1 = r12.acos();
            let t2 = r13.acos();
            let denom = t1.sin() * t2.sin();
            let c3 = ((r23 - r12 * r13) / denom).clamp(-1.0, 1.0);
            let t3 = c3.acos();
            Ok(vec![
                raw_from_angle(t1)?,
                raw_from_angle(t2)?,
                raw_from_angle(t3)?,
            ])
        }
        _ => unreachable!(),
    }
}

/// Maps a valid [`ParameterSet`] to the unconstrained vector.
///
/// Inverse of [`from_unconstrained`] to better than 1e-12 per entry on the
/// representable region (threshold spacings above ~1e-14, |rho| below
/// ~0.99995).
pub fn to_unconstrained(p: &ParameterSet, spec: &ModelSpec) -> Result<UnconstrainedVector> {
    p.validate(spec)?;
    let mut v = Vec::with_capacity(spec.param_count());
    for b in &p.beta {
        v.extend_from_slice(b);
    }
    for (eq, mu) in spec.equations.iter().zip(&p.thresholds) {
        v.push(mu[0]);
        for j in 1..eq.n_thresholds() {
            let spacing = mu[j] - mu[j - 1] - spacing_floor(mu[j - 1]);
            if spacing <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "threshold spacing {} in equation {} is below the representable floor",
                    mu[j] - mu[j - 1],
                    eq.name
                )));
            }
            v.push(spacing.ln());
        }
    }
    v.extend(raw_from_corr(&p.corr)?);
    Ok(UnconstrainedVector(v))
}

/// Rebuilds a valid [`ParameterSet`] from any real vector of the right
/// length. Thresholds are strictly increasing and the correlation matrix is
/// positive definite for every input, including extreme raw values.
pub fn from_unconstrained(v: &UnconstrainedVector, spec: &ModelSpec) -> Result<ParameterSet> {
    spec.validate()?;
    if v.len() != spec.param_count() {
        return Err(Error::ShapeMismatch(format!(
            "unconstrained vector has length {}, spec implies {}",
            v.len(),
            spec.param_count()
        )));
    }
    let raw = v.as_slice();
    let mut pos = 0;
    let mut beta = Vec::with_capacity(spec.equations.len());
    for eq in &spec.equations {
        beta.push(raw[pos..pos + eq.covariates.len()].to_vec());
        pos += eq.covariates.len();
    }
    let mut thresholds = Vec::with_capacity(spec.equations.len());
    for eq in &spec.equations {
        let k = eq.n_thresholds();
        let mut mu = Vec::with_capacity(k);
        mu.push(raw[pos]);
        for j in 1..k {
            let prev = mu[j - 1];
            mu.push(prev + raw[pos + j].exp() + spacing_floor(prev));
        }
        pos += k;
        thresholds.push(mu);
    }
    let corr = corr_from_raw(spec.equations.len(), &raw[pos..]);
    Ok(ParameterSet {
        beta,
        thresholds,
        corr,
    })
}
