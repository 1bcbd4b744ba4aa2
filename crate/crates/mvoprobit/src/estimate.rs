//! Maximum-likelihood estimation: BFGS ascent on the unconstrained
//! objective, observed-information standard errors, fit statistics, and the
//! likelihood-ratio test of the independence restriction.

use crate::error::Error;
use crate::likelihood::{Design, ObservationTable};
use crate::model::{
    from_unconstrained, to_unconstrained, CorrMatrix, ModelSpec, ParameterSet, UnconstrainedVector,
};
use crate::mvn::{phi, std_normal_inv_cdf};
use crate::par;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Optimizer options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Infinity-norm gradient tolerance on the unconstrained objective.
    pub grad_tolerance: f64,
    /// Relative log-likelihood change tolerance.
    pub rel_ll_tolerance: f64,
    /// Optional starting point (full unconstrained layout).
    pub start: Option<UnconstrainedVector>,
    /// Freeze the correlation matrix at the identity (the independent model).
    pub fix_correlations: bool,
    /// Compute the observed-information standard errors after convergence.
    pub compute_std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            grad_tolerance: 1e-5,
            rel_ll_tolerance: 1e-9,
            start: None,
            fix_correlations: false,
            compute_std_errors: true,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grad_tolerance <= 0.0 || self.rel_ll_tolerance <= 0.0 {
            return Err(Error::InvalidParameter(
                "fit tolerances must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a fit reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub params: ParameterSet,
    pub ll: f64,
    pub ll_null: f64,
    pub rho2: f64,
    pub aic: f64,
    pub bic: f64,
    /// Number of estimated parameters (excludes frozen correlations).
    pub k: usize,
    pub n: usize,
    /// Flat labels aligned with `estimates` and the error vectors.
    pub parameter_names: Vec<String>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<Option<f64>>,
    pub z_values: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub grad_inf_norm: f64,
    pub correlations_fixed: bool,
    pub singular_information: bool,
    /// Log-likelihood at each accepted iterate, starting point included;
    /// nondecreasing by the line-search construction.
    pub ll_trace: Vec<f64>,
}

/// Fit statistics derived from a log-likelihood pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub rho2: f64,
    pub aic: f64,
    pub bic: f64,
}

/// rho2 = 1 - ll/ll0, AIC = 2k - 2 ll, BIC = k ln(n) - 2 ll.
pub fn fit_stats(ll: f64, ll_null: f64, k: usize, n: usize) -> Result<FitStats> {
    if !(ll <= 0.0) || !ll.is_finite() {
        return Err(Error::InvalidLikelihood(format!(
            "log-likelihood must be finite and non-positive, got {ll}"
        )));
    }
    if !(ll_null < 0.0) || !ll_null.is_finite() {
        return Err(Error::InvalidLikelihood(format!(
            "null log-likelihood must be finite and negative, got {ll_null}"
        )));
    }
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("need n > 0 and k >= 1".into()));
    }
    Ok(FitStats {
        rho2: 1.0 - ll / ll_null,
        aic: 2.0 * k as f64 - 2.0 * ll,
        bic: k as f64 * (n as f64).ln() - 2.0 * ll,
    })
}

/// Log-likelihood of the thresholds-only model with independent errors.
///
/// With all coefficients fixed at zero and the error correlation at the
/// identity, the per-equation maximum sets each stage probability to its
/// empirical share, so the maximized value is sum over equations and stages
/// of n_ej * ln(n_ej / n); empty stages contribute zero.
pub fn null_loglik(spec: &ModelSpec, data: &ObservationTable) -> Result<f64> {
    let design = Design::new(spec, data)?;
    check_outcome_variation(&design)?;
    let n = design.n() as f64;
    let mut ll = 0.0;
    for e in 0..spec.n_equations() {
        for &c in design.stage_counts(e).iter() {
            if c > 0 {
                let share = c as f64 / n;
                ll += c as f64 * share.ln();
            }
        }
    }
    Ok(ll)
}

fn check_outcome_variation(design: &Design) -> Result<()> {
    for (e, eq) in design.spec().equations.iter().enumerate() {
        let nonzero = design.stage_counts(e).iter().filter(|&&c| c > 0).count();
        if nonzero < 2 {
            return Err(Error::DegenerateOutcome(eq.name.clone()));
        }
    }
    Ok(())
}

/// Starting thresholds: inverse normal CDF of cumulative empirical shares,
/// nudged apart when a stage is empty.
fn start_thresholds(counts: &[usize], n: usize) -> Vec<f64> {
    let mut mu = Vec::with_capacity(counts.len() - 1);
    let mut cum = 0usize;
    for &c in &counts[..counts.len() - 1] {
        cum += c;
        let p = (cum as f64 / n as f64).clamp(0.5 / n as f64, 1.0 - 0.5 / n as f64);
        let mut t = std_normal_inv_cdf(p).expect("probability clamped into (0,1)");
        if let Some(&prev) = mu.last() {
            if t <= prev + 1e-6 {
                t = prev + 1e-6;
            }
        }
        mu.push(t);
    }
    mu
}

/// Maps the optimizer's sub-vector to the full unconstrained layout.
#[derive(Debug, Clone)]
struct Layout {
    full_len: usize,
    /// Number of leading entries actually optimized.
    free_len: usize,
    fix_correlations: bool,
    n_eq: usize,
}

impl Layout {
    fn new(spec: &ModelSpec, fix_correlations: bool) -> Self {
        let full_len = spec.param_count();
        let free_len = if fix_correlations {
            full_len - spec.n_correlations()
        } else {
            full_len
        };
        Layout {
            full_len,
            free_len,
            fix_correlations,
            n_eq: spec.n_equations(),
        }
    }

    fn params(&self, spec: &ModelSpec, sub: &[f64]) -> ParameterSet {
        let mut full = vec![0.0; self.full_len];
        full[..self.free_len].copy_from_slice(sub);
        let mut p = from_unconstrained(&UnconstrainedVector(full), spec)
            .expect("vector length matches the spec by construction");
        if self.fix_correlations {
            p.corr = CorrMatrix::identity(self.n_eq);
        }
        p
    }
}

struct Objective<'a> {
    design: &'a Design,
    layout: Layout,
}

impl Objective<'_> {
    /// Negative log-likelihood of the sub-vector.
    fn value(&self, sub: &[f64]) -> f64 {
        let p = self.layout.params(self.design.spec(), sub);
        -self.design.loglik_unchecked(&p)
    }

    /// Central-difference gradient, evaluated in parallel across coordinates.
    fn gradient(&self, sub: &[f64]) -> Vec<f64> {
        let step = f64::EPSILON.cbrt();
        let k = sub.len();
        let mut evals = vec![0.0f64; 2 * k];
        par::fill_indexed(&mut evals, |idx| {
            let coord = idx / 2;
            let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
            let h = step * sub[coord].abs().max(1.0);
            let mut vv = sub.to_vec();
            vv[coord] += sign * h;
            self.value(&vv)
        });
        (0..k)
            .map(|i| {
                let h = step * sub[i].abs().max(1.0);
                (evals[2 * i] - evals[2 * i + 1]) / (2.0 * h)
            })
            .collect()
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Full-information maximum likelihood fit.
pub fn fit(spec: &ModelSpec, data: &ObservationTable, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    let design = Design::new(spec, data)?;
    check_outcome_variation(&design)?;

    let layout = Layout::new(spec, opts.fix_correlations);
    let objective = Objective {
        design: &design,
        layout: layout.clone(),
    };

    // Starting point: zero coefficients, share-based thresholds, identity
    // correlations; the null model is nested in the start.
    let start_full = match &opts.start {
        Some(v) => {
            if v.len() != spec.param_count() {
                return Err(Error::ShapeMismatch(format!(
                    "start vector has length {}, spec implies {}",
                    v.len(),
                    spec.param_count()
                )));
            }
            v.0.clone()
        }
        None => {
            let mut p = ParameterSet {
                beta: spec
                    .equations
                    .iter()
                    .map(|e| vec![0.0; e.covariates.len()])
                    .collect(),
                thresholds: Vec::new(),
                corr: CorrMatrix::identity(spec.n_equations()),
            };
            for e in 0..spec.n_equations() {
                p.thresholds
                    .push(start_thresholds(&design.stage_counts(e), design.n()));
            }
            to_unconstrained(&p, spec)?.0
        }
    };
    let mut v = start_full[..layout.free_len].to_vec();

    let mut f = objective.value(&v);
    if !f.is_finite() {
        return Err(Error::BadStart);
    }
    let mut g = objective.gradient(&v);

    let k_free = layout.free_len;
    // Inverse Hessian approximation, row-major k x k.
    let mut h_inv = identity_matrix(k_free);
    let mut scaled_once = false;

    let mut converged = false;
    let mut iterations = 0usize;
    let mut ll_trace = vec![-f];

    for iter in 1..=opts.max_iterations {
        iterations = iter;
        if inf_norm(&g) < opts.grad_tolerance {
            converged = true;
            break;
        }

        // Search direction d = -H g, reset to steepest descent if H has
        // drifted off being a descent producer.
        let mut d = mat_vec_neg(&h_inv, &g);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            h_inv = identity_matrix(k_free);
            scaled_once = false;
            d = g.iter().map(|x| -x).collect();
            slope = -g.iter().map(|x| x * x).sum::<f64>();
        }

        // Backtracking Armijo line search; never accepts an increase of the
        // objective, i.e. never a decrease of the log-likelihood.
        const C1: f64 = 1e-4;
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = v.iter().zip(&d).map(|(x, di)| x + alpha * di).collect();
            let ft = objective.value(&trial);
            if ft.is_finite() && ft <= f + C1 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((v_new, f_new)) = accepted else {
            // Step collapsed; gradient noise dominates. Stop here.
            break;
        };

        let g_new = objective.gradient(&v_new);
        let rel_change = (f_new - f).abs() / f_new.abs().max(1.0);

        // BFGS inverse update with curvature safeguard.
        let s: Vec<f64> = v_new.iter().zip(&v).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let yy = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if sy > 1e-10 * ss * yy {
            if !scaled_once {
                let scale = sy / y.iter().map(|x| x * x).sum::<f64>();
                for (i, row) in h_inv.chunks_mut(k_free).enumerate() {
                    for (j, hij) in row.iter_mut().enumerate() {
                        *hij = if i == j { scale } else { 0.0 };
                    }
                }
                scaled_once = true;
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }

        v = v_new;
        f = f_new;
        g = g_new;
        ll_trace.push(-f);

        if rel_change < opts.rel_ll_tolerance {
            converged = true;
            break;
        }
    }

    let params = layout.params(spec, &v);
    let ll = -f;
    let ll_null = null_loglik(spec, data)?;
    let k = layout.free_len;
    let n = design.n();
    let stats = fit_stats(ll, ll_null, k, n)?;

    let names = spec.parameter_names();
    let estimates = params.flatten();
    let (std_errors, z_values, p_values, singular) = if opts.compute_std_errors {
        std_errors_internal(&design, &layout, &v, &estimates)
    } else {
        let m = estimates.len();
        (vec![None; m], vec![None; m], vec![None; m], false)
    };

    Ok(FitResult {
        spec: spec.clone(),
        params,
        ll,
        ll_null,
        rho2: stats.rho2,
        aic: stats.aic,
        bic: stats.bic,
        k,
        n,
        parameter_names: names,
        estimates,
        std_errors,
        z_values,
        p_values,
        converged,
        iterations,
        grad_inf_norm: inf_norm(&g),
        correlations_fixed: opts.fix_correlations,
        singular_information: singular,
        ll_trace,
    })
}

fn identity_matrix(k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        m[i * k + i] = 1.0;
    }
    m
}

fn mat_vec_neg(m: &[f64], v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let mut out = vec![0.0; k];
    for i in 0..k {
        let row = &m[i * k..(i + 1) * k];
        out[i] = -row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
    out
}

/// H <- (I - rho s y') H (I - rho y s') + rho s s' with rho = 1/sy.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let k = s.len();
    let rho = 1.0 / sy;
    let mut hy = vec![0.0; k];
    for i in 0..k {
        hy[i] = h[i * k..(i + 1) * k]
            .iter()
            .zip(y)
            .map(|(a, b)| a * b)
            .sum();
    }
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    let c = rho * rho * yhy + rho;
    for i in 0..k {
        for j in 0..k {
            h[i * k + j] += c * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Standard errors from the observed information via the delta method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StdErrorReport {
    pub std_errors: Vec<Option<f64>>,
    pub z_values: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub singular_information: bool,
}

/// Standard errors of a (converged) parameter set on the given data: invert
/// the negative numerical Hessian of the unconstrained log-likelihood and
/// push the covariance through the Jacobian of the constrained
/// reparameterization.
pub fn std_errors(
    params: &ParameterSet,
    data: &ObservationTable,
    spec: &ModelSpec,
) -> Result<StdErrorReport> {
    let design = Design::new(spec, data)?;
    let v = to_unconstrained(params, spec)?;
    let layout = Layout::new(spec, false);
    let estimates = params.flatten();
    let (std_errors, z_values, p_values, singular) =
        std_errors_internal(&design, &layout, &v.0, &estimates);
    Ok(StdErrorReport {
        std_errors,
        z_values,
        p_values,
        singular_information: singular,
    })
}

type SeVectors = (
    Vec<Option<f64>>,
    Vec<Option<f64>>,
    Vec<Option<f64>>,
    bool,
);

fn std_errors_internal(
    design: &Design,
    layout: &Layout,
    v_sub: &[f64],
    estimates: &[f64],
) -> SeVectors {
    let m = estimates.len();
    let none = (vec![None; m], vec![None; m], vec![None; m], true);

    let objective = Objective {
        design,
        layout: layout.clone(),
    };
    let k = v_sub.len();
    let hess = numerical_hessian(&objective, v_sub);
    // Observed information = Hessian of the negative log-likelihood.
    let Some(cov_u) = cholesky_inverse(&hess, k) else {
        return none;
    };

    // Jacobian of the constrained vector w.r.t. the free unconstrained
    // coordinates (central differences).
    let jac_step = f64::EPSILON.cbrt();
    let spec = design.spec();
    let mut jac = vec![0.0; m * k];
    for c in 0..k {
        let h = jac_step * v_sub[c].abs().max(1.0);
        let mut plus = v_sub.to_vec();
        plus[c] += h;
        let mut minus = v_sub.to_vec();
        minus[c] -= h;
        let tp = layout.params(spec, &plus).flatten();
        let tm = layout.params(spec, &minus).flatten();
        for r in 0..m {
            jac[r * k + c] = (tp[r] - tm[r]) / (2.0 * h);
        }
    }

    // diag(J Cov J') entry by entry.
    let mut ses = vec![None; m];
    let mut zs = vec![None; m];
    let mut ps = vec![None; m];
    let mut any_bad = false;
    for r in 0..m {
        let jr = &jac[r * k..(r + 1) * k];
        let mut var = 0.0;
        for a in 0..k {
            let mut acc = 0.0;
            for b in 0..k {
                acc += cov_u[a * k + b] * jr[b];
            }
            var += jr[a] * acc;
        }
        // Frozen coordinates have an identically zero Jacobian row; report
        // no uncertainty for them rather than SE = 0.
        let frozen = jr.iter().all(|&x| x == 0.0);
        if frozen || !var.is_finite() || var < 0.0 {
            if !frozen {
                any_bad = true;
            }
            continue;
        }
        let se = var.sqrt();
        if se > 0.0 {
            let z = estimates[r] / se;
            ses[r] = Some(se);
            zs[r] = Some(z);
            ps[r] = Some((2.0 * phi(-z.abs())).min(1.0));
        }
    }
    (ses, zs, ps, any_bad)
}

/// Dense symmetric Hessian of the objective by central second differences.
fn numerical_hessian(objective: &Objective<'_>, v: &[f64]) -> Vec<f64> {
    let k = v.len();
    let step = f64::EPSILON.powf(0.25);
    let h: Vec<f64> = v.iter().map(|x| step * x.abs().max(1.0)).collect();

    #[derive(Clone, Copy)]
    enum Point {
        Base,
        Axis(usize, f64),
        Pair(usize, usize, f64, f64),
    }
    let mut points = vec![Point::Base];
    for i in 0..k {
        points.push(Point::Axis(i, 1.0));
        points.push(Point::Axis(i, -1.0));
    }
    for i in 0..k {
        for j in (i + 1)..k {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                points.push(Point::Pair(i, j, si, sj));
            }
        }
    }
    let mut values = vec![0.0f64; points.len()];
    par::fill_indexed(&mut values, |idx| {
        let mut vv = v.to_vec();
        match points[idx] {
            Point::Base => {}
            Point::Axis(i, s) => vv[i] += s * h[i],
            Point::Pair(i, j, si, sj) => {
                vv[i] += si * h[i];
                vv[j] += sj * h[j];
            }
        }
        objective.value(&vv)
    });

    let f0 = values[0];
    let mut hess = vec![0.0; k * k];
    for i in 0..k {
        let fp = values[1 + 2 * i];
        let fm = values[2 + 2 * i];
        hess[i * k + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    let mut pos = 1 + 2 * k;
    for i in 0..k {
        for j in (i + 1)..k {
            let (fpp, fpm, fmp, fmm) =
                (values[pos], values[pos + 1], values[pos + 2], values[pos + 3]);
            pos += 4;
            let hij = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i * k + j] = hij;
            hess[j * k + i] = hij;
        }
    }
    hess
}

/// Inverse of a symmetric positive definite matrix via Cholesky; None when
/// the factorization breaks down or a pivot falls below 1e-7 of the largest
/// diagonal (numerically singular information, e.g. collinear covariates).
fn cholesky_inverse(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let max_diag = (0..k).map(|i| a[i * k + i]).fold(0.0f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return None;
    }
    let pivot_floor = 1e-7 * max_diag;
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i * k + j];
            for p in 0..j {
                sum -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if sum <= pivot_floor || !sum.is_finite() {
                    return None;
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    // Solve L L' X = I column by column.
    let mut inv = vec![0.0; k * k];
    let mut col = vec![0.0; k];
    for c in 0..k {
        for i in 0..k {
            let mut sum = if i == c { 1.0 } else { 0.0 };
            for p in 0..i {
                sum -= l[i * k + p] * col[p];
            }
            col[i] = sum / l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut sum = col[i];
            for p in (i + 1)..k {
                sum -= l[p * k + i] * inv[p * k + c];
            }
            inv[i * k + c] = sum / l[i * k + i];
        }
    }
    Some(inv)
}

/// Survival function of the chi-square distribution with integer df,
/// computed by the exact closed-form recurrence.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    assert!(df >= 1, "df must be at least 1");
    if x <= 0.0 {
        return 1.0;
    }
    let half = x / 2.0;
    let (mut q, mut term, mut kk) = if df % 2 == 1 {
        (
            libm::erfc(half.sqrt()),
            (2.0 * x / std::f64::consts::PI).sqrt() * (-half).exp(),
            1usize,
        )
    } else {
        ((-half).exp(), half * (-half).exp(), 2usize)
    };
    while kk + 2 <= df {
        q += term;
        kk += 2;
        term *= half / (kk as f64 / 2.0);
    }
    q.clamp(0.0, 1.0)
}

/// Likelihood-ratio test of the joint model against the independent
/// (identity-correlation) restriction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LrTest {
    pub stat: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn lr_test_independence(fit_joint: &FitResult, fit_indep: &FitResult) -> Result<LrTest> {
    if fit_joint.spec != fit_indep.spec {
        return Err(Error::ShapeMismatch(
            "joint and independent fits use different model specifications".into(),
        ));
    }
    if fit_joint.n != fit_indep.n {
        return Err(Error::ShapeMismatch(
            "joint and independent fits use different data sizes".into(),
        ));
    }
    if !fit_indep.correlations_fixed || !fit_indep.params.corr.is_identity() {
        return Err(Error::InvalidParameter(
            "the restricted fit must hold correlations at the identity".into(),
        ));
    }
    let df = fit_joint.spec.n_correlations();
    if df == 0 {
        return Err(Error::InvalidSpec(
            "a single-equation model has no correlation restriction to test".into(),
        ));
    }
    let stat = 2.0 * (fit_joint.ll - fit_indep.ll);
    if stat < -1e-6 {
        return Err(Error::InvalidLikelihood(format!(
            "joint log-likelihood below the nested independent fit by {stat}"
        )));
    }
    let stat = stat.max(0.0);
    Ok(LrTest {
        stat,
        df,
        p_value: chi_square_sf(stat, df),
    })
}

impl FitResult {
    /// Aligned plain-text summary table.
    pub fn summary(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "Multivariate ordered probit fit");
        let _ = writeln!(out, "===============================");
        let _ = writeln!(
            out,
            "n = {}   k = {}   converged = {} ({} iterations, |grad| = {:.3e})",
            self.n, self.k, self.converged, self.iterations, self.grad_inf_norm
        );
        let _ = writeln!(
            out,
            "log-likelihood = {:.4}   null (thresholds-only) = {:.4}",
            self.ll, self.ll_null
        );
        let _ = writeln!(
            out,
            "rho2 = {:.4}   AIC = {:.4}   BIC = {:.4}",
            self.rho2, self.aic, self.bic
        );
        if self.correlations_fixed {
            let _ = writeln!(out, "correlations fixed at the identity");
        }
        if self.singular_information {
            let _ = writeln!(
                out,
                "warning: observed information is singular; some standard errors are absent"
            );
        }

        let fmt_opt = |v: Option<f64>, prec: usize| -> String {
            match v {
                Some(x) => format!("{x:>10.prec$}"),
                None => format!("{:>10}", "-"),
            }
        };

        // Row indices follow the flatten order: coefficients, thresholds,
        // correlations.
        let mut beta_rows: Vec<Vec<(usize, String)>> = Vec::new();
        let mut idx = 0usize;
        for eq in &self.spec.equations {
            let mut rr = Vec::new();
            for c in &eq.covariates {
                rr.push((idx, c.clone()));
                idx += 1;
            }
            beta_rows.push(rr);
        }
        let mut mu_rows: Vec<Vec<(usize, String)>> = Vec::new();
        for eq in &self.spec.equations {
            let mut rr = Vec::new();
            for j in 1..eq.n_stages {
                rr.push((idx, format!("mu_{j}")));
                idx += 1;
            }
            mu_rows.push(rr);
        }
        let corr_start = idx;

        for (e, eq) in self.spec.equations.iter().enumerate() {
            let _ = writeln!(out, "\nEquation: {} ({} stages)", eq.name, eq.n_stages);
            let _ = writeln!(
                out,
                "  {:<24} {:>10} {:>10} {:>10} {:>10}",
                "term", "coef", "std.err", "z", "p"
            );
            for (i, name) in beta_rows[e].iter().chain(mu_rows[e].iter()) {
                let _ = writeln!(
                    out,
                    "  {:<24} {:>10.4} {} {} {}",
                    name,
                    self.estimates[*i],
                    fmt_opt(self.std_errors[*i], 4),
                    fmt_opt(self.z_values[*i], 3),
                    fmt_opt(self.p_values[*i], 3)
                );
            }
        }
        if self.spec.n_correlations() > 0 {
            let _ = writeln!(out, "\nCorrelations");
            let mut i = corr_start;
            for a in 0..self.spec.equations.len() {
                for b in (a + 1)..self.spec.equations.len() {
                    let _ = writeln!(
                        out,
                        "  {:<24} {:>10.4} {} {} {}",
                        format!(
                            "rho({},{})",
                            self.spec.equations[a].name, self.spec.equations[b].name
                        ),
                        self.estimates[i],
                        fmt_opt(self.std_errors[i], 4),
                        fmt_opt(self.z_values[i], 3),
                        fmt_opt(self.p_values[i], 3)
                    );
                    i += 1;
                }
            }
        }
        out
    }
}
