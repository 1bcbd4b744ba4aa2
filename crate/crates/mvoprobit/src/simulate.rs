//! Synthetic data generation for parameter-recovery and calibration studies.
//!
//! The random stream is pinned for golden files: a xoshiro256++ generator
//! seeded through SplitMix64 (both defined by their reference constants, so
//! the u64 stream is bit-exact on every platform), uniform doubles taken as
//! the top 53 bits, and Gaussians via the trigonometric Box–Muller transform
//! evaluated with `libm` so the float path is identical across platforms.
//!
//! Draw order is part of the contract: for each row, covariate columns are
//! drawn in generator order (constants consume no draws, uniform and
//! Bernoulli one u64 each, a normal two), then one normal per equation for
//! the error vector. Each normal consumes exactly two u64 draws and the sine
//! companion of the Box–Muller pair is discarded.

use crate::error::Error;
use crate::likelihood::ObservationTable;
use crate::model::{ModelSpec, ParameterSet};
use crate::Result;
use serde::{Deserialize, Serialize};

/// SplitMix64 stream used to expand a u64 seed into the xoshiro state.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// xoshiro256++ with the reference update and output functions.
#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Xoshiro256PlusPlus { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; consumes exactly two u64 draws.
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(std::f64::consts::TAU * u2)
    }
}

/// Per-column covariate distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CovariateKind {
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    StdNormal,
    Bernoulli { p: f64 },
}

impl CovariateKind {
    fn validate(&self) -> Result<()> {
        match self {
            CovariateKind::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidParameter(
                        "constant covariate must be finite".into(),
                    ));
                }
            }
            CovariateKind::Uniform { low, high } => {
                if !(low < high) || !low.is_finite() || !high.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "uniform bounds must satisfy low < high, got [{low}, {high})"
                    )));
                }
            }
            CovariateKind::StdNormal => {}
            CovariateKind::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!(
                        "Bernoulli probability must lie in [0, 1], got {p}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut Xoshiro256PlusPlus) -> f64 {
        match self {
            CovariateKind::Constant { value } => *value,
            CovariateKind::Uniform { low, high } => low + (high - low) * rng.next_f64(),
            CovariateKind::StdNormal => rng.next_normal(),
            CovariateKind::Bernoulli { p } => {
                if rng.next_f64() < *p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Ordered list of covariate columns and their distributions. The order is
/// the draw order and therefore part of the golden-file contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateGenerator {
    pub columns: Vec<(String, CovariateKind)>,
}

impl CovariateGenerator {
    pub fn new(columns: Vec<(String, CovariateKind)>) -> Result<Self> {
        let g = CovariateGenerator { columns };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (name, kind)) in self.columns.iter().enumerate() {
            kind.validate()?;
            if self.columns[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate covariate column {name:?} in generator"
                )));
            }
        }
        Ok(())
    }

    /// Every covariate referenced by the spec must be generated.
    fn validate_for(&self, spec: &ModelSpec) -> Result<()> {
        self.validate()?;
        for eq in &spec.equations {
            for c in &eq.covariates {
                if !self.columns.iter().any(|(n, _)| n == c) {
                    return Err(Error::InvalidParameter(format!(
                        "generator does not produce covariate column {c:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Simulated table plus the latent utilities that produced it (one vector
/// per equation); the latents are handy for diagnostics and tests.
pub struct SimulatedData {
    pub table: ObservationTable,
    pub latents: Vec<Vec<f64>>,
}

/// Draws `n` observations from the model: covariates from `gen`, correlated
/// errors through the Cholesky factor of R, latents censored into stages by
/// the thresholds. Identical seeds produce identical tables.
pub fn sample_dataset(
    spec: &ModelSpec,
    params: &ParameterSet,
    n: usize,
    gen: &CovariateGenerator,
    seed: u64,
) -> Result<ObservationTable> {
    Ok(sample_dataset_detailed(spec, params, n, gen, seed)?.table)
}

pub fn sample_dataset_detailed(
    spec: &ModelSpec,
    params: &ParameterSet,
    n: usize,
    gen: &CovariateGenerator,
    seed: u64,
) -> Result<SimulatedData> {
    params.validate(spec)?;
    gen.validate_for(spec)?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "at least one observation is required".into(),
        ));
    }

    let n_eq = spec.n_equations();
    let chol = params.corr.cholesky()?;
    let mut rng = Xoshiro256PlusPlus::new(seed);

    let mut columns: Vec<(String, Vec<f64>)> = gen
        .columns
        .iter()
        .map(|(name, _)| (name.clone(), Vec::with_capacity(n)))
        .collect();
    let mut outcomes: Vec<Vec<f64>> = vec![Vec::with_capacity(n); n_eq];
    let mut latents: Vec<Vec<f64>> = vec![Vec::with_capacity(n); n_eq];

    // Index of each equation's covariates into the generator columns.
    let cov_idx: Vec<Vec<usize>> = spec
        .equations
        .iter()
        .map(|eq| {
            eq.covariates
                .iter()
                .map(|c| {
                    gen.columns
                        .iter()
                        .position(|(n, _)| n == c)
                        .expect("validated")
                })
                .collect()
        })
        .collect();

    let mut row = vec![0.0f64; gen.columns.len()];
    let mut z = vec![0.0f64; n_eq];
    for _ in 0..n {
        for (slot, (_, kind)) in row.iter_mut().zip(&gen.columns) {
            *slot = kind.draw(&mut rng);
        }
        for (c, (_, col)) in row.iter().zip(columns.iter_mut()) {
            col.push(*c);
        }
        for ze in z.iter_mut() {
            *ze = rng.next_normal();
        }
        for e in 0..n_eq {
            let eps: f64 = (0..=e).map(|k| chol[e][k] * z[k]).sum();
            let xb: f64 = cov_idx[e]
                .iter()
                .zip(&params.beta[e])
                .map(|(&ci, b)| row[ci] * b)
                .sum();
            let latent = xb + eps;
            let stage = params.thresholds[e].iter().filter(|&&m| latent > m).count();
            latents[e].push(latent);
            outcomes[e].push(stage as f64);
        }
    }

    for (e, outcome_col) in spec.outcome_columns.iter().enumerate() {
        columns.push((outcome_col.clone(), std::mem::take(&mut outcomes[e])));
    }
    Ok(SimulatedData {
        table: ObservationTable::new(columns)?,
        latents,
    })
}

/// Per-equation empirical stage shares.
pub fn empirical_stage_shares(table: &ObservationTable, spec: &ModelSpec) -> Result<Vec<Vec<f64>>> {
    table.validate_for(spec)?;
    let n = table.n_rows() as f64;
    let mut out = Vec::with_capacity(spec.n_equations());
    for (eq, outcome) in spec.equations.iter().zip(&spec.outcome_columns) {
        let col = table.column(outcome).expect("validated");
        let mut counts = vec![0usize; eq.n_stages];
        for &v in col {
            counts[v as usize] += 1;
        }
        out.push(counts.iter().map(|&c| c as f64 / n).collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::cell_prob_uni;
    use crate::model::{CorrMatrix, EquationSpec};

    #[test]
    fn splitmix_reference_vector() {
        // First outputs of SplitMix64 from seed 0, per the reference stream.
        let mut s = 0u64;
        assert_eq!(splitmix64(&mut s), 0xE220A8397B1DCDAF);
        assert_eq!(splitmix64(&mut s), 0x6E789E6AA1B965F4);
        assert_eq!(splitmix64(&mut s), 0x06C45D188009454F);
    }

    #[test]
    fn stream_is_frozen() {
        // Golden values pin the u64 stream; any change to seeding or the
        // update function breaks golden data files downstream.
        let mut rng = Xoshiro256PlusPlus::new(42);
        let first: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
        assert_eq!(
            first,
            vec![
                15021278609987233951,
                5881210131331364753,
                18149643915985481100,
                12933668939759105464
            ]
        );
        let mut rng = Xoshiro256PlusPlus::new(42);
        let u = rng.next_f64();
        assert!((0.0..1.0).contains(&u));
        let z = rng.next_normal();
        assert!(z.is_finite());
    }

    fn spec2() -> ModelSpec {
        ModelSpec {
            equations: vec![
                EquationSpec {
                    name: "a".into(),
                    n_stages: 3,
                    covariates: vec!["x".into()],
                },
                EquationSpec {
                    name: "b".into(),
                    n_stages: 2,
                    covariates: vec!["z".into()],
                },
            ],
            outcome_columns: vec!["ya".into(), "yb".into()],
        }
    }

    fn gen2() -> CovariateGenerator {
        CovariateGenerator::new(vec![
            ("x".into(), CovariateKind::StdNormal),
            ("z".into(), CovariateKind::Bernoulli { p: 0.4 }),
        ])
        .unwrap()
    }

    #[test]
    fn extreme_threshold_yields_constant_stage() {
        let spec = ModelSpec {
            equations: vec![EquationSpec {
                name: "a".into(),
                n_stages: 2,
                covariates: vec!["x".into()],
            }],
            outcome_columns: vec!["y".into()],
        };
        let params = ParameterSet {
            beta: vec![vec![0.5]],
            thresholds: vec![vec![20.0]],
            corr: CorrMatrix::identity(1),
        };
        let gen = CovariateGenerator::new(vec![("x".into(), CovariateKind::StdNormal)]).unwrap();
        let t = sample_dataset(&spec, &params, 2000, &gen, 7).unwrap();
        assert!(t.column("y").unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_seeds_reproduce_identical_tables() {
        let spec = spec2();
        let params = ParameterSet {
            beta: vec![vec![0.8], vec![-0.5]],
            thresholds: vec![vec![-0.5, 0.6], vec![0.2]],
            corr: CorrMatrix::new(2, vec![0.3]).unwrap(),
        };
        let a = sample_dataset(&spec, &params, 500, &gen2(), 99).unwrap();
        let b = sample_dataset(&spec, &params, 500, &gen2(), 99).unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&spec, &params, 500, &gen2(), 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn identity_correlation_latents_are_uncorrelated() {
        let spec = ModelSpec {
            equations: vec![
                EquationSpec {
                    name: "a".into(),
                    n_stages: 2,
                    covariates: vec![],
                },
                EquationSpec {
                    name: "b".into(),
                    n_stages: 2,
                    covariates: vec![],
                },
                EquationSpec {
                    name: "c".into(),
                    n_stages: 2,
                    covariates: vec![],
                },
            ],
            outcome_columns: vec!["ya".into(), "yb".into(), "yc".into()],
        };
        let params = ParameterSet {
            beta: vec![vec![], vec![], vec![]],
            thresholds: vec![vec![0.0], vec![0.0], vec![0.0]],
            corr: CorrMatrix::identity(3),
        };
        let gen = CovariateGenerator::new(vec![(
            "pad".into(),
            CovariateKind::Constant { value: 1.0 },
        )])
        .unwrap();
        let n = 100_000;
        let sim = sample_dataset_detailed(&spec, &params, n, &gen, 31).unwrap();
        for a in 0..3 {
            for b in (a + 1)..3 {
                let (xa, xb) = (&sim.latents[a], &sim.latents[b]);
                let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / n as f64;
                let (ma, mb) = (mean(xa), mean(xb));
                let cov: f64 = xa
                    .iter()
                    .zip(xb)
                    .map(|(p, q)| (p - ma) * (q - mb))
                    .sum::<f64>()
                    / n as f64;
                assert!(cov.abs() < 0.01, "latent covariance {cov} between {a},{b}");
            }
        }
    }

    #[test]
    fn stage_shares_sum_to_one_and_match_model() {
        let spec = spec2();
        let params = ParameterSet {
            beta: vec![vec![0.8], vec![-0.5]],
            thresholds: vec![vec![-0.5, 0.6], vec![0.2]],
            corr: CorrMatrix::new(2, vec![0.3]).unwrap(),
        };
        let n = 40_000;
        let t = sample_dataset(&spec, &params, n, &gen2(), 5).unwrap();
        let shares = empirical_stage_shares(&t, &spec).unwrap();
        for s in &shares {
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        // Model-implied marginal shares averaged over the simulated
        // covariates agree within a 3-sigma binomial band.
        for (e, eq) in spec.equations.iter().enumerate() {
            let xcol = t.column(&eq.covariates[0]).unwrap();
            for j in 0..eq.n_stages {
                let mut expect = 0.0;
                for &x in xcol {
                    let xb = params.beta[e][0] * x;
                    expect += cell_prob_uni(eq, &params.thresholds[e], j, xb).unwrap();
                }
                expect /= n as f64;
                let se = (expect * (1.0 - expect) / n as f64).sqrt();
                assert!(
                    (shares[e][j] - expect).abs() < 3.5 * se + 1e-9,
                    "eq {e} stage {j}: share {} vs model {expect} (se {se})",
                    shares[e][j]
                );
            }
        }
    }

    #[test]
    fn generator_must_cover_spec_columns() {
        let spec = spec2();
        let params = ParameterSet {
            beta: vec![vec![0.8], vec![-0.5]],
            thresholds: vec![vec![-0.5, 0.6], vec![0.2]],
            corr: CorrMatrix::new(2, vec![0.3]).unwrap(),
        };
        let gen = CovariateGenerator::new(vec![("x".into(), CovariateKind::StdNormal)]).unwrap();
        assert!(sample_dataset(&spec, &params, 10, &gen, 1).is_err());
        assert!(CovariateGenerator::new(vec![(
            "u".into(),
            CovariateKind::Uniform {
                low: 2.0,
                high: 1.0
            }
        )])
        .is_err());
        assert!(CovariateGenerator::new(vec![(
            "b".into(),
            CovariateKind::Bernoulli { p: 1.5 }
        )])
        .is_err());
    }
}
