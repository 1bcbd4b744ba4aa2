//! Distributional calibration of the simulator against the joint cell
//! probabilities: a chi-square goodness-of-fit over the 36 stage triples.

mod common;

use common::scenario_334;
use mvoprobit::estimate::chi_square_sf;
use mvoprobit::likelihood::{linear_predictor, JointProbEvaluator};
use mvoprobit::simulate::sample_dataset;

#[test]
fn joint_stage_triples_match_model_probabilities() {
    let (spec, params, gen) = scenario_334();
    let n = 10_000usize;
    let n_seeds = 20u64;
    let mut non_significant = 0usize;

    for seed in 0..n_seeds {
        let table = sample_dataset(&spec, &params, n, &gen, 40_000 + seed).unwrap();
        let evaluator = JointProbEvaluator::new(&params, &spec).unwrap();

        let y: Vec<&[f64]> = spec
            .outcome_columns
            .iter()
            .map(|c| table.column(c).unwrap())
            .collect();
        let x_cols: Vec<Vec<&[f64]>> = spec
            .equations
            .iter()
            .map(|eq| {
                eq.covariates
                    .iter()
                    .map(|c| table.column(c).unwrap())
                    .collect()
            })
            .collect();

        // Observed counts and expected counts (summing each row's joint cell
        // probabilities) over the 3 x 3 x 4 triples.
        let dims = [3usize, 3, 4];
        let cell = |j: usize, k: usize, l: usize| (j * dims[1] + k) * dims[2] + l;
        let mut observed = vec![0.0f64; 36];
        let mut expected = vec![0.0f64; 36];
        let mut xb = [0.0f64; 3];
        let mut xrow: Vec<f64> = Vec::new();
        for i in 0..n {
            for e in 0..3 {
                xrow.clear();
                xrow.extend(x_cols[e].iter().map(|col| col[i]));
                xb[e] = linear_predictor(&params.beta[e], &xrow).unwrap();
            }
            observed[cell(y[0][i] as usize, y[1][i] as usize, y[2][i] as usize)] += 1.0;
            for j in 0..dims[0] {
                for k in 0..dims[1] {
                    for l in 0..dims[2] {
                        expected[cell(j, k, l)] +=
                            evaluator.prob(&[j, k, l], &xb).unwrap();
                    }
                }
            }
        }

        let mut stat = 0.0;
        for (o, e) in observed.iter().zip(&expected) {
            if *e > 1e-9 {
                stat += (o - e) * (o - e) / e;
            }
        }
        let p = chi_square_sf(stat, 35);
        if p > 0.01 {
            non_significant += 1;
        }
    }
    assert!(
        non_significant >= 18,
        "goodness-of-fit non-significant at 1% in only {non_significant}/20 seeds"
    );
}
