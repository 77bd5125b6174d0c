use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_trials, run_parallel, trial_seed, Cell, ExperimentConfig, ExperimentResult};
use crate::certificates::{Evaluation, SupportAnalysis};
use crate::dictionaries::Dictionary;
use crate::error::{invalid, Result};
use crate::greedy::{Algorithm, SupportSet};
use crate::linalg::ProjectionState;

/// Gaussian `m × (k+1)` dictionaries, true support `0..k`, single wrong atom
/// `k`, selection `{0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
}

struct Triple {
    erc: f64,
    omp: f64,
    ols: f64,
}

fn trial(c: &ScatterConfig, seed: u64) -> Result<Triple> {
    let d = Dictionary::gaussian(c.m, c.n, seed)?;
    let a = d.matrix();
    let support = SupportSet::new((0..c.k).collect(), c.n)?;
    let analysis = SupportAnalysis::new(a, &support)?;
    let erc = analysis.erc_factors()[0].1;
    let state = ProjectionState::with_active(a, &[0])?;
    let omp = analysis.factors(&state, Algorithm::Omp, Evaluation::Checked)?[0].1;
    let ols = analysis.factors(&state, Algorithm::Ols, Evaluation::Checked)?[0].1;
    Ok(Triple { erc, omp, ols })
}

/// Per trial: `(F, F^OMP, F^OLS)` for the wrong atom after the first true atom.
pub fn scatter_experiment(c: &ScatterConfig, workers: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_trials(c.trials)?;
    if c.n != c.k + 1 || c.k < 2 || c.k >= c.m {
        return Err(invalid("scatter needs n = k + 1 and 2 <= k < m"));
    }
    let triples = run_parallel(c.trials, workers, |t| trial(c, trial_seed(c.seed, t)))?;
    let mut result = ExperimentResult::new(
        ExperimentConfig::Scatter(c.clone()),
        &["trial", "seed", "f_erc", "f_omp", "f_ols"],
    );
    let (mut above, mut omp_only, mut ols_only, mut omp_viol, mut ols_viol) = (0, 0, 0, 0, 0);
    for (t, p) in triples.iter().enumerate() {
        let slack = 1e-12 * p.erc.max(1.0);
        if p.erc >= 1.0 {
            above += 1;
            if p.omp < 1.0 && p.ols >= 1.0 {
                omp_only += 1;
            }
            if p.ols < 1.0 && p.omp >= 1.0 {
                ols_only += 1;
            }
        } else if p.ols > p.erc + slack {
            ols_viol += 1;
        }
        if p.omp > p.erc + slack {
            omp_viol += 1;
        }
        result.push(vec![
            Cell::from(t),
            Cell::Int(trial_seed(c.seed, t) as i64),
            Cell::from(p.erc),
            Cell::from(p.omp),
            Cell::from(p.ols),
        ]);
    }
    result.note("erc_at_least_one", above);
    result.note("omp_below_one_ols_not", omp_only);
    result.note("ols_below_one_omp_not", ols_only);
    result.note("omp_above_erc", omp_viol);
    result.note("ols_above_erc_below_one", ols_viol);
    result.wall_clock = start.elapsed();
    Ok(result)
}
