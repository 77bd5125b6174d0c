use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    check_sparsity, check_trials, draw_support, run_parallel, trial_seed, Cell, ExperimentConfig, ExperimentResult,
    Family, Placement,
};
use crate::certificates::{Evaluation, SupportAnalysis};
use crate::error::{invalid, Result};
use crate::greedy::{Algorithm, SupportSet};
use crate::linalg::{Matrix, ProjectionState};

fn random_placement() -> Placement {
    Placement::Random
}

/// Rate at which the iteration-aware condition holds, as a function of the
/// number of true atoms already selected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseCurveConfig {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "random_placement")]
    pub placement: Placement,
}

/// Smallest `q` at which the condition first holds, averaged over trials, on a
/// grid of `(n, k)` for fixed `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub family: Family,
    pub m: usize,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "random_placement")]
    pub placement: Placement,
}

/// Walks a random growth order through the true support; calls `visit(q, omp,
/// ols)` with whether each condition holds after `q` true atoms, until `visit`
/// returns false.
fn walk(
    a: &Matrix,
    support: &[usize],
    order: &[usize],
    mut visit: impl FnMut(usize, bool, bool) -> bool,
) -> Result<()> {
    let analysis = SupportAnalysis::new(a, &SupportSet::new(support.to_vec(), a.ncols())?)?;
    let mut state = ProjectionState::new(a)?;
    for q in 0..support.len() {
        if q > 0 {
            state = state.extend(order[q - 1])?;
        }
        let omp = analysis.max_factor(&state, Algorithm::Omp, Evaluation::Fast)? < 1.0;
        let ols = analysis.max_factor(&state, Algorithm::Ols, Evaluation::Fast)? < 1.0;
        if !visit(q, omp, ols) {
            break;
        }
    }
    Ok(())
}

fn curve_trial(c: &PhaseCurveConfig, seed: u64) -> Result<Vec<(bool, bool)>> {
    let dict = c.family.draw(c.m, c.n, seed)?;
    let (support, order) = draw_support(&c.placement, c.n, c.k, seed)?;
    let mut out = Vec::with_capacity(c.k);
    walk(dict.matrix(), &support, &order, |_, omp, ols| {
        out.push((omp, ols));
        true
    })?;
    Ok(out)
}

fn first_crossing(q: &[f64], rates: &[f64]) -> Value {
    q.iter()
        .zip(rates)
        .find(|&(_, &r)| r >= 0.5)
        .map_or(Value::Null, |(&q, _)| json!(q as usize))
}

pub fn phase_curve(c: &PhaseCurveConfig, workers: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_trials(c.trials)?;
    check_sparsity(c.m, c.n, c.k)?;
    c.placement.check(c.n, c.k)?;
    let trials = run_parallel(c.trials, workers, |t| curve_trial(c, trial_seed(c.seed, t)))?;
    let mut counts = vec![(0usize, 0usize); c.k];
    for trial in &trials {
        for (q, &(omp, ols)) in trial.iter().enumerate() {
            counts[q].0 += omp as usize;
            counts[q].1 += ols as usize;
        }
    }
    let mut result = ExperimentResult::new(ExperimentConfig::PhaseCurve(c.clone()), &["q", "rate_omp", "rate_ols"]);
    let total = c.trials as f64;
    for (q, &(omp, ols)) in counts.iter().enumerate() {
        result.push(vec![Cell::from(q), Cell::from(omp as f64 / total), Cell::from(ols as f64 / total)]);
    }
    let q = result.column("q").unwrap();
    let omp = result.column("rate_omp").unwrap();
    let ols = result.column("rate_ols").unwrap();
    result.note("crossing_omp", first_crossing(&q, &omp));
    result.note("crossing_ols", first_crossing(&q, &ols));
    let gap = omp.iter().zip(&ols).map(|(a, b)| b - a).fold(f64::NEG_INFINITY, f64::max);
    result.note("max_rate_gap", gap);
    result.wall_clock = start.elapsed();
    Ok(result)
}

/// `(q^OMP, q^OLS)` for one trial, `k` when the condition never holds.
fn first_q(a: &Matrix, support: &[usize], order: &[usize]) -> Result<(usize, usize)> {
    let k = support.len();
    let (mut q_omp, mut q_ols) = (k, k);
    walk(a, support, order, |q, omp, ols| {
        if omp && q_omp == k {
            q_omp = q;
        }
        if ols && q_ols == k {
            q_ols = q;
        }
        q_omp == k || q_ols == k
    })?;
    Ok((q_omp, q_ols))
}

pub fn phase_diagram(c: &PhaseDiagramConfig, workers: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_trials(c.trials)?;
    let cells: Vec<(usize, usize)> = c
        .n_grid
        .iter()
        .flat_map(|&n| c.k_grid.iter().map(move |&k| (n, k)))
        .filter(|&(n, k)| check_sparsity(c.m, n, k).is_ok() && c.placement.check(n, k).is_ok())
        .collect();
    if cells.is_empty() {
        return Err(invalid("no admissible (n, k) cell in the grid"));
    }
    let outcomes = run_parallel(cells.len() * c.trials, workers, |task| {
        let (n, k) = cells[task / c.trials];
        let seed = trial_seed(c.seed, task);
        let dict = c.family.draw(c.m, n, seed)?;
        let (support, order) = draw_support(&c.placement, n, k, seed)?;
        first_q(dict.matrix(), &support, &order)
    })?;
    let mut result = ExperimentResult::new(
        ExperimentConfig::PhaseDiagram(c.clone()),
        &["n", "k", "mean_q_omp", "mean_q_ols", "ratio_omp", "ratio_ols"],
    );
    for (cell, chunk) in cells.iter().zip(outcomes.chunks(c.trials)) {
        let (n, k) = *cell;
        let total = c.trials as f64;
        let mean_omp = chunk.iter().map(|o| o.0 as f64).sum::<f64>() / total;
        let mean_ols = chunk.iter().map(|o| o.1 as f64).sum::<f64>() / total;
        result.push(vec![
            Cell::from(n),
            Cell::from(k),
            Cell::from(mean_omp),
            Cell::from(mean_ols),
            Cell::from(mean_omp / k as f64),
            Cell::from(mean_ols / k as f64),
        ]);
    }
    result.note("cells", cells.len());
    result.wall_clock = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionaries::Dictionary;

    #[test]
    fn first_q_matches_direct_scan() {
        let d = Dictionary::gaussian(20, 40, 5).unwrap();
        let a = d.matrix();
        let (support, order) = draw_support(&Placement::Random, 40, 6, 5).unwrap();
        let (q_omp, q_ols) = first_q(a, &support, &order).unwrap();
        let analysis = SupportAnalysis::new(a, &SupportSet::new(support.clone(), 40).unwrap()).unwrap();
        let direct = |alg| {
            (0..6)
                .find(|&q| {
                    let s = ProjectionState::with_active(a, &order[..q]).unwrap();
                    analysis.max_factor(&s, alg, Evaluation::Checked).unwrap() < 1.0
                })
                .unwrap_or(6)
        };
        assert_eq!(q_omp, direct(Algorithm::Omp));
        assert_eq!(q_ols, direct(Algorithm::Ols));
    }
}
