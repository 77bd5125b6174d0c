use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{check_sparsity, check_trials, draw_support, run_parallel, trial_seed, Cell, ExperimentConfig, ExperimentResult, Family, Placement};
use crate::certificates::{brc_omp, Evaluation};
use crate::error::{invalid, Result};

fn first_atoms() -> Placement {
    Placement::FirstAtoms
}

/// Rate at which BRC-OMP holds for `k = 2` over an `(m, n)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrcMapConfig {
    pub family: Family,
    pub m_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "first_atoms")]
    pub placement: Placement,
}

const K: usize = 2;

pub fn brc_map(c: &BrcMapConfig, workers: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    check_trials(c.trials)?;
    let cells: Vec<(usize, usize)> = c
        .m_grid
        .iter()
        .flat_map(|&m| c.n_grid.iter().map(move |&n| (m, n)))
        .filter(|&(m, n)| check_sparsity(m, n, K).is_ok() && c.placement.check(n, K).is_ok())
        .collect();
    if cells.is_empty() {
        return Err(invalid("no admissible (m, n) cell in the grid"));
    }
    let outcomes = run_parallel(cells.len() * c.trials, workers, |task| {
        let (m, n) = cells[task / c.trials];
        let seed = trial_seed(c.seed, task);
        let dict = c.family.draw(m, n, seed)?;
        let (support, _) = draw_support(&c.placement, n, K, seed)?;
        Ok(brc_omp(dict.matrix(), &support, Evaluation::Fast)?.aggregate)
    })?;
    let mut result = ExperimentResult::new(ExperimentConfig::BrcMap(c.clone()), &["m", "n", "rate", "mean_aggregate"]);
    for (&(m, n), chunk) in cells.iter().zip(outcomes.chunks(c.trials)) {
        let total = c.trials as f64;
        let rate = chunk.iter().filter(|&&a| a >= 1.0).count() as f64 / total;
        let mean = chunk.iter().sum::<f64>() / total;
        result.push(vec![Cell::from(m), Cell::from(n), Cell::from(rate), Cell::from(mean)]);
    }
    result.note("cells", cells.len());
    result.wall_clock = start.elapsed();
    Ok(result)
}
