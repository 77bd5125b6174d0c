use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{run_parallel, Cell, ExperimentConfig, ExperimentResult, Placement};
use crate::certificates::{brc_omp, Evaluation, SupportAnalysis};
use crate::dictionaries::Dictionary;
use crate::error::{invalid, Result};
use crate::greedy::{Algorithm, SupportSet};
use crate::linalg::ProjectionState;

fn first_atoms() -> Placement {
    Placement::FirstAtoms
}

fn one_step() -> usize {
    1
}

/// Largest factor along the chain `Q_0 ⊂ Q_1 ⊂ ...` that adds true atoms in
/// index order, for a Gaussian convolution dictionary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FVsQConfig {
    pub n: usize,
    pub sigma: f64,
    #[serde(default = "one_step")]
    pub downsample: usize,
    pub k: usize,
    #[serde(default = "first_atoms")]
    pub placement: Placement,
}

/// BRC-OMP aggregate for `Q* = {0, Δ}` over a grid of pulse widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrcSigmaConfig {
    pub n: usize,
    pub sigmas: Vec<f64>,
    #[serde(default = "default_spacings")]
    pub spacings: Vec<usize>,
    #[serde(default = "one_step")]
    pub downsample: usize,
}

fn default_spacings() -> Vec<usize> {
    vec![1]
}

pub fn f_vs_q_curve(c: &FVsQConfig, workers: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    let dict = Dictionary::convolutive(c.n, c.sigma, c.downsample)?;
    let a = dict.matrix();
    super::check_sparsity(a.nrows(), a.ncols(), c.k)?;
    if c.placement == Placement::Random {
        return Err(invalid("f-vs-q needs a deterministic placement"));
    }
    let support = c.placement.place(c.n, c.k, &mut super::support_rng(0))?;
    let analysis = SupportAnalysis::new(a, &SupportSet::new(support.clone(), c.n)?)?;
    let values = run_parallel(c.k, workers, |q| {
        let state = ProjectionState::with_active(a, &support[..q])?;
        let omp = analysis.max_factor(&state, Algorithm::Omp, Evaluation::Checked)?;
        let ols = analysis.max_factor(&state, Algorithm::Ols, Evaluation::Checked)?;
        Ok((omp, ols))
    })?;
    let mut result = ExperimentResult::new(ExperimentConfig::FVsQ(c.clone()), &["q", "f_omp", "f_ols"]);
    for (q, &(omp, ols)) in values.iter().enumerate() {
        result.push(vec![Cell::from(q), Cell::from(omp), Cell::from(ols)]);
    }
    result.note("rows_m", a.nrows());
    result.note("support", support);
    result.wall_clock = start.elapsed();
    Ok(result)
}

pub fn brc_sigma_sweep(c: &BrcSigmaConfig, workers: usize) -> Result<ExperimentResult> {
    let start = Instant::now();
    if c.sigmas.is_empty() || c.spacings.is_empty() {
        return Err(invalid("brc-sigma needs nonempty sigma and spacing grids"));
    }
    let mut sigmas = c.sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    let mut spacings = c.spacings.clone();
    spacings.sort_unstable();
    for &delta in &spacings {
        Placement::Spaced { delta }.check(c.n, 2)?;
    }
    let tasks: Vec<(usize, f64)> = spacings
        .iter()
        .flat_map(|&d| sigmas.iter().map(move |&s| (d, s)))
        .collect();
    let aggregates = run_parallel(tasks.len(), workers, |t| {
        let (delta, sigma) = tasks[t];
        let dict = Dictionary::convolutive(c.n, sigma, c.downsample)?;
        Ok(brc_omp(dict.matrix(), &[0, delta], Evaluation::Checked)?.aggregate)
    })?;
    let mut result = ExperimentResult::new(
        ExperimentConfig::BrcSigma(c.clone()),
        &["delta", "sigma", "aggregate", "verdict"],
    );
    for (&(delta, sigma), &agg) in tasks.iter().zip(&aggregates) {
        result.push(vec![
            Cell::from(delta),
            Cell::from(sigma),
            Cell::from(agg),
            Cell::from((agg >= 1.0) as usize),
        ]);
    }
    let holds = |di: usize, si: usize| aggregates[di * sigmas.len() + si] >= 1.0;

    // Per spacing: smallest grid σ from which the condition holds for every
    // larger grid σ.
    let mut thresholds = serde_json::Map::new();
    for (di, delta) in spacings.iter().enumerate() {
        let tail = (0..sigmas.len()).rev().take_while(|&si| holds(di, si)).last();
        thresholds.insert(delta.to_string(), tail.map_or(Value::Null, |si| json!(sigmas[si])));
    }
    // Per σ: largest grid Δ up to which the condition holds for every smaller
    // grid Δ; 0 when it fails at the smallest spacing.
    let frontier: Vec<Value> = (0..sigmas.len())
        .map(|si| {
            let reach = (0..spacings.len()).take_while(|&di| holds(di, si)).last();
            json!({ "sigma": sigmas[si], "delta_star": reach.map_or(0, |di| spacings[di]) })
        })
        .collect();
    result.note("sigma_threshold", Value::Object(thresholds));
    result.note("frontier", Value::Array(frontier));
    result.wall_clock = start.elapsed();
    Ok(result)
}
