//! Seeded Monte Carlo harnesses.
//!
//! Trial `t` of a run with base seed `s` draws its dictionary from seed
//! `s + t` and its support and growth order from stream 1 of the same
//! ChaCha8 seed. Trials run on a rayon pool and are collected in trial order,
//! so results do not depend on the worker count.

mod brc;
mod deconvolution;
mod phase;
mod scatter;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dictionaries::Dictionary;
use crate::error::{invalid, Result};
use crate::linalg::Vector;

pub use brc::{brc_map, BrcMapConfig};
pub use deconvolution::{brc_sigma_sweep, f_vs_q_curve, BrcSigmaConfig, FVsQConfig};
pub use phase::{phase_curve, phase_diagram, PhaseCurveConfig, PhaseDiagramConfig};
pub use scatter::{scatter_experiment, ScatterConfig};

/// Random dictionary family used by the Monte Carlo experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    Gaussian,
    Hybrid { t_max: f64 },
}

impl Family {
    pub fn draw(&self, m: usize, n: usize, seed: u64) -> Result<Dictionary> {
        match *self {
            Family::Gaussian => Dictionary::gaussian(m, n, seed),
            Family::Hybrid { t_max } => Dictionary::hybrid(m, n, t_max, seed),
        }
    }
}

/// Where the true support sits among the atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Placement {
    /// Uniform without replacement.
    Random,
    /// Atoms `0..k`.
    FirstAtoms,
    /// Atoms `0, Δ, 2Δ, ...`.
    Spaced { delta: usize },
}

impl Placement {
    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        let span = match *self {
            Placement::Random | Placement::FirstAtoms => k,
            Placement::Spaced { delta } => {
                if delta == 0 {
                    return Err(invalid("spacing must be >= 1"));
                }
                (k.saturating_sub(1)) * delta + 1
            }
        };
        if k == 0 || span > n {
            return Err(invalid(format!("cannot place {k} atoms among {n} with {self:?}")));
        }
        Ok(())
    }

    /// Sorted support indices.
    pub fn place(&self, n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        self.check(n, k)?;
        Ok(match *self {
            Placement::Random => {
                let mut v = index::sample(rng, n, k).into_vec();
                v.sort_unstable();
                v
            }
            Placement::FirstAtoms => (0..k).collect(),
            Placement::Spaced { delta } => (0..k).map(|i| i * delta).collect(),
        })
    }
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

/// Generator for support and growth-order draws of one trial.
pub fn support_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Amplitudes uniform in `[-1, 1] \ {0}` on `support`, from stream 2 of `seed`.
pub fn random_amplitudes(support: &[usize], n: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut x = Vector::zeros(n);
    for &i in support {
        let mut v = 0.0;
        while v == 0.0 {
            v = rng.random_range(-1.0..=1.0);
        }
        x[i] = v;
    }
    x
}

/// Support and uniformly random growth order for one trial.
pub fn draw_support(placement: &Placement, n: usize, k: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = support_rng(seed);
    let support = placement.place(n, k, &mut rng)?;
    let mut order = support.clone();
    order.shuffle(&mut rng);
    Ok((support, order))
}

/// Runs `task(0..count)` on `workers` threads, results in index order.
pub(crate) fn run_parallel<T, F>(count: usize, workers: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&task).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Scatter(ScatterConfig),
    PhaseCurve(PhaseCurveConfig),
    PhaseDiagram(PhaseDiagramConfig),
    FVsQ(FVsQConfig),
    BrcMap(BrcMapConfig),
    BrcSigma(BrcSigmaConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Scatter(_) => "scatter",
            ExperimentConfig::PhaseCurve(_) => "phase-curve",
            ExperimentConfig::PhaseDiagram(_) => "phase-diagram",
            ExperimentConfig::FVsQ(_) => "f-vs-q",
            ExperimentConfig::BrcMap(_) => "brc-map",
            ExperimentConfig::BrcSigma(_) => "brc-sigma",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::Scatter(c) => Some(c.seed),
            ExperimentConfig::PhaseCurve(c) => Some(c.seed),
            ExperimentConfig::PhaseDiagram(c) => Some(c.seed),
            ExperimentConfig::BrcMap(c) => Some(c.seed),
            ExperimentConfig::FVsQ(_) | ExperimentConfig::BrcSigma(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Runs any experiment.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    match config {
        ExperimentConfig::Scatter(c) => scatter_experiment(c, workers),
        ExperimentConfig::PhaseCurve(c) => phase_curve(c, workers),
        ExperimentConfig::PhaseDiagram(c) => phase_diagram(c, workers),
        ExperimentConfig::FVsQ(c) => f_vs_q_curve(c, workers),
        ExperimentConfig::BrcMap(c) => brc_map(c, workers),
        ExperimentConfig::BrcSigma(c) => brc_sigma_sweep(c, workers),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl Cell {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Cell::Int(i) => i as f64,
            Cell::Float(x) => x,
        }
    }

    fn write_csv(&self, out: &mut String) {
        match *self {
            Cell::Int(i) => write!(out, "{i}"),
            Cell::Float(x) => write!(out, "{x:.16e}"),
        }
        .unwrap();
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, Value>,
    /// Not serialized: it would break byte-identical reruns.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ExperimentResult {
    pub(crate) fn new(config: ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            wall_clock: Duration::ZERO,
        }
    }

    pub(crate) fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub(crate) fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Values of one column as floats.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_f64()).collect())
    }

    /// `<kind>_seed<seed>`, or `<kind>` for deterministic experiments.
    pub fn file_stem(&self) -> String {
        match self.config.seed() {
            Some(s) => format!("{}_seed{s}", self.config.kind()),
            None => self.config.kind().to_string(),
        }
    }

    /// `# <config json>`, a header row, then one row per line; floats carry 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {}", self.config.to_json()).unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.write_csv(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

/// Extracts the config echoed on the first line of a CSV output, or under
/// `"config"` in a JSON output.
pub fn config_from_output(text: &str) -> Result<ExperimentConfig> {
    let trimmed = text.trim_start();
    let json = if let Some(rest) = trimmed.strip_prefix('#') {
        let line = rest.lines().next().unwrap_or("");
        serde_json::from_str::<Value>(line.trim())
    } else {
        serde_json::from_str::<Value>(trimmed).map(|v| v.get("config").cloned().unwrap_or(v))
    }
    .map_err(|e| invalid(format!("cannot parse config echo: {e}")))?;
    serde_json::from_value(json).map_err(|e| invalid(format!("invalid config: {e}")))
}

pub(crate) fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(invalid("trial count must be >= 1"));
    }
    Ok(())
}

pub(crate) fn check_sparsity(m: usize, n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= m.min(n) {
        return Err(invalid(format!("need 1 <= k < min(m, n), got k={k}, m={m}, n={n}")));
    }
    Ok(())
}
