//! OMP and OLS engines, plus inputs built to steer them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{select_columns, Matrix, ProjectionState, Qr, Vector, TAU_ZERO};

/// Relative gap under which two selection scores count as tied.
pub const TAU_TIE: f64 = 1e-9;
/// A residual below this fraction of `‖y‖` counts as zero.
pub const SUCCESS_RATIO: f64 = 1e-8;
/// Smallest step tried by the constructive inputs.
pub const MIN_EPSILON: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "OMP")]
    Omp,
    #[serde(rename = "OLS")]
    Ols,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Omp, Algorithm::Ols];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Omp => "OMP",
            Algorithm::Ols => "OLS",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omp" => Ok(Algorithm::Omp),
            "ols" => Ok(Algorithm::Ols),
            _ => Err(invalid(format!("unknown algorithm {s:?}, expected omp or ols"))),
        }
    }
}

/// Sorted, duplicate-free atom indices below `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("duplicate atom {} in support", w[0])));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(invalid(format!("atom {last} out of range 0..{n}")));
            }
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Indices below `n` not in the set.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| !self.contains(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Selection {
    pub index: usize,
    /// `(i, score)` for every inactive atom, in index order.
    pub scores: Vec<(usize, f64)>,
    pub tie: bool,
    /// Atoms whose score is within `TAU_TIE` of the top score, in index order.
    pub tied: Vec<usize>,
}

fn score(state: &ProjectionState, r: &Vector, i: usize, algorithm: Algorithm) -> f64 {
    let c = state.projected_atoms().column(i).dot(r).abs();
    match algorithm {
        Algorithm::Omp => c,
        Algorithm::Ols => {
            let norm = state.norm(i);
            if norm <= TAU_ZERO {
                0.0
            } else {
                c / norm
            }
        }
    }
}

/// Picks the inactive atom maximizing `|⟨r, ã_i⟩|` (OMP) or `|⟨r, b̃_i⟩|` (OLS).
/// Exact ties go to the lowest index.
pub fn select(state: &ProjectionState, r: &Vector, algorithm: Algorithm) -> Result<Selection> {
    if r.norm() <= TAU_ZERO {
        return Err(Error::ZeroResidual);
    }
    let n = state.atoms().ncols();
    let scores: Vec<(usize, f64)> = (0..n)
        .filter(|&i| !state.is_active(i))
        .map(|i| (i, score(state, r, i, algorithm)))
        .collect();
    let &(index, top) = scores
        .iter()
        .fold(None, |best: Option<&(usize, f64)>, s| match best {
            Some(b) if b.1 >= s.1 => Some(b),
            _ => Some(s),
        })
        .ok_or_else(|| invalid("every atom is already active"))?;
    let floor = top - TAU_TIE * top;
    let tied: Vec<usize> = scores
        .iter()
        .filter(|&&(_, s)| s >= floor)
        .map(|&(i, _)| i)
        .collect();
    Ok(Selection {
        index,
        scores,
        tie: tied.len() > 1,
        tied,
    })
}

pub fn select_omp(state: &ProjectionState, r: &Vector) -> Result<Selection> {
    select(state, r, Algorithm::Omp)
}

pub fn select_ols(state: &ProjectionState, r: &Vector) -> Result<Selection> {
    select(state, r, Algorithm::Ols)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Iteration {
    pub iteration: usize,
    pub selected: usize,
    pub scores: Vec<(usize, f64)>,
    pub tie: bool,
    pub tied: Vec<usize>,
    /// Residual norm after the update; the pre-update norm when the update
    /// could not be carried out.
    pub residual_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Status {
    Success,
    WrongAtom { iteration: usize, index: usize },
    TieFailure { iteration: usize },
    RankAbort { iteration: usize },
    /// The iteration budget ran out with a nonzero residual.
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyTrace {
    pub algorithm: Algorithm,
    pub initial_residual_norm: f64,
    pub iterations: Vec<Iteration>,
    pub status: Status,
}

impl GreedyTrace {
    /// Selected atoms in order.
    pub fn selected(&self) -> Vec<usize> {
        self.iterations.iter().map(|it| it.selected).collect()
    }

    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

/// Runs up to `max_iters` iterations of `algorithm` on `y`.
///
/// With an oracle support, a tie whose tied set contains a wrong atom stops the
/// run as `TieFailure`, and a wrong selection stops it as `WrongAtom`.
pub fn run_greedy(
    algorithm: Algorithm,
    a: &Matrix,
    y: &Vector,
    max_iters: usize,
    oracle: Option<&SupportSet>,
) -> Result<GreedyTrace> {
    let (m, n) = a.shape();
    if max_iters >= m.min(n) {
        return Err(invalid(format!(
            "iteration budget {max_iters} must be below min(m, n) = {}",
            m.min(n)
        )));
    }
    if y.len() != m {
        return Err(invalid(format!("input has {} entries, expected {m}", y.len())));
    }
    if let Some(s) = oracle {
        SupportSet::new(s.indices().to_vec(), n)?;
    }
    let tol = SUCCESS_RATIO * y.norm();
    let mut state = ProjectionState::new(a)?;
    let mut r = y.clone();
    let mut iterations = Vec::new();
    let mut status = None;
    for iteration in 1..=max_iters {
        let before = r.norm();
        if before <= tol {
            status = Some(Status::Success);
            break;
        }
        let sel = select(&state, &r, algorithm)?;
        let verdict = oracle.and_then(|s| {
            if sel.tie && sel.tied.iter().any(|&i| !s.contains(i)) {
                Some(Status::TieFailure { iteration })
            } else if !s.contains(sel.index) {
                Some(Status::WrongAtom {
                    iteration,
                    index: sel.index,
                })
            } else {
                None
            }
        });
        let mut record = Iteration {
            iteration,
            selected: sel.index,
            scores: sel.scores,
            tie: sel.tie,
            tied: sel.tied,
            residual_norm: before,
        };
        if let Some(v) = verdict {
            if let Ok(s) = state.clone().extend(sel.index) {
                record.residual_norm = s.residual(y).norm();
            }
            iterations.push(record);
            status = Some(v);
            break;
        }
        match state.extend(sel.index) {
            Ok(s) => {
                state = s;
                r = state.residual(y);
                record.residual_norm = r.norm();
                iterations.push(record);
            }
            Err(Error::DegenerateAtom { .. }) => {
                iterations.push(record);
                status = Some(Status::RankAbort { iteration });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let status = status.unwrap_or(if r.norm() <= tol {
        Status::Success
    } else {
        Status::Exhausted
    });
    Ok(GreedyTrace {
        algorithm,
        initial_residual_norm: y.norm(),
        iterations,
        status,
    })
}

/// Whether `algorithm` started from `y` selects exactly `path`, in order,
/// with a strict maximum at every step.
pub fn follows_path(algorithm: Algorithm, a: &Matrix, y: &Vector, path: &[usize]) -> Result<bool> {
    let mut state = ProjectionState::new(a)?;
    for &expected in path {
        let r = state.residual(y);
        if r.norm() <= SUCCESS_RATIO * y.norm() {
            return Ok(false);
        }
        let sel = select(&state, &r, algorithm)?;
        if sel.tie || sel.index != expected {
            return Ok(false);
        }
        state = match state.extend(expected) {
            Ok(s) => s,
            Err(Error::DegenerateAtom { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
    }
    Ok(true)
}

/// Input in `span(A_Q)` that makes `algorithm` select `q` in the listed order.
///
/// Built as `y_1 = a_{q_1}`, `y_p = y_{p-1} + ε_p a_{q_p}` with `ε_p` halved
/// from 1 until the selection path is strict; every step is verified by
/// re-running the algorithm.
pub fn construct_reaching_input(a: &Matrix, q: &[usize], algorithm: Algorithm) -> Result<Vector> {
    let n = a.ncols();
    SupportSet::new(q.to_vec(), n)?;
    let Some((&first, rest)) = q.split_first() else {
        return Ok(Vector::zeros(a.nrows()));
    };
    let mut y = a.column(first).into_owned();
    if !follows_path(algorithm, a, &y, &q[..1])? {
        return Err(Error::ConstructionFailed(format!(
            "atom {first} is not a strict first selection for its own input"
        )));
    }
    for (offset, &atom) in rest.iter().enumerate() {
        let prefix = &q[..offset + 2];
        let mut eps = 1.0;
        loop {
            let candidate = &y + eps * a.column(atom);
            if follows_path(algorithm, a, &candidate, prefix)? {
                y = candidate;
                break;
            }
            eps /= 2.0;
            if eps < MIN_EPSILON {
                return Err(Error::ConstructionFailed(format!(
                    "no step reaches atom {atom} after {prefix:?}",
                )));
            }
        }
    }
    Ok(y)
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureInput {
    pub y: Vec<f64>,
    pub epsilon: f64,
    /// Wrong atom attaining the largest factor.
    pub witness: usize,
    pub factor: f64,
    /// Sign pattern `v` on `Q* \ Q`.
    pub signs: Vec<f64>,
    pub trace: GreedyTrace,
}

/// Input on which `algorithm` first selects `q` and then a wrong atom (or a
/// tie with one), provided the iteration-aware certificate at `q` fails.
///
/// `z` must reach `q` strictly; when absent it is built with
/// [`construct_reaching_input`] using the same algorithm.
pub fn build_failure_input(
    a: &Matrix,
    qstar: &SupportSet,
    q: &[usize],
    algorithm: Algorithm,
    z: Option<&Vector>,
) -> Result<FailureInput> {
    let n = a.ncols();
    SupportSet::new(qstar.indices().to_vec(), n)?;
    check_proper_subset(qstar, q)?;
    let state = ProjectionState::with_active(a, q)?;
    let remaining: Vec<usize> = qstar
        .indices()
        .iter()
        .copied()
        .filter(|&i| !state.is_active(i))
        .collect();
    let wrong = qstar.complement(n);
    let column = |i: usize| match algorithm {
        Algorithm::Omp => state.projected_atom(i),
        Algorithm::Ols => state.normalized_projected_atom(i),
    };
    let c_t = Matrix::from_columns(&remaining.iter().map(|&i| column(i)).collect::<Vec<_>>());
    let qr = Qr::new(&c_t)?;
    let (witness, coeffs) = wrong
        .iter()
        .map(|&j| (j, qr.solve(&column(j))))
        .fold(None, |best: Option<(usize, Vector)>, cur| match best {
            Some(b) if b.1.lp_norm(1) >= cur.1.lp_norm(1) => Some(b),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::NotApplicable("no wrong atom exists".into()))?;
    let factor = coeffs.lp_norm(1);
    if factor < 1.0 {
        return Err(Error::NotApplicable(format!(
            "certificate holds at this subset (max factor {factor})"
        )));
    }
    let signs: Vec<f64> = coeffs.iter().map(|&c| if c < 0.0 { -1.0 } else { 1.0 }).collect();
    let proj_t = select_columns(state.projected_atoms(), &remaining);
    let gram: DMatrix<f64> = c_t.transpose() * &proj_t;
    let weights = gram
        .lu()
        .solve(&Vector::from_vec(signs.clone()))
        .ok_or_else(|| Error::ConstructionFailed("singular cross-Gram matrix".into()))?;
    let y_hat = select_columns(a, &remaining) * weights;

    let z = match (q.is_empty(), z) {
        (true, _) => Vector::zeros(a.nrows()),
        (false, Some(z)) => z.clone(),
        (false, None) => construct_reaching_input(a, q, algorithm)?,
    };
    let mut eps = 1.0;
    loop {
        let y = &z + eps * &y_hat;
        let trace = run_greedy(algorithm, a, &y, q.len() + 1, Some(qstar))?;
        let prefix_ok = trace
            .iterations
            .iter()
            .take(q.len())
            .map(|it| (it.selected, it.tie))
            .eq(q.iter().map(|&i| (i, false)));
        let fails_next = matches!(
            trace.status,
            Status::WrongAtom { iteration, .. } | Status::TieFailure { iteration }
                if iteration == q.len() + 1
        );
        if prefix_ok && fails_next {
            return Ok(FailureInput {
                y: y.iter().copied().collect(),
                epsilon: eps,
                witness,
                factor,
                signs,
                trace,
            });
        }
        eps /= 2.0;
        if eps < MIN_EPSILON {
            return Err(Error::ConstructionFailed(
                "no perturbation keeps the prefix and triggers the failure".into(),
            ));
        }
    }
}

/// `Q ⊆ Q*`, `|Q| < |Q*|`, and no repeated atoms in `Q`.
pub(crate) fn check_proper_subset(qstar: &SupportSet, q: &[usize]) -> Result<()> {
    let mut seen = q.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != q.len() {
        return Err(invalid("q has repeated atoms"));
    }
    if q.len() >= qstar.len() || q.iter().any(|&i| !qstar.contains(i)) {
        return Err(invalid("q must be a proper subset of the true support"));
    }
    Ok(())
}
