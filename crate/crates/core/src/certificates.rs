//! Recovery and bad-recovery certificates for OMP and OLS.
//!
//! For a true support `Q*`, a selected subset `Q ⊊ Q*` and a wrong atom `j`,
//! the iteration-aware factors are
//!
//! * OMP: `Σ_{i ∈ Q*\Q} |c_i|`
//! * OLS: `Σ_{i ∈ Q*\Q} (‖ã_i‖ / ‖ã_j‖) |c_i|`
//!
//! with `c = A_{Q*}† a_j` (definitional form), or equivalently `‖Ã† ã_j‖₁` and
//! `‖B̃† b̃_j‖₁` on the projected atoms (projected form). Both are 0 when
//! `ã_j = 0`.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::greedy::{check_proper_subset, Algorithm, SupportSet};
use crate::linalg::{binomial, select_columns, Matrix, ProjectionState, Qr, Vector, TAU_ZERO};

/// Relative disagreement allowed between the two forms of a factor.
pub const FORM_TOLERANCE: f64 = 1e-7;
/// Relative disagreement allowed between recursive and direct factors.
pub const RECURSION_TOLERANCE: f64 = 1e-8;
/// Subset budget for [`erc_oxx_cardinality`].
pub const CARDINALITY_BUDGET: u128 = 1_000_000;

/// How iteration-aware factors are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    /// Both forms, failing with `FormMismatch` when they disagree.
    #[default]
    Checked,
    /// Definitional form only, reusing the precomputed pseudo-inverse coefficients.
    Fast,
}

fn agree(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Pseudo-inverse coefficients of every wrong atom on a fixed true support.
#[derive(Clone, Debug)]
pub struct SupportAnalysis<'a> {
    atoms: &'a Matrix,
    support: SupportSet,
    wrong: Vec<usize>,
    /// Column `t` holds `A_{Q*}† a_{wrong[t]}`, indexed like the support.
    coefficients: Matrix,
}

impl<'a> SupportAnalysis<'a> {
    pub fn new(atoms: &'a Matrix, support: &SupportSet) -> Result<Self> {
        let n = atoms.ncols();
        let support = SupportSet::new(support.indices().to_vec(), n)?;
        if support.is_empty() {
            return Err(invalid("true support is empty"));
        }
        let qr = Qr::new(&select_columns(atoms, support.indices()))?;
        let wrong = support.complement(n);
        let mut coefficients = Matrix::zeros(support.len(), wrong.len());
        for (t, &j) in wrong.iter().enumerate() {
            coefficients.set_column(t, &qr.solve(&atoms.column(j).into_owned()));
        }
        Ok(Self {
            atoms,
            support,
            wrong,
            coefficients,
        })
    }

    pub fn atoms(&self) -> &'a Matrix {
        self.atoms
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn wrong_atoms(&self) -> &[usize] {
        &self.wrong
    }

    fn wrong_position(&self, j: usize) -> Result<usize> {
        self.wrong
            .binary_search(&j)
            .map_err(|_| invalid(format!("atom {j} is not a wrong atom")))
    }

    fn support_position(&self, i: usize) -> usize {
        self.support.indices().binary_search(&i).expect("atom in support")
    }

    /// `A_{Q*}† a_j`, indexed like the support.
    pub fn coefficients(&self, j: usize) -> Result<Vector> {
        Ok(self.coefficients.column(self.wrong_position(j)?).into_owned())
    }

    /// `(j, ‖A_{Q*}† a_j‖₁)` for every wrong atom.
    pub fn erc_factors(&self) -> Vec<(usize, f64)> {
        self.wrong
            .iter()
            .zip(self.coefficients.column_iter())
            .map(|(&j, c)| (j, c.lp_norm(1)))
            .collect()
    }

    /// True atoms not yet selected in `state`, in support order.
    pub fn remaining(&self, state: &ProjectionState) -> Result<Vec<usize>> {
        check_proper_subset(&self.support, state.active())?;
        Ok(self
            .support
            .indices()
            .iter()
            .copied()
            .filter(|&i| !state.is_active(i))
            .collect())
    }

    fn definitional(&self, state: &ProjectionState, remaining: &[usize], t: usize, alg: Algorithm) -> f64 {
        let j = self.wrong[t];
        let norm_j = state.norm(j);
        if norm_j <= TAU_ZERO {
            return 0.0;
        }
        let c = self.coefficients.column(t);
        remaining
            .iter()
            .map(|&i| {
                let ci = c[self.support_position(i)].abs();
                match alg {
                    Algorithm::Omp => ci,
                    Algorithm::Ols => state.norm(i) * ci / norm_j,
                }
            })
            .sum()
    }

    /// Factors from the pseudo-inverse coefficients on `A_{Q*}`.
    pub fn definitional_factors(&self, state: &ProjectionState, alg: Algorithm) -> Result<Vec<(usize, f64)>> {
        let remaining = self.remaining(state)?;
        Ok(self
            .wrong
            .iter()
            .enumerate()
            .map(|(t, &j)| (j, self.definitional(state, &remaining, t, alg)))
            .collect())
    }

    fn projected_columns(state: &ProjectionState, alg: Algorithm, cols: &[usize]) -> Matrix {
        let m = state.atoms().nrows();
        let mut out = Matrix::zeros(m, cols.len());
        for (k, &i) in cols.iter().enumerate() {
            let v = match alg {
                Algorithm::Omp => state.projected_atom(i),
                Algorithm::Ols => state.normalized_projected_atom(i),
            };
            out.set_column(k, &v);
        }
        out
    }

    fn projected_qr(&self, state: &ProjectionState, alg: Algorithm) -> Result<(Vec<usize>, Qr)> {
        let remaining = self.remaining(state)?;
        let qr = Qr::new(&Self::projected_columns(state, alg, &remaining))?;
        Ok((remaining, qr))
    }

    /// `C̃_{Q*\Q}† c̃_j` on the projected (OMP) or normalized projected (OLS)
    /// atoms, indexed like the remaining true atoms.
    pub fn projected_coefficients(&self, state: &ProjectionState, alg: Algorithm, j: usize) -> Result<Vector> {
        self.wrong_position(j)?;
        let (_, qr) = self.projected_qr(state, alg)?;
        let c = Self::projected_columns(state, alg, &[j]);
        Ok(qr.solve(&c.column(0).into_owned()))
    }

    /// Factors as ℓ1 norms of the projected pseudo-inverse coefficients.
    pub fn projected_factors(&self, state: &ProjectionState, alg: Algorithm) -> Result<Vec<(usize, f64)>> {
        let (_, qr) = self.projected_qr(state, alg)?;
        Ok(self
            .wrong
            .iter()
            .map(|&j| {
                if state.norm(j) <= TAU_ZERO {
                    return (j, 0.0);
                }
                let c = Self::projected_columns(state, alg, &[j]);
                (j, qr.solve(&c.column(0).into_owned()).lp_norm(1))
            })
            .collect())
    }

    /// Per-wrong-atom factors at the subset held by `state`.
    pub fn factors(&self, state: &ProjectionState, alg: Algorithm, eval: Evaluation) -> Result<Vec<(usize, f64)>> {
        let def = self.definitional_factors(state, alg)?;
        if eval == Evaluation::Fast {
            return Ok(def);
        }
        let proj = self.projected_factors(state, alg)?;
        for (&(_, d), &(_, p)) in def.iter().zip(&proj) {
            if !agree(d, p, FORM_TOLERANCE) {
                return Err(Error::FormMismatch {
                    definitional: d,
                    projected: p,
                });
            }
        }
        Ok(def)
    }

    /// Largest factor over the wrong atoms, 0 when there are none.
    pub fn max_factor(&self, state: &ProjectionState, alg: Algorithm, eval: Evaluation) -> Result<f64> {
        Ok(self
            .factors(state, alg, eval)?
            .iter()
            .fold(0.0, |acc: f64, &(_, f)| acc.max(f)))
    }
}

fn support_of(a: &Matrix, qstar: &[usize]) -> Result<SupportSet> {
    SupportSet::new(qstar.to_vec(), a.ncols())
}

/// `‖A_{Q*}† a_j‖₁`.
pub fn erc_factor(a: &Matrix, qstar: &[usize], j: usize) -> Result<f64> {
    let analysis = SupportAnalysis::new(a, &support_of(a, qstar)?)?;
    Ok(analysis.coefficients(j)?.lp_norm(1))
}

/// Iteration-aware factor of `j` at `Q = q` (atoms in selection order).
pub fn factor(a: &Matrix, qstar: &[usize], q: &[usize], j: usize, alg: Algorithm, eval: Evaluation) -> Result<f64> {
    let analysis = SupportAnalysis::new(a, &support_of(a, qstar)?)?;
    let pos = analysis.wrong_position(j)?;
    let state = ProjectionState::with_active(a, q)?;
    Ok(analysis.factors(&state, alg, eval)?[pos].1)
}

pub fn f_omp(a: &Matrix, qstar: &[usize], q: &[usize], j: usize) -> Result<f64> {
    factor(a, qstar, q, j, Algorithm::Omp, Evaluation::Checked)
}

pub fn f_ols(a: &Matrix, qstar: &[usize], q: &[usize], j: usize) -> Result<f64> {
    factor(a, qstar, q, j, Algorithm::Ols, Evaluation::Checked)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    Erc,
    ErcOxxSubset,
    ErcOxxCardinality,
    BrcOmp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub kind: ConditionKind,
    pub algorithm: Option<Algorithm>,
    pub per_atom: Vec<(usize, f64)>,
    pub aggregate: f64,
    pub verdict: bool,
    pub margin: f64,
    /// Subset attaining the aggregate, for the enumerating conditions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
}

fn max_of(per_atom: &[(usize, f64)]) -> f64 {
    per_atom.iter().fold(0.0, |acc: f64, &(_, f)| acc.max(f))
}

impl CertificateReport {
    fn recovery(kind: ConditionKind, algorithm: Option<Algorithm>, per_atom: Vec<(usize, f64)>, subset: Option<Vec<usize>>) -> Self {
        let aggregate = max_of(&per_atom);
        Self {
            kind,
            algorithm,
            per_atom,
            aggregate,
            verdict: aggregate < 1.0,
            margin: (aggregate - 1.0).abs(),
            subset,
        }
    }
}

/// `max_j ‖A_{Q*}† a_j‖₁ < 1`.
pub fn erc(a: &Matrix, qstar: &[usize]) -> Result<CertificateReport> {
    let analysis = SupportAnalysis::new(a, &support_of(a, qstar)?)?;
    Ok(CertificateReport::recovery(ConditionKind::Erc, None, analysis.erc_factors(), None))
}

/// Certificate that `alg` recovers the rest of `Q*` once it has selected `q`.
pub fn erc_oxx_subset(a: &Matrix, qstar: &[usize], q: &[usize], alg: Algorithm, eval: Evaluation) -> Result<CertificateReport> {
    let analysis = SupportAnalysis::new(a, &support_of(a, qstar)?)?;
    let state = ProjectionState::with_active(a, q)?;
    let per_atom = analysis.factors(&state, alg, eval)?;
    Ok(CertificateReport::recovery(
        ConditionKind::ErcOxxSubset,
        Some(alg),
        per_atom,
        Some(q.to_vec()),
    ))
}

/// Worst case of [`erc_oxx_subset`] over every `q`-subset of `Q*`.
pub fn erc_oxx_cardinality(a: &Matrix, qstar: &[usize], q: usize, alg: Algorithm, eval: Evaluation) -> Result<CertificateReport> {
    let support = support_of(a, qstar)?;
    let k = support.len();
    if q >= k {
        return Err(invalid(format!("subset size {q} must be below {k}")));
    }
    let count = binomial(k, q);
    if count > CARDINALITY_BUDGET {
        return Err(Error::TooLarge {
            what: "subset enumeration",
            count,
            budget: CARDINALITY_BUDGET,
        });
    }
    let analysis = SupportAnalysis::new(a, &support)?;
    let mut per_atom: Vec<(usize, f64)> = analysis.wrong_atoms().iter().map(|&j| (j, 0.0)).collect();
    let mut worst: Option<(f64, Vec<usize>)> = None;
    for subset in support.indices().iter().copied().combinations(q) {
        let state = ProjectionState::with_active(a, &subset)?;
        let factors = analysis.factors(&state, alg, eval)?;
        for (acc, &(_, f)) in per_atom.iter_mut().zip(&factors) {
            acc.1 = acc.1.max(f);
        }
        let m = max_of(&factors);
        if worst.as_ref().is_none_or(|w| m > w.0) {
            worst = Some((m, subset));
        }
    }
    Ok(CertificateReport::recovery(
        ConditionKind::ErcOxxCardinality,
        Some(alg),
        per_atom,
        worst.map(|w| w.1),
    ))
}

/// Bad recovery condition for OMP: every `(k-1)`-subset of `Q*` admits a wrong
/// atom with factor at least 1, so OMP cannot reach `Q*` from any input.
pub fn brc_omp(a: &Matrix, qstar: &[usize], eval: Evaluation) -> Result<CertificateReport> {
    let support = support_of(a, qstar)?;
    let analysis = SupportAnalysis::new(a, &support)?;
    // (aggregate, subset, per-atom factors) of the weakest leave-one-out subset.
    type Candidate = (f64, Vec<usize>, Vec<(usize, f64)>);
    let mut best: Option<Candidate> = None;
    for &left_out in support.indices() {
        let subset: Vec<usize> = support.indices().iter().copied().filter(|&i| i != left_out).collect();
        let state = ProjectionState::with_active(a, &subset)?;
        let factors = analysis.factors(&state, Algorithm::Omp, eval)?;
        let m = max_of(&factors);
        if best.as_ref().is_none_or(|b| m < b.0) {
            best = Some((m, subset, factors));
        }
    }
    let (aggregate, subset, per_atom) = best.expect("nonempty support");
    Ok(CertificateReport {
        kind: ConditionKind::BrcOmp,
        algorithm: Some(Algorithm::Omp),
        per_atom,
        aggregate,
        verdict: aggregate >= 1.0,
        margin: (aggregate - 1.0).abs(),
        subset: Some(subset),
    })
}

/// OMP factors after adding `l` to the selection: each drops by `|c_l|`.
pub fn omp_forward_update(analysis: &SupportAnalysis, prev: &[(usize, f64)], l: usize) -> Result<Vec<(usize, f64)>> {
    if !analysis.support().contains(l) {
        return Err(invalid(format!("atom {l} is not a true atom")));
    }
    let pos = analysis.support_position(l);
    prev.iter()
        .map(|&(j, f)| Ok((j, f - analysis.coefficients(j)?[pos].abs())))
        .collect()
}

/// Data of the last extension `Q -> Q' = Q ∪ {ℓ}` seen from wrong atom `j`.
struct StepData {
    beta: Vec<f64>,
    eta: Vec<f64>,
    chi: Vec<f64>,
    eta_j: f64,
    chi_j: f64,
}

fn step_data(analysis: &SupportAnalysis, next: &ProjectionState, j: usize) -> Result<StepData> {
    let ext = next
        .history()
        .last()
        .ok_or_else(|| invalid("state has no extension to step back over"))?;
    if next.norm(j) <= TAU_ZERO {
        return Err(Error::NotApplicable(format!("atom {j} lies in the span of the selection")));
    }
    let remaining = analysis.remaining(next)?;
    let beta = analysis.projected_coefficients(next, Algorithm::Ols, j)?;
    Ok(StepData {
        beta: beta.iter().copied().collect(),
        eta: remaining.iter().map(|&i| ext.eta[i]).collect(),
        chi: remaining.iter().map(|&i| ext.chi[i]).collect(),
        eta_j: ext.eta[j],
        chi_j: ext.chi[j],
    })
}

/// OLS factor at `Q` rebuilt from the projected coefficients at `Q'` and the
/// `(η, χ)` pairs of the step `Q -> Q'`.
pub fn ols_backward_factor(analysis: &SupportAnalysis, next: &ProjectionState, j: usize) -> Result<f64> {
    let s = step_data(analysis, next, j)?;
    let (c, d) = phi_sums(&s.beta, &s.eta, &s.chi);
    Ok((s.chi_j - s.eta_j * c).abs() + s.eta_j * d)
}

/// Factor at `Q` from the state at `Q' = Q ∪ {ℓ}`, checked against a direct
/// evaluation at `Q`.
pub fn recursive_factor(analysis: &SupportAnalysis, next: &ProjectionState, j: usize, alg: Algorithm) -> Result<f64> {
    let active = next.active();
    let Some((&l, prev_active)) = active.split_last() else {
        return Err(invalid("state has no extension to step back over"));
    };
    let pos = analysis.wrong_position(j)?;
    let recursive = match alg {
        Algorithm::Omp => {
            let after = analysis.factors(next, Algorithm::Omp, Evaluation::Checked)?[pos].1;
            after + analysis.coefficients(j)?[analysis.support_position(l)].abs()
        }
        Algorithm::Ols => ols_backward_factor(analysis, next, j)?,
    };
    let prev = ProjectionState::with_active(analysis.atoms(), prev_active)?;
    let direct = analysis.factors(&prev, alg, Evaluation::Checked)?[pos].1;
    if !agree(recursive, direct, RECURSION_TOLERANCE) {
        return Err(Error::FormMismatch {
            definitional: direct,
            projected: recursive,
        });
    }
    Ok(recursive)
}

fn phi_sums(beta: &[f64], eta: &[f64], chi: &[f64]) -> (f64, f64) {
    beta.iter().zip(eta).zip(chi).fold((0.0, 0.0), |(c, d), ((b, e), x)| {
        (c + b * x / e, d + b.abs() / e)
    })
}

/// `φ(η) = |√(1-η²) - Cη| + Dη` with `C = Σ β_i χ_i / η_i`, `D = Σ |β_i| / η_i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiParams {
    pub c: f64,
    pub d: f64,
    pub beta: Vec<f64>,
    pub eta: Vec<f64>,
    pub chi: Vec<f64>,
}

impl PhiParams {
    /// Requires `η_i ∈ (0, 1]` and `η_i² + χ_i² = 1`.
    pub fn new(beta: Vec<f64>, eta: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        if beta.len() != eta.len() || beta.len() != chi.len() {
            return Err(invalid("beta, eta and chi must have equal lengths"));
        }
        for (&e, &x) in eta.iter().zip(&chi) {
            if !(e > 0.0 && e <= 1.0) || (e * e + x * x - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("invalid pair eta={e}, chi={x}")));
            }
        }
        let (c, d) = phi_sums(&beta, &eta, &chi);
        Ok(Self { c, d, beta, eta, chi })
    }

    /// Parameters given directly by `C` and `D`.
    pub fn from_sums(c: f64, d: f64) -> Self {
        Self {
            c,
            d,
            beta: Vec::new(),
            eta: Vec::new(),
            chi: Vec::new(),
        }
    }

    /// Parameters of wrong atom `j` for the last step of `next`, with `β`
    /// negated when `χ_j < 0` so that the factor at `Q` equals `φ(η_j)`.
    pub fn from_step(analysis: &SupportAnalysis, next: &ProjectionState, j: usize) -> Result<(Self, f64)> {
        let s = step_data(analysis, next, j)?;
        let beta = if s.chi_j < 0.0 {
            s.beta.iter().map(|b| -b).collect()
        } else {
            s.beta
        };
        Ok((Self::new(beta, s.eta, s.chi)?, s.eta_j))
    }

    pub fn beta_l1(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    pub fn eval(&self, eta: f64) -> f64 {
        ((1.0 - eta * eta).max(0.0).sqrt() - self.c * eta).abs() + self.d * eta
    }

    /// Minimum of `φ` over `[0, 1]`: `min(1, D/√(1+C²))` for `C > 0`, and
    /// `min(1, D - C)` otherwise (`φ` is then concave, so an endpoint wins).
    pub fn minimum(&self) -> f64 {
        if self.c > 0.0 {
            (self.d / (1.0 + self.c * self.c).sqrt()).min(1.0)
        } else {
            (self.d - self.c).min(1.0)
        }
    }

    /// `1 + (‖β‖₁ - 1) η`, a lower bound on `φ(η)` when `C ≤ 0`.
    pub fn lower_bound(&self, eta: f64) -> f64 {
        1.0 + (self.beta_l1() - 1.0) * eta
    }
}

pub fn phi_eval(params: &PhiParams, eta: f64) -> f64 {
    params.eval(eta)
}

pub fn phi_min(params: &PhiParams) -> f64 {
    params.minimum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionaries::Dictionary;
    use crate::linalg::least_squares;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};

    fn example1(t1: f64) -> Matrix {
        Dictionary::example1(t1, FRAC_PI_4).unwrap().into_matrix()
    }

    #[test]
    fn orthonormal_factors_vanish() {
        let a = Matrix::identity(6, 6);
        assert_eq!(erc_factor(&a, &[0, 2], 4).unwrap(), 0.0);
        let r = erc_oxx_subset(&a, &[0, 2, 3], &[2], Algorithm::Ols, Evaluation::Checked).unwrap();
        assert!(r.verdict);
        assert_eq!(r.aggregate, 0.0);
    }

    #[test]
    fn example1_erc_factor_matches_gram_inverse() {
        let (t1, t2) = (FRAC_PI_3, FRAC_PI_4);
        let a = Dictionary::example1(t1, t2).unwrap().into_matrix();
        // [[1, g], [g, 1]]⁻¹ [p, q] with g = ⟨a1, a2⟩.
        let g = (2.0 * t1).cos();
        let (p, q) = (a.column(0).dot(&a.column(2)), a.column(1).dot(&a.column(2)));
        let det = 1.0 - g * g;
        let oracle = ((p - g * q) / det).abs() + ((q - g * p) / det).abs();
        let f = erc_factor(&a, &[0, 1], 2).unwrap();
        assert!((f - oracle).abs() < 1e-12);
        assert!((f - t2.cos() / t1.sin()).abs() < 1e-12);
        assert!((f - 0.8165).abs() < 1e-4);
    }

    #[test]
    fn empty_selection_reduces_to_erc() {
        let d = Dictionary::gaussian(12, 25, 3).unwrap();
        let a = d.matrix();
        let qstar = [1, 4, 9];
        for j in [0, 7, 24] {
            let e = erc_factor(a, &qstar, j).unwrap();
            assert!((f_omp(a, &qstar, &[], j).unwrap() - e).abs() < 1e-12);
            assert!((f_ols(a, &qstar, &[], j).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn example1_iteration_aware_values() {
        for (t1, expected) in [(FRAC_PI_6, FRAC_1_SQRT_2), (PI / 12.0, 1.3660)] {
            let a = example1(t1);
            let closed = (t1.cos() * FRAC_PI_4.cos()).abs() / (2.0 * t1).sin().abs();
            for j in [2, 3] {
                let f = f_omp(&a, &[0, 1], &[0], j).unwrap();
                assert!((f - closed).abs() < 1e-12);
                assert!((f - expected).abs() < 1e-4);
            }
        }
        let a = Dictionary::example1(FRAC_PI_4, FRAC_PI_4).unwrap().into_matrix();
        let (c1, c2, s2) = (FRAC_PI_4.cos(), FRAC_PI_4.cos(), FRAC_PI_4.sin());
        let closed = c1 * c2 / (c1 * c1 * c2 * c2 + s2 * s2).sqrt();
        let f = f_ols(&a, &[0, 1], &[0], 2).unwrap();
        assert!((f - closed).abs() < 1e-12);
        assert!((f - 0.5774).abs() < 1e-4);
    }

    #[test]
    fn example1_projected_atom_and_norm() {
        let (t1, t2) = (0.4, 0.9);
        let a = Dictionary::example1(t1, t2).unwrap().into_matrix();
        let s = ProjectionState::with_active(&a, &[0]).unwrap();
        assert!((s.norm(1) - (2.0 * t1).sin().abs()).abs() < 1e-12);
        let expected = Vector::from_vec(vec![
            t1.sin() * t1.cos() * t2.cos(),
            t1.cos().powi(2) * t2.cos(),
            t2.sin(),
        ]);
        assert!((s.projected_atom(2) - expected).amax() < 1e-12);
    }

    #[test]
    fn example1_brc_values() {
        let r = brc_omp(&example1(PI / 12.0), &[0, 1], Evaluation::Checked).unwrap();
        assert!((r.aggregate - 1.3660254037844386).abs() < 1e-9);
        assert!(r.verdict);
        let r = brc_omp(&example1(FRAC_PI_6), &[0, 1], Evaluation::Checked).unwrap();
        assert!((r.aggregate - FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(!r.verdict);
    }

    #[test]
    fn omp_factor_halves_after_first_selection_in_example1() {
        let t1 = 0.3;
        let a = example1(t1);
        let f0 = f_omp(&a, &[0, 1], &[], 2).unwrap();
        let f1 = f_omp(&a, &[0, 1], &[0], 2).unwrap();
        assert!((f0 - FRAC_PI_4.cos() / t1.sin()).abs() < 1e-12);
        assert!((f0 / f1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn last_step_ols_certificate_always_holds() {
        for seed in 0..50 {
            let d = Dictionary::gaussian(10, 30, seed).unwrap();
            let qstar = [3, 8, 15, 22, 27];
            let r = erc_oxx_subset(d.matrix(), &qstar, &[27, 3, 15, 8], Algorithm::Ols, Evaluation::Checked).unwrap();
            assert!(r.verdict && r.aggregate < 1.0);
            let r = erc_oxx_cardinality(d.matrix(), &qstar, 4, Algorithm::Ols, Evaluation::Checked).unwrap();
            assert!(r.verdict);
        }
    }

    #[test]
    fn cardinality_matches_explicit_subset_loop() {
        let d = Dictionary::convolutive(40, 1.2, 1).unwrap();
        let a = d.matrix();
        let qstar = [10, 11, 12, 13, 14];
        let q0 = erc_oxx_cardinality(a, &qstar, 0, Algorithm::Omp, Evaluation::Checked).unwrap();
        assert!((q0.aggregate - erc(a, &qstar).unwrap().aggregate).abs() < 1e-12);
        for alg in Algorithm::ALL {
            let r = erc_oxx_cardinality(a, &qstar, 2, alg, Evaluation::Checked).unwrap();
            let mut oracle: f64 = 0.0;
            for x in 0..5 {
                for y in x + 1..5 {
                    let q = [qstar[x], qstar[y]];
                    for j in (0..40).filter(|j| !qstar.contains(j)) {
                        oracle = oracle.max(factor(a, &qstar, &q, j, alg, Evaluation::Checked).unwrap());
                    }
                }
            }
            assert!((r.aggregate - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn brc_uses_the_last_coefficient() {
        let d = Dictionary::gaussian(5, 30, 11).unwrap();
        let a = d.matrix();
        let qstar = [0, 1, 2];
        let r = brc_omp(a, &qstar, Evaluation::Checked).unwrap();
        let g = select_columns(a, &qstar);
        let mut best = f64::INFINITY;
        for i in 0..3 {
            let m = (3..30)
                .map(|j| least_squares(&g, &a.column(j).into_owned()).unwrap()[i].abs())
                .fold(0.0, f64::max);
            best = best.min(m);
        }
        assert!((r.aggregate - best).abs() < 1e-10);
        assert_eq!(r.verdict, best >= 1.0);
    }

    #[test]
    fn recursion_matches_direct_evaluation() {
        for seed in 0..20 {
            let d = Dictionary::gaussian(15, 30, seed).unwrap();
            let a = d.matrix();
            let support = SupportSet::new(vec![2, 5, 11, 17, 29], 30).unwrap();
            let analysis = SupportAnalysis::new(a, &support).unwrap();
            let order = [11, 2, 29, 5];
            let mut state = ProjectionState::new(a).unwrap();
            let mut omp = analysis.factors(&state, Algorithm::Omp, Evaluation::Checked).unwrap();
            for &l in &order {
                state = state.extend(l).unwrap();
                omp = omp_forward_update(&analysis, &omp, l).unwrap();
                let direct = analysis.factors(&state, Algorithm::Omp, Evaluation::Checked).unwrap();
                for (x, y) in omp.iter().zip(&direct) {
                    assert!((x.1 - y.1).abs() < 1e-8);
                }
                for &j in analysis.wrong_atoms() {
                    for alg in Algorithm::ALL {
                        recursive_factor(&analysis, &state, j, alg).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn orthonormal_omp_update_adds_nothing() {
        let a = Matrix::identity(5, 5);
        let support = SupportSet::new(vec![0, 1, 2], 5).unwrap();
        let analysis = SupportAnalysis::new(&a, &support).unwrap();
        let s = ProjectionState::with_active(&a, &[1]).unwrap();
        assert_eq!(recursive_factor(&analysis, &s, 4, Algorithm::Omp).unwrap(), 0.0);
    }

    #[test]
    fn phi_from_step_reproduces_factor() {
        for seed in 0..20 {
            let d = Dictionary::gaussian(12, 24, seed).unwrap();
            let a = d.matrix();
            let support = SupportSet::new(vec![0, 3, 6, 9], 24).unwrap();
            let analysis = SupportAnalysis::new(a, &support).unwrap();
            let prev = ProjectionState::with_active(a, &[6]).unwrap();
            let next = prev.clone().extend(0).unwrap();
            for &j in analysis.wrong_atoms() {
                let (p, eta_j) = PhiParams::from_step(&analysis, &next, j).unwrap();
                let direct = factor(a, &[0, 3, 6, 9], &[6], j, Algorithm::Ols, Evaluation::Checked).unwrap();
                assert!((p.eval(eta_j) - direct).abs() < 1e-9);
                assert!(p.eval(eta_j) >= p.minimum() - 1e-12);
            }
        }
    }

    #[test]
    fn phi_minimum_closed_form_example() {
        let p = PhiParams::from_sums(1.0, 2.0);
        assert_eq!(p.minimum(), 1.0);
        let grid = (0..=100_000).map(|i| p.eval(i as f64 / 100_000.0)).fold(f64::INFINITY, f64::min);
        assert!((grid - p.minimum()).abs() < 1e-6);
    }

    fn valid_params() -> impl Strategy<Value = PhiParams> {
        prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64, any::<bool>()), 1..6).prop_map(|v| {
            let beta = v.iter().map(|x| x.0).collect();
            let eta: Vec<f64> = v.iter().map(|x| x.1).collect();
            let chi = v
                .iter()
                .map(|x| {
                    let c = (1.0 - x.1 * x.1).sqrt();
                    if x.2 { c } else { -c }
                })
                .collect();
            PhiParams::new(beta, eta, chi).unwrap()
        })
    }

    proptest! {
        #[test]
        fn phi_sum_inequality(p in valid_params()) {
            let b = p.beta_l1();
            prop_assert!(p.d + 1e-12 >= b);
            prop_assert!(p.d * p.d - p.c * p.c + 1e-9 >= b * b);
        }

        #[test]
        fn phi_minimum_matches_grid(p in valid_params()) {
            // Uniform in θ with η = sin θ, where φ has slope at most 1 + |C| + D.
            let n = 20_000;
            let step = std::f64::consts::FRAC_PI_2 / n as f64;
            let grid = (0..=n).map(|i| p.eval((i as f64 * step).sin())).fold(f64::INFINITY, f64::min);
            let slope = 1.0 + p.c.abs() + p.d;
            prop_assert!(p.minimum() <= grid + 1e-12);
            prop_assert!(grid - p.minimum() <= slope * step);
        }

        #[test]
        fn phi_lower_bound_for_nonpositive_c(p in valid_params()) {
            prop_assume!(p.c <= 0.0);
            for i in 0..=1000 {
                let eta = i as f64 / 1000.0;
                prop_assert!(p.eval(eta) >= p.lower_bound(eta) - 1e-12);
            }
        }
    }
}
