//! Basis pursuit at toy scale: null-space checks decided exactly by extreme-ray
//! enumeration, and an exact ℓ1 minimizer by vertex enumeration.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::greedy::SupportSet;
use crate::linalg::{columns_independent, select_columns, Matrix, Qr, Vector, TAU_NUM, TAU_RANK};

/// Largest null-space dimension handled by the cone checks.
pub const MAX_NULL_DIM: usize = 3;
/// Largest support for the sign-pattern enumeration.
pub const MAX_PATTERN_SUPPORT: usize = 20;
/// Largest dictionary handled by [`l1_min`].
pub const MAX_L1_ATOMS: usize = 12;
/// Values within this distance of 0 do not decide a strict inequality.
pub const STRICT_THRESHOLD: f64 = 1e-10;
/// Relative ℓ1 gap under which two basic solutions tie.
pub const L1_TIE: f64 = 1e-9;

/// Orthonormal basis `V` (n × d) of `{x : Ax = 0}`.
#[derive(Clone, Debug)]
pub struct NullSpaceBasis {
    pub basis: Matrix,
}

impl NullSpaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

fn project_out(v: &mut Vector, basis: &[Vector]) {
    for _ in 0..2 {
        for u in basis {
            let d = u.dot(v);
            v.axpy(-d, u, 1.0);
        }
    }
}

/// Orthonormalizes the rows of `A`, then completes them to a basis of `R^n`
/// with the canonical vectors that keep the largest residual; the completion
/// spans the null space.
pub fn null_space_basis(a: &Matrix) -> NullSpaceBasis {
    let n = a.ncols();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut rows: Vec<Vector> = Vec::new();
    for r in a.row_iter() {
        let mut v = r.transpose().into_owned();
        project_out(&mut v, &rows);
        let norm = v.norm();
        if norm > TAU_RANK * scale {
            rows.push(v / norm);
        }
    }
    let rank = rows.len();
    let mut complement: Vec<Vector> = Vec::new();
    let mut all = rows;
    while all.len() < n {
        let best = (0..n)
            .map(|i| {
                let mut e = Vector::zeros(n);
                e[i] = 1.0;
                project_out(&mut e, &all);
                e
            })
            .max_by(|x, y| x.norm().total_cmp(&y.norm()))
            .expect("n > 0");
        let v = best.normalize();
        complement.push(v.clone());
        all.push(v);
    }
    debug_assert_eq!(complement.len(), n - rank);
    let basis = if complement.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&complement)
    };
    NullSpaceBasis { basis }
}

/// Unit directions in `R^d` containing every extreme ray of every cell of the
/// hyperplane arrangement `{w : ⟨v_i, w⟩ = 0}`, `v_i` the rows of `V`.
fn candidate_directions(v: &Matrix) -> Result<Vec<Vector>> {
    let d = v.ncols();
    let rows: Vec<Vector> = v
        .row_iter()
        .map(|r| r.transpose().into_owned())
        .filter(|r| r.norm() > 1e-12)
        .collect();
    let mut dirs: Vec<Vector> = Vec::new();
    let mut push = |w: Vector| {
        let norm = w.norm();
        if norm > 1e-12 {
            let w = w / norm;
            dirs.push(-&w);
            dirs.push(w);
        }
    };
    match d {
        1 => push(Vector::from_element(1, 1.0)),
        2 => {
            for r in &rows {
                push(Vector::from_vec(vec![-r[1], r[0]]));
            }
        }
        3 => {
            for (p, q) in rows.iter().tuple_combinations() {
                let (pn, qn) = (p.norm(), q.norm());
                let c = p.cross(q);
                if c.norm() > 1e-12 * pn * qn {
                    push(c);
                }
            }
        }
        _ => return Err(Error::DimensionTooLarge { dim: d, max: MAX_NULL_DIM }),
    }
    Ok(dirs)
}

/// Maximum of `g` over candidate null-space directions with its argmax.
fn ray_maximum(basis: &NullSpaceBasis, g: impl Fn(&Vector) -> f64) -> Result<(f64, Vector)> {
    let dirs = candidate_directions(&basis.basis)?;
    let mut best: Option<(f64, Vector)> = None;
    for w in dirs {
        let x = &basis.basis * w;
        let val = g(&x);
        if best.as_ref().is_none_or(|b| val > b.0) {
            best = Some((val, x));
        }
    }
    best.ok_or_else(|| invalid("null space has no candidate directions"))
}

fn check_dim(basis: &NullSpaceBasis) -> Result<()> {
    if basis.dim() > MAX_NULL_DIM {
        return Err(Error::DimensionTooLarge {
            dim: basis.dim(),
            max: MAX_NULL_DIM,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    True,
    False,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize)]
pub struct NspReport {
    pub holds: bool,
    /// The extreme-ray maximum is within `STRICT_THRESHOLD` of 0, so the
    /// strict inequality fails only at the boundary.
    pub boundary: bool,
    /// Largest `Σ_{Q*}|x_i| - Σ_{∉Q*}|x_i|` over unit extreme rays; absent when `N(A) = {0}`.
    pub ray_maximum: Option<f64>,
    pub null_dim: usize,
    pub witness: Option<Vec<f64>>,
}

/// On-support ℓ1 mass strictly below off-support mass on `N(A) \ {0}`.
pub fn nsp_check(a: &Matrix, qstar: &[usize]) -> Result<NspReport> {
    let support = SupportSet::new(qstar.to_vec(), a.ncols())?;
    let basis = null_space_basis(a);
    check_dim(&basis)?;
    if basis.dim() == 0 {
        return Ok(NspReport {
            holds: true,
            boundary: false,
            ray_maximum: None,
            null_dim: 0,
            witness: None,
        });
    }
    let (max, x) = ray_maximum(&basis, |x| {
        x.iter()
            .enumerate()
            .map(|(i, v)| if support.contains(i) { v.abs() } else { -v.abs() })
            .sum()
    })?;
    let holds = max < -STRICT_THRESHOLD;
    Ok(NspReport {
        holds,
        boundary: max.abs() <= STRICT_THRESHOLD,
        ray_maximum: Some(max),
        null_dim: basis.dim(),
        witness: (!holds).then(|| x.iter().copied().collect()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternReport {
    /// Signs on the support, in support order.
    pub signs: Vec<i8>,
    /// Whether some null-space `x` has `Σ ε_i x_i > Σ_{∉Q*} |x_j|`.
    pub feasible: Verdict,
    pub ray_maximum: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BrcBpReport {
    pub verdict: Verdict,
    pub null_dim: usize,
    pub patterns: Vec<PatternReport>,
}

fn classify(max: f64) -> Verdict {
    if max > STRICT_THRESHOLD {
        Verdict::True
    } else if max < -STRICT_THRESHOLD {
        Verdict::False
    } else {
        Verdict::Indeterminate
    }
}

/// Bad recovery condition for basis pursuit: every sign pattern on `Q*` is
/// beaten by some null-space direction, so no vector supported on `Q*` is the
/// unique ℓ1 minimizer.
///
/// Patterns come in pairs `±ε` with mirrored witnesses; only `ε_0 = +1` is
/// evaluated.
pub fn brc_bp_check(a: &Matrix, qstar: &[usize]) -> Result<BrcBpReport> {
    let support = SupportSet::new(qstar.to_vec(), a.ncols())?;
    let k = support.len();
    if k == 0 || k > MAX_PATTERN_SUPPORT {
        return Err(invalid(format!("support size must lie in 1..={MAX_PATTERN_SUPPORT}")));
    }
    let basis = null_space_basis(a);
    check_dim(&basis)?;
    if basis.dim() == 0 {
        return Ok(BrcBpReport {
            verdict: Verdict::False,
            null_dim: 0,
            patterns: Vec::new(),
        });
    }
    let mut patterns = Vec::with_capacity(1 << k);
    for mask in 0..(1u32 << (k - 1)) {
        let signs: Vec<i8> = (0..k)
            .map(|b| if b > 0 && mask >> (b - 1) & 1 == 1 { -1 } else { 1 })
            .collect();
        let (max, x) = ray_maximum(&basis, |x| {
            let mut pos = 0;
            let mut acc = 0.0;
            for (i, v) in x.iter().enumerate() {
                if support.contains(i) {
                    acc += f64::from(signs[pos]) * v;
                    pos += 1;
                } else {
                    acc -= v.abs();
                }
            }
            acc
        })?;
        let feasible = classify(max);
        let witness = (feasible == Verdict::True).then(|| x.iter().copied().collect::<Vec<_>>());
        patterns.push(PatternReport {
            signs: signs.iter().map(|s| -s).collect(),
            feasible,
            ray_maximum: max,
            witness: witness.as_ref().map(|w| w.iter().map(|v| -v).collect()),
        });
        patterns.push(PatternReport {
            signs,
            feasible,
            ray_maximum: max,
            witness,
        });
    }
    patterns.sort_by(|p, q| p.signs.cmp(&q.signs).reverse());
    let verdict = if patterns.iter().any(|p| p.feasible == Verdict::False) {
        Verdict::False
    } else if patterns.iter().all(|p| p.feasible == Verdict::True) {
        Verdict::True
    } else {
        Verdict::Indeterminate
    };
    Ok(BrcBpReport {
        verdict,
        null_dim: basis.dim(),
        patterns,
    })
}

fn rank(a: &Matrix) -> usize {
    let mut chosen: Vec<usize> = Vec::new();
    for j in 0..a.ncols() {
        chosen.push(j);
        if !columns_independent(a, &chosen) {
            chosen.pop();
        }
    }
    chosen.len()
}

/// Every minimizer of `‖x‖₁` subject to `Ax = y` that is a basic solution,
/// ties within relative gap `L1_TIE` included.
pub fn l1_min(a: &Matrix, y: &Vector) -> Result<Vec<Vector>> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(invalid(format!("right-hand side has {} entries, expected {m}", y.len())));
    }
    if n > MAX_L1_ATOMS {
        return Err(Error::TooLarge {
            what: "vertex enumeration",
            count: n as u128,
            budget: MAX_L1_ATOMS as u128,
        });
    }
    let r = rank(a);
    let tol = TAU_NUM * y.norm().max(1.0);
    let mut solutions: Vec<(f64, Vector)> = Vec::new();
    if r == 0 {
        if y.norm() <= tol {
            return Ok(vec![Vector::zeros(n)]);
        }
        return Err(Error::Infeasible);
    }
    for cols in (0..n).combinations(r) {
        let sub = select_columns(a, &cols);
        let Ok(qr) = Qr::new(&sub) else { continue };
        let coef = qr.solve(y);
        if (&sub * &coef - y).norm() > tol {
            continue;
        }
        let mut x = Vector::zeros(n);
        for (&c, v) in cols.iter().zip(coef.iter()) {
            x[c] = *v;
        }
        solutions.push((x.lp_norm(1), x));
    }
    let best = solutions
        .iter()
        .map(|s| s.0)
        .min_by(f64::total_cmp)
        .ok_or(Error::Infeasible)?;
    let mut out: Vec<Vector> = Vec::new();
    for (norm, x) in solutions {
        if norm > best + L1_TIE * best.max(1e-300) {
            continue;
        }
        let scale = 1.0 + x.amax();
        if !out.iter().any(|o| (o - &x).amax() <= L1_TIE * scale) {
            out.push(x);
        }
    }
    Ok(out)
}

/// `x*` is the unique ℓ1 minimizer for `y = A x*`.
pub fn l1_recovers(a: &Matrix, x_star: &Vector) -> Result<bool> {
    let y = a * x_star;
    let sols = l1_min(a, &y)?;
    let scale = 1.0 + x_star.amax();
    Ok(sols.len() == 1 && (&sols[0] - x_star).amax() <= 1e-7 * scale)
}
