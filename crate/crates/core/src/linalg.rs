//! Dense linear algebra shared by the greedy engines and the certificates.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, stored column-major, so atom access
//! is a contiguous slice. All orthogonalization is modified Gram-Schmidt with
//! one reorthogonalization pass.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Equality checks.
pub const TAU_NUM: f64 = 1e-9;
/// Orthogonalized column norms below this are rank deficient.
pub const TAU_RANK: f64 = 1e-8;
/// Projected atoms with norms below this are treated as zero.
pub const TAU_ZERO: f64 = 1e-10;
/// Orthonormality of stored bases.
pub const TAU_ORTH: f64 = 1e-9;

/// Subset budget for [`compute_spark`].
pub const SPARK_BUDGET: u128 = 10_000_000;

/// Removes from `v` its components along the orthonormal `basis`, twice.
fn orthogonalize(v: &mut Vector, basis: &[Vector]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, u) in coeffs.iter_mut().zip(basis) {
            let d = u.dot(v);
            v.axpy(-d, u, 1.0);
            *c += d;
        }
    }
    coeffs
}

/// Thin QR factorization `X = Q R` by modified Gram-Schmidt.
#[derive(Clone, Debug)]
pub struct Qr {
    q: Vec<Vector>,
    r: Matrix,
}

impl Qr {
    /// Fails with `RankDeficient` when an orthogonalized column norm drops below `TAU_RANK`.
    pub fn new(x: &Matrix) -> Result<Self> {
        let p = x.ncols();
        let mut q: Vec<Vector> = Vec::with_capacity(p);
        let mut r = Matrix::zeros(p, p);
        for j in 0..p {
            let mut v = x.column(j).into_owned();
            let coeffs = orthogonalize(&mut v, &q);
            for (i, c) in coeffs.into_iter().enumerate() {
                r[(i, j)] = c;
            }
            let norm = v.norm();
            if norm < TAU_RANK {
                return Err(Error::RankDeficient { column: j, norm });
            }
            r[(j, j)] = norm;
            q.push(v / norm);
        }
        Ok(Self { q, r })
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[Vector] {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    /// Least-squares solution of `X c = y`.
    pub fn solve(&self, y: &Vector) -> Vector {
        let p = self.q.len();
        let mut rhs = y.clone();
        let mut b = orthogonalize(&mut rhs, &self.q);
        for i in (0..p).rev() {
            let tail: f64 = (i + 1..p).map(|j| self.r[(i, j)] * b[j]).sum();
            b[i] = (b[i] - tail) / self.r[(i, i)];
        }
        Vector::from_vec(b)
    }
}

/// Least-squares coefficients of `y` on the columns of `a_q`.
pub fn least_squares(a_q: &Matrix, y: &Vector) -> Result<Vector> {
    if a_q.nrows() != y.len() {
        return Err(invalid(format!(
            "matrix has {} rows but vector has {} entries",
            a_q.nrows(),
            y.len()
        )));
    }
    Ok(Qr::new(a_q)?.solve(y))
}

/// Matrix made of the listed columns of `a`, in order.
pub fn select_columns(a: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

/// One extension `Q -> Q ∪ {atom}`.
///
/// `eta[i] = ‖ã_i'‖ / ‖ã_i‖` and `chi[i] = ⟨b̃_i, b̃_atom⟩`, both taken before
/// the extension. Entries whose projected atom was already zero are 0.
#[derive(Clone, Debug, Serialize)]
pub struct Extension {
    pub atom: usize,
    pub eta: Vec<f64>,
    pub chi: Vec<f64>,
}

/// Incremental orthonormal basis of `span(A_Q)` with every projected atom
/// `ã_i = P⊥_Q a_i` cached.
///
/// Invariants: basis columns orthonormal within `TAU_ORTH`; `‖ã_i‖ = 0` for
/// `i ∈ Q`; `‖ã_i‖ ≤ 1` for all `i`.
#[derive(Clone, Debug)]
pub struct ProjectionState<'a> {
    atoms: &'a Matrix,
    active: Vec<usize>,
    in_active: Vec<bool>,
    basis: Vec<Vector>,
    projected: Matrix,
    norms: Vec<f64>,
    history: Vec<Extension>,
}

impl<'a> ProjectionState<'a> {
    /// State for `Q = ∅`. Atoms must have unit norm within `TAU_NUM`.
    pub fn new(atoms: &'a Matrix) -> Result<Self> {
        let n = atoms.ncols();
        let mut norms = Vec::with_capacity(n);
        for (column, a) in atoms.column_iter().enumerate() {
            let norm = a.norm();
            if norm.is_nan() || (norm - 1.0).abs() > TAU_NUM {
                return Err(Error::NotNormalized { column, norm });
            }
            norms.push(norm);
        }
        Ok(Self {
            atoms,
            active: Vec::new(),
            in_active: vec![false; n],
            basis: Vec::new(),
            projected: atoms.clone(),
            norms,
            history: Vec::new(),
        })
    }

    /// State reached by extending `∅` with `atoms_in_order`.
    pub fn with_active(atoms: &'a Matrix, atoms_in_order: &[usize]) -> Result<Self> {
        atoms_in_order
            .iter()
            .try_fold(Self::new(atoms)?, |s, &l| s.extend(l))
    }

    /// Returns the state for `Q ∪ {l}`.
    pub fn extend(mut self, l: usize) -> Result<Self> {
        let n = self.atoms.ncols();
        if l >= n {
            return Err(invalid(format!("atom {l} out of range 0..{n}")));
        }
        if self.in_active[l] {
            return Err(invalid(format!("atom {l} is already active")));
        }
        let norm_l = self.norms[l];
        if norm_l <= TAU_RANK {
            return Err(Error::DegenerateAtom {
                atom: l,
                norm: norm_l,
            });
        }
        let mut u = self.projected.column(l) / norm_l;
        orthogonalize(&mut u, &self.basis);
        u /= u.norm();

        let mut eta = vec![0.0; n];
        let mut chi = vec![0.0; n];
        for i in 0..n {
            if self.in_active[i] || i == l {
                continue;
            }
            let old = self.norms[i];
            let mut col = self.projected.column_mut(i);
            let c1 = col.dot(&u);
            col.axpy(-c1, &u, 1.0);
            let c2 = col.dot(&u);
            col.axpy(-c2, &u, 1.0);
            let new = col.norm();
            if old > TAU_ZERO {
                eta[i] = new / old;
                chi[i] = c1 / old;
            }
            self.norms[i] = new;
        }
        eta[l] = 0.0;
        chi[l] = 1.0;
        self.projected.column_mut(l).fill(0.0);
        self.norms[l] = 0.0;
        self.in_active[l] = true;
        self.active.push(l);
        self.basis.push(u);
        self.history.push(Extension { atom: l, eta, chi });
        Ok(self)
    }

    pub fn atoms(&self) -> &'a Matrix {
        self.atoms
    }

    /// Active atoms in selection order.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.in_active[i]
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Basis as an `m × |Q|` matrix.
    pub fn basis_matrix(&self) -> Matrix {
        if self.basis.is_empty() {
            Matrix::zeros(self.atoms.nrows(), 0)
        } else {
            Matrix::from_columns(&self.basis)
        }
    }

    /// All projected atoms as columns.
    pub fn projected_atoms(&self) -> &Matrix {
        &self.projected
    }

    pub fn projected_atom(&self, i: usize) -> Vector {
        self.projected.column(i).into_owned()
    }

    /// `ã_i / ‖ã_i‖`, or zero when `‖ã_i‖ ≤ TAU_ZERO`.
    pub fn normalized_projected_atom(&self, i: usize) -> Vector {
        let norm = self.norms[i];
        if norm <= TAU_ZERO {
            Vector::zeros(self.atoms.nrows())
        } else {
            self.projected.column(i) / norm
        }
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn history(&self) -> &[Extension] {
        &self.history
    }

    /// `P⊥_Q y`.
    pub fn residual(&self, y: &Vector) -> Vector {
        let mut r = y.clone();
        orthogonalize(&mut r, &self.basis);
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "size", rename_all = "kebab-case")]
pub enum Spark {
    /// Smallest dependent subset size.
    Exact(usize),
    /// No dependent subset of size up to this bound.
    Exceeds(usize),
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Columns whose Gram-Schmidt residual stays above `TAU_RANK` relative to their norm.
pub(crate) fn columns_independent(a: &Matrix, cols: &[usize]) -> bool {
    let mut basis: Vec<Vector> = Vec::with_capacity(cols.len());
    for &c in cols {
        let mut v = a.column(c).into_owned();
        let scale = v.norm();
        orthogonalize(&mut v, &basis);
        let norm = v.norm();
        if scale == 0.0 || norm < TAU_RANK * scale {
            return false;
        }
        basis.push(v / norm);
    }
    true
}

/// Smallest number of linearly dependent columns, searched up to `max_size`.
pub fn compute_spark(a: &Matrix, max_size: usize) -> Result<Spark> {
    let (m, n) = a.shape();
    if max_size == 0 || max_size > m.min(n) + 1 {
        return Err(invalid(format!(
            "max_size must lie in 1..={}",
            m.min(n) + 1
        )));
    }
    let count = binomial(n, max_size);
    if count > SPARK_BUDGET {
        return Err(Error::TooLarge {
            what: "spark enumeration",
            count,
            budget: SPARK_BUDGET,
        });
    }
    for size in 1..=max_size {
        if (0..n)
            .combinations(size)
            .any(|s| !columns_independent(a, &s))
        {
            return Ok(Spark::Exact(size));
        }
    }
    Ok(Spark::Exceeds(max_size))
}
