//! Exact combinatorial linear-algebra kernels: hafnians, hafnian
//! directional derivatives, matrix reductions, and a symmetric
//! eigendecomposition wrapper used throughout the crate.
//!
//! The hafnian of a symmetric `2n x 2n` matrix is the sum over all perfect
//! matchings of `{1, ..., 2n}` of the product of matched entries. It is
//! computed here by a Laplace-like expansion on the first remaining row,
//! memoized over index subsets, which is exact and fast enough for the
//! desk-scale matrices (dim <= 20) this crate works with.

use std::collections::HashMap;
use std::ops::Index;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest entry asymmetry tolerated by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real symmetric matrix.
///
/// Construction validates symmetry and finiteness, then stores the exactly
/// symmetrized matrix `(M + M^T) / 2` so downstream algebra never sees
/// asymmetric rounding noise.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    mat: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let n = mat.nrows();
        for i in 0..n {
            for j in 0..n {
                if !mat[(i, j)].is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if j > i {
                    let dev = (mat[(i, j)] - mat[(j, i)]).abs();
                    if dev > SYMMETRY_TOL {
                        return Err(Error::NotSymmetric { i, j, dev });
                    }
                }
            }
        }
        Ok(Self::symmetrized(&mat))
    }

    /// Builds `(M + M^T) / 2` without a symmetry check. Panics on non-square input.
    pub fn symmetrized(mat: &DMatrix<f64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "symmetrized needs a square matrix");
        let sym = (mat + mat.transpose()) * 0.5;
        Self { mat: sym }
    }

    /// Builds a symmetric matrix from `f(i, j)`, evaluated once per unordered pair.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        Self { mat }
    }

    /// Builds from a row-major flat slice of length `dim * dim`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            mat: &self.mat * c,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mat.iter().all(|&v| v == 0.0)
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &SymMatrix) -> f64 {
        (&self.mat - &other.mat).norm()
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.mat[idx]
    }
}

/// The swap matrix `X = [[0, I], [I, 0]]` on `2m` indices.
pub fn swap_matrix(m: usize) -> SymMatrix {
    SymMatrix::from_fn(2 * m, |i, j| {
        if i + m == j || j + m == i {
            1.0
        } else {
            0.0
        }
    })
}

/// Row/column repetition counts defining a reduced matrix.
///
/// Entry `k` repeats the `k`-th row and column that many times (zero deletes
/// them); the reduced dimension is the sum of the counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionSpec {
    counts: Vec<u32>,
}

impl ReductionSpec {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Dimension of the reduced matrix.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Builds the reduced matrix `A_n`: row/column `i` repeated `counts[i]` times.
pub fn reduce_matrix(a: &SymMatrix, spec: &ReductionSpec) -> Result<SymMatrix> {
    if spec.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: spec.len(),
        });
    }
    let mut sources = Vec::with_capacity(spec.total() as usize);
    for (i, &c) in spec.counts().iter().enumerate() {
        for _ in 0..c {
            sources.push(i);
        }
    }
    let n = sources.len();
    let mut mat = DMatrix::zeros(n, n);
    for (r, &i) in sources.iter().enumerate() {
        for (c, &j) in sources.iter().enumerate() {
            mat[(r, c)] = a[(i, j)];
        }
    }
    Ok(SymMatrix { mat })
}

/// Hafnian by memoized Laplace expansion on the first remaining row.
///
/// The 0x0 matrix has hafnian 1; odd dimensions return 0, which makes
/// odd-total photon patterns of zero-mean Gaussian states carry zero
/// probability without special-casing callers.
pub fn hafnian(a: &SymMatrix) -> f64 {
    let n = a.dim();
    if n % 2 == 1 {
        return 0.0;
    }
    if n == 0 {
        return 1.0;
    }
    assert!(n <= 63, "hafnian index mask is limited to 63 indices");
    let full: u64 = if n == 63 { !0 >> 1 } else { (1u64 << n) - 1 };
    let mut memo: HashMap<u64, f64> = HashMap::new();
    haf_rec(full, a.matrix(), &mut memo)
}

fn haf_rec(mask: u64, a: &DMatrix<f64>, memo: &mut HashMap<u64, f64>) -> f64 {
    if mask == 0 {
        return 1.0;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let c = mask.trailing_zeros() as usize;
    let rest = mask & !(1u64 << c);
    let mut acc = 0.0;
    let mut jm = rest;
    while jm != 0 {
        let j = jm.trailing_zeros() as usize;
        jm &= jm - 1;
        let w = a[(c, j)];
        if w != 0.0 {
            acc += w * haf_rec(rest & !(1u64 << j), a, memo);
        }
    }
    memo.insert(mask, acc);
    acc
}

/// Budget for the perfect-matching enumeration oracle.
pub const HAFNIAN_ORACLE_MAX_DIM: usize = 12;

/// Reference hafnian: direct sum over all perfect matching permutations.
///
/// Exponentially slower than [`hafnian`]; kept as an independent oracle for
/// tests (dim <= 12).
pub fn hafnian_oracle(a: &SymMatrix) -> Result<f64> {
    let n = a.dim();
    if n > HAFNIAN_ORACLE_MAX_DIM {
        return Err(Error::BudgetExceeded {
            what: "hafnian oracle dimension",
            limit: HAFNIAN_ORACLE_MAX_DIM.to_string(),
        });
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let indices: Vec<usize> = (0..n).collect();
    Ok(pmp_sum(&indices, a.matrix()))
}

fn pmp_sum(remaining: &[usize], a: &DMatrix<f64>) -> f64 {
    if remaining.is_empty() {
        return 1.0;
    }
    let first = remaining[0];
    let mut acc = 0.0;
    for k in 1..remaining.len() {
        let partner = remaining[k];
        let rest: Vec<usize> = remaining[1..]
            .iter()
            .copied()
            .filter(|&x| x != partner)
            .collect();
        acc += a[(first, partner)] * pmp_sum(&rest, a);
    }
    acc
}

/// Directional derivative of the hafnian: `d/dt Haf(A + t dA)` at `t = 0`.
///
/// Equals the sum over unordered pairs `{i, j}`, `i != j`, of
/// `dA[i][j] * Haf(A with rows/columns i and j removed)`. Diagonal
/// perturbations contribute nothing, matching the gauge invariance of the
/// hafnian itself.
pub fn hafnian_gradient(a: &SymMatrix, da: &SymMatrix) -> Result<f64> {
    let n = a.dim();
    if da.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: da.dim(),
        });
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = da[(i, j)];
            if d == 0.0 {
                continue;
            }
            let mut counts = vec![1u32; n];
            counts[i] = 0;
            counts[j] = 0;
            let minor = reduce_matrix(a, &ReductionSpec::new(counts))?;
            acc += d * hafnian(&minor);
        }
    }
    Ok(acc)
}

/// Symmetric eigendecomposition `A = U diag(eigenvalues) U^T`.
///
/// Eigenvalues are returned in ascending order with the matching
/// eigenvector columns. Non-convergence surfaces as [`Error::EigenFailed`].
pub fn sym_eigendecomposition(a: &SymMatrix) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.dim();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let se = nalgebra::SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, 10_000)
        .ok_or(Error::EigenFailed)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}
