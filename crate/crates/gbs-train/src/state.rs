//! Physical-state layer: validity of A-matrices, the WAW weight
//! parametrization, per-mode photon and click moments, normalization, and
//! rescaling a matrix to a target mean photon or click count.
//!
//! A symmetric matrix `A` encodes a pure Gaussian state iff its singular
//! values lie in `[0, 1)`. [`AMatrix`] enforces that invariant at
//! construction (with margin [`PHYSICALITY_MARGIN`]) and caches the
//! eigendecomposition, so moments and normalization are cheap closed forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{swap_matrix, sym_eigendecomposition, SymMatrix};

/// Strict margin below 1 required of every singular value (keeps
/// `I - A^2` numerically invertible).
pub const PHYSICALITY_MARGIN: f64 = 1e-9;

/// Outcome of a physicality check.
#[derive(Clone, Copy, Debug)]
pub struct Validity {
    pub valid: bool,
    pub max_singular_value: f64,
}

/// Checks whether a symmetric matrix encodes a physical pure Gaussian state:
/// every singular value (= eigenvalue magnitude) below `1 - PHYSICALITY_MARGIN`.
pub fn validate(mat: &SymMatrix) -> Result<Validity> {
    let (vals, _) = sym_eigendecomposition(mat)?;
    let max_sv = vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    Ok(Validity {
        valid: max_sv < 1.0 - PHYSICALITY_MARGIN,
        max_singular_value: max_sv,
    })
}

/// A validated pure-state GBS kernel matrix with cached spectrum.
#[derive(Clone, Debug)]
pub struct AMatrix {
    mat: SymMatrix,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
}

impl AMatrix {
    pub fn new(mat: SymMatrix) -> Result<Self> {
        let (eigvals, eigvecs) = sym_eigendecomposition(&mat)?;
        let max_sv = eigvals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if max_sv >= 1.0 - PHYSICALITY_MARGIN {
            return Err(Error::UnphysicalState {
                max_singular_value: max_sv,
                bound: 1.0 - PHYSICALITY_MARGIN,
            });
        }
        Ok(Self {
            mat,
            eigvals,
            eigvecs,
        })
    }

    /// The vacuum state on `m` modes.
    pub fn zero(m: usize) -> Self {
        Self {
            mat: SymMatrix::zeros(m),
            eigvals: DVector::zeros(m),
            eigvecs: DMatrix::identity(m, m),
        }
    }

    pub fn modes(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn max_singular_value(&self) -> f64 {
        self.eigvals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }

    /// Per-mode mean photon numbers `<n_k> = [A^2 (I - A^2)^-1]_kk`.
    pub fn mean_photon_modes(&self) -> Vec<f64> {
        let m = self.modes();
        let mut out = vec![0.0; m];
        for k in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                let u = self.eigvecs[(k, j)];
                let l2 = self.eigvals[j] * self.eigvals[j];
                acc += u * u * l2 / (1.0 - l2);
            }
            out[k] = acc;
        }
        out
    }

    /// Total mean photon number, `sum_i lambda_i^2 / (1 - lambda_i^2)`.
    pub fn total_mean_photons(&self) -> f64 {
        self.eigvals
            .iter()
            .map(|&l| l * l / (1.0 - l * l))
            .sum()
    }

    /// Per-mode click probabilities `<x_k> = 1 - 1/sqrt(det Q^(k))`, where
    /// `Q^(k)` keeps rows/columns `(k, k+m)` of `Q = (I - X calA)^-1`.
    pub fn click_probs(&self) -> Vec<f64> {
        let m = self.modes();
        let mut out = vec![0.0; m];
        for k in 0..m {
            let mut b = 0.0; // [(I - A^2)^-1]_kk
            let mut c = 0.0; // [A (I - A^2)^-1]_kk
            for j in 0..m {
                let u2 = self.eigvecs[(k, j)] * self.eigvecs[(k, j)];
                let l = self.eigvals[j];
                b += u2 / (1.0 - l * l);
                c += u2 * l / (1.0 - l * l);
            }
            out[k] = 1.0 - 1.0 / (b * b - c * c).sqrt();
        }
        out
    }

    pub fn total_mean_clicks(&self) -> f64 {
        self.click_probs().iter().sum()
    }

    /// `1/Z = sqrt(det(I - A^2))`, which is also the vacuum probability.
    pub fn normalization(&self) -> f64 {
        self.eigvals
            .iter()
            .map(|&l| (1.0 - l * l).sqrt())
            .product()
    }
}

/// Trainable diagonal weights for the `W A W` parametrization.
///
/// Two modes exist. `Direct` stores the weights themselves (clipped into
/// `[0, 1]` at construction); `Reparam` derives them as
/// `w_k = exp(-theta . f^(k))` from parameters `theta` and fixed feature
/// vectors. Reparametrized weights stay in `[0, 1]` whenever
/// `theta . f^(k) >= 0`; construction does not force that, because both
/// trainers transiently step through `w_k > 1` (physicality is checked where
/// a state is actually built, in [`apply_waw`]).
#[derive(Clone, Debug)]
pub enum WawParams {
    Direct { weights: Vec<f64> },
    Reparam {
        theta: DVector<f64>,
        features: Vec<DVector<f64>>,
    },
}

impl WawParams {
    /// Direct weights, clipped into `[0, 1]`.
    pub fn direct(weights: Vec<f64>) -> Self {
        let weights = weights.into_iter().map(|w| w.clamp(0.0, 1.0)).collect();
        WawParams::Direct { weights }
    }

    /// Direct weights taken as-is (trainer internals; may leave `[0, 1]`).
    pub fn direct_unclipped(weights: Vec<f64>) -> Self {
        WawParams::Direct { weights }
    }

    /// `w_k = exp(-theta . f^(k))` with explicit feature vectors.
    pub fn reparam(theta: DVector<f64>, features: Vec<DVector<f64>>) -> Result<Self> {
        let d = theta.len();
        for f in &features {
            if f.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: f.len(),
                });
            }
        }
        Ok(WawParams::Reparam { theta, features })
    }

    /// Reparametrized with the standard basis, `f^(k)_l = delta_kl`, so
    /// `w_k = exp(-theta_k)`.
    pub fn basis_reparam(theta: Vec<f64>) -> Self {
        let d = theta.len();
        let features = (0..d)
            .map(|k| DVector::from_fn(d, |l, _| if l == k { 1.0 } else { 0.0 }))
            .collect();
        WawParams::Reparam {
            theta: DVector::from_vec(theta),
            features,
        }
    }

    /// All weights one (`W = I`).
    pub fn identity(m: usize) -> Self {
        WawParams::Direct {
            weights: vec![1.0; m],
        }
    }

    /// Number of modes the weights act on.
    pub fn mode_count(&self) -> usize {
        match self {
            WawParams::Direct { weights } => weights.len(),
            WawParams::Reparam { features, .. } => features.len(),
        }
    }

    /// Dimension of the trainable parameter vector (m for direct weights,
    /// d for reparametrized ones).
    pub fn param_dim(&self) -> usize {
        match self {
            WawParams::Direct { weights } => weights.len(),
            WawParams::Reparam { theta, .. } => theta.len(),
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        match self {
            WawParams::Direct { weights } => weights.clone(),
            WawParams::Reparam { theta, features } => features
                .iter()
                .map(|f| (-theta.dot(f)).exp())
                .collect(),
        }
    }

    pub fn theta(&self) -> Option<&DVector<f64>> {
        match self {
            WawParams::Direct { .. } => None,
            WawParams::Reparam { theta, .. } => Some(theta),
        }
    }

    pub fn features(&self) -> Option<&[DVector<f64>]> {
        match self {
            WawParams::Direct { .. } => None,
            WawParams::Reparam { features, .. } => Some(features),
        }
    }

    /// Same parametrization with a new `theta` (reparam mode only).
    pub fn with_theta(&self, theta: DVector<f64>) -> Result<Self> {
        match self {
            WawParams::Direct { .. } => Err(Error::NotReparametrized),
            WawParams::Reparam { features, .. } => {
                WawParams::reparam(theta, features.clone())
            }
        }
    }

    /// Columns of `d log w_k / d params` (`param_dim x m` matrix).
    ///
    /// Direct mode gives `e_k / w_k`; reparam mode gives `-f^(k)`. Weights
    /// below `w_min` are clamped for the division and the clamp is flagged.
    pub fn dlog_w(&self, w_min: f64) -> (DMatrix<f64>, bool) {
        match self {
            WawParams::Direct { weights } => {
                let m = weights.len();
                let mut clamped = false;
                let mut mat = DMatrix::zeros(m, m);
                for (k, &w) in weights.iter().enumerate() {
                    let w = if w < w_min {
                        clamped = true;
                        w_min
                    } else {
                        w
                    };
                    mat[(k, k)] = 1.0 / w;
                }
                (mat, clamped)
            }
            WawParams::Reparam { theta, features } => {
                let d = theta.len();
                let m = features.len();
                let mut mat = DMatrix::zeros(d, m);
                for (k, f) in features.iter().enumerate() {
                    for l in 0..d {
                        mat[(l, k)] = -f[l];
                    }
                }
                (mat, false)
            }
        }
    }
}

/// The raw product `W A W` with `W = diag(sqrt(w_k))`, i.e.
/// `(W A W)_ij = sqrt(w_i w_j) A_ij`, without any physicality check.
pub fn waw_product(mat: &SymMatrix, weights: &[f64]) -> Result<SymMatrix> {
    if weights.len() != mat.dim() {
        return Err(Error::DimensionMismatch {
            expected: mat.dim(),
            got: weights.len(),
        });
    }
    let roots: Vec<f64> = weights.iter().map(|&w| w.max(0.0).sqrt()).collect();
    Ok(SymMatrix::from_fn(mat.dim(), |i, j| {
        roots[i] * roots[j] * mat[(i, j)]
    }))
}

/// Applies the WAW parametrization to a valid state. The result is valid
/// whenever all weights lie in `[0, 1]`; outside that range validity is
/// re-checked and an error raised if lost.
pub fn apply_waw(a: &AMatrix, p: &WawParams) -> Result<AMatrix> {
    if p.mode_count() != a.modes() {
        return Err(Error::DimensionMismatch {
            expected: a.modes(),
            got: p.mode_count(),
        });
    }
    AMatrix::new(waw_product(a.matrix(), &p.weights())?)
}

/// Which moment a rescale targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RescaleMetric {
    MeanPhotons,
    MeanClicks,
}

/// Absolute tolerance on the achieved target after rescaling.
pub const RESCALE_TOL: f64 = 1e-8;
const RESCALE_MAX_ITERS: usize = 60;

/// Finds `c` such that `c * mat` has the requested total mean photon or
/// click count, by bisection on `c` in `[0, (1 - margin) / sigma_max]`.
///
/// The input need not be physical on its own (adjacency matrices and raw
/// `W A W` products usually are not); the output always is.
pub fn rescale_to_target(
    mat: &SymMatrix,
    target: f64,
    metric: RescaleMetric,
) -> Result<(AMatrix, f64)> {
    if target < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "rescale target must be non-negative, got {target}"
        )));
    }
    if mat.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let (vals, vecs) = sym_eigendecomposition(mat)?;
    let sigma_max = vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let c_hi = (1.0 - PHYSICALITY_MARGIN) / sigma_max;

    // Row weights |U_kj|^2 are needed only for the click metric.
    let m = mat.dim();
    let metric_at = |c: f64| -> f64 {
        match metric {
            RescaleMetric::MeanPhotons => vals
                .iter()
                .map(|&l| {
                    let s = (c * l) * (c * l);
                    s / (1.0 - s)
                })
                .sum(),
            RescaleMetric::MeanClicks => {
                let mut total = 0.0;
                for k in 0..m {
                    let mut b = 0.0;
                    let mut cc = 0.0;
                    for j in 0..m {
                        let u2 = vecs[(k, j)] * vecs[(k, j)];
                        let l = c * vals[j];
                        b += u2 / (1.0 - l * l);
                        cc += u2 * l / (1.0 - l * l);
                    }
                    total += 1.0 - 1.0 / (b * b - cc * cc).sqrt();
                }
                total
            }
        }
    };

    if target == 0.0 {
        return Ok((AMatrix::zero(m), 0.0));
    }
    let max_achievable = metric_at(c_hi);
    if max_achievable < target {
        return Err(Error::TargetUnreachable {
            target,
            max_achievable,
        });
    }

    let mut lo = 0.0;
    let mut hi = c_hi;
    let mut c = 0.5 * (lo + hi);
    for _ in 0..RESCALE_MAX_ITERS {
        let v = metric_at(c);
        if (v - target).abs() <= RESCALE_TOL {
            break;
        }
        if v < target {
            lo = c;
        } else {
            hi = c;
        }
        c = 0.5 * (lo + hi);
    }
    let residual = (metric_at(c) - target).abs();
    if residual > RESCALE_TOL {
        return Err(Error::RescaleUnconverged { residual });
    }
    let a = AMatrix::new(mat.scaled(c))?;
    Ok((a, c))
}

/// The doubled-mode matrices of a pure state: `calA = A (+) A`, the swap
/// matrix `X`, `Q = (I - X calA)^-1`, and the covariance matrix `V`
/// (in the convention fixed by `Q = V + I/2`).
#[derive(Clone, Debug)]
pub struct GaussianViews {
    pub cal_a: SymMatrix,
    pub x: SymMatrix,
    pub q: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl GaussianViews {
    pub fn new(a: &AMatrix) -> Self {
        let m = a.modes();
        let q = build_q(a);
        let v = &q - DMatrix::<f64>::identity(2 * m, 2 * m) * 0.5;
        let cal_a = SymMatrix::from_fn(2 * m, |i, j| {
            let (bi, bj) = (i / m, j / m);
            if bi == bj {
                a.matrix()[(i % m, j % m)]
            } else {
                0.0
            }
        });
        Self {
            cal_a,
            x: swap_matrix(m),
            q,
            v,
        }
    }
}

/// `Q = (I - X calA)^-1 = [[B, C], [C, B]]` with `B = (I - A^2)^-1`,
/// `C = A (I - A^2)^-1`, built from the cached spectrum.
pub(crate) fn build_q(a: &AMatrix) -> DMatrix<f64> {
    let m = a.modes();
    let vals = a.eigenvalues();
    let vecs = {
        // Recompute eigenvectors alongside values via the stored pair.
        // AMatrix keeps them privately; reach through the accessor below.
        a.eigvecs_ref()
    };
    let mut b = DMatrix::zeros(m, m);
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut bij = 0.0;
            let mut cij = 0.0;
            for t in 0..m {
                let u = vecs[(i, t)] * vecs[(j, t)];
                let l = vals[t];
                bij += u / (1.0 - l * l);
                cij += u * l / (1.0 - l * l);
            }
            b[(i, j)] = bij;
            c[(i, j)] = cij;
        }
    }
    let mut q = DMatrix::zeros(2 * m, 2 * m);
    q.view_mut((0, 0), (m, m)).copy_from(&b);
    q.view_mut((m, m), (m, m)).copy_from(&b);
    q.view_mut((0, m), (m, m)).copy_from(&c);
    q.view_mut((m, 0), (m, m)).copy_from(&c);
    q
}

impl AMatrix {
    pub(crate) fn eigvecs_ref(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }
}
