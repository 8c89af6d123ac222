//! Dense complex linear algebra and quantum-state primitives.
//!
//! Subsystem ordering follows the usual Kronecker convention: factor 0 is the
//! leftmost factor, so a computational basis index is read most-significant
//! digit first.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

/// Dense complex matrix. Comparisons go through [`approx_eq`].
pub type ComplexMatrix = DMatrix<Complex64>;

/// Absolute tolerance for Hermiticity, PSD and normalization checks.
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("trace {0} outside the allowed range")]
    BadTrace(f64),
    #[error("factor dimensions {dims:?} do not multiply to {dim}")]
    FactorMismatch { dims: Vec<usize>, dim: usize },
    #[error("invalid subsystem index set {0:?}")]
    InvalidSubsystems(Vec<usize>),
    #[error("operator dimension {got} does not match factor dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("POVM effects sum to identity only within {0:.3e}")]
    Incomplete(f64),
    #[error("measurement set is empty or has inconsistent settings")]
    InconsistentSettings,
}

pub type Result<T> = std::result::Result<T, QuantumError>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `a - b`; shapes must agree.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_diff(a, b) <= tol
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix. The input
/// is hermitized first so small asymmetries from arithmetic do not leak in.
///
/// Decoupled index blocks (connected components of the nonzero pattern) are
/// diagonalized separately. nalgebra's QR sweep can return NaN on matrices
/// with many exactly-zero couplings, such as block-sparse states padded into
/// a large tensor space; splitting them avoids that and is cheaper.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let h = hermitize(m);
    let n = h.nrows();
    let blocks = components(&h);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    let mut parts = Vec::with_capacity(blocks.len());
    for (b, idx) in blocks.iter().enumerate() {
        let sub = ComplexMatrix::from_fn(idx.len(), idx.len(), |r, q| h[(idx[r], idx[q])]);
        let (values, vectors) = block_eigen(&sub);
        for (k, v) in values.iter().enumerate() {
            pairs.push((*v, b, k));
        }
        parts.push(vectors);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &(_, b, k)) in pairs.iter().enumerate() {
        for (r, &row) in blocks[b].iter().enumerate() {
            vectors[(row, col)] = parts[b][(r, k)];
        }
    }
    (pairs.iter().map(|p| p.0).collect(), vectors)
}

/// Index sets of the connected components of the nonzero pattern, each
/// sorted, in order of their smallest index.
fn components(h: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for q in 0..n {
        for r in 0..q {
            if h[(r, q)] != Complex64::new(0.0, 0.0) {
                let (a, b) = (root(&mut parent, r), root(&mut parent, q));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

fn block_eigen(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    if h.nrows() == 1 {
        return (vec![h[(0, 0)].re], ComplexMatrix::identity(1, 1));
    }
    let eig = SymmetricEigen::new(h.clone());
    let finite = eig.eigenvalues.iter().all(|v| v.is_finite())
        && eig.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if !finite {
        return eigen_via_embedding(h);
    }
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Eigen-decomposition through the real matrix `[[A, −B], [B, A]]` of
/// `h = A + iB`. Every eigenvalue of `h` appears twice there, and `u + iv`
/// is an eigenvector of `h` whenever `(u, v)` is one of the embedding; an
/// SVD per eigenvalue cluster picks an orthonormal complex basis.
pub(crate) fn eigen_via_embedding(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = h.nrows();
    let e = DMatrix::<f64>::from_fn(2 * n, 2 * n, |r, q| {
        let z = h[(r % n, q % n)];
        match (r < n, q < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = SymmetricEigen::new(e);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let scale = lambda.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-9 * scale;
    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut i = 0;
    while i < 2 * n && values.len() < n {
        let mut j = i + 1;
        while j < 2 * n && lambda[j] - lambda[j - 1] <= tol {
            j += 1;
        }
        let w = ComplexMatrix::from_fn(n, j - i, |r, k| {
            let col = order[i + k];
            Complex64::new(eig.eigenvectors[(r, col)], eig.eigenvectors[(n + r, col)])
        });
        let u = w.svd(true, false).u.expect("left singular vectors requested");
        let k = (j - i).div_ceil(2).min(n - values.len());
        for q in 0..k {
            let v = u.column(q).into_owned();
            values.push((v.adjoint() * h * &v)[(0, 0)].re);
            vectors.set_column(values.len() - 1, &v);
        }
        i = j;
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

fn check_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(QuantumError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Checks Hermitian + PSD at [`STATE_TOL`].
pub fn check_psd(m: &ComplexMatrix) -> Result<()> {
    check_square(m)?;
    let herr = hermiticity_error(m);
    if herr > STATE_TOL {
        return Err(QuantumError::NotHermitian(herr));
    }
    let min = min_eigenvalue(m);
    if min.is_nan() || min < -STATE_TOL {
        return Err(QuantumError::NotPsd(min));
    }
    Ok(())
}

/// Standard Kronecker product; factor `a` is the left (more significant) one.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

/// Hermitian PSD square root via eigendecomposition. Eigenvalues in
/// `[-STATE_TOL, 0)` are clamped to zero.
pub fn psd_sqrt(f: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_psd(f)?;
    let (values, vectors) = hermitian_eigen(f);
    let roots: Vec<f64> = values.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let scaled = ComplexMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, k| {
        vectors[(r, k)] * roots[k]
    });
    Ok(hermitize(&(scaled * vectors.adjoint())))
}

/// Identity on every factor except `site`, which carries `op`.
pub fn embed_site_operator(
    op: &ComplexMatrix,
    site: usize,
    factor_dims: &[usize],
) -> Result<ComplexMatrix> {
    if site >= factor_dims.len() {
        return Err(QuantumError::InvalidSubsystems(vec![site]));
    }
    check_square(op)?;
    if op.nrows() != factor_dims[site] {
        return Err(QuantumError::DimMismatch {
            expected: factor_dims[site],
            got: op.nrows(),
        });
    }
    let before: usize = factor_dims[..site].iter().product();
    let after: usize = factor_dims[site + 1..].iter().product();
    Ok(kron(&kron(&identity(before), op), &identity(after)))
}

/// Partial trace of a square matrix with tensor structure `dims`, keeping the
/// factors listed in `keep` (in ascending factor order). Works for any
/// square operator, not only states.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix> {
    let dim = check_square(m)?;
    let total: usize = dims.iter().product();
    if total != dim {
        return Err(QuantumError::FactorMismatch {
            dims: dims.to_vec(),
            dim,
        });
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&k| k >= dims.len()) {
        return Err(QuantumError::InvalidSubsystems(keep.to_vec()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let env_dim: usize = traced_dims.iter().product();

    // strides of each factor in the full index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offset = |digits_of: &[usize], factors: &[usize], idx: usize| -> usize {
        let mut rem = idx;
        let mut off = 0;
        for (pos, &f) in factors.iter().enumerate().rev() {
            let d = digits_of[pos];
            off += (rem % d) * strides[f];
            rem /= d;
        }
        off
    };
    let kept_off: Vec<usize> = (0..out_dim).map(|i| offset(&kept_dims, &kept, i)).collect();
    let env_off: Vec<usize> = (0..env_dim)
        .map(|e| offset(&traced_dims, &traced, e))
        .collect();

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for i in 0..out_dim {
        for j in 0..out_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for &e in &env_off {
                acc += m[(kept_off[i] + e, kept_off[j] + e)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Hermitian PSD matrix with trace 1, or trace in `[0, 1]` when built as
/// subnormalized, together with its tensor-factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    factor_dims: Vec<usize>,
}

impl DensityMatrix {
    /// Normalized state. The matrix is hermitized after validation.
    pub fn new(matrix: ComplexMatrix, factor_dims: Vec<usize>) -> Result<Self> {
        let state = Self::subnormalized(matrix, factor_dims)?;
        let tr = state.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::BadTrace(tr));
        }
        Ok(state)
    }

    /// State with trace in `[0, 1]`.
    pub fn subnormalized(matrix: ComplexMatrix, factor_dims: Vec<usize>) -> Result<Self> {
        let dim = check_square(&matrix)?;
        if factor_dims.is_empty() || factor_dims.iter().product::<usize>() != dim {
            return Err(QuantumError::FactorMismatch {
                dims: factor_dims,
                dim,
            });
        }
        check_psd(&matrix)?;
        let matrix = hermitize(&matrix);
        let tr = trace(&matrix).re;
        if !(-STATE_TOL..=1.0 + STATE_TOL).contains(&tr) {
            return Err(QuantumError::BadTrace(tr));
        }
        Ok(Self {
            matrix,
            factor_dims,
        })
    }

    /// Skips validation; used for integrator output, which is re-hermitized
    /// but may carry PSD violations at the 1e-9 level.
    pub(crate) fn from_raw(matrix: ComplexMatrix, factor_dims: Vec<usize>) -> Self {
        Self {
            matrix: hermitize(&matrix),
            factor_dims,
        }
    }

    pub fn pure(amplitudes: &[Complex64], factor_dims: Vec<usize>) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        let m = &v * v.adjoint();
        Self::new(m, factor_dims)
    }

    /// Computational basis state; `digits[k]` is the level of factor `k`.
    pub fn basis_state(digits: &[usize], factor_dims: Vec<usize>) -> Result<Self> {
        if digits.len() != factor_dims.len() || digits.iter().zip(&factor_dims).any(|(d, n)| d >= n) {
            return Err(QuantumError::InvalidSubsystems(digits.to_vec()));
        }
        let dim: usize = factor_dims.iter().product();
        let idx = digits
            .iter()
            .zip(&factor_dims)
            .fold(0, |acc, (d, n)| acc * n + d);
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(idx, idx)] = c(1.0, 0.0);
        Self::new(m, factor_dims)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim).scale(1.0 / dim as f64),
            factor_dims: vec![dim],
        }
    }

    /// `ρ₁ ⊗ ρ₂ ⊗ …` with factor structures concatenated.
    pub fn product(parts: &[DensityMatrix]) -> Self {
        let matrix = kron_all(parts.iter().map(|p| &p.matrix));
        let factor_dims = parts.iter().flat_map(|p| p.factor_dims.clone()).collect();
        Self::from_raw(matrix, factor_dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.matrix * &self.matrix)).re
    }

    /// Same matrix, different tensor structure (product must match).
    pub fn with_factor_dims(self, factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.iter().product::<usize>() != self.dim() {
            return Err(QuantumError::FactorMismatch {
                dims: factor_dims,
                dim: self.dim(),
            });
        }
        Ok(Self {
            matrix: self.matrix,
            factor_dims,
        })
    }
}

/// Reduced state on the factors in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(&rho.matrix, &rho.factor_dims, keep)?;
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    let dims = kept.iter().map(|&k| rho.factor_dims[k]).collect();
    Ok(DensityMatrix::from_raw(reduced, dims))
}

/// One POVM: PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let first = effects.first().ok_or(QuantumError::InconsistentSettings)?;
        let dim = check_square(first)?;
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            if e.nrows() != dim {
                return Err(QuantumError::DimMismatch {
                    expected: dim,
                    got: e.nrows(),
                });
            }
            check_psd(e)?;
            sum += e;
        }
        let err = max_abs_diff(&sum, &identity(dim));
        if err > STATE_TOL {
            return Err(QuantumError::Incomplete(err));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn n_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }
}

/// Measurement settings sharing one outcome count and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    settings: Vec<Povm>,
}

impl MeasurementSet {
    pub fn new(settings: Vec<Povm>) -> Result<Self> {
        let first = settings.first().ok_or(QuantumError::InconsistentSettings)?;
        let (o, d) = (first.n_outcomes(), first.dim());
        if settings.iter().any(|p| p.n_outcomes() != o || p.dim() != d) {
            return Err(QuantumError::InconsistentSettings);
        }
        Ok(Self { settings })
    }

    pub fn settings(&self) -> &[Povm] {
        &self.settings
    }

    pub fn n_settings(&self) -> usize {
        self.settings.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.settings[0].n_outcomes()
    }

    pub fn dim(&self) -> usize {
        self.settings[0].dim()
    }

    pub fn effect(&self, x: usize, a: usize) -> &ComplexMatrix {
        &self.settings[x].effects[a]
    }
}

pub mod pauli {
    use super::{c, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }

    /// `|1⟩⟨0|`: raises the ground level `|0⟩` to the excited level `|1⟩`.
    pub fn raising() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)])
    }

    /// `|0⟩⟨1|`.
    pub fn lowering() -> ComplexMatrix {
        raising().transpose()
    }

    /// `|1⟩⟨1|`.
    pub fn excited_projector() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)])
    }
}

/// X, Y, Z projective measurements in that order; outcome 0 is the `+1`
/// eigenprojector.
pub fn pauli_measurement_set() -> MeasurementSet {
    let id = identity(2);
    let settings = [pauli::x(), pauli::y(), pauli::z()]
        .iter()
        .map(|p| {
            let plus = (&id + p).scale(0.5);
            let minus = (&id - p).scale(0.5);
            Povm::new(vec![plus, minus]).expect("Pauli projectors form a POVM")
        })
        .collect();
    MeasurementSet::new(settings).expect("uniform settings")
}
