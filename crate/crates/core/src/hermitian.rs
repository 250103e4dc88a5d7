//! Dense complex-matrix substrate.
//!
//! Everything downstream works with small dense matrices (`d_S * d_E` of a few
//! hundred at most), so operators are thin wrappers around
//! [`nalgebra::DMatrix`] with the invariants checked once at construction.

use std::ops::{Add, Range, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Maximum allowed `|Tr(rho) - 1|` for a density operator.
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Eigenvalues of a density operator down to `-NEGATIVITY_TOLERANCE` are
/// treated as round-off and clamped to zero.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

// Components smaller than this do not count as "first nonzero" when fixing
// eigenvector phases.
const PHASE_REFERENCE_THRESHOLD: f64 = 1e-10;

/// Numerical thresholds shared by every decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute eigenvalue gap at or below which neighbours share a cluster.
    pub degeneracy: f64,
    /// Eigenvalues at or below this count as kernel.
    pub rank: f64,
    /// Max elementwise `|A_ij - conj(A_ji)|` accepted on input.
    pub hermiticity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            degeneracy: 1e-9,
            rank: 1e-12,
            hermiticity: 1e-12,
        }
    }
}

/// Which factor of the bipartite space `H_S ⊗ H_E` an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    System,
    Environment,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::System => Subsystem::Environment,
            Subsystem::Environment => Subsystem::System,
        }
    }
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Largest elementwise deviation from Hermiticity.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M^†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Hilbert–Schmidt inner product `(A, B) = Tr(A^† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            context: "hs_inner",
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Kronecker product `A ⊗ B`; row index of the result is `i_A * dim(B) + i_B`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Partial trace of an operator on `H_S ⊗ H_E`, keeping the factor `keep`.
pub fn partial_trace(m: &CMatrix, keep: Subsystem, dims: (usize, usize)) -> Result<CMatrix> {
    let n = check_square(m)?;
    let (ds, de) = dims;
    if ds * de != n {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: ds * de,
            found: n,
        });
    }
    let out = match keep {
        Subsystem::System => CMatrix::from_fn(ds, ds, |s, t| {
            (0..de).map(|e| m[(s * de + e, t * de + e)]).sum()
        }),
        Subsystem::Environment => CMatrix::from_fn(de, de, |e, f| {
            (0..ds).map(|s| m[(s * de + e, s * de + f)]).sum()
        }),
    };
    Ok(out)
}

/// A dense matrix certified Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Accepts `matrix` if it is Hermitian within the default tolerance.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(matrix: CMatrix, tolerance: f64) -> Result<Self> {
        let n = check_square(&matrix)?;
        if n == 0 {
            return Err(Error::InvalidArgument("operator dimension must be >= 1".into()));
        }
        let asym = max_asymmetry(&matrix);
        if !(asym <= tolerance) {
            return Err(Error::NotHermitian {
                max_asymmetry: asym,
                tolerance,
            });
        }
        Ok(Self::from_hermitian_part(&matrix))
    }

    /// The Hermitian part of an arbitrary square matrix. Use for matrices that
    /// are Hermitian by construction up to round-off.
    pub fn from_hermitian_part(matrix: &CMatrix) -> Self {
        assert!(matrix.is_square(), "operator must be square");
        HermitianOperator {
            matrix: hermitian_part(matrix),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        HermitianOperator {
            matrix: CMatrix::from_diagonal(&d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HermitianOperator {
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn tensor(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: tensor(&self.matrix, &other.matrix),
        }
    }

    /// `Re Tr(rho H)`; the imaginary part vanishes for Hermitian arguments.
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        trace_product(rho, &self.matrix).re
    }

    /// `-i [self, rho]`, Hermitian whenever `rho` is.
    pub fn liouvillian_action(&self, rho: &CMatrix) -> HermitianOperator {
        let c = commutator(&self.matrix, rho);
        HermitianOperator::from_hermitian_part(&(c * C64::new(0.0, -1.0)))
    }

    fn check_same_dim(&self, other: &Self, context: &'static str) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dimension mismatch in {context}"
        );
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        self.check_same_dim(rhs, "add");
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        self.check_same_dim(rhs, "sub");
        HermitianOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

/// Pauli matrices in the computational basis `{|0>, |1>}`.
pub mod pauli {
    use super::{CMatrix, HermitianOperator, C64};

    fn op(entries: [[C64; 2]; 2]) -> HermitianOperator {
        HermitianOperator::from_hermitian_part(&CMatrix::from_fn(2, 2, |i, j| entries[i][j]))
    }

    pub fn x() -> HermitianOperator {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        op([[o, l], [l, o]])
    }

    pub fn y() -> HermitianOperator {
        let (o, i) = (C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        op([[o, -i], [i, o]])
    }

    pub fn z() -> HermitianOperator {
        HermitianOperator::from_diagonal(&[1.0, -1.0])
    }

    /// `|0><1|`
    pub fn raising() -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m
    }

    /// `|1><0|`
    pub fn lowering() -> CMatrix {
        raising().adjoint()
    }
}

/// Eigendecomposition of a Hermitian operator, eigenvalues descending, with
/// degeneracy clusters and rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    clusters: Vec<Range<usize>>,
    rank: usize,
}

impl SpectralDecomposition {
    fn from_sorted(eigenvalues: Vec<f64>, eigenvectors: CMatrix, tol: &Tolerances) -> Self {
        let mut clusters = Vec::new();
        let mut start = 0;
        for i in 1..eigenvalues.len() {
            if eigenvalues[i - 1] - eigenvalues[i] > tol.degeneracy {
                clusters.push(start..i);
                start = i;
            }
        }
        if !eigenvalues.is_empty() {
            clusters.push(start..eigenvalues.len());
        }
        let rank = eigenvalues.iter().filter(|&&l| l > tol.rank).count();
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            clusters,
            rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// Contiguous index ranges of degenerate eigenvalues.
    pub fn clusters(&self) -> &[Range<usize>] {
        &self.clusters
    }

    /// Cluster index of each eigenvalue.
    pub fn cluster_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.dim()];
        for (k, range) in self.clusters.iter().enumerate() {
            for i in range.clone() {
                ids[i] = k;
            }
        }
        ids
    }

    /// True when at least one cluster holds more than one eigenvalue.
    pub fn has_degenerate_cluster(&self) -> bool {
        self.clusters.iter().any(|r| r.len() > 1)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Eigenvalues above the rank tolerance (a prefix, since sorted).
    pub fn support_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.rank]
    }

    /// `sum_i lambda_i |phi_i><phi_i|`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        &scaled * v.adjoint()
    }

    /// Same decomposition with `|phi_i> -> exp(i theta_i) |phi_i>`.
    pub fn rephased(&self, phases: &[f64]) -> Self {
        assert_eq!(phases.len(), self.dim(), "one phase per eigenvector");
        let mut out = self.clone();
        for (j, &theta) in phases.iter().enumerate() {
            let factor = C64::from_polar(1.0, theta);
            { let mut c = out.eigenvectors.column_mut(j); c *= factor; }
        }
        out
    }

    /// Replace the eigenvectors by `vectors` (same eigenvalues, clusters and
    /// rank). Used when the basis inside a cluster is re-chosen.
    pub fn with_eigenvectors(&self, vectors: CMatrix) -> Self {
        assert_eq!(vectors.shape(), self.eigenvectors.shape());
        SpectralDecomposition {
            eigenvectors: vectors,
            ..self.clone()
        }
    }

    /// `V^† M V`.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }

    /// `V M V^†`.
    pub fn from_eigenbasis(&self, m: &CMatrix) -> CMatrix {
        &self.eigenvectors * m * self.eigenvectors.adjoint()
    }
}

/// Hermitian eigendecomposition with descending eigenvalues, phase-fixed
/// eigenvectors (first nonzero component real positive) and clusters.
pub fn eig_hermitian(a: &HermitianOperator, tol: &Tolerances) -> Result<SpectralDecomposition> {
    eig_named(a.matrix(), tol, "operator")
}

pub(crate) fn eig_named(m: &CMatrix, tol: &Tolerances, name: &str) -> Result<SpectralDecomposition> {
    let n = check_square(m)?;
    let max_iter = 1000 * n.max(1);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        Error::EigenNonConvergence {
            name: name.to_string(),
            dim: n,
        }
    })?;
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::EigenNonConvergence {
            name: name.to_string(),
            dim: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
        if let Some(reference) = col.iter().find(|c| c.norm() > PHASE_REFERENCE_THRESHOLD) {
            let phase = reference.conj() / reference.norm();
            col *= phase;
        }
        vectors.set_column(dst, &col);
    }
    Ok(SpectralDecomposition::from_sorted(eigenvalues, vectors, tol))
}

/// A Hermitian, positive-semidefinite, unit-trace operator together with its
/// spectral decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    operator: HermitianOperator,
    spectrum: SpectralDecomposition,
    tolerances: Tolerances,
}

impl DensityOperator {
    /// Validates `matrix`. Eigenvalues in `[-1e-10, 0)` are clamped to zero and
    /// the spectrum renormalized.
    pub fn new(matrix: CMatrix, tol: Tolerances) -> Result<Self> {
        let op = HermitianOperator::with_tolerance(matrix, tol.hermiticity)?;
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState {
                reason: format!("trace {tr} differs from 1 by more than {TRACE_TOLERANCE:e}"),
            });
        }
        let spectrum = eig_named(op.matrix(), &tol, "density operator")?;
        let min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -NEGATIVITY_TOLERANCE {
            return Err(Error::InvalidState {
                reason: format!("eigenvalue {min:e} is below -{NEGATIVITY_TOLERANCE:e}"),
            });
        }
        if min < 0.0 {
            let mut clamped: Vec<f64> = spectrum.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            clamped.iter_mut().for_each(|l| *l /= total);
            let spectrum = SpectralDecomposition::from_sorted(clamped, spectrum.eigenvectors, &tol);
            let operator = HermitianOperator::from_hermitian_part(&spectrum.reconstruct());
            return Ok(DensityOperator {
                operator,
                spectrum,
                tolerances: tol,
            });
        }
        Ok(DensityOperator {
            operator: op,
            spectrum,
            tolerances: tol,
        })
    }

    /// `|psi><psi|` for a normalized (or normalizable) vector.
    pub fn from_pure(psi: &CVector, tol: Tolerances) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState {
                reason: "zero state vector".into(),
            });
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint(), tol)
    }

    pub fn from_probabilities(probabilities: &[f64], tol: Tolerances) -> Result<Self> {
        Self::new(HermitianOperator::from_diagonal(probabilities).into_matrix(), tol)
    }

    pub fn maximally_mixed(dim: usize, tol: Tolerances) -> Result<Self> {
        Self::from_probabilities(&vec![1.0 / dim as f64; dim], tol)
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.operator.matrix()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn purity(&self) -> f64 {
        trace_product(self.matrix(), self.matrix()).re
    }

    /// `Tr(rho H)`.
    pub fn expectation(&self, h: &HermitianOperator) -> f64 {
        h.expectation(self.matrix())
    }

    /// Reduced state on `keep`.
    pub fn reduce(&self, keep: Subsystem, dims: (usize, usize)) -> Result<DensityOperator> {
        let m = partial_trace(self.matrix(), keep, dims)?;
        DensityOperator::new(m, self.tolerances)
    }

    /// Swap in another eigendecomposition of the same operator (e.g. a
    /// rephased one). Rejected unless it reconstructs the state within 1e-10.
    pub fn with_spectrum(&self, spectrum: SpectralDecomposition) -> Result<Self> {
        if spectrum.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "with_spectrum",
                expected: self.dim(),
                found: spectrum.dim(),
            });
        }
        let err = (spectrum.reconstruct() - self.matrix()).norm();
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "replacement spectrum misses the state by {err:e}"
            )));
        }
        Ok(DensityOperator {
            spectrum,
            ..self.clone()
        })
    }
}
