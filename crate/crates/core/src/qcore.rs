//! Dense complex linear algebra for small Hilbert spaces.
//!
//! States are column vectors over the box basis, operators are dense
//! row-major matrices. Every value is immutable once built and every
//! constructor checks the invariant of its type (finite entries, Hermiticity,
//! unitarity), so downstream code can rely on them without re-validating.
//!
//! Time evolution uses `ħ = 1`: `matexp_hermitian(H, θ)` is `exp(−iθH)`,
//! computed through a Hermitian eigendecomposition.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex amplitude (dimensionless).
pub type C64 = Complex64;

/// Tolerance for algebraic identities (Hermiticity, normalization, idempotence).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for composed unitaries.
pub const UNITARY_TOL: f64 = 1e-10;
/// Maximum allowed `‖V·diag(λ)·V† − H‖_max` after diagonalization, relative to
/// `max(1, ‖H‖_max)`.
pub const RECONSTRUCTION_TOL: f64 = 1e-11;
/// Absolute tolerance for clustering eigenvalues into one eigenspace.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-9;

fn check_finite<'a>(values: impl IntoIterator<Item = &'a C64>, what: &str) -> Result<()> {
    if values
        .into_iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} has non-finite entries")))
    }
}

/// State vector over the box basis. Not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(amps))
    }

    pub fn from_vector(v: DVector<C64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::Dimension(format!(
                "state dimension must be at least 2, got {}",
                v.len()
            )));
        }
        check_finite(v.iter(), "state vector")?;
        Ok(StateVector(v))
    }

    /// Builds `amps / ‖amps‖`.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        Self::new(amps)?.normalize()
    }

    /// Basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::Dimension(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self::from_vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amps(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_nan() || n <= 0.0 || !n.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero state".into()));
        }
        Ok(StateVector(self.0.unscale(n)))
    }

    pub fn scale(&self, c: C64) -> Result<Self> {
        Self::from_vector(&self.0 * c)
    }

    /// Component-wise complex conjugate (ket of the bra `⟨self|` as a row).
    pub fn conj(&self) -> Self {
        StateVector(self.0.map(|z| z.conj()))
    }

    /// Largest component-wise deviation `max_k |self_k − other_k|`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, z) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, ")")
    }
}

/// `⟨a|b⟩ = Σ_k conj(a_k)·b_k`; the first argument is conjugated.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "inner product of states with dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.0.dotc(&b.0))
}

/// Dense square matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix(DMatrix<C64>);

impl SquareMatrix {
    /// Builds a `dim × dim` matrix from row-major entries.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries do not form a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, &entries))
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        check_finite(m.iter(), "matrix")?;
        Ok(SquareMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        SquareMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SquareMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[C64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &StateVector, b: &StateVector) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::Dimension(
                "outer product of unequal dimensions".into(),
            ));
        }
        Self::from_matrix(a.as_vector() * b.as_vector().adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d)
            .flat_map(|r| (0..d).map(move |c| (r, c)))
            .map(|(r, c)| self.0[(r, c)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        SquareMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    fn same_dim(&self, other: &SquareMatrix) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "matrices of dimension {} and {}",
                self.dim(),
                other.dim()
            )))
        }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &SquareMatrix) -> Result<Self> {
        self.same_dim(other)?;
        Ok(SquareMatrix(&self.0 * &other.0))
    }

    pub fn add(&self, other: &SquareMatrix) -> Result<Self> {
        self.same_dim(other)?;
        Ok(SquareMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &SquareMatrix) -> Result<Self> {
        self.same_dim(other)?;
        Ok(SquareMatrix(&self.0 - &other.0))
    }

    pub fn scale(&self, c: C64) -> Result<Self> {
        Self::from_matrix(&self.0 * c)
    }

    /// `max_ij |self_ij − other_ij|`.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Standard matrix-vector product.
pub fn apply(m: &SquareMatrix, v: &StateVector) -> Result<StateVector> {
    if m.dim() != v.dim() {
        return Err(Error::Dimension(format!(
            "cannot apply a {0}x{0} matrix to a state of dimension {1}",
            m.dim(),
            v.dim()
        )));
    }
    StateVector::from_vector(&m.0 * &v.0)
}

/// Property checked by [`validate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    Hermitian,
    Unitary,
}

/// True iff the max-entry deviation from the defining property is `≤ tol`:
/// `‖M − M†‖_max` for Hermitian, `‖M†M − I‖_max` for unitary.
pub fn validate(m: &SquareMatrix, kind: MatrixKind, tol: f64) -> bool {
    deviation(m, kind) <= tol
}

fn deviation(m: &SquareMatrix, kind: MatrixKind) -> f64 {
    match kind {
        MatrixKind::Hermitian => m.max_abs_diff(&m.adjoint()),
        MatrixKind::Unitary => {
            let prod = SquareMatrix(m.0.adjoint() * &m.0);
            prod.max_abs_diff(&SquareMatrix::identity(m.dim()))
        }
    }
}

/// Labelled Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: SquareMatrix,
    label: String,
}

impl HermitianOperator {
    /// Validates `‖M − M†‖_max ≤ 1e-12`.
    pub fn new(matrix: SquareMatrix, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let dev = deviation(&matrix, MatrixKind::Hermitian);
        if dev > ALGEBRAIC_TOL {
            return Err(Error::Validation(format!(
                "operator '{label}' is not Hermitian (‖M − M†‖_max = {dev:e})"
            )));
        }
        Ok(HermitianOperator { matrix, label })
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            matrix: SquareMatrix::identity(dim),
            label: "I".into(),
        }
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `I − self`, used for the complement of a projector.
    pub fn complement(&self, label: impl Into<String>) -> Self {
        HermitianOperator {
            matrix: SquareMatrix(DMatrix::identity(self.dim(), self.dim()) - &self.matrix.0),
            label: label.into(),
        }
    }

    pub fn scaled(&self, a: f64, label: impl Into<String>) -> Self {
        HermitianOperator {
            matrix: SquareMatrix(&self.matrix.0 * C64::from(a)),
            label: label.into(),
        }
    }

    /// Real linear combination `a·self + b·other`.
    pub fn combine(
        &self,
        a: f64,
        other: &HermitianOperator,
        b: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        self.matrix.same_dim(&other.matrix)?;
        Ok(HermitianOperator {
            matrix: SquareMatrix(&self.matrix.0 * C64::from(a) + &other.matrix.0 * C64::from(b)),
            label: label.into(),
        })
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        let sq = SquareMatrix(&self.matrix.0 * &self.matrix.0);
        sq.max_abs_diff(&self.matrix) <= tol
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::of(self)
    }
}

/// Unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    matrix: SquareMatrix,
}

impl UnitaryOperator {
    /// Validates `‖U†U − I‖_max ≤ 1e-10`.
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        let dev = deviation(&matrix, MatrixKind::Unitary);
        if dev > UNITARY_TOL {
            return Err(Error::Validation(format!(
                "matrix is not unitary (‖U†U − I‖_max = {dev:e})"
            )));
        }
        Ok(UnitaryOperator { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOperator {
            matrix: SquareMatrix::identity(dim),
        }
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn adjoint(&self) -> Self {
        UnitaryOperator {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `later · self`: first `self`, then `later`.
    pub fn then(&self, later: &UnitaryOperator) -> Result<Self> {
        Ok(UnitaryOperator {
            matrix: later.matrix.mul(&self.matrix)?,
        })
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        apply(&self.matrix, v)
    }
}

/// Eigendecomposition `H = V·diag(λ)·V†` of a Hermitian operator, eigenvalues
/// ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn of(h: &HermitianOperator) -> Result<Self> {
        let m = h.matrix.0.clone();
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000).ok_or_else(|| {
            Error::Numerical(format!(
                "eigendecomposition of '{}' did not converge",
                h.label
            ))
        })?;
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k))
                .collect::<Vec<_>>(),
        );
        let spectrum = Spectrum { values, vectors };

        let scale = h.matrix.max_abs().max(1.0);
        let err = spectrum.reconstruct().max_abs_diff(&h.matrix) / scale;
        if err.is_nan() || err > RECONSTRUCTION_TOL {
            return Err(Error::Numerical(format!(
                "eigendecomposition of '{}' reconstructs with error {err:e}",
                h.label
            )));
        }
        Ok(spectrum)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    fn reconstruct(&self) -> SquareMatrix {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| C64::from(l)),
        ));
        SquareMatrix(&self.vectors * d * self.vectors.adjoint())
    }

    /// `exp(−iθH)`.
    pub fn evolution(&self, theta: f64) -> UnitaryOperator {
        let n = self.values.len();
        if theta == 0.0 {
            return UnitaryOperator::identity(n);
        }
        let phases = DVector::from_iterator(
            n,
            self.values
                .iter()
                .map(|&l| C64::from_polar(1.0, -theta * l)),
        );
        let scaled = DMatrix::from_fn(n, n, |r, c| self.vectors[(r, c)] * phases[c]);
        UnitaryOperator {
            matrix: SquareMatrix(scaled * self.vectors.adjoint()),
        }
    }

    /// Distinct eigenvalues (clustered within `tol`) with their spectral
    /// projectors.
    pub fn eigenspaces(&self, tol: f64) -> Vec<(f64, SquareMatrix)> {
        let n = self.values.len();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in 0..n {
            match groups.last_mut() {
                Some(g) if self.values[k] - self.values[*g.last().unwrap()] <= tol => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        groups
            .into_iter()
            .map(|g| {
                let value = g.iter().map(|&k| self.values[k]).sum::<f64>() / g.len() as f64;
                let mut p = DMatrix::<C64>::zeros(n, n);
                for &k in &g {
                    let v = self.vectors.column(k);
                    p += v * v.adjoint();
                }
                (value, SquareMatrix(p))
            })
            .collect()
    }

    /// Spectral radius `max_k |λ_k|`.
    pub fn radius(&self) -> f64 {
        self.values.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}

/// `exp(−iθH)` with `ħ = 1`.
pub fn matexp_hermitian(h: &HermitianOperator, theta: f64) -> Result<UnitaryOperator> {
    if theta == 0.0 {
        return Ok(UnitaryOperator::identity(h.dim()));
    }
    Ok(h.spectrum()?.evolution(theta))
}

/// Rank-1 projector `|index⟩⟨index|`, labelled `P<index+1>`.
pub fn make_projector(dim: usize, index: usize) -> Result<HermitianOperator> {
    if index >= dim {
        return Err(Error::Dimension(format!(
            "projector index {index} out of range for dimension {dim}"
        )));
    }
    let mut m = DMatrix::zeros(dim, dim);
    m[(index, index)] = C64::new(1.0, 0.0);
    Ok(HermitianOperator {
        matrix: SquareMatrix(m),
        label: format!("P{}", index + 1),
    })
}
