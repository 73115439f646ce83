//! Dense finite-dimensional complex linear algebra.
//!
//! Everything here is a thin, validated wrapper around `nalgebra` dense
//! matrices and vectors. Target dimensions are small (tens, not thousands).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on the squared norm of a [`StateVector`].
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for the unitary / Hermitian / projector identities.
pub const ROLE_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are merged into one eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Anything that can act as a column vector in an inner product.
pub trait Ket {
    fn column(&self) -> &DVector<Complex64>;

    fn dim(&self) -> usize {
        self.column().len()
    }

    fn amplitudes(&self) -> &[Complex64] {
        self.column().as_slice()
    }

    fn norm_sqr(&self) -> f64 {
        self.column().iter().map(|z| z.norm_sqr()).sum()
    }
}

/// A vector that is not required to have unit norm: projected states,
/// branch components, operator images.
#[derive(Clone, Debug, PartialEq)]
pub struct UnnormalizedVector(DVector<Complex64>);

impl UnnormalizedVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("vector must have dim >= 1".into()));
        }
        Ok(Self(DVector::from_vec(amplitudes)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::from_element(dim, ZERO))
    }

    pub fn from_column(column: DVector<Complex64>) -> Self {
        Self(column)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 + &other.0))
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalize(&self) -> Result<StateVector> {
        let n = self.norm();
        if n < f64::MIN_POSITIVE.sqrt() {
            return Err(Error::ZeroNorm);
        }
        Ok(StateVector(&self.0 / Complex64::new(n, 0.0)))
    }

    pub fn into_column(self) -> DVector<Complex64> {
        self.0
    }
}

impl Ket for UnnormalizedVector {
    fn column(&self) -> &DVector<Complex64> {
        &self.0
    }
}

/// A unit-norm pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    /// Builds a state from its amplitudes, rejecting anything whose squared
    /// norm is off from 1 by more than [`NORM_TOL`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = UnnormalizedVector::new(amplitudes)?;
        let norm_sqr = v.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self(v.0))
    }

    /// Normalizes arbitrary (nonzero) amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        UnnormalizedVector::new(amplitudes)?.normalize()
    }

    /// Computational basis ket `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::Index { index: k, len: dim });
        }
        let mut v = DVector::from_element(dim, ZERO);
        v[k] = ONE;
        Ok(Self(v))
    }

    pub fn to_unnormalized(&self) -> UnnormalizedVector {
        UnnormalizedVector(self.0.clone())
    }
}

impl Ket for StateVector {
    fn column(&self) -> &DVector<Complex64> {
        &self.0
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// `⟨bra|ket⟩`, conjugating the bra.
pub fn inner_product(bra: &impl Ket, ket: &impl Ket) -> Result<Complex64> {
    check_dim(bra.dim(), ket.dim())?;
    Ok(bra.column().dotc(ket.column()))
}

/// `|ket⟩⟨bra|`.
pub fn outer_product(ket: &impl Ket, bra: &impl Ket) -> Result<LinearOperator> {
    check_dim(ket.dim(), bra.dim())?;
    Ok(LinearOperator(ket.column() * bra.column().adjoint()))
}

/// Matrix-vector product.
pub fn apply_operator(op: &LinearOperator, ket: &impl Ket) -> Result<UnnormalizedVector> {
    check_dim(op.dim(), ket.dim())?;
    Ok(UnnormalizedVector(&op.0 * ket.column()))
}

/// The defining identity an operator is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Unitary,
    Hermitian,
    Projector,
}

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator(DMatrix<Complex64>);

impl LinearOperator {
    /// From row-major entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("operator must have dim >= 1".into()));
        }
        check_dim(dim * dim, entries.len())?;
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("operator must have dim >= 1".into()));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::from_element(dim, dim, ZERO))
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 * &other.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `⟨bra|self|ket⟩`.
    pub fn sandwich(&self, bra: &impl Ket, ket: &impl Ket) -> Result<Complex64> {
        inner_product(bra, &apply_operator(self, ket)?)
    }
}

/// True iff the role's defining identity holds entrywise within `tol`.
pub fn validate(op: &LinearOperator, role: Role, tol: f64) -> bool {
    debug_assert!(tol > 0.0);
    let id = LinearOperator::identity(op.dim());
    let hermitian_dev = op.max_deviation(&op.adjoint());
    match role {
        Role::Unitary => LinearOperator(op.0.adjoint() * &op.0).max_deviation(&id) <= tol,
        Role::Hermitian => hermitian_dev <= tol,
        Role::Projector => {
            let sq = LinearOperator(&op.0 * &op.0);
            hermitian_dev <= tol && sq.max_deviation(op) <= tol
        }
    }
}

/// An orthogonal projector (Hermitian and idempotent).
#[derive(Clone, Debug, PartialEq)]
pub struct Projector(LinearOperator);

impl Projector {
    pub fn new(op: LinearOperator) -> Result<Self> {
        if !validate(&op, Role::Projector, ROLE_TOL) {
            return Err(Error::NotProjector);
        }
        Ok(Self(op))
    }

    /// Rank-1 projector `|x⟩⟨x|`.
    pub fn onto(x: &StateVector) -> Self {
        Self(outer_product(x, x).expect("same vector"))
    }

    /// Projector onto `|k⟩` in the computational basis.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        Ok(Self::onto(&StateVector::basis(dim, k)?))
    }

    /// Projector onto the span of `kets`, orthonormalized by modified
    /// Gram-Schmidt. Linearly dependent input is rejected.
    pub fn onto_span(kets: &[UnnormalizedVector]) -> Result<Self> {
        let first = kets
            .first()
            .ok_or_else(|| Error::InvalidArgument("projector needs at least one ket".into()))?;
        let dim = first.dim();
        let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(kets.len());
        for ket in kets {
            check_dim(dim, ket.dim())?;
            let mut v = ket.column().clone();
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
            let n = v.norm();
            if n < 1e-10 * ket.column().norm().max(1.0) {
                return Err(Error::InvalidArgument(
                    "projector kets are linearly dependent".into(),
                ));
            }
            basis.push(v / Complex64::new(n, 0.0));
        }
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for b in &basis {
            m += b * b.adjoint();
        }
        Ok(Self(LinearOperator(m)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(LinearOperator::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(LinearOperator::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_operator(&self) -> &LinearOperator {
        &self.0
    }

    /// Rank, read off the trace.
    pub fn rank(&self) -> usize {
        self.0.trace().re.round().max(0.0) as usize
    }

    /// Largest entry of `self · other`; zero for orthogonal projectors.
    pub fn overlap_deviation(&self, other: &Projector) -> Result<f64> {
        Ok(self.0.compose(&other.0)?.max_abs())
    }

    pub fn is_orthogonal_to(&self, other: &Projector, tol: f64) -> bool {
        matches!(self.overlap_deviation(other), Ok(d) if d <= tol)
    }

    /// Sum of two orthogonal projectors, which is again a projector.
    pub fn sum(&self, other: &Projector) -> Result<Projector> {
        let deviation = self.overlap_deviation(other)?;
        if deviation > ROLE_TOL {
            return Err(Error::NotOrthogonal { deviation });
        }
        Projector::new(self.0.add(&other.0)?)
    }
}

/// Spectral form `Σ_k a_k Π_k` of a Hermitian operator, one projector per
/// distinct eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    projectors: Vec<Projector>,
    multiplicities: Vec<usize>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from distinct eigenvalues and their
    /// eigenprojectors, checking orthogonality and completeness.
    pub fn from_projectors(eigenvalues: Vec<f64>, projectors: Vec<Projector>) -> Result<Self> {
        check_dim(eigenvalues.len(), projectors.len())?;
        let first = projectors
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty spectral decomposition".into()))?;
        let dim = first.dim();
        let mut total = LinearOperator::zeros(dim);
        for (i, p) in projectors.iter().enumerate() {
            check_dim(dim, p.dim())?;
            if p.rank() == 0 {
                return Err(Error::InvalidArgument("eigenprojector has rank 0".into()));
            }
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                let deviation = p.overlap_deviation(q)?;
                if deviation > ROLE_TOL {
                    return Err(Error::NotOrthogonal { deviation });
                }
                if (eigenvalues[i] - eigenvalues[j]).abs() < DEGENERACY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "eigenvalues {} and {} are not distinct",
                        eigenvalues[i], eigenvalues[j]
                    )));
                }
            }
            total = total.add(p.as_operator())?;
        }
        if total.max_deviation(&LinearOperator::identity(dim)) > ROLE_TOL {
            return Err(Error::InvalidArgument(
                "eigenprojectors do not sum to the identity".into(),
            ));
        }
        let multiplicities = projectors.iter().map(Projector::rank).collect();
        Ok(Self {
            eigenvalues,
            projectors,
            multiplicities,
        })
    }

    /// The two-outcome observable of a projector: eigenvalue 1 on its range,
    /// 0 on the complement (either may be absent for `0` or `I`).
    pub fn of_projector(p: &Projector) -> Self {
        let dim = p.dim();
        let complement = LinearOperator::identity(dim)
            .sub(p.as_operator())
            .expect("same dim");
        let mut eigenvalues = Vec::new();
        let mut projectors = Vec::new();
        if complement.trace().re.round() >= 1.0 {
            eigenvalues.push(0.0);
            projectors.push(Projector(complement));
        }
        if p.rank() >= 1 {
            eigenvalues.push(1.0);
            projectors.push(p.clone());
        }
        let multiplicities = projectors.iter().map(Projector::rank).collect();
        Self {
            eigenvalues,
            projectors,
            multiplicities,
        }
    }

    /// Computational basis measurement with eigenvalue `k` on `|k⟩`.
    pub fn computational(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|k| Projector::basis(dim, k).expect("k < dim"))
            .collect();
        Self {
            eigenvalues: (0..dim).map(|k| k as f64).collect(),
            projectors,
            multiplicities: vec![1; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    /// Number of distinct eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn projector(&self, k: usize) -> Result<&Projector> {
        self.projectors.get(k).ok_or(Error::Index {
            index: k,
            len: self.projectors.len(),
        })
    }

    /// `Σ_k a_k Π_k`.
    pub fn reconstruct(&self) -> LinearOperator {
        let mut total = LinearOperator::zeros(self.dim());
        for (a, p) in self.eigenvalues.iter().zip(&self.projectors) {
            total = total
                .add(&p.as_operator().scale(Complex64::new(*a, 0.0)))
                .expect("same dim");
        }
        total
    }
}

/// Diagonalizes a Hermitian operator, merging eigenvalues closer than
/// [`DEGENERACY_TOL`]. Eigenvalues come back in ascending order.
pub fn spectral_decompose(op: &LinearOperator) -> Result<SpectralDecomposition> {
    let deviation = op.max_deviation(&op.adjoint());
    if deviation > ROLE_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let dim = op.dim();
    // Exact Hermitian part so the solver sees a symmetric problem.
    let sym = (op.matrix() + op.matrix().adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(group)
                if eig.eigenvalues[idx] - eig.eigenvalues[*group.last().unwrap()]
                    < DEGENERACY_TOL =>
            {
                group.push(idx)
            }
            _ => groups.push(vec![idx]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    let mut multiplicities = Vec::with_capacity(groups.len());
    for group in groups {
        let mean = group.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / group.len() as f64;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for &i in &group {
            let v = eig.eigenvectors.column(i);
            m += &v * v.adjoint();
        }
        eigenvalues.push(mean);
        projectors.push(Projector(LinearOperator(m)));
        multiplicities.push(group.len());
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
        multiplicities,
    })
}
