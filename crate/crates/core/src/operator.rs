//! Dense complex-matrix foundation: validated density matrices and
//! observables, traces, purity, positivity checks and vectorization.
//!
//! Vectorization is column stacking everywhere in this crate: entry `(a, b)`
//! of an `n x n` matrix lands at index `a + n * b`. This is also the storage
//! order of [`nalgebra::DMatrix`], so `vectorize` is a copy of the backing
//! slice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<C64>;

/// Maximum entry-wise `|A - A^dagger|` accepted for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum `|Tr(rho) - 1|` accepted for states.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue accepted for positive semidefinite inputs.
pub const PSD_TOL: f64 = 1e-10;

/// Largest entry-wise deviation of `a` from its conjugate transpose.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::dims("hermitian_eigenvalues (square)", a.nrows(), a.ncols()));
    }
    let defect = hermiticity_defect(a);
    if defect > HERMITIAN_TOL {
        return Err(Error::invariant(
            "hermitian",
            format!("max |A - A^dagger| = {defect:e} exceeds {HERMITIAN_TOL:e}"),
        ));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev: Vec<f64> = hermitian_part(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `max(0, -lambda_min(A))` for a Hermitian matrix.
pub fn psd_defect(a: &ComplexMatrix) -> Result<f64> {
    let ev = hermitian_eigenvalues(a)?;
    Ok(ev.first().map_or(0.0, |&min| (-min).max(0.0)))
}

/// Column-stacked copy of a square matrix.
pub fn vectorize_matrix(a: &ComplexMatrix) -> Vec<C64> {
    a.as_slice().to_vec()
}

/// Inverse of [`vectorize_matrix`]; the length must be a perfect square.
pub fn devectorize(v: &[C64]) -> Result<ComplexMatrix> {
    let n = perfect_sqrt(v.len()).ok_or_else(|| {
        Error::InvalidInput(format!("vector length {} is not a perfect square", v.len()))
    })?;
    Ok(DMatrix::from_column_slice(n, n, v))
}

pub(crate) fn perfect_sqrt(len: usize) -> Option<usize> {
    let n = (len as f64).sqrt().round() as usize;
    (n * n == len).then_some(n)
}

/// Types that wrap a validated Hermitian matrix.
pub trait Hermitian {
    fn matrix(&self) -> &ComplexMatrix;

    fn dim(&self) -> usize {
        self.matrix().nrows()
    }
}

/// A Hermitian, unit-trace, positive semidefinite `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at the crate
    /// tolerances. Inputs that fail are rejected; see
    /// [`DensityMatrix::project_to_physical`] for an explicit repair.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invariant(
                "square",
                format!("density matrix must be non-empty and square, got {}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        let tr = trace(&matrix);
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::invariant(
                "unit_trace",
                format!("|Tr(rho) - 1| = {:e} exceeds {TRACE_TOL:e}", (tr - 1.0).norm()),
            ));
        }
        let defect = psd_defect(&matrix)?;
        if defect > PSD_TOL {
            return Err(Error::invariant(
                "positive_semidefinite",
                format!("smallest eigenvalue {:e} is below -{PSD_TOL:e}", -defect),
            ));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Pure state `|psi><psi|` of a (not necessarily normalized) vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidInput("state vector must be non-empty and non-zero".into()));
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|c| c / norm));
        Self::new(&v * v.adjoint())
    }

    /// `|k><k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::InvalidInput(format!("basis index {k} out of range for dim {dim}")));
        }
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        Self::new(ComplexMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    /// Coherent state `|alpha>` truncated to `dim` Fock levels and
    /// renormalized.
    pub fn coherent(dim: usize, alpha: C64) -> Result<Self> {
        let mut amp = Vec::with_capacity(dim);
        let mut term = C64::new(1.0, 0.0);
        for n in 0..dim {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            amp.push(term);
        }
        Self::from_pure(&amp)
    }

    /// Nearest physical state to a noisy Hermitian estimate: negative
    /// eigenvalues are clipped to zero and the result renormalized.
    pub fn project_to_physical(matrix: &ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invariant("square", "matrix must be non-empty and square"));
        }
        let eig = hermitian_part(matrix).symmetric_eigen();
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::invariant("positive_semidefinite", "no positive spectral weight to renormalize"));
        }
        let n = matrix.nrows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in clipped.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            out += (v * v.adjoint()).scale(l / total);
        }
        Self::new(hermitian_part(&out))
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|c| c.re).collect()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_coherence(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn vectorize(&self) -> Vec<C64> {
        vectorize_matrix(&self.matrix)
    }
}

impl Hermitian for DensityMatrix {
    fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// A Hermitian matrix, typically a measurement operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    matrix: ComplexMatrix,
}

impl HermitianObservable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invariant("square", "observable must be non-empty and square"));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(Error::invariant(
                "hermitian",
                format!("max |O - O^dagger| = {defect:e} exceeds {HERMITIAN_TOL:e}"),
            ));
        }
        Ok(HermitianObservable { matrix })
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

impl Hermitian for HermitianObservable {
    fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

impl From<DensityMatrix> for HermitianObservable {
    fn from(rho: DensityMatrix) -> Self {
        HermitianObservable { matrix: rho.matrix }
    }
}

/// Tr(A B) of two Hermitian operators. The imaginary part must vanish to
/// within [`HERMITIAN_TOL`].
pub fn trace_product<A: Hermitian + ?Sized>(a: &A, b: &DensityMatrix) -> Result<f64> {
    raw_trace_product(a.matrix(), b.matrix())
}

pub(crate) fn raw_trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::dims("trace_product", a.nrows(), b.nrows()));
    }
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    // Tr(AB) = sum_ab A_ab B_ba; walk B's columns contiguously.
    for a_idx in 0..n {
        for b_idx in 0..n {
            acc += a[(a_idx, b_idx)] * b[(b_idx, a_idx)];
        }
    }
    if acc.im.abs() > HERMITIAN_TOL {
        return Err(Error::invariant(
            "real_trace",
            format!("Im Tr(AB) = {:e} exceeds {HERMITIAN_TOL:e}", acc.im),
        ));
    }
    Ok(acc.re)
}

/// Tr(rho^2).
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Validated states always give a real trace; fall back to the norm form.
    raw_trace_product(&rho.matrix, &rho.matrix)
        .unwrap_or_else(|_| rho.matrix.iter().map(|c| c.norm_sqr()).sum())
}

fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Random Hermitian matrix with standard complex Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| standard_complex(rng));
    hermitian_part(&g)
}

/// Random full-rank mixed state `G G^dagger / Tr(G G^dagger)` from a
/// Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| standard_complex(rng));
    let w = &g * g.adjoint();
    let tr = trace(&w).re;
    let m = hermitian_part(&w.unscale(tr));
    DensityMatrix::new(m).expect("Ginibre construction yields a valid state")
}

/// Random normalized pure state.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let psi: Vec<C64> = (0..dim).map(|_| standard_complex(rng)).collect();
    DensityMatrix::from_pure(&psi).expect("Gaussian vector is non-zero")
}
