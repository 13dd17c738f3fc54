//! Dense complex matrices, Hermitian spectra, norms and entropy.
//!
//! Qubit 0 is the most significant bit of a basis index, i.e. the outermost
//! factor of a Kronecker product.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Maximum entrywise deviation from Hermiticity accepted anywhere.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues at or below this contribute nothing to the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Builds a square matrix from real entries given row by row.
pub fn real_matrix(dim: usize, rows: &[f64]) -> ComplexMatrix {
    assert_eq!(rows.len(), dim * dim);
    ComplexMatrix::from_row_iterator(dim, dim, rows.iter().map(|&x| c(x, 0.0)))
}

pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_diagonal(&DVector::from_iterator(n, values.iter().map(|&x| c(x, 0.0))))
}

pub fn pauli_x() -> ComplexMatrix {
    real_matrix(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    real_matrix(2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(2, &[h, h, h, -h])
}

pub fn cnot() -> ComplexMatrix {
    #[rustfmt::skip]
    let m = real_matrix(4, &[
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
    ]);
    m
}

fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Largest entrywise modulus of `m - m*`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &ComplexMatrix) -> Result<()> {
    ensure_square(m)?;
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Replaces `m` by `(m + m*)/2`.
pub fn hermitize(m: &mut ComplexMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Kronecker product with `a` as the outer factor: entry
/// `(i*b.rows + k, j*b.cols + l) = a[i,j] * b[k,l]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors.into_iter().fold(identity(1), |acc, f| tensor_product(&acc, f))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let d = DVector::from_iterator(n, self.eigenvalues.iter().map(|&x| c(x, 0.0)));
        matmul(&matmul(&self.eigenvectors, &ComplexMatrix::from_diagonal(&d)), &self.eigenvectors.adjoint())
    }
}

pub fn hermitian_eigendecompose(m: &ComplexMatrix) -> Result<Spectrum> {
    ensure_hermitian(m)?;
    let mut h = m.clone();
    hermitize(&mut h);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Ascending eigenvalues only.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_hermitian(m)?;
    let mut h = m.clone();
    hermitize(&mut h);
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Entropy in nats of a probability vector; entries at or below the cutoff
/// contribute zero.
pub fn shannon_entropy(probabilities: &[f64]) -> f64 {
    probabilities.iter().filter(|&&p| p > ENTROPY_CUTOFF).map(|&p| -p * p.ln()).fold(0.0, |acc, t| acc + t)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(x: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(x)?.iter().map(|v| v.abs()).sum())
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complex product through four real products, which nalgebra hands to an
/// optimized real GEMM.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    ComplexMatrix::from_fn(a.nrows(), b.ncols(), |i, j| c(re[(i, j)], im[(i, j)]))
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    matmul(a, b) - matmul(b, a)
}

/// `||[a, b]||_HS` for Hermitian `a`, `b`, using `[a, b] = ab - (ab)*`.
pub fn hermitian_commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let ab = matmul(a, b);
    hs_norm(&(&ab - ab.adjoint()))
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    num_qubits: Option<usize>,
}

fn qubits_for(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        ensure_hermitian(&matrix)?;
        let tr = trace(&matrix);
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigenvalues(&matrix)?[0];
        if min < -HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self::from_hermitian_unchecked(matrix))
    }

    /// Wraps a matrix produced by a trace-preserving, positivity-preserving
    /// map. The matrix is re-Hermitized; no spectrum check is made.
    pub(crate) fn from_hermitian_unchecked(mut matrix: ComplexMatrix) -> Self {
        hermitize(&mut matrix);
        let num_qubits = qubits_for(matrix.nrows());
        Self { matrix, num_qubits }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_hermitian_unchecked(identity(dim) / c(dim as f64, 0.0))
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(index, index)] = ONE;
        Self::from_hermitian_unchecked(m)
    }

    /// `|v><v|/<v|v>` for a nonzero vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if amplitudes.is_empty() || norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = v / c(norm, 0.0);
        Ok(Self::from_hermitian_unchecked(&v * v.adjoint()))
    }

    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(diag(probabilities))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_qubits(&self) -> Option<usize> {
        self.num_qubits
    }

    /// Re-runs the full validation of [`DensityMatrix::new`].
    pub fn validate(&self) -> Result<()> {
        Self::new(self.matrix.clone()).map(|_| ())
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.matrix, &self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix).expect("density matrix is Hermitian")
    }

    /// `U rho U*`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), actual: u.nrows() });
        }
        Ok(Self::from_hermitian_unchecked(matmul(&matmul(u, &self.matrix), &u.adjoint())))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::from_hermitian_unchecked(tensor_product(&self.matrix, &other.matrix))
    }

    /// Convex combination `sum w_i rho_i` of equal-dimension states.
    pub fn mixture(weighted: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim =
            weighted.first().map(|(_, r)| r.dim()).ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, r) in weighted {
            if r.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, actual: r.dim() });
            }
            acc += r.matrix() * c(*w, 0.0);
        }
        Ok(Self::from_hermitian_unchecked(acc))
    }
}

/// Von Neumann entropy `-tr(rho ln rho)` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues())
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// `G G* / tr(G G*)` for a `dim x rank` complex Gaussian `G`.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::BadRank { rank, dim });
    }
    let mut rng = seeded(seed);
    let g = gaussian_matrix(dim, rank, &mut rng);
    let m = matmul(&g, &g.adjoint());
    let tr = trace(&m).re;
    Ok(DensityMatrix::from_hermitian_unchecked(m / c(tr, 0.0)))
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal moved into `Q`.
pub fn random_haar_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    assert!(dim >= 1, "dimension must be positive");
    let mut rng = seeded(seed);
    let g = gaussian_matrix(dim, dim, &mut rng);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    hs_norm(&(matmul(&u.adjoint(), u) - identity(u.ncols())))
}

/// Left-multiplies `m` by `op` acting on the listed qubits (identity
/// elsewhere) of an `n`-qubit register. `op` is in the basis of `targets`
/// with `targets[0]` most significant.
pub fn apply_left_on_qubits(m: &mut ComplexMatrix, op: &ComplexMatrix, targets: &[usize], n: usize) {
    let k = targets.len();
    let sub = 1usize << k;
    debug_assert_eq!(op.nrows(), sub);
    let dim = m.nrows();
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << (n - 1 - t)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> =
        (0..sub).map(|s| (0..k).filter(|b| s & (1 << (k - 1 - b)) != 0).map(|b| masks[b]).sum()).collect();
    let mut gathered = vec![ZERO; sub];
    for col in 0..m.ncols() {
        for base in (0..dim).filter(|r| r & all == 0) {
            for (s, off) in offsets.iter().enumerate() {
                gathered[s] = m[(base + off, col)];
            }
            for (s, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (t, g) in gathered.iter().enumerate() {
                    acc += op[(s, t)] * g;
                }
                m[(base + off, col)] = acc;
            }
        }
    }
}

/// `(op on targets) m (op on targets)*`.
pub fn conjugate_on_qubits(m: &ComplexMatrix, op: &ComplexMatrix, targets: &[usize], n: usize) -> ComplexMatrix {
    let mut a = m.clone();
    apply_left_on_qubits(&mut a, op, targets, n);
    let mut b = a.adjoint();
    apply_left_on_qubits(&mut b, op, targets, n);
    b.adjoint()
}

/// Replaces qubit `q` of the register by `I/2 (x) tr_q(m)` with weight
/// `lambda`: the single-qubit depolarizer `(1-lambda) m + lambda I/2 (x) tr_q m`.
pub fn depolarize_qubit(m: &ComplexMatrix, q: usize, n: usize, lambda: f64) -> ComplexMatrix {
    let mask = 1usize << (n - 1 - q);
    let dim = m.nrows();
    let keep = c(1.0 - lambda, 0.0);
    let half = c(lambda / 2.0, 0.0);
    ComplexMatrix::from_fn(dim, dim, |r, col| {
        let v = m[(r, col)] * keep;
        if (r ^ col) & mask != 0 {
            v
        } else {
            let (r0, c0) = (r & !mask, col & !mask);
            v + (m[(r0, c0)] + m[(r0 | mask, c0 | mask)]) * half
        }
    })
}
