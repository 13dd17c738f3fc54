//! Reference computations for the acceptance suite. They use explicit
//! full-register embeddings and Pauli Kraus sums instead of the library's
//! bit-twiddling kernels and affine channel forms.

use entroq::linalg::{c, hermitian_eigenvalues, identity, pauli_x, pauli_y, pauli_z, ComplexMatrix};

/// Full `2^n` operator acting as `op` on `targets` (first target is the most
/// significant bit of the local index) and as the identity elsewhere.
pub fn embed(op: &ComplexMatrix, targets: &[usize], n: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let local = |x: usize| targets.iter().fold(0, |acc, &t| (acc << 1) | bit(x, t));
    let rest = |x: usize| targets.iter().fold(x, |acc, &t| acc & !(1 << (n - 1 - t)));
    ComplexMatrix::from_fn(dim, dim, |a, b| if rest(a) == rest(b) { op[(local(a), local(b))] } else { c(0.0, 0.0) })
}

/// Single-qubit depolarizing channel as four Pauli Kraus operators.
pub fn depolarizing_kraus(lambda: f64) -> Vec<ComplexMatrix> {
    let w = (lambda / 4.0).sqrt();
    vec![
        identity(2) * c((1.0 - 3.0 * lambda / 4.0).sqrt(), 0.0),
        pauli_x() * c(w, 0.0),
        pauli_y() * c(w, 0.0),
        pauli_z() * c(w, 0.0),
    ]
}

pub fn kraus_on_qubit(rho: &ComplexMatrix, ops: &[ComplexMatrix], q: usize, n: usize) -> ComplexMatrix {
    ops.iter().fold(ComplexMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| {
        let e = embed(k, &[q], n);
        acc + &e * rho * e.adjoint()
    })
}

/// `R^{(x) n}` applied `j` times, with `R` the depolarizing channel. Repeated
/// depolarizing composes to depolarizing with `1 - (1 - lambda)^j`.
pub fn product_depolarizing_power(rho: &ComplexMatrix, n: usize, lambda: f64, j: u32) -> ComplexMatrix {
    let ops = depolarizing_kraus(1.0 - (1.0 - lambda).powi(j as i32));
    (0..n).fold(rho.clone(), |acc, q| kraus_on_qubit(&acc, &ops, q, n))
}

fn binomial(m: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// `((1 - eps) id + eps R^{(x) n})^m` as its binomial expansion.
pub fn noisy_power(rho: &ComplexMatrix, n: usize, epsilon: f64, lambda: f64, m: u32) -> ComplexMatrix {
    (0..=m).fold(ComplexMatrix::zeros(rho.nrows(), rho.ncols()), |acc, j| {
        let w = binomial(m, j) * (1.0 - epsilon).powi((m - j) as i32) * epsilon.powi(j as i32);
        if w == 0.0 {
            acc
        } else {
            acc + product_depolarizing_power(rho, n, lambda, j) * c(w, 0.0)
        }
    })
}

pub fn entropy(rho: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(rho).expect("Hermitian").into_iter().filter(|&p| p > 1e-12).map(|p| -p * p.ln()).sum()
}

/// `sum_{ij} a_ij b_ji`, real part.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// `(tr rho^2 - 2^{-n}) / 2`, i.e. half the squared distance to `I / 2^n`.
pub fn zeta(rho: &ComplexMatrix) -> f64 {
    0.5 * (trace_product(rho, rho) - 1.0 / rho.nrows() as f64)
}

pub fn bloch_vector(rho: &ComplexMatrix) -> [f64; 3] {
    [pauli_x(), pauli_y(), pauli_z()].map(|p| trace_product(&p, rho))
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn hs(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
