//! Quantum channels, the local stochastic noise step, and numerical
//! estimation of the trace-norm contraction rate of a qubit channel.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functionals::binomial;
use crate::linalg::{
    c, conjugate_on_qubits, depolarize_qubit, hs_norm, identity, trace_norm, ComplexMatrix, DensityMatrix,
    HERMITIAN_TOL,
};

/// Rates at or above `1 - STRICT_MARGIN` are reported as not strictly
/// contractive.
pub const STRICT_MARGIN: f64 = 1e-6;

/// Largest power accepted by the binomial evaluation of `T^m`.
pub const MAX_BINOMIAL_POWER: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelForm {
    Kraus(Vec<ComplexMatrix>),
    /// `sigma -> (1 - lambda) sigma + lambda I/dim`.
    Depolarizing {
        lambda: f64,
    },
}

/// A trace-preserving completely positive map on `dim x dim` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    dim: usize,
    form: ChannelForm,
}

impl QuantumChannel {
    /// Kraus channel; requires `sum K* K = I` within 1e-10.
    pub fn kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = ops.first().map(|k| k.nrows()).ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        if dim == 0 {
            return Err(Error::InvalidChannel("empty Kraus operator".into()));
        }
        let mut completeness = ComplexMatrix::zeros(dim, dim);
        for (i, k) in ops.iter().enumerate() {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator {i} is {}x{}, expected {dim}x{dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
            completeness += k.adjoint() * k;
        }
        let defect = (completeness - identity(dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidChannel(format!("Kraus operators not trace preserving (defect {defect:e})")));
        }
        Ok(Self { dim, form: ChannelForm::Kraus(ops) })
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::kraus(vec![u])
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("damping {gamma} outside [0, 1]")));
        }
        let k0 = crate::linalg::real_matrix(2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]);
        let k1 = crate::linalg::real_matrix(2, &[0.0, gamma.sqrt(), 0.0, 0.0]);
        Self::kraus(vec![k0, k1])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &ChannelForm {
        &self.form
    }

    /// Contraction rate when it is known in closed form (depolarizing),
    /// otherwise the numerical estimate at the given grid resolution.
    pub fn contraction_rate_or_estimate(&self, grid_resolution: usize) -> Result<f64> {
        match self.form {
            ChannelForm::Depolarizing { lambda } => Ok(1.0 - lambda),
            ChannelForm::Kraus(_) => Ok(contraction_rate(self, grid_resolution)?.rate),
        }
    }
}

/// The depolarizing channel on `dim`-level systems, `lambda` in `[0, 1)`.
pub fn depolarizing(lambda: f64, dim: usize) -> Result<QuantumChannel> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::BadLambda(lambda));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(QuantumChannel { dim, form: ChannelForm::Depolarizing { lambda } })
}

fn apply_to_matrix(t: &QuantumChannel, m: &ComplexMatrix) -> ComplexMatrix {
    match &t.form {
        ChannelForm::Kraus(ops) => {
            ops.iter().fold(ComplexMatrix::zeros(t.dim, t.dim), |acc, k| acc + k * m * k.adjoint())
        }
        ChannelForm::Depolarizing { lambda } => {
            let tr = crate::linalg::trace(m);
            m * c(1.0 - lambda, 0.0) + identity(t.dim) * (tr * (*lambda / t.dim as f64))
        }
    }
}

pub fn apply_channel(t: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if t.dim != rho.dim() {
        return Err(Error::DimMismatch { expected: t.dim, actual: rho.dim() });
    }
    Ok(DensityMatrix::from_hermitian_unchecked(apply_to_matrix(t, rho.matrix())))
}

/// Whether `t(I/dim)` equals `I/dim` to within `tol` in Hilbert-Schmidt norm.
pub fn is_bistochastic(t: &QuantumChannel, tol: f64) -> bool {
    let mixed = identity(t.dim) / c(t.dim as f64, 0.0);
    hs_norm(&(apply_to_matrix(t, &mixed) - mixed)) <= tol
}

/// Outcome of the contraction-rate search.
#[derive(Debug, Clone)]
pub struct ContractionEstimate {
    pub rate: f64,
    pub witness: (DensityMatrix, DensityMatrix),
    /// Bloch direction (polar, azimuthal) of the witness pair.
    pub witness_angles: (f64, f64),
    pub grid_resolution: usize,
    pub refined: bool,
}

impl ContractionEstimate {
    pub fn is_strictly_contractive(&self) -> bool {
        self.rate < 1.0 - STRICT_MARGIN
    }
}

/// Pure qubit state with Bloch vector along `(theta, phi)`.
pub fn bloch_pure(theta: f64, phi: f64) -> DensityMatrix {
    bloch_state([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()])
}

/// `(I + r . sigma)/2`; `|r| <= 1` is the caller's responsibility.
pub fn bloch_state(r: [f64; 3]) -> DensityMatrix {
    let [x, y, z] = r;
    let m = ComplexMatrix::from_row_slice(
        2,
        2,
        &[c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0), c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
    );
    DensityMatrix::from_hermitian_unchecked(m)
}

/// `||R(rho) - R(sigma)||_1 / ||rho - sigma||_1`.
pub fn contraction_ratio(r: &QuantumChannel, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let before = trace_norm(&(rho.matrix() - sigma.matrix()))?;
    if before == 0.0 {
        return Err(Error::InvalidParameter("identical states have no contraction ratio".into()));
    }
    let after = trace_norm(&(apply_channel(r, rho)?.into_matrix() - apply_channel(r, sigma)?.into_matrix()))?;
    Ok(after / before)
}

fn antipodal_ratio(r: &QuantumChannel, theta: f64, phi: f64) -> f64 {
    let rho = bloch_pure(theta, phi);
    let sigma = bloch_pure(PI - theta, phi + PI);
    contraction_ratio(r, &rho, &sigma).expect("antipodal states are distinct and qubit-sized")
}

/// Estimates the trace-norm contraction rate of a qubit channel.
///
/// Antipodal pure-state pairs are scanned on a `grid_resolution^2` grid of
/// Bloch directions; the best cell (lowest index on ties) is then refined by
/// coordinate ascent on the two angles.
pub fn contraction_rate(r: &QuantumChannel, grid_resolution: usize) -> Result<ContractionEstimate> {
    if r.dim != 2 {
        return Err(Error::DimMismatch { expected: 2, actual: r.dim });
    }
    if grid_resolution == 0 {
        return Err(Error::InvalidParameter("grid resolution must be positive".into()));
    }
    let res = grid_resolution as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..grid_resolution {
        let theta = PI * (i as f64 + 0.5) / res;
        for j in 0..grid_resolution {
            let phi = 2.0 * PI * j as f64 / res;
            let v = antipodal_ratio(r, theta, phi);
            if v > best.0 {
                best = (v, theta, phi);
            }
        }
    }

    let grid_value = best.0;
    let (mut value, mut theta, mut phi) = best;
    let mut step = PI / res;
    let mut iterations = 0;
    while step > 1e-10 && iterations < 100_000 {
        iterations += 1;
        let mut gain = 0.0;
        for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let v = antipodal_ratio(r, theta + dt, phi + dp);
            if v > value {
                gain += v - value;
                value = v;
                theta += dt;
                phi += dp;
            }
        }
        if gain < 1e-9 {
            step /= 2.0;
        }
    }

    let rho = bloch_pure(theta, phi);
    let sigma = bloch_pure(PI - theta, phi + PI);
    let rate = contraction_ratio(r, &rho, &sigma)?;
    Ok(ContractionEstimate {
        rate,
        witness: (rho, sigma),
        witness_angles: (theta, phi),
        grid_resolution,
        refined: value > grid_value,
    })
}

fn ensure_register(expected_qubits: usize, rho: &DensityMatrix) -> Result<()> {
    let expected = 1usize << expected_qubits;
    if rho.dim() != expected {
        return Err(Error::DimMismatch { expected, actual: rho.dim() });
    }
    Ok(())
}

fn product_channel_matrix(r: &QuantumChannel, n: usize, m: &ComplexMatrix) -> ComplexMatrix {
    let mut out = m.clone();
    for q in 0..n {
        out = match &r.form {
            ChannelForm::Depolarizing { lambda } => depolarize_qubit(&out, q, n, *lambda),
            ChannelForm::Kraus(ops) => ops
                .iter()
                .fold(ComplexMatrix::zeros(m.nrows(), m.ncols()), |acc, k| acc + conjugate_on_qubits(&out, k, &[q], n)),
        };
    }
    out
}

/// `R^{(x)n}(rho)`, applying `R` one qubit at a time.
pub fn apply_product_channel(r: &QuantumChannel, n: usize, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if r.dim != 2 {
        return Err(Error::DimMismatch { expected: 2, actual: r.dim });
    }
    ensure_register(n, rho)?;
    Ok(DensityMatrix::from_hermitian_unchecked(product_channel_matrix(r, n, rho.matrix())))
}

/// `T = (1 - epsilon) id + epsilon R^{(x)N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStochasticNoise {
    epsilon: f64,
    local_channel: QuantumChannel,
    num_qubits: usize,
}

impl LocalStochasticNoise {
    pub fn new(epsilon: f64, local_channel: QuantumChannel, num_qubits: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("noise strength {epsilon} outside [0, 1]")));
        }
        if local_channel.dim != 2 {
            return Err(Error::DimMismatch { expected: 2, actual: local_channel.dim });
        }
        if num_qubits == 0 {
            return Err(Error::InvalidParameter("register needs at least one qubit".into()));
        }
        Ok(Self { epsilon, local_channel, num_qubits })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn local_channel(&self) -> &QuantumChannel {
        &self.local_channel
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }
}

pub fn noise_step(noise: &LocalStochasticNoise, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ensure_register(noise.num_qubits, rho)?;
    let m = rho.matrix();
    let noisy = product_channel_matrix(&noise.local_channel, noise.num_qubits, m);
    Ok(DensityMatrix::from_hermitian_unchecked(m * c(1.0 - noise.epsilon, 0.0) + noisy * c(noise.epsilon, 0.0)))
}

/// `T^m(rho)` by repeated application of [`noise_step`].
pub fn noise_step_power(noise: &LocalStochasticNoise, rho: &DensityMatrix, m: usize) -> Result<DensityMatrix> {
    ensure_register(noise.num_qubits, rho)?;
    let mut state = rho.clone();
    for _ in 0..m {
        state = noise_step(noise, &state)?;
    }
    Ok(state)
}

/// `T^m(rho)` through `sum_j C(m,j) (1-eps)^{m-j} eps^j R_N^j(rho)`.
/// Independent of [`noise_step_power`]; `m` is capped at 64.
pub fn noise_step_power_binomial(noise: &LocalStochasticNoise, rho: &DensityMatrix, m: u32) -> Result<DensityMatrix> {
    ensure_register(noise.num_qubits, rho)?;
    if m > MAX_BINOMIAL_POWER {
        return Err(Error::InvalidParameter(format!("binomial power {m} exceeds {MAX_BINOMIAL_POWER}")));
    }
    let eps = noise.epsilon;
    let mut power = rho.matrix().clone();
    let mut acc = ComplexMatrix::zeros(rho.dim(), rho.dim());
    for j in 0..=m {
        let w = binomial(m, j) as f64 * (1.0 - eps).powi((m - j) as i32) * eps.powi(j as i32);
        acc += &power * c(w, 0.0);
        if j < m {
            power = product_channel_matrix(&noise.local_channel, noise.num_qubits, &power);
        }
    }
    Ok(DensityMatrix::from_hermitian_unchecked(acc))
}
