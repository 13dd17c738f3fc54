//! Cluster/block layouts and the block-depolarizer family used to bound the
//! number of qubits a register can hold before the entropy produced by a
//! mixture of local depolarizers outweighs the energy budget.
//!
//! `N = n k d` qubits are grouped into `L = n k` clusters of `d` qubits, and
//! the clusters into `n` blocks of `k` consecutive clusters. Block and member
//! indices are 0-based.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::FreeEnergyParams;
use crate::linalg::{
    c, diag, hermitian_commutator_norm, identity, matmul, random_density, random_haar_unitary, tensor_all,
    trace_of_product, von_neumann_entropy, ComplexMatrix, DensityMatrix,
};

/// Largest register assembled into a global matrix.
pub const MAX_GLOBAL_QUBITS: usize = 12;

/// Commutator HS-norm accepted for a commuting family.
pub const COMMUTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClusterLayout {
    /// Number of blocks.
    pub n: usize,
    /// Clusters per block.
    pub k: usize,
    /// Qubits per cluster.
    pub d: usize,
}

impl ClusterLayout {
    pub fn new(n: usize, k: usize, d: usize) -> Result<Self> {
        if n == 0 || k == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!("layout (n={n}, k={k}, d={d}) needs positive sizes")));
        }
        n.checked_mul(k).and_then(|l| l.checked_mul(d)).ok_or_else(|| Error::Overflow("n*k*d overflows".into()))?;
        Ok(Self { n, k, d })
    }

    pub fn clusters(&self) -> usize {
        self.n * self.k
    }

    pub fn qubits(&self) -> usize {
        self.n * self.k * self.d
    }

    pub fn cluster_dim(&self) -> usize {
        1 << self.d
    }

    pub fn block_of(&self, cluster: usize) -> usize {
        cluster / self.k
    }

    /// Qubit indices belonging to `cluster`.
    pub fn cluster_qubits(&self, cluster: usize) -> std::ops::Range<usize> {
        cluster * self.d..(cluster + 1) * self.d
    }

    fn ensure_assemblable(&self) -> Result<()> {
        if self.qubits() > MAX_GLOBAL_QUBITS {
            return Err(Error::SizeLimit { qubits: self.qubits(), limit: MAX_GLOBAL_QUBITS });
        }
        Ok(())
    }
}

/// `rho = rho^(1) (x) ... (x) rho^(L)` in cluster order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    layout: ClusterLayout,
    cluster_states: Vec<DensityMatrix>,
}

impl ProductState {
    pub fn new(layout: ClusterLayout, cluster_states: Vec<DensityMatrix>) -> Result<Self> {
        if cluster_states.len() != layout.clusters() {
            return Err(Error::InvalidParameter(format!(
                "{} cluster states for {} clusters",
                cluster_states.len(),
                layout.clusters()
            )));
        }
        for s in &cluster_states {
            if s.dim() != layout.cluster_dim() {
                return Err(Error::DimMismatch { expected: layout.cluster_dim(), actual: s.dim() });
            }
        }
        Ok(Self { layout, cluster_states })
    }

    /// Independent random pure cluster states.
    pub fn random_pure(layout: ClusterLayout, seed: u64) -> Self {
        Self::random_with_rank(layout, seed, |_| 1)
    }

    /// Independent full-rank random cluster states.
    pub fn random_mixed(layout: ClusterLayout, seed: u64) -> Self {
        Self::random_with_rank(layout, seed, |dim| dim)
    }

    fn random_with_rank(layout: ClusterLayout, seed: u64, rank: impl Fn(usize) -> usize) -> Self {
        let dim = layout.cluster_dim();
        let states = (0..layout.clusters())
            .map(|l| {
                let sub_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(l as u64);
                random_density(dim, rank(dim), sub_seed).expect("rank within dimension")
            })
            .collect();
        Self { layout, cluster_states: states }
    }

    pub fn layout(&self) -> ClusterLayout {
        self.layout
    }

    pub fn cluster_states(&self) -> &[DensityMatrix] {
        &self.cluster_states
    }

    /// The global `2^N`-dimensional state.
    pub fn assemble(&self) -> Result<DensityMatrix> {
        self.layout.ensure_assemblable()?;
        let m = tensor_all(self.cluster_states.iter().map(|s| s.matrix()));
        Ok(DensityMatrix::from_hermitian_unchecked(m))
    }
}

/// `T_i`: depolarizes every cluster of block `i`, leaves the rest alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockDepolarizer {
    layout: ClusterLayout,
    block: usize,
    lambda: f64,
}

pub fn block_depolarizer(layout: ClusterLayout, block: usize, lambda: f64) -> Result<BlockDepolarizer> {
    if block >= layout.n {
        return Err(Error::BadBlockIndex { index: block, blocks: layout.n });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadLambda(lambda));
    }
    Ok(BlockDepolarizer { layout, block, lambda })
}

impl BlockDepolarizer {
    pub fn block(&self) -> usize {
        self.block
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Acts cluster by cluster on a product state.
    pub fn apply(&self, state: &ProductState) -> Result<ProductState> {
        if state.layout != self.layout {
            return Err(Error::InvalidParameter("state layout differs from channel layout".into()));
        }
        let dim = self.layout.cluster_dim();
        let mixed = identity(dim) * c(self.lambda / dim as f64, 0.0);
        let states = state
            .cluster_states
            .iter()
            .enumerate()
            .map(|(l, s)| {
                if self.layout.block_of(l) == self.block {
                    DensityMatrix::from_hermitian_unchecked(s.matrix() * c(1.0 - self.lambda, 0.0) + &mixed)
                } else {
                    s.clone()
                }
            })
            .collect();
        Ok(ProductState { layout: self.layout, cluster_states: states })
    }

    /// Acts on an arbitrary global state of the `N`-qubit register.
    pub fn apply_global(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.layout.qubits();
        if rho.dim() != 1 << n {
            return Err(Error::DimMismatch { expected: 1 << n, actual: rho.dim() });
        }
        let mut m = rho.matrix().clone();
        for l in self.block * self.layout.k..(self.block + 1) * self.layout.k {
            m = depolarize_qubit_set(&m, self.layout.cluster_qubits(l), n, self.lambda);
        }
        Ok(DensityMatrix::from_hermitian_unchecked(m))
    }
}

/// `(1 - lambda) m + lambda (I/2^|Q| (x) tr_Q m)` for the contiguous qubit set `Q`.
fn depolarize_qubit_set(m: &ComplexMatrix, qubits: std::ops::Range<usize>, n: usize, lambda: f64) -> ComplexMatrix {
    let width = qubits.len();
    let shift = n - qubits.end;
    let mask = ((1usize << width) - 1) << shift;
    let dim = m.nrows();
    let weight = c(lambda / (1usize << width) as f64, 0.0);
    ComplexMatrix::from_fn(dim, dim, |r, col| {
        let v = m[(r, col)] * c(1.0 - lambda, 0.0);
        if (r ^ col) & mask != 0 {
            return v;
        }
        let (r0, c0) = (r & !mask, col & !mask);
        let traced: num_complex::Complex64 =
            (0..1usize << width).map(|s| m[(r0 | (s << shift), c0 | (s << shift))]).sum();
        v + traced * weight
    })
}

/// Mutually commuting density operators with their measured overlap budget.
#[derive(Debug, Clone)]
pub struct CommutingFamily {
    members: Vec<DensityMatrix>,
    kappa: f64,
}

impl CommutingFamily {
    /// Checks pairwise commutation and records
    /// `kappa = max_i sum_{j != i} tr(rho_j rho_i)`.
    pub fn new(members: Vec<DensityMatrix>) -> Result<Self> {
        let dim = members.first().map(|m| m.dim()).ok_or_else(|| Error::InvalidParameter("empty family".into()))?;
        if let Some(bad) = members.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, actual: bad.dim() });
        }
        let worst = max_commutator_norm(&members);
        if worst > COMMUTATION_TOL {
            return Err(Error::InvariantViolation(format!("members do not commute (||[a,b]|| = {worst:e})")));
        }
        let mut family = Self { members, kappa: 0.0 };
        family.kappa = (0..family.members.len()).map(|i| family.overlap(i)).fold(0.0, f64::max);
        Ok(family)
    }

    pub fn members(&self) -> &[DensityMatrix] {
        &self.members
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn overlap(&self, i: usize) -> f64 {
        let target = self.members[i].matrix();
        self.members
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, m)| trace_of_product(m.matrix(), target).re)
            .sum()
    }

    /// `n^{-1} sum_i rho_i`.
    pub fn average(&self) -> DensityMatrix {
        let w = 1.0 / self.members.len() as f64;
        let weighted: Vec<(f64, &DensityMatrix)> = self.members.iter().map(|m| (w, m)).collect();
        DensityMatrix::mixture(&weighted).expect("members share a dimension")
    }
}

/// Largest HS-norm of a pairwise commutator.
pub fn max_commutator_norm(members: &[DensityMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            worst = worst.max(hermitian_commutator_norm(a.matrix(), b.matrix()));
        }
    }
    worst
}

/// The global states `T_i(rho)` for every block.
pub fn build_family(state: &ProductState, lambda: f64) -> Result<CommutingFamily> {
    let layout = state.layout();
    layout.ensure_assemblable()?;
    let members = (0..layout.n)
        .map(|i| block_depolarizer(layout, i, lambda)?.apply(state)?.assemble())
        .collect::<Result<Vec<_>>>()?;
    CommutingFamily::new(members)
}

/// `sum_{j != i} tr(rho_j rho_i)`.
pub fn overlap_sum(family: &CommutingFamily, i: usize) -> Result<f64> {
    if i >= family.len() {
        return Err(Error::BadIndex { index: i, len: family.len() });
    }
    Ok(family.overlap(i))
}

/// `(n - 1)(1 - lambda + lambda/2^d)^{2k}`.
pub fn eq3_bound(n: usize, k: usize, d: usize, lambda: f64) -> f64 {
    let base = 1.0 - lambda + lambda / (d as f64).exp2();
    (n as f64 - 1.0) * base.powf(2.0 * k as f64)
}

/// Smallest `k` for which [`eq3_bound`] is at most one.
pub fn min_block_size(n: usize, d: usize, lambda: f64) -> Result<usize> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be positive".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadLambda(lambda));
    }
    if n <= 2 {
        return Ok(1);
    }
    if lambda == 0.0 {
        return Err(Error::Unreachable(n));
    }
    let base = 1.0 - lambda + lambda / (d as f64).exp2();
    let estimate = ((n as f64 - 1.0).ln() / (2.0 * (1.0 / base).ln())).ceil();
    let mut k = (estimate as usize).max(1);
    while eq3_bound(n, k, d, lambda) > 1.0 {
        k += 1;
    }
    while k > 1 && eq3_bound(n, k - 1, d, lambda) <= 1.0 {
        k -= 1;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm2Report {
    /// `S(n^{-1} sum rho_i)`.
    pub lhs: f64,
    /// `n^{-1} sum S(rho_i) + ln n - 2 sqrt(kappa)`.
    pub rhs: f64,
    pub slack: f64,
    pub kappa: f64,
}

impl Thm2Report {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.slack >= -tolerance
    }
}

/// Evaluates both sides of the mixture-entropy lower bound for a family,
/// using the family's measured overlap budget.
pub fn thm2_check(family: &CommutingFamily) -> Result<Thm2Report> {
    let n = family.len() as f64;
    let lhs = von_neumann_entropy(&family.average());
    let mean_entropy = family.members().iter().map(von_neumann_entropy).sum::<f64>() / n;
    let rhs = mean_entropy + n.ln() - 2.0 * family.kappa().sqrt();
    Ok(Thm2Report { lhs, rhs, slack: lhs - rhs, kappa: family.kappa() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureGainReport {
    /// `S(n^{-1} sum T_i(rho)) - S(rho)`.
    pub gain_exact: f64,
    /// `n^{-1} sum S(rho_i) - S(rho) + ln n - 2 sqrt(kappa)`.
    pub thm2_lower: f64,
    pub kappa: f64,
}

/// Entropy produced by the averaged channel `n^{-1} sum T_i`.
pub fn mixture_entropy_gain(state: &ProductState, lambda: f64) -> Result<MixtureGainReport> {
    let family = build_family(state, lambda)?;
    let s0 = von_neumann_entropy(&state.assemble()?);
    let report = thm2_check(&family)?;
    Ok(MixtureGainReport { gain_exact: report.lhs - s0, thm2_lower: report.rhs - s0, kappa: report.kappa })
}

/// `n^{-1} sum_i T_i` applied to a global state.
pub fn apply_mean_block_channel(layout: ClusterLayout, lambda: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    layout.ensure_assemblable()?;
    let images =
        (0..layout.n).map(|i| block_depolarizer(layout, i, lambda)?.apply_global(rho)).collect::<Result<Vec<_>>>()?;
    let w = 1.0 / layout.n as f64;
    let weighted: Vec<(f64, &DensityMatrix)> = images.iter().map(|m| (w, m)).collect();
    DensityMatrix::mixture(&weighted)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitBoundReport {
    /// Smallest block count whose certified mixture entropy exceeds `beta E`.
    pub n_crash: u64,
    pub beta_e: f64,
    pub kappa: f64,
    /// The average-entropy term is dropped, so the estimate is conservative.
    pub conservative: bool,
}

impl QubitBoundReport {
    /// `N = n_crash k d`.
    pub fn qubits(&self, k: u64, d: u64) -> Option<u64> {
        self.n_crash.checked_mul(k)?.checked_mul(d)
    }
}

/// Smallest `n >= 1` with `ln n - 2 sqrt(kappa) > beta_e`.
pub fn max_qubit_count_for(beta_e: f64, kappa: f64) -> Result<QubitBoundReport> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidParameter(format!("overlap budget {kappa} must be nonnegative")));
    }
    if !beta_e.is_finite() || beta_e < 0.0 {
        return Err(Error::InvalidParameter(format!("beta*E {beta_e} must be nonnegative")));
    }
    let threshold = beta_e + 2.0 * kappa.sqrt();
    let guess = threshold.exp().floor();
    if guess.is_nan() || guess >= (1u64 << 62) as f64 {
        return Err(Error::Overflow(format!("e^{threshold} blocks")));
    }
    let mut n = guess as u64 + 1;
    while (n as f64).ln() <= threshold {
        n += 1;
    }
    while n > 1 && ((n - 1) as f64).ln() > threshold {
        n -= 1;
    }
    Ok(QubitBoundReport { n_crash: n, beta_e, kappa, conservative: true })
}

pub fn max_qubit_count(params: &FreeEnergyParams, kappa: f64) -> Result<QubitBoundReport> {
    max_qubit_count_for(params.entropy_allowance(), kappa)
}

/// Uniform point on the probability simplex.
fn simplex_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `n` commuting states `V diag(p_i) V*` with a shared Haar basis `V` and
/// independent uniformly distributed spectra `p_i`.
pub fn random_codiagonal_family(n: usize, dim: usize, seed: u64) -> Result<CommutingFamily> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidParameter("family needs at least one member of positive dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = random_haar_unitary(dim, seed ^ 0x5DEE_CE66_D1CE_B00C);
    let members = (0..n)
        .map(|_| {
            let d = diag(&simplex_point(dim, &mut rng));
            DensityMatrix::from_hermitian_unchecked(matmul(&matmul(&basis, &d), &basis.adjoint()))
        })
        .collect();
    CommutingFamily::new(members)
}
