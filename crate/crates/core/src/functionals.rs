//! Entropy-gain bounds for repeated local stochastic noise and the
//! free-energy bookkeeping built on them.
//!
//! With `x = eps (1 - C^2)` and `zeta = ||rho - I/2^N||_HS^2 / 2`, the entropy
//! produced by `m` noise steps is bounded below by
//! `zeta sum_j C(m,j) (1-eps)^{m-j} eps^j (1 - C^{2j}) = zeta (1 - (1-x)^m)`,
//! whose first-order part is `zeta m x`.

use serde::Serialize;

use crate::channels::{noise_step, LocalStochasticNoise, MAX_BINOMIAL_POWER};
use crate::error::{Error, Result};
use crate::linalg::{hs_norm, identity, von_neumann_entropy, DensityMatrix};

/// Largest register for which [`temporal_report`] simulates exactly.
pub const EXACT_SIMULATION_MAX_DIM: usize = 256;

/// Grid resolution used when a Kraus channel's rate has to be estimated.
pub const DEFAULT_RATE_RESOLUTION: usize = 64;

/// Exact binomial coefficient.
pub fn binomial(m: u32, j: u32) -> u128 {
    if j > m {
        return 0;
    }
    let j = j.min(m - j) as u128;
    let m = m as u128;
    (0..j).fold(1u128, |acc, i| acc * (m - i) / (i + 1))
}

/// `||rho - 2^{-N} I||_HS^2 / 2`.
pub fn zeta(rho: &DensityMatrix, n: usize) -> Result<f64> {
    let dim = 1usize << n;
    if rho.dim() != dim {
        return Err(Error::DimMismatch { expected: dim, actual: rho.dim() });
    }
    let shifted = rho.matrix() - identity(dim) / crate::linalg::c(dim as f64, 0.0);
    Ok(0.5 * hs_norm(&shifted).powi(2))
}

/// `(2^N - 1) / 2^{N+1}`, the value of zeta at pure states.
pub fn zeta_upper_bound(n: usize) -> f64 {
    let dim = (n as f64).exp2();
    (dim - 1.0) / (2.0 * dim)
}

/// `(1 - c^{2m}) zeta`.
pub fn thm1_lower_bound(zeta_value: f64, c: f64, m: u32) -> f64 {
    (1.0 - c.powi(2 * m as i32)) * zeta_value
}

/// `S(T^m rho) - S(rho)`.
pub fn entropy_gain(rho: &DensityMatrix, noise: &LocalStochasticNoise, m: usize) -> Result<f64> {
    let evolved = crate::channels::noise_step_power(noise, rho, m)?;
    Ok(von_neumann_entropy(&evolved) - von_neumann_entropy(rho))
}

/// Term-by-term binomial sum; `m` is capped at 64.
pub fn eq1_binomial_bound(zeta_value: f64, epsilon: f64, c: f64, m: u32) -> Result<f64> {
    if m > MAX_BINOMIAL_POWER {
        return Err(Error::InvalidParameter(format!("binomial power {m} exceeds {MAX_BINOMIAL_POWER}")));
    }
    let sum: f64 = (0..=m)
        .map(|j| {
            binomial(m, j) as f64
                * (1.0 - epsilon).powi((m - j) as i32)
                * epsilon.powi(j as i32)
                * (1.0 - c.powi(2 * j as i32))
        })
        .sum();
    Ok(zeta_value * sum)
}

/// `zeta (1 - [1 - eps (1 - c^2)]^m)`.
pub fn eq2_closed_form(zeta_value: f64, epsilon: f64, c: f64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let x = epsilon * (1.0 - c * c);
    if x >= 1.0 {
        return zeta_value;
    }
    -zeta_value * (m as f64 * (-x).ln_1p()).exp_m1()
}

/// `zeta m eps (1 - c^2)`.
pub fn linearized_gain(zeta_value: f64, epsilon: f64, c: f64, m: u64) -> f64 {
    zeta_value * m as f64 * epsilon * (1.0 - c * c)
}

/// Bound on `|eq2 - linearized|`, `zeta (m x)^2 / 2`, valid for `m x <= 1`.
pub fn linearization_error_bound(zeta_value: f64, epsilon: f64, c: f64, m: u64) -> f64 {
    let mx = m as f64 * epsilon * (1.0 - c * c);
    zeta_value * mx * mx / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeEnergyParams {
    pub beta: f64,
    pub energy_budget: f64,
}

impl FreeEnergyParams {
    pub fn new(beta: f64, energy_budget: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("inverse temperature {beta} must be positive")));
        }
        if !(energy_budget > 0.0 && energy_budget.is_finite()) {
            return Err(Error::InvalidParameter(format!("energy budget {energy_budget} must be positive")));
        }
        Ok(Self { beta, energy_budget })
    }

    /// `beta E`, the entropy (in nats) the budget can absorb.
    pub fn entropy_allowance(&self) -> f64 {
        self.beta * self.energy_budget
    }
}

/// `E - delta_s / beta`.
pub fn free_energy_shift(params: &FreeEnergyParams, delta_s: f64) -> f64 {
    params.energy_budget - delta_s / params.beta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashTime {
    /// First step count at which the bound exceeds `beta E`.
    At(u64),
    /// The saturating bound stays at or below `beta E` for every `m`.
    BoundSaturates,
    /// No entropy production is certified.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrashTimeResult {
    pub linearized: CrashTime,
    pub exact_bound: CrashTime,
    pub beta_e: f64,
    pub zeta: f64,
}

fn first_exceedance(allowance: f64, f: impl Fn(u64) -> f64) -> Result<u64> {
    let mut hi = 1u64;
    while f(hi) <= allowance {
        hi = hi.checked_mul(2).ok_or_else(|| Error::Overflow("crash time exceeds 2^64 steps".into()))?;
    }
    let mut lo = hi / 2;
    // f(lo) <= allowance (or lo = 0), f(hi) > allowance
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) > allowance {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Step counts after which the free-energy shift certified by the
/// linearized and by the closed-form bound turns negative.
pub fn crash_time(params: &FreeEnergyParams, zeta_value: f64, epsilon: f64, c: f64) -> Result<CrashTimeResult> {
    if zeta_value.is_nan() || zeta_value < 0.0 {
        return Err(Error::InvalidParameter(format!("zeta {zeta_value} must be nonnegative")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("noise strength {epsilon} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameter(format!("contraction rate {c} outside [0, 1]")));
    }
    let allowance = params.entropy_allowance();
    let rate = epsilon * (1.0 - c * c);
    if rate == 0.0 || zeta_value == 0.0 {
        return Ok(CrashTimeResult {
            linearized: CrashTime::Never,
            exact_bound: CrashTime::Never,
            beta_e: allowance,
            zeta: zeta_value,
        });
    }

    let guess = (allowance / (zeta_value * rate)).ceil();
    if guess.is_nan() || guess >= u64::MAX as f64 {
        return Err(Error::Overflow("linearized crash time exceeds 2^64 steps".into()));
    }
    let mut m_lin = (guess as u64).max(1);
    while linearized_gain(zeta_value, epsilon, c, m_lin) <= allowance {
        m_lin += 1;
    }
    while m_lin > 1 && linearized_gain(zeta_value, epsilon, c, m_lin - 1) > allowance {
        m_lin -= 1;
    }

    let exact_bound = if allowance >= zeta_value {
        CrashTime::BoundSaturates
    } else {
        CrashTime::At(first_exceedance(allowance, |m| eq2_closed_form(zeta_value, epsilon, c, m))?)
    };

    Ok(CrashTimeResult { linearized: CrashTime::At(m_lin), exact_bound, beta_e: allowance, zeta: zeta_value })
}

/// One row of [`temporal_report`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalBoundReport {
    pub m: u64,
    /// `None` when the register is too large to simulate.
    pub entropy_gain_exact: Option<f64>,
    pub thm1_bound: f64,
    /// `None` beyond the binomial power cap.
    pub eq1_bound: Option<f64>,
    pub eq2_closed_form: f64,
    pub linearized: f64,
    pub linearization_error: f64,
    /// Uses the exact gain when available, the closed-form bound otherwise.
    pub free_energy_shift: f64,
}

/// Bound table for `m = 0..=m_max`.
pub fn temporal_report(
    rho: &DensityMatrix,
    noise: &LocalStochasticNoise,
    params: &FreeEnergyParams,
    m_max: u64,
) -> Result<Vec<TemporalBoundReport>> {
    let n = noise.num_qubits();
    let z = zeta(rho, n)?;
    let c = noise.local_channel().contraction_rate_or_estimate(DEFAULT_RATE_RESOLUTION)?;
    let eps = noise.epsilon();
    let simulate = rho.dim() <= EXACT_SIMULATION_MAX_DIM;
    let s0 = von_neumann_entropy(rho);
    let mut state = rho.clone();

    let mut rows = Vec::with_capacity(m_max as usize + 1);
    for m in 0..=m_max {
        if m > 0 && simulate {
            state = noise_step(noise, &state)?;
        }
        let gain = simulate.then(|| von_neumann_entropy(&state) - s0);
        let eq2 = eq2_closed_form(z, eps, c, m);
        let eq1 = u32::try_from(m)
            .ok()
            .filter(|&m| m <= MAX_BINOMIAL_POWER)
            .map(|m| eq1_binomial_bound(z, eps, c, m))
            .transpose()?;
        let thm1 = u32::try_from(m).map(|m| thm1_lower_bound(z, c, m)).unwrap_or(z);
        rows.push(TemporalBoundReport {
            m,
            entropy_gain_exact: gain,
            thm1_bound: thm1,
            eq1_bound: eq1,
            eq2_closed_form: eq2,
            linearized: linearized_gain(z, eps, c, m),
            linearization_error: linearization_error_bound(z, eps, c, m),
            free_energy_shift: free_energy_shift(params, gain.unwrap_or(eq2)),
        });
    }
    Ok(rows)
}
