//! Noisy circuit runner: every gate layer `U` is followed by one noise step,
//! `rho -> T(U rho U*)`, and each step is logged with its entropy and
//! free-energy bookkeeping.

use serde::Serialize;

use crate::channels::{noise_step, LocalStochasticNoise};
use crate::error::{Error, Result};
use crate::functionals::{eq2_closed_form, free_energy_shift, zeta, FreeEnergyParams};
use crate::linalg::{conjugate_on_qubits, unitarity_defect, von_neumann_entropy, ComplexMatrix, DensityMatrix};

pub const MAX_CIRCUIT_QUBITS: usize = 12;
pub const UNITARITY_TOL: f64 = 1e-10;

/// A one- or two-qubit unitary; `targets[0]` is the more significant qubit
/// of the gate's basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    targets: Vec<usize>,
    matrix: ComplexMatrix,
}

impl Gate {
    pub fn new(targets: Vec<usize>, matrix: ComplexMatrix) -> std::result::Result<Self, String> {
        match targets.as_slice() {
            [_] => {}
            [a, b] if a != b => {}
            [_, _] => return Err("two-qubit gate targets must differ".into()),
            _ => return Err(format!("gate acts on {} qubits; only 1 or 2 are supported", targets.len())),
        }
        let expected = 1usize << targets.len();
        if matrix.nrows() != expected || matrix.ncols() != expected {
            return Err(format!(
                "matrix is {}x{}, expected {expected}x{expected} for {} target(s)",
                matrix.nrows(),
                matrix.ncols(),
                targets.len()
            ));
        }
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOL {
            return Err(format!("matrix is not unitary (||U*U - I|| = {defect:e})"));
        }
        Ok(Self { targets, matrix })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateLayer {
    pub gates: Vec<Gate>,
}

impl GateLayer {
    pub fn new(gates: Vec<Gate>) -> Self {
        Self { gates }
    }

    /// Checks target ranges, disjointness and the gate-count bound `max_gates`.
    pub fn validate(&self, n: usize, max_gates: usize) -> std::result::Result<(), String> {
        if self.gates.len() > max_gates {
            return Err(format!("{} gates exceed the per-layer bound K = {max_gates}", self.gates.len()));
        }
        let mut used = vec![false; n];
        for (g, gate) in self.gates.iter().enumerate() {
            for &t in gate.targets() {
                if t >= n {
                    return Err(format!("gate {g}: target {t} out of range for {n} qubits"));
                }
                if used[t] {
                    return Err(format!("gate {g}: target {t} overlaps another gate in the layer"));
                }
                used[t] = true;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    layers: Vec<GateLayer>,
    max_gates: usize,
}

impl Circuit {
    /// A circuit whose layers hold at most `num_qubits` gates.
    pub fn new(num_qubits: usize, layers: Vec<GateLayer>) -> Result<Self> {
        Self::with_gate_bound(num_qubits, layers, num_qubits)
    }

    pub fn with_gate_bound(num_qubits: usize, layers: Vec<GateLayer>, max_gates: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_CIRCUIT_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "circuit width {num_qubits} outside 1..={MAX_CIRCUIT_QUBITS}"
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            layer.validate(num_qubits, max_gates).map_err(|reason| Error::BadLayer { layer: i, reason })?;
        }
        Ok(Self { num_qubits, layers, max_gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layers(&self) -> &[GateLayer] {
        &self.layers
    }

    pub fn max_gates(&self) -> usize {
        self.max_gates
    }
}

/// `U rho U*` for the layer's tensor-product unitary.
pub fn apply_gate_layer(rho: &DensityMatrix, layer: &GateLayer, n: usize) -> Result<DensityMatrix> {
    if rho.dim() != 1 << n {
        return Err(Error::DimMismatch { expected: 1 << n, actual: rho.dim() });
    }
    layer.validate(n, usize::MAX).map_err(|reason| Error::BadLayer { layer: 0, reason })?;
    let mut m = rho.matrix().clone();
    for gate in &layer.gates {
        m = conjugate_on_qubits(&m, gate.matrix(), gate.targets(), n);
    }
    Ok(DensityMatrix::from_hermitian_unchecked(m))
}

/// One computation step followed by one noise step.
pub fn step(rho: &DensityMatrix, layer: &GateLayer, noise: &LocalStochasticNoise) -> Result<DensityMatrix> {
    noise_step(noise, &apply_gate_layer(rho, layer, noise.num_qubits())?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub stop_on_crash: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerHeader {
    pub num_qubits: usize,
    pub beta: f64,
    pub energy_budget: f64,
    pub epsilon: f64,
    pub c_used: f64,
    pub zeta0: f64,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub step: usize,
    /// Entropy after the gate layer, before the noise step.
    pub entropy_after_gates: f64,
    pub entropy: f64,
    pub delta_s: f64,
    pub eq2_bound: f64,
    pub delta_f: f64,
    pub crashed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLedger {
    pub header: LedgerHeader,
    pub rows: Vec<LedgerRow>,
}

impl RunLedger {
    pub fn first_crash(&self) -> Option<usize> {
        self.rows.iter().find(|r| r.crashed).map(|r| r.step)
    }
}

/// Runs the circuit with a noise step after every layer.
pub fn run(
    circuit: &Circuit,
    noise: &LocalStochasticNoise,
    rho0: &DensityMatrix,
    params: &FreeEnergyParams,
    c_used: f64,
    options: RunOptions,
) -> Result<RunLedger> {
    let n = circuit.num_qubits();
    if noise.num_qubits() != n {
        return Err(Error::DimMismatch { expected: n, actual: noise.num_qubits() });
    }
    if !(0.0..=1.0).contains(&c_used) {
        return Err(Error::InvalidParameter(format!("contraction rate {c_used} outside [0, 1]")));
    }
    let z = zeta(rho0, n)?;
    let eps = noise.epsilon();
    let s0 = von_neumann_entropy(rho0);
    let header = LedgerHeader {
        num_qubits: n,
        beta: params.beta,
        energy_budget: params.energy_budget,
        epsilon: eps,
        c_used,
        zeta0: z,
        layers: circuit.layers().len(),
    };

    let mut rows = vec![LedgerRow {
        step: 0,
        entropy_after_gates: s0,
        entropy: s0,
        delta_s: 0.0,
        eq2_bound: 0.0,
        delta_f: free_energy_shift(params, 0.0),
        crashed: false,
    }];
    let mut state = rho0.clone();
    for (i, layer) in circuit.layers().iter().enumerate() {
        let m = i + 1;
        let gated = apply_gate_layer(&state, layer, n).map_err(|e| match e {
            Error::BadLayer { reason, .. } => Error::BadLayer { layer: i, reason },
            other => other,
        })?;
        let entropy_after_gates = von_neumann_entropy(&gated);
        state = noise_step(noise, &gated)?;
        let entropy = von_neumann_entropy(&state);
        let delta_s = entropy - s0;
        let delta_f = free_energy_shift(params, delta_s);
        let crashed = delta_f < 0.0;
        rows.push(LedgerRow {
            step: m,
            entropy_after_gates,
            entropy,
            delta_s,
            eq2_bound: eq2_closed_form(z, eps, c_used, m as u64),
            delta_f,
            crashed,
        });
        if crashed && options.stop_on_crash {
            break;
        }
    }
    Ok(RunLedger { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::depolarizing;
    use crate::linalg::{c, cnot, diag, hadamard, pauli_x, random_haar_unitary, DensityMatrix};

    fn max_entry_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn layer(gates: Vec<(Vec<usize>, ComplexMatrix)>) -> GateLayer {
        GateLayer::new(gates.into_iter().map(|(t, m)| Gate::new(t, m).unwrap()).collect())
    }

    #[test]
    fn gate_validation() {
        assert!(Gate::new(vec![0], diag(&[1.0, 2.0])).is_err());
        assert!(Gate::new(vec![0, 0], cnot()).is_err());
        assert!(Gate::new(vec![0], cnot()).is_err());
        assert!(Gate::new(vec![0, 1, 2], cnot()).is_err());
        assert!(Gate::new(vec![1, 0], cnot()).is_ok());
    }

    #[test]
    fn layer_validation() {
        let l = layer(vec![(vec![0, 1], cnot()), (vec![1], hadamard())]);
        assert!(l.validate(3, 3).unwrap_err().contains("overlaps"));
        let l = layer(vec![(vec![3], hadamard())]);
        assert!(l.validate(3, 3).unwrap_err().contains("out of range"));
        let l = layer(vec![(vec![0], hadamard()), (vec![1], hadamard())]);
        assert!(l.validate(3, 1).unwrap_err().contains("exceed"));
        let err = Circuit::new(2, vec![GateLayer::default(), layer(vec![(vec![2], hadamard())])]).unwrap_err();
        assert!(matches!(err, Error::BadLayer { layer: 1, .. }));
    }

    #[test]
    fn gate_layer_examples() {
        let rho = crate::linalg::random_density(4, 2, 1).unwrap();
        assert_eq!(apply_gate_layer(&rho, &GateLayer::default(), 2).unwrap(), rho);

        let flipped = apply_gate_layer(&DensityMatrix::basis(2, 0), &layer(vec![(vec![0], pauli_x())]), 1).unwrap();
        assert_eq!(flipped, DensityMatrix::basis(2, 1));

        let plus = DensityMatrix::new((crate::linalg::identity(2) + pauli_x()) * c(0.5, 0.0)).unwrap();
        let input = plus.tensor(&DensityMatrix::basis(2, 0));
        let bell = apply_gate_layer(&input, &layer(vec![(vec![0, 1], cnot())]), 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = DensityMatrix::pure(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
        assert!(max_entry_diff(bell.matrix(), expected.matrix()) < 1e-15);
        assert!(von_neumann_entropy(&bell).abs() < 1e-9);
    }

    #[test]
    fn step_examples() {
        let rho = crate::linalg::random_density(4, 4, 2).unwrap();
        let l = layer(vec![(vec![1, 0], random_haar_unitary(4, 3))]);
        let quiet = LocalStochasticNoise::new(0.0, depolarizing(0.4, 2).unwrap(), 2).unwrap();
        assert_eq!(step(&rho, &l, &quiet).unwrap(), apply_gate_layer(&rho, &l, 2).unwrap());

        let noise = LocalStochasticNoise::new(1.0, depolarizing(0.4, 2).unwrap(), 1).unwrap();
        let out = step(&DensityMatrix::basis(2, 0), &layer(vec![(vec![0], pauli_x())]), &noise).unwrap();
        assert!(max_entry_diff(out.matrix(), &diag(&[0.2, 0.8])) < 1e-15);
        let idle = step(&DensityMatrix::basis(2, 0), &GateLayer::default(), &noise).unwrap();
        assert!(max_entry_diff(idle.matrix(), &diag(&[0.8, 0.2])) < 1e-15);
    }

    #[test]
    fn run_with_no_layers() {
        let circuit = Circuit::new(2, vec![]).unwrap();
        let noise = LocalStochasticNoise::new(0.1, depolarizing(0.2, 2).unwrap(), 2).unwrap();
        let params = FreeEnergyParams::new(1.0, 0.3).unwrap();
        let ledger = run(&circuit, &noise, &DensityMatrix::basis(4, 0), &params, 0.8, RunOptions::default()).unwrap();
        assert_eq!(ledger.rows.len(), 1);
        assert_eq!(ledger.rows[0].delta_f, 0.3);
    }

    #[test]
    fn run_flags_and_optionally_stops_on_crash() {
        let layers = vec![layer(vec![(vec![0], hadamard())]); 10];
        let circuit = Circuit::new(1, layers).unwrap();
        let noise = LocalStochasticNoise::new(0.5, depolarizing(0.5, 2).unwrap(), 1).unwrap();
        let params = FreeEnergyParams::new(1.0, 0.05).unwrap();
        let rho0 = DensityMatrix::basis(2, 0);
        let full = run(&circuit, &noise, &rho0, &params, 0.5, RunOptions::default()).unwrap();
        assert_eq!(full.rows.len(), 11);
        let first = full.first_crash().expect("budget is small enough to crash");
        let stopped = run(&circuit, &noise, &rho0, &params, 0.5, RunOptions { stop_on_crash: true }).unwrap();
        assert_eq!(stopped.rows.len(), first + 1);
        for row in &full.rows {
            assert!(row.delta_s >= row.eq2_bound - 1e-9);
            assert_eq!(row.crashed, row.delta_f < 0.0);
        }
    }
}
