//! JSON file formats for channels, noise, circuits and cluster layouts.
//!
//! Matrices are row-major arrays of rows, each complex entry written as
//! `[re, im]`.

use serde::{Deserialize, Serialize};

use crate::channels::{depolarizing, ChannelForm, LocalStochasticNoise, QuantumChannel};
use crate::linalg::{c, ComplexMatrix};
use crate::simulator::{Circuit, Gate, GateLayer};
use crate::spatial::ClusterLayout;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

/// Errors carry a path to the offending field so files can be fixed by hand.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl FormatError {
    fn invalid(field: impl Into<String>, reason: impl ToString) -> Self {
        Self::Invalid { field: field.into(), reason: reason.to_string() }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Parse(e.to_string()))
}

pub fn matrix_from_json(rows: &MatrixJson, field: &str) -> Result<ComplexMatrix, FormatError> {
    let dim = rows.len();
    if dim == 0 {
        return Err(FormatError::invalid(field, "empty matrix"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(FormatError::invalid(
                format!("{field}[{i}]"),
                format!("row has {} entries, expected {dim}", row.len()),
            ));
        }
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |i, j| {
        let [re, im] = rows[i][j];
        c(re, im)
    }))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelJson {
    Depolarizing { lambda: f64 },
    Kraus { ops: Vec<MatrixJson> },
}

impl ChannelJson {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        parse(text)
    }

    /// Builds a qubit channel.
    pub fn to_channel(&self) -> Result<QuantumChannel, FormatError> {
        match self {
            Self::Depolarizing { lambda } => depolarizing(*lambda, 2).map_err(|e| FormatError::invalid("lambda", e)),
            Self::Kraus { ops } => {
                let mats = ops
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix_from_json(m, &format!("ops[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                QuantumChannel::kraus(mats).map_err(|e| FormatError::invalid("ops", e))
            }
        }
    }

    pub fn from_channel(ch: &QuantumChannel) -> Self {
        match ch.form() {
            ChannelForm::Depolarizing { lambda } => Self::Depolarizing { lambda: *lambda },
            ChannelForm::Kraus(ops) => Self::Kraus { ops: ops.iter().map(matrix_to_json).collect() },
        }
    }
}

/// `{"epsilon": 0.05, "channel": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseJson {
    pub epsilon: f64,
    pub channel: ChannelJson,
}

impl NoiseJson {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        parse(text)
    }

    pub fn to_noise(&self, num_qubits: usize) -> Result<LocalStochasticNoise, FormatError> {
        let channel = self.channel.to_channel().map_err(|e| match e {
            FormatError::Invalid { field, reason } => FormatError::invalid(format!("channel.{field}"), reason),
            other => other,
        })?;
        LocalStochasticNoise::new(self.epsilon, channel, num_qubits).map_err(|e| FormatError::invalid("epsilon", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateJson {
    pub targets: Vec<usize>,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerJson {
    pub gates: Vec<GateJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitJson {
    pub num_qubits: usize,
    pub layers: Vec<LayerJson>,
    /// Per-layer gate bound; defaults to `num_qubits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gates: Option<usize>,
}

impl CircuitJson {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        parse(text)
    }

    pub fn to_circuit(&self) -> Result<Circuit, FormatError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut gates = Vec::with_capacity(layer.gates.len());
            for (g, gate) in layer.gates.iter().enumerate() {
                let field = format!("layers[{i}].gates[{g}]");
                let m = matrix_from_json(&gate.matrix, &format!("{field}.matrix"))?;
                gates.push(Gate::new(gate.targets.clone(), m).map_err(|r| FormatError::invalid(field, r))?);
            }
            let layer = GateLayer::new(gates);
            layer
                .validate(self.num_qubits, self.max_gates.unwrap_or(self.num_qubits))
                .map_err(|r| FormatError::invalid(format!("layers[{i}]"), r))?;
            layers.push(layer);
        }
        Circuit::with_gate_bound(self.num_qubits, layers, self.max_gates.unwrap_or(self.num_qubits))
            .map_err(|e| FormatError::invalid("num_qubits", e))
    }

    pub fn from_circuit(circuit: &Circuit) -> Self {
        Self {
            num_qubits: circuit.num_qubits(),
            layers: circuit
                .layers()
                .iter()
                .map(|l| LayerJson {
                    gates: l
                        .gates
                        .iter()
                        .map(|g| GateJson { targets: g.targets().to_vec(), matrix: matrix_to_json(g.matrix()) })
                        .collect(),
                })
                .collect(),
            max_gates: (circuit.max_gates() != circuit.num_qubits()).then_some(circuit.max_gates()),
        }
    }
}

/// `{"n":3,"k":2,"d":1,"lambda":0.5,"seed":7}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutJson {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
}

impl LayoutJson {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        parse(text)
    }

    pub fn layout(&self) -> Result<ClusterLayout, FormatError> {
        ClusterLayout::new(self.n, self.k, self.d).map_err(|e| FormatError::invalid("n/k/d", e))
    }
}
