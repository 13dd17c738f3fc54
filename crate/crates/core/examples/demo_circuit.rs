//! Writes the shipped demo fixtures: a 4-qubit, 20-layer circuit and its
//! noise model.
//!
//! Usage: cargo run -p entroq --example demo_circuit -- [out_dir]

use std::path::PathBuf;

use entroq::channels::{depolarizing, LocalStochasticNoise};
use entroq::formats::{ChannelJson, CircuitJson, NoiseJson};
use entroq::linalg::{cnot, random_haar_unitary};
use entroq::simulator::{Circuit, Gate, GateLayer};

const QUBITS: usize = 4;
const LAYERS: usize = 20;
const SEED: u64 = 2024;

/// Even layers: a Haar-random single-qubit gate on every qubit.
/// Odd layers: CNOTs on (0,1),(2,3) or (1,2),(3,0), alternating.
fn demo_circuit() -> Circuit {
    let layers = (0..LAYERS)
        .map(|l| {
            let gates = if l % 2 == 0 {
                (0..QUBITS)
                    .map(|q| {
                        let u = random_haar_unitary(2, SEED + (l * QUBITS + q) as u64);
                        Gate::new(vec![q], u).expect("single-qubit unitary")
                    })
                    .collect()
            } else {
                let offset = (l / 2) % 2;
                (0..QUBITS / 2)
                    .map(|p| {
                        let a = (2 * p + offset) % QUBITS;
                        Gate::new(vec![a, (a + 1) % QUBITS], cnot()).expect("cnot")
                    })
                    .collect()
            };
            GateLayer::new(gates)
        })
        .collect();
    Circuit::new(QUBITS, layers).expect("valid circuit")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("fixtures"));
    std::fs::create_dir_all(&dir)?;

    let circuit = CircuitJson::from_circuit(&demo_circuit());
    let channel = depolarizing(0.2, 2)?;
    LocalStochasticNoise::new(0.05, channel.clone(), QUBITS)?;
    let noise = NoiseJson { epsilon: 0.05, channel: ChannelJson::from_channel(&channel) };

    std::fs::write(dir.join("demo_circuit.json"), serde_json::to_string_pretty(&circuit)? + "\n")?;
    std::fs::write(dir.join("demo_noise.json"), serde_json::to_string_pretty(&noise)? + "\n")?;
    println!("wrote {}", dir.display());
    Ok(())
}
