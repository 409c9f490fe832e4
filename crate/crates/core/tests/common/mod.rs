//! Independent reference computations shared by the integration tests.
//!
//! Everything here uses nalgebra matrices built from first principles; none of
//! it goes through the simulator's state backends.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use qnetsim::trace::{EventKind, TraceEvent};

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn paulis() -> [DMatrix<C>; 4] {
    let i = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]);
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let y = DMatrix::from_row_slice(2, 2, &[c(0.0), C::new(0.0, -1.0), C::new(0.0, 1.0), c(0.0)]);
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    [i, x, y, z]
}

/// Kraus operators √p_k · P_k of a Pauli channel with probabilities (I, X, Y, Z).
pub fn pauli_kraus(probs: [f64; 4]) -> Vec<DMatrix<C>> {
    paulis()
        .into_iter()
        .zip(probs)
        .map(|(m, p)| m * c(p.sqrt()))
        .collect()
}

pub fn depolarizing_kraus(p: f64) -> Vec<DMatrix<C>> {
    pauli_kraus([1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0])
}

pub fn dephasing_kraus(p: f64) -> Vec<DMatrix<C>> {
    pauli_kraus([1.0 - p, 0.0, 0.0, p])
}

/// ρ ↦ Σ K ρ K†.
pub fn apply_kraus(rho: &DMatrix<C>, ks: &[DMatrix<C>]) -> DMatrix<C> {
    let n = rho.nrows();
    ks.iter()
        .fold(DMatrix::zeros(n, n), |acc, k| acc + k * rho * k.adjoint())
}

pub fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

/// |Φ+⟩ in the basis |ab⟩ = index 2a + b.
pub fn phi_plus() -> DVector<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(h), c(0.0), c(0.0), c(h)])
}

pub fn plus() -> DVector<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(h), c(h)])
}

pub fn projector(v: &DVector<C>) -> DMatrix<C> {
    v * v.adjoint()
}

/// ⟨v|ρ|v⟩.
pub fn fidelity(rho: &DMatrix<C>, v: &DVector<C>) -> f64 {
    (v.adjoint() * rho * v)[(0, 0)].re
}

/// Fidelity with |Φ+⟩ after the channel hits the second qubit only.
pub fn bell_half_channel_fidelity(ks: &[DMatrix<C>]) -> f64 {
    let id = paulis()[0].clone();
    let lifted: Vec<_> = ks.iter().map(|k| kron(&id, k)).collect();
    let rho = apply_kraus(&projector(&phi_plus()), &lifted);
    fidelity(&rho, &phi_plus())
}

/// Within `k` standard errors of a Bernoulli mean.
pub fn within_sigma(observed: f64, p: f64, n: u64, k: f64) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (observed - p).abs() <= k * sigma
}

pub fn types(events: &[TraceEvent]) -> Vec<&'static str> {
    events.iter().map(|e| e.kind.type_name()).collect()
}

/// Event types with outcomes and noise letters discarded.
pub fn masked(events: &[TraceEvent]) -> Vec<String> {
    events
        .iter()
        .map(|e| match &e.kind {
            EventKind::Gate { name, qubits } => format!("gate {name} {qubits:?}"),
            other => other.type_name().to_string(),
        })
        .collect()
}
