//! Pluggable quantum-state backends behind one interface.
//!
//! [`JointState`] dispatches to a statevector ([`KetState`]), a density matrix
//! ([`DmState`]) or a stabilizer tableau ([`StabTableau`]). All three share
//! the qubit convention: qubit `i` is bit `i` of a basis-state index.

mod dm;
mod gate;
mod ket;
mod pauli;
mod stab;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dm::DmState;
pub use gate::Gate;
pub use ket::KetState;
pub use pauli::{Pauli, PauliString};
pub use stab::StabTableau;

/// Tolerance on norm, trace and Hermiticity.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Ket,
    Dm,
    Stab,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Ket, BackendKind::Dm, BackendKind::Stab];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Ket => "ket",
            BackendKind::Dm => "dm",
            BackendKind::Stab => "stab",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ket" => Ok(BackendKind::Ket),
            "dm" => Ok(BackendKind::Dm),
            "stab" => Ok(BackendKind::Stab),
            other => Err(format!("unknown backend `{other}` (expected ket, dm or stab)")),
        }
    }
}

/// Maximum joint-state size per backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub ket: usize,
    pub dm: usize,
    pub stab: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            ket: 14,
            dm: 7,
            stab: 4096,
        }
    }
}

impl Caps {
    pub fn for_backend(&self, kind: BackendKind) -> usize {
        match kind {
            BackendKind::Ket => self.ket,
            BackendKind::Dm => self.dm,
            BackendKind::Stab => self.stab,
        }
    }

    pub fn check(&self, kind: BackendKind, n: usize) -> Result<(), QStateError> {
        let cap = self.for_backend(kind);
        if n > cap {
            Err(QStateError::Capacity {
                backend: kind,
                requested: n,
                cap,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QStateError {
    #[error("{backend} backend cannot hold {requested} qubits (cap {cap})")]
    Capacity {
        backend: BackendKind,
        requested: usize,
        cap: usize,
    },
    #[error("qubit index {index} out of range for a {size}-qubit state")]
    OutOfRange { index: usize, size: usize },
    #[error("two-qubit gate repeats target {0}")]
    RepeatedTarget(usize),
    #[error("{gate} takes {expected} targets, got {got}")]
    Arity {
        gate: Gate,
        expected: usize,
        got: usize,
    },
    #[error("qubit {0} is not in a definite Z eigenstate")]
    NotDefinite(usize),
    #[error("channel probabilities must be non-negative and sum to 1, got {0:?}")]
    ProbabilitySum([f64; 4]),
    #[error("operator has length {got}, state has {expected} qubits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{op} is not supported on the {backend} backend")]
    Unsupported { op: &'static str, backend: BackendKind },
    #[error("cannot combine a {0} state with a {1} state")]
    BackendMismatch(BackendKind, BackendKind),
    #[error("amplitude vector length {0} is not a power of two")]
    BadDimension(usize),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("invalid Pauli letter `{0}`")]
    InvalidPauli(char),
    #[error("a state needs at least one qubit")]
    Empty,
}

/// An n-qubit joint state in the representation of one backend.
#[derive(Debug, Clone, PartialEq)]
pub enum JointState {
    Ket(KetState),
    Dm(DmState),
    Stab(StabTableau),
}

impl JointState {
    /// |0...0> on `n` ≥ 1 qubits.
    pub fn new(kind: BackendKind, n: usize, caps: &Caps) -> Result<JointState, QStateError> {
        if n == 0 {
            return Err(QStateError::Empty);
        }
        caps.check(kind, n)?;
        Ok(match kind {
            BackendKind::Ket => JointState::Ket(KetState::zero(n)),
            BackendKind::Dm => JointState::Dm(DmState::zero(n)),
            BackendKind::Stab => JointState::Stab(StabTableau::zero(n)),
        })
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            JointState::Ket(_) => BackendKind::Ket,
            JointState::Dm(_) => BackendKind::Dm,
            JointState::Stab(_) => BackendKind::Stab,
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            JointState::Ket(s) => s.num_qubits(),
            JointState::Dm(s) => s.num_qubits(),
            JointState::Stab(s) => s.num_qubits(),
        }
    }

    pub fn apply_gate(&mut self, gate: Gate, targets: &[usize]) -> Result<(), QStateError> {
        match self {
            JointState::Ket(s) => s.apply(gate, targets),
            JointState::Dm(s) => s.apply(gate, targets),
            JointState::Stab(s) => s.apply(gate, targets),
        }
    }

    pub fn prob_one(&self, q: usize) -> Result<f64, QStateError> {
        match self {
            JointState::Ket(s) => s.prob_one(q),
            JointState::Dm(s) => s.prob_one(q),
            JointState::Stab(s) => s.prob_one(q),
        }
    }

    /// Z-basis measurement: outcome 1 iff `rand < P(1)`; collapses the state.
    pub fn measure_z(&mut self, q: usize, rand: f64) -> Result<u8, QStateError> {
        match self {
            JointState::Ket(s) => s.measure_z(q, rand),
            JointState::Dm(s) => s.measure_z(q, rand),
            JointState::Stab(s) => s.measure_z(q, rand),
        }
    }

    /// Tensor product; `other`'s qubits are shifted up by `self.num_qubits()`.
    pub fn merge(&self, other: &JointState, caps: &Caps) -> Result<JointState, QStateError> {
        let n = self.num_qubits() + other.num_qubits();
        caps.check(self.kind(), n)?;
        Ok(match (self, other) {
            (JointState::Ket(a), JointState::Ket(b)) => JointState::Ket(a.merge(b)),
            (JointState::Dm(a), JointState::Dm(b)) => JointState::Dm(a.merge(b)),
            (JointState::Stab(a), JointState::Stab(b)) => JointState::Stab(a.merge(b)),
            (a, b) => return Err(QStateError::BackendMismatch(a.kind(), b.kind())),
        })
    }

    /// Removes a qubit that is in a definite computational-basis state.
    pub fn discard(&mut self, q: usize) -> Result<(), QStateError> {
        match self {
            JointState::Ket(s) => s.discard(q),
            JointState::Dm(s) => s.discard(q),
            JointState::Stab(s) => s.discard(q),
        }
    }

    /// Removes an arbitrary qubit. Dm traces it out exactly; Ket and Stab
    /// measure it with `rand` and forget the outcome.
    pub fn forget(&mut self, q: usize, rand: f64) -> Result<(), QStateError> {
        match self {
            JointState::Dm(s) => s.trace_out(q),
            other => {
                other.measure_z(q, rand)?;
                other.discard(q)
            }
        }
    }

    /// Applies a Pauli channel with probabilities ordered (I, X, Y, Z): exact on
    /// Dm (returns `None`), sampled from `rand` on Ket and Stab.
    pub fn apply_pauli_channel(
        &mut self,
        q: usize,
        probs: [f64; 4],
        rand: f64,
    ) -> Result<Option<Pauli>, QStateError> {
        match self {
            JointState::Ket(s) => s.apply_pauli_channel(q, probs, rand).map(Some),
            JointState::Dm(s) => s.apply_pauli_channel(q, probs).map(|_| None),
            JointState::Stab(s) => s.apply_pauli_channel(q, probs, rand).map(Some),
        }
    }

    pub fn expect_pauli(&self, p: &PauliString) -> Result<f64, QStateError> {
        match self {
            JointState::Ket(s) => s.expect(p),
            JointState::Dm(s) => s.expect(p),
            JointState::Stab(s) => s.expect(p),
        }
    }

    pub fn fidelity(&self, reference: &KetState) -> Result<f64, QStateError> {
        match self {
            JointState::Ket(s) => s.fidelity(reference),
            JointState::Dm(s) => s.fidelity(reference),
            JointState::Stab(_) => Err(QStateError::Unsupported {
                op: "fidelity",
                backend: BackendKind::Stab,
            }),
        }
    }
}

pub(crate) fn validate_probs(probs: [f64; 4]) -> Result<(), QStateError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(0.0..=1.0 + PROB_TOL).contains(p)) || (sum - 1.0).abs() > PROB_TOL {
        return Err(QStateError::ProbabilitySum(probs));
    }
    Ok(())
}

/// Picks a letter by cumulative order I, X, Y, Z.
pub(crate) fn sample_pauli(probs: [f64; 4], rand: f64) -> Result<Pauli, QStateError> {
    validate_probs(probs)?;
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if rand < acc {
            return Ok(Pauli::ALL[k]);
        }
    }
    // rand falls in the rounding gap at the top; take the last non-zero letter
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    Ok(Pauli::ALL[last])
}

/// Coefficient c(k) with P|k⟩ = c(k) |k ⊕ xmask⟩, where Y = i·X·Z.
#[inline]
pub(crate) fn pauli_coeff(k: usize, zmask: usize, ny: usize, negative: bool) -> C64 {
    let mut c = match ny % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    if (k & zmask).count_ones() % 2 == 1 {
        c = -c;
    }
    if negative {
        c = -c;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plus(kind: BackendKind) -> JointState {
        let mut s = JointState::new(kind, 1, &Caps::default()).unwrap();
        s.apply_gate(Gate::H, &[0]).unwrap();
        s
    }

    #[test]
    fn capacity_names_backend() {
        let err = JointState::new(BackendKind::Dm, 8, &Caps::default()).unwrap_err();
        assert!(err.to_string().contains("dm"));
        assert!(JointState::new(BackendKind::Stab, 100, &Caps::default()).is_ok());
        let a = JointState::new(BackendKind::Ket, 10, &Caps::default()).unwrap();
        let b = JointState::new(BackendKind::Ket, 5, &Caps::default()).unwrap();
        assert!(matches!(a.merge(&b, &Caps::default()), Err(QStateError::Capacity { .. })));
    }

    #[test]
    fn x_twice_is_identity_everywhere() {
        for kind in BackendKind::ALL {
            let mut s = JointState::new(kind, 1, &Caps::default()).unwrap();
            let fresh = s.clone();
            s.apply_gate(Gate::X, &[0]).unwrap();
            s.apply_gate(Gate::X, &[0]).unwrap();
            assert_eq!(s, fresh, "{kind}");
        }
    }

    #[test]
    fn plus_has_zero_z_expectation() {
        for kind in BackendKind::ALL {
            let v = plus(kind).expect_pauli(&"Z".parse().unwrap()).unwrap();
            assert!(v.abs() < 1e-12, "{kind}: {v}");
        }
    }

    #[test]
    fn identity_channel_is_exact() {
        for kind in BackendKind::ALL {
            let mut s = plus(kind);
            let before = s.clone();
            s.apply_pauli_channel(0, [1.0, 0.0, 0.0, 0.0], 0.7).unwrap();
            assert_eq!(s, before, "{kind}");
        }
    }

    #[test]
    fn sampled_x_flips_ket() {
        let mut s = JointState::new(BackendKind::Ket, 1, &Caps::default()).unwrap();
        let got = s.apply_pauli_channel(0, [0.0, 1.0, 0.0, 0.0], 0.4).unwrap();
        assert_eq!(got, Some(Pauli::X));
        assert_eq!(s.prob_one(0).unwrap(), 1.0);
    }

    #[test]
    fn bad_probabilities_rejected() {
        let mut s = plus(BackendKind::Dm);
        assert!(matches!(
            s.apply_pauli_channel(0, [0.5, 0.5, 0.1, 0.0], 0.0),
            Err(QStateError::ProbabilitySum(_))
        ));
    }

    #[test]
    fn fidelity_unsupported_on_stab() {
        let s = plus(BackendKind::Stab);
        let r = KetState::zero(1);
        assert!(matches!(s.fidelity(&r), Err(QStateError::Unsupported { .. })));
    }

    #[test]
    fn merge_then_measure_appended_qubit() {
        for kind in BackendKind::ALL {
            let caps = Caps::default();
            let mut bell = JointState::new(kind, 2, &caps).unwrap();
            bell.apply_gate(Gate::H, &[0]).unwrap();
            bell.apply_gate(Gate::Cnot, &[0, 1]).unwrap();
            let zero = JointState::new(kind, 1, &caps).unwrap();
            let mut m = bell.merge(&zero, &caps).unwrap();
            assert_eq!(m.num_qubits(), 3);
            for r in [0.0, 0.5, 0.99] {
                assert_eq!(m.clone().measure_z(2, r).unwrap(), 0);
            }
            assert_eq!(m.measure_z(2, 0.0).unwrap(), 0);
        }
    }

    #[test]
    fn forget_keeps_partner_valid() {
        for kind in BackendKind::ALL {
            let caps = Caps::default();
            let mut bell = JointState::new(kind, 2, &caps).unwrap();
            bell.apply_gate(Gate::H, &[0]).unwrap();
            bell.apply_gate(Gate::Cnot, &[0, 1]).unwrap();
            bell.forget(1, 0.8).unwrap();
            assert_eq!(bell.num_qubits(), 1);
            let p = bell.prob_one(0).unwrap();
            match kind {
                BackendKind::Dm => assert!((p - 0.5).abs() < 1e-12),
                _ => assert_eq!(p, 0.0),
            }
        }
    }
}
