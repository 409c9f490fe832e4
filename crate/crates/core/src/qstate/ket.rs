//! Dense statevector backend. Qubit `i` is bit `i` of the basis index.

use num_complex::Complex64 as C64;

use super::gate::{check_targets, kernel_1q, kernel_cnot, kernel_cz};
use super::{pauli_coeff, sample_pauli, Gate, Pauli, PauliString, QStateError, PROB_TOL, STATE_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct KetState {
    n: usize,
    amps: Vec<C64>,
}

impl KetState {
    /// |0...0> on `n` qubits.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        KetState { n, amps }
    }

    /// Builds a state from explicit amplitudes; the vector must be unit-norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, QStateError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(QStateError::BadDimension(len));
        }
        let ket = KetState {
            n: len.trailing_zeros() as usize,
            amps,
        };
        let norm = ket.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(ket)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: Gate, targets: &[usize]) -> Result<(), QStateError> {
        check_targets(self.n, gate, targets)?;
        match gate {
            Gate::Cnot => kernel_cnot(&mut self.amps, targets[0], targets[1]),
            Gate::Cz => kernel_cz(&mut self.amps, targets[0], targets[1]),
            g => kernel_1q(&mut self.amps, targets[0], &g.matrix().expect("single-qubit gate")),
        }
        self.debug_check();
        Ok(())
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) -> Result<(), QStateError> {
        match p {
            Pauli::I => {
                if q >= self.n {
                    return Err(QStateError::OutOfRange { index: q, size: self.n });
                }
                Ok(())
            }
            Pauli::X => self.apply(Gate::X, &[q]),
            Pauli::Y => self.apply(Gate::Y, &[q]),
            Pauli::Z => self.apply(Gate::Z, &[q]),
        }
    }

    /// P(outcome = 1) for a Z measurement of qubit `q`, snapped to 0 or 1 near the ends.
    pub fn prob_one(&self, q: usize) -> Result<f64, QStateError> {
        self.check_index(q)?;
        let m = 1usize << q;
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(snap(p))
    }

    pub fn measure_z(&mut self, q: usize, rand: f64) -> Result<u8, QStateError> {
        let p1 = self.prob_one(q)?;
        let outcome = u8::from(rand < p1);
        let keep = if outcome == 1 { p1 } else { 1.0 - p1 };
        let scale = 1.0 / keep.sqrt();
        let m = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & m != 0) as u8) == outcome {
                *a *= scale;
            } else {
                *a = C64::new(0.0, 0.0);
            }
        }
        self.debug_check();
        Ok(outcome)
    }

    /// Removes qubit `q`, which must be in a definite Z eigenstate.
    pub fn discard(&mut self, q: usize) -> Result<(), QStateError> {
        let p1 = self.prob_one(q)?;
        let value = if p1 == 1.0 {
            1
        } else if p1 == 0.0 {
            0
        } else {
            return Err(QStateError::NotDefinite(q));
        };
        let low = (1usize << q) - 1;
        let mut out = Vec::with_capacity(self.amps.len() / 2);
        for j in 0..self.amps.len() / 2 {
            let src = (j & low) | ((j & !low) << 1) | (value << q);
            out.push(self.amps[src]);
        }
        self.amps = out;
        self.n -= 1;
        // renormalize away the residue of the dropped half
        let norm = self.norm_sqr().sqrt();
        for a in &mut self.amps {
            *a /= norm;
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other`; `other`'s qubits are shifted up by `self.n`.
    pub fn merge(&self, other: &KetState) -> KetState {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        KetState {
            n: self.n + other.n,
            amps,
        }
    }

    pub fn apply_pauli_channel(
        &mut self,
        q: usize,
        probs: [f64; 4],
        rand: f64,
    ) -> Result<Pauli, QStateError> {
        let p = sample_pauli(probs, rand)?;
        self.apply_pauli(q, p)?;
        Ok(p)
    }

    /// ⟨ψ|P|ψ⟩.
    pub fn expect(&self, p: &PauliString) -> Result<f64, QStateError> {
        if p.len() != self.n {
            return Err(QStateError::LengthMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let (xm, zm, ny) = p.masks();
        let mut acc = C64::new(0.0, 0.0);
        for (k, a) in self.amps.iter().enumerate() {
            acc += self.amps[k ^ xm].conj() * pauli_coeff(k, zm, ny, p.is_negative()) * a;
        }
        Ok(acc.re)
    }

    /// |⟨reference|ψ⟩|².
    pub fn fidelity(&self, reference: &KetState) -> Result<f64, QStateError> {
        if reference.n != self.n {
            return Err(QStateError::LengthMismatch {
                expected: self.n,
                got: reference.n,
            });
        }
        let ip: C64 = reference
            .amps
            .iter()
            .zip(&self.amps)
            .map(|(r, a)| r.conj() * a)
            .sum();
        Ok(ip.norm_sqr())
    }

    /// Reorders qubits so new qubit `k` is old qubit `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> KetState {
        debug_assert_eq!(perm.len(), self.n);
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (new_idx, slot) in amps.iter_mut().enumerate() {
            let mut old_idx = 0;
            for (k, &src) in perm.iter().enumerate() {
                if new_idx >> k & 1 == 1 {
                    old_idx |= 1 << src;
                }
            }
            *slot = self.amps[old_idx];
        }
        KetState { n: self.n, amps }
    }

    fn check_index(&self, q: usize) -> Result<(), QStateError> {
        if q >= self.n {
            Err(QStateError::OutOfRange { index: q, size: self.n })
        } else {
            Ok(())
        }
    }

    fn debug_check(&self) {
        debug_assert!(
            (self.norm_sqr() - 1.0).abs() < STATE_TOL,
            "ket norm drifted: {}",
            self.norm_sqr()
        );
    }
}

pub(crate) fn snap(p: f64) -> f64 {
    if p < PROB_TOL {
        0.0
    } else if p > 1.0 - PROB_TOL {
        1.0
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> KetState {
        let mut k = KetState::zero(2);
        k.apply(Gate::H, &[0]).unwrap();
        k.apply(Gate::Cnot, &[0, 1]).unwrap();
        k
    }

    #[test]
    fn one_qubit_zero() {
        let k = KetState::zero(1);
        assert_eq!(k.amplitudes(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    }

    #[test]
    fn h_then_cnot_is_phi_plus() {
        let k = bell();
        let expect = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        for (a, e) in k.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn bad_targets() {
        let mut k = KetState::zero(2);
        assert!(matches!(
            k.apply(Gate::X, &[2]),
            Err(QStateError::OutOfRange { index: 2, size: 2 })
        ));
        assert!(matches!(
            k.apply(Gate::Cnot, &[1, 1]),
            Err(QStateError::RepeatedTarget(1))
        ));
        assert!(matches!(k.apply(Gate::Cz, &[0]), Err(QStateError::Arity { .. })));
    }

    #[test]
    fn plus_measures_one_below_half() {
        let mut k = KetState::zero(1);
        k.apply(Gate::H, &[0]).unwrap();
        assert_eq!(k.measure_z(0, 0.3).unwrap(), 1);
        assert!((k.amplitudes()[1].re - 1.0).abs() < 1e-15);
        let mut k = KetState::zero(1);
        k.apply(Gate::H, &[0]).unwrap();
        assert_eq!(k.measure_z(0, 0.7).unwrap(), 0);
    }

    #[test]
    fn one_state_is_deterministic() {
        let mut k = KetState::zero(1);
        k.apply(Gate::X, &[0]).unwrap();
        for r in [0.0, 0.5, 0.999_999] {
            let before = k.clone();
            assert_eq!(k.measure_z(0, r).unwrap(), 1);
            assert_eq!(k, before);
        }
    }

    #[test]
    fn merge_orders_low_bit_first() {
        let a = KetState::zero(1);
        let mut b = KetState::zero(1);
        b.apply(Gate::X, &[0]).unwrap();
        let m = a.merge(&b);
        assert_eq!(m.amplitudes()[2], C64::new(1.0, 0.0));
    }

    #[test]
    fn discard_after_measure() {
        let mut k = bell();
        let out = k.measure_z(1, 0.9).unwrap();
        assert_eq!(out, 0);
        k.discard(1).unwrap();
        assert_eq!(k, KetState::zero(1));
        let mut k = bell();
        assert!(matches!(k.discard(0), Err(QStateError::NotDefinite(0))));
    }

    #[test]
    fn expectations_of_bell() {
        let k = bell();
        assert!((k.expect(&"XX".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((k.expect(&"ZZ".parse().unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((k.expect(&"-ZZ".parse().unwrap()).unwrap() + 1.0).abs() < 1e-12);
        assert!((k.expect(&"YY".parse().unwrap()).unwrap() + 1.0).abs() < 1e-12);
        assert!(k.expect(&"ZI".parse().unwrap()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn permutation_moves_qubits() {
        // |q0=1, q1=0> permuted with new0 = old1, new1 = old0 -> |q0=0, q1=1>
        let mut k = KetState::zero(2);
        k.apply(Gate::X, &[0]).unwrap();
        let p = k.permuted(&[1, 0]);
        assert_eq!(p.amplitudes()[2], C64::new(1.0, 0.0));
    }
}
