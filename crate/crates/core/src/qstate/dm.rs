//! Dense density-matrix backend.
//!
//! `rho[(r << n) | c]` holds row `r`, column `c`. Viewed as a 2n-bit vector, the
//! column index occupies bits `0..n` and the row index bits `n..2n`, so
//! `U ρ U†` is the statevector kernel for `U` on bit `q + n` followed by
//! `conj(U)` on bit `q`.

use num_complex::Complex64 as C64;

use super::gate::{check_targets, conj_matrix, kernel_1q, kernel_cnot, kernel_cz};
use super::ket::{snap, KetState};
use super::{pauli_coeff, validate_probs, Gate, Pauli, PauliString, QStateError, STATE_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct DmState {
    n: usize,
    rho: Vec<C64>,
}

impl DmState {
    pub fn zero(n: usize) -> Self {
        let mut rho = vec![C64::new(0.0, 0.0); 1 << (2 * n)];
        rho[0] = C64::new(1.0, 0.0);
        DmState { n, rho }
    }

    pub fn from_ket(ket: &KetState) -> Self {
        let n = ket.num_qubits();
        let a = ket.amplitudes();
        let dim = a.len();
        let mut rho = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                rho.push(a[r] * a[c].conj());
            }
        }
        DmState { n, rho }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.rho[(r << self.n) | c]
    }

    /// Row-major matrix entries.
    pub fn entries(&self) -> &[C64] {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    pub fn apply(&mut self, gate: Gate, targets: &[usize]) -> Result<(), QStateError> {
        check_targets(self.n, gate, targets)?;
        let n = self.n;
        match gate {
            Gate::Cnot => {
                kernel_cnot(&mut self.rho, targets[0] + n, targets[1] + n);
                kernel_cnot(&mut self.rho, targets[0], targets[1]);
            }
            Gate::Cz => {
                kernel_cz(&mut self.rho, targets[0] + n, targets[1] + n);
                kernel_cz(&mut self.rho, targets[0], targets[1]);
            }
            g => {
                let m = g.matrix().expect("single-qubit gate");
                kernel_1q(&mut self.rho, targets[0] + n, &m);
                kernel_1q(&mut self.rho, targets[0], &conj_matrix(&m));
            }
        }
        self.debug_check();
        Ok(())
    }

    fn apply_pauli(&mut self, q: usize, p: Pauli) -> Result<(), QStateError> {
        match p {
            Pauli::I => Ok(()),
            Pauli::X => self.apply(Gate::X, &[q]),
            Pauli::Y => self.apply(Gate::Y, &[q]),
            Pauli::Z => self.apply(Gate::Z, &[q]),
        }
    }

    pub fn prob_one(&self, q: usize) -> Result<f64, QStateError> {
        self.check_index(q)?;
        let p: f64 = (0..self.dim())
            .filter(|r| r >> q & 1 == 1)
            .map(|r| self.entry(r, r).re)
            .sum();
        Ok(snap(p))
    }

    pub fn measure_z(&mut self, q: usize, rand: f64) -> Result<u8, QStateError> {
        let p1 = self.prob_one(q)?;
        let outcome = u8::from(rand < p1);
        let keep = if outcome == 1 { p1 } else { 1.0 - p1 };
        let n = self.n;
        let col_mask = (1usize << n) - 1;
        for (idx, v) in self.rho.iter_mut().enumerate() {
            let r = idx >> n;
            let c = idx & col_mask;
            if (r >> q & 1) as u8 == outcome && (c >> q & 1) as u8 == outcome {
                *v /= keep;
            } else {
                *v = C64::new(0.0, 0.0);
            }
        }
        self.debug_check();
        Ok(outcome)
    }

    /// Partial trace over qubit `q`; valid for any state.
    pub fn trace_out(&mut self, q: usize) -> Result<(), QStateError> {
        self.check_index(q)?;
        let m = self.n - 1;
        let low = (1usize << q) - 1;
        let insert = |j: usize, b: usize| (j & low) | ((j & !low) << 1) | (b << q);
        let dim = 1usize << m;
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                out[(r << m) | c] = self.entry(insert(r, 0), insert(c, 0))
                    + self.entry(insert(r, 1), insert(c, 1));
            }
        }
        self.rho = out;
        self.n = m;
        Ok(())
    }

    /// Removes qubit `q`, which must be in a definite Z eigenstate.
    pub fn discard(&mut self, q: usize) -> Result<(), QStateError> {
        let p1 = self.prob_one(q)?;
        if p1 != 0.0 && p1 != 1.0 {
            return Err(QStateError::NotDefinite(q));
        }
        self.trace_out(q)
    }

    pub fn merge(&self, other: &DmState) -> DmState {
        let (na, nb) = (self.n, other.n);
        let n = na + nb;
        let da = 1usize << na;
        let dim = 1usize << n;
        let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                rho[(r << n) | c] =
                    self.entry(r % da, c % da) * other.entry(r >> na, c >> na);
            }
        }
        DmState { n, rho }
    }

    /// Exact channel ρ → Σ p_k P_k ρ P_k. Always reports `I`.
    pub fn apply_pauli_channel(&mut self, q: usize, probs: [f64; 4]) -> Result<Pauli, QStateError> {
        validate_probs(probs)?;
        self.check_index(q)?;
        let mut acc = vec![C64::new(0.0, 0.0); self.rho.len()];
        for (k, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut term = self.clone();
            term.apply_pauli(q, Pauli::ALL[k])?;
            for (a, t) in acc.iter_mut().zip(&term.rho) {
                *a += t * p;
            }
        }
        self.rho = acc;
        self.debug_check();
        Ok(Pauli::I)
    }

    /// Tr(P ρ).
    pub fn expect(&self, p: &PauliString) -> Result<f64, QStateError> {
        if p.len() != self.n {
            return Err(QStateError::LengthMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let (xm, zm, ny) = p.masks();
        let acc: C64 = (0..self.dim())
            .map(|k| pauli_coeff(k, zm, ny, p.is_negative()) * self.entry(k, k ^ xm))
            .sum();
        Ok(acc.re)
    }

    /// ⟨ref|ρ|ref⟩.
    pub fn fidelity(&self, reference: &KetState) -> Result<f64, QStateError> {
        if reference.num_qubits() != self.n {
            return Err(QStateError::LengthMismatch {
                expected: self.n,
                got: reference.num_qubits(),
            });
        }
        let a = reference.amplitudes();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..self.dim() {
            if a[r].norm_sqr() == 0.0 {
                continue;
            }
            for c in 0..self.dim() {
                acc += a[r].conj() * self.entry(r, c) * a[c];
            }
        }
        Ok(acc.re)
    }

    /// Largest deviation from Hermiticity, |ρ - ρ†|_max.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for c in r..self.dim() {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    fn check_index(&self, q: usize) -> Result<(), QStateError> {
        if q >= self.n {
            Err(QStateError::OutOfRange { index: q, size: self.n })
        } else {
            Ok(())
        }
    }

    fn debug_check(&self) {
        debug_assert!((self.trace().re - 1.0).abs() < STATE_TOL, "trace drifted");
        debug_assert!(self.trace().im.abs() < STATE_TOL, "trace not real");
        debug_assert!(self.hermiticity_error() < STATE_TOL, "not hermitian");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> DmState {
        let mut d = DmState::zero(2);
        d.apply(Gate::H, &[0]).unwrap();
        d.apply(Gate::Cnot, &[0, 1]).unwrap();
        d
    }

    fn bell_ket(minus: bool) -> KetState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = if minus { -h } else { h };
        KetState::from_amplitudes(vec![
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn zero_is_projector() {
        let d = DmState::zero(1);
        assert_eq!(d.entries(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    }

    #[test]
    fn matches_ket_evolution() {
        let d = bell();
        let k = DmState::from_ket(&bell_ket(false));
        for (a, b) in d.entries().iter().zip(k.entries()) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!((d.fidelity(&bell_ket(false)).unwrap() - 1.0).abs() < 1e-14);
        assert!(d.fidelity(&bell_ket(true)).unwrap().abs() < 1e-14);
    }

    #[test]
    fn y_and_s_conjugation() {
        // S|+> = |+i>, expectation of Y is +1
        let mut d = DmState::zero(1);
        d.apply(Gate::H, &[0]).unwrap();
        d.apply(Gate::S, &[0]).unwrap();
        assert!((d.expect(&"Y".parse().unwrap()).unwrap() - 1.0).abs() < 1e-14);
        d.apply(Gate::Y, &[0]).unwrap();
        assert!((d.expect(&"Y".parse().unwrap()).unwrap() - 1.0).abs() < 1e-14);
        d.apply(Gate::Z, &[0]).unwrap();
        assert!((d.expect(&"Y".parse().unwrap()).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn discard_keeps_trace() {
        // mixture of |00> and |01> (qubit 0 varies), then measure + discard qubit 1
        let mut d = DmState::zero(2);
        d.apply(Gate::H, &[0]).unwrap();
        d.apply_pauli_channel(0, [0.5, 0.0, 0.0, 0.5]).unwrap();
        d.measure_z(1, 0.1).unwrap();
        d.discard(1).unwrap();
        assert_eq!(d.num_qubits(), 1);
        assert!((d.trace().re - 1.0).abs() < 1e-14);
        assert!((d.entry(0, 0).re - 0.5).abs() < 1e-14);
        assert!(d.entry(0, 1).norm() < 1e-14);
    }

    #[test]
    fn discard_rejects_superposition() {
        let mut d = bell();
        assert!(matches!(d.discard(0), Err(QStateError::NotDefinite(0))));
    }

    #[test]
    fn tracing_out_bell_half_is_maximally_mixed() {
        let mut d = bell();
        d.trace_out(1).unwrap();
        assert!((d.entry(0, 0).re - 0.5).abs() < 1e-14);
        assert!((d.entry(1, 1).re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn merge_is_kron() {
        let a = DmState::zero(1);
        let mut b = DmState::zero(1);
        b.apply(Gate::X, &[0]).unwrap();
        let m = a.merge(&b);
        assert_eq!(m.entry(2, 2), C64::new(1.0, 0.0));
        assert!((m.trace().re - 1.0).abs() < 1e-15);
    }
}
