//! Stabilizer tableau backend with destabilizer rows.
//!
//! Rows `0..n` are destabilizers, rows `n..2n` stabilizers. A row is
//! `(-1)^r ⊗_j σ(x_j, z_j)` with `σ(1,1) = Y`. Bits are packed 64 per word.

use super::{sample_pauli, Gate, Pauli, PauliString, QStateError};
use super::gate::check_targets;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Row {
    x: Vec<u64>,
    z: Vec<u64>,
    r: bool,
}

impl Row {
    fn identity(words: usize) -> Self {
        Row {
            x: vec![0; words],
            z: vec![0; words],
            r: false,
        }
    }

    #[inline]
    fn get(bits: &[u64], q: usize) -> bool {
        bits[q / 64] >> (q % 64) & 1 == 1
    }

    #[inline]
    fn set(bits: &mut [u64], q: usize, v: bool) {
        let m = 1u64 << (q % 64);
        if v {
            bits[q / 64] |= m;
        } else {
            bits[q / 64] &= !m;
        }
    }

    fn xq(&self, q: usize) -> bool {
        Row::get(&self.x, q)
    }

    fn zq(&self, q: usize) -> bool {
        Row::get(&self.z, q)
    }

    /// True when the two Paulis anticommute.
    fn anticommutes(&self, other: &Row) -> bool {
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        parity == 1
    }

    /// `self ← other · self`, tracking the sign. For anticommuting operands the
    /// imaginary phase is folded into the sign bit (only used on destabilizers).
    fn left_mul(&mut self, other: &Row) {
        // Sum of g(other_j, self_j) over qubits, as i^g.
        let mut g: i64 = 0;
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (other.x[w], other.z[w], self.x[w], self.z[w]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            // Y·: z2 - x2
            g += (y1 & z2 & !x2).count_ones() as i64;
            g -= (y1 & x2 & !z2).count_ones() as i64;
            // X·: z2 (2 x2 - 1)
            g += (xo & z2 & x2).count_ones() as i64;
            g -= (xo & z2 & !x2).count_ones() as i64;
            // Z·: x2 (1 - 2 z2)
            g += (zo & x2 & !z2).count_ones() as i64;
            g -= (zo & x2 & z2).count_ones() as i64;
        }
        let total = 2 * self.r as i64 + 2 * other.r as i64 + g;
        self.r = total.rem_euclid(4) >= 2;
        for w in 0..self.x.len() {
            self.x[w] ^= other.x[w];
            self.z[w] ^= other.z[w];
        }
    }

    fn to_pauli_string(&self, n: usize) -> PauliString {
        let letters = (0..n).map(|q| Pauli::from_bits(self.xq(q), self.zq(q))).collect();
        PauliString::new(letters, self.r)
    }

    fn from_pauli_string(p: &PauliString, words: usize) -> Row {
        let mut row = Row::identity(words);
        for (q, l) in p.letters().iter().enumerate() {
            let (x, z) = l.bits();
            Row::set(&mut row.x, q, x);
            Row::set(&mut row.z, q, z);
        }
        row.r = p.is_negative();
        row
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabTableau {
    n: usize,
    words: usize,
    rows: Vec<Row>,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl StabTableau {
    /// |0...0>: destabilizers X_i, stabilizers Z_i.
    pub fn zero(n: usize) -> Self {
        let words = words_for(n);
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut r = Row::identity(words);
            Row::set(&mut r.x, i, true);
            rows.push(r);
        }
        for i in 0..n {
            let mut r = Row::identity(words);
            Row::set(&mut r.z, i, true);
            rows.push(r);
        }
        StabTableau { n, words, rows }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn stabilizers(&self) -> Vec<PauliString> {
        self.rows[self.n..].iter().map(|r| r.to_pauli_string(self.n)).collect()
    }

    pub fn destabilizers(&self) -> Vec<PauliString> {
        self.rows[..self.n].iter().map(|r| r.to_pauli_string(self.n)).collect()
    }

    pub fn apply(&mut self, gate: Gate, targets: &[usize]) -> Result<(), QStateError> {
        check_targets(self.n, gate, targets)?;
        let a = targets[0];
        match gate {
            Gate::H => {
                for row in &mut self.rows {
                    let (x, z) = (row.xq(a), row.zq(a));
                    row.r ^= x & z;
                    Row::set(&mut row.x, a, z);
                    Row::set(&mut row.z, a, x);
                }
            }
            Gate::S => {
                for row in &mut self.rows {
                    let (x, z) = (row.xq(a), row.zq(a));
                    row.r ^= x & z;
                    Row::set(&mut row.z, a, z ^ x);
                }
            }
            Gate::X => {
                for row in &mut self.rows {
                    row.r ^= row.zq(a);
                }
            }
            Gate::Z => {
                for row in &mut self.rows {
                    row.r ^= row.xq(a);
                }
            }
            Gate::Y => {
                for row in &mut self.rows {
                    row.r ^= row.xq(a) ^ row.zq(a);
                }
            }
            Gate::Cnot => {
                let b = targets[1];
                for row in &mut self.rows {
                    let (xa, za, xb, zb) = (row.xq(a), row.zq(a), row.xq(b), row.zq(b));
                    row.r ^= xa & zb & !(xb ^ za);
                    Row::set(&mut row.x, b, xb ^ xa);
                    Row::set(&mut row.z, a, za ^ zb);
                }
            }
            Gate::Cz => {
                let b = targets[1];
                self.apply(Gate::H, &[b])?;
                self.apply(Gate::Cnot, &[a, b])?;
                self.apply(Gate::H, &[b])?;
            }
        }
        self.debug_check();
        Ok(())
    }

    fn apply_pauli(&mut self, q: usize, p: Pauli) -> Result<(), QStateError> {
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

    /// Index of a stabilizer row anticommuting with Z_q, if the outcome is random.
    fn random_pivot(&self, q: usize) -> Option<usize> {
        (self.n..2 * self.n).find(|&i| self.rows[i].xq(q))
    }

    /// Sign of Z_q in the stabilizer group, assuming it is a member.
    fn deterministic_outcome(&self, q: usize) -> u8 {
        let mut scratch = Row::identity(self.words);
        for i in 0..self.n {
            if self.rows[i].xq(q) {
                scratch.left_mul(&self.rows[i + self.n]);
            }
        }
        u8::from(scratch.r)
    }

    /// 0, 1/2 or 1.
    pub fn prob_one(&self, q: usize) -> Result<f64, QStateError> {
        self.check_index(q)?;
        Ok(match self.random_pivot(q) {
            Some(_) => 0.5,
            None => f64::from(self.deterministic_outcome(q)),
        })
    }

    pub fn measure_z(&mut self, q: usize, rand: f64) -> Result<u8, QStateError> {
        self.check_index(q)?;
        let n = self.n;
        let Some(p) = self.random_pivot(q) else {
            return Ok(self.deterministic_outcome(q));
        };
        let outcome = u8::from(rand < 0.5);
        let pivot = self.rows[p].clone();
        for i in 0..2 * n {
            if i != p && self.rows[i].xq(q) {
                self.rows[i].left_mul(&pivot);
            }
        }
        self.rows[p - n] = pivot;
        let mut zrow = Row::identity(self.words);
        Row::set(&mut zrow.z, q, true);
        zrow.r = outcome == 1;
        self.rows[p] = zrow;
        self.debug_check();
        Ok(outcome)
    }

    /// Removes qubit `q`, which must be in a definite Z eigenstate.
    pub fn discard(&mut self, q: usize) -> Result<(), QStateError> {
        self.check_index(q)?;
        if self.random_pivot(q).is_some() {
            return Err(QStateError::NotDefinite(q));
        }
        let n = self.n;
        let pivot = (n..2 * n)
            .find(|&i| self.rows[i].zq(q))
            .expect("a definite qubit has Z support in some stabilizer");
        let prow = self.rows[pivot].clone();
        for k in n..2 * n {
            if k != pivot && self.rows[k].zq(q) {
                self.rows[k].left_mul(&prow);
                // keep the destabilizer of `pivot` paired: D_p ← D_p · D_k
                let dk = self.rows[k - n].clone();
                self.rows[pivot - n].left_mul(&dk);
            }
        }
        let words = words_for(n - 1);
        let strip = |bits: &[u64]| {
            let mut out = vec![0u64; words];
            let mut j = 0;
            for c in 0..n {
                if c == q {
                    continue;
                }
                Row::set(&mut out, j, Row::get(bits, c));
                j += 1;
            }
            out
        };
        let rows = self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != pivot && *i != pivot - n)
            .map(|(_, r)| Row {
                x: strip(&r.x),
                z: strip(&r.z),
                r: r.r,
            })
            .collect();
        self.rows = rows;
        self.n = n - 1;
        self.words = words;
        self.debug_check();
        Ok(())
    }

    /// Block-diagonal tableau for `self ⊗ other`.
    pub fn merge(&self, other: &StabTableau) -> StabTableau {
        let n = self.n + other.n;
        let words = words_for(n);
        let lift = |src: &Row, src_n: usize, offset: usize| {
            let mut row = Row::identity(words);
            for q in 0..src_n {
                Row::set(&mut row.x, q + offset, src.xq(q));
                Row::set(&mut row.z, q + offset, src.zq(q));
            }
            row.r = src.r;
            row
        };
        let mut rows = Vec::with_capacity(2 * n);
        rows.extend(self.rows[..self.n].iter().map(|r| lift(r, self.n, 0)));
        rows.extend(other.rows[..other.n].iter().map(|r| lift(r, other.n, self.n)));
        rows.extend(self.rows[self.n..].iter().map(|r| lift(r, self.n, 0)));
        rows.extend(other.rows[other.n..].iter().map(|r| lift(r, other.n, self.n)));
        StabTableau { n, words, rows }
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

    /// +1 if P is in the stabilizer group, −1 if −P is, otherwise 0.
    pub fn expect(&self, p: &PauliString) -> Result<f64, QStateError> {
        if p.len() != self.n {
            return Err(QStateError::LengthMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        let target = Row::from_pauli_string(p, self.words);
        let n = self.n;
        if self.rows[n..].iter().any(|s| s.anticommutes(&target)) {
            return Ok(0.0);
        }
        let mut scratch = Row::identity(self.words);
        for i in 0..n {
            if self.rows[i].anticommutes(&target) {
                scratch.left_mul(&self.rows[i + n]);
            }
        }
        debug_assert!(scratch.x == target.x && scratch.z == target.z);
        Ok(if scratch.r == target.r { 1.0 } else { -1.0 })
    }

    /// Checks the symplectic pairing and commutation of the stabilizer rows.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.n;
        for i in n..2 * n {
            for j in n..2 * n {
                if self.rows[i].anticommutes(&self.rows[j]) {
                    return Err(format!("stabilizers {} and {} anticommute", i - n, j - n));
                }
            }
        }
        for d in 0..n {
            for s in 0..n {
                let anti = self.rows[d].anticommutes(&self.rows[s + n]);
                if anti != (d == s) {
                    return Err(format!("destabilizer {d} vs stabilizer {s}: pairing broken"));
                }
            }
        }
        if self.stabilizer_rank() != n {
            return Err("stabilizers are not independent".into());
        }
        Ok(())
    }

    fn stabilizer_rank(&self) -> usize {
        let mut m: Vec<Vec<u64>> = self.rows[self.n..]
            .iter()
            .map(|r| r.x.iter().chain(&r.z).copied().collect())
            .collect();
        let cols = 2 * self.words * 64;
        let mut rank = 0;
        for c in 0..cols {
            let (w, b) = (c / 64, c % 64);
            let Some(p) = (rank..m.len()).find(|&i| m[i][w] >> b & 1 == 1) else {
                continue;
            };
            m.swap(rank, p);
            for i in 0..m.len() {
                if i != rank && m[i][w] >> b & 1 == 1 {
                    let pivot = m[rank].clone();
                    for (a, b) in m[i].iter_mut().zip(&pivot) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn check_index(&self, q: usize) -> Result<(), QStateError> {
        if q >= self.n {
            Err(QStateError::OutOfRange { index: q, size: self.n })
        } else {
            Ok(())
        }
    }

    fn debug_check(&self) {
        if cfg!(debug_assertions) && self.n <= 16 {
            if let Err(e) = self.check_invariants() {
                panic!("tableau invariant violated: {e}");
            }
        }
    }
}
