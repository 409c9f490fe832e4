use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QStateError;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Symplectic (x, z) bits; Y is (1, 1).
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Signed tensor product of Pauli letters; position k acts on qubit k.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
    negative: bool,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>, negative: bool) -> Self {
        PauliString { letters, negative }
    }

    pub fn identity(n: usize) -> Self {
        PauliString::new(vec![Pauli::I; n], false)
    }

    /// Identity everywhere except the listed `(qubit, letter)` pairs.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut p = PauliString::identity(n);
        for &(q, l) in ops {
            p.letters[q] = l;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn negated(mut self) -> Self {
        self.negative = !self.negative;
        self
    }

    /// Bit masks over basis indices: X-part (X or Y) and Z-part (Z or Y), plus the Y count.
    pub(crate) fn masks(&self) -> (usize, usize, usize) {
        let (mut xm, mut zm, mut ny) = (0usize, 0usize, 0usize);
        for (q, l) in self.letters.iter().enumerate() {
            let (x, z) = l.bits();
            if x {
                xm |= 1 << q;
            }
            if z {
                zm |= 1 << q;
            }
            if x && z {
                ny += 1;
            }
        }
        (xm, zm, ny)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QStateError;

    /// Parses strings like `"XX"`, `"-ZZ"`, `"+IXZ"`; the first letter is qubit 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(QStateError::InvalidPauli(other)),
            })
            .collect::<Result<_, _>>()?;
        Ok(PauliString::new(letters, negative))
    }
}
