use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::QStateError;

/// The Clifford gate set shared by all backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    S,
    Cnot,
    Cz,
}

impl Gate {
    pub fn arity(self) -> usize {
        match self {
            Gate::Cnot | Gate::Cz => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::S => "S",
            Gate::Cnot => "CNOT",
            Gate::Cz => "CZ",
        }
    }

    pub fn from_name(name: &str) -> Option<Gate> {
        Some(match name {
            "H" => Gate::H,
            "X" => Gate::X,
            "Y" => Gate::Y,
            "Z" => Gate::Z,
            "S" => Gate::S,
            "CNOT" => Gate::Cnot,
            "CZ" => Gate::Cz,
            _ => return None,
        })
    }

    /// 2x2 unitary for single-qubit gates, row-major.
    pub(crate) fn matrix(self) -> Option<[[C64; 2]; 2]> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Some(match self {
            Gate::H => [[h, h], [h, -h]],
            Gate::X => [[o, l], [l, o]],
            Gate::Y => [[o, -i], [i, o]],
            Gate::Z => [[l, o], [o, -l]],
            Gate::S => [[l, o], [o, i]],
            Gate::Cnot | Gate::Cz => return None,
        })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn check_targets(n: usize, gate: Gate, targets: &[usize]) -> Result<(), QStateError> {
    if targets.len() != gate.arity() {
        return Err(QStateError::Arity {
            gate,
            expected: gate.arity(),
            got: targets.len(),
        });
    }
    for &t in targets {
        if t >= n {
            return Err(QStateError::OutOfRange { index: t, size: n });
        }
    }
    if targets.len() == 2 && targets[0] == targets[1] {
        return Err(QStateError::RepeatedTarget(targets[0]));
    }
    Ok(())
}

// Dense kernels over a complex buffer indexed by basis state; `bit` is a bit position.

pub(crate) fn kernel_1q(buf: &mut [C64], bit: usize, m: &[[C64; 2]; 2]) {
    let stride = 1usize << bit;
    for base in 0..buf.len() {
        if base & stride != 0 {
            continue;
        }
        let a0 = buf[base];
        let a1 = buf[base | stride];
        buf[base] = m[0][0] * a0 + m[0][1] * a1;
        buf[base | stride] = m[1][0] * a0 + m[1][1] * a1;
    }
}

pub(crate) fn kernel_cnot(buf: &mut [C64], control: usize, target: usize) {
    let (cm, tm) = (1usize << control, 1usize << target);
    for idx in 0..buf.len() {
        if idx & cm != 0 && idx & tm == 0 {
            buf.swap(idx, idx | tm);
        }
    }
}

pub(crate) fn kernel_cz(buf: &mut [C64], a: usize, b: usize) {
    let m = (1usize << a) | (1usize << b);
    for (idx, amp) in buf.iter_mut().enumerate() {
        if idx & m == m {
            *amp = -*amp;
        }
    }
}

pub(crate) fn conj_matrix(m: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}
