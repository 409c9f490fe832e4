//! The 24-element single-qubit Clifford group as shortest H/S words, and the
//! brute-force search that produces the cluster-state correction table.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::qstate::{Gate, KetState};

pub const GROUP_ORDER: usize = 24;

/// Words in apply order: `word[0]` acts first.
pub fn clifford_words() -> &'static [Vec<Gate>] {
    static WORDS: OnceLock<Vec<Vec<Gate>>> = OnceLock::new();
    WORDS.get_or_init(enumerate)
}

type M2 = [[C64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Phase-free key: rescale so the first non-negligible entry is real positive.
fn key(m: &M2) -> [i64; 8] {
    let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
    let lead = flat.iter().find(|z| z.norm() > 1e-6).expect("unitary");
    let phase = lead.conj() / lead.norm();
    let mut k = [0i64; 8];
    for (i, z) in flat.iter().enumerate() {
        let w = z * phase;
        k[2 * i] = (w.re * 1e6).round() as i64;
        k[2 * i + 1] = (w.im * 1e6).round() as i64;
    }
    k
}

// Breadth-first over appended generators, so each element gets a shortest word
// and ties resolve H before S.
fn enumerate() -> Vec<Vec<Gate>> {
    let id: M2 = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
    let gens = [Gate::H, Gate::S];
    let mut seen = vec![key(&id)];
    let mut frontier = vec![(id, Vec::new())];
    let mut words = vec![Vec::new()];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (m, w) in &frontier {
            for g in gens {
                let u = mul(&g.matrix().expect("1q"), m);
                let k = key(&u);
                if !seen.contains(&k) {
                    seen.push(k);
                    let mut w2: Vec<Gate> = w.clone();
                    w2.push(g);
                    words.push(w2.clone());
                    next.push((u, w2));
                }
            }
        }
        frontier = next;
    }
    assert_eq!(words.len(), GROUP_ORDER);
    words
}

/// Linear graph state on `n` qubits in qubit order.
pub fn linear_graph_state(n: usize) -> KetState {
    let mut k = KetState::zero(n);
    for q in 0..n {
        k.apply(Gate::H, &[q]).expect("in range");
    }
    for q in 1..n {
        k.apply(Gate::Cz, &[q - 1, q]).expect("in range");
    }
    k
}

// Forces a Z outcome on a qubit with P(1) strictly between 0 and 1.
fn force(k: &mut KetState, q: usize, outcome: u8) {
    let r = if outcome == 1 { 0.0 } else { 1.0 - 1e-9 };
    assert_eq!(k.measure_z(q, r).expect("in range"), outcome);
    k.discard(q).expect("definite");
}

/// State of (g0, g2, g4) after X measurements of g1 and g3 with outcomes (m1, m3).
pub fn post_measurement_state(m1: u8, m3: u8) -> KetState {
    let mut k = linear_graph_state(5);
    k.apply(Gate::H, &[3]).expect("in range");
    force(&mut k, 3, m3);
    k.apply(Gate::H, &[1]).expect("in range");
    force(&mut k, 1, m1);
    k
}

/// For each branch `2*m1 + m3`, the Clifford indices for (A, B, C) that map the
/// post-measurement state onto the linear graph state A–B–C. Among exact
/// solutions the shortest total word wins, then the lowest indices.
pub fn derive_correction_table() -> [[u8; 3]; 4] {
    let words = clifford_words();
    let target = linear_graph_state(3);
    let mut table = [[0u8; 3]; 4];
    for (branch, row) in table.iter_mut().enumerate() {
        let base = post_measurement_state((branch >> 1) as u8, (branch & 1) as u8);
        let mut best: Option<(usize, [u8; 3])> = None;
        for a in 0..GROUP_ORDER {
            for b in 0..GROUP_ORDER {
                for c in 0..GROUP_ORDER {
                    let cost = words[a].len() + words[b].len() + words[c].len();
                    if best.is_some_and(|(bc, _)| cost >= bc) {
                        continue;
                    }
                    let mut k = base.clone();
                    for (q, idx) in [a, b, c].into_iter().enumerate() {
                        for &g in &words[idx] {
                            k.apply(g, &[q]).expect("in range");
                        }
                    }
                    if (k.fidelity(&target).expect("same size") - 1.0).abs() < 1e-9 {
                        best = Some((cost, [a as u8, b as u8, c as u8]));
                    }
                }
            }
        }
        *row = best.expect("some local Clifford completes the graph state").1;
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_has_24_distinct_elements() {
        let w = clifford_words();
        assert_eq!(w.len(), 24);
        assert!(w[0].is_empty());
        assert_eq!(w[1], vec![Gate::H]);
        assert_eq!(w[2], vec![Gate::S]);
        assert!(w.iter().all(|x| x.len() <= 6));
    }

    #[test]
    fn group_is_closed() {
        let w = clifford_words();
        let mats: Vec<[i64; 8]> = w
            .iter()
            .map(|word| {
                let mut m: M2 = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
                for g in word {
                    m = mul(&g.matrix().unwrap(), &m);
                }
                key(&m)
            })
            .collect();
        for g in [Gate::H, Gate::S] {
            for word in w {
                let mut m: M2 = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];
                for x in word.iter().chain([&g]) {
                    m = mul(&x.matrix().unwrap(), &m);
                }
                assert!(mats.contains(&key(&m)));
            }
        }
    }
}
