//! Regenerates `src/protocols/cluster_corrections.rs`.
//!
//! For every (m1, m3) branch, searches all 24³ local Clifford triples on the
//! statevector backend for one that turns the post-measurement state of
//! (g0, g2, g4) into the linear graph state A–B–C.
//!
//!     cargo run -p qnetsim --example derive_cluster_corrections > crates/core/src/protocols/cluster_corrections.rs

use qnetsim::protocols::clifford::{clifford_words, derive_correction_table};

fn main() {
    let table = derive_correction_table();
    let words = clifford_words();
    println!("// Generated by `cargo run --example derive_cluster_corrections`; do not edit.");
    println!("//");
    println!("// Row 2*m1 + m3, column client (A, B, C): index into the H/S Clifford words.");
    for (branch, row) in table.iter().enumerate() {
        let show: Vec<String> = row
            .iter()
            .map(|&i| {
                let w = &words[usize::from(i)];
                if w.is_empty() {
                    "I".to_string()
                } else {
                    w.iter().map(|g| g.name()).collect::<Vec<_>>().join(" ")
                }
            })
            .collect();
        println!("// m1={} m3={}: {}", branch >> 1, branch & 1, show.join(" | "));
    }
    println!("pub const CORRECTIONS: [[u8; 3]; 4] = {table:?};");
}
