// Generated by `cargo run --example derive_cluster_corrections`; do not edit.
//
// Row 2*m1 + m3, column client (A, B, C): index into the H/S Clifford words.
// m1=0 m3=0: H | I | H
// m1=0 m3=1: H | I | H S S
// m1=1 m3=0: H S S | I | H
// m1=1 m3=1: H | H S S H | H
pub const CORRECTIONS: [[u8; 3]; 4] = [[1, 0, 1], [1, 0, 7], [7, 0, 1], [1, 12, 1]];
