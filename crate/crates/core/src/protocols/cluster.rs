//! Five-qubit linear cluster state held by an Orchestrator: g0, g2, g4 go to
//! clients A, B, C; g1 and g3 are measured in X and each client gets a one-byte
//! index into the Clifford table telling it which local correction to apply.

use std::cell::RefCell;
use std::rc::Rc;

use super::clifford::clifford_words;
use super::cluster_corrections::CORRECTIONS;
use super::ghz::AckGate;
use super::{build_star, ScenarioError, ScenarioSpec, TrialRecord};
use crate::netmodel::{NetController, NetError};
use crate::qstate::{Gate, Pauli};
use crate::registry::{Basis, QubitHandle};
use crate::sim::SimTime;

pub const CLIENTS: [&str; 3] = ["Client A", "Client B", "Client C"];
pub const CORRECTION_TAG: &str = "correction";

/// K_A = X_A Z_B, K_B = Z_A X_B Z_C, K_C = Z_B X_C.
pub fn line3_stabilizers(net: &NetController, q: [QubitHandle; 3]) -> Result<[f64; 3], NetError> {
    Ok([
        net.expect(&[(q[0], Pauli::X), (q[1], Pauli::Z)])?,
        net.expect(&[(q[0], Pauli::Z), (q[1], Pauli::X), (q[2], Pauli::Z)])?,
        net.expect(&[(q[1], Pauli::Z), (q[2], Pauli::X)])?,
    ])
}

#[derive(Default)]
struct Progress {
    g: Vec<QubitHandle>,
    m: Option<(u8, u8)>,
    corrected: usize,
}

pub(super) fn trial(spec: &ScenarioSpec, net: &mut NetController) -> Result<TrialRecord, ScenarioError> {
    let ids = build_star(spec, net, "Orchestrator", &CLIENTS)?;
    let o = ids[0];
    let clients = ids[1..].to_vec();
    let st: Rc<RefCell<Progress>> = Rc::default();
    let gate = Rc::new(RefCell::new(AckGate::new(o, clients.clone(), Vec::new(), spec.ack_timeout()?)));

    let s = st.clone();
    let cl = clients.clone();
    AckGate::install(&gate, net, move |net| {
        let (g1, g3) = {
            let s = s.borrow();
            (s.g[1], s.g[3])
        };
        let m1 = net.measure(o, g1, Basis::X)?;
        let m3 = net.measure(o, g3, Basis::X)?;
        s.borrow_mut().m = Some((m1, m3));
        let row = CORRECTIONS[usize::from(2 * m1 + m3)];
        for (k, &c) in cl.iter().enumerate() {
            net.send_datagram(o, c, &[row[k]], CORRECTION_TAG)?;
        }
        Ok(())
    })?;

    for (k, &c) in clients.iter().enumerate() {
        let s = st.clone();
        net.set_datagram_callback(c, move |net, dg| {
            let q = s.borrow().g[2 * k];
            let word = &clifford_words()[usize::from(dg.payload[0])];
            for &g in word {
                net.apply_gate(c, g, &[q])?;
            }
            s.borrow_mut().corrected += 1;
            Ok(())
        })?;
    }

    let (s, g) = (st.clone(), gate.clone());
    net.schedule(SimTime::ZERO, move |net| {
        let q: Vec<QubitHandle> = (0..5).map(|_| net.alloc(o)).collect::<Result<_, _>>()?;
        for &x in &q {
            net.apply_gate(o, Gate::H, &[x])?;
        }
        for k in 1..5 {
            net.apply_gate(o, Gate::Cz, &[q[k - 1], q[k]])?;
        }
        g.borrow_mut().qubits = vec![q[0], q[2], q[4]];
        s.borrow_mut().g = q;
        AckGate::send_next(&g, net)
    })?;
    net.run()?;

    let timed_out = gate.borrow().timed_out;
    let s = st.borrow();
    let stabilizers = if s.corrected == 3 {
        Some(line3_stabilizers(net, [s.g[0], s.g[2], s.g[4]])?)
    } else {
        None
    };
    Ok(TrialRecord::Cluster5 {
        m1: s.m.map(|m| m.0),
        m3: s.m.map(|m| m.1),
        stabilizers,
        timed_out,
    })
}
