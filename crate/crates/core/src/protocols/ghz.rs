//! GHZ₄ preparation at a source and ack-gated distribution to three parties.

use std::cell::RefCell;
use std::rc::Rc;

use super::{build_star, ScenarioError, ScenarioSpec, TrialRecord};
use crate::netmodel::{NetController, NetError, NodeId};
use crate::qstate::Gate;
use crate::registry::{Basis, QubitHandle};
use crate::sim::{EventId, SimTime};

pub const ACK_TAG: &str = "ack";
pub const ACK_PAYLOAD: [u8; 1] = [0x01];

/// Sends `qubits[k]` to `leaves[k]` one at a time, each after the previous
/// leaf's ack, then calls `done`. A missing ack halts the run with a note.
pub(super) struct AckGate {
    pub center: NodeId,
    pub leaves: Vec<NodeId>,
    pub qubits: Vec<QubitHandle>,
    pub timeout: SimTime,
    next: usize,
    pending: Option<EventId>,
    pub timed_out: bool,
}

impl AckGate {
    pub fn new(center: NodeId, leaves: Vec<NodeId>, qubits: Vec<QubitHandle>, timeout: SimTime) -> Self {
        AckGate {
            center,
            leaves,
            qubits,
            timeout,
            next: 0,
            pending: None,
            timed_out: false,
        }
    }

    /// Wires leaf acks and the center's ack handling; `done` runs once all
    /// leaves have acknowledged.
    pub fn install<F>(gate: &Rc<RefCell<AckGate>>, net: &mut NetController, done: F) -> Result<(), NetError>
    where
        F: FnMut(&mut NetController) -> Result<(), NetError> + 'static,
    {
        let (center, leaves) = {
            let g = gate.borrow();
            (g.center, g.leaves.clone())
        };
        for &leaf in &leaves {
            net.set_recv_callback(leaf, move |net, _q, from| net.send_datagram(leaf, from, &ACK_PAYLOAD, ACK_TAG))?;
        }
        let g = gate.clone();
        let done = Rc::new(RefCell::new(done));
        net.set_datagram_callback(center, move |net, dg| {
            if dg.tag != ACK_TAG {
                return Ok(());
            }
            if let Some(id) = g.borrow_mut().pending.take() {
                net.cancel(id);
            }
            let finished = g.borrow().next == g.borrow().leaves.len();
            if finished {
                (done.borrow_mut())(net)
            } else {
                AckGate::send_next(&g, net)
            }
        })
    }

    pub fn send_next(gate: &Rc<RefCell<AckGate>>, net: &mut NetController) -> Result<(), NetError> {
        let (center, leaf, q, timeout, k) = {
            let mut g = gate.borrow_mut();
            let k = g.next;
            g.next += 1;
            (g.center, g.leaves[k], g.qubits[k], g.timeout, k)
        };
        net.send_qubit(center, q, leaf)?;
        let g = gate.clone();
        let id = net.schedule(timeout, move |net| {
            g.borrow_mut().timed_out = true;
            net.note(format!("ack timeout: no ack from {} for qubit {} (spoke {})", net.label(leaf)?, q.0, k + 1));
            net.halt();
            Ok(())
        })?;
        gate.borrow_mut().pending = Some(id);
        Ok(())
    }
}

pub(super) fn trial(spec: &ScenarioSpec, net: &mut NetController) -> Result<TrialRecord, ScenarioError> {
    let ids = build_star(spec, net, "Source", &["P1", "P2", "P3"])?;
    let src = ids[0];
    let timeout = spec.ack_timeout()?;

    let qubits: Rc<RefCell<Vec<QubitHandle>>> = Rc::default();
    let outcomes: Rc<RefCell<Option<[u8; 4]>>> = Rc::default();
    let gate = Rc::new(RefCell::new(AckGate::new(src, ids[1..].to_vec(), Vec::new(), timeout)));

    let (qs, out) = (qubits.clone(), outcomes.clone());
    AckGate::install(&gate, net, move |net| {
        let mut o = [0u8; 4];
        for (k, &q) in qs.borrow().iter().enumerate() {
            let holder = net.registry().owner(q)?.expect("all delivered");
            o[k] = net.measure(holder, q, Basis::Z)?;
        }
        *out.borrow_mut() = Some(o);
        Ok(())
    })?;

    let (qs, g) = (qubits.clone(), gate.clone());
    net.schedule(SimTime::ZERO, move |net| {
        let q: Vec<QubitHandle> = (0..4).map(|_| net.alloc(src)).collect::<Result<_, _>>()?;
        net.apply_gate(src, Gate::H, &[q[0]])?;
        for k in 1..4 {
            net.apply_gate(src, Gate::Cnot, &[q[k - 1], q[k]])?;
        }
        g.borrow_mut().qubits = q[1..].to_vec();
        *qs.borrow_mut() = q;
        AckGate::send_next(&g, net)
    })?;
    net.run()?;

    let timed_out = gate.borrow().timed_out;
    let outcomes = *outcomes.borrow();
    Ok(TrialRecord::Ghz4 { outcomes, timed_out })
}
