//! All-to-all Bell pair distribution over a fully connected triangle.

use std::cell::RefCell;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::{attach_noise, ScenarioError, ScenarioSpec, TrialRecord};
use crate::netmodel::{NetController, NetError, NodeId};
use crate::qstate::{BackendKind, KetState, Pauli};
use crate::registry::QubitHandle;
use crate::sim::SimTime;

/// (source, destination) for each unordered pair; the lower id is the source.
pub const BELL_PAIRS: [(u32, u32); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub src: u32,
    pub dst: u32,
    /// (source half, destination half); absent if the half was lost.
    pub outcomes: Option<[u8; 2]>,
    /// Fidelity with |Φ+⟩ on arrival, before measurement.
    pub fidelity: Option<f64>,
    pub lost: bool,
}

pub fn phi_plus() -> KetState {
    let mut k = KetState::zero(2);
    k.apply(crate::qstate::Gate::H, &[0]).expect("in range");
    k.apply(crate::qstate::Gate::Cnot, &[0, 1]).expect("in range");
    k
}

/// Fidelity with |Φ+⟩ of a two-qubit state: (1 + ⟨XX⟩ − ⟨YY⟩ + ⟨ZZ⟩) / 4.
pub fn phi_plus_fidelity_from_paulis(net: &NetController, a: QubitHandle, b: QubitHandle) -> Result<f64, NetError> {
    let e = |p: Pauli| net.expect(&[(a, p), (b, p)]);
    Ok((1.0 + e(Pauli::X)? - e(Pauli::Y)? + e(Pauli::Z)?) / 4.0)
}

struct Slot {
    keep: QubitHandle,
    sent: QubitHandle,
    out: PairOutcome,
}

pub(super) fn trial(spec: &ScenarioSpec, net: &mut NetController) -> Result<TrialRecord, ScenarioError> {
    let nodes: Vec<NodeId> = ["A", "B", "C"]
        .iter()
        .map(|l| net.create_node(Some(l)))
        .collect::<Result<_, _>>()?;
    for &(a, b) in &BELL_PAIRS {
        let (a, b) = (NodeId(a), NodeId(b));
        net.install_quantum_link(a, b)?;
        net.set_qlink_delay(a, b, spec.effective_qdelay())?;
    }
    attach_noise(spec, net)?;

    let slots: Rc<RefCell<Vec<Slot>>> = Rc::new(RefCell::new(Vec::new()));
    let basis = spec.bell_basis;
    for &n in &nodes {
        let slots = slots.clone();
        net.set_recv_callback(n, move |net, q, from| {
            let mut slots = slots.borrow_mut();
            let slot = slots.iter_mut().find(|s| s.sent == q).expect("every sent half is tracked");
            slot.out.fidelity = Some(match net.backend() {
                BackendKind::Stab => phi_plus_fidelity_from_paulis(net, slot.keep, q)?,
                _ => net.fidelity(&[slot.keep, q], &phi_plus())?,
            });
            let m0 = net.measure(from, slot.keep, basis)?;
            let m1 = net.measure(net.registry().owner(q)?.expect("just received"), q, basis)?;
            slot.out.outcomes = Some([m0, m1]);
            Ok(())
        })?;
    }

    let s2 = slots.clone();
    net.schedule(SimTime::ZERO, move |net| {
        for &(a, b) in &BELL_PAIRS {
            let (keep, sent) = net.create_bell_pair(NodeId(a))?;
            net.send_qubit(NodeId(a), sent, NodeId(b))?;
            s2.borrow_mut().push(Slot {
                keep,
                sent,
                out: PairOutcome {
                    src: a,
                    dst: b,
                    outcomes: None,
                    fidelity: None,
                    lost: false,
                },
            });
        }
        Ok(())
    })?;
    net.run()?;

    let mut pairs = Vec::new();
    for s in slots.borrow().iter() {
        let mut out = s.out.clone();
        out.lost = net.registry().phase(s.sent).map_err(NetError::from)? == crate::registry::Phase::Lost;
        pairs.push(out);
    }
    Ok(TrialRecord::Bell { pairs })
}
