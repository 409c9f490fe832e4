//! Teleportation of |+⟩ from A to B.
//!
//! t = 0: A prepares a Bell pair. t = 1 ms: A sends one half to B and prepares
//! the payload. On arrival A performs the Bell measurement and sends the two
//! bits; B applies X^b1 then Z^b0 and measures in the X basis.

use std::cell::RefCell;
use std::rc::Rc;

use super::{ScenarioError, ScenarioSpec, TrialRecord};
use crate::netmodel::{NetController, NodeId};
use crate::qstate::{BackendKind, Gate, KetState, Pauli};
use crate::registry::{Basis, QubitHandle};
use crate::sim::SimTime;

pub const SEND_AT: SimTime = SimTime::from_ms(1);
pub const CORRECTIONS_TAG: &str = "corrections";

pub fn plus_state() -> KetState {
    let mut k = KetState::zero(1);
    k.apply(Gate::H, &[0]).expect("in range");
    k
}

#[derive(Default)]
struct Progress {
    alice_half: Option<QubitHandle>,
    bob_half: Option<QubitHandle>,
    payload: Option<QubitHandle>,
    bits: Option<[u8; 2]>,
    fidelity: Option<f64>,
    x_outcome: Option<u8>,
}

pub(super) fn trial(spec: &ScenarioSpec, net: &mut NetController) -> Result<TrialRecord, ScenarioError> {
    let a = net.create_node(Some("A"))?;
    let b = net.create_node(Some("B"))?;
    net.install_quantum_link(a, b)?;
    net.install_classical_link(a, b)?;
    net.set_qlink_delay(a, b, spec.effective_qdelay())?;
    net.set_clink_delay(a, b, spec.effective_cdelay())?;
    super::attach_noise(spec, net)?;

    let st = Rc::new(RefCell::new(Progress::default()));

    let s = st.clone();
    net.set_recv_callback(b, move |net, _q, from: NodeId| {
        let (payload, half) = {
            let s = s.borrow();
            (s.payload.expect("prepared"), s.alice_half.expect("prepared"))
        };
        let (b0, b1) = net.measure_bell(from, payload, half)?;
        s.borrow_mut().bits = Some([b0, b1]);
        net.send_datagram(from, b, &[b0, b1], CORRECTIONS_TAG)
    })?;

    let s = st.clone();
    net.set_datagram_callback(b, move |net, dg| {
        let q = s.borrow().bob_half.expect("delivered");
        let (b0, b1) = (dg.payload[0], dg.payload[1]);
        if b1 == 1 {
            net.apply_gate(b, Gate::X, &[q])?;
        }
        if b0 == 1 {
            net.apply_gate(b, Gate::Z, &[q])?;
        }
        let f = match net.backend() {
            BackendKind::Stab => (1.0 + net.expect(&[(q, Pauli::X)])?) / 2.0,
            _ => net.fidelity(&[q], &plus_state())?,
        };
        let x = net.measure(b, q, Basis::X)?;
        let mut s = s.borrow_mut();
        s.fidelity = Some(f);
        s.x_outcome = Some(x);
        Ok(())
    })?;

    let s = st.clone();
    net.schedule(SimTime::ZERO, move |net| {
        let (h0, h1) = net.create_bell_pair(a)?;
        let mut p = s.borrow_mut();
        p.alice_half = Some(h0);
        p.bob_half = Some(h1);
        Ok(())
    })?;
    let s = st.clone();
    net.schedule(SEND_AT, move |net| {
        let half = s.borrow().bob_half.expect("prepared at t=0");
        net.send_qubit(a, half, b)?;
        let payload = net.alloc(a)?;
        net.apply_gate(a, Gate::H, &[payload])?;
        s.borrow_mut().payload = Some(payload);
        Ok(())
    })?;
    net.run()?;

    let p = st.borrow();
    let lost = net.registry().phase(p.bob_half.expect("prepared")).map_err(crate::netmodel::NetError::from)?
        == crate::registry::Phase::Lost;
    Ok(TrialRecord::Teleportation {
        bits: p.bits,
        x_outcome: p.x_outcome,
        fidelity: p.fidelity,
        lost,
    })
}
