//! Topology entities and the network controller.
//!
//! [`NetController`] owns the scheduler, the qubit registry, the nodes and
//! links, the RNG and the trace log. Protocol code runs inside scheduled
//! actions and reception callbacks, each receiving `&mut NetController`.

use std::cell::RefCell;
use std::collections::VecDeque;
use std::fmt;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmaps::{apply_on_arrival, Arrival, QMap, QMapError};
use crate::qstate::{BackendKind, Caps, Gate, KetState, Pauli};
use crate::registry::{Basis, Phase, QuantumStateRegistry, QubitHandle, RegistryError};
use crate::sim::{self, EventId, RunError, ScheduleError, Scheduler, SimContext, SimTime};
use crate::trace::{
    encode_payload, CLinkEntry, EventKind, NodeEntry, QLinkEntry, Topology, TraceEvent, TraceRecorder,
};

pub const MAX_PAYLOAD: usize = 65_507;
pub const DEFAULT_CLASSICAL_DELAY: SimTime = SimTime::from_ms(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: Vec<u8>,
    pub tag: String,
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unknown {0}")]
    UnknownNode(NodeId),
    #[error("link endpoints must differ ({0})")]
    SelfLink(NodeId),
    #[error("{kind} link between {a} and {b} already exists")]
    DuplicateLink { kind: &'static str, a: NodeId, b: NodeId },
    #[error("no {kind} link between {a} and {b}")]
    NoLink { kind: &'static str, a: NodeId, b: NodeId },
    #[error("{node} does not hold qubit {qubit}")]
    NotOwner { node: NodeId, qubit: QubitHandle },
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLarge(usize),
    #[error("topology and noise maps are frozen while the simulation runs")]
    Frozen,
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    QMap(#[from] QMapError),
}

type RecvFn = dyn FnMut(&mut NetController, QubitHandle, NodeId) -> Result<(), NetError>;
type DatagramFn = dyn FnMut(&mut NetController, Datagram) -> Result<(), NetError>;

struct QNode {
    label: String,
    recv: Option<Rc<RefCell<RecvFn>>>,
    datagram: Option<Rc<RefCell<DatagramFn>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QChannel {
    pub a: NodeId,
    pub b: NodeId,
    pub delay: SimTime,
    pub qmaps: Vec<QMap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalLink {
    pub a: NodeId,
    pub b: NodeId,
    pub delay: SimTime,
}

fn joins(a: NodeId, b: NodeId, x: NodeId, y: NodeId) -> bool {
    (a, b) == (x, y) || (a, b) == (y, x)
}

pub struct NetController {
    sched: Scheduler<NetController>,
    registry: QuantumStateRegistry,
    nodes: Vec<QNode>,
    qchannels: Vec<QChannel>,
    clinks: Vec<ClassicalLink>,
    rng: ChaCha8Rng,
    forced: VecDeque<f64>,
    trace: TraceRecorder,
    running: bool,
}

impl SimContext for NetController {
    type Error = NetError;

    fn scheduler(&mut self) -> &mut Scheduler<Self> {
        &mut self.sched
    }
}

impl NetController {
    /// Ket backend, default capacities, trace recording on.
    pub fn new(seed: u64) -> Self {
        NetController::with_caps(seed, Caps::default())
    }

    pub fn with_caps(seed: u64, caps: Caps) -> Self {
        NetController::with_stream(seed, 0, caps)
    }

    /// An independent RNG stream `stream` under the same seed; trials use
    /// their index here.
    pub fn with_stream(seed: u64, stream: u64, caps: Caps) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NetController {
            sched: Scheduler::new(),
            registry: QuantumStateRegistry::new(Some(BackendKind::default()), caps),
            nodes: Vec::new(),
            qchannels: Vec::new(),
            clinks: Vec::new(),
            rng,
            forced: VecDeque::new(),
            trace: TraceRecorder::new(true),
            running: false,
        }
    }

    /// Keeps counting events but stops storing them.
    pub fn disable_trace(&mut self) {
        self.trace = TraceRecorder::new(false);
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn is_running(&self) -> bool {
        self.running
    }

    fn ensure_stopped(&self) -> Result<(), NetError> {
        if self.running {
            Err(NetError::Frozen)
        } else {
            Ok(())
        }
    }

    fn node(&self, id: NodeId) -> Result<&QNode, NetError> {
        self.nodes.get(id.0 as usize).ok_or(NetError::UnknownNode(id))
    }

    fn node_mut(&mut self, id: NodeId) -> Result<&mut QNode, NetError> {
        self.nodes.get_mut(id.0 as usize).ok_or(NetError::UnknownNode(id))
    }

    // ---- topology ----

    pub fn create_node(&mut self, label: Option<&str>) -> Result<NodeId, NetError> {
        self.ensure_stopped()?;
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(QNode {
            label: label.map_or_else(|| format!("n{}", id.0), str::to_string),
            recv: None,
            datagram: None,
        });
        Ok(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn label(&self, id: NodeId) -> Result<&str, NetError> {
        Ok(&self.node(id)?.label)
    }

    pub fn backend(&self) -> BackendKind {
        self.registry.backend().expect("controller always has a backend")
    }

    /// Fails once any qubit has been allocated with a different backend.
    pub fn set_qstate_backend(&mut self, kind: BackendKind) -> Result<(), NetError> {
        Ok(self.registry.set_backend(kind)?)
    }

    fn check_pair(&self, a: NodeId, b: NodeId) -> Result<(), NetError> {
        self.node(a)?;
        self.node(b)?;
        if a == b {
            return Err(NetError::SelfLink(a));
        }
        Ok(())
    }

    /// Quantum link with zero delay and no noise maps.
    pub fn install_quantum_link(&mut self, a: NodeId, b: NodeId) -> Result<(), NetError> {
        self.ensure_stopped()?;
        self.check_pair(a, b)?;
        if self.qchannels.iter().any(|c| joins(c.a, c.b, a, b)) {
            return Err(NetError::DuplicateLink { kind: "quantum", a, b });
        }
        self.qchannels.push(QChannel {
            a,
            b,
            delay: SimTime::ZERO,
            qmaps: Vec::new(),
        });
        Ok(())
    }

    /// Classical link with the default 1 ms delay.
    pub fn install_classical_link(&mut self, a: NodeId, b: NodeId) -> Result<(), NetError> {
        self.ensure_stopped()?;
        self.check_pair(a, b)?;
        if self.clinks.iter().any(|c| joins(c.a, c.b, a, b)) {
            return Err(NetError::DuplicateLink { kind: "classical", a, b });
        }
        self.clinks.push(ClassicalLink {
            a,
            b,
            delay: DEFAULT_CLASSICAL_DELAY,
        });
        Ok(())
    }

    fn qchannel_index(&self, a: NodeId, b: NodeId) -> Result<usize, NetError> {
        self.qchannels
            .iter()
            .position(|c| joins(c.a, c.b, a, b))
            .ok_or(NetError::NoLink { kind: "quantum", a, b })
    }

    fn clink_index(&self, a: NodeId, b: NodeId) -> Result<usize, NetError> {
        self.clinks
            .iter()
            .position(|c| joins(c.a, c.b, a, b))
            .ok_or(NetError::NoLink { kind: "classical", a, b })
    }

    pub fn qchannel(&self, a: NodeId, b: NodeId) -> Result<&QChannel, NetError> {
        Ok(&self.qchannels[self.qchannel_index(a, b)?])
    }

    pub fn clink(&self, a: NodeId, b: NodeId) -> Result<&ClassicalLink, NetError> {
        Ok(&self.clinks[self.clink_index(a, b)?])
    }

    pub fn set_qlink_delay(&mut self, a: NodeId, b: NodeId, delay: SimTime) -> Result<(), NetError> {
        self.ensure_stopped()?;
        let i = self.qchannel_index(a, b)?;
        self.qchannels[i].delay = delay;
        Ok(())
    }

    pub fn set_clink_delay(&mut self, a: NodeId, b: NodeId, delay: SimTime) -> Result<(), NetError> {
        self.ensure_stopped()?;
        let i = self.clink_index(a, b)?;
        self.clinks[i].delay = delay;
        Ok(())
    }

    /// Appends a noise map to the (undirected) quantum link between `a` and `b`.
    pub fn attach_qmap(&mut self, a: NodeId, b: NodeId, map: QMap) -> Result<(), NetError> {
        self.ensure_stopped()?;
        let i = self.qchannel_index(a, b)?;
        self.qchannels[i].qmaps.push(map);
        Ok(())
    }

    /// Attaches `map` to every quantum link.
    pub fn attach_qmap_all(&mut self, map: QMap) -> Result<(), NetError> {
        self.ensure_stopped()?;
        for c in &mut self.qchannels {
            c.qmaps.push(map);
        }
        Ok(())
    }

    pub fn topology(&self) -> Topology {
        Topology {
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| NodeEntry {
                    id: i as u64,
                    label: n.label.clone(),
                })
                .collect(),
            qlinks: self
                .qchannels
                .iter()
                .map(|c| QLinkEntry {
                    a: c.a.0.into(),
                    b: c.b.0.into(),
                    delay_ns: c.delay.as_ns(),
                    qmaps: c.qmaps.iter().map(QMap::entry).collect(),
                })
                .collect(),
            clinks: self
                .clinks
                .iter()
                .map(|c| CLinkEntry {
                    a: c.a.0.into(),
                    b: c.b.0.into(),
                    delay_ns: c.delay.as_ns(),
                })
                .collect(),
        }
    }

    // ---- callbacks ----

    pub fn set_recv_callback<F>(&mut self, node: NodeId, cb: F) -> Result<(), NetError>
    where
        F: FnMut(&mut NetController, QubitHandle, NodeId) -> Result<(), NetError> + 'static,
    {
        self.node_mut(node)?.recv = Some(Rc::new(RefCell::new(cb)));
        Ok(())
    }

    pub fn set_datagram_callback<F>(&mut self, node: NodeId, cb: F) -> Result<(), NetError>
    where
        F: FnMut(&mut NetController, Datagram) -> Result<(), NetError> + 'static,
    {
        self.node_mut(node)?.datagram = Some(Rc::new(RefCell::new(cb)));
        Ok(())
    }

    // ---- randomness ----

    /// Next uniform variate in [0, 1). Forced values are consumed first.
    pub fn draw(&mut self) -> f64 {
        match self.forced.pop_front() {
            Some(r) => r,
            None => self.rng.gen(),
        }
    }

    /// Queues values that the next draws return instead of the RNG stream.
    pub fn force_draws(&mut self, values: impl IntoIterator<Item = f64>) {
        self.forced.extend(values);
    }

    // ---- quantum operations ----

    fn check_held(&self, node: NodeId, qubits: &[QubitHandle]) -> Result<(), NetError> {
        self.node(node)?;
        for &q in qubits {
            let phase = self.registry.phase(q)?;
            if phase != Phase::Live {
                return Err(RegistryError::NotLive { handle: q, phase }.into());
            }
            match self.registry.owner(q)? {
                Some(o) if o == node => {}
                None => return Err(RegistryError::InFlight(q).into()),
                _ => return Err(NetError::NotOwner { node, qubit: q }),
            }
        }
        Ok(())
    }

    pub fn alloc(&mut self, node: NodeId) -> Result<QubitHandle, NetError> {
        self.node(node)?;
        let mut sink = self.trace.stamped(self.sched.now());
        Ok(self.registry.alloc(node, &mut sink)?)
    }

    pub fn apply_gate(&mut self, node: NodeId, gate: Gate, qubits: &[QubitHandle]) -> Result<(), NetError> {
        self.check_held(node, qubits)?;
        let mut sink = self.trace.stamped(self.sched.now());
        Ok(self.registry.apply(gate, qubits, &mut sink)?)
    }

    pub fn measure(&mut self, node: NodeId, q: QubitHandle, basis: Basis) -> Result<u8, NetError> {
        self.check_held(node, &[q])?;
        let r = self.draw();
        let mut sink = self.trace.stamped(self.sched.now());
        Ok(self.registry.measure(q, basis, r, &mut sink)?)
    }

    pub fn measure_bell(&mut self, node: NodeId, q0: QubitHandle, q1: QubitHandle) -> Result<(u8, u8), NetError> {
        self.check_held(node, &[q0, q1])?;
        let rands = (self.draw(), self.draw());
        let mut sink = self.trace.stamped(self.sched.now());
        Ok(self.registry.measure_bell(q0, q1, rands, &mut sink)?)
    }

    /// Allocates two qubits at `node` in |Φ+⟩.
    pub fn create_bell_pair(&mut self, node: NodeId) -> Result<(QubitHandle, QubitHandle), NetError> {
        let a = self.alloc(node)?;
        let b = self.alloc(node)?;
        self.apply_gate(node, Gate::H, &[a])?;
        self.apply_gate(node, Gate::Cnot, &[a, b])?;
        Ok((a, b))
    }

    pub fn expect(&self, ops: &[(QubitHandle, Pauli)]) -> Result<f64, NetError> {
        Ok(self.registry.expect(ops, false)?)
    }

    pub fn fidelity(&self, qubits: &[QubitHandle], reference: &KetState) -> Result<f64, NetError> {
        Ok(self.registry.fidelity(qubits, reference)?)
    }

    pub fn registry(&self) -> &QuantumStateRegistry {
        &self.registry
    }

    pub fn entanglement_groups(&self) -> Vec<Vec<QubitHandle>> {
        self.registry.entanglement_groups()
    }

    // ---- transport ----

    /// Non-blocking; the qubit is in flight until the channel delay elapses.
    pub fn send_qubit(&mut self, from: NodeId, q: QubitHandle, to: NodeId) -> Result<(), NetError> {
        let ch = self.qchannel_index(from, to)?;
        self.check_held(from, &[q])?;
        let delay = self.qchannels[ch].delay;
        let id = self.sched.schedule(delay, move |net: &mut NetController| net.arrive(ch, q, from, to))?;
        debug_assert!(id.fire_at >= self.now());
        self.registry.set_owner(q, None)?;
        self.trace.record(
            self.sched.now(),
            EventKind::Qsend {
                qubit: q.0,
                src: from.0.into(),
                dst: to.0.into(),
            },
        );
        Ok(())
    }

    fn arrive(&mut self, ch: usize, q: QubitHandle, from: NodeId, to: NodeId) -> Result<(), NetError> {
        let now = self.sched.now();
        let maps = self.qchannels[ch].qmaps.clone();
        let NetController {
            registry,
            rng,
            forced,
            trace,
            ..
        } = self;
        let mut draw = || forced.pop_front().unwrap_or_else(|| rng.gen());
        let outcome = apply_on_arrival(&maps, q, registry, &mut draw, &mut trace.stamped(now))?;
        let ids = (q.0, from.0.into(), to.0.into());
        if outcome == Arrival::Lost {
            self.trace.record(now, EventKind::Qlost { qubit: ids.0, src: ids.1, dst: ids.2 });
            return Ok(());
        }
        self.registry.set_owner(q, Some(to))?;
        self.trace.record(now, EventKind::Qrecv { qubit: ids.0, src: ids.1, dst: ids.2 });
        if let Some(cb) = self.node(to)?.recv.clone() {
            (cb.borrow_mut())(self, q, from)?;
        }
        Ok(())
    }

    /// Reliable, FIFO, byte-exact delivery after the link delay.
    pub fn send_datagram(&mut self, from: NodeId, to: NodeId, payload: &[u8], tag: &str) -> Result<(), NetError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(NetError::PayloadTooLarge(payload.len()));
        }
        let link = self.clinks[self.clink_index(from, to)?];
        let dg = Datagram {
            src: from,
            dst: to,
            payload: payload.to_vec(),
            tag: tag.to_string(),
        };
        let ev = EventKind::Csend {
            src: from.0.into(),
            dst: to.0.into(),
            payload_b64: encode_payload(payload),
            tag: tag.to_string(),
        };
        self.sched.schedule(link.delay, move |net: &mut NetController| net.deliver(dg))?;
        self.trace.record(self.sched.now(), ev);
        Ok(())
    }

    fn deliver(&mut self, dg: Datagram) -> Result<(), NetError> {
        self.trace.record(
            self.sched.now(),
            EventKind::Crecv {
                src: dg.src.0.into(),
                dst: dg.dst.0.into(),
                payload_b64: encode_payload(&dg.payload),
                tag: dg.tag.clone(),
            },
        );
        if let Some(cb) = self.node(dg.dst)?.datagram.clone() {
            (cb.borrow_mut())(self, dg)?;
        }
        Ok(())
    }

    // ---- scheduling ----

    pub fn schedule<F>(&mut self, delay: SimTime, action: F) -> Result<EventId, NetError>
    where
        F: FnOnce(&mut NetController) -> Result<(), NetError> + 'static,
    {
        Ok(self.sched.schedule(delay, action)?)
    }

    pub fn cancel(&mut self, id: EventId) -> bool {
        self.sched.cancel(id)
    }

    pub fn halt(&mut self) {
        self.sched.halt();
    }

    pub fn is_halted(&self) -> bool {
        self.sched.is_halted()
    }

    pub fn executed_events(&self) -> u64 {
        self.sched.executed()
    }

    /// Free-text annotation in the trace.
    pub fn note(&mut self, text: impl Into<String>) {
        self.trace.record(self.sched.now(), EventKind::Note { text: text.into() });
    }

    /// Drains the event queue. Topology is frozen for the duration.
    pub fn run(&mut self) -> Result<SimTime, RunError<NetError>> {
        self.running = true;
        let out = sim::run(self);
        self.running = false;
        out
    }

    pub fn trace(&self) -> &TraceRecorder {
        &self.trace
    }

    pub fn trace_events(&self) -> &[TraceEvent] {
        self.trace.events()
    }

    pub fn take_trace(&mut self) -> TraceRecorder {
        std::mem::take(&mut self.trace)
    }
}
