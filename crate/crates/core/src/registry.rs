//! Global qubit registry: maps qubit handles to slots inside joint states.
//!
//! States are merged lazily, only when a multi-qubit gate spans two of them.
//! Measured and lost qubits are removed from their state; nothing else ever
//! splits a state.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::NodeId;
use crate::qstate::{BackendKind, Caps, Gate, JointState, KetState, Pauli, PauliString, QStateError};
use crate::trace::{EventKind, EventSink};

/// Globally unique qubit identity. Never reused within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QubitHandle(pub u64);

impl fmt::Display for QubitHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Live,
    Measured(u8),
    Lost,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Live => f.write_str("live"),
            Phase::Measured(b) => write!(f, "measured({b})"),
            Phase::Lost => f.write_str("lost"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(u64);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("no quantum-state backend configured")]
    BackendNotSet,
    #[error("backend already fixed: {0} qubits allocated")]
    BackendLocked(u64),
    #[error("unknown qubit {0}")]
    Unknown(QubitHandle),
    #[error("qubit {handle} is {phase}, not live")]
    NotLive { handle: QubitHandle, phase: Phase },
    #[error("qubit {0} is in flight")]
    InFlight(QubitHandle),
    #[error("qubit {0} given twice")]
    Repeated(QubitHandle),
    #[error("qubits do not make up exactly one joint state")]
    NotIsolated,
    #[error(transparent)]
    State(#[from] QStateError),
}

#[derive(Debug, Clone)]
struct Entry {
    phase: Phase,
    /// None while in flight.
    owner: Option<NodeId>,
    loc: Option<(StateId, usize)>,
}

#[derive(Debug, Clone)]
struct Slotted {
    state: JointState,
    /// members[slot] is the handle at that slot.
    members: Vec<QubitHandle>,
}

#[derive(Debug, Clone)]
pub struct QuantumStateRegistry {
    backend: Option<BackendKind>,
    caps: Caps,
    entries: Vec<Entry>,
    states: BTreeMap<StateId, Slotted>,
    next_state: u64,
    last_groups: Vec<Vec<u64>>,
    /// Set when a merge or a removal from a multi-qubit state may have changed the groups.
    groups_dirty: bool,
}

impl QuantumStateRegistry {
    pub fn new(backend: Option<BackendKind>, caps: Caps) -> Self {
        QuantumStateRegistry {
            backend,
            caps,
            entries: Vec::new(),
            states: BTreeMap::new(),
            next_state: 0,
            last_groups: Vec::new(),
            groups_dirty: false,
        }
    }

    pub fn backend(&self) -> Option<BackendKind> {
        self.backend
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn set_backend(&mut self, kind: BackendKind) -> Result<(), RegistryError> {
        if !self.entries.is_empty() && self.backend != Some(kind) {
            return Err(RegistryError::BackendLocked(self.entries.len() as u64));
        }
        self.backend = Some(kind);
        Ok(())
    }

    /// Total handles ever issued.
    pub fn allocated(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn live_count(&self) -> usize {
        self.entries.iter().filter(|e| e.phase == Phase::Live).count()
    }

    fn entry(&self, h: QubitHandle) -> Result<&Entry, RegistryError> {
        self.entries.get(h.0 as usize).ok_or(RegistryError::Unknown(h))
    }

    pub fn phase(&self, h: QubitHandle) -> Result<Phase, RegistryError> {
        Ok(self.entry(h)?.phase)
    }

    /// Current holder; `None` while in flight.
    pub fn owner(&self, h: QubitHandle) -> Result<Option<NodeId>, RegistryError> {
        Ok(self.entry(h)?.owner)
    }

    pub fn set_owner(&mut self, h: QubitHandle, owner: Option<NodeId>) -> Result<(), RegistryError> {
        self.live(h)?;
        self.entries[h.0 as usize].owner = owner;
        Ok(())
    }

    fn live(&self, h: QubitHandle) -> Result<(StateId, usize), RegistryError> {
        let e = self.entry(h)?;
        match (e.phase, e.loc) {
            (Phase::Live, Some(loc)) => Ok(loc),
            (phase, _) => Err(RegistryError::NotLive { handle: h, phase }),
        }
    }

    /// Live and held by a node.
    fn operable(&self, h: QubitHandle) -> Result<(StateId, usize), RegistryError> {
        let loc = self.live(h)?;
        if self.entries[h.0 as usize].owner.is_none() {
            return Err(RegistryError::InFlight(h));
        }
        Ok(loc)
    }

    pub fn alloc(&mut self, owner: NodeId, sink: &mut dyn EventSink) -> Result<QubitHandle, RegistryError> {
        let kind = self.backend.ok_or(RegistryError::BackendNotSet)?;
        let state = JointState::new(kind, 1, &self.caps)?;
        let sid = StateId(self.next_state);
        self.next_state += 1;
        let h = QubitHandle(self.entries.len() as u64);
        self.states.insert(
            sid,
            Slotted {
                state,
                members: vec![h],
            },
        );
        self.entries.push(Entry {
            phase: Phase::Live,
            owner: Some(owner),
            loc: Some((sid, 0)),
        });
        sink.emit(EventKind::QubitCreate {
            node: owner.0 as u64,
            qubit: h.0,
        });
        self.after_op(sink);
        Ok(h)
    }

    /// Merges the states of `handles` into one; returns its id.
    fn unify(&mut self, handles: &[QubitHandle]) -> Result<StateId, RegistryError> {
        let base = self.live(handles[0])?.0;
        let mut others: Vec<StateId> = Vec::new();
        for &h in &handles[1..] {
            let sid = self.live(h)?.0;
            if sid != base && !others.contains(&sid) {
                others.push(sid);
            }
        }
        if others.is_empty() {
            return Ok(base);
        }
        let total: usize = std::iter::once(base)
            .chain(others.iter().copied())
            .map(|s| self.states[&s].state.num_qubits())
            .sum();
        self.caps.check(self.backend.expect("states exist"), total)?;
        for sid in others {
            let other = self.states.remove(&sid).expect("live state");
            let target = self.states.get_mut(&base).expect("live state");
            let shift = target.state.num_qubits();
            target.state = target.state.merge(&other.state, &self.caps)?;
            for (k, &h) in other.members.iter().enumerate() {
                self.entries[h.0 as usize].loc = Some((base, shift + k));
            }
            target.members.extend(other.members);
        }
        self.groups_dirty = true;
        Ok(base)
    }

    pub fn apply(
        &mut self,
        gate: Gate,
        handles: &[QubitHandle],
        sink: &mut dyn EventSink,
    ) -> Result<(), RegistryError> {
        if handles.len() != gate.arity() {
            return Err(QStateError::Arity {
                gate,
                expected: gate.arity(),
                got: handles.len(),
            }
            .into());
        }
        for &h in handles {
            self.operable(h)?;
        }
        if handles.len() == 2 && handles[0] == handles[1] {
            return Err(RegistryError::Repeated(handles[0]));
        }
        let sid = self.unify(handles)?;
        let slots: Vec<usize> = handles.iter().map(|&h| self.live(h).map(|l| l.1)).collect::<Result<_, _>>()?;
        self.states
            .get_mut(&sid)
            .expect("live state")
            .state
            .apply_gate(gate, &slots)?;
        sink.emit(EventKind::Gate {
            name: gate.name().into(),
            qubits: handles.iter().map(|h| h.0).collect(),
        });
        self.after_op(sink);
        Ok(())
    }

    /// Removes slot `slot` from state `sid`, re-slotting later members.
    fn remove_slot(&mut self, sid: StateId, slot: usize) {
        let st = self.states.get_mut(&sid).expect("live state");
        if st.members.len() > 1 {
            self.groups_dirty = true;
        }
        st.members.remove(slot);
        for (k, &h) in st.members.iter().enumerate().skip(slot) {
            self.entries[h.0 as usize].loc = Some((sid, k));
        }
        if st.members.is_empty() {
            self.states.remove(&sid);
        }
    }

    /// Destructive measurement. X basis is H followed by a Z measurement.
    pub fn measure(
        &mut self,
        h: QubitHandle,
        basis: Basis,
        rand: f64,
        sink: &mut dyn EventSink,
    ) -> Result<u8, RegistryError> {
        let (sid, slot) = self.operable(h)?;
        let st = &mut self.states.get_mut(&sid).expect("live state").state;
        if basis == Basis::X {
            st.apply_gate(Gate::H, &[slot])?;
        }
        let outcome = st.measure_z(slot, rand)?;
        st.discard(slot)?;
        self.remove_slot(sid, slot);
        let e = &mut self.entries[h.0 as usize];
        e.phase = Phase::Measured(outcome);
        e.loc = None;
        e.owner = None;
        sink.emit(EventKind::Measure {
            qubit: h.0,
            basis: basis.as_str().into(),
            outcome,
        });
        self.after_op(sink);
        Ok(outcome)
    }

    /// CNOT(h0→h1), H(h0), then Z measurements; returns (b0, b1).
    pub fn measure_bell(
        &mut self,
        h0: QubitHandle,
        h1: QubitHandle,
        rands: (f64, f64),
        sink: &mut dyn EventSink,
    ) -> Result<(u8, u8), RegistryError> {
        if h0 == h1 {
            return Err(RegistryError::Repeated(h0));
        }
        self.operable(h0)?;
        self.operable(h1)?;
        self.apply(Gate::Cnot, &[h0, h1], sink)?;
        self.apply(Gate::H, &[h0], sink)?;
        let b0 = self.measure(h0, Basis::Z, rands.0, sink)?;
        let b1 = self.measure(h1, Basis::Z, rands.1, sink)?;
        Ok((b0, b1))
    }

    /// Marks a live qubit lost and removes it from its state without recording
    /// an outcome. Does not emit the `qlost` event itself.
    pub fn lose(&mut self, h: QubitHandle, rand: f64, sink: &mut dyn EventSink) -> Result<(), RegistryError> {
        let (sid, slot) = self.live(h)?;
        self.states
            .get_mut(&sid)
            .expect("live state")
            .state
            .forget(slot, rand)?;
        self.remove_slot(sid, slot);
        let e = &mut self.entries[h.0 as usize];
        e.phase = Phase::Lost;
        e.loc = None;
        e.owner = None;
        self.after_op(sink);
        Ok(())
    }

    /// Pauli channel on one qubit; in-flight qubits are allowed (noise on arrival).
    pub fn apply_pauli_channel(
        &mut self,
        h: QubitHandle,
        probs: [f64; 4],
        rand: f64,
    ) -> Result<Option<Pauli>, RegistryError> {
        let (sid, slot) = self.live(h)?;
        Ok(self
            .states
            .get_mut(&sid)
            .expect("live state")
            .state
            .apply_pauli_channel(slot, probs, rand)?)
    }

    /// Expectation of a Pauli product over live qubits. Qubits in different
    /// joint states contribute independent factors.
    pub fn expect(&self, ops: &[(QubitHandle, Pauli)], negative: bool) -> Result<f64, RegistryError> {
        let mut by_state: BTreeMap<StateId, Vec<(usize, Pauli)>> = BTreeMap::new();
        for (i, &(h, p)) in ops.iter().enumerate() {
            if ops[..i].iter().any(|(o, _)| *o == h) {
                return Err(RegistryError::Repeated(h));
            }
            let (sid, slot) = self.live(h)?;
            by_state.entry(sid).or_default().push((slot, p));
        }
        let mut value = if negative { -1.0 } else { 1.0 };
        for (sid, slots) in by_state {
            let st = &self.states[&sid].state;
            let ps = PauliString::from_sparse(st.num_qubits(), &slots);
            value *= st.expect_pauli(&ps)?;
        }
        Ok(value)
    }

    /// Fidelity against `reference`, whose qubit k corresponds to `handles[k]`.
    /// The handles must be exactly the members of one joint state.
    pub fn fidelity(&self, handles: &[QubitHandle], reference: &KetState) -> Result<f64, RegistryError> {
        let (sid, _) = self.live(handles[0])?;
        let st = &self.states[&sid];
        if st.members.len() != handles.len() {
            return Err(RegistryError::NotIsolated);
        }
        // perm[slot] = position in `handles` of the qubit at that slot
        let mut perm = Vec::with_capacity(handles.len());
        for m in &st.members {
            perm.push(
                handles
                    .iter()
                    .position(|h| h == m)
                    .ok_or(RegistryError::NotIsolated)?,
            );
        }
        Ok(st.state.fidelity(&reference.permuted(&perm))?)
    }

    /// Partition of live qubits by joint state; groups and members ascending.
    pub fn entanglement_groups(&self) -> Vec<Vec<QubitHandle>> {
        let mut groups: Vec<Vec<QubitHandle>> = self
            .states
            .values()
            .map(|s| {
                let mut g = s.members.clone();
                g.sort();
                g
            })
            .collect();
        groups.sort();
        groups
    }

    /// Groups holding two or more qubits, as emitted in `egroup` events.
    pub fn entangled_groups(&self) -> Vec<Vec<u64>> {
        self.entanglement_groups()
            .into_iter()
            .filter(|g| g.len() > 1)
            .map(|g| g.into_iter().map(|h| h.0).collect())
            .collect()
    }

    fn after_op(&mut self, sink: &mut dyn EventSink) {
        if self.groups_dirty {
            self.groups_dirty = false;
            let groups = self.entangled_groups();
            if groups != self.last_groups {
                sink.emit(EventKind::Egroup { groups: groups.clone() });
                self.last_groups = groups;
            }
        }
        if self.entries.len() <= 256 {
            debug_assert_eq!(self.check_integrity(), Ok(()));
        }
    }

    /// Verifies the handle ↔ slot bijection.
    pub fn check_integrity(&self) -> Result<(), String> {
        let mut live = 0;
        for (i, e) in self.entries.iter().enumerate() {
            match (e.phase, e.loc) {
                (Phase::Live, Some((sid, slot))) => {
                    live += 1;
                    let st = self.states.get(&sid).ok_or(format!("q{i} points at missing state"))?;
                    if st.members.get(slot) != Some(&QubitHandle(i as u64)) {
                        return Err(format!("q{i} slot {slot} mismatch"));
                    }
                }
                (Phase::Live, None) => return Err(format!("live q{i} has no slot")),
                (_, Some(_)) => return Err(format!("dead q{i} still slotted")),
                _ => {}
            }
        }
        let total: usize = self.states.values().map(|s| s.state.num_qubits()).sum();
        let members: usize = self.states.values().map(|s| s.members.len()).sum();
        if total != live || members != live {
            return Err(format!("{live} live handles but {total} state qubits / {members} members"));
        }
        Ok(())
    }
}
