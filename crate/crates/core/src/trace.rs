//! JSON trace documents: the replay format consumed by the visualizer.
//!
//! A document is `{meta, topology, events}`. Events are sorted by
//! `(t_ns, seq)` with strictly increasing `seq`; each carries a `type` tag and
//! exactly the payload fields listed on [`EventKind`].

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use base64::Engine as _;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::sim::SimTime;

pub const FORMAT_VERSION: &str = "1";

/// Descriptions of the noise-map parameterizations, recorded in every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParameterization {
    pub loss: String,
    pub depolarizing: String,
    pub dephasing: String,
}

impl Default for NoiseParameterization {
    fn default() -> Self {
        NoiseParameterization {
            loss: "qubit discarded with probability p on arrival".into(),
            depolarizing: "replaced by the maximally mixed state with probability p: Pauli probs (1-3p/4, p/4, p/4, p/4)".into(),
            dephasing: "rho -> (1-p) rho + p Z rho Z".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub format_version: String,
    pub backend: String,
    pub seed: u64,
    pub scenario: String,
    pub noise_parameterization: NoiseParameterization,
    /// Run parameters, reflected as given.
    #[serde(default)]
    pub config: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: u64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMapEntry {
    pub kind: String,
    #[serde(serialize_with = "ser_prob")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLinkEntry {
    pub a: u64,
    pub b: u64,
    pub delay_ns: u64,
    pub qmaps: Vec<QMapEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CLinkEntry {
    pub a: u64,
    pub b: u64,
    pub delay_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<NodeEntry>,
    pub qlinks: Vec<QLinkEntry>,
    pub clinks: Vec<CLinkEntry>,
}

/// Per-type event payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    QubitCreate {
        node: u64,
        qubit: u64,
    },
    Gate {
        name: String,
        qubits: Vec<u64>,
    },
    Measure {
        qubit: u64,
        basis: String,
        outcome: u8,
    },
    Noise {
        qubit: u64,
        kind: String,
        #[serde(serialize_with = "ser_prob")]
        p: f64,
        effect: String,
    },
    Qsend {
        qubit: u64,
        src: u64,
        dst: u64,
    },
    Qrecv {
        qubit: u64,
        src: u64,
        dst: u64,
    },
    Qlost {
        qubit: u64,
        src: u64,
        dst: u64,
    },
    Csend {
        src: u64,
        dst: u64,
        payload_b64: String,
        tag: String,
    },
    Crecv {
        src: u64,
        dst: u64,
        payload_b64: String,
        tag: String,
    },
    Egroup {
        groups: Vec<Vec<u64>>,
    },
    TrialBoundary {
        trial: u64,
    },
    Note {
        text: String,
    },
}

impl EventKind {
    pub fn type_name(&self) -> &'static str {
        match self {
            EventKind::QubitCreate { .. } => "qubit_create",
            EventKind::Gate { .. } => "gate",
            EventKind::Measure { .. } => "measure",
            EventKind::Noise { .. } => "noise",
            EventKind::Qsend { .. } => "qsend",
            EventKind::Qrecv { .. } => "qrecv",
            EventKind::Qlost { .. } => "qlost",
            EventKind::Csend { .. } => "csend",
            EventKind::Crecv { .. } => "crecv",
            EventKind::Egroup { .. } => "egroup",
            EventKind::TrialBoundary { .. } => "trial_boundary",
            EventKind::Note { .. } => "note",
        }
    }

    fn shift_qubits(&mut self, offset: u64) {
        match self {
            EventKind::QubitCreate { qubit, .. }
            | EventKind::Measure { qubit, .. }
            | EventKind::Noise { qubit, .. }
            | EventKind::Qsend { qubit, .. }
            | EventKind::Qrecv { qubit, .. }
            | EventKind::Qlost { qubit, .. } => *qubit += offset,
            EventKind::Gate { qubits, .. } => qubits.iter_mut().for_each(|q| *q += offset),
            EventKind::Egroup { groups } => groups
                .iter_mut()
                .flatten()
                .for_each(|q| *q += offset),
            EventKind::Csend { .. }
            | EventKind::Crecv { .. }
            | EventKind::TrialBoundary { .. }
            | EventKind::Note { .. } => {}
        }
    }
}

pub fn encode_payload(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn decode_payload(s: &str) -> Option<Vec<u8>> {
    base64::engine::general_purpose::STANDARD.decode(s).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t_ns: u64,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub meta: Meta,
    pub topology: Topology,
    pub events: Vec<TraceEvent>,
}

/// Probabilities always carry 17 significant digits.
fn ser_prob<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
    let text = format_prob(*p);
    let raw = serde_json::value::RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn format_prob(p: f64) -> String {
    format!("{p:.16e}")
}

/// Receives event payloads; the receiver stamps time and sequence.
pub trait EventSink {
    fn emit(&mut self, kind: EventKind);
}

impl EventSink for Vec<EventKind> {
    fn emit(&mut self, kind: EventKind) {
        self.push(kind);
    }
}

/// Drops everything.
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _kind: EventKind) {}
}

/// Time-stamping event log owned by a simulation.
#[derive(Debug, Clone, Default)]
pub struct TraceRecorder {
    events: Vec<TraceEvent>,
    next_seq: u64,
    enabled: bool,
    counts: BTreeMap<&'static str, u64>,
}

impl TraceRecorder {
    pub fn new(enabled: bool) -> Self {
        TraceRecorder {
            enabled,
            ..Default::default()
        }
    }

    pub fn record(&mut self, now: SimTime, kind: EventKind) {
        *self.counts.entry(kind.type_name()).or_default() += 1;
        if self.enabled {
            self.events.push(TraceEvent {
                t_ns: now.as_ns(),
                seq: self.next_seq,
                kind,
            });
        }
        self.next_seq += 1;
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }

    /// Number of events emitted per type, counted even when recording is disabled.
    pub fn counts(&self) -> &BTreeMap<&'static str, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.next_seq
    }

    pub fn stamped(&mut self, now: SimTime) -> Stamped<'_> {
        Stamped { rec: self, now }
    }
}

/// An [`EventSink`] that stamps every event with a fixed time.
pub struct Stamped<'a> {
    rec: &'a mut TraceRecorder,
    now: SimTime,
}

impl EventSink for Stamped<'_> {
    fn emit(&mut self, kind: EventKind) {
        self.rec.record(self.now, kind);
    }
}

impl TraceDoc {
    pub fn new(meta: Meta, topology: Topology) -> Self {
        TraceDoc {
            meta,
            topology,
            events: Vec::new(),
        }
    }

    /// Appends one trial's events after a `trial_boundary` marker. Times are
    /// shifted to start at the end of the previous trial, qubit ids by
    /// `qubit_offset`, and sequence numbers continue the document's count.
    pub fn append_trial(&mut self, trial: u64, events: Vec<TraceEvent>, qubit_offset: u64) {
        let t0 = self.events.last().map_or(0, |e| e.t_ns);
        let seq0 = self.events.last().map_or(0, |e| e.seq + 1);
        self.events.push(TraceEvent {
            t_ns: t0,
            seq: seq0,
            kind: EventKind::TrialBoundary { trial },
        });
        for (seq, mut ev) in (seq0 + 1..).zip(events) {
            ev.kind.shift_qubits(qubit_offset);
            self.events.push(TraceEvent {
                t_ns: t0 + ev.t_ns,
                seq,
                kind: ev.kind,
            });
        }
    }

    pub fn write_json<W: Write>(&self, mut sink: W) -> io::Result<()> {
        serde_json::to_writer(&mut sink, self).map_err(io::Error::other)?;
        sink.write_all(b"\n")?;
        sink.flush()
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_json(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<TraceDoc> {
        serde_json::from_slice(bytes)
    }
}

/// One schema or consistency problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn payload_fields(ty: &str) -> Option<&'static [&'static str]> {
    Some(match ty {
        "qubit_create" => &["node", "qubit"],
        "gate" => &["name", "qubits"],
        "measure" => &["qubit", "basis", "outcome"],
        "noise" => &["qubit", "kind", "p", "effect"],
        "qsend" | "qrecv" | "qlost" => &["qubit", "src", "dst"],
        "csend" | "crecv" => &["src", "dst", "payload_b64", "tag"],
        "egroup" => &["groups"],
        "trial_boundary" => &["trial"],
        "note" => &["text"],
        _ => return None,
    })
}

/// Checks schema, ordering, referential integrity and payload shapes.
/// An empty result means the document is valid.
pub fn validate(bytes: &[u8]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |msg: String| out.push(Violation(msg));
    let doc: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(e) => {
            bad(format!("not valid JSON: {e}"));
            return out;
        }
    };
    let Some(obj) = doc.as_object() else {
        bad("document is not an object".into());
        return out;
    };
    for key in obj.keys() {
        if !["meta", "topology", "events"].contains(&key.as_str()) {
            bad(format!("unexpected top-level key `{key}`"));
        }
    }

    match obj.get("meta") {
        Some(meta) => {
            if meta["format_version"].as_str() != Some(FORMAT_VERSION) {
                bad(format!("meta.format_version must be \"{FORMAT_VERSION}\""));
            }
            if !matches!(meta["backend"].as_str(), Some("ket" | "dm" | "stab")) {
                bad("meta.backend must be one of ket, dm, stab".into());
            }
            if !meta["seed"].is_u64() {
                bad("meta.seed must be an unsigned integer".into());
            }
            if !meta["scenario"].is_string() {
                bad("meta.scenario must be a string".into());
            }
            for k in ["loss", "depolarizing", "dephasing"] {
                if !meta["noise_parameterization"][k].is_string() {
                    bad(format!("meta.noise_parameterization.{k} must be a string"));
                }
            }
        }
        None => bad("missing meta".into()),
    }

    let mut nodes = BTreeSet::new();
    let mut qlinks = BTreeSet::new();
    let mut clinks = BTreeSet::new();
    let topo = &doc["topology"];
    if !topo.is_object() {
        bad("missing topology".into());
    }
    for n in topo["nodes"].as_array().into_iter().flatten() {
        match (n["id"].as_u64(), n["label"].is_string()) {
            (Some(id), true) => {
                if !nodes.insert(id) {
                    bad(format!("duplicate node id {id}"));
                }
            }
            _ => bad(format!("malformed node entry {n}")),
        }
    }
    let link_ends = |l: &Value, what: &str, set: &mut BTreeSet<(u64, u64)>, out: &mut Vec<Violation>| {
        match (l["a"].as_u64(), l["b"].as_u64(), l["delay_ns"].as_u64()) {
            (Some(a), Some(b), Some(_)) => {
                for end in [a, b] {
                    if !nodes.contains(&end) {
                        out.push(Violation(format!("{what} references unknown node {end}")));
                    }
                }
                set.insert((a.min(b), a.max(b)));
            }
            _ => out.push(Violation(format!("malformed {what} entry {l}"))),
        }
    };
    let mut link_issues = Vec::new();
    for l in topo["qlinks"].as_array().into_iter().flatten() {
        link_ends(l, "qlink", &mut qlinks, &mut link_issues);
        for m in l["qmaps"].as_array().into_iter().flatten() {
            let kind_ok = matches!(m["kind"].as_str(), Some("loss" | "depolarizing" | "dephasing"));
            let p_ok = m["p"].as_f64().is_some_and(|p| (0.0..=1.0).contains(&p));
            if !kind_ok || !p_ok {
                link_issues.push(Violation(format!("malformed qmap {m}")));
            }
        }
    }
    for l in topo["clinks"].as_array().into_iter().flatten() {
        link_ends(l, "clink", &mut clinks, &mut link_issues);
    }
    out.extend(link_issues);

    let Some(events) = doc["events"].as_array() else {
        out.push(Violation("missing events array".into()));
        return out;
    };
    let mut bad = |msg: String| out.push(Violation(msg));
    let mut prev: Option<(u64, u64)> = None;
    let mut created = BTreeSet::new();
    for (idx, ev) in events.iter().enumerate() {
        let seq = ev["seq"].as_u64();
        let label = match seq {
            Some(s) => format!("event seq {s}"),
            None => format!("event #{idx}"),
        };
        let (Some(t), Some(seq)) = (ev["t_ns"].as_u64(), seq) else {
            bad(format!("{label}: t_ns and seq must be unsigned integers"));
            continue;
        };
        if let Some((pt, ps)) = prev {
            if t < pt {
                bad(format!("{label}: out of time order ({t} < {pt})"));
            }
            if seq <= ps {
                bad(format!("{label}: seq not strictly increasing"));
            }
        }
        prev = Some((t, seq));
        let Some(ty) = ev["type"].as_str() else {
            bad(format!("{label}: missing type"));
            continue;
        };
        let Some(fields) = payload_fields(ty) else {
            bad(format!("{label}: unknown type `{ty}`"));
            continue;
        };
        let obj = ev.as_object().expect("indexed above");
        for key in obj.keys() {
            let k = key.as_str();
            if !["t_ns", "seq", "type"].contains(&k) && !fields.contains(&k) {
                bad(format!("{label}: unexpected field `{k}` for {ty}"));
            }
        }
        for f in fields {
            if !obj.contains_key(*f) {
                bad(format!("{label}: {ty} lacks `{f}`"));
            }
        }
        let node_ok = |v: &Value| v.as_u64().is_some_and(|id| nodes.contains(&id));
        let qubit_known = |v: &Value, created: &BTreeSet<u64>| v.as_u64().is_some_and(|q| created.contains(&q));
        match ty {
            "qubit_create" => {
                if !node_ok(&ev["node"]) {
                    bad(format!("{label}: unknown node {}", ev["node"]));
                }
                match ev["qubit"].as_u64() {
                    Some(q) if created.insert(q) => {}
                    _ => bad(format!("{label}: qubit id missing or reused")),
                }
            }
            "gate" => {
                let name_ok = ev["name"].as_str().is_some_and(|n| crate::qstate::Gate::from_name(n).is_some());
                if !name_ok {
                    bad(format!("{label}: unknown gate {}", ev["name"]));
                }
                let qs = ev["qubits"].as_array();
                if qs.is_none_or(|qs| qs.is_empty() || qs.iter().any(|q| !qubit_known(q, &created))) {
                    bad(format!("{label}: gate references unknown qubits"));
                }
            }
            "measure" => {
                if !qubit_known(&ev["qubit"], &created) {
                    bad(format!("{label}: unknown qubit"));
                }
                if !matches!(ev["basis"].as_str(), Some("Z" | "X")) {
                    bad(format!("{label}: basis must be Z or X"));
                }
                if !matches!(ev["outcome"].as_u64(), Some(0 | 1)) {
                    bad(format!("{label}: outcome must be 0 or 1"));
                }
            }
            "noise" => {
                if !qubit_known(&ev["qubit"], &created) {
                    bad(format!("{label}: unknown qubit"));
                }
                if !matches!(ev["kind"].as_str(), Some("depolarizing" | "dephasing")) {
                    bad(format!("{label}: unknown noise kind"));
                }
                if !ev["p"].as_f64().is_some_and(|p| (0.0..=1.0).contains(&p)) {
                    bad(format!("{label}: p must be in [0, 1]"));
                }
                if !matches!(ev["effect"].as_str(), Some("I" | "X" | "Y" | "Z" | "exact")) {
                    bad(format!("{label}: effect must be a Pauli letter or \"exact\""));
                }
            }
            "qsend" | "qrecv" | "qlost" | "csend" | "crecv" => {
                let (src, dst) = (ev["src"].as_u64(), ev["dst"].as_u64());
                if !node_ok(&ev["src"]) || !node_ok(&ev["dst"]) {
                    bad(format!("{label}: unknown endpoint node"));
                }
                let links = if ty.starts_with('q') { &qlinks } else { &clinks };
                if let (Some(a), Some(b)) = (src, dst) {
                    if !links.contains(&(a.min(b), a.max(b))) {
                        bad(format!("{label}: no link between {a} and {b}"));
                    }
                }
                if ty.starts_with('q') && !qubit_known(&ev["qubit"], &created) {
                    bad(format!("{label}: unknown qubit"));
                }
                if ty.starts_with('c') {
                    if !ev["payload_b64"].as_str().is_some_and(|s| decode_payload(s).is_some()) {
                        bad(format!("{label}: payload_b64 is not base64"));
                    }
                    if !ev["tag"].is_string() {
                        bad(format!("{label}: tag must be a string"));
                    }
                }
            }
            "egroup" => {
                let ok = ev["groups"].as_array().is_some_and(|gs| {
                    gs.iter().all(|g| {
                        g.as_array()
                            .is_some_and(|g| g.iter().all(|q| qubit_known(q, &created)))
                    })
                });
                if !ok {
                    bad(format!("{label}: groups must list known qubit ids"));
                }
            }
            "trial_boundary" => {
                if !ev["trial"].is_u64() {
                    bad(format!("{label}: trial must be an integer"));
                }
            }
            "note" => {
                if !ev["text"].is_string() {
                    bad(format!("{label}: text must be a string"));
                }
            }
            _ => unreachable!(),
        }
    }
    out
}

/// Partition of live qubits implied by a trace: the last `egroup` groups plus
/// singletons for every other created, unconsumed qubit.
pub fn replay_partition(events: &[TraceEvent]) -> Vec<Vec<u64>> {
    let mut live = BTreeSet::new();
    let mut groups: Vec<Vec<u64>> = Vec::new();
    for ev in events {
        match &ev.kind {
            EventKind::QubitCreate { qubit, .. } => {
                live.insert(*qubit);
            }
            EventKind::Measure { qubit, .. } | EventKind::Qlost { qubit, .. } => {
                live.remove(qubit);
            }
            EventKind::Egroup { groups: g } => groups = g.clone(),
            EventKind::TrialBoundary { .. } => {
                live.clear();
                groups.clear();
            }
            _ => {}
        }
    }
    let grouped: BTreeSet<u64> = groups.iter().flatten().copied().collect();
    let mut out = groups;
    out.extend(live.difference(&grouped).map(|&q| vec![q]));
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> TraceDoc {
        let meta = Meta {
            format_version: FORMAT_VERSION.into(),
            backend: "ket".into(),
            seed: 3,
            scenario: "unit".into(),
            noise_parameterization: NoiseParameterization::default(),
            config: BTreeMap::new(),
        };
        let topology = Topology {
            nodes: vec![
                NodeEntry { id: 0, label: "A".into() },
                NodeEntry { id: 1, label: "B".into() },
            ],
            qlinks: vec![QLinkEntry {
                a: 0,
                b: 1,
                delay_ns: 10,
                qmaps: vec![QMapEntry { kind: "depolarizing".into(), p: 0.2 }],
            }],
            clinks: vec![CLinkEntry { a: 0, b: 1, delay_ns: 1_000_000 }],
        };
        let mut d = TraceDoc::new(meta, topology);
        let mut rec = TraceRecorder::new(true);
        rec.record(SimTime::ZERO, EventKind::QubitCreate { node: 0, qubit: 0 });
        rec.record(SimTime::ZERO, EventKind::Gate { name: "H".into(), qubits: vec![0] });
        rec.record(SimTime::ZERO, EventKind::Qsend { qubit: 0, src: 0, dst: 1 });
        rec.record(
            SimTime::from_ns(10),
            EventKind::Noise { qubit: 0, kind: "depolarizing".into(), p: 0.2, effect: "I".into() },
        );
        rec.record(SimTime::from_ns(10), EventKind::Qrecv { qubit: 0, src: 0, dst: 1 });
        rec.record(
            SimTime::from_ns(10),
            EventKind::Csend { src: 1, dst: 0, payload_b64: encode_payload(&[1]), tag: "ack".into() },
        );
        d.events = rec.into_events();
        d
    }

    #[test]
    fn key_order_and_number_format() {
        let text = String::from_utf8(doc().to_json_bytes()).unwrap();
        assert!(text.starts_with(r#"{"meta":{"format_version":"1","backend":"ket","seed":3,"scenario":"unit","noise_parameterization":{"loss":"#));
        assert!(text.contains(r#"{"kind":"depolarizing","p":2.0000000000000001e-1}"#));
        assert!(text.contains(
            r#"{"t_ns":10,"seq":3,"type":"noise","qubit":0,"kind":"depolarizing","p":2.0000000000000001e-1,"effect":"I"}"#
        ));
        assert!(text.contains(r#"{"t_ns":0,"seq":0,"type":"qubit_create","node":0,"qubit":0}"#));
    }

    #[test]
    fn round_trip() {
        let d = doc();
        let back = TraceDoc::from_json(&d.to_json_bytes()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn valid_doc_has_no_violations() {
        assert_eq!(validate(&doc().to_json_bytes()), vec![]);
        let empty = TraceDoc { events: vec![], ..doc() };
        assert_eq!(validate(&empty.to_json_bytes()), vec![]);
    }

    #[test]
    fn unknown_node_is_reported_with_seq() {
        let mut d = doc();
        d.events.push(TraceEvent {
            t_ns: 20,
            seq: 99,
            kind: EventKind::QubitCreate { node: 99, qubit: 7 },
        });
        let v = validate(&d.to_json_bytes());
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].0.contains("seq 99"));
    }

    #[test]
    fn out_of_order_is_reported() {
        let mut d = doc();
        d.events[4].t_ns = 1;
        let v = validate(&d.to_json_bytes());
        assert!(v.iter().any(|x| x.0.contains("out of time order")), "{v:?}");
    }

    #[test]
    fn extra_and_unknown_fields() {
        let text = String::from_utf8(doc().to_json_bytes()).unwrap();
        let tampered = text.replace(r#""type":"qubit_create","node":0"#, r#""type":"qubit_create","color":"red","node":0"#);
        assert!(validate(tampered.as_bytes()).iter().any(|v| v.0.contains("unexpected field")));
        let tampered = text.replace(r#""type":"qsend""#, r#""type":"teleport""#);
        assert!(validate(tampered.as_bytes()).iter().any(|v| v.0.contains("unknown type")));
        assert!(!validate(b"{not json").is_empty());
    }

    #[test]
    fn append_trial_offsets() {
        let base = doc();
        let mut d = TraceDoc { events: vec![], ..base.clone() };
        d.append_trial(0, base.events.clone(), 0);
        d.append_trial(1, base.events.clone(), 1);
        assert_eq!(d.events.len(), 2 * (base.events.len() + 1));
        let second = &d.events[base.events.len() + 1];
        assert_eq!(second.kind, EventKind::TrialBoundary { trial: 1 });
        assert_eq!(second.t_ns, 10);
        assert_eq!(validate(&d.to_json_bytes()), vec![]);
        let last = d.events.last().unwrap();
        assert_eq!(last.t_ns, 20);
        assert!(d.events.iter().any(|e| e.kind == EventKind::QubitCreate { node: 0, qubit: 1 }));
    }
}
