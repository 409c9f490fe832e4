//! Demonstration scenarios as parameterized, trial-based programs.
//!
//! Every trial runs on a fresh [`NetController`] whose RNG is stream `trial` of
//! the scenario seed, so trials are independent and the batch can run them in
//! any order. Traces are merged afterwards in trial order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::batch::{map_trials, Execution};
use crate::netmodel::{NetController, NetError, NodeId};
use crate::qmaps::QMap;
use crate::qstate::{BackendKind, Caps, QStateError};
use crate::registry::Basis;
use crate::sim::{RunError, SimTime};
use crate::trace::{Meta, NoiseParameterization, Topology, TraceDoc, TraceEvent, FORMAT_VERSION};

mod bell;
mod chain;
pub mod clifford;
mod cluster;
pub mod cluster_corrections;
mod ghz;
mod teleport;

pub use bell::{PairOutcome, BELL_PAIRS};
pub use cluster::{CLIENTS, CORRECTION_TAG};
pub use ghz::ACK_TAG;
pub use teleport::{CORRECTIONS_TAG, SEND_AT};

/// Quantum link delay used unless overridden.
pub const DEFAULT_QDELAY: SimTime = SimTime::from_ns(10);
/// Teleportation default: the half arrives at 4 ms, so with a 1 ms classical
/// link the corrections land at 5 ms.
pub const TELEPORT_QDELAY: SimTime = SimTime::from_ms(3);
pub const DEFAULT_CDELAY: SimTime = SimTime::from_ms(1);
pub const DEFAULT_TIMEOUT_MULT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    BellAllToAll,
    Teleportation,
    Ghz4,
    Cluster5,
    ClusterChain,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::BellAllToAll,
        Scenario::Teleportation,
        Scenario::Ghz4,
        Scenario::Cluster5,
        Scenario::ClusterChain,
    ];

    /// The four scenarios shipped as demo traces.
    pub const DEMOS: [Scenario; 4] = [
        Scenario::BellAllToAll,
        Scenario::Teleportation,
        Scenario::Ghz4,
        Scenario::Cluster5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::BellAllToAll => "bell_all_to_all",
            Scenario::Teleportation => "teleportation",
            Scenario::Ghz4 => "ghz4",
            Scenario::Cluster5 => "cluster5",
            Scenario::ClusterChain => "cluster_chain",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| ScenarioError::Config(format!("unknown scenario {s:?}")))
    }
}

/// Which quantum links a noise map goes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkSelector {
    All,
    Between(NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub backend: BackendKind,
    pub seed: u64,
    pub trials: u64,
    pub noise: Vec<(LinkSelector, QMap)>,
    pub qdelay: Option<SimTime>,
    pub cdelay: Option<SimTime>,
    /// Chain length for `cluster_chain`.
    pub nodes: Option<usize>,
    pub timeout_mult: u64,
    /// Basis both Bell halves are measured in.
    pub bell_basis: Basis,
    /// Replay values for the first draws of every trial.
    pub forced_draws: Vec<f64>,
    pub record_trace: bool,
    pub execution: Execution,
    pub caps: Caps,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, backend: BackendKind) -> Self {
        ScenarioSpec {
            scenario,
            backend,
            seed: 0,
            trials: 1,
            noise: Vec::new(),
            qdelay: None,
            cdelay: None,
            nodes: None,
            timeout_mult: DEFAULT_TIMEOUT_MULT,
            bell_basis: Basis::Z,
            forced_draws: Vec::new(),
            record_trace: true,
            execution: Execution::default(),
            caps: Caps::default(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn trials(mut self, n: u64) -> Self {
        self.trials = n;
        self
    }

    pub fn noise_all(mut self, map: QMap) -> Self {
        self.noise.push((LinkSelector::All, map));
        self
    }

    pub fn noise_on(mut self, a: NodeId, b: NodeId, map: QMap) -> Self {
        self.noise.push((LinkSelector::Between(a, b), map));
        self
    }

    pub fn qdelay(mut self, d: SimTime) -> Self {
        self.qdelay = Some(d);
        self
    }

    pub fn cdelay(mut self, d: SimTime) -> Self {
        self.cdelay = Some(d);
        self
    }

    pub fn nodes(mut self, n: usize) -> Self {
        self.nodes = Some(n);
        self
    }

    pub fn forced(mut self, draws: &[f64]) -> Self {
        self.forced_draws = draws.to_vec();
        self
    }

    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }

    pub fn execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self
    }

    pub fn effective_qdelay(&self) -> SimTime {
        self.qdelay.unwrap_or(match self.scenario {
            Scenario::Teleportation => TELEPORT_QDELAY,
            _ => DEFAULT_QDELAY,
        })
    }

    pub fn effective_cdelay(&self) -> SimTime {
        self.cdelay.unwrap_or(DEFAULT_CDELAY)
    }

    /// Ack timeout per spoke: `timeout_mult` round trips, at least 1 µs.
    pub fn ack_timeout(&self) -> Result<SimTime, ScenarioError> {
        let rtt = self
            .effective_qdelay()
            .checked_add(self.effective_cdelay())
            .and_then(|r| r.checked_mul(self.timeout_mult))
            .ok_or_else(|| ScenarioError::Config("ack timeout overflows".into()))?;
        Ok(rtt.max(SimTime::from_us(1)))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.trials == 0 {
            return Err(ScenarioError::Config("trials must be at least 1".into()));
        }
        if self.scenario == Scenario::ClusterChain {
            match self.nodes {
                Some(n) if n >= 2 => self.caps.check(self.backend, n)?,
                _ => return Err(ScenarioError::Config("cluster_chain needs at least 2 nodes".into())),
            }
        } else if self.nodes.is_some() {
            return Err(ScenarioError::Config(format!("--nodes applies only to cluster_chain, not {}", self.scenario)));
        }
        if self.timeout_mult == 0 {
            return Err(ScenarioError::Config("timeout multiplier must be positive".into()));
        }
        Ok(())
    }

    /// Run parameters as recorded in trace meta.
    pub fn config(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        m.insert("trials".into(), json!(self.trials));
        m.insert(
            "noise".into(),
            json!(self
                .noise
                .iter()
                .map(|(sel, q)| match sel {
                    LinkSelector::All => q.to_string(),
                    LinkSelector::Between(a, b) => format!("{q}@{}-{}", a.0, b.0),
                })
                .collect::<Vec<_>>()),
        );
        m.insert("qdelay_ns".into(), json!(self.effective_qdelay().as_ns()));
        m.insert("cdelay_ns".into(), json!(self.effective_cdelay().as_ns()));
        m.insert("timeout_mult".into(), json!(self.timeout_mult));
        if let Some(n) = self.nodes {
            m.insert("nodes".into(), json!(n));
        }
        if self.scenario == Scenario::BellAllToAll {
            m.insert("bell_basis".into(), json!(self.bell_basis.as_str()));
        }
        m
    }

    pub fn meta(&self) -> Meta {
        Meta {
            format_version: FORMAT_VERSION.into(),
            backend: self.backend.as_str().into(),
            seed: self.seed,
            scenario: self.scenario.as_str().into(),
            noise_parameterization: NoiseParameterization::default(),
            config: self.config(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario configuration: {0}")]
    Config(String),
    #[error(transparent)]
    State(#[from] QStateError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Run(#[from] RunError<NetError>),
}

/// One trial's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialRecord {
    Bell {
        pairs: Vec<PairOutcome>,
    },
    Teleportation {
        bits: Option<[u8; 2]>,
        x_outcome: Option<u8>,
        fidelity: Option<f64>,
        lost: bool,
    },
    Ghz4 {
        outcomes: Option<[u8; 4]>,
        timed_out: bool,
    },
    Cluster5 {
        m1: Option<u8>,
        m3: Option<u8>,
        /// K_A, K_B, K_C after the client corrections.
        stabilizers: Option<[f64; 3]>,
        timed_out: bool,
    },
    ClusterChain {
        n: usize,
        stabilizers: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub backend: String,
    pub seed: u64,
    pub trials: u64,
    pub stats: BTreeMap<String, f64>,
    pub event_count: u64,
    pub wall_clock_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<String>,
    pub records: Vec<TrialRecord>,
}

pub struct ScenarioRun {
    pub summary: ScenarioSummary,
    /// Present when the spec records traces.
    pub trace: Option<TraceDoc>,
}

struct TrialOutput {
    record: TrialRecord,
    events: Vec<TraceEvent>,
    topology: Topology,
    allocated: u64,
    event_count: u64,
}

fn run_trial(spec: &ScenarioSpec, trial: u64) -> Result<TrialOutput, ScenarioError> {
    let mut net = NetController::with_stream(spec.seed, trial, spec.caps);
    net.set_qstate_backend(spec.backend)?;
    if !spec.record_trace {
        net.disable_trace();
    }
    net.force_draws(spec.forced_draws.iter().copied());
    let record = match spec.scenario {
        Scenario::BellAllToAll => bell::trial(spec, &mut net),
        Scenario::Teleportation => teleport::trial(spec, &mut net),
        Scenario::Ghz4 => ghz::trial(spec, &mut net),
        Scenario::Cluster5 => cluster::trial(spec, &mut net),
        Scenario::ClusterChain => chain::trial(spec, &mut net),
    }?;
    let topology = net.topology();
    let allocated = net.registry().allocated();
    let rec = net.take_trace();
    Ok(TrialOutput {
        record,
        event_count: rec.total(),
        events: rec.into_events(),
        topology,
        allocated,
    })
}

/// Runs all trials of `spec` and assembles the summary and merged trace.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun, ScenarioError> {
    spec.validate()?;
    let start = Instant::now();
    let outputs = map_trials(spec.execution, spec.trials, |t| run_trial(spec, t))?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let event_count = outputs.iter().map(|o| o.event_count).sum();
    let trace = spec.record_trace.then(|| {
        let mut doc = TraceDoc::new(spec.meta(), outputs[0].topology.clone());
        let mut offset = 0;
        for (t, o) in outputs.iter().enumerate() {
            doc.append_trial(t as u64, o.events.clone(), offset);
            offset += o.allocated;
        }
        doc
    });
    let records: Vec<TrialRecord> = outputs.into_iter().map(|o| o.record).collect();
    Ok(ScenarioRun {
        summary: ScenarioSummary {
            scenario: spec.scenario.as_str().into(),
            backend: spec.backend.as_str().into(),
            seed: spec.seed,
            trials: spec.trials,
            stats: aggregate(&records),
            event_count,
            wall_clock_ms: wall,
            trace_path: None,
            records,
        },
        trace,
    })
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        f64::NAN
    } else {
        hits as f64 / total as f64
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Aggregate statistics, a pure function of the per-trial records.
pub fn aggregate(records: &[TrialRecord]) -> BTreeMap<String, f64> {
    let mut s = BTreeMap::new();
    let Some(first) = records.first() else { return s };
    match first {
        TrialRecord::Bell { .. } => {
            let mut all_eq = (0, 0);
            let mut lost = 0;
            for (i, (a, b)) in BELL_PAIRS.iter().enumerate() {
                let mut eq = (0, 0);
                let mut fid = Vec::new();
                for r in records {
                    let TrialRecord::Bell { pairs } = r else { continue };
                    let p = &pairs[i];
                    if let Some([x, y]) = p.outcomes {
                        eq.0 += usize::from(x == y);
                        eq.1 += 1;
                    }
                    lost += usize::from(p.lost);
                    fid.extend(p.fidelity);
                }
                all_eq.0 += eq.0;
                all_eq.1 += eq.1;
                s.insert(format!("equal_rate_{a}_{b}"), rate(eq.0, eq.1));
                if !fid.is_empty() {
                    s.insert(format!("fidelity_{a}_{b}"), mean(&fid));
                }
            }
            s.insert("equal_rate".into(), rate(all_eq.0, all_eq.1));
            s.insert("lost".into(), lost as f64);
        }
        TrialRecord::Teleportation { .. } => {
            let (mut zero, mut done, mut lost) = (0, 0, 0);
            let mut fid = Vec::new();
            let mut branches = [0usize; 4];
            for r in records {
                let TrialRecord::Teleportation {
                    bits,
                    x_outcome,
                    fidelity,
                    lost: l,
                } = r
                else {
                    continue;
                };
                if let Some(x) = x_outcome {
                    done += 1;
                    zero += usize::from(*x == 0);
                }
                if let Some([b0, b1]) = bits {
                    branches[usize::from(2 * b0 + b1)] += 1;
                }
                fid.extend(*fidelity);
                lost += usize::from(*l);
            }
            s.insert("x0_rate".into(), rate(zero, done));
            s.insert("lost".into(), lost as f64);
            if !fid.is_empty() {
                s.insert("mean_fidelity".into(), mean(&fid));
            }
            for (i, n) in branches.iter().enumerate() {
                s.insert(format!("branch_{}{}", i >> 1, i & 1), rate(*n, records.len()));
            }
        }
        TrialRecord::Ghz4 { .. } => {
            let (mut eq, mut zeros, mut done, mut timeouts) = (0, 0, 0, 0);
            for r in records {
                let TrialRecord::Ghz4 { outcomes, timed_out } = r else { continue };
                timeouts += usize::from(*timed_out);
                if let Some(o) = outcomes {
                    done += 1;
                    eq += usize::from(o.iter().all(|&b| b == o[0]));
                    zeros += usize::from(o.iter().all(|&b| b == 0));
                }
            }
            s.insert("all_equal_rate".into(), rate(eq, done));
            s.insert("all_zero_rate".into(), rate(zeros, done));
            s.insert("completed".into(), done as f64);
            s.insert("timeouts".into(), timeouts as f64);
        }
        TrialRecord::Cluster5 { .. } => {
            let (mut ok, mut done, mut timeouts) = (0, 0, 0);
            for r in records {
                let TrialRecord::Cluster5 {
                    stabilizers, timed_out, ..
                } = r
                else {
                    continue;
                };
                timeouts += usize::from(*timed_out);
                if let Some(k) = stabilizers {
                    done += 1;
                    ok += usize::from(k.iter().all(|&v| (v - 1.0).abs() < 1e-9));
                }
            }
            s.insert("verified_rate".into(), rate(ok, done));
            s.insert("completed".into(), done as f64);
            s.insert("timeouts".into(), timeouts as f64);
        }
        TrialRecord::ClusterChain { n, .. } => {
            let verified: usize = records
                .iter()
                .map(|r| match r {
                    TrialRecord::ClusterChain { stabilizers, .. } => {
                        stabilizers.iter().filter(|&&v| (v - 1.0).abs() < 1e-9).count()
                    }
                    _ => 0,
                })
                .sum();
            s.insert("nodes".into(), *n as f64);
            s.insert("stabilizers_checked".into(), (n * records.len()) as f64);
            s.insert("stabilizers_verified".into(), verified as f64);
        }
    }
    s
}

/// Installs a star of quantum and classical spokes from `center` and applies
/// the spec's delays and noise.
fn build_star(
    spec: &ScenarioSpec,
    net: &mut NetController,
    center: &str,
    leaves: &[&str],
) -> Result<Vec<NodeId>, ScenarioError> {
    let c = net.create_node(Some(center))?;
    let mut ids = vec![c];
    for l in leaves {
        let id = net.create_node(Some(l))?;
        net.install_quantum_link(c, id)?;
        net.install_classical_link(c, id)?;
        net.set_qlink_delay(c, id, spec.effective_qdelay())?;
        net.set_clink_delay(c, id, spec.effective_cdelay())?;
        ids.push(id);
    }
    attach_noise(spec, net)?;
    Ok(ids)
}

fn attach_noise(spec: &ScenarioSpec, net: &mut NetController) -> Result<(), ScenarioError> {
    for &(sel, map) in &spec.noise {
        match sel {
            LinkSelector::All => net.attach_qmap_all(map)?,
            LinkSelector::Between(a, b) => net.attach_qmap(a, b, map)?,
        }
    }
    Ok(())
}

/// Fixed seeds of the shipped demo traces.
pub fn demo_spec(scenario: Scenario) -> ScenarioSpec {
    let (backend, seed) = match scenario {
        Scenario::BellAllToAll => (BackendKind::Ket, 1),
        Scenario::Teleportation => (BackendKind::Ket, 2),
        Scenario::Ghz4 => (BackendKind::Ket, 3),
        Scenario::Cluster5 => (BackendKind::Stab, 4),
        Scenario::ClusterChain => (BackendKind::Stab, 5),
    };
    let spec = ScenarioSpec::new(scenario, backend).seed(seed).trials(1);
    if scenario == Scenario::ClusterChain {
        spec.nodes(10)
    } else {
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
        assert!("bogus".parse::<Scenario>().is_err());
    }

    #[test]
    fn timeout_floor() {
        let spec = ScenarioSpec::new(Scenario::Ghz4, BackendKind::Ket)
            .qdelay(SimTime::ZERO)
            .cdelay(SimTime::ZERO);
        assert_eq!(spec.ack_timeout().unwrap(), SimTime::from_us(1));
        let spec = ScenarioSpec::new(Scenario::Ghz4, BackendKind::Ket);
        assert_eq!(spec.ack_timeout().unwrap(), SimTime::from_ns(10 * 1_000_010));
    }

    #[test]
    fn validation() {
        let s = ScenarioSpec::new(Scenario::Ghz4, BackendKind::Ket).trials(0);
        assert!(matches!(s.validate(), Err(ScenarioError::Config(_))));
        let s = ScenarioSpec::new(Scenario::ClusterChain, BackendKind::Ket).nodes(100);
        assert!(matches!(s.validate(), Err(ScenarioError::State(QStateError::Capacity { .. }))));
        let s = ScenarioSpec::new(Scenario::Ghz4, BackendKind::Ket).nodes(3);
        assert!(s.validate().is_err());
    }
}
