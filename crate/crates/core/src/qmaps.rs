//! Noise maps carried by quantum channels and applied when a qubit arrives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{QuantumStateRegistry, QubitHandle, RegistryError};
use crate::trace::{EventKind, EventSink, QMapEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QMapKind {
    Loss,
    Depolarizing,
    Dephasing,
}

impl QMapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QMapKind::Loss => "loss",
            QMapKind::Depolarizing => "depolarizing",
            QMapKind::Dephasing => "dephasing",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QMapError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("unknown noise kind {0:?} (expected loss, depolarizing or dephasing)")]
    UnknownKind(String),
    #[error("malformed noise spec {0:?}, expected kind:p")]
    Malformed(String),
}

/// A noise map with a validated probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMap {
    kind: QMapKind,
    p: f64,
}

impl QMap {
    pub fn new(kind: QMapKind, p: f64) -> Result<QMap, QMapError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QMapError::Probability(p));
        }
        Ok(QMap { kind, p })
    }

    pub fn loss(p: f64) -> Result<QMap, QMapError> {
        QMap::new(QMapKind::Loss, p)
    }

    pub fn depolarizing(p: f64) -> Result<QMap, QMapError> {
        QMap::new(QMapKind::Depolarizing, p)
    }

    pub fn dephasing(p: f64) -> Result<QMap, QMapError> {
        QMap::new(QMapKind::Dephasing, p)
    }

    pub fn kind(&self) -> QMapKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Pauli probabilities in I, X, Y, Z order; `None` for loss.
    pub fn pauli_probs(&self) -> Option<[f64; 4]> {
        let p = self.p;
        match self.kind {
            QMapKind::Loss => None,
            QMapKind::Depolarizing => {
                let q = p / 4.0;
                Some([1.0 - 3.0 * q, q, q, q])
            }
            QMapKind::Dephasing => Some([1.0 - p, 0.0, 0.0, p]),
        }
    }

    pub fn entry(&self) -> QMapEntry {
        QMapEntry {
            kind: self.kind.as_str().into(),
            p: self.p,
        }
    }
}

impl fmt::Display for QMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.p)
    }
}

/// Parses `kind:p`, e.g. `depolarizing:0.2`.
impl FromStr for QMap {
    type Err = QMapError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, p) = s.split_once(':').ok_or_else(|| QMapError::Malformed(s.into()))?;
        let kind = match kind.trim().to_ascii_lowercase().as_str() {
            "loss" => QMapKind::Loss,
            "depolarizing" | "depolarising" | "depol" => QMapKind::Depolarizing,
            "dephasing" | "dephase" => QMapKind::Dephasing,
            other => return Err(QMapError::UnknownKind(other.into())),
        };
        let p: f64 = p.trim().parse().map_err(|_| QMapError::Malformed(s.into()))?;
        QMap::new(kind, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrival {
    Delivered,
    Lost,
}

/// Applies `maps` in order to an arriving qubit. Loss draws one variate and,
/// if it fires, one more for the unrecorded projection of the lost qubit, then
/// stops. Pauli maps draw one variate each and emit a `noise` event.
pub fn apply_on_arrival(
    maps: &[QMap],
    q: QubitHandle,
    registry: &mut QuantumStateRegistry,
    rand: &mut dyn FnMut() -> f64,
    sink: &mut dyn EventSink,
) -> Result<Arrival, RegistryError> {
    for map in maps {
        match map.pauli_probs() {
            None => {
                if rand() < map.p {
                    registry.lose(q, rand(), sink)?;
                    return Ok(Arrival::Lost);
                }
            }
            Some(probs) => {
                let effect = registry.apply_pauli_channel(q, probs, rand())?;
                sink.emit(EventKind::Noise {
                    qubit: q.0,
                    kind: map.kind.as_str().into(),
                    p: map.p,
                    effect: effect.map_or_else(|| "exact".to_string(), |l| l.as_char().to_string()),
                });
            }
        }
    }
    Ok(Arrival::Delivered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::NodeId;
    use crate::qstate::{BackendKind, Caps, Gate};
    use crate::trace::NullSink;

    #[test]
    fn rejects_bad_probability() {
        assert_eq!(QMap::loss(1.2), Err(QMapError::Probability(1.2)));
        assert!(QMap::dephasing(-0.1).is_err());
        assert!(QMap::depolarizing(f64::NAN).is_err());
    }

    #[test]
    fn parses_cli_form() {
        assert_eq!("depolarizing:0.2".parse::<QMap>().unwrap(), QMap::depolarizing(0.2).unwrap());
        assert_eq!("loss:1".parse::<QMap>().unwrap(), QMap::loss(1.0).unwrap());
        assert!(matches!("amp:0.1".parse::<QMap>(), Err(QMapError::UnknownKind(_))));
        assert!(matches!("loss".parse::<QMap>(), Err(QMapError::Malformed(_))));
        assert!(matches!("loss:x".parse::<QMap>(), Err(QMapError::Malformed(_))));
    }

    #[test]
    fn probabilities_sum_to_one() {
        for p in [0.0, 0.2, 0.5, 1.0] {
            for m in [QMap::depolarizing(p).unwrap(), QMap::dephasing(p).unwrap()] {
                let s: f64 = m.pauli_probs().unwrap().iter().sum();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn loss_short_circuits() {
        let mut reg = QuantumStateRegistry::new(Some(BackendKind::Ket), Caps::default());
        let q = reg.alloc(NodeId(0), &mut NullSink).unwrap();
        let maps = [QMap::loss(1.0).unwrap(), QMap::dephasing(0.5).unwrap()];
        let mut draws = 0;
        let mut ev: Vec<EventKind> = Vec::new();
        let out = apply_on_arrival(&maps, q, &mut reg, &mut || {
            draws += 1;
            0.5
        }, &mut ev)
        .unwrap();
        assert_eq!(out, Arrival::Lost);
        assert_eq!(draws, 2);
        assert!(ev.iter().all(|e| e.type_name() != "noise"));
    }

    #[test]
    fn zero_probability_maps_are_identities() {
        for kind in BackendKind::ALL {
            let mut reg = QuantumStateRegistry::new(Some(kind), Caps::default());
            let a = reg.alloc(NodeId(0), &mut NullSink).unwrap();
            let b = reg.alloc(NodeId(0), &mut NullSink).unwrap();
            reg.apply(Gate::H, &[a], &mut NullSink).unwrap();
            reg.apply(Gate::Cnot, &[a, b], &mut NullSink).unwrap();
            let before = reg.clone();
            let maps = [QMap::loss(0.0).unwrap(), QMap::depolarizing(0.0).unwrap(), QMap::dephasing(0.0).unwrap()];
            for r in [0.0, 0.999_999] {
                let out = apply_on_arrival(&maps, b, &mut reg, &mut || r, &mut NullSink).unwrap();
                assert_eq!(out, Arrival::Delivered);
            }
            assert_eq!(format!("{before:?}"), format!("{reg:?}"), "{kind}");
        }
    }

    #[test]
    fn noise_event_records_letter_or_exact() {
        for (kind, want) in [(BackendKind::Ket, "Z"), (BackendKind::Dm, "exact")] {
            let mut reg = QuantumStateRegistry::new(Some(kind), Caps::default());
            let q = reg.alloc(NodeId(0), &mut NullSink).unwrap();
            let mut ev: Vec<EventKind> = Vec::new();
            apply_on_arrival(&[QMap::dephasing(1.0).unwrap()], q, &mut reg, &mut || 0.3, &mut ev).unwrap();
            let EventKind::Noise { effect, kind: k, .. } = &ev[0] else { panic!() };
            assert_eq!(effect, want);
            assert_eq!(k, "dephasing");
        }
    }
}
