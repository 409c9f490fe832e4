//! n-qubit linear cluster state distributed over a star: qubit 0 stays at the
//! source, qubit i goes to node i.

use super::{build_star, ScenarioError, ScenarioSpec, TrialRecord};
use crate::netmodel::{NetController, NetError};
use crate::qstate::{Gate, Pauli};
use crate::registry::{QubitHandle, RegistryError};
use crate::sim::SimTime;

/// K_i = Z_{i-1} X_i Z_{i+1} for every vertex of the path; NaN where a
/// qubit involved was lost.
pub fn path_stabilizers(net: &NetController, q: &[QubitHandle]) -> Result<Vec<f64>, NetError> {
    (0..q.len())
        .map(|i| {
            let mut ops = vec![(q[i], Pauli::X)];
            if i > 0 {
                ops.push((q[i - 1], Pauli::Z));
            }
            if i + 1 < q.len() {
                ops.push((q[i + 1], Pauli::Z));
            }
            match net.expect(&ops) {
                Err(NetError::Registry(RegistryError::NotLive { .. })) => Ok(f64::NAN),
                other => other,
            }
        })
        .collect()
}

pub(super) fn trial(spec: &ScenarioSpec, net: &mut NetController) -> Result<TrialRecord, ScenarioError> {
    let n = spec.nodes.expect("validated");
    let labels: Vec<String> = (1..n).map(|i| format!("n{i}")).collect();
    let leaf_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let ids = build_star(spec, net, "Source", &leaf_refs)?;
    let src = ids[0];

    let qubits = std::rc::Rc::new(std::cell::RefCell::new(Vec::new()));
    let qs = qubits.clone();
    net.schedule(SimTime::ZERO, move |net| {
        let q: Vec<QubitHandle> = (0..n).map(|_| net.alloc(src)).collect::<Result<_, _>>()?;
        for &x in &q {
            net.apply_gate(src, Gate::H, &[x])?;
        }
        for k in 1..n {
            net.apply_gate(src, Gate::Cz, &[q[k - 1], q[k]])?;
        }
        for (k, &x) in q.iter().enumerate().skip(1) {
            net.send_qubit(src, x, ids[k])?;
        }
        *qs.borrow_mut() = q;
        Ok(())
    })?;
    net.run()?;
    let stabilizers = path_stabilizers(net, &qubits.borrow())?;
    Ok(TrialRecord::ClusterChain { n, stabilizers })
}
