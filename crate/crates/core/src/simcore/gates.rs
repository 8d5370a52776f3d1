//! Gate-label grammar and ideal gate sets.
//!
//! Built-in labels:
//!
//! | label        | gate                                         |
//! |--------------|----------------------------------------------|
//! | `I`          | identity on the register                     |
//! | `X:q` … `Sdg:q` | single-qubit X, Y, Z, H, S, S† on qubit q |
//! | `CNOT:c,t`   | controlled-NOT                               |
//! | `CZ:a,b`     | controlled-Z                                 |
//! | `C{n}:{idx}` | element `idx` of the enumerated n-qubit Clifford group (n = register size) |
//!
//! Any other label must be supplied as an explicit unitary.

use std::collections::BTreeMap;

use crate::error::{QcvvError, Result};
use crate::linalg::{self, CMat};
use crate::qmodel::{GateSet, QuantumChannel};
use crate::rb::clifford::{self, CliffordGroup};

fn s_gate() -> CMat {
    CMat::from_diagonal(&linalg::CVec::from_vec(vec![linalg::ONE, linalg::I]))
}

fn parse_qubits(args: &str, n_qubits: usize, label: &str) -> Result<Vec<usize>> {
    let qs = args
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| QcvvError::validation(format!("bad qubit list in label `{label}`")))?;
    if qs.iter().any(|&q| q >= n_qubits) {
        return Err(QcvvError::validation(format!(
            "label `{label}` addresses a qubit outside a {n_qubits}-qubit register"
        )));
    }
    Ok(qs)
}

/// Unitary of a built-in label, `Ok(None)` for labels outside the grammar.
pub fn builtin_unitary(label: &str, n_qubits: usize) -> Result<Option<CMat>> {
    let d = 1usize << n_qubits;
    if label == "I" {
        return Ok(Some(linalg::identity(d)));
    }
    if let Some((n, idx)) = clifford::parse_clifford_label(label) {
        if n != n_qubits {
            return Err(QcvvError::validation(format!(
                "Clifford label `{label}` on a {n_qubits}-qubit register"
            )));
        }
        let group = CliffordGroup::get(n)?;
        if idx >= group.order() {
            return Err(QcvvError::validation(format!(
                "Clifford index {idx} ≥ group order {}",
                group.order()
            )));
        }
        return Ok(Some(group.unitary(idx).clone()));
    }
    let Some((name, args)) = label.split_once(':') else {
        return Ok(None);
    };
    let one = |u: CMat| -> Result<Option<CMat>> {
        let qs = parse_qubits(args, n_qubits, label)?;
        if qs.len() != 1 {
            return Err(QcvvError::validation(format!("`{label}` takes one qubit")));
        }
        Ok(Some(linalg::embed_one_qubit(&u, qs[0], n_qubits)))
    };
    let two = |u: CMat| -> Result<Option<CMat>> {
        let qs = parse_qubits(args, n_qubits, label)?;
        if qs.len() != 2 || qs[0] == qs[1] {
            return Err(QcvvError::validation(format!(
                "`{label}` takes two distinct qubits"
            )));
        }
        Ok(Some(linalg::embed_two_qubit(&u, qs[0], qs[1], n_qubits)))
    };
    match name {
        "X" => one(linalg::pauli_x()),
        "Y" => one(linalg::pauli_y()),
        "Z" => one(linalg::pauli_z()),
        "H" => one(linalg::hadamard()),
        "S" => one(s_gate()),
        "Sdg" => one(s_gate().adjoint()),
        "CNOT" => two(clifford::cnot()),
        "CZ" => two(linalg::real_mat(
            4,
            &[
                1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1.,
            ],
        )),
        _ => Ok(None),
    }
}

/// Resolve a label against explicit unitaries first, then the built-in grammar.
pub fn resolve_unitary(
    label: &str,
    n_qubits: usize,
    custom: &BTreeMap<String, CMat>,
) -> Result<CMat> {
    if let Some(u) = custom.get(label) {
        return Ok(u.clone());
    }
    builtin_unitary(label, n_qubits)?
        .ok_or_else(|| QcvvError::validation(format!("unknown gate label `{label}`")))
}

/// Noiseless gate set with `|0…0⟩` prep, computational readout and one
/// unitary channel per label.
pub fn ideal_gateset<'a>(
    n_qubits: usize,
    labels: impl IntoIterator<Item = &'a str>,
    custom: &BTreeMap<String, CMat>,
) -> Result<GateSet> {
    let mut gates = BTreeMap::new();
    for label in labels {
        if gates.contains_key(label) {
            continue;
        }
        let u = resolve_unitary(label, n_qubits, custom)?;
        if u.nrows() != 1 << n_qubits {
            return Err(QcvvError::DimensionMismatch {
                what: "gate unitary",
                expected: 1 << n_qubits,
                found: u.nrows(),
            });
        }
        gates.insert(label.to_string(), QuantumChannel::unitary(u)?);
    }
    GateSet::standard(n_qubits, gates)
}
