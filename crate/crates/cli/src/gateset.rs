use std::collections::BTreeMap;

use qcvv::linalg::CMat;
use qcvv::qmodel::GateSet;
use qcvv::simcore::{apply_noise, builtin_unitary, ideal_gateset};

use crate::args::GatesetArgs;
use crate::artifact::{write_artifact, GatesetDoc, Kind};
use crate::error::{CliError, CliResult};

/// Each entry is a built-in label, or `NAME=LABEL` to store a built-in
/// unitary under a custom name.
pub fn build_gateset(args: &GatesetArgs) -> CliResult<GateSet> {
    for spec in &args.noise {
        spec.validate()?;
    }
    let mut names = Vec::with_capacity(args.gate.len());
    let mut custom: BTreeMap<String, CMat> = BTreeMap::new();
    for entry in &args.gate {
        let (name, label) = match entry.split_once('=') {
            Some((n, l)) => (n.trim(), l.trim()),
            None => (entry.trim(), entry.trim()),
        };
        if name.is_empty() {
            return Err(CliError::validation(format!(
                "empty gate name in `{entry}`"
            )));
        }
        let u = builtin_unitary(label, args.qubits)?
            .ok_or_else(|| CliError::validation(format!("unknown gate label `{label}`")))?;
        if name != label
            && custom.insert(name.to_string(), u).is_some() {
                return Err(CliError::validation(format!(
                    "gate name `{name}` given twice"
                )));
            }
        names.push(name.to_string());
    }
    let ideal = ideal_gateset(args.qubits, names.iter().map(String::as_str), &custom)?;
    Ok(apply_noise(&ideal, &args.noise)?)
}

pub fn run(args: &GatesetArgs) -> CliResult<()> {
    let gs = build_gateset(args)?;
    write_artifact(
        args.out.as_deref(),
        Kind::Gateset,
        &GatesetDoc::from_gateset(&gs),
    )
}
