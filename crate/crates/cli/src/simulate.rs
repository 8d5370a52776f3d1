use std::collections::BTreeMap;

use rayon::prelude::*;

use qcvv::holistic::{noisy_qv_gateset, simulate_qv_circuit};
use qcvv::qmodel::GateSet;
use qcvv::seeding::derive_seed;
use qcvv::simcore::{self, apply_noise, ideal_gateset, CountData};

use crate::args::{Protocol, SimulateArgs};
use crate::artifact::{
    read_artifact, write_artifact, CountRecord, CountsDoc, DesignDoc, GatesetDoc, Kind,
    SimulationRecord,
};
use crate::error::{CliError, CliResult};

/// Gate set executing a label-based design: the given file, or ideal
/// built-in gates for every label, with the noise flags applied.
fn device(design: &DesignDoc, args: &SimulateArgs) -> CliResult<GateSet> {
    let base = match &args.gateset {
        Some(path) => {
            let doc: GatesetDoc = read_artifact(path, Kind::Gateset)?;
            let gs = doc.to_gateset()?;
            if gs.n_qubits() != design.n_qubits {
                return Err(CliError::validation(format!(
                    "gate set acts on {} qubits, design on {}",
                    gs.n_qubits(),
                    design.n_qubits
                )));
            }
            gs
        }
        None => {
            let labels = design
                .circuits
                .iter()
                .flat_map(|c| c.layers.iter().map(String::as_str));
            ideal_gateset(design.n_qubits, labels, &BTreeMap::new())?
        }
    };
    Ok(apply_noise(&base, &args.noise)?)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<CountsDoc> {
    let design: DesignDoc = read_artifact(&args.design, Kind::Design)?;
    design.validate()?;
    for spec in &args.noise {
        spec.validate()?;
    }
    if !args.exact && args.shots == 0 {
        return Err(CliError::validation(
            "--shots must be ≥ 1 (or pass --exact)",
        ));
    }
    let shots = (!args.exact).then_some(args.shots);

    let data: Vec<CountData> = match design.protocol {
        Protocol::Qv => {
            if args.gateset.is_some() {
                return Err(CliError::validation(
                    "qv designs carry their own block unitaries; use --noise instead of --gateset",
                ));
            }
            let qv = design.qv_circuits.as_deref().unwrap_or_default();
            qv.par_iter()
                .enumerate()
                .map(|(i, doc)| {
                    let qc = doc.to_circuit()?;
                    let gs = noisy_qv_gateset(&qc, &args.noise)?;
                    Ok(simulate_qv_circuit(
                        &gs,
                        &qc,
                        shots,
                        derive_seed(args.seed, i as u64),
                    )?)
                })
                .collect::<CliResult<_>>()?
        }
        _ => {
            let gs = device(&design, args)?;
            match shots {
                Some(s) => simcore::run_design(&gs, &design.circuits, s, args.seed)?,
                None => simcore::exact_design(&gs, &design.circuits)?,
            }
        }
    };

    Ok(CountsDoc {
        protocol: design.protocol,
        n_qubits: design.n_qubits,
        simulation: SimulationRecord {
            design: args.design.display().to_string(),
            gateset: args.gateset.as_ref().map(|p| p.display().to_string()),
            noise: args.noise.clone(),
            shots: shots.unwrap_or(0),
            seed: args.seed,
            exact: args.exact,
        },
        records: data.iter().map(CountRecord::from_data).collect(),
    })
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let doc = simulate(args)?;
    write_artifact(args.out.as_deref(), Kind::Counts, &doc)
}
