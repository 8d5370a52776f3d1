use qcvv::holistic::generate_qv_circuits;
use qcvv::rb::{clifford_group, sample_rb_sequences, RbDesign};
use qcvv::simcore::builtin_unitary;
use qcvv::tomo::TomographyDesign;

use crate::args::{DesignArgs, Protocol};
use crate::artifact::{write_artifact, DesignDoc, DesignParams, Kind, QvCircuitDoc};
use crate::error::{CliError, CliResult};

fn check_builtin(label: &str, n: usize) -> CliResult<()> {
    match builtin_unitary(label, n)? {
        Some(_) => Ok(()),
        None => Err(CliError::validation(format!(
            "unknown gate label `{label}`"
        ))),
    }
}

pub fn build_design(args: &DesignArgs) -> CliResult<DesignDoc> {
    let n = args.qubits;
    let mut params = DesignParams::default();
    let mut qv_circuits = None;
    let circuits = match args.protocol {
        Protocol::StateTomo => {
            for label in &args.prep {
                check_builtin(label, n)?;
            }
            params.prep = args.prep.clone();
            TomographyDesign::standard_state(n)?
                .circuits()
                .into_iter()
                .map(|mut c| {
                    let mut layers = args.prep.clone();
                    layers.append(&mut c.layers);
                    c.layers = layers;
                    c
                })
                .collect()
        }
        Protocol::ProcessTomo => {
            let gate = args
                .gate
                .clone()
                .ok_or_else(|| CliError::validation("process_tomo needs --gate"))?;
            check_builtin(&gate, n)?;
            let circuits = TomographyDesign::standard_process(n, &gate)?.circuits();
            params.gate = Some(gate);
            circuits
        }
        Protocol::Rb => {
            let design = RbDesign::new(n, args.lengths.clone(), args.k, args.seed)?;
            params.lengths = Some(design.lengths.clone());
            params.k_sequences = Some(design.k_sequences);
            params.seed = Some(design.seed);
            sample_rb_sequences(&design, clifford_group(n)?)?
        }
        Protocol::Qv => {
            let qcs = generate_qv_circuits(n, args.circuits, args.seed)?;
            params.n_circuits = Some(args.circuits);
            params.seed = Some(args.seed);
            let circuits = qcs.iter().map(|qc| qc.to_circuit()).collect();
            qv_circuits = Some(qcs.iter().map(QvCircuitDoc::from_circuit).collect());
            circuits
        }
    };
    Ok(DesignDoc {
        protocol: args.protocol,
        n_qubits: n,
        params,
        circuits,
        qv_circuits,
    })
}

pub fn run(args: &DesignArgs) -> CliResult<()> {
    let doc = build_design(args)?;
    write_artifact(args.out.as_deref(), Kind::Design, &doc)
}
