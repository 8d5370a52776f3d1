use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat};
use crate::qmodel::{compose_channels, DensityMatrix, GateSet, Povm, QuantumChannel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn pauli(self) -> CMat {
        match self {
            Axis::X => linalg::pauli_x(),
            Axis::Y => linalg::pauli_y(),
            Axis::Z => linalg::pauli_z(),
        }
    }
}

/// Parametric error process attached after every gate (or to SPAM).
///
/// Depolarizing acts on the whole register; amplitude damping and coherent
/// rotations act identically and independently on every qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Depolarizing { q: f64 },
    AmplitudeDamping { gamma: f64 },
    CoherentRotation { axis: Axis, angle: f64 },
    Spam { prep_flip: f64, readout_flip: f64 },
}

fn unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QcvvError::validation(format!(
            "{name} = {x} outside [0, 1]"
        )));
    }
    Ok(())
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Depolarizing { q } => unit("q", q),
            NoiseSpec::AmplitudeDamping { gamma } => unit("gamma", gamma),
            NoiseSpec::CoherentRotation { angle, .. } => {
                if angle.is_finite() {
                    Ok(())
                } else {
                    Err(QcvvError::validation("rotation angle must be finite"))
                }
            }
            NoiseSpec::Spam {
                prep_flip,
                readout_flip,
            } => unit("prep_flip", prep_flip).and(unit("readout_flip", readout_flip)),
        }
    }

    /// Per-gate error channel on `n_qubits`; `None` for SPAM-only noise.
    pub fn gate_noise(&self, n_qubits: usize) -> Result<Option<QuantumChannel>> {
        self.validate()?;
        let per_qubit =
            |ch: QuantumChannel| (1..n_qubits).fold(ch.clone(), |acc, _| acc.tensor(&ch));
        Ok(match *self {
            NoiseSpec::Depolarizing { q } => Some(QuantumChannel::depolarizing(n_qubits, q)?),
            NoiseSpec::AmplitudeDamping { gamma } => {
                Some(per_qubit(QuantumChannel::amplitude_damping(gamma)?))
            }
            NoiseSpec::CoherentRotation { axis, angle } => {
                // exp(-iθσ/2) = cos(θ/2) I - i sin(θ/2) σ
                let u = linalg::identity(2) * c((angle / 2.0).cos(), 0.0)
                    - axis.pauli() * c(0.0, (angle / 2.0).sin());
                Some(per_qubit(QuantumChannel::unitary(u)?))
            }
            NoiseSpec::Spam { .. } => None,
        })
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Depolarizing { q } => write!(f, "depolarizing:{q}"),
            NoiseSpec::AmplitudeDamping { gamma } => write!(f, "amplitude_damping:{gamma}"),
            NoiseSpec::CoherentRotation { axis, angle } => {
                write!(f, "coherent_rotation:{axis:?},{angle}")
            }
            NoiseSpec::Spam {
                prep_flip,
                readout_flip,
            } => write!(f, "spam:{prep_flip},{readout_flip}"),
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = QcvvError;

    /// `kind:param[,param]`, e.g. `depolarizing:0.02`, `coherent_rotation:Z,0.1`,
    /// `spam:0.02,0.05`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, params) = s
            .split_once(':')
            .ok_or_else(|| QcvvError::validation(format!("noise `{s}` is not kind:params")))?;
        let parts: Vec<&str> = params.split(',').map(str::trim).collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| QcvvError::validation(format!("bad number `{t}` in noise `{s}`")))
        };
        let arity = |n: usize| {
            if parts.len() == n {
                Ok(())
            } else {
                Err(QcvvError::validation(format!(
                    "noise `{kind}` takes {n} parameter(s), got {}",
                    parts.len()
                )))
            }
        };
        let spec = match kind {
            "depolarizing" => {
                arity(1)?;
                NoiseSpec::Depolarizing { q: num(parts[0])? }
            }
            "amplitude_damping" => {
                arity(1)?;
                NoiseSpec::AmplitudeDamping {
                    gamma: num(parts[0])?,
                }
            }
            "coherent_rotation" => {
                arity(2)?;
                let axis = match parts[0] {
                    "X" | "x" => Axis::X,
                    "Y" | "y" => Axis::Y,
                    "Z" | "z" => Axis::Z,
                    other => return Err(QcvvError::validation(format!("unknown axis `{other}`"))),
                };
                NoiseSpec::CoherentRotation {
                    axis,
                    angle: num(parts[1])?,
                }
            }
            "spam" => {
                arity(2)?;
                NoiseSpec::Spam {
                    prep_flip: num(parts[0])?,
                    readout_flip: num(parts[1])?,
                }
            }
            other => {
                return Err(QcvvError::validation(format!(
                    "unknown noise kind `{other}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Readout confusion: outcome j is reported as k with probability
/// `Π_q (flip if bit q differs)`.
fn confused_effects(meas: &Povm, n_qubits: usize, flip: f64) -> Vec<CMat> {
    let m = meas.len();
    (0..m)
        .map(|k| {
            let mut e = CMat::zeros(meas.dim(), meas.dim());
            for (j, ej) in meas.effects().iter().enumerate() {
                let diff = (j ^ k).count_ones() as i32;
                let w = flip.powi(diff) * (1.0 - flip).powi(n_qubits as i32 - diff);
                if w != 0.0 {
                    e += ej * c(w, 0.0);
                }
            }
            e
        })
        .collect()
}

/// Every gate replaced by `noise ∘ gate`; SPAM noise flips prep bits and
/// confuses readout outcomes.
pub fn build_noisy_gateset(ideal: &GateSet, noise: &NoiseSpec) -> Result<GateSet> {
    let n = ideal.n_qubits();
    match *noise {
        NoiseSpec::Spam {
            prep_flip,
            readout_flip,
        } => {
            noise.validate()?;
            let flip = QuantumChannel::bit_flip(prep_flip)?;
            let flips = (1..n).fold(flip.clone(), |acc, _| acc.tensor(&flip));
            let prep = DensityMatrix::with_tolerance(
                linalg::hermitian_part(&flips.apply_operator(ideal.prep().matrix())),
                1e-9,
            )?;
            let meas = if ideal.meas().len() == 1 << n {
                Povm::new(confused_effects(ideal.meas(), n, readout_flip))?
            } else {
                return Err(QcvvError::validation(
                    "readout confusion needs one effect per computational outcome",
                ));
            };
            ideal.clone().with_prep(prep)?.with_meas(meas)
        }
        _ => {
            let err = noise
                .gate_noise(n)?
                .expect("gate noise kinds yield a channel");
            ideal.clone().map_gates(|_, g| compose_channels(&err, &g))
        }
    }
}

/// Fold a list of noise specs in order.
pub fn apply_noise(ideal: &GateSet, specs: &[NoiseSpec]) -> Result<GateSet> {
    specs
        .iter()
        .try_fold(ideal.clone(), |gs, spec| build_noisy_gateset(&gs, spec))
}
