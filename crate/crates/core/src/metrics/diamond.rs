use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::qmodel::QuantumChannel;
use crate::seeding::{derive_seed, rng_from_seed};

/// Certified interval around the diamond distance between two channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiamondBounds {
    pub lower: f64,
    pub upper: f64,
    pub n_restarts: usize,
}

const MIN_STEP: f64 = 1e-6;
const INITIAL_STEP: f64 = 0.25;
const MAX_SWEEPS: usize = 20_000;

/// Objective for one input pure state on system ⊗ ancilla.
struct Distinguisher<'a> {
    g: &'a QuantumChannel,
    gp: &'a QuantumChannel,
    ancilla: usize,
}

impl Distinguisher<'_> {
    fn total_dim(&self) -> usize {
        self.g.dim() * self.ancilla
    }

    /// Output of `(G ⊗ id)` on `|φ⟩⟨φ|`, using `φ` reshaped as a d × ancilla matrix.
    fn output(&self, ch: &QuantumChannel, phi: &CMat) -> CMat {
        let n = self.total_dim();
        let mut out = CMat::zeros(n, n);
        for k in ch.kraus() {
            let w = k * phi;
            // row-major flattening matches the system ⊗ ancilla ordering
            let v = CVec::from_iterator(n, w.transpose().iter().copied());
            out += &v * v.adjoint();
        }
        out
    }

    fn value(&self, params: &[f64]) -> f64 {
        let d = self.g.dim();
        let norm = params.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let phi = CMat::from_fn(d, self.ancilla, |a, b| {
            let idx = 2 * (a * self.ancilla + b);
            c(params[idx] / norm, params[idx + 1] / norm)
        });
        super::trace_distance_of_matrices(&self.output(self.g, &phi), &self.output(self.gp, &phi))
    }

    /// Coordinate-wise perturbation ascent with step halving.
    fn refine(&self, mut x: Vec<f64>) -> (f64, Vec<f64>) {
        let mut best = self.value(&x);
        let mut step = INITIAL_STEP;
        let mut sweeps = 0;
        while step >= MIN_STEP && sweeps < MAX_SWEEPS {
            sweeps += 1;
            let mut improved = false;
            for i in 0..x.len() {
                for dir in [1.0, -1.0] {
                    let old = x[i];
                    x[i] = old + dir * step;
                    let v = self.value(&x);
                    if v > best {
                        best = v;
                        improved = true;
                        break;
                    }
                    x[i] = old;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        (best, x)
    }

    fn random_start(&self, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let v = linalg::random_unit_vector(self.total_dim(), &mut rng);
        v.iter().flat_map(|z| [z.re, z.im]).collect()
    }
}

fn params_of(v: &CVec) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Best trace distance found between `(G ⊗ id)[φ]` and `(G' ⊗ id)[φ]` over
/// pure inputs φ on system ⊗ ancilla (`ancilla_dim = 1` means no ancilla).
///
/// Returns the value and the maximizing input state.
pub fn diamond_lower_bound(
    g: &QuantumChannel,
    gp: &QuantumChannel,
    ancilla_dim: usize,
    n_restarts: usize,
    seed: u64,
) -> Result<(f64, CVec)> {
    lower_bound_with_starts(g, gp, ancilla_dim, n_restarts, seed, Vec::new())
}

fn lower_bound_with_starts(
    g: &QuantumChannel,
    gp: &QuantumChannel,
    ancilla_dim: usize,
    n_restarts: usize,
    seed: u64,
    extra_starts: Vec<CVec>,
) -> Result<(f64, CVec)> {
    if g.dim() != gp.dim() {
        return Err(QcvvError::DimensionMismatch {
            what: "channel",
            expected: g.dim(),
            found: gp.dim(),
        });
    }
    if n_restarts == 0 || ancilla_dim == 0 {
        return Err(QcvvError::validation(
            "need n_restarts ≥ 1 and ancilla_dim ≥ 1",
        ));
    }
    let obj = Distinguisher {
        g,
        gp,
        ancilla: ancilla_dim,
    };
    let mut starts: Vec<Vec<f64>> = extra_starts.iter().map(params_of).collect();
    starts.extend((0..n_restarts as u64).map(|r| obj.random_start(derive_seed(seed, r))));
    let results: Vec<(f64, Vec<f64>)> = starts.into_par_iter().map(|s| obj.refine(s)).collect();
    let (best, x) = results
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, r| {
            if r.0 > acc.0 {
                r
            } else {
                acc
            }
        });
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let phi = CVec::from_iterator(
        x.len() / 2,
        x.chunks(2).map(|p| c(p[0] / norm, p[1] / norm)),
    );
    Ok((best.clamp(0.0, 1.0), phi))
}

/// Lower bound by ancilla-assisted search, upper bound `min(1, d·δ_tr(Choi, Choi'))`.
pub fn diamond_distance_bounds(
    g: &QuantumChannel,
    gp: &QuantumChannel,
    n_restarts: usize,
    seed: u64,
) -> Result<DiamondBounds> {
    let d = g.dim();
    let (product_best, product_phi) = diamond_lower_bound(g, gp, 1, n_restarts, seed)?;
    // the ancilla search space contains every product input, so seed it with the best one
    let mut lifted = CVec::zeros(d * d);
    for a in 0..d {
        lifted[a * d] = product_phi[a];
    }
    let bell = CVec::from_fn(d * d, |idx, _| {
        if idx / d == idx % d {
            c(1.0 / (d as f64).sqrt(), 0.0)
        } else {
            linalg::ZERO
        }
    });
    let (lower, _) = lower_bound_with_starts(
        g,
        gp,
        d,
        n_restarts,
        derive_seed(seed, u64::MAX),
        vec![lifted, bell],
    )?;
    let lower = lower.max(product_best);
    let upper = (d as f64 * super::trace_distance_of_matrices(&g.choi(), &gp.choi())).min(1.0);
    Ok(DiamondBounds {
        lower: lower.min(upper),
        upper,
        n_restarts,
    })
}
