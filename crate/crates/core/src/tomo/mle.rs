//! Projected-gradient likelihood ascent over a convex set of Hermitian matrices.

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat};
use crate::qmodel::born_unchecked;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 50_000;

/// Multinomial log-likelihood `Σ_i w_i ln Tr(F_i X)`.
pub(crate) struct Likelihood {
    pub effects: Vec<CMat>,
    pub weights: Vec<f64>,
    total: f64,
}

impl Likelihood {
    pub fn new(effects: Vec<CMat>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(QcvvError::InsufficientData("no observed outcomes".into()));
        }
        Ok(Self {
            effects,
            weights,
            total,
        })
    }

    pub fn value(&self, x: &CMat) -> f64 {
        let mut acc = 0.0;
        for (f, &w) in self.effects.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let p = born_unchecked(f, x);
            if p <= 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += w * p.ln();
        }
        acc
    }

    /// Gradient divided by the total weight.
    fn gradient(&self, x: &CMat) -> CMat {
        let d = x.nrows();
        let mut g = CMat::zeros(d, d);
        for (f, &w) in self.effects.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            let p = born_unchecked(f, x);
            g += f * c(w / (p * self.total), 0.0);
        }
        g
    }
}

/// Euclidean projection of a real vector onto the probability simplex
/// scaled to `total`.
pub(crate) fn simplex_projection(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - total) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Closest density matrix in Frobenius norm.
pub(crate) fn project_density(x: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(x);
    let proj = simplex_projection(&vals, 1.0);
    let mut out = CMat::zeros(x.nrows(), x.nrows());
    for (k, &lam) in proj.iter().enumerate() {
        if lam > 0.0 {
            let v = vecs.column(k);
            out += (v * v.adjoint()) * c(lam, 0.0);
        }
    }
    out
}

/// Eigenvalue clipping followed by trace renormalization.
pub(crate) fn clip_renormalize(x: &CMat) -> Option<CMat> {
    let (vals, vecs) = linalg::eigh(x);
    let clipped = linalg::from_eig(&vals, &vecs, |l| l.max(0.0));
    let tr = linalg::trace_re(&clipped);
    (tr > 0.0).then(|| clipped * c(1.0 / tr, 0.0))
}

/// Outcome of an ascent run.
pub(crate) struct Ascent {
    pub x: CMat,
    pub loglik: f64,
    pub history: Vec<f64>,
}

/// Armijo-backtracked projected gradient ascent from a feasible start.
/// Stops once the relative log-likelihood gain stays below `tol` for
/// several consecutive steps.
pub(crate) fn ascend(
    model: &Likelihood,
    x0: CMat,
    project: impl Fn(&CMat) -> CMat,
    tol: f64,
    max_iter: usize,
) -> Result<Ascent> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(QcvvError::validation(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut x = x0;
    let mut l = model.value(&x);
    if !l.is_finite() {
        return Err(QcvvError::validation(
            "starting point assigns zero probability to an observed outcome",
        ));
    }
    let mut history = vec![l];
    let mut t = 1.0;
    let mut quiet = 0;
    for _ in 0..max_iter {
        let g = model.gradient(&x);
        let step = loop {
            let y = project(&(&x + &g * c(t, 0.0)));
            let ly = model.value(&y);
            let lin = born_unchecked(&g, &(&y - &x)) * model.total;
            if ly.is_finite() && ly >= l && ly >= l + 1e-4 * lin {
                break Some((y, ly));
            }
            t *= 0.5;
            if t < 1e-16 {
                break None;
            }
        };
        let Some((y, ly)) = step else {
            return Ok(Ascent {
                x,
                loglik: l,
                history,
            });
        };
        debug_assert!(ly >= l, "log-likelihood decreased");
        let gain = ly - l;
        x = y;
        l = ly;
        history.push(l);
        if gain <= tol * l.abs().max(1.0) {
            quiet += 1;
            if quiet >= 5 {
                return Ok(Ascent {
                    x,
                    loglik: l,
                    history,
                });
            }
        } else {
            quiet = 0;
        }
        t = (t * 2.0).min(1e8);
    }
    Err(QcvvError::NonConvergence {
        iterations: max_iter,
        best_loglik: l,
        best: x.iter().copied().collect(),
    })
}
