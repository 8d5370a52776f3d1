//! State, process and measurement tomography.

mod design;
mod mle;

pub use design::{AlignedRow, TomographyDesign, TomographyKind, MEAS_SETTINGS, PREP_FIDUCIALS};
pub use mle::{DEFAULT_TOL, MAX_ITERATIONS};

use serde::{Deserialize, Serialize};

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::qmodel::{choi_from_superop, superop_from_choi, DensityMatrix, Povm, QuantumChannel};
use crate::simcore::CountData;

use mle::{ascend, clip_renormalize, project_density, Likelihood};

/// Tolerance for reporting an estimate as physical.
pub const PHYSICAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LinearInversion,
    Mle,
}

#[derive(Debug, Clone)]
pub struct StateEstimate {
    pub rho_hat: CMat,
    pub method: Method,
    pub loglikelihood: Option<f64>,
    pub physical: bool,
}

impl StateEstimate {
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.rho_hat)
    }

    /// The estimate as a validated state (fails when unphysical).
    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::with_tolerance(self.rho_hat.clone(), PHYSICAL_TOL)
    }
}

#[derive(Debug, Clone)]
pub struct ProcessEstimate {
    pub superop_hat: CMat,
    pub method: Method,
    pub loglikelihood: Option<f64>,
    pub physical: bool,
}

impl ProcessEstimate {
    pub fn dim(&self) -> usize {
        (self.superop_hat.nrows() as f64).sqrt().round() as usize
    }

    /// Unit-trace Choi matrix of the estimate.
    pub fn choi(&self) -> CMat {
        let d = self.dim();
        choi_from_superop(&self.superop_hat, d) * c(1.0 / d as f64, 0.0)
    }

    /// Max-abs deviation of `Tr_out J` from the identity.
    pub fn tp_deviation(&self) -> f64 {
        let d = self.dim();
        let j = choi_from_superop(&self.superop_hat, d);
        linalg::max_abs_diff(&linalg::partial_trace_first(&j, d, d), &linalg::identity(d))
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        QuantumChannel::from_superop_with_tolerance(self.superop_hat.clone(), PHYSICAL_TOL)
    }

    pub fn ptm(&self) -> Result<nalgebra::DMatrix<f64>> {
        Ok(self.to_channel()?.ptm())
    }
}

fn expect_kind(design: &TomographyDesign, kind: TomographyKind) -> Result<()> {
    if design.kind != kind {
        return Err(QcvvError::validation(format!(
            "expected a {kind:?} design, got {:?}",
            design.kind
        )));
    }
    Ok(())
}

/// Stacked frequencies in design-row order.
fn stacked_frequencies(rows: &[AlignedRow]) -> CVec {
    CVec::from_iterator(
        rows.iter().map(|r| r.frequencies.len()).sum(),
        rows.iter()
            .flat_map(|r| r.frequencies.iter().map(|&f| c(f, 0.0))),
    )
}

/// `M⁺ p` without any post-processing.
pub fn invert_state_raw(design: &TomographyDesign, p: &[f64]) -> Result<CMat> {
    if p.len() != design.effect_matrix().nrows() {
        return Err(QcvvError::DimensionMismatch {
            what: "frequency vector",
            expected: design.effect_matrix().nrows(),
            found: p.len(),
        });
    }
    let v = CVec::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0)));
    Ok(linalg::unvec(&(design.effect_pinv() * v), design.dim()))
}

/// Linear inversion, Hermitized then renormalized to unit trace.
pub fn linear_inversion_state(
    design: &TomographyDesign,
    data: &[CountData],
) -> Result<StateEstimate> {
    expect_kind(design, TomographyKind::State)?;
    let rows = design.align(data)?;
    let p = stacked_frequencies(&rows);
    let raw = linalg::unvec(&(design.effect_pinv() * p), design.dim());
    let mut rho = linalg::hermitian_part(&raw);
    let tr = linalg::trace_re(&rho);
    if tr.abs() < 1e-12 {
        return Err(QcvvError::InsufficientData(
            "estimate has zero trace".into(),
        ));
    }
    rho *= c(1.0 / tr, 0.0);
    let physical = linalg::min_eigenvalue(&rho) >= -PHYSICAL_TOL;
    Ok(StateEstimate {
        rho_hat: rho,
        method: Method::LinearInversion,
        loglikelihood: None,
        physical,
    })
}

fn state_likelihood(design: &TomographyDesign, rows: &[AlignedRow]) -> Result<Likelihood> {
    let weights = rows
        .iter()
        .flat_map(|r| r.weights.iter().copied())
        .collect();
    Likelihood::new(design.effects().to_vec(), weights)
}

/// Log-likelihood of an arbitrary candidate state under the design's data.
pub fn state_loglikelihood(
    design: &TomographyDesign,
    data: &[CountData],
    rho: &CMat,
) -> Result<f64> {
    expect_kind(design, TomographyKind::State)?;
    Ok(state_likelihood(design, &design.align(data)?)?.value(rho))
}

/// Linear inversion with negative eigenvalues clipped and trace renormalized.
pub fn projected_linear_inversion_state(
    design: &TomographyDesign,
    data: &[CountData],
) -> Result<CMat> {
    let li = linear_inversion_state(design, data)?;
    clip_renormalize(&li.rho_hat)
        .ok_or_else(|| QcvvError::InsufficientData("linear inversion has no positive part".into()))
}

/// Maximum-likelihood state over the set of density matrices.
pub fn mle_state(design: &TomographyDesign, data: &[CountData], tol: f64) -> Result<StateEstimate> {
    let mut trace = Vec::new();
    mle_state_traced(design, data, tol, &mut trace)
}

/// As [`mle_state`], also recording the per-iteration log-likelihood.
pub fn mle_state_traced(
    design: &TomographyDesign,
    data: &[CountData],
    tol: f64,
    history: &mut Vec<f64>,
) -> Result<StateEstimate> {
    expect_kind(design, TomographyKind::State)?;
    let rows = design.align(data)?;
    let model = state_likelihood(design, &rows)?;
    let d = design.dim();
    let li = linear_inversion_state(design, data)?.rho_hat;
    let mixed = linalg::identity(d) * c(1.0 / d as f64, 0.0);
    let mut candidates: Vec<CMat> = clip_renormalize(&li).into_iter().collect();
    candidates.push(project_density(&li));
    let best = candidates
        .into_iter()
        .map(|x| (model.value(&x), x))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one candidate");
    let start = if best.0.is_finite() {
        best.1
    } else {
        // shrink toward the maximally mixed state until every observed outcome is possible
        let mut w = 1e-6;
        loop {
            let x = &best.1 * c(1.0 - w, 0.0) + &mixed * c(w, 0.0);
            if model.value(&x).is_finite() || w >= 1.0 {
                break x;
            }
            w *= 10.0;
        }
    };
    let run = ascend(&model, start, project_density, tol, MAX_ITERATIONS)?;
    *history = run.history;
    let rho = linalg::hermitian_part(&run.x);
    Ok(StateEstimate {
        physical: linalg::min_eigenvalue(&rho) >= -1e-9,
        rho_hat: rho,
        method: Method::Mle,
        loglikelihood: Some(run.loglik),
    })
}

/// Outcome-probability matrix `R[k, j]` (effect row k, prep column j).
fn process_frequency_matrix(design: &TomographyDesign, rows: &[AlignedRow]) -> CMat {
    let d = design.dim();
    let n_meas = design.meas_fiducials.len();
    let n_prep = design.prep_fiducials.len();
    CMat::from_fn(n_meas * d, n_prep, |k, j| {
        c(rows[j * n_meas + k / d].frequencies[k % d], 0.0)
    })
}

/// `S − u(u†S − u†)/d` with `u = vec(I)`: the closest trace-preserving map.
pub fn tp_project(s: &CMat, d: usize) -> CMat {
    let u = linalg::vec_of(&linalg::identity(d));
    let defect = u.adjoint() * s - u.adjoint();
    s - (&u * defect) * c(1.0 / d as f64, 0.0)
}

/// Double pseudoinversion `S = M_E⁺ R P⁺`, then trace-preserving projection.
pub fn linear_inversion_process(
    design: &TomographyDesign,
    data: &[CountData],
) -> Result<ProcessEstimate> {
    expect_kind(design, TomographyKind::Process)?;
    let rows = design.align(data)?;
    let r = process_frequency_matrix(design, &rows);
    let d = design.dim();
    let s = tp_project(&(design.effect_pinv() * r * design.prep_pinv()), d);
    let choi = choi_from_superop(&s, d) * c(1.0 / d as f64, 0.0);
    let herm = linalg::max_abs_diff(&choi, &choi.adjoint());
    let physical = herm < PHYSICAL_TOL && linalg::min_eigenvalue(&choi) >= -PHYSICAL_TOL;
    Ok(ProcessEstimate {
        superop_hat: s,
        method: Method::LinearInversion,
        loglikelihood: None,
        physical,
    })
}

/// Unnormalized Choi of a trace-preserving map: `Tr_out J = I`.
fn project_psd(j: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(j);
    linalg::from_eig(&vals, &vecs, |l| l.max(0.0))
}

fn project_tp_affine(j: &CMat, d: usize) -> CMat {
    let defect = linalg::partial_trace_first(j, d, d) - linalg::identity(d);
    j - linalg::identity(d).kronecker(&defect) * c(1.0 / d as f64, 0.0)
}

/// Alternating (Dykstra) projection onto PSD ∩ TP, then an exact TP fix by
/// congruence with `I ⊗ Y^{-1/2}` where `Y = Tr_out J`.
pub(crate) fn project_cptp(j: &CMat, d: usize) -> CMat {
    let mut x = linalg::hermitian_part(j);
    let mut p = CMat::zeros(x.nrows(), x.ncols());
    let mut q = p.clone();
    for _ in 0..2000 {
        let y = project_psd(&(&x + &p));
        p = &x + &p - &y;
        let next = project_tp_affine(&(&y + &q), d);
        q = &y + &q - &next;
        let moved = linalg::max_abs_diff(&next, &x);
        x = next;
        if moved < 1e-14 {
            break;
        }
    }
    let mut j = linalg::hermitian_part(&project_psd(&x));
    let y = linalg::partial_trace_first(&j, d, d);
    let (vals, vecs) = linalg::eigh(&y);
    if vals[0] <= 1e-12 {
        // fall back to mixing with the completely depolarizing map
        let eps = (1e-12 - vals[0]).max(1e-12);
        j = &j * c(1.0 - eps, 0.0) + linalg::identity(d * d) * c(eps / d as f64, 0.0);
        return congruence_fix(&j, d);
    }
    let inv_sqrt = linalg::from_eig(&vals, &vecs, |l| 1.0 / l.sqrt());
    let a = linalg::identity(d).kronecker(&inv_sqrt);
    linalg::hermitian_part(&(&a * j * &a))
}

fn congruence_fix(j: &CMat, d: usize) -> CMat {
    let y = linalg::partial_trace_first(j, d, d);
    let (vals, vecs) = linalg::eigh(&y);
    let inv_sqrt = linalg::from_eig(&vals, &vecs, |l| 1.0 / l.max(1e-300).sqrt());
    let a = linalg::identity(d).kronecker(&inv_sqrt);
    linalg::hermitian_part(&(&a * j * &a))
}

fn process_likelihood(design: &TomographyDesign, rows: &[AlignedRow]) -> Result<Likelihood> {
    let d = design.dim();
    let n_meas = design.meas_fiducials.len();
    let mut effects = Vec::new();
    let mut weights = Vec::new();
    for (j, rho) in design.prep_states().iter().enumerate() {
        let rho_t = rho.transpose();
        for m in 0..n_meas {
            for k in 0..d {
                effects.push(design.effects()[m * d + k].kronecker(&rho_t));
                weights.push(rows[j * n_meas + m].weights[k]);
            }
        }
    }
    Likelihood::new(effects, weights)
}

/// Log-likelihood of a candidate superoperator under the design's data.
pub fn process_loglikelihood(
    design: &TomographyDesign,
    data: &[CountData],
    superop: &CMat,
) -> Result<f64> {
    expect_kind(design, TomographyKind::Process)?;
    let model = process_likelihood(design, &design.align(data)?)?;
    Ok(model.value(&choi_from_superop(superop, design.dim())))
}

/// Linear inversion projected onto the CPTP set.
pub fn projected_linear_inversion_process(
    design: &TomographyDesign,
    data: &[CountData],
) -> Result<CMat> {
    let d = design.dim();
    let li = linear_inversion_process(design, data)?;
    Ok(superop_from_choi(
        &project_cptp(&choi_from_superop(&li.superop_hat, d), d),
        d,
    ))
}

/// Maximum-likelihood CPTP map, optimized over Choi matrices.
pub fn mle_process(
    design: &TomographyDesign,
    data: &[CountData],
    tol: f64,
) -> Result<ProcessEstimate> {
    expect_kind(design, TomographyKind::Process)?;
    let d = design.dim();
    let rows = design.align(data)?;
    let model = process_likelihood(design, &rows)?;
    let li = linear_inversion_process(design, data)?;
    let mut start = project_cptp(&choi_from_superop(&li.superop_hat, d), d);
    if !model.value(&start).is_finite() {
        let depol = linalg::identity(d * d) * c(1.0 / d as f64, 0.0);
        let mut w = 1e-6;
        loop {
            let x = &start * c(1.0 - w, 0.0) + &depol * c(w, 0.0);
            if model.value(&x).is_finite() || w >= 1.0 {
                start = x;
                break;
            }
            w *= 10.0;
        }
    }
    let run = ascend(&model, start, |j| project_cptp(j, d), tol, MAX_ITERATIONS)?;
    let s = superop_from_choi(&run.x, d);
    let est = ProcessEstimate {
        superop_hat: s,
        method: Method::Mle,
        loglikelihood: Some(run.loglik),
        physical: true,
    };
    let physical =
        linalg::min_eigenvalue(&est.choi()) >= -1e-9 && est.tp_deviation() <= PHYSICAL_TOL;
    Ok(ProcessEstimate { physical, ..est })
}

/// Per-effect linear inversion of a readout from known input states.
#[derive(Debug, Clone)]
pub struct MeasurementEstimate {
    pub effects: Vec<CMat>,
    /// `true` where an effect has an eigenvalue below `-PHYSICAL_TOL`.
    pub negative: Vec<bool>,
}

impl MeasurementEstimate {
    pub fn to_povm(&self) -> Result<Povm> {
        Povm::with_tolerance(self.effects.clone(), PHYSICAL_TOL)
    }
}

/// `p_jk = Tr(E_k ρ_j)` inverted per effect; Hermitized; completeness
/// restored by spreading `I − Σ E_k` evenly over the effects.
pub fn measurement_tomography(
    preps: &[DensityMatrix],
    data: &[CountData],
) -> Result<MeasurementEstimate> {
    let Some(first) = preps.first() else {
        return Err(QcvvError::validation("no preparation states"));
    };
    let d = first.dim();
    if data.len() != preps.len() {
        return Err(QcvvError::DimensionMismatch {
            what: "measurement data",
            expected: preps.len(),
            found: data.len(),
        });
    }
    // Tr(Eρ) = vec(ρᵀ)ᵀ vec(E)
    let a = CMat::from_rows(
        &preps
            .iter()
            .map(|r| linalg::vec_of(&r.matrix().transpose()).transpose())
            .collect::<Vec<_>>(),
    );
    let rank = linalg::rank(&a);
    if rank < d * d {
        return Err(QcvvError::RankDeficient {
            what: "preparation set",
            rank,
            required: d * d,
        });
    }
    let m = data
        .iter()
        .map(|c| c.counts.keys().max().map_or(0, |k| k + 1))
        .max()
        .unwrap_or(0);
    let m = m.max(
        data.iter()
            .filter_map(|c| c.probabilities.as_ref().map(Vec::len))
            .max()
            .unwrap_or(0),
    );
    let freqs = data
        .iter()
        .map(|c| {
            c.validate(m.max(1))?;
            c.frequencies(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let a_pinv = linalg::pinv(&a);
    let mut effects: Vec<CMat> = (0..m)
        .map(|k| {
            let p = CVec::from_iterator(preps.len(), freqs.iter().map(|f| c(f[k], 0.0)));
            linalg::hermitian_part(&linalg::unvec(&(&a_pinv * p), d))
        })
        .collect();
    if m > 0 {
        let total = effects.iter().fold(CMat::zeros(d, d), |acc, e| acc + e);
        let fix = (linalg::identity(d) - total) * c(1.0 / m as f64, 0.0);
        effects.iter_mut().for_each(|e| *e += &fix);
    }
    let negative = effects
        .iter()
        .map(|e| linalg::min_eigenvalue(e) < -PHYSICAL_TOL)
        .collect();
    Ok(MeasurementEstimate { effects, negative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::{random, PureState};
    use crate::seeding::rng_from_seed;
    use crate::simcore::{build_noisy_gateset, exact_design, ideal_gateset, NoiseSpec};
    use std::collections::BTreeMap;

    fn exact_state_data(design: &TomographyDesign, rho: &CMat) -> Vec<CountData> {
        let d = design.dim();
        design
            .circuits()
            .iter()
            .enumerate()
            .map(|(i, circ)| {
                let p = (0..d)
                    .map(|k| {
                        crate::qmodel::born_unchecked(&design.effects()[i * d + k], rho)
                            .clamp(0.0, 1.0)
                    })
                    .collect();
                CountData::exact(circ.id.clone(), p)
            })
            .collect()
    }

    fn bloch_counts(x: [u64; 2], y: [u64; 2], z: [u64; 2]) -> Vec<CountData> {
        vec![
            CountData::from_counts("meas:X", &x),
            CountData::from_counts("meas:Y", &y),
            CountData::from_counts("meas:Z", &z),
        ]
    }

    #[test]
    fn linear_inversion_examples() {
        let design = TomographyDesign::standard_state(1).unwrap();
        let zero = DensityMatrix::basis(2, 0).into_matrix();
        let est = linear_inversion_state(&design, &exact_state_data(&design, &zero)).unwrap();
        assert!(linalg::max_abs_diff(&est.rho_hat, &zero) < 1e-12 && est.physical);

        let est =
            linear_inversion_state(&design, &bloch_counts([75, 25], [50, 50], [50, 50])).unwrap();
        let expect = DensityMatrix::from_bloch([0.5, 0.0, 0.0]).unwrap();
        assert!(linalg::max_abs_diff(&est.rho_hat, expect.matrix()) < 1e-12);

        let est =
            linear_inversion_state(&design, &bloch_counts([80, 20], [50, 50], [100, 0])).unwrap();
        let r = 1.36f64.sqrt();
        assert!((est.min_eigenvalue() - 0.5 * (1.0 - r)).abs() < 1e-12);
        assert!(!est.physical);
    }

    #[test]
    fn linear_inversion_is_exact_for_random_states() {
        let mut rng = rng_from_seed(17);
        for n in [1usize, 2] {
            let design = TomographyDesign::standard_state(n).unwrap();
            for _ in 0..20 {
                let rho = random::random_density(1 << n, &mut rng).into_matrix();
                let est =
                    linear_inversion_state(&design, &exact_state_data(&design, &rho)).unwrap();
                assert!(linalg::max_abs_diff(&est.rho_hat, &rho) < 1e-9);
            }
        }
    }

    #[test]
    fn perturbation_bounded_by_conditioning() {
        let mut rng = rng_from_seed(5);
        let design = TomographyDesign::standard_state(2).unwrap();
        let cond = linalg::condition_number(design.effect_matrix());
        let rho = random::random_density(4, &mut rng).into_matrix();
        let p: Vec<f64> = design
            .effects()
            .iter()
            .map(|e| crate::qmodel::born_unchecked(e, &rho))
            .collect();
        let base = invert_state_raw(&design, &p).unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..50 {
            let delta: Vec<f64> = (0..p.len())
                .map(|_| rand::Rng::random_range(&mut rng, -1e-3..1e-3))
                .collect();
            let q: Vec<f64> = p.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let moved = invert_state_raw(&design, &q).unwrap() - &base;
            let rel_change = moved.norm() / base.norm();
            assert!(rel_change <= cond * norm(&delta) / norm(&p) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn mle_examples() {
        let design = TomographyDesign::standard_state(1).unwrap();
        let plus = PureState::new(CVec::from_vec(vec![
            c(0.5f64.sqrt(), 0.0),
            c(0.5f64.sqrt(), 0.0),
        ]))
        .unwrap()
        .density()
        .into_matrix();
        let est = mle_state(&design, &exact_state_data(&design, &plus), DEFAULT_TOL).unwrap();
        assert!(
            linalg::max_abs_diff(&est.rho_hat, &plus) < 1e-6,
            "{}",
            est.rho_hat
        );

        let mut history = Vec::new();
        let data = bloch_counts([80, 20], [50, 50], [100, 0]);
        let est = mle_state_traced(&design, &data, DEFAULT_TOL, &mut history).unwrap();
        assert!(est.min_eigenvalue() >= -1e-12 && est.physical);
        assert!(history.windows(2).all(|w| w[1] >= w[0]));
        let baseline = projected_linear_inversion_state(&design, &data).unwrap();
        assert!(
            est.loglikelihood.unwrap() >= state_loglikelihood(&design, &data, &baseline).unwrap()
        );

        // outcome "-z" never observed, "+x" never observed
        let data = bloch_counts([0, 100], [50, 50], [100, 0]);
        let est = mle_state(&design, &data, DEFAULT_TOL).unwrap();
        assert!(est.min_eigenvalue() >= -1e-12);
        assert!((est.rho_hat.trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn process_linear_inversion_examples() {
        let design = TomographyDesign::standard_process(1, "G").unwrap();
        let circuits = design.circuits();
        let run = |g: QuantumChannel| {
            let mut gs = ideal_gateset(
                1,
                circuits
                    .iter()
                    .flat_map(|c| c.layers.iter().map(String::as_str))
                    .filter(|l| *l != "G"),
                &BTreeMap::new(),
            )
            .unwrap();
            gs.insert_gate("G", g).unwrap();
            exact_design(&gs, &circuits).unwrap()
        };
        let id = QuantumChannel::identity(2);
        let est = linear_inversion_process(&design, &run(id.clone())).unwrap();
        assert!(linalg::max_abs_diff(&est.superop_hat, id.superop()) < 1e-12 && est.physical);

        let x = QuantumChannel::unitary(linalg::pauli_x()).unwrap();
        let oracle = linalg::pauli_x().kronecker(&linalg::pauli_x());
        let est = linear_inversion_process(&design, &run(x)).unwrap();
        assert!(linalg::max_abs_diff(&est.superop_hat, &oracle) < 1e-12);

        let dep = QuantumChannel::depolarizing(1, 0.3).unwrap();
        let est = linear_inversion_process(&design, &run(dep)).unwrap();
        let ptm = est.ptm().unwrap();
        let expect = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 0.7, 0.7, 0.7,
        ]));
        assert!((ptm - expect).abs().max() < 1e-12);
    }

    #[test]
    fn process_mle_on_exact_identity_and_sampled_depolarizing() {
        let design = TomographyDesign::standard_process(1, "G").unwrap();
        let circuits = design.circuits();
        let labels: Vec<String> = circuits
            .iter()
            .flat_map(|c| c.layers.clone())
            .filter(|l| l != "G")
            .collect();
        let mut gs = ideal_gateset(1, labels.iter().map(String::as_str), &BTreeMap::new()).unwrap();
        gs.insert_gate("G", QuantumChannel::identity(2)).unwrap();
        let exact = exact_design(&gs, &circuits).unwrap();
        let est = mle_process(&design, &exact, DEFAULT_TOL).unwrap();
        assert!(
            linalg::max_abs_diff(&est.superop_hat, QuantumChannel::identity(2).superop()) < 1e-6
        );
        assert!(est.physical);

        let mut noisy = build_noisy_gateset(&gs, &NoiseSpec::Depolarizing { q: 0.0 }).unwrap();
        let truth = QuantumChannel::depolarizing(1, 0.1).unwrap();
        noisy.insert_gate("G", truth.clone()).unwrap();
        let data = crate::simcore::run_design(&noisy, &circuits, 1000, 7).unwrap();
        let est = mle_process(&design, &data, DEFAULT_TOL).unwrap();
        assert!(est.physical);
        assert!(est.tp_deviation() < 1e-6);
        let f = crate::metrics::process_fidelity(&est.to_channel().unwrap(), &truth).unwrap();
        // shot noise alone puts the Choi infidelity at a few 1e-2 here
        assert!(1.0 - f < 0.05, "infidelity {}", 1.0 - f);
        let dense = crate::simcore::run_design(&noisy, &circuits, 100_000, 7).unwrap();
        let est_dense = mle_process(&design, &dense, DEFAULT_TOL).unwrap();
        let f = crate::metrics::process_fidelity(&est_dense.to_channel().unwrap(), &truth).unwrap();
        assert!(1.0 - f < 0.01, "infidelity {}", 1.0 - f);
        let li = linear_inversion_process(&design, &data).unwrap();
        let baseline = projected_linear_inversion_process(&design, &data).unwrap();
        let base_ll = process_loglikelihood(&design, &data, &baseline).unwrap();
        assert!(est.loglikelihood.unwrap() >= base_ll);
        assert!(li.tp_deviation() < 1e-9);
    }

    #[test]
    fn measurement_tomography_examples() {
        let preps: Vec<DensityMatrix> = TomographyDesign::standard_measurement(1)
            .unwrap()
            .prep_states()
            .iter()
            .map(|m| DensityMatrix::new(m.clone()).unwrap())
            .collect();
        let readout = |povm: &Povm| -> Vec<CountData> {
            preps
                .iter()
                .enumerate()
                .map(|(j, r)| CountData::exact(format!("p{j}"), povm.probabilities(r).unwrap()))
                .collect()
        };
        let est = measurement_tomography(&preps, &readout(&Povm::computational(1))).unwrap();
        for (k, e) in est.effects.iter().enumerate() {
            assert!(linalg::max_abs_diff(e, &DensityMatrix::basis(2, k).into_matrix()) < 1e-12);
        }
        let f = 0.05;
        let confused = Povm::new(vec![
            linalg::real_mat(2, &[1.0 - f, 0.0, 0.0, f]),
            linalg::real_mat(2, &[f, 0.0, 0.0, 1.0 - f]),
        ])
        .unwrap();
        let est = measurement_tomography(&preps, &readout(&confused)).unwrap();
        for (e, t) in est.effects.iter().zip(confused.effects()) {
            assert!(linalg::max_abs_diff(e, t) < 1e-12);
        }
        assert!(est.negative.iter().all(|n| !n));
        assert!(measurement_tomography(&preps[..3], &readout(&confused)[..3]).is_err());
    }
}
