use qcvv::rb::{self, clifford_group, RbDesign};
use qcvv::seeding::rng_from_seed;
use qcvv::simcore::NoiseSpec;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const LENGTHS: [usize; 6] = [1, 2, 4, 8, 16, 32];

fn fitted(noise: &[NoiseSpec], k: usize, shots: Option<u64>, seed: u64) -> rb::DecayFit {
    let design = RbDesign::new(1, LENGTHS.to_vec(), k, seed).unwrap();
    let group = clifford_group(1).unwrap();
    let circuits = rb::sample_rb_sequences(&design, group).unwrap();
    let gs = rb::rb_gateset(1, &circuits, noise).unwrap();
    let data = rb::run_rb(&gs, &circuits, shots, seed ^ 0x5eed).unwrap();
    rb::fit_decay(&data.points(), 2).unwrap()
}

#[test]
fn exact_depolarizing_fit_recovers_twirl_parameters() {
    let fit = fitted(&[NoiseSpec::Depolarizing { q: 0.02 }], 30, None, 11);
    assert!((fit.p - 0.98).abs() < 1e-6, "p = {}", fit.p);
    assert!((fit.r - 0.01).abs() < 1e-6);
    // F(m) = ½ + ½·0.98^(m+1)
    assert!((fit.a - 0.49).abs() < 1e-6 && (fit.b - 0.5).abs() < 1e-6);
}

#[test]
fn spam_moves_a_and_b_but_not_p() {
    let clean = fitted(&[NoiseSpec::Depolarizing { q: 0.02 }], 30, None, 12);
    let noisy = fitted(
        &[
            NoiseSpec::Depolarizing { q: 0.02 },
            NoiseSpec::Spam {
                prep_flip: 0.02,
                readout_flip: 0.05,
            },
        ],
        30,
        None,
        12,
    );
    assert!((noisy.p - 0.98).abs() < 1e-6, "p = {}", noisy.p);
    // survival effect weight on the prepared state: 0.98·0.95 + 0.02·0.05
    let overlap = 0.932;
    assert!((noisy.a - 0.98 * (overlap - 0.5)).abs() < 1e-6);
    assert!((noisy.a - clean.a).abs() > 1e-3);
    // symmetric readout keeps Tr(E)/d = ½
    assert!((noisy.b - 0.5).abs() < 1e-6);
}

#[test]
fn two_qubit_exact_fit() {
    let q = 0.03;
    let design = RbDesign::new(2, vec![1, 2, 4, 8], 4, 5).unwrap();
    let group = clifford_group(2).unwrap();
    let circuits = rb::sample_rb_sequences(&design, group).unwrap();
    let gs = rb::rb_gateset(2, &circuits, &[NoiseSpec::Depolarizing { q }]).unwrap();
    let fit = rb::fit_decay(&rb::run_rb(&gs, &circuits, None, 0).unwrap().points(), 4).unwrap();
    assert!((fit.p - (1.0 - q)).abs() < 1e-6);
    assert!((fit.r - 0.75 * q).abs() < 1e-6);
}

#[test]
fn sampling_is_uniform_over_single_qubit_cliffords() {
    let group = clifford_group(1).unwrap();
    let mut rng = rng_from_seed(2024);
    let draws = 100_000;
    let mut counts = vec![0u64; group.order()];
    for _ in 0..draws {
        counts[group.sample(&mut rng)] += 1;
    }
    let expected = draws as f64 / group.order() as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((group.order() - 1) as f64).unwrap();
    let p_value = 1.0 - dist.cdf(chi2);
    assert!(p_value > 1e-3, "chi2 = {chi2}, p = {p_value}");
}

#[test]
fn finite_shot_fits_cover_exact_p() {
    let noise = [NoiseSpec::Depolarizing { q: 0.02 }];
    let exact = fitted(&noise, 100, None, 0).p;
    let covered = (0..100)
        .filter(|&rep| {
            let fit = fitted(&noise, 100, Some(100), 1000 + rep);
            (fit.p - exact).abs() <= 3.0 * fit.stderr_p
        })
        .count();
    assert!(covered >= 95, "covered {covered}/100");
}
