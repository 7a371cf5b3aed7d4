use proptest::prelude::*;
use rbspectro::rbsim::{
    average_rb, average_rb_pair, calibrate_models, fit_decay, ratio_curve, run_rb_sequence,
    tail_kappa, CalibrationSettings, ModelPair, RbSetup, DEFAULT_CORRECTED_COUPLING,
    DEFAULT_UNCORRECTED_COUPLING,
};
use rbspectro::NoiseSpectrum;

fn pair() -> ModelPair {
    ModelPair::with_couplings(DEFAULT_UNCORRECTED_COUPLING, DEFAULT_CORRECTED_COUPLING)
}

fn spec(amp: f64, alpha: f64) -> NoiseSpectrum {
    NoiseSpectrum::new(amp, alpha).unwrap()
}

#[test]
fn calibration_reproduces_builtin_coupling() {
    let p = calibrate_models(&CalibrationSettings::default()).unwrap();
    let c = p.corrected.coupling.x;
    assert!((c / DEFAULT_CORRECTED_COUPLING - 1.0).abs() < 1e-12, "{c}");
}

#[test]
fn vanishing_amplitude_keeps_unit_fidelity() {
    let p = pair();
    let setup = RbSetup::for_pair(200, &p);
    for model in [&p.uncorrected, &p.corrected] {
        let f = run_rb_sequence(&spec(1e-31, 1.0), model, setup, 3).unwrap();
        assert!(f.iter().all(|v| (v - 1.0).abs() <= 1e-10));
    }
}

#[test]
fn white_noise_uncorrected_decays_toward_half() {
    let p = pair();
    let c = average_rb(&spec(1e-3, 0.0), &p.uncorrected, RbSetup::for_pair(200, &p), 200, 8).unwrap();
    let smooth: Vec<f64> = c.fidelities.chunks(20).map(|w| w.iter().sum::<f64>() / 20.0).collect();
    assert!(smooth.windows(2).all(|w| w[1] < w[0]), "{smooth:?}");
    assert!(smooth.iter().all(|&v| v > 0.5));
}

#[test]
fn white_noise_kappa_saturates_below_one() {
    let k = tail_kappa(&spec(1e-3, 0.0), &pair(), RbSetup::for_pair(200, &pair()), 200, 31).unwrap();
    assert!((0.55..=0.9).contains(&k), "{k}");
}

#[test]
fn correlated_noise_favours_corrected_gates() {
    let p = pair();
    let (u, c) = average_rb_pair(&spec(1e-3, 1.5), &p, RbSetup::for_pair(200, &p), 200, 32).unwrap();
    let kappa = ratio_curve(&c, &u).unwrap();
    assert!(kappa.ratios[50..].iter().all(|&k| k > 1.0));
    assert!(c.fidelities[150..].iter().zip(&u.fidelities[150..]).all(|(a, b)| a > b));
}

#[test]
fn crossover_brackets_unit_exponent() {
    let p = pair();
    let setup = RbSetup::for_pair(200, &p);
    assert!(tail_kappa(&spec(1e-3, 0.2), &p, setup, 200, 33).unwrap() < 1.0);
    assert!(tail_kappa(&spec(1e-3, 2.0), &p, setup, 200, 33).unwrap() > 1.0);
}

#[test]
fn decay_rate_grows_with_amplitude() {
    let p = pair();
    let setup = RbSetup::for_pair(200, &p);
    let gammas: Vec<f64> = [1e-5, 3e-5, 1e-4, 3e-4, 1e-3]
        .iter()
        .map(|&a| fit_decay(&average_rb(&spec(a, 1.0), &p.uncorrected, setup, 100, 34).unwrap()).unwrap().gamma)
        .collect();
    assert!(gammas.windows(2).all(|w| w[0] <= w[1]), "{gammas:?}");
}

#[test]
fn independent_averages_give_consistent_decay_rates() {
    let p = pair();
    let setup = RbSetup::for_pair(200, &p);
    let s = spec(1e-3, 1.0);
    let g1 = fit_decay(&average_rb(&s, &p.uncorrected, setup, 200, 41).unwrap()).unwrap().gamma;
    let g2 = fit_decay(&average_rb(&s, &p.uncorrected, setup, 200, 42).unwrap()).unwrap().gamma;
    assert!((g1 / g2 - 1.0).abs() < 0.1, "{g1} vs {g2}");
}

#[test]
fn doubling_runs_halves_variance() {
    const REPS: u64 = 1500;
    let p = pair();
    let setup = RbSetup::for_pair(200, &p);
    let s = spec(1e-3, 1.0);
    let last = |runs: usize, rep: u64, tag: u64| {
        *average_rb(&s, &p.uncorrected, setup, runs, rep * 1000 + tag).unwrap().fidelities.last().unwrap()
    };
    let variance = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let small: Vec<f64> = (0..REPS).map(|r| last(10, r, 1)).collect();
    let large: Vec<f64> = (0..REPS).map(|r| last(20, r, 2)).collect();
    let ratio = variance(&small) / variance(&large);
    assert!((1.5..=2.5).contains(&ratio), "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fidelities_are_probabilities(
        alpha in 0.0f64..=3.0,
        log_amp in -7.0f64..-1.0,
        s in any::<u64>(),
    ) {
        let p = pair();
        let setup = RbSetup::for_pair(60, &p);
        for model in [&p.uncorrected, &p.corrected] {
            let f = run_rb_sequence(&spec(10f64.powf(log_amp), alpha), model, setup, s).unwrap();
            prop_assert_eq!(f.len(), 60);
            prop_assert!(f.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        }
    }

    #[test]
    fn kappa_is_positive_and_finite(alpha in 0.0f64..=3.0, s in any::<u64>()) {
        let p = pair();
        let (u, c) = average_rb_pair(&spec(1e-3, alpha), &p, RbSetup::for_pair(60, &p), 4, s).unwrap();
        let k = ratio_curve(&c, &u).unwrap();
        prop_assert!(k.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    }
}

