//! Monte Carlo counting and timeline behaviour.

use std::f64::consts::FRAC_PI_4;

use oam_eraser::experiment::{
    linspace, scan, simulate_counts, simulate_counts_repetition, simulate_timeline_repetition, ExperimentConfig,
    ScanVariable,
};

fn eraser() -> ExperimentConfig {
    ExperimentConfig::spin_orbit_eraser()
}

#[test]
fn poisson_means_track_expectation() {
    let cfg = eraser();
    let series = scan(&cfg, ScanVariable::Theta, FRAC_PI_4, &linspace(0.0, std::f64::consts::PI, 6, false)).unwrap();
    let reps = 200;
    for (i, &p) in series.joint.iter().enumerate() {
        let expected = cfg.counting.pair_rate * cfg.counting.integration_time * p;
        let mean = (0..reps)
            .map(|r| simulate_counts_repetition(&cfg, &series, r).counts.unwrap()[i] as f64)
            .sum::<f64>()
            / reps as f64;
        let sigma = (expected / reps as f64).sqrt().max(1e-9);
        assert!((mean - expected).abs() <= 3.0 * sigma, "point {i}: mean {mean} vs {expected}");
    }
}

#[test]
fn accidentals_raise_the_mean() {
    let mut cfg = eraser();
    cfg.counting.singles_rate_a = 1e5;
    cfg.counting.singles_rate_b = 1e5;
    let acc = cfg.counting.accidentals();
    assert!((acc - 1e10 * 25e-9 * 5.0).abs() < 1e-9);
    // α = 0 and θ where the joint probability vanishes leaves only accidentals
    let series = scan(&cfg, ScanVariable::Theta, FRAC_PI_4, &[FRAC_PI_4]).unwrap();
    assert!(series.joint[0] < 1e-20);
    let mean = (0..200).map(|r| simulate_counts_repetition(&cfg, &series, r).counts.unwrap()[0] as f64).sum::<f64>() / 200.0;
    assert!((mean - acc).abs() < 3.0 * (acc / 200.0).sqrt());
}

#[test]
fn counts_are_independent_of_thread_count() {
    let cfg = eraser();
    let series = scan(&cfg, ScanVariable::Theta, 0.3, &linspace(0.0, 6.0, 50, false)).unwrap();
    let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate_counts(&cfg, &series));
    let par = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap().install(|| simulate_counts(&cfg, &series));
    assert_eq!(seq, par);
}

#[test]
fn seed_changes_counts() {
    let cfg = eraser();
    let series = scan(&cfg, ScanVariable::Theta, 0.3, &linspace(0.0, 6.0, 20, false)).unwrap();
    let mut other = cfg.clone();
    other.counting.rng_seed = 99;
    assert_ne!(simulate_counts(&cfg, &series).counts, simulate_counts(&other, &series).counts);
}

#[test]
fn timeline_rate_converges_to_joint_probability() {
    let cfg = eraser();
    let alpha = FRAC_PI_4;
    let theta = 0.4;
    let joint = oam_eraser::experiment::coincidence_probability(&cfg, alpha, theta).unwrap().joint;
    let duration = 20.0;
    let t = simulate_timeline_repetition(&cfg, alpha, theta, duration, 3).unwrap();
    let expected = cfg.counting.pair_rate * duration * joint;
    assert!((t.coincidences as f64 - expected).abs() < 4.0 * expected.sqrt());
    assert_eq!(t.coincidences, t.true_coincidences);
}

#[test]
fn long_delay_leaves_only_accidentals() {
    let mut cfg = eraser().with_delay_a(30.0).unwrap();
    cfg.counting.singles_rate_a = 5e4;
    cfg.counting.singles_rate_b = 5e4;
    let t = simulate_timeline_repetition(&cfg, FRAC_PI_4, 0.0, 1.0, 0).unwrap();
    assert_eq!(t.true_coincidences, 0);
    let floor = t.accidental_floor();
    assert!((t.coincidences as f64 - floor).abs() < 4.0 * floor.sqrt(), "{} vs {floor}", t.coincidences);
}
