//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion (with its sub-checks indented below) and exits non-zero when
//! any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use oam_eraser::analysis::{
    complementarity_check, count_lobes, distinguishability, fit_fringe, path_visibility, render_azimuthal_pattern,
    two_path_pattern, conditional_pattern, TwoPathModel,
};
use oam_eraser::elements::{
    binary_mask_overlap, DelaySpec, ElementSpec, FiberSpec, HologramMode, HologramSpec, PolarizerSpec, QPlateSpec,
    WavePlateKind, WavePlateSpec,
};
use oam_eraser::experiment::{
    causal_order_probability, linspace, run_density_pipeline, run_pipeline, scan_state, simulate_counts,
    simulate_counts_repetition, simulate_timeline_repetition, ExperimentConfig, MeasurementOrder, ScanVariable,
    SourceKind, SourceSpec, Spectrum,
};
use oam_eraser::hilbert::{trace_distance, Arm, DensityMatrix, JointKet, JointLabel, Mode, Pol, PolState, C64};
use oam_eraser::Error;
use oam_eraser_cli::config::{canonical_document, emit};
use oam_eraser_cli::output::series_csv;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    label: String,
    pass: bool,
    detail: String,
}

fn check(label: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        label: label.into(),
        pass,
        detail: detail.into(),
    }
}

fn eraser() -> ExperimentConfig {
    ExperimentConfig::spin_orbit_eraser()
}

/// Fitted visibility of a noise-free θ-scan at polarizer angle `alpha`.
fn fitted_visibility(cfg: &ExperimentConfig, alpha: f64, points: usize) -> f64 {
    let state = run_pipeline(cfg).unwrap().state;
    let thetas = linspace(0.0, 2.0 * PI, points, false);
    let s = scan_state(&state, cfg, ScanVariable::Theta, alpha, &thetas).unwrap();
    fit_fringe(&s.settings, &s.conditional).unwrap().visibility()
}

fn coincidence_law() -> Vec<Check> {
    let cfg = eraser();
    let state = run_pipeline(&cfg).unwrap().state;
    let thetas = linspace(0.0, 2.0 * PI, 64, true);
    let mut worst: f64 = 0.0;
    for alpha in linspace(0.0, PI, 64, true) {
        let s = scan_state(&state, &cfg, ScanVariable::Theta, alpha, &thetas).unwrap();
        for (t, p) in thetas.iter().zip(&s.conditional) {
            let want = 0.5 * (1.0 + (2.0 * alpha).sin() * (2.0 * t + FRAC_PI_2).cos());
            worst = worst.max((p - want).abs());
        }
    }
    vec![check("64×64 grid vs (1+sin2α·cos(2θ+π/2))/2", worst <= 1e-10, format!("max |Δ| = {worst:.3e}"))]
}

fn visibility_curve() -> Vec<Check> {
    let cfg = eraser();
    let mut worst: f64 = 0.0;
    for alpha in linspace(0.0, FRAC_PI_4, 9, true) {
        let v = fitted_visibility(&cfg, alpha, 72);
        worst = worst.max((v - (2.0 * alpha).sin().abs()).abs());
    }
    vec![check("9 α values, 72-point fits vs |sin 2α|", worst <= 1e-9, format!("max |Δ| = {worst:.3e}"))]
}

fn marked_erased_extremes() -> Vec<Check> {
    let mut out = Vec::new();
    let ideal = eraser();
    let v0 = fitted_visibility(&ideal, 0.0, 72);
    let v1 = fitted_visibility(&ideal, FRAC_PI_4, 72);
    out.push(check("ideal marked V(α=0) ≤ 1e-10", v0 <= 1e-10, format!("V = {v0:.3e}")));
    out.push(check("ideal erased V(α=π/4) ≥ 1−1e-10", v1 >= 1.0 - 1e-10, format!("V = {v1:.12}")));

    // erased-case visibility falls monotonically with the polarizer leak
    let target = 0.92;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fitted_visibility(&eraser().with_extinction(mid), FRAC_PI_4, 72) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let e = 0.5 * (lo + hi);
    let cal = eraser().with_extinction(e);
    let erased = fitted_visibility(&cal, FRAC_PI_4, 72);
    let closed = (0.08f64 / 1.92).sqrt();
    out.push(check(
        "calibrated erased V = 0.92 ± 0.005",
        (erased - target).abs() <= 0.005,
        format!("extinction e = {e:.6} (closed form {closed:.6}), V = {erased:.6}"),
    ));
    let marked = fitted_visibility(&cal, 0.0, 72);
    out.push(check(
        "calibrated marked residual V = 0.04 ± 0.005",
        (marked - 0.04).abs() <= 0.005,
        format!(
            "V = {marked:.3e}; a leaky polarizer diagonal in H/V cannot create H–V coherence, so the marked fringe stays flat"
        ),
    ));
    out
}

fn delayed_choice() -> Vec<Check> {
    let mut out = Vec::new();
    let cfg = eraser();
    let mut worst: f64 = 0.0;
    for alpha in linspace(0.0, PI, 16, false) {
        for theta in linspace(0.0, 2.0 * PI, 16, false) {
            let a = causal_order_probability(&cfg, alpha, theta, MeasurementOrder::AFirst).unwrap();
            let b = causal_order_probability(&cfg, alpha, theta, MeasurementOrder::BFirst).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    out.push(check("A-first vs B-first on 16×16 grid", worst <= 1e-12, format!("max |Δ| = {worst:.3e}")));

    let ns = DelaySpec::new(2.3, Arm::A).unwrap().seconds() * 1e9;
    out.push(check("2.3 m delay ≈ 7.66 ns", (ns - 7.66).abs() <= 0.02, format!("{ns:.4} ns")));

    let runs = 50u64;
    let mut base = eraser();
    base.counting.singles_rate_a = 5e4;
    base.counting.singles_rate_b = 5e4;
    let (alpha, theta) = (FRAC_PI_4, -FRAC_PI_4 / 2.0);
    let stats = |cfg: &ExperimentConfig, first_rep: u64| {
        let v: Vec<(f64, f64, f64)> = (first_rep..first_rep + runs)
            .map(|r| {
                let t = simulate_timeline_repetition(cfg, alpha, theta, 1.0, r).unwrap();
                (t.coincidences as f64, t.true_coincidences as f64, t.accidental_floor())
            })
            .collect();
        let n = v.len() as f64;
        let mean = v.iter().map(|x| x.0).sum::<f64>() / n;
        let var = v.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let trues = v.iter().map(|x| x.1).sum::<f64>();
        let floor = v.iter().map(|x| x.2).sum::<f64>() / n;
        (mean, var, trues, floor)
    };
    let (m0, v0, _, _) = stats(&base, 0);
    let (m1, v1, _, _) = stats(&base.clone().with_delay_a(2.3).unwrap(), runs);
    let sigma = (v0 / runs as f64 + v1 / runs as f64).sqrt();
    out.push(check(
        "2.3 m coincidence rate equals zero-delay rate (3σ)",
        (m0 - m1).abs() <= 3.0 * sigma,
        format!("{m0:.2} vs {m1:.2} per s, σ = {sigma:.2}"),
    ));
    let (m30, _, trues30, floor30) = stats(&base.clone().with_delay_a(30.0).unwrap(), 2 * runs);
    let sigma30 = (floor30 / runs as f64).sqrt();
    out.push(check(
        "30 m path leaves only the accidental floor",
        trues30 == 0.0 && (m30 - floor30).abs() <= 3.0 * sigma30,
        format!("{m30:.2} coincidences/s vs floor {floor30:.2}, true pairs {trues30}"),
    ));
    out
}

fn random_element(rng: &mut ChaCha8Rng, arm: Arm) -> ElementSpec {
    match rng.random_range(0..5) {
        0 => {
            let twice_q = [-3, -2, -1, 1, 2, 3][rng.random_range(0..6)];
            ElementSpec::QPlate(QPlateSpec::new(f64::from(twice_q) / 2.0, arm).unwrap())
        }
        1 => {
            let kind = if rng.random() { WavePlateKind::Half } else { WavePlateKind::Quarter };
            ElementSpec::WavePlate(WavePlateSpec::new(kind, rng.random_range(0.0..PI), arm).unwrap())
        }
        2 => ElementSpec::Polarizer(PolarizerSpec::new(rng.random_range(0.0..PI), rng.random_range(0.0..0.5), arm).unwrap()),
        3 => {
            let mode = if rng.random() { HologramMode::Ideal } else { HologramMode::Binary };
            ElementSpec::Hologram(HologramSpec::new(rng.random_range(1..=3), rng.random_range(0.0..PI), mode, arm).unwrap())
        }
        _ => ElementSpec::Fiber(FiberSpec {
            arm,
            accepted_l: rng.random_range(-2..=2),
        }),
    }
}

fn random_config(seed: u64) -> ExperimentConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l_max = rng.random_range(1..=3);
    let source = match rng.random_range(0..3) {
        0 => SourceSpec::spdc(l_max, Spectrum::Flat),
        1 => SourceSpec::spdc(l_max, Spectrum::Gaussian { width: rng.random_range(0.5..3.0) }),
        _ => SourceSpec {
            kind: SourceKind::GenericTwoPath,
            l_max,
            spectrum: Spectrum::Flat,
        },
    };
    let mut cfg = eraser();
    cfg.source = source;
    cfg.elements_a = (0..rng.random_range(1..=4)).map(|_| random_element(&mut rng, Arm::A)).collect();
    cfg.elements_b = (0..rng.random_range(0..=3)).map(|_| random_element(&mut rng, Arm::B)).collect();
    cfg
}

fn oracle_equivalence() -> Vec<Check> {
    let (mut compared, mut extinguished, mut disagreements) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    let mut seed = 0;
    while compared < 100 {
        let cfg = random_config(seed);
        seed += 1;
        match (run_pipeline(&cfg), run_density_pipeline(&cfg)) {
            (Ok(ket), Ok((rho, p))) => {
                let want = DensityMatrix::from_ket_in_basis(&ket.state, rho.basis().to_vec()).unwrap();
                let (a, b) = DensityMatrix::compact_pair(&rho, &want, 1e-28).unwrap();
                let d = trace_distance(&a, &b).unwrap();
                worst = worst.max(d).max((p - ket.cumulative_probability).abs());
                compared += 1;
            }
            (Err(Error::Extinguished { .. }), Err(Error::Extinguished { .. })) => extinguished += 1,
            _ => {
                disagreements += 1;
                compared += 1;
            }
        }
    }
    vec![check(
        "100 random configs, ket vs density channel",
        worst <= 1e-10 && disagreements == 0,
        format!("max trace distance {worst:.3e}; {extinguished} extinguished configs skipped, {disagreements} disagreements"),
    )]
}

fn complementarity() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_excess, mut worst_gap) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..1000 {
        let l = rng.random_range(1..=4);
        let entries: Vec<_> = Pol::ALL
            .into_iter()
            .flat_map(|p| [l, -l].map(move |b| (p, b)))
            .map(|(p, b)| {
                let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (JointLabel::new(Mode::new(p, 0), Mode::new(Pol::H, b)), a)
            })
            .collect();
        let k = JointKet::from_amplitudes(entries).unwrap().normalize().unwrap();
        let r = complementarity_check(path_visibility(&k, l).unwrap(), distinguishability(&k, l).unwrap()).unwrap();
        worst_excess = worst_excess.max(r.sum_of_squares - 1.0);
        worst_gap = worst_gap.max((r.sum_of_squares - 1.0).abs());
    }
    vec![
        check("V² + D² ≤ 1 + 1e-9", worst_excess <= 1e-9, format!("max excess {worst_excess:.3e}")),
        check("pure states saturate V² + D² = 1", worst_gap <= 1e-9, format!("max |V²+D²−1| = {worst_gap:.3e}")),
    ]
}

fn binary_mask() -> Vec<Check> {
    let mut worst_first: f64 = 0.0;
    let mut worst_parity: f64 = 0.0;
    for l in 1..=4i32 {
        let n = 2 * l as u32;
        for theta in [0.0, 0.3, 1.1] {
            // the n = 2|ℓ| sector mask couples modes |ℓ| apart at first order
            let c = binary_mask_overlap(n, theta, l, 0).unwrap();
            worst_first = worst_first.max((c.norm() - 2.0 / PI).abs());
            for k in [0, 2, 4] {
                let m = binary_mask_overlap(n, theta, k * l, 0).unwrap();
                worst_parity = worst_parity.max(m.norm());
            }
        }
    }
    vec![
        check("|first-order coefficient| = 2/π", worst_first <= 1e-6, format!("max |Δ| = {worst_first:.3e}")),
        check("parity-mismatched harmonics vanish", worst_parity < 1e-9, format!("max |c| = {worst_parity:.3e}")),
    ]
}

fn pattern_rendering() -> Vec<Check> {
    let mut bad = Vec::new();
    for l in 1..=8 {
        let lobes = count_lobes(&render_azimuthal_pattern(l, 0.4, 720).unwrap());
        if lobes != 2 * l as usize {
            bad.push(format!("ℓ={l}: {lobes}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = linspace(-4.0, 4.0, 301, true);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut m1 = [C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))];
        let mut m2 = [C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))];
        for m in [&mut m1, &mut m2] {
            let n = (m[0].norm_sqr() + m[1].norm_sqr()).sqrt();
            m[0] /= n;
            m[1] /= n;
        }
        let overlap = m1[0].conj() * m2[0] + m1[1].conj() * m2[1];
        let model = TwoPathModel::plane_waves(&grid, rng.random_range(0.5..3.0), -rng.random_range(0.5..3.0), overlap, rng.random_range(0.0..2.0 * PI));
        let full = two_path_pattern(&model).unwrap();
        let d = conditional_pattern(&model, (m1, m2), PolState::D.jones()).unwrap();
        let a = conditional_pattern(&model, (m1, m2), PolState::A.jones()).unwrap();
        for i in 0..grid.len() {
            worst = worst.max((d[i] + a[i] - full[i]).abs());
        }
    }
    vec![
        check("lobe count = 2|ℓ| for ℓ = 1..8", bad.is_empty(), if bad.is_empty() { "all match".into() } else { bad.join(", ") }),
        check("D + A conditional patterns = unconditioned pattern", worst <= 1e-12, format!("max |Δ| = {worst:.3e}")),
    ]
}

fn monte_carlo() -> Vec<Check> {
    let mut out = Vec::new();
    let cfg = eraser();
    let state = run_pipeline(&cfg).unwrap().state;
    let thetas = linspace(0.0, PI, 8, false);
    let series = scan_state(&state, &cfg, ScanVariable::Theta, FRAC_PI_4, &thetas).unwrap();
    let reps = 200u64;
    let mut worst_z: f64 = 0.0;
    for (i, &p) in series.joint.iter().enumerate() {
        let expected = cfg.counting.pair_rate * cfg.counting.integration_time * p;
        let mean = (0..reps).map(|r| simulate_counts_repetition(&cfg, &series, r).counts.unwrap()[i] as f64).sum::<f64>()
            / reps as f64;
        let sigma = expected.sqrt() / (reps as f64).sqrt();
        let z = if sigma > 0.0 { (mean - expected).abs() / sigma } else if mean == 0.0 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    out.push(check("Poisson means within 3σ/√200 of rate·T·p", worst_z <= 3.0, format!("max |z| = {worst_z:.2}")));

    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| simulate_counts(&cfg, &series));
    let wide = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap().install(|| simulate_counts(&cfg, &series));
    let same_lib = series_csv(&serial).unwrap() == series_csv(&wide).unwrap();
    out.push(check("library CSV identical for 1 and 8 threads", same_lib, ""));

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("eraser.toml");
    std::fs::write(&cfg_path, emit(&canonical_document()).replacen("alpha = 0.0", "alpha = 0.7", 1)).unwrap();
    let csv_for = |threads: &str| {
        let out_dir = dir.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_oam-eraser"))
            .args(["scan-theta", cfg_path.to_str().unwrap(), "--counts", "--seed", "42", "--out-dir", out_dir.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        std::fs::read(out_dir.join("scan_theta.csv")).unwrap()
    };
    let same_cli = csv_for("1") == csv_for("8");
    out.push(check("CLI CSV identical for RAYON_NUM_THREADS 1 and 8", same_cli, ""));
    out
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Vec<Check>);
    let criteria: [Criterion; 9] = [
        ("coincidence law", Duration::from_secs(5), coincidence_law),
        ("visibility curve", Duration::from_secs(5), visibility_curve),
        ("marked/erased extremes", Duration::from_secs(10), marked_erased_extremes),
        ("delayed-choice equivalence", Duration::from_secs(60), delayed_choice),
        ("oracle equivalence", Duration::from_secs(30), oracle_equivalence),
        ("complementarity", Duration::from_secs(30), complementarity),
        ("binary-mask coupling", Duration::from_secs(5), binary_mask),
        ("pattern rendering", Duration::from_secs(5), pattern_rendering),
        ("Monte Carlo statistics", Duration::from_secs(60), monte_carlo),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = in_time && checks.iter().all(|c| c.pass);
        println!(
            "criterion {} {}: {} ({:.2} s, budget {} s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        for c in &checks {
            let tag = if c.pass { "ok" } else { "FAIL" };
            if c.detail.is_empty() {
                println!("    [{tag}] {}", c.label);
            } else {
                println!("    [{tag}] {}: {}", c.label, c.detail);
            }
        }
        if !in_time {
            println!("    [FAIL] runtime over budget");
        }
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: {} of 9 criteria failed: {:?}", failed.len(), failed);
        std::process::exit(1);
    }
}
