//! Source, element pipeline, exact coincidence probabilities and the two
//! counting models (per-point Poisson counts and an event timeline).

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;

use crate::analysis::FringeFit;
use crate::elements::{
    polarizer_operator, sector_projector, DelaySpec, ElementSpec, FiberSpec, HologramMode,
    HologramSpec, PolarizerSpec, QPlateSpec, WavePlateKind, WavePlateSpec,
};
use crate::error::{Error, Result};
use crate::hilbert::{Arm, DensityMatrix, JointKet, JointLabel, Mode, Pol, C64, L_CAP, NULL_PROBABILITY};
use crate::rng::{point_stream, TIMELINE_STREAM};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    /// Type-I down-conversion: Σ c_|ℓ| |ℓ⟩_A|−ℓ⟩_B |H⟩_A|H⟩_B.
    Spdc,
    /// Polarization-marked two-path state (|H⟩_A|+L⟩_B + |V⟩_A|−L⟩_B)/√2
    /// with L = `l_max`.
    GenericTwoPath,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spectrum {
    Flat,
    /// c_|ℓ| ∝ exp(−ℓ²/(2σ²))
    Gaussian { width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub l_max: i32,
    pub spectrum: Spectrum,
}

impl SourceSpec {
    pub fn spdc(l_max: i32, spectrum: Spectrum) -> Self {
        SourceSpec {
            kind: SourceKind::Spdc,
            l_max,
            spectrum,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_max < 0 {
            return Err(Error::invalid("l_max", "must be ≥ 0"));
        }
        if self.l_max > L_CAP {
            return Err(Error::OamOverflow { l: self.l_max, cap: L_CAP });
        }
        if self.kind == SourceKind::GenericTwoPath && self.l_max == 0 {
            return Err(Error::invalid("l_max", "two-path source needs l_max ≥ 1"));
        }
        if let Spectrum::Gaussian { width } = self.spectrum {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::invalid("width", "gaussian width must be > 0"));
            }
        }
        Ok(())
    }

    /// Normalized spectrum amplitudes c_|ℓ| for ℓ = −l_max..=l_max.
    pub fn coefficients(&self) -> Vec<(i32, f64)> {
        let raw: Vec<(i32, f64)> = (-self.l_max..=self.l_max)
            .map(|l| {
                let w = match self.spectrum {
                    Spectrum::Flat => 1.0,
                    Spectrum::Gaussian { width } => (-f64::from(l * l) / (2.0 * width * width)).exp(),
                };
                (l, w)
            })
            .collect();
        let norm = raw.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        raw.into_iter().map(|(l, w)| (l, w / norm)).collect()
    }
}

/// Type-I SPDC pair state with anticorrelated OAM, both photons horizontal.
pub fn build_spdc_state(source: &SourceSpec) -> Result<JointKet> {
    if source.kind != SourceKind::Spdc {
        return Err(Error::invalid("kind", "expected an spdc source"));
    }
    source.validate()?;
    let entries = source.coefficients().into_iter().map(|(l, c)| {
        (
            JointLabel::new(Mode::new(Pol::H, l), Mode::new(Pol::H, -l)),
            C64::new(c, 0.0),
        )
    });
    JointKet::from_amplitudes(entries)?.normalize()
}

pub fn build_source_state(source: &SourceSpec) -> Result<JointKet> {
    match source.kind {
        SourceKind::Spdc => build_spdc_state(source),
        SourceKind::GenericTwoPath => {
            source.validate()?;
            marked_reference_state(source.l_max, 0.0)
        }
    }
}

/// (|H⟩_A|ℓ⟩_B + e^{iδ}|V⟩_A|−ℓ⟩_B)/√2 with photon A at ℓ = 0 and photon B
/// horizontal.
pub fn marked_reference_state(l: i32, delta: f64) -> Result<JointKet> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    JointKet::from_amplitudes([
        (JointLabel::new(Mode::new(Pol::H, 0), Mode::new(Pol::H, l)), C64::new(s, 0.0)),
        (JointLabel::new(Mode::new(Pol::V, 0), Mode::new(Pol::H, -l)), C64::from_polar(s, delta)),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountingModel {
    /// Rate of pairs surviving the pipeline post-selection, pairs/s.
    /// Detector efficiency is folded in here.
    pub pair_rate: f64,
    pub integration_time: f64,
    pub gate: f64,
    pub singles_rate_a: f64,
    pub singles_rate_b: f64,
    pub rng_seed: u64,
}

impl Default for CountingModel {
    fn default() -> Self {
        CountingModel {
            pair_rate: 1000.0,
            integration_time: 5.0,
            gate: 25e-9,
            singles_rate_a: 0.0,
            singles_rate_b: 0.0,
            rng_seed: 0,
        }
    }
}

impl CountingModel {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("pair_rate", self.pair_rate),
            ("integration_time", self.integration_time),
            ("singles_a", self.singles_rate_a),
            ("singles_b", self.singles_rate_b),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("{v} must be ≥ 0")));
            }
        }
        if !(self.gate.is_finite() && self.gate > 0.0) {
            return Err(Error::invalid("gate", "must be > 0"));
        }
        Ok(())
    }

    /// Mean accidental coincidences per integration window, S_A·S_B·τ·T.
    pub fn accidentals(&self) -> f64 {
        self.singles_rate_a * self.singles_rate_b * self.gate * self.integration_time
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: SourceSpec,
    pub elements_a: Vec<ElementSpec>,
    pub elements_b: Vec<ElementSpec>,
    pub analyzer_a: PolarizerSpec,
    pub analyzer_b: HologramSpec,
    pub counting: CountingModel,
}

impl ExperimentConfig {
    pub fn new(
        source: SourceSpec,
        elements_a: Vec<ElementSpec>,
        elements_b: Vec<ElementSpec>,
        analyzer_a: PolarizerSpec,
        analyzer_b: HologramSpec,
        counting: CountingModel,
    ) -> Result<Self> {
        let cfg = ExperimentConfig {
            source,
            elements_a,
            elements_b,
            analyzer_a,
            analyzer_b,
            counting,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        for (arm, list) in [(Arm::A, &self.elements_a), (Arm::B, &self.elements_b)] {
            let mut delays = 0;
            for el in list {
                el.validate()?;
                if el.arm() != arm {
                    return Err(Error::invalid("arm", format!("{} listed on arm {arm} targets arm {}", el.name(), el.arm())));
                }
                if matches!(el, ElementSpec::Delay(_)) {
                    delays += 1;
                }
            }
            if delays > 1 {
                return Err(Error::invalid("delay", format!("more than one delay on arm {arm}")));
            }
        }
        self.analyzer_a.validate()?;
        if self.analyzer_a.arm != Arm::A {
            return Err(Error::invalid("analyzer_a", "polarizer analyzer must sit on arm A"));
        }
        self.analyzer_b.validate()?;
        if self.analyzer_b.arm != Arm::B {
            return Err(Error::invalid("analyzer_b", "hologram analyzer must sit on arm B"));
        }
        self.counting.validate()
    }

    /// The spin-orbit eraser: flat SPDC source with L_max = 1, a q = 1/2
    /// plate, single-mode fiber and quarter-wave plate at π/4 on arm A,
    /// polarizer analyzer on A and an ideal ℓ = 1 sector hologram on B.
    pub fn spin_orbit_eraser() -> Self {
        ExperimentConfig {
            source: SourceSpec::spdc(1, Spectrum::Flat),
            elements_a: vec![
                ElementSpec::QPlate(QPlateSpec { q: 0.5, arm: Arm::A }),
                ElementSpec::Fiber(FiberSpec::new(Arm::A)),
                ElementSpec::WavePlate(WavePlateSpec {
                    kind: WavePlateKind::Quarter,
                    fast_axis: std::f64::consts::FRAC_PI_4,
                    arm: Arm::A,
                }),
            ],
            elements_b: Vec::new(),
            analyzer_a: PolarizerSpec::ideal(0.0, Arm::A),
            analyzer_b: HologramSpec {
                l: 1,
                theta: 0.0,
                mode: HologramMode::Ideal,
                arm: Arm::B,
            },
            counting: CountingModel::default(),
        }
    }

    pub fn with_extinction(mut self, extinction: f64) -> Self {
        self.analyzer_a.extinction = extinction;
        self
    }

    /// Adds (or replaces) the delay on arm A.
    pub fn with_delay_a(mut self, extra_path: f64) -> Result<Self> {
        self.elements_a.retain(|e| !matches!(e, ElementSpec::Delay(_)));
        self.elements_a.push(ElementSpec::Delay(DelaySpec::new(extra_path, Arm::A)?));
        Ok(self)
    }

    /// Total detection delay of `arm`, seconds.
    pub fn delay(&self, arm: Arm) -> f64 {
        let list = match arm {
            Arm::A => &self.elements_a,
            Arm::B => &self.elements_b,
        };
        list.iter()
            .filter_map(|e| match e {
                ElementSpec::Delay(d) => Some(d.seconds()),
                _ => None,
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub state: JointKet,
    pub cumulative_probability: f64,
}

/// Runs the source through arm A's elements and then arm B's, in order.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let mut state = build_source_state(&config.source)?;
    for (arm, list) in [(Arm::A, &config.elements_a), (Arm::B, &config.elements_b)] {
        for (index, el) in list.iter().enumerate() {
            let Some(op) = el.operator()? else { continue };
            if op.is_unitary() {
                state = state.apply_local(&op, arm)?;
            } else {
                let step = state.apply_kraus(&op, arm)?;
                state = step.state.ok_or(Error::Extinguished {
                    arm,
                    index,
                    element: el.name(),
                })?;
            }
        }
    }
    Ok(PipelineOutput {
        cumulative_probability: state.norm_tracked(),
        state,
    })
}

/// Largest |ℓ| arm `arm` can reach: the source support plus every q-plate
/// shift on that arm.
fn oam_reach(config: &ExperimentConfig, arm: Arm) -> Result<i32> {
    let list = match arm {
        Arm::A => &config.elements_a,
        Arm::B => &config.elements_b,
    };
    let mut reach = config.source.l_max;
    for el in list {
        if let ElementSpec::QPlate(q) = el {
            reach += q.shift()?.abs();
        }
    }
    Ok(reach.min(L_CAP))
}

/// The pipeline as a composition of density-matrix channels over a
/// product basis wide enough for every reachable mode. Slower than
/// [`run_pipeline`]; meant as an independent cross-check.
pub fn run_density_pipeline(config: &ExperimentConfig) -> Result<(DensityMatrix, f64)> {
    config.validate()?;
    let modes = |reach: i32| -> Vec<Mode> { (-reach..=reach).flat_map(|l| Pol::ALL.map(|p| Mode::new(p, l))).collect() };
    let basis = DensityMatrix::product_basis(&modes(oam_reach(config, Arm::A)?), &modes(oam_reach(config, Arm::B)?));
    let mut rho = DensityMatrix::from_ket_in_basis(&build_source_state(&config.source)?, basis)?;
    let mut p = 1.0;
    for (arm, list) in [(Arm::A, &config.elements_a), (Arm::B, &config.elements_b)] {
        for (index, el) in list.iter().enumerate() {
            let Some(op) = el.operator()? else { continue };
            let (next, step) = rho.evolve_local(&op, arm).map_err(|e| match e {
                Error::NullOutcome { .. } => Error::Extinguished {
                    arm,
                    index,
                    element: el.name(),
                },
                other => other,
            })?;
            rho = next;
            p *= step;
        }
    }
    Ok((rho, p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coincidence {
    /// |⟨θ|_B⟨α|_A ψ⟩|² (with the analyzers' imperfections).
    pub joint: f64,
    /// `joint` divided by the arm-A analyzer probability.
    pub conditional: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
}

/// Coincidence statistics of the normalized `state` behind the two
/// analyzers.
pub fn coincidence_for_state(state: &JointKet, analyzer_a: &PolarizerSpec, analyzer_b: &HologramSpec) -> Result<Coincidence> {
    let norm = state.norm_sqr();
    let after_a = state.apply_local(&polarizer_operator(analyzer_a), Arm::A)?;
    let marginal_a = after_a.norm_sqr() / norm;
    let holo = sector_projector(analyzer_b)?;
    let marginal_b = state.apply_local(&holo, Arm::B)?.norm_sqr() / norm;
    if marginal_a < NULL_PROBABILITY {
        return Err(Error::NullOutcome { stage: "arm A analyzer" });
    }
    let joint = after_a.apply_local(&holo, Arm::B)?.norm_sqr() / norm;
    Ok(Coincidence {
        joint,
        conditional: joint / marginal_a,
        marginal_a,
        marginal_b,
    })
}

pub fn coincidence_probability(config: &ExperimentConfig, alpha: f64, theta: f64) -> Result<Coincidence> {
    let out = run_pipeline(config)?;
    coincidence_for_state(&out.state, &config.analyzer_a.at(alpha), &config.analyzer_b.at(theta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementOrder {
    AFirst,
    BFirst,
}

/// Conditional coincidence probability with the two analyzer projections
/// applied as sequential measurements in `order`.
pub fn causal_order_probability(config: &ExperimentConfig, alpha: f64, theta: f64, order: MeasurementOrder) -> Result<f64> {
    let state = run_pipeline(config)?.state;
    let pol = polarizer_operator(&config.analyzer_a.at(alpha));
    let holo = sector_projector(&config.analyzer_b.at(theta))?;
    match order {
        MeasurementOrder::AFirst => {
            let a = state.apply_kraus(&pol, Arm::A)?;
            let Some(sa) = a.state else {
                return Err(Error::NullOutcome { stage: "arm A analyzer" });
            };
            Ok(sa.apply_kraus(&holo, Arm::B)?.probability)
        }
        MeasurementOrder::BFirst => {
            let b = state.apply_kraus(&holo, Arm::B)?;
            let p_a = state.apply_local(&pol, Arm::A)?.norm_sqr() / state.norm_sqr();
            if p_a < NULL_PROBABILITY {
                return Err(Error::NullOutcome { stage: "arm A analyzer" });
            }
            let Some(sb) = b.state else { return Ok(0.0) };
            let a_given_b = sb.apply_kraus(&pol, Arm::A)?.probability;
            Ok(b.probability * a_given_b / p_a)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanVariable {
    Theta,
    Alpha,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSeries {
    pub variable: ScanVariable,
    /// Value of the angle that is not scanned.
    pub fixed: f64,
    pub settings: Vec<f64>,
    pub joint: Vec<f64>,
    pub conditional: Vec<f64>,
    pub counts: Option<Vec<u64>>,
    pub fit: Option<FringeFit>,
}

impl ScanSeries {
    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    /// Values a fit should use: counts when sampled, otherwise the
    /// conditional probabilities.
    pub fn fit_values(&self) -> Vec<f64> {
        match &self.counts {
            Some(c) => c.iter().map(|&n| n as f64).collect(),
            None => self.conditional.clone(),
        }
    }
}

/// `n` evenly spaced points on [start, stop) (or [start, stop] when
/// `inclusive`).
pub fn linspace(start: f64, stop: f64, n: usize, inclusive: bool) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![start];
    }
    let div = if inclusive { (n - 1) as f64 } else { n as f64 };
    let step = (stop - start) / div;
    (0..n).map(|i| start + step * i as f64).collect()
}

/// Exact probabilities over `settings` with the other angle held at `fixed`.
pub fn scan(config: &ExperimentConfig, variable: ScanVariable, fixed: f64, settings: &[f64]) -> Result<ScanSeries> {
    let state = run_pipeline(config)?.state;
    scan_state(&state, config, variable, fixed, settings)
}

/// Like [`scan`] for a state that already went through the pipeline.
pub fn scan_state(
    state: &JointKet,
    config: &ExperimentConfig,
    variable: ScanVariable,
    fixed: f64,
    settings: &[f64],
) -> Result<ScanSeries> {
    let points: Vec<Coincidence> = settings
        .par_iter()
        .map(|&s| {
            let (alpha, theta) = match variable {
                ScanVariable::Theta => (fixed, s),
                ScanVariable::Alpha => (s, fixed),
            };
            coincidence_for_state(state, &config.analyzer_a.at(alpha), &config.analyzer_b.at(theta))
        })
        .collect::<Result<_>>()?;
    Ok(ScanSeries {
        variable,
        fixed,
        settings: settings.to_vec(),
        joint: points.iter().map(|c| c.joint).collect(),
        conditional: points.iter().map(|c| c.conditional).collect(),
        counts: None,
        fit: None,
    })
}

fn poisson_draw<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// Samples counts for every point with repetition index 0.
pub fn simulate_counts(config: &ExperimentConfig, series: &ScanSeries) -> ScanSeries {
    simulate_counts_repetition(config, series, 0)
}

/// counts[i] ~ Poisson(pair_rate·T·joint[i] + S_A·S_B·τ·T), drawn from the
/// stream keyed by (seed, i, repetition).
pub fn simulate_counts_repetition(config: &ExperimentConfig, series: &ScanSeries, repetition: u64) -> ScanSeries {
    let cm = &config.counting;
    let acc = cm.accidentals();
    let counts: Vec<u64> = series
        .joint
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mean = cm.pair_rate * cm.integration_time * p + acc;
            let mut rng = point_stream(cm.rng_seed, i as u64, repetition);
            poisson_draw(&mut rng, mean)
        })
        .collect();
    ScanSeries {
        counts: Some(counts),
        ..series.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventTag {
    TruePair,
    Accidental,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventRecord {
    pub arm: Arm,
    pub timestamp: f64,
    pub tag: EventTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    /// All detector clicks, ordered by time.
    pub events: Vec<EventRecord>,
    pub coincidences: u64,
    /// Coincidences pairing the two photons of one emitted pair.
    pub true_coincidences: u64,
    pub pairs_emitted: u64,
    pub clicks_a: u64,
    pub clicks_b: u64,
    pub delay_a: f64,
    pub delay_b: f64,
    pub duration: f64,
    pub gate: f64,
}

impl Timeline {
    /// Expected accidental coincidences for uncorrelated click streams with
    /// the observed totals under the |t_A − t_B| ≤ gate rule.
    pub fn accidental_floor(&self) -> f64 {
        self.clicks_a as f64 * self.clicks_b as f64 * 2.0 * self.gate / self.duration
    }
}

pub fn simulate_timeline(config: &ExperimentConfig, alpha: f64, theta: f64, duration: f64) -> Result<Timeline> {
    simulate_timeline_repetition(config, alpha, theta, duration, 0)
}

/// Event-level simulation over `duration` seconds.
///
/// Pairs are emitted as a Poisson process at `pair_rate`. Each pair yields
/// clicks on both arms with the joint probability, a lone A or B click with
/// the remaining marginal probability, or nothing. Arm delays shift click
/// times; uncorrelated singles are added at the configured rates. A click
/// pair counts as a coincidence when |t_A − t_B| ≤ gate, each click used at
/// most once.
pub fn simulate_timeline_repetition(
    config: &ExperimentConfig,
    alpha: f64,
    theta: f64,
    duration: f64,
    repetition: u64,
) -> Result<Timeline> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid("duration", "must be > 0"));
    }
    let c = coincidence_probability(config, alpha, theta)?;
    let cm = &config.counting;
    let delay_a = config.delay(Arm::A);
    let delay_b = config.delay(Arm::B);
    let mut rng = point_stream(cm.rng_seed, TIMELINE_STREAM, repetition);

    let only_a = (c.marginal_a - c.joint).max(0.0);
    let only_b = (c.marginal_b - c.joint).max(0.0);
    // (time, pair id) per arm
    let mut clicks_a: Vec<(f64, Option<u64>)> = Vec::new();
    let mut clicks_b: Vec<(f64, Option<u64>)> = Vec::new();
    let mut pairs = 0u64;
    if cm.pair_rate > 0.0 {
        let gap = Exp::new(cm.pair_rate).expect("positive rate");
        let mut t = gap.sample(&mut rng);
        while t < duration {
            let u: f64 = rng.random();
            let (hit_a, hit_b) = if u < c.joint {
                (true, true)
            } else if u < c.joint + only_a {
                (true, false)
            } else if u < c.joint + only_a + only_b {
                (false, true)
            } else {
                (false, false)
            };
            if hit_a {
                clicks_a.push((t + delay_a, Some(pairs)));
            }
            if hit_b {
                clicks_b.push((t + delay_b, Some(pairs)));
            }
            pairs += 1;
            t += gap.sample(&mut rng);
        }
    }
    for (rate, clicks) in [(cm.singles_rate_a, &mut clicks_a), (cm.singles_rate_b, &mut clicks_b)] {
        if rate > 0.0 {
            let gap = Exp::new(rate).expect("positive rate");
            let mut t = gap.sample(&mut rng);
            while t < duration {
                clicks.push((t, None));
                t += gap.sample(&mut rng);
            }
        }
    }
    clicks_a.sort_by(|x, y| x.0.total_cmp(&y.0));
    clicks_b.sort_by(|x, y| x.0.total_cmp(&y.0));

    let (mut i, mut j) = (0, 0);
    let (mut coincidences, mut true_coincidences) = (0u64, 0u64);
    while i < clicks_a.len() && j < clicks_b.len() {
        let (ta, pa) = clicks_a[i];
        let (tb, pb) = clicks_b[j];
        if tb < ta - cm.gate {
            j += 1;
        } else if tb > ta + cm.gate {
            i += 1;
        } else {
            coincidences += 1;
            if pa.is_some() && pa == pb {
                true_coincidences += 1;
            }
            i += 1;
            j += 1;
        }
    }

    let tag = |p: Option<u64>| if p.is_some() { EventTag::TruePair } else { EventTag::Accidental };
    let mut events: Vec<EventRecord> = clicks_a
        .iter()
        .map(|&(t, p)| EventRecord { arm: Arm::A, timestamp: t, tag: tag(p) })
        .chain(clicks_b.iter().map(|&(t, p)| EventRecord { arm: Arm::B, timestamp: t, tag: tag(p) }))
        .collect();
    events.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));

    Ok(Timeline {
        events,
        coincidences,
        true_coincidences,
        pairs_emitted: pairs,
        clicks_a: clicks_a.len() as u64,
        clicks_b: clicks_b.len() as u64,
        delay_a,
        delay_b,
        duration,
        gate: cm.gate,
    })
}
