//! TOML experiment documents.
//!
//! All angles are radians. Missing keys take the documented defaults and
//! unknown keys are rejected. [`emit`] writes the fully defaulted form, so
//! `emit(parse(emit(doc)))` reproduces `emit(doc)` byte for byte.

use std::f64::consts::{FRAC_PI_4, PI};

use oam_eraser::elements::{
    DelaySpec, ElementSpec, FiberSpec, HologramMode, HologramSpec, PolarizerSpec, QPlateSpec, WavePlateKind,
    WavePlateSpec,
};
use oam_eraser::experiment::{CountingModel, ExperimentConfig, SourceKind, SourceSpec, Spectrum};
use oam_eraser::hilbert::Arm;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub analyzers: AnalyzerSection,
    #[serde(default)]
    pub counting: CountingSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub arm_a: Vec<ElementEntry>,
    #[serde(default)]
    pub arm_b: Vec<ElementEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKindName {
    Spdc,
    TwoPath,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumName {
    Flat,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default = "SourceSection::default_kind")]
    pub kind: SourceKindName,
    #[serde(default = "SourceSection::default_l_max")]
    pub l_max: i32,
    #[serde(default = "SourceSection::default_spectrum")]
    pub spectrum: SpectrumName,
    /// Gaussian spectrum width; required for `spectrum = "gaussian"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

impl SourceSection {
    fn default_kind() -> SourceKindName {
        SourceKindName::Spdc
    }
    fn default_l_max() -> i32 {
        1
    }
    fn default_spectrum() -> SpectrumName {
        SpectrumName::Flat
    }
}

impl Default for SourceSection {
    fn default() -> Self {
        SourceSection {
            kind: Self::default_kind(),
            l_max: Self::default_l_max(),
            spectrum: Self::default_spectrum(),
            width: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateKindName {
    Quarter,
    Half,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HologramModeName {
    #[default]
    Ideal,
    Binary,
}

impl From<HologramModeName> for HologramMode {
    fn from(m: HologramModeName) -> Self {
        match m {
            HologramModeName::Ideal => HologramMode::Ideal,
            HologramModeName::Binary => HologramMode::Binary,
        }
    }
}

/// One optical element, tagged by `type`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementEntry {
    Qplate {
        q: f64,
    },
    Waveplate {
        kind: PlateKindName,
        fast_axis: f64,
    },
    Polarizer {
        alpha: f64,
        #[serde(default)]
        extinction: f64,
    },
    Fiber {
        #[serde(default)]
        accepted_l: i32,
    },
    Hologram {
        l: i32,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        mode: HologramModeName,
    },
    Delay {
        extra_path: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSection {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub extinction: f64,
    #[serde(default = "AnalyzerSection::default_l")]
    pub hologram_l: i32,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub mode: HologramModeName,
}

impl AnalyzerSection {
    fn default_l() -> i32 {
        1
    }
}

impl Default for AnalyzerSection {
    fn default() -> Self {
        AnalyzerSection {
            alpha: 0.0,
            extinction: 0.0,
            hologram_l: 1,
            theta: 0.0,
            mode: HologramModeName::Ideal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingSection {
    #[serde(default = "CountingSection::default_pair_rate")]
    pub pair_rate: f64,
    #[serde(default = "CountingSection::default_integration_time")]
    pub integration_time: f64,
    #[serde(default = "CountingSection::default_gate")]
    pub gate: f64,
    /// Extra free-space path on arm A, metres.
    #[serde(default)]
    pub delay_m: f64,
    #[serde(default)]
    pub singles_a: f64,
    #[serde(default)]
    pub singles_b: f64,
    #[serde(default)]
    pub seed: u64,
}

impl CountingSection {
    fn default_pair_rate() -> f64 {
        CountingModel::default().pair_rate
    }
    fn default_integration_time() -> f64 {
        5.0
    }
    fn default_gate() -> f64 {
        25e-9
    }
}

impl Default for CountingSection {
    fn default() -> Self {
        CountingSection {
            pair_rate: Self::default_pair_rate(),
            integration_time: Self::default_integration_time(),
            gate: Self::default_gate(),
            delay_m: 0.0,
            singles_a: 0.0,
            singles_b: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariableName {
    #[default]
    Theta,
    Alpha,
    Grid,
}

/// Scan range. For `alpha` and `grid`, start/stop/points describe α and
/// `theta_points` samples θ over one period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default)]
    pub variable: ScanVariableName,
    #[serde(default)]
    pub start: f64,
    /// See [`ScanSection::range`] for the default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default = "ScanSection::default_points")]
    pub points: usize,
    /// Whether `stop` itself is sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<bool>,
    /// θ samples per α value for visibility fits.
    #[serde(default = "ScanSection::default_theta_points")]
    pub theta_points: usize,
}

impl ScanSection {
    fn default_points() -> usize {
        36
    }
    fn default_theta_points() -> usize {
        72
    }

    /// (start, stop, endpoint) for a scan over `variable`. Unset `stop`
    /// defaults to 2π for θ, π/4 for α and π for a grid; unset `endpoint`
    /// is false for θ (a full period) and true otherwise.
    pub fn range(&self, variable: ScanVariableName) -> (f64, f64, bool) {
        let (stop, endpoint) = match variable {
            ScanVariableName::Theta => (2.0 * PI, false),
            ScanVariableName::Alpha => (FRAC_PI_4, true),
            ScanVariableName::Grid => (PI, true),
        };
        (self.start, self.stop.unwrap_or(stop), self.endpoint.unwrap_or(endpoint))
    }
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            variable: ScanVariableName::Theta,
            start: 0.0,
            stop: None,
            points: Self::default_points(),
            endpoint: None,
            theta_points: Self::default_theta_points(),
        }
    }
}

fn config_error(key: impl Into<String>, message: impl std::fmt::Display) -> CliError {
    CliError::Config {
        key: key.into(),
        message: message.to_string(),
    }
}

/// Parses and validates a document; defaults are filled in.
pub fn parse_document(text: &str) -> Result<ConfigDocument, CliError> {
    let doc: ConfigDocument = toml::from_str(text).map_err(|e| {
        let key = match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].lines().count().max(1);
                format!("line {line}")
            }
            None => "document".to_string(),
        };
        config_error(key, e.message())
    })?;
    doc.to_experiment()?;
    doc.validate_scan()?;
    Ok(doc)
}

/// Parses straight to a validated experiment.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    parse_document(text)?.to_experiment()
}

/// Canonical text form of a document.
pub fn emit(doc: &ConfigDocument) -> String {
    toml::to_string(doc).expect("config document always serializes")
}

impl ConfigDocument {
    pub fn to_experiment(&self) -> Result<ExperimentConfig, CliError> {
        let s = &self.source;
        let spectrum = match (s.spectrum, s.width) {
            (SpectrumName::Flat, _) => Spectrum::Flat,
            (SpectrumName::Gaussian, Some(width)) => Spectrum::Gaussian { width },
            (SpectrumName::Gaussian, None) => return Err(config_error("source.width", "required for a gaussian spectrum")),
        };
        let source = SourceSpec {
            kind: match s.kind {
                SourceKindName::Spdc => SourceKind::Spdc,
                SourceKindName::TwoPath => SourceKind::GenericTwoPath,
            },
            l_max: s.l_max,
            spectrum,
        };
        source.validate().map_err(|e| config_error("source", e))?;

        let mut elements_a = elements(&self.arm_a, Arm::A, "arm_a")?;
        let elements_b = elements(&self.arm_b, Arm::B, "arm_b")?;
        if self.counting.delay_m != 0.0 {
            if elements_a.iter().any(|e| matches!(e, ElementSpec::Delay(_))) {
                return Err(config_error("counting.delay_m", "arm_a already lists a delay"));
            }
            let d = DelaySpec::new(self.counting.delay_m, Arm::A).map_err(|e| config_error("counting.delay_m", e))?;
            elements_a.push(ElementSpec::Delay(d));
        }

        let an = &self.analyzers;
        let analyzer_a = PolarizerSpec::new(an.alpha, an.extinction, Arm::A).map_err(|e| config_error("analyzers.extinction", e))?;
        let analyzer_b = HologramSpec::new(an.hologram_l, an.theta, an.mode.into(), Arm::B)
            .map_err(|e| config_error("analyzers.hologram_l", e))?;

        let c = &self.counting;
        let counting = CountingModel {
            pair_rate: c.pair_rate,
            integration_time: c.integration_time,
            gate: c.gate,
            singles_rate_a: c.singles_a,
            singles_rate_b: c.singles_b,
            rng_seed: c.seed,
        };
        counting.validate().map_err(|e| config_error("counting", e))?;
        ExperimentConfig::new(source, elements_a, elements_b, analyzer_a, analyzer_b, counting)
            .map_err(|e| config_error("document", e))
    }

    fn validate_scan(&self) -> Result<(), CliError> {
        let s = &self.scan;
        if s.points == 0 {
            return Err(config_error("scan.points", "must be ≥ 1"));
        }
        if s.theta_points < 4 {
            return Err(config_error("scan.theta_points", "a fringe fit needs ≥ 4 points"));
        }
        if !(s.start.is_finite() && s.stop.is_none_or(f64::is_finite)) {
            return Err(config_error("scan", "start and stop must be finite"));
        }
        Ok(())
    }
}

fn elements(entries: &[ElementEntry], arm: Arm, section: &str) -> Result<Vec<ElementSpec>, CliError> {
    entries
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            let key = |field: &str| format!("{section}[{i}].{field}");
            let spec = match *entry {
                ElementEntry::Qplate { q } => {
                    let s = QPlateSpec::new(q, arm).map_err(|e| config_error(key("q"), e))?;
                    s.shift().map_err(|e| config_error(key("q"), e))?;
                    ElementSpec::QPlate(s)
                }
                ElementEntry::Waveplate { kind, fast_axis } => {
                    let kind = match kind {
                        PlateKindName::Quarter => WavePlateKind::Quarter,
                        PlateKindName::Half => WavePlateKind::Half,
                    };
                    ElementSpec::WavePlate(WavePlateSpec::new(kind, fast_axis, arm).map_err(|e| config_error(key("fast_axis"), e))?)
                }
                ElementEntry::Polarizer { alpha, extinction } => ElementSpec::Polarizer(
                    PolarizerSpec::new(alpha, extinction, arm).map_err(|e| config_error(key("extinction"), e))?,
                ),
                ElementEntry::Fiber { accepted_l } => ElementSpec::Fiber(FiberSpec { arm, accepted_l }),
                ElementEntry::Hologram { l, theta, mode } => ElementSpec::Hologram(
                    HologramSpec::new(l, theta, mode.into(), arm).map_err(|e| config_error(key("l"), e))?,
                ),
                ElementEntry::Delay { extra_path } => {
                    ElementSpec::Delay(DelaySpec::new(extra_path, arm).map_err(|e| config_error(key("extra_path"), e))?)
                }
            };
            spec.validate().map_err(|e| config_error(format!("{section}[{i}]"), e))?;
            Ok(spec)
        })
        .collect()
}

/// Document for the spin-orbit eraser setup.
pub fn canonical_document() -> ConfigDocument {
    ConfigDocument {
        source: SourceSection::default(),
        analyzers: AnalyzerSection::default(),
        counting: CountingSection::default(),
        scan: ScanSection::default(),
        arm_a: vec![
            ElementEntry::Qplate { q: 0.5 },
            ElementEntry::Fiber { accepted_l: 0 },
            ElementEntry::Waveplate {
                kind: PlateKindName::Quarter,
                fast_axis: FRAC_PI_4,
            },
        ],
        arm_b: Vec::new(),
    }
}
