//! Fringe analytics: sinusoid fits, visibility, which-path
//! distinguishability, complementarity and intensity-pattern rendering.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix3, Vector3};

use crate::elements::{sector_projector, HologramMode, HologramSpec};
use crate::error::{Error, Result};
use crate::experiment::{linspace, ScanSeries};
use crate::hilbert::{trace_norm, Arm, Coord, JointKet, Keep, C64};

/// Tolerance on V² + D² ≤ 1.
pub const COMPLEMENTARITY_TOL: f64 = 1e-9;

/// p(θ) = offset + amplitude·cos(2θ + phase)
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub residual_rms: f64,
}

impl FringeFit {
    pub fn eval(&self, theta: f64) -> f64 {
        self.offset + self.amplitude * (2.0 * theta + self.phase).cos()
    }

    /// (max − min)/(max + min) of the fitted curve.
    pub fn visibility(&self) -> f64 {
        if self.offset <= 0.0 {
            return 0.0;
        }
        (self.amplitude / self.offset).clamp(0.0, 1.0)
    }
}

/// Linear least squares on the basis {1, cos 2θ, −sin 2θ}.
pub fn fit_fringe(settings: &[f64], values: &[f64]) -> Result<FringeFit> {
    if settings.len() != values.len() {
        return Err(Error::DimensionMismatch {
            left: settings.len(),
            right: values.len(),
        });
    }
    let mut distinct: Vec<f64> = settings.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::RankDeficient(format!("{} distinct settings, need 4", distinct.len())));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (&t, &y) in settings.iter().zip(values) {
        let row = Vector3::new(1.0, (2.0 * t).cos(), -(2.0 * t).sin());
        ata += row * row.transpose();
        atb += row * y;
    }
    let sv = ata.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smax == 0.0 || smin / smax < 1e-10 {
        return Err(Error::RankDeficient("settings do not resolve the 2θ harmonic".into()));
    }
    let x = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::RankDeficient("singular normal equations".into()))?;
    let offset = x[0];
    let mut amplitude = x[1].hypot(x[2]);
    let phase = x[2].atan2(x[1]);
    if amplitude > offset + 1e-9 {
        amplitude = offset.max(0.0);
    }
    let fit = FringeFit {
        offset,
        amplitude,
        phase,
        residual_rms: 0.0,
    };
    let ss: f64 = settings
        .iter()
        .zip(values)
        .map(|(&t, &y)| (y - fit.eval(t)).powi(2))
        .sum();
    Ok(FringeFit {
        residual_rms: (ss / settings.len() as f64).sqrt(),
        ..fit
    })
}

/// Fits counts when the series has them, else conditional probabilities.
pub fn fit_sinusoid(series: &ScanSeries) -> Result<FringeFit> {
    fit_fringe(&series.settings, &series.fit_values())
}

/// Michelson contrast. Uses the attached fit when present, raw extrema
/// otherwise.
pub fn visibility(series: &ScanSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::invalid("series", "visibility needs at least 2 points"));
    }
    let values = series.fit_values();
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::NoSignal);
    }
    if let Some(fit) = &series.fit {
        return Ok(fit.visibility());
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

/// |sin 2α|
pub fn theoretical_visibility(alpha: f64) -> f64 {
    (2.0 * alpha).sin().abs()
}

/// Which-path distinguishability of the paths |±ℓ⟩ on arm B, read out by
/// the whole of photon A as marker:
///
/// ```text
/// D = ‖p₊ρ₊ − p₋ρ₋‖₁ / (p₊ + p₋)
/// ```
///
/// where p±ρ± is the unnormalized state of A conditioned on path ±ℓ. For
/// equally weighted paths this is the trace distance of the two marker
/// states; a path with zero weight gives D = 1.
pub fn distinguishability(state: &JointKet, l: i32) -> Result<f64> {
    if l == 0 {
        return Err(Error::invalid("l", "paths need ℓ ≠ 0"));
    }
    let keep = Keep::ARM_A.union(Keep::B_OAM);
    let rho = state.reduced_density(keep)?;
    let marker_basis: Vec<Coord> = {
        let mut b: Vec<Coord> = rho
            .basis()
            .iter()
            .map(|c| Coord { b_l: None, ..*c })
            .collect();
        b.sort();
        b.dedup();
        b
    };
    let n = marker_basis.len();
    let block = |path: i32| {
        let idx: Vec<(usize, usize)> = rho
            .basis()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.b_l == Some(path))
            .map(|(i, c)| (i, marker_basis.binary_search(&Coord { b_l: None, ..*c }).expect("marker basis")))
            .collect();
        let mut m = nalgebra::DMatrix::<C64>::zeros(n, n);
        for &(i, a) in &idx {
            for &(j, b) in &idx {
                m[(a, b)] = rho.matrix()[(i, j)];
            }
        }
        m
    };
    let plus = block(l);
    let minus = block(-l);
    let weight = plus.trace().re + minus.trace().re;
    if weight < crate::hilbert::NULL_PROBABILITY {
        return Err(Error::NullOutcome { stage: "state has no weight on the ±ℓ paths" });
    }
    Ok((trace_norm(&(plus - minus)) / weight).clamp(0.0, 1.0))
}

/// Visibility of the arm-B fringes seen by an ideal sector hologram scanned
/// over θ with photon A left unmeasured.
pub fn path_visibility(state: &JointKet, l: i32) -> Result<f64> {
    let thetas = linspace(0.0, PI, 8, false);
    let probe = HologramSpec::new(l, 0.0, HologramMode::Ideal, Arm::B)?;
    let norm = state.norm_sqr();
    let values: Vec<f64> = thetas
        .iter()
        .map(|&t| Ok(state.apply_local(&sector_projector(&probe.at(t))?, Arm::B)?.norm_sqr() / norm))
        .collect::<Result<_>>()?;
    Ok(fit_fringe(&thetas, &values)?.visibility())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplementarityRecord {
    pub visibility: f64,
    pub distinguishability: f64,
    pub sum_of_squares: f64,
    /// Set when V² + D² exceeds 1 by more than the tolerance.
    pub violated: bool,
}

pub fn complementarity_check(visibility: f64, distinguishability: f64) -> Result<ComplementarityRecord> {
    for (name, v) in [("visibility", visibility), ("distinguishability", distinguishability)] {
        if !(v.is_finite() && (-COMPLEMENTARITY_TOL..=1.0 + COMPLEMENTARITY_TOL).contains(&v)) {
            return Err(Error::invalid(name, format!("{v} not in [0, 1]")));
        }
    }
    let sum_of_squares = visibility * visibility + distinguishability * distinguishability;
    Ok(ComplementarityRecord {
        visibility,
        distinguishability,
        sum_of_squares,
        violated: sum_of_squares > 1.0 + COMPLEMENTARITY_TOL,
    })
}

/// |Σ c_ℓ e^{iℓφ}|² on `grid_n` evenly spaced azimuths in [0, 2π).
pub fn azimuthal_intensity(modes: &[(i32, C64)], grid_n: usize) -> Vec<f64> {
    linspace(0.0, 2.0 * PI, grid_n, false)
        .into_iter()
        .map(|phi| {
            modes
                .iter()
                .map(|&(l, c)| c * C64::from_polar(1.0, f64::from(l) * phi))
                .sum::<C64>()
                .norm_sqr()
        })
        .collect()
}

/// Intensity of (|ℓ⟩ + e^{i·phase}|−ℓ⟩)/√2 over the azimuth:
/// I(φ) = 1 + cos(2ℓφ − phase), with 2|ℓ| lobes.
pub fn render_azimuthal_pattern(l: i32, phase: f64, grid_n: usize) -> Result<Vec<f64>> {
    let required = 4 * l.unsigned_abs() as usize + 1;
    if grid_n < required {
        return Err(Error::Undersampled { grid_n, required });
    }
    let s = FRAC_1_SQRT_2;
    Ok(azimuthal_intensity(&[(l, C64::new(s, 0.0)), (-l, C64::from_polar(s, phase))], grid_n))
}

/// Number of local maxima of a periodic sampled pattern, from sign changes
/// of its discrete derivative.
pub fn count_lobes(pattern: &[f64]) -> usize {
    let n = pattern.len();
    if n < 3 {
        return 0;
    }
    let scale = pattern.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let sign = |d: f64| {
        if d > 1e-12 * scale {
            1
        } else if d < -1e-12 * scale {
            -1
        } else {
            0
        }
    };
    let slopes: Vec<i32> = (0..n).map(|i| sign(pattern[(i + 1) % n] - pattern[i])).collect();
    // drop flat steps so that plateaus count once
    let nonflat: Vec<i32> = slopes.into_iter().filter(|&s| s != 0).collect();
    let m = nonflat.len();
    (0..m).filter(|&i| nonflat[i] > 0 && nonflat[(i + 1) % m] < 0).count()
}

/// Photon passing two marked paths with envelopes u₁, u₂ sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPathModel {
    /// ⟨m₁|m₂⟩
    pub marker_overlap: C64,
    pub relative_phase: f64,
    pub envelope_1: Vec<C64>,
    pub envelope_2: Vec<C64>,
}

impl TwoPathModel {
    /// Plane waves e^{ik_j x}/√2 on `grid`.
    pub fn plane_waves(grid: &[f64], k1: f64, k2: f64, marker_overlap: C64, relative_phase: f64) -> Self {
        let wave = |k: f64| grid.iter().map(|&x| C64::from_polar(FRAC_1_SQRT_2, k * x)).collect();
        TwoPathModel {
            marker_overlap,
            relative_phase,
            envelope_1: wave(k1),
            envelope_2: wave(k2),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.marker_overlap.norm() > 1.0 + 1e-12 {
            return Err(Error::invalid("marker_overlap", "|⟨m₁|m₂⟩| must be ≤ 1"));
        }
        if self.envelope_1.len() != self.envelope_2.len() {
            return Err(Error::DimensionMismatch {
                left: self.envelope_1.len(),
                right: self.envelope_2.len(),
            });
        }
        Ok(())
    }
}

/// I(x) = |u₁|² + |u₂|² + 2·Re(⟨m₁|m₂⟩·u₁*·u₂·e^{iφ})
pub fn two_path_pattern(model: &TwoPathModel) -> Result<Vec<f64>> {
    model.validate()?;
    let phase = C64::from_polar(1.0, model.relative_phase);
    Ok(model
        .envelope_1
        .iter()
        .zip(&model.envelope_2)
        .map(|(u1, u2)| u1.norm_sqr() + u2.norm_sqr() + 2.0 * (model.marker_overlap * u1.conj() * u2 * phase).re)
        .collect())
}

/// Unnormalized pattern of the path photon when the markers m₁, m₂ (Jones
/// vectors) are projected onto `onto`:
/// I(x) = |⟨onto|m₁⟩u₁ + ⟨onto|m₂⟩u₂e^{iφ}|².
pub fn conditional_pattern(model: &TwoPathModel, markers: ([C64; 2], [C64; 2]), onto: [C64; 2]) -> Result<Vec<f64>> {
    model.validate()?;
    let dot = |a: [C64; 2], b: [C64; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
    let w1 = dot(onto, markers.0);
    let w2 = dot(onto, markers.1) * C64::from_polar(1.0, model.relative_phase);
    Ok(model
        .envelope_1
        .iter()
        .zip(&model.envelope_2)
        .map(|(u1, u2)| (w1 * u1 + w2 * u2).norm_sqr())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{marked_reference_state, ScanVariable};
    use crate::hilbert::{JointLabel, Mode, Pol, PolState};

    fn series(settings: Vec<f64>, values: Vec<f64>) -> ScanSeries {
        ScanSeries {
            variable: ScanVariable::Theta,
            fixed: 0.0,
            joint: values.clone(),
            conditional: values,
            settings,
            counts: None,
            fit: None,
        }
    }

    #[test]
    fn constant_series_has_zero_visibility() {
        let s = series(linspace(0.0, PI, 10, false), vec![0.3; 10]);
        assert_eq!(visibility(&s).unwrap(), 0.0);
    }

    #[test]
    fn unit_contrast_sinusoid() {
        let t = linspace(0.0, 2.0 * PI, 100, false);
        let v: Vec<f64> = t.iter().map(|x| (1.0 + (2.0 * x).cos()) / 2.0).collect();
        let s = series(t, v);
        assert!((visibility(&s).unwrap() - 1.0).abs() < 1e-9);
        let fit = fit_sinusoid(&s).unwrap();
        assert!((fit.visibility() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn all_zero_series_has_no_signal() {
        let s = series(linspace(0.0, PI, 6, false), vec![0.0; 6]);
        assert_eq!(visibility(&s).unwrap_err(), Error::NoSignal);
    }

    #[test]
    fn exact_sinusoid_parameters_are_recovered() {
        let t = linspace(0.0, PI, 13, false);
        let v: Vec<f64> = t.iter().map(|x| 0.7 + 0.25 * (2.0 * x - 1.1).cos()).collect();
        let fit = fit_fringe(&t, &v).unwrap();
        assert!((fit.offset - 0.7).abs() < 1e-10);
        assert!((fit.amplitude - 0.25).abs() < 1e-10);
        assert!((fit.phase + 1.1).abs() < 1e-10);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        assert!(matches!(fit_fringe(&[0.5; 8], &[1.0; 8]), Err(Error::RankDeficient(_))));
        // distinct settings that all alias onto the same 2θ phase
        let t = [0.0, PI, 2.0 * PI, 3.0 * PI, 4.0 * PI];
        assert!(matches!(fit_fringe(&t, &[1.0; 5]), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn theoretical_visibility_values() {
        assert_eq!(theoretical_visibility(0.0), 0.0);
        assert!((theoretical_visibility(PI / 4.0) - 1.0).abs() < 1e-15);
        assert!((theoretical_visibility(PI / 8.0) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn marked_state_is_fully_distinguishable() {
        let k = marked_reference_state(1, PI / 2.0).unwrap();
        assert!((distinguishability(&k, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(path_visibility(&k, 1).unwrap() < 1e-12);
    }

    fn b_superposition_with_marker(marker_plus: PolState, marker_minus: PolState, beta: f64) -> JointKet {
        let (c, s) = (beta.cos(), beta.sin());
        let mut e = Vec::new();
        for p in Pol::ALL {
            e.push((JointLabel::new(Mode::new(p, 0), Mode::new(Pol::H, 2)), marker_plus.jones()[p.index()] * c));
            e.push((JointLabel::new(Mode::new(p, 0), Mode::new(Pol::H, -2)), marker_minus.jones()[p.index()] * s));
        }
        JointKet::from_amplitudes(e).unwrap()
    }

    #[test]
    fn unmarked_paths_are_indistinguishable() {
        let k = b_superposition_with_marker(PolState::H, PolState::H, PI / 4.0);
        assert!(distinguishability(&k, 2).unwrap() < 1e-12);
        assert!((path_visibility(&k, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partially_marked_paths() {
        let k = b_superposition_with_marker(PolState::H, PolState::D, PI / 4.0);
        assert!((distinguishability(&k, 2).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn missing_path_is_fully_distinguishable() {
        let k = b_superposition_with_marker(PolState::H, PolState::H, 0.0);
        assert!((distinguishability(&k, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complementarity_records() {
        let r = complementarity_check(1.0, 0.0).unwrap();
        assert_eq!(r.sum_of_squares, 1.0);
        assert!(!r.violated);
        let r = complementarity_check(0.0, 1.0).unwrap();
        assert!(!r.violated);
        let r = complementarity_check(0.6, 0.6).unwrap();
        assert!((r.sum_of_squares - 0.72).abs() < 1e-15);
        assert!(!r.violated);
        assert!(complementarity_check(0.9, 0.9).unwrap().violated);
        assert!(complementarity_check(1.2, 0.0).is_err());
        assert!(complementarity_check(0.5, -0.1).is_err());
    }

    #[test]
    fn azimuthal_patterns() {
        let p = render_azimuthal_pattern(1, 0.0, 360).unwrap();
        assert_eq!(count_lobes(&p), 2);
        let p = render_azimuthal_pattern(5, 0.3, 720).unwrap();
        assert_eq!(count_lobes(&p), 10);
        let max = p.iter().copied().fold(0.0, f64::max);
        assert!(max <= 2.0 + 1e-12);
        let eigen = azimuthal_intensity(&[(3, C64::new(1.0, 0.0))], 90);
        assert!(eigen.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(count_lobes(&eigen), 0);
        assert!(matches!(render_azimuthal_pattern(4, 0.0, 16), Err(Error::Undersampled { required: 17, .. })));
    }

    #[test]
    fn two_path_fringes_and_erasure() {
        let grid = linspace(-5.0, 5.0, 201, true);
        let unmarked = TwoPathModel::plane_waves(&grid, 1.5, -1.5, C64::new(1.0, 0.0), 0.0);
        let i = two_path_pattern(&unmarked).unwrap();
        let (max, min) = i.iter().fold((0.0f64, f64::INFINITY), |(a, b), &v| (a.max(v), b.min(v)));
        assert!(((max - min) / (max + min) - 1.0).abs() < 1e-3);

        let marked = TwoPathModel { marker_overlap: C64::new(0.0, 0.0), ..unmarked.clone() };
        let flat = two_path_pattern(&marked).unwrap();
        assert!(flat.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let hv = (PolState::H.jones(), PolState::V.jones());
        let d = conditional_pattern(&marked, hv, PolState::D.jones()).unwrap();
        let a = conditional_pattern(&marked, hv, PolState::A.jones()).unwrap();
        for k in 0..grid.len() {
            assert!((d[k] + a[k] - flat[k]).abs() < 1e-12);
        }
        // A-projection equals D-projection with the fringe phase shifted by π
        let shifted = TwoPathModel { relative_phase: PI, ..marked.clone() };
        let d_shift = conditional_pattern(&shifted, hv, PolState::D.jones()).unwrap();
        for k in 0..grid.len() {
            assert!((d_shift[k] - a[k]).abs() < 1e-12);
        }
    }
}
