//! Optical element catalog. Every element compiles to a [`LocalOperator`]
//! on one arm, except delays, which only carry timing metadata.
//!
//! Wave plates use the symmetric-phase retarder
//!
//! ```text
//! J(θ, Γ) = cos(Γ/2)·1 + i·sin(Γ/2)·[[cos 2θ,  sin 2θ],
//!                                    [sin 2θ, −cos 2θ]]
//! ```
//!
//! with fast axis θ from horizontal and retardance Γ = π/2 (quarter) or π
//! (half). The quarter-wave plate at π/4 is therefore
//! `(1/√2)·[[1, i], [i, 1]]`: it takes |R⟩ → |H⟩ and |L⟩ → i|V⟩, which turns
//! the post-selected spin-orbit Bell state into the H/V-marked state with
//! relative phase +π/2.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::hilbert::{linear_jones, Arm, JointKet, LocalOperator, Mode, Pol, PolState, Projection, C64};
use crate::quad::adaptive_simpson;

/// Absolute tolerance of the binary-mask overlap integral.
pub const MASK_QUADRATURE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QPlateSpec {
    pub q: f64,
    pub arm: Arm,
}

impl QPlateSpec {
    pub fn new(q: f64, arm: Arm) -> Result<Self> {
        let s = QPlateSpec { q, arm };
        s.shift()?;
        Ok(s)
    }

    /// OAM shift 2q as an integer.
    pub fn shift(&self) -> Result<i32> {
        let two_q = 2.0 * self.q;
        if !two_q.is_finite() || (two_q - two_q.round()).abs() > 1e-12 || two_q.abs() > 2.0 * crate::hilbert::L_CAP as f64 {
            return Err(Error::UnphysicalCharge { q: self.q });
        }
        Ok(two_q.round() as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WavePlateKind {
    Quarter,
    Half,
}

impl WavePlateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WavePlateKind::Quarter => PI / 2.0,
            WavePlateKind::Half => PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavePlateSpec {
    pub kind: WavePlateKind,
    /// Fast axis from horizontal, radians in [0, π).
    pub fast_axis: f64,
    pub arm: Arm,
}

impl WavePlateSpec {
    /// The fast axis is reduced modulo π, which leaves the matrix unchanged.
    pub fn new(kind: WavePlateKind, fast_axis: f64, arm: Arm) -> Result<Self> {
        if !fast_axis.is_finite() {
            return Err(Error::invalid("fast_axis", "must be finite"));
        }
        Ok(WavePlateSpec {
            kind,
            fast_axis: fast_axis.rem_euclid(PI),
            arm,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizerSpec {
    pub alpha: f64,
    /// Amplitude transmitted along the blocked axis; 0 is ideal.
    pub extinction: f64,
    pub arm: Arm,
}

impl PolarizerSpec {
    pub fn new(alpha: f64, extinction: f64, arm: Arm) -> Result<Self> {
        let s = PolarizerSpec { alpha, extinction, arm };
        s.validate()?;
        Ok(s)
    }

    pub fn ideal(alpha: f64, arm: Arm) -> Self {
        PolarizerSpec {
            alpha,
            extinction: 0.0,
            arm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.extinction) {
            return Err(Error::invalid("extinction", format!("{} not in [0, 1]", self.extinction)));
        }
        Ok(())
    }

    pub fn at(&self, alpha: f64) -> Self {
        PolarizerSpec { alpha, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FiberSpec {
    pub arm: Arm,
    pub accepted_l: i32,
}

impl FiberSpec {
    pub fn new(arm: Arm) -> Self {
        FiberSpec { arm, accepted_l: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HologramMode {
    Ideal,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HologramSpec {
    pub l: i32,
    pub theta: f64,
    pub mode: HologramMode,
    pub arm: Arm,
}

impl HologramSpec {
    pub fn new(l: i32, theta: f64, mode: HologramMode, arm: Arm) -> Result<Self> {
        let s = HologramSpec { l, theta, mode, arm };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::invalid("l", "hologram needs ℓ ≠ 0"));
        }
        if self.l.abs() > crate::hilbert::L_CAP {
            return Err(Error::OamOverflow {
                l: self.l,
                cap: crate::hilbert::L_CAP,
            });
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta", "must be finite"));
        }
        Ok(())
    }

    pub fn at(&self, theta: f64) -> Self {
        HologramSpec { theta, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelaySpec {
    /// Extra free-space path, meters.
    pub extra_path: f64,
    pub arm: Arm,
}

impl DelaySpec {
    pub fn new(extra_path: f64, arm: Arm) -> Result<Self> {
        if !(extra_path.is_finite() && extra_path >= 0.0) {
            return Err(Error::invalid("extra_path", format!("{extra_path} must be ≥ 0")));
        }
        Ok(DelaySpec { extra_path, arm })
    }

    pub fn seconds(&self) -> f64 {
        self.extra_path / SPEED_OF_LIGHT
    }
}

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementSpec {
    QPlate(QPlateSpec),
    WavePlate(WavePlateSpec),
    Polarizer(PolarizerSpec),
    Fiber(FiberSpec),
    Hologram(HologramSpec),
    Delay(DelaySpec),
}

impl ElementSpec {
    pub fn arm(&self) -> Arm {
        match self {
            ElementSpec::QPlate(s) => s.arm,
            ElementSpec::WavePlate(s) => s.arm,
            ElementSpec::Polarizer(s) => s.arm,
            ElementSpec::Fiber(s) => s.arm,
            ElementSpec::Hologram(s) => s.arm,
            ElementSpec::Delay(s) => s.arm,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ElementSpec::QPlate(_) => "qplate",
            ElementSpec::WavePlate(_) => "waveplate",
            ElementSpec::Polarizer(_) => "polarizer",
            ElementSpec::Fiber(_) => "fiber",
            ElementSpec::Hologram(_) => "hologram",
            ElementSpec::Delay(_) => "delay",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ElementSpec::QPlate(s) => s.shift().map(|_| ()),
            ElementSpec::WavePlate(s) => WavePlateSpec::new(s.kind, s.fast_axis, s.arm).map(|_| ()),
            ElementSpec::Polarizer(s) => s.validate(),
            ElementSpec::Fiber(s) => {
                if s.accepted_l.abs() > crate::hilbert::L_CAP {
                    return Err(Error::OamOverflow {
                        l: s.accepted_l,
                        cap: crate::hilbert::L_CAP,
                    });
                }
                Ok(())
            }
            ElementSpec::Hologram(s) => s.validate(),
            ElementSpec::Delay(s) => DelaySpec::new(s.extra_path, s.arm).map(|_| ()),
        }
    }

    /// Compiled operator; `None` for elements that do not touch amplitudes.
    pub fn operator(&self) -> Result<Option<LocalOperator>> {
        Ok(Some(match self {
            ElementSpec::QPlate(s) => qplate_operator(s)?,
            ElementSpec::WavePlate(s) => waveplate_operator(s),
            ElementSpec::Polarizer(s) => polarizer_operator(s),
            ElementSpec::Fiber(s) => fiber_operator(s),
            ElementSpec::Hologram(s) => sector_projector(s)?,
            ElementSpec::Delay(_) => return Ok(None),
        }))
    }
}

fn outer(ket: [C64; 2], bra: [C64; 2]) -> [[C64; 2]; 2] {
    let mut m = [[C64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = ket[i] * bra[j].conj();
        }
    }
    m
}

/// q-plate: |ℓ, R⟩ → |ℓ+2q, L⟩ and |ℓ, L⟩ → |ℓ−2q, R⟩.
pub fn qplate_operator(spec: &QPlateSpec) -> Result<LocalOperator> {
    let shift = spec.shift()?;
    let r = PolState::R.jones();
    let l = PolState::L.jones();
    let raise = outer(l, r); // |L⟩⟨R|
    let lower = outer(r, l); // |R⟩⟨L|
    let mut terms = Vec::with_capacity(8);
    for out in Pol::ALL {
        for input in Pol::ALL {
            let (i, j) = (out.index(), input.index());
            terms.push((out, input, shift, raise[i][j]));
            terms.push((out, input, -shift, lower[i][j]));
        }
    }
    Ok(LocalOperator::shifting(terms, true))
}

/// Retarder matrix J(θ, Γ); see the module docs for the convention.
pub fn retarder_matrix(fast_axis: f64, retardance: f64) -> [[C64; 2]; 2] {
    let c = (retardance / 2.0).cos();
    let s = (retardance / 2.0).sin();
    let (c2, s2) = ((2.0 * fast_axis).cos(), (2.0 * fast_axis).sin());
    [
        [C64::new(c, s * c2), C64::new(0.0, s * s2)],
        [C64::new(0.0, s * s2), C64::new(c, -s * c2)],
    ]
}

pub fn waveplate_operator(spec: &WavePlateSpec) -> LocalOperator {
    LocalOperator::polarization(retarder_matrix(spec.fast_axis, spec.kind.retardance()), true)
}

/// M = |α⟩⟨α| + e·|α+π/2⟩⟨α+π/2|.
pub fn polarizer_operator(spec: &PolarizerSpec) -> LocalOperator {
    let pass = outer(linear_jones(spec.alpha), linear_jones(spec.alpha));
    let block = linear_jones(spec.alpha + PI / 2.0);
    let leak = outer(block, block);
    let mut m = [[C64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = pass[i][j] + leak[i][j] * spec.extinction;
        }
    }
    LocalOperator::polarization(m, false)
}

pub fn polarizer_apply(spec: &PolarizerSpec, state: &JointKet) -> Result<Projection> {
    state.apply_kraus(&polarizer_operator(spec), spec.arm)
}

fn fiber_operator(spec: &FiberSpec) -> LocalOperator {
    let one = C64::new(1.0, 0.0);
    LocalOperator::from_entries(
        Pol::ALL.map(|p| ((Mode::new(p, spec.accepted_l), Mode::new(p, spec.accepted_l)), one)),
        false,
    )
}

/// Keeps the amplitudes whose OAM on the fiber's arm equals `accepted_l`.
pub fn fiber_postselect(spec: &FiberSpec, state: &JointKet) -> Result<Projection> {
    state.apply_kraus(&fiber_operator(spec), spec.arm)
}

/// OAM part of the sector state (|ℓ⟩ + e^{2iθ}|−ℓ⟩)/√2.
pub fn sector_state(l: i32, theta: f64) -> [(i32, C64); 2] {
    let s = FRAC_1_SQRT_2;
    [
        (l, C64::new(s, 0.0)),
        (-l, C64::from_polar(s, 2.0 * theta)),
    ]
}

/// Magnitude of the first-order coupling of the binary mask that realizes
/// the hologram `spec`; 1 in ideal mode.
pub fn coupling_scale(spec: &HologramSpec) -> Result<f64> {
    match spec.mode {
        HologramMode::Ideal => Ok(1.0),
        HologramMode::Binary => {
            let n = 2 * spec.l.unsigned_abs();
            Ok(binary_mask_overlap(n, spec.theta, spec.l, 0)?.norm())
        }
    }
}

/// Rank-1 projector onto the sector state, acting on OAM only (identity on
/// polarization) and scaled by the mask coupling in binary mode.
pub fn sector_projector(spec: &HologramSpec) -> Result<LocalOperator> {
    spec.validate()?;
    let scale = coupling_scale(spec)?;
    let v = sector_state(spec.l, spec.theta);
    let mut entries = Vec::with_capacity(8);
    for p in Pol::ALL {
        for (lo, ao) in v {
            for (li, ai) in v {
                entries.push(((Mode::new(p, lo), Mode::new(p, li)), ao * ai.conj() * scale));
            }
        }
    }
    Ok(LocalOperator::from_entries(entries, false))
}

/// Coupling amplitude of an `n_sectors` binary (±1) angular mask rotated by
/// `theta` between OAM modes `l_in` and `l_out`:
///
/// ```text
/// c = (1/2π) ∫₀^{2π} m(φ − θ) e^{i(ℓ_in − ℓ_out)φ} dφ,   m(u) = sign cos(n u / 2)
/// ```
///
/// Evaluated sector by sector with adaptive quadrature.
pub fn binary_mask_overlap(n_sectors: u32, theta: f64, l_in: i32, l_out: i32) -> Result<C64> {
    if n_sectors < 2 || !n_sectors.is_multiple_of(2) {
        return Err(Error::invalid("n_sectors", format!("{n_sectors} must be even and ≥ 2")));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite"));
    }
    let two_pi = 2.0 * PI;
    let k = f64::from(n_sectors) / 2.0;
    let dl = f64::from(l_in - l_out);
    // sector edges: zeros of cos(k(φ − θ))
    let mut edges: Vec<f64> = (0..n_sectors)
        .map(|j| (theta + (PI / 2.0 + f64::from(j) * PI) / k).rem_euclid(two_pi))
        .collect();
    edges.push(0.0);
    edges.push(two_pi);
    edges.sort_by(|a, b| a.total_cmp(b));
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let integrand = |phi: f64| C64::from_polar(1.0, dl * phi);
    let per_piece = MASK_QUADRATURE_TOL * 1e-3 / edges.len() as f64;
    let mut total = C64::default();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let sign = (k * (mid - theta)).cos().signum();
        total += adaptive_simpson(&integrand, a, b, per_piece) * sign;
    }
    Ok(total / two_pi)
}
