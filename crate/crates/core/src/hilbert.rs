//! Sparse two-photon states over (polarization ⊗ OAM)_A ⊗ (polarization ⊗ OAM)_B.
//!
//! Each photon lives in the span of `|p, ℓ⟩` with `p ∈ {H, V}` and integer
//! `ℓ`. Derived polarizations are fixed superpositions of the computational
//! pair:
//!
//! ```text
//! D = (H + V)/√2    A = (H − V)/√2
//! R = (H − iV)/√2   L = (H + iV)/√2
//! ```
//!
//! States are stored as ordered sparse maps so that iteration order, and
//! therefore every derived floating-point sum, is deterministic.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest |ℓ| any state may carry before an operation is rejected.
pub const L_CAP: i32 = 32;
/// Amplitudes below this magnitude are dropped from the support.
pub const PRUNE_EPS: f64 = 1e-15;
/// Outcomes with probability below this are reported as null.
pub const NULL_PROBABILITY: f64 = 1e-14;
/// Tolerance on the unit norm of tensor factors and projection targets.
pub const NORM_TOL: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const ALL: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    A,
    B,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arm::A => f.write_str("A"),
            Arm::B => f.write_str("B"),
        }
    }
}

/// Named polarization states, expressed as Jones vectors in the H/V basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolState {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl PolState {
    pub fn jones(self) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            PolState::H => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            PolState::V => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            PolState::D => [C64::new(s, 0.0), C64::new(s, 0.0)],
            PolState::A => [C64::new(s, 0.0), C64::new(-s, 0.0)],
            PolState::R => [C64::new(s, 0.0), C64::new(0.0, -s)],
            PolState::L => [C64::new(s, 0.0), C64::new(0.0, s)],
        }
    }
}

/// Linear polarization at angle `alpha` from horizontal: cos α |H⟩ + sin α |V⟩.
pub fn linear_jones(alpha: f64) -> [C64; 2] {
    [C64::new(alpha.cos(), 0.0), C64::new(alpha.sin(), 0.0)]
}

/// Basis label of a single photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub pol: Pol,
    pub l: i32,
}

impl Mode {
    pub fn new(pol: Pol, l: i32) -> Self {
        Mode { pol, l }
    }
}

/// Basis label of the photon pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointLabel {
    pub a: Mode,
    pub b: Mode,
}

impl JointLabel {
    pub fn new(a: Mode, b: Mode) -> Self {
        JointLabel { a, b }
    }

    pub fn on(&self, arm: Arm) -> Mode {
        match arm {
            Arm::A => self.a,
            Arm::B => self.b,
        }
    }

    fn with(&self, arm: Arm, m: Mode) -> Self {
        match arm {
            Arm::A => JointLabel { a: m, b: self.b },
            Arm::B => JointLabel { a: self.a, b: m },
        }
    }
}

fn check_amp(l: i32, amp: C64) -> Result<()> {
    if !(amp.re.is_finite() && amp.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if l.abs() > L_CAP {
        return Err(Error::OamOverflow { l, cap: L_CAP });
    }
    Ok(())
}

/// Sparse state of a single photon.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalKet {
    amps: BTreeMap<Mode, C64>,
}

impl LocalKet {
    pub fn from_amplitudes(entries: impl IntoIterator<Item = (Mode, C64)>) -> Result<Self> {
        let mut amps = BTreeMap::new();
        for (m, a) in entries {
            check_amp(m.l, a)?;
            *amps.entry(m).or_insert(C64::new(0.0, 0.0)) += a;
        }
        amps.retain(|_, a: &mut C64| a.norm() >= PRUNE_EPS);
        Ok(LocalKet { amps })
    }

    pub fn basis(pol: Pol, l: i32) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(Mode::new(pol, l), C64::new(1.0, 0.0));
        LocalKet { amps }
    }

    /// Polarization state `jones` carried on OAM mode `l`.
    pub fn with_jones(jones: [C64; 2], l: i32) -> Self {
        let entries = Pol::ALL
            .iter()
            .map(|&p| (Mode::new(p, l), jones[p.index()]));
        LocalKet::from_amplitudes(entries).expect("finite Jones vector")
    }

    pub fn pol(state: PolState, l: i32) -> Self {
        LocalKet::with_jones(state.jones(), l)
    }

    pub fn linear(alpha: f64, l: i32) -> Self {
        LocalKet::with_jones(linear_jones(alpha), l)
    }

    pub fn amplitude(&self, m: Mode) -> C64 {
        self.amps.get(&m).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, C64)> + '_ {
        self.amps.iter().map(|(m, a)| (*m, *a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(LocalKet {
            amps: self.amps.iter().map(|(m, a)| (*m, a / n)).collect(),
        })
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &LocalKet) -> C64 {
        self.amps
            .iter()
            .map(|(m, a)| a.conj() * other.amplitude(*m))
            .sum()
    }

    fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }
}

/// Sparse state of the photon pair.
///
/// `norm_tracked` accumulates the success probability of every
/// non-unitary step that produced this state; the amplitudes themselves are
/// kept renormalized.
#[derive(Clone, Debug, PartialEq)]
pub struct JointKet {
    amps: BTreeMap<JointLabel, C64>,
    norm_tracked: f64,
}

/// Result of a non-unitary step on a [`JointKet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    /// Renormalized post-measurement state, `None` for a null outcome.
    pub state: Option<JointKet>,
    pub probability: f64,
}

impl Projection {
    pub fn is_null(&self) -> bool {
        self.state.is_none()
    }
}

impl JointKet {
    /// Builds a state from raw amplitudes. Duplicate labels are summed,
    /// negligible amplitudes pruned; no normalization is applied.
    pub fn from_amplitudes(entries: impl IntoIterator<Item = (JointLabel, C64)>) -> Result<Self> {
        let mut amps = BTreeMap::new();
        for (lab, a) in entries {
            check_amp(lab.a.l, a)?;
            check_amp(lab.b.l, a)?;
            *amps.entry(lab).or_insert(C64::new(0.0, 0.0)) += a;
        }
        amps.retain(|_, a: &mut C64| a.norm() >= PRUNE_EPS);
        Ok(JointKet {
            amps,
            norm_tracked: 1.0,
        })
    }

    /// Product state `a ⊗ b`. Both factors must be normalized.
    pub fn tensor(a: &LocalKet, b: &LocalKet) -> Result<Self> {
        for f in [a, b] {
            if !f.is_normalized() {
                return Err(Error::UnnormalizedFactor {
                    norm_sqr: f.norm_sqr(),
                });
            }
        }
        let entries = a.iter().flat_map(|(ma, xa)| {
            b.iter()
                .map(move |(mb, xb)| (JointLabel::new(ma, mb), xa * xb))
        });
        JointKet::from_amplitudes(entries)
    }

    pub fn amplitude(&self, lab: JointLabel) -> C64 {
        self.amps.get(&lab).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (JointLabel, C64)> + '_ {
        self.amps.iter().map(|(l, a)| (*l, *a))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm_tracked(&self) -> f64 {
        self.norm_tracked
    }

    pub fn with_norm_tracked(mut self, p: f64) -> Self {
        self.norm_tracked = p.clamp(0.0, 1.0);
        self
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(JointKet {
            amps: self.amps.iter().map(|(l, a)| (*l, a / n)).collect(),
            norm_tracked: self.norm_tracked,
        })
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &JointKet) -> C64 {
        self.amps
            .iter()
            .map(|(l, a)| a.conj() * other.amplitude(*l))
            .sum()
    }

    /// |⟨self|other⟩|, i.e. equality up to a global phase when both are unit.
    pub fn overlap(&self, other: &JointKet) -> f64 {
        self.inner(other).norm()
    }

    /// Range of ℓ present on `arm`, if the support is non-empty.
    pub fn oam_range(&self, arm: Arm) -> Option<(i32, i32)> {
        let mut it = self.amps.keys().map(|lab| lab.on(arm).l);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), l| (lo.min(l), hi.max(l))))
    }

    /// Applies `op` to the photon on `arm`. The result is not renormalized,
    /// so non-unitary operators return a sub-normalized state.
    pub fn apply_local(&self, op: &LocalOperator, arm: Arm) -> Result<JointKet> {
        let mut out: BTreeMap<JointLabel, C64> = BTreeMap::new();
        for (lab, amp) in &self.amps {
            for (m_out, coeff) in op.act(lab.on(arm))? {
                let v = amp * coeff;
                check_amp(m_out.l, v)?;
                *out.entry(lab.with(arm, m_out)).or_insert(C64::new(0.0, 0.0)) += v;
            }
        }
        out.retain(|_, a: &mut C64| a.norm() >= PRUNE_EPS);
        Ok(JointKet {
            amps: out,
            norm_tracked: self.norm_tracked,
        })
    }

    /// Applies a (possibly non-unitary) Kraus operator on `arm`, then
    /// renormalizes. The success probability is relative to `self`'s norm
    /// and multiplies into `norm_tracked`.
    pub fn apply_kraus(&self, op: &LocalOperator, arm: Arm) -> Result<Projection> {
        let before = self.norm_sqr();
        if before == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let raw = self.apply_local(op, arm)?;
        let probability = raw.norm_sqr() / before;
        if probability < NULL_PROBABILITY {
            return Ok(Projection {
                state: None,
                probability: 0.0,
            });
        }
        let mut state = raw.normalize()?;
        state.norm_tracked = (self.norm_tracked * probability).clamp(0.0, 1.0);
        Ok(Projection {
            state: Some(state),
            probability,
        })
    }

    /// Projects the photon on `arm` onto `target` (a normalized local state).
    pub fn project(&self, arm: Arm, target: &LocalKet) -> Result<Projection> {
        if !target.is_normalized() {
            return Err(Error::UnnormalizedFactor {
                norm_sqr: target.norm_sqr(),
            });
        }
        self.apply_kraus(&LocalOperator::rank_one(target, target, 1.0), arm)
    }

    /// Density matrix of the subsystems selected by `keep`, tracing out the
    /// rest. The basis is the sorted set of kept coordinates in the support.
    pub fn reduced_density(&self, keep: Keep) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptySelector);
        }
        // group amplitudes by the discarded part of each label
        let mut groups: BTreeMap<Coord, Vec<(Coord, C64)>> = BTreeMap::new();
        for (lab, amp) in &self.amps {
            let kept = Coord::select(lab, keep);
            let dropped = Coord::select(lab, keep.complement());
            groups.entry(dropped).or_default().push((kept, *amp));
        }
        let basis: Vec<Coord> = {
            let mut b: Vec<Coord> = self.amps.keys().map(|l| Coord::select(l, keep)).collect();
            b.sort();
            b.dedup();
            b
        };
        let index: BTreeMap<Coord, usize> =
            basis.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let n = basis.len();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for members in groups.values() {
            for (ci, ai) in members {
                for (cj, aj) in members {
                    m[(index[ci], index[cj])] += ai * aj.conj();
                }
            }
        }
        let tr: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        if tr > 0.0 {
            m /= C64::new(tr, 0.0);
        }
        Ok(DensityMatrix { basis, matrix: m })
    }
}

/// Selector of the subsystems kept by a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Keep {
    pub a_pol: bool,
    pub a_oam: bool,
    pub b_pol: bool,
    pub b_oam: bool,
}

impl Keep {
    pub const NONE: Keep = Keep {
        a_pol: false,
        a_oam: false,
        b_pol: false,
        b_oam: false,
    };
    pub const ALL: Keep = Keep {
        a_pol: true,
        a_oam: true,
        b_pol: true,
        b_oam: true,
    };
    pub const ARM_A: Keep = Keep {
        a_pol: true,
        a_oam: true,
        ..Keep::NONE
    };
    pub const ARM_B: Keep = Keep {
        b_pol: true,
        b_oam: true,
        ..Keep::NONE
    };
    pub const A_POL: Keep = Keep {
        a_pol: true,
        ..Keep::NONE
    };
    pub const B_OAM: Keep = Keep {
        b_oam: true,
        ..Keep::NONE
    };

    pub fn arm(arm: Arm) -> Keep {
        match arm {
            Arm::A => Keep::ARM_A,
            Arm::B => Keep::ARM_B,
        }
    }

    pub fn union(self, o: Keep) -> Keep {
        Keep {
            a_pol: self.a_pol || o.a_pol,
            a_oam: self.a_oam || o.a_oam,
            b_pol: self.b_pol || o.b_pol,
            b_oam: self.b_oam || o.b_oam,
        }
    }

    pub fn complement(self) -> Keep {
        Keep {
            a_pol: !self.a_pol,
            a_oam: !self.a_oam,
            b_pol: !self.b_pol,
            b_oam: !self.b_oam,
        }
    }

    pub fn is_empty(self) -> bool {
        self == Keep::NONE
    }
}

/// Basis label of a (possibly reduced) density matrix; discarded
/// coordinates are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub a_pol: Option<Pol>,
    pub a_l: Option<i32>,
    pub b_pol: Option<Pol>,
    pub b_l: Option<i32>,
}

impl Coord {
    pub fn select(lab: &JointLabel, keep: Keep) -> Coord {
        Coord {
            a_pol: keep.a_pol.then_some(lab.a.pol),
            a_l: keep.a_oam.then_some(lab.a.l),
            b_pol: keep.b_pol.then_some(lab.b.pol),
            b_l: keep.b_oam.then_some(lab.b.l),
        }
    }

    pub fn full(lab: &JointLabel) -> Coord {
        Coord::select(lab, Keep::ALL)
    }

    fn as_joint(&self) -> Option<JointLabel> {
        Some(JointLabel::new(
            Mode::new(self.a_pol?, self.a_l?),
            Mode::new(self.b_pol?, self.b_l?),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Action {
    /// Polarization matrix terms that also translate ℓ by `dl`; valid for
    /// every input ℓ.
    Shift(Vec<ShiftTerm>),
    /// Explicit matrix elements keyed by input mode; absent inputs map to 0.
    Explicit(BTreeMap<Mode, Vec<(Mode, C64)>>),
    /// Successive application, first element first.
    Chain(Vec<LocalOperator>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ShiftTerm {
    out: Pol,
    input: Pol,
    dl: i32,
    amp: C64,
}

/// Linear operator on one photon's (polarization ⊗ OAM) space.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    action: Action,
    unitary: bool,
}

impl LocalOperator {
    pub fn identity() -> Self {
        LocalOperator::polarization([[C64::new(1.0, 0.0), C64::default()], [C64::default(), C64::new(1.0, 0.0)]], true)
    }

    /// 2×2 polarization matrix `m[out][in]`, identity on ℓ.
    pub fn polarization(m: [[C64; 2]; 2], unitary: bool) -> Self {
        let mut terms = Vec::with_capacity(4);
        for out in Pol::ALL {
            for input in Pol::ALL {
                terms.push((out, input, 0, m[out.index()][input.index()]));
            }
        }
        LocalOperator::shifting(terms, unitary)
    }

    /// Terms `(out, in, dl, amp)`: `|out, ℓ+dl⟩⟨in, ℓ|` for every ℓ.
    pub fn shifting(terms: impl IntoIterator<Item = (Pol, Pol, i32, C64)>, unitary: bool) -> Self {
        let terms = terms
            .into_iter()
            .filter(|t| t.3.norm() >= PRUNE_EPS)
            .map(|(out, input, dl, amp)| ShiftTerm { out, input, dl, amp })
            .collect();
        LocalOperator {
            action: Action::Shift(terms),
            unitary,
        }
    }

    /// Explicit entries `((out, in), amp)`.
    pub fn from_entries(entries: impl IntoIterator<Item = ((Mode, Mode), C64)>, unitary: bool) -> Self {
        let mut map: BTreeMap<Mode, Vec<(Mode, C64)>> = BTreeMap::new();
        for ((out, input), amp) in entries {
            if amp.norm() >= PRUNE_EPS {
                map.entry(input).or_default().push((out, amp));
            }
        }
        LocalOperator {
            action: Action::Explicit(map),
            unitary,
        }
    }

    /// `scale · |ket⟩⟨bra|`.
    pub fn rank_one(ket: &LocalKet, bra: &LocalKet, scale: f64) -> Self {
        let entries = ket.iter().flat_map(|(mo, ao)| {
            bra.iter()
                .map(move |(mi, ai)| ((mo, mi), ao * ai.conj() * scale))
        });
        LocalOperator::from_entries(entries, false)
    }

    /// Operator that applies `self` and then `next`.
    pub fn then(self, next: LocalOperator) -> Self {
        let unitary = self.unitary && next.unitary;
        let mut ops = match self.action {
            Action::Chain(v) => v,
            other => vec![LocalOperator {
                action: other,
                unitary: self.unitary,
            }],
        };
        match next.action {
            Action::Chain(v) => ops.extend(v),
            other => ops.push(LocalOperator {
                action: other,
                unitary: next.unitary,
            }),
        }
        LocalOperator {
            action: Action::Chain(ops),
            unitary,
        }
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// Image of the basis mode `input`, as `(mode, amplitude)` pairs with
    /// repeated modes merged.
    pub fn act(&self, input: Mode) -> Result<Vec<(Mode, C64)>> {
        let raw: Vec<(Mode, C64)> = match &self.action {
            Action::Shift(terms) => terms
                .iter()
                .filter(|t| t.input == input.pol)
                .map(|t| (Mode::new(t.out, input.l + t.dl), t.amp))
                .collect(),
            Action::Explicit(map) => map.get(&input).cloned().unwrap_or_default(),
            Action::Chain(ops) => {
                let mut cur = vec![(input, C64::new(1.0, 0.0))];
                for op in ops {
                    let mut next: BTreeMap<Mode, C64> = BTreeMap::new();
                    for (m, a) in cur {
                        for (mo, c) in op.act(m)? {
                            *next.entry(mo).or_default() += a * c;
                        }
                    }
                    cur = next.into_iter().collect();
                }
                cur
            }
        };
        let mut merged: BTreeMap<Mode, C64> = BTreeMap::new();
        for (m, a) in raw {
            if m.l.abs() > L_CAP {
                return Err(Error::OamOverflow { l: m.l, cap: L_CAP });
            }
            *merged.entry(m).or_default() += a;
        }
        Ok(merged.into_iter().filter(|(_, a)| a.norm() >= PRUNE_EPS).collect())
    }

    /// Dense matrix ⟨out|O|in⟩ over `basis`. Images leaving the basis are
    /// dropped; callers pick a basis wide enough to hold the support.
    pub fn matrix(&self, basis: &[Mode]) -> Result<DMatrix<C64>> {
        let index: BTreeMap<Mode, usize> = basis.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let n = basis.len();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (j, input) in basis.iter().enumerate() {
            for (out, a) in self.act(*input)? {
                if let Some(&i) = index.get(&out) {
                    m[(i, j)] += a;
                }
            }
        }
        Ok(m)
    }

    /// Checks O†O = 1 on `support` within `tol`. The image basis is closed
    /// over everything reachable from `support`.
    pub fn is_unitary_on(&self, support: &[Mode], tol: f64) -> Result<bool> {
        let mut basis: Vec<Mode> = support.to_vec();
        for m in support {
            basis.extend(self.act(*m)?.into_iter().map(|(o, _)| o));
        }
        basis.sort();
        basis.dedup();
        let full = self.matrix(&basis)?;
        let cols: Vec<usize> = support
            .iter()
            .map(|m| basis.binary_search(m).expect("support is in basis"))
            .collect();
        for (a, &ja) in cols.iter().enumerate() {
            for (b, &jb) in cols.iter().enumerate() {
                let g: C64 = (0..basis.len()).map(|i| full[(i, ja)].conj() * full[(i, jb)]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (g - C64::new(want, 0.0)).norm() > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Dense Hermitian matrix over an explicit ordered basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    basis: Vec<Coord>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(basis: Vec<Coord>, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::DimensionMismatch {
                left: basis.len(),
                right: matrix.nrows(),
            });
        }
        Ok(DensityMatrix { basis, matrix })
    }

    /// |ψ⟩⟨ψ| over the full joint labels of the state's support.
    pub fn from_ket(state: &JointKet) -> DensityMatrix {
        let basis: Vec<Coord> = state.iter().map(|(l, _)| Coord::full(&l)).collect();
        DensityMatrix::from_ket_in_basis(state, basis).expect("support is in its own basis")
    }

    /// |ψ⟩⟨ψ| in a caller-chosen basis that must contain the support.
    pub fn from_ket_in_basis(state: &JointKet, basis: Vec<Coord>) -> Result<DensityMatrix> {
        let index: BTreeMap<Coord, usize> = basis.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let mut v = vec![C64::default(); basis.len()];
        for (lab, a) in state.iter() {
            let i = *index.get(&Coord::full(&lab)).ok_or(Error::BasisMismatch)?;
            v[i] = a;
        }
        let n = basis.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj());
        Ok(DensityMatrix { basis, matrix })
    }

    /// Product basis of two local mode lists, in A-major order.
    pub fn product_basis(modes_a: &[Mode], modes_b: &[Mode]) -> Vec<Coord> {
        modes_a
            .iter()
            .flat_map(|a| modes_b.iter().map(move |b| Coord::full(&JointLabel::new(*a, *b))))
            .collect()
    }

    pub fn basis(&self) -> &[Coord] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn element(&self, row: &Coord, col: &Coord) -> C64 {
        let i = self.basis.iter().position(|c| c == row);
        let j = self.basis.iter().position(|c| c == col);
        match (i, j) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => C64::default(),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() <= tol))
    }

    /// Hermitian, unit trace and positive semidefinite within the given
    /// tolerances.
    pub fn is_valid(&self) -> bool {
        self.is_hermitian(1e-12)
            && (self.trace() - 1.0).abs() <= 1e-12
            && self.eigenvalues().iter().all(|&e| e >= -1e-10)
    }

    /// Re-expresses the matrix in `basis`, which must contain every basis
    /// coordinate carrying weight.
    pub fn embed(&self, basis: &[Coord]) -> Result<DensityMatrix> {
        let index: BTreeMap<Coord, usize> = basis.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let map: Vec<Option<usize>> = self.basis.iter().map(|c| index.get(c).copied()).collect();
        let n = basis.len();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (i, mi) in map.iter().enumerate() {
            for (j, mj) in map.iter().enumerate() {
                let v = self.matrix[(i, j)];
                match (mi, mj) {
                    (Some(a), Some(b)) => m[(*a, *b)] = v,
                    _ if v.norm() > PRUNE_EPS => return Err(Error::BasisMismatch),
                    _ => {}
                }
            }
        }
        Ok(DensityMatrix {
            basis: basis.to_vec(),
            matrix: m,
        })
    }

    /// Drops basis states whose diagonal weight is below `eps`. For a
    /// positive semidefinite matrix the corresponding rows are negligible.
    pub fn compact(&self, eps: f64) -> DensityMatrix {
        let keep: Vec<usize> = (0..self.dim()).filter(|&i| self.matrix[(i, i)].re > eps).collect();
        let basis = keep.iter().map(|&i| self.basis[i]).collect();
        let n = keep.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| self.matrix[(keep[i], keep[j])]);
        DensityMatrix { basis, matrix }
    }

    /// Restricts two matrices over the same basis to the basis states where
    /// either carries diagonal weight above `eps`.
    pub fn compact_pair(r1: &DensityMatrix, r2: &DensityMatrix, eps: f64) -> Result<(DensityMatrix, DensityMatrix)> {
        if r1.basis != r2.basis {
            return Err(Error::BasisMismatch);
        }
        let keep: Vec<usize> = (0..r1.dim())
            .filter(|&i| r1.matrix[(i, i)].re > eps || r2.matrix[(i, i)].re > eps)
            .collect();
        let cut = |r: &DensityMatrix| {
            let n = keep.len();
            DensityMatrix {
                basis: keep.iter().map(|&i| r.basis[i]).collect(),
                matrix: DMatrix::from_fn(n, n, |i, j| r.matrix[(keep[i], keep[j])]),
            }
        };
        Ok((cut(r1), cut(r2)))
    }

    /// Channel step ρ → KρK†/Tr(KρK†) with K = `op` on `arm` (identity on
    /// the other photon). Requires a basis of full joint labels; images of
    /// populated basis states that leave the basis are an error. Returns the success probability.
    pub fn evolve_local(&self, op: &LocalOperator, arm: Arm) -> Result<(DensityMatrix, f64)> {
        let labels: Vec<JointLabel> = self
            .basis
            .iter()
            .map(|c| c.as_joint().ok_or(Error::BasisMismatch))
            .collect::<Result<_>>()?;
        let index: BTreeMap<JointLabel, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        // sparse K as (row, col, value)
        let mut k: Vec<(usize, usize, C64)> = Vec::new();
        for (j, lab) in labels.iter().enumerate() {
            // an unpopulated column (zero diagonal of a PSD ρ) may map outside the basis
            let populated = self.matrix[(j, j)].re > 0.0;
            for (m_out, a) in op.act(lab.on(arm))? {
                let out = lab.with(arm, m_out);
                match index.get(&out) {
                    Some(&i) => k.push((i, j, a)),
                    None if populated => return Err(Error::BasisMismatch),
                    None => {}
                }
            }
        }
        let n = labels.len();
        // K ρ
        let mut kr = DMatrix::<C64>::zeros(n, n);
        for &(i, j, a) in &k {
            for c in 0..n {
                kr[(i, c)] += a * self.matrix[(j, c)];
            }
        }
        // (K ρ) K†
        let mut out = DMatrix::<C64>::zeros(n, n);
        for &(i, j, a) in &k {
            let ac = a.conj();
            for r in 0..n {
                out[(r, i)] += kr[(r, j)] * ac;
            }
        }
        let p = out.trace().re / self.trace();
        if p < NULL_PROBABILITY {
            return Err(Error::NullOutcome { stage: "density-matrix channel" });
        }
        let tr = out.trace().re;
        out /= C64::new(tr, 0.0);
        Ok((
            DensityMatrix {
                basis: self.basis.clone(),
                matrix: out,
            },
            p,
        ))
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    // symmetrize against rounding before the Hermitian solver
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Σ|λᵢ| of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|e| e.abs()).sum()
}

/// ½‖ρ₁ − ρ₂‖₁ for density matrices over the same basis.
pub fn trace_distance(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch {
            left: r1.dim(),
            right: r2.dim(),
        });
    }
    if r1.basis != r2.basis {
        return Err(Error::BasisMismatch);
    }
    let d = 0.5 * trace_norm(&(&r1.matrix - &r2.matrix));
    Ok(d.clamp(0.0, 1.0))
}
