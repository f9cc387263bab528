//! Superoperators for the bichromatically driven, damped Jaynes–Cummings
//! system, split as `L(t) = L_eff + D(t) + J`, together with dressed-basis
//! pathway surgery.
//!
//! Density matrices are vectorized by column stacking (`vec(ρ)[c·d + r] =
//! ρ[r, c]`, the native nalgebra storage order), so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
//!
//! The scanning drive is taken in its Hermitian rotating-frame form
//! `Υ₂(t) = i E₂ (e^{−iδt} σ_+ − e^{+iδt} σ_−)`, which reduces to `Υ(E₂)` at
//! `t = 0`. Its commutator splits into `e^{−iδt} L_a + e^{+iδt} L_b`.
//!
//! All surgery acts on Hilbert-space operators before any superoperator is
//! formed; the assembled superoperators are never edited.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operators::{build_dressed_basis, DressedBasis, DressedLevel, FullOperators, SystemDims};
use crate::{CMatrix, C64};

/// Cavity field decay rate; every other rate is measured in this unit.
pub const KAPPA: f64 = 1.0;

const I: C64 = C64::new(0.0, 1.0);

/// Physical parameters of a bichromatic two-photon scan, in units of κ.
///
/// Only the frequency differences `ω − ω1 = g_f` and `ω2 − ω1 = delta` enter
/// the rotating-frame dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Atom–cavity coupling of the subensemble being simulated.
    pub g: f64,
    /// Coupling for which the fixed drive is resonant with `|0⟩ → |1⟩_−`.
    pub g_f: f64,
    /// Free-space spontaneous emission rate.
    pub gamma: f64,
    /// Fixed drive amplitude.
    pub e1: f64,
    /// Scanning drive amplitude.
    pub e2: f64,
    /// Scanning detuning `ω2 − ω1`.
    pub delta: f64,
}

impl PhysicalParams {
    /// `E1 = 1/√2`, `E2 = √2`, `g = g_f = 9`, `γ = 2`, scanning field on the
    /// nominal `|1⟩_− → |2⟩_+` resonance.
    pub fn reference_point() -> Self {
        let g_f = 9.0;
        Self {
            g: g_f,
            g_f,
            gamma: 2.0,
            e1: std::f64::consts::FRAC_1_SQRT_2,
            e2: std::f64::consts::SQRT_2,
            delta: g_f * (2.0 + std::f64::consts::SQRT_2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("g", self.g)?;
        check_positive("g_f", self.g_f)?;
        check_non_negative("gamma", self.gamma)?;
        check_non_negative("e1", self.e1)?;
        check_non_negative("e2", self.e2)?;
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(())
    }

    /// Normalized detuning `(δ − g_f) / g_f`.
    pub fn delta_tilde(&self) -> f64 {
        (self.delta - self.g_f) / self.g_f
    }

    pub fn with_delta_tilde(mut self, delta_tilde: f64) -> Self {
        self.delta = self.g_f * (1.0 + delta_tilde);
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn model(&self) -> ModelParams {
        ModelParams { g: self.g, detuning: self.g_f, kappa: KAPPA, gamma: self.gamma, e1: self.e1, e2: self.e2 }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

fn check_non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be non-negative, got {v}")))
    }
}

/// Generator-level parameters: what the superoperator builders consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub g: f64,
    /// Rotating-frame detuning `ω − ω1`.
    pub detuning: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub e1: f64,
    pub e2: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("g", self.g)?;
        check_non_negative("kappa", self.kappa)?;
        check_non_negative("gamma", self.gamma)?;
        check_non_negative("e1", self.e1)?;
        check_non_negative("e2", self.e2)?;
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        Ok(())
    }
}

/// Which drive a dressed-basis transition refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Drive {
    Fixed,
    Scanning,
    Both,
}

impl Drive {
    fn covers(self, which: Drive) -> bool {
        self == Drive::Both || self == which
    }
}

impl fmt::Display for Drive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Drive::Fixed => "fixed",
            Drive::Scanning => "scanning",
            Drive::Both => "both",
        })
    }
}

impl FromStr for Drive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed" => Ok(Drive::Fixed),
            "scanning" => Ok(Drive::Scanning),
            "both" => Ok(Drive::Both),
            other => Err(Error::InvalidAblation(format!("unknown drive `{other}`"))),
        }
    }
}

/// A dressed-basis drive element together with its conjugate partner.
///
/// The pair is stored with `lower ≤ upper` so `(a, b)` and `(b, a)` compare
/// equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub lower: DressedLevel,
    pub upper: DressedLevel,
    pub drive: Drive,
}

impl Transition {
    pub fn new(a: DressedLevel, b: DressedLevel, drive: Drive) -> Self {
        let (lower, upper) = if a <= b { (a, b) } else { (b, a) };
        Self { lower, upper, drive }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lower, self.upper, self.drive)
    }
}

impl FromStr for Transition {
    type Err = Error;

    /// `"1-:2-:scanning"`; the drive defaults to `scanning` when omitted.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let drive = match parts.len() {
            2 => Drive::Scanning,
            3 => parts[2].parse()?,
            _ => return Err(Error::InvalidAblation(format!("bad transition `{s}`"))),
        };
        Ok(Transition::new(parts[0].parse()?, parts[1].parse()?, drive))
    }
}

/// Declarative description of which pathways to remove from the generator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AblationSpec {
    /// Dressed drive elements (and conjugates) set to zero.
    pub zeroed: BTreeSet<Transition>,
    /// When present, every drive element outside the list is set to zero.
    pub keep_only: Option<BTreeSet<Transition>>,
    /// Levels whose dressed-basis damping (anti-Hermitian diagonal) is removed.
    pub linewidth_removed: BTreeSet<DressedLevel>,
    /// Remove the jump superoperator `J` entirely.
    pub drop_jump_term: bool,
    /// Hold the ground-state amplitude fixed (zero the `|0⟩` row of the
    /// effective Hamiltonian and of the scanning drive): the undepleted-ground
    /// reading of the no-jump dynamics.
    pub freeze_ground: bool,
}

impl AblationSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.zeroed.is_empty() && self.keep_only.is_some() {
            return Err(Error::InvalidAblation(
                "zeroed transitions and a keep-only whitelist are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Union of two specs. A whitelist combined with zeroed transitions
    /// becomes the whitelist minus those transitions.
    pub fn combine(&self, other: &AblationSpec) -> Result<AblationSpec> {
        self.validate()?;
        other.validate()?;
        let keep_only = match (&self.keep_only, &other.keep_only) {
            (Some(a), Some(b)) => Some(a.intersection(b).copied().collect()),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        let zeroed: BTreeSet<Transition> = self.zeroed.union(&other.zeroed).copied().collect();
        let (zeroed, keep_only) = match keep_only {
            Some(keep) => {
                let keep = keep
                    .into_iter()
                    .filter(|t| {
                        !zeroed.iter().any(|z| z.lower == t.lower && z.upper == t.upper && z.drive.covers(t.drive))
                    })
                    .collect();
                (BTreeSet::new(), Some(keep))
            }
            None => (zeroed, None),
        };
        Ok(AblationSpec {
            zeroed,
            keep_only,
            linewidth_removed: self.linewidth_removed.union(&other.linewidth_removed).copied().collect(),
            drop_jump_term: self.drop_jump_term || other.drop_jump_term,
            freeze_ground: self.freeze_ground || other.freeze_ground,
        })
    }

    fn touches_drive(&self, which: Drive) -> bool {
        self.keep_only.is_some() || self.zeroed.iter().any(|t| t.drive.covers(which))
    }

    fn needs_dressed_basis(&self) -> bool {
        self.keep_only.is_some() || !self.zeroed.is_empty() || !self.linewidth_removed.is_empty()
    }

    /// One-line description used in output headers.
    pub fn describe(&self) -> String {
        let list = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(",");
        format!(
            "zero=[{}] keep={} linewidth=[{}] drop_jumps={} freeze_ground={}",
            list(&mut self.zeroed.iter().map(|t| t.to_string())),
            match &self.keep_only {
                Some(k) => format!("[{}]", list(&mut k.iter().map(|t| t.to_string()))),
                None => "all".to_string(),
            },
            list(&mut self.linewidth_removed.iter().map(|l| l.to_string())),
            self.drop_jump_term,
            self.freeze_ground,
        )
    }
}

/// Linear map on column-stacked `d × d` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: CMatrix,
    dim: usize,
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        Self { matrix: CMatrix::zeros(dim * dim, dim * dim), dim }
    }

    pub fn from_matrix(matrix: CMatrix) -> Self {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        assert!(dim * dim == n && matrix.ncols() == n, "superoperator must be d² × d²");
        Self { matrix, dim }
    }

    /// `ρ ↦ A ρ B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self::from_matrix(b.transpose().kronecker(a))
    }

    /// `ρ ↦ A ρ`.
    pub fn left(a: &CMatrix) -> Self {
        Self::from_matrix(CMatrix::identity(a.nrows(), a.nrows()).kronecker(a))
    }

    /// `ρ ↦ ρ B`.
    pub fn right(b: &CMatrix) -> Self {
        Self::from_matrix(b.transpose().kronecker(&CMatrix::identity(b.nrows(), b.nrows())))
    }

    /// `ρ ↦ [A, ρ]`.
    pub fn commutator(a: &CMatrix) -> Self {
        Self::from_matrix(Self::left(a).matrix - Self::right(a).matrix)
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scale(mut self, s: C64) -> Self {
        self.matrix *= s;
        self
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        let out = &self.matrix * v;
        CMatrix::from_column_slice(self.dim, self.dim, out.as_slice())
    }

    /// Largest entry of the row vector `vec(1)ᵀ L`, i.e. how far `Tr(L ρ)`
    /// can be from zero per unit entry of `ρ`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d).map(|col| (0..d).map(|k| self.matrix[(k * d + k, col)]).sum::<C64>().norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        crate::operators::max_abs(&self.matrix)
    }
}

impl Add for Superoperator {
    type Output = Superoperator;

    fn add(mut self, rhs: Superoperator) -> Superoperator {
        self += rhs;
        self
    }
}

impl AddAssign for Superoperator {
    fn add_assign(&mut self, rhs: Superoperator) {
        assert_eq!(self.dim, rhs.dim);
        self.matrix += rhs.matrix;
    }
}

/// Monochromatic atomic drive `Υ(E) = i E (σ_+ − σ_−)`.
pub fn build_drive_operator(amplitude: f64, dims: &SystemDims) -> CMatrix {
    let full = FullOperators::new(dims.n_max());
    dims.restrict(&((&full.sigma_plus - &full.sigma_minus) * (I * amplitude)))
}

fn dressed_basis_for(m: &ModelParams, dims: &SystemDims, ab: &AblationSpec) -> Result<Option<DressedBasis>> {
    if ab.needs_dressed_basis() {
        Ok(Some(build_dressed_basis(m.g, m.detuning, dims)?))
    } else {
        Ok(None)
    }
}

/// Zero the dressed-basis elements of `op` selected by `ab` for drive `which`.
fn drive_surgery(op: &CMatrix, basis: Option<&DressedBasis>, ab: &AblationSpec, which: Drive) -> Result<CMatrix> {
    if !ab.touches_drive(which) {
        return Ok(op.clone());
    }
    let basis = basis.expect("dressed basis is built whenever drive surgery is requested");
    let mut dressed = basis.to_dressed(op);
    let zero = C64::new(0.0, 0.0);
    match &ab.keep_only {
        Some(keep) => {
            let mut kept = BTreeSet::new();
            for t in keep.iter().filter(|t| t.drive.covers(which)) {
                let (i, j) = (basis.require(t.lower)?, basis.require(t.upper)?);
                kept.insert((i, j));
                kept.insert((j, i));
            }
            for c in 0..dressed.ncols() {
                for r in 0..dressed.nrows() {
                    if !kept.contains(&(r, c)) {
                        dressed[(r, c)] = zero;
                    }
                }
            }
        }
        None => {
            for t in ab.zeroed.iter().filter(|t| t.drive.covers(which)) {
                let (i, j) = (basis.require(t.lower)?, basis.require(t.upper)?);
                dressed[(i, j)] = zero;
                dressed[(j, i)] = zero;
            }
        }
    }
    Ok(basis.from_dressed(&dressed))
}

/// Anti-Hermitian damping part `−iκ a†a − i(γ/2) σ_+σ_−`, with the dressed
/// diagonal removed at the requested levels.
fn damping_operator(
    m: &ModelParams,
    dims: &SystemDims,
    basis: Option<&DressedBasis>,
    ab: &AblationSpec,
) -> Result<CMatrix> {
    let full = FullOperators::new(dims.n_max());
    let n = full.a.adjoint() * &full.a;
    let pe = &full.sigma_plus * &full.sigma_minus;
    let damping = dims.restrict(&(n * (-I * m.kappa) + pe * (-I * (m.gamma / 2.0))));
    if ab.linewidth_removed.is_empty() {
        return Ok(damping);
    }
    let basis = basis.expect("dressed basis is built whenever linewidth surgery is requested");
    let mut dressed = basis.to_dressed(&damping);
    for &level in &ab.linewidth_removed {
        let i = basis.require(level)?;
        dressed[(i, i)] = C64::new(0.0, 0.0);
    }
    Ok(basis.from_dressed(&dressed))
}

fn freeze_row(op: &mut CMatrix, dims: &SystemDims) {
    let g0 = dims.index(0, crate::operators::Atom::Ground).expect("vacuum is always retained");
    op.row_mut(g0).fill(C64::new(0.0, 0.0));
}

/// Effective (non-Hermitian) Hamiltonian
/// `(ω − ω1)(σ_z + a†a) + Ξ(g) + Υ(E1) − iκ a†a − i(γ/2)σ_+σ_−`
/// after surgery.
pub fn build_effective_hamiltonian(m: &ModelParams, dims: &SystemDims, ab: &AblationSpec) -> Result<CMatrix> {
    m.validate()?;
    ab.validate()?;
    let basis = dressed_basis_for(m, dims, ab)?;
    let h = crate::operators::build_jc_hamiltonian(m.g, m.detuning, dims);
    let drive = drive_surgery(&build_drive_operator(m.e1, dims), basis.as_ref(), ab, Drive::Fixed)?;
    let mut heff = h + drive + damping_operator(m, dims, basis.as_ref(), ab)?;
    if ab.freeze_ground {
        // Measure energies from |0,g⟩ so a frozen ground amplitude is truly
        // constant; a real shift of H leaves the full dynamics unchanged.
        let g0 = dims.index(0, crate::operators::Atom::Ground).expect("vacuum is always retained");
        let shift = heff[(g0, g0)];
        for k in 0..heff.nrows() {
            heff[(k, k)] -= shift;
        }
        freeze_row(&mut heff, dims);
    }
    Ok(heff)
}

/// Jump superoperator `ρ ↦ 2κ a ρ a† + γ σ_− ρ σ_+`, or zero when dropped.
pub fn build_jump_superoperator(m: &ModelParams, dims: &SystemDims, ab: &AblationSpec) -> Superoperator {
    if ab.drop_jump_term {
        return Superoperator::zeros(dims.dim());
    }
    let full = FullOperators::new(dims.n_max());
    let a = dims.restrict(&full.a);
    let sm = dims.restrict(&full.sigma_minus);
    Superoperator::sandwich(&a, &a.adjoint()).scale(C64::new(2.0 * m.kappa, 0.0))
        + Superoperator::sandwich(&sm, &sm.adjoint()).scale(C64::new(m.gamma, 0.0))
}

/// Harmonic parts `(L_a, L_b)` of `D(t) = e^{−iδt} L_a + e^{+iδt} L_b`.
pub fn build_scanning_drive_superoperators(
    m: &ModelParams,
    dims: &SystemDims,
    ab: &AblationSpec,
) -> Result<(Superoperator, Superoperator)> {
    m.validate()?;
    ab.validate()?;
    if m.e2 == 0.0 {
        return Ok((Superoperator::zeros(dims.dim()), Superoperator::zeros(dims.dim())));
    }
    let basis = dressed_basis_for(m, dims, ab)?;
    let sp = dims.restrict(&FullOperators::new(dims.n_max()).sigma_plus);
    let mut raise = drive_surgery(&sp, basis.as_ref(), ab, Drive::Scanning)?;
    let mut lower = raise.adjoint();
    if ab.freeze_ground {
        freeze_row(&mut raise, dims);
        freeze_row(&mut lower, dims);
    }
    let plus = Superoperator::from_matrix(
        Superoperator::left(&raise).into_matrix() - Superoperator::right(&raise).into_matrix(),
    )
    .scale(C64::new(m.e2, 0.0));
    let minus = Superoperator::from_matrix(
        Superoperator::left(&lower).into_matrix() - Superoperator::right(&lower).into_matrix(),
    )
    .scale(C64::new(-m.e2, 0.0));
    Ok((plus, minus))
}

/// `L_eff ρ = −i (H_eff ρ − ρ H_eff†)`.
pub fn build_effective_liouvillian(heff: &CMatrix) -> Superoperator {
    let l = Superoperator::left(heff).into_matrix() - Superoperator::right(&heff.adjoint()).into_matrix();
    Superoperator::from_matrix(l).scale(-I)
}

/// Time-independent block `L0 = L_eff + J`.
pub fn assemble_static_liouvillian(m: &ModelParams, dims: &SystemDims, ab: &AblationSpec) -> Result<Superoperator> {
    let heff = build_effective_hamiltonian(m, dims, ab)?;
    Ok(build_effective_liouvillian(&heff) + build_jump_superoperator(m, dims, ab))
}

/// The three superoperators that define the Floquet problem.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// `L0 = L_eff + J`.
    pub static_part: Superoperator,
    /// `L_a`, multiplying `e^{−iδt}`.
    pub scan_plus: Superoperator,
    /// `L_b`, multiplying `e^{+iδt}`.
    pub scan_minus: Superoperator,
}

impl Liouvillian {
    pub fn assemble(m: &ModelParams, dims: &SystemDims, ab: &AblationSpec) -> Result<Self> {
        let static_part = assemble_static_liouvillian(m, dims, ab)?;
        let (scan_plus, scan_minus) = build_scanning_drive_superoperators(m, dims, ab)?;
        Ok(Self { static_part, scan_plus, scan_minus })
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    /// The generator at time `t`.
    pub fn at_time(&self, delta: f64, t: f64) -> Superoperator {
        let phase = C64::from_polar(1.0, -delta * t);
        Superoperator::from_matrix(
            self.static_part.matrix() + self.scan_plus.matrix() * phase + self.scan_minus.matrix() * phase.conj(),
        )
    }
}
