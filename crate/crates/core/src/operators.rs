//! Truncated atom ⊗ field Hilbert space, bare operators, the Jaynes–Cummings
//! Hamiltonian and its dressed-state basis.
//!
//! Basis ordering is field-major: the product state `|n, s⟩` has joint index
//! `2 n + s` with `s = 0` for the atomic ground state `|g⟩` and `s = 1` for
//! `|e⟩`. The inversion operator `σ_z` has eigenvalues `±½`, so
//! `σ_z + a†a` counts excitations up to a constant shift of `−½`; only energy
//! differences enter any observable.
//!
//! A [`SystemDims`] may carry an excitation cap, in which case only product
//! states with `n + s ≤ cap` are retained. Composite operators are always
//! formed on the full product space first and projected afterwards, so a
//! capped space sees exactly the matrix elements of the uncapped one.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Default threshold below which the dressed basis is considered degenerate.
pub const DEFAULT_COUPLING_EPSILON: f64 = 1e-9;

const I: C64 = C64::new(0.0, 1.0);

/// Internal state of the two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Ground,
    Excited,
}

impl Atom {
    fn index(self) -> usize {
        match self {
            Atom::Ground => 0,
            Atom::Excited => 1,
        }
    }
}

/// A retained product state `|photons, atom⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisState {
    pub photons: usize,
    pub atom: Atom,
}

impl BasisState {
    pub fn excitations(&self) -> usize {
        self.photons + self.atom.index()
    }
}

/// Dimensions of the truncated Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemDims {
    n_max: usize,
    excitation_cap: Option<usize>,
    /// Full-space indices of the retained product states, increasing.
    retained: Vec<usize>,
}

impl SystemDims {
    /// Full product space with Fock states `0..=n_max`.
    pub fn new(n_max: usize) -> Result<Self> {
        Self::build(n_max, None)
    }

    /// Product space with Fock states `0..=n_max`, keeping only states whose
    /// excitation number `n + s` does not exceed `cap`.
    pub fn with_excitation_cap(n_max: usize, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::invalid("excitation_cap", "must be at least 1"));
        }
        Self::build(n_max, Some(cap))
    }

    /// The three-level ∨ truncation `{|0,g⟩, |0,e⟩, |1,g⟩}`.
    pub fn three_level() -> Self {
        Self::build(1, Some(1)).expect("valid truncation")
    }

    fn build(n_max: usize, excitation_cap: Option<usize>) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::invalid("n_max", "must be at least 1"));
        }
        let retained =
            (0..2 * (n_max + 1)).filter(|&i| excitation_cap.is_none_or(|cap| i / 2 + i % 2 <= cap)).collect();
        Ok(Self { n_max, excitation_cap, retained })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn excitation_cap(&self) -> Option<usize> {
        self.excitation_cap
    }

    pub fn dim_field(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim_atom(&self) -> usize {
        2
    }

    /// Dimension of the full product space, `2 (n_max + 1)`.
    pub fn full_dim(&self) -> usize {
        self.dim_field() * self.dim_atom()
    }

    /// Dimension of the retained space (equals [`full_dim`](Self::full_dim)
    /// without an excitation cap).
    pub fn dim(&self) -> usize {
        self.retained.len()
    }

    /// Highest excitation number present in the retained space.
    pub fn max_excitation(&self) -> usize {
        self.retained.iter().map(|&i| i / 2 + i % 2).max().unwrap_or(0)
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        self.retained
            .iter()
            .map(|&i| BasisState { photons: i / 2, atom: if i % 2 == 0 { Atom::Ground } else { Atom::Excited } })
    }

    /// Index of `|n, atom⟩` in the retained space.
    pub fn index(&self, photons: usize, atom: Atom) -> Option<usize> {
        let full = 2 * photons + atom.index();
        self.retained.binary_search(&full).ok()
    }

    /// Basis vector `|n, atom⟩`. Panics if the state is not retained.
    pub fn ket(&self, photons: usize, atom: Atom) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(self.dim());
        let i =
            self.index(photons, atom).unwrap_or_else(|| panic!("|{photons}, {atom:?}⟩ is not in the truncated space"));
        v[i] = C64::new(1.0, 0.0);
        v
    }

    /// Projector `|n, atom⟩⟨n, atom|`.
    pub fn projector(&self, photons: usize, atom: Atom) -> CMatrix {
        let k = self.ket(photons, atom);
        &k * k.adjoint()
    }

    /// Project a full-space matrix onto the retained states.
    pub(crate) fn restrict(&self, full: &CMatrix) -> CMatrix {
        debug_assert_eq!(full.nrows(), self.full_dim());
        if self.excitation_cap.is_none() {
            return full.clone();
        }
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| full[(self.retained[r], self.retained[c])])
    }
}

/// Bare operators on the full product space.
pub(crate) struct FullOperators {
    pub a: CMatrix,
    pub sigma_plus: CMatrix,
    pub sigma_minus: CMatrix,
    pub sigma_z: CMatrix,
}

impl FullOperators {
    pub fn new(n_max: usize) -> Self {
        let dim = 2 * (n_max + 1);
        let mut a = CMatrix::zeros(dim, dim);
        let mut sigma_plus = CMatrix::zeros(dim, dim);
        let mut sigma_z = CMatrix::zeros(dim, dim);
        for n in 0..=n_max {
            for s in 0..2 {
                let col = 2 * n + s;
                if n >= 1 {
                    a[(2 * (n - 1) + s, col)] = C64::new((n as f64).sqrt(), 0.0);
                }
                if s == 0 {
                    sigma_plus[(2 * n + 1, col)] = C64::new(1.0, 0.0);
                }
                sigma_z[(col, col)] = C64::new(if s == 1 { 0.5 } else { -0.5 }, 0.0);
            }
        }
        let sigma_minus = sigma_plus.adjoint();
        Self { a, sigma_plus, sigma_minus, sigma_z }
    }

    /// `σ_z + a†a`.
    pub fn excitation(&self) -> CMatrix {
        &self.sigma_z + self.a.adjoint() * &self.a
    }

    /// Quantum exchange operator `i g (a†σ_− − aσ_+)`.
    pub fn exchange(&self, g: f64) -> CMatrix {
        let ad = self.a.adjoint();
        (ad * &self.sigma_minus - &self.a * &self.sigma_plus) * (I * g)
    }
}

/// Cavity annihilation operator `a ⊗ 1_atom`.
pub fn build_annihilation(dims: &SystemDims) -> CMatrix {
    dims.restrict(&FullOperators::new(dims.n_max()).a)
}

/// Atomic raising, lowering and inversion operators (`1_field ⊗ σ`).
#[derive(Debug, Clone)]
pub struct AtomicOperators {
    pub sigma_plus: CMatrix,
    pub sigma_minus: CMatrix,
    pub sigma_z: CMatrix,
}

pub fn build_atomic_operators(dims: &SystemDims) -> AtomicOperators {
    let full = FullOperators::new(dims.n_max());
    AtomicOperators {
        sigma_plus: dims.restrict(&full.sigma_plus),
        sigma_minus: dims.restrict(&full.sigma_minus),
        sigma_z: dims.restrict(&full.sigma_z),
    }
}

/// Rotating-frame Jaynes–Cummings Hamiltonian
/// `(ω − ω1)(σ_z + a†a) + i g (a†σ_− − aσ_+)`.
pub fn build_jc_hamiltonian(g: f64, detuning_frame: f64, dims: &SystemDims) -> CMatrix {
    let full = FullOperators::new(dims.n_max());
    let h = full.excitation() * C64::new(detuning_frame, 0.0) + full.exchange(g);
    dims.restrict(&h)
}

/// Named eigenstate of the undriven, undamped Jaynes–Cummings Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DressedLevel {
    /// `|0⟩ = |0, g⟩`.
    Ground,
    /// `|n⟩_−`.
    Minus(usize),
    /// `|n⟩_+`.
    Plus(usize),
    /// The uncoupled state `|n_max, e⟩` left over by the Fock truncation.
    Top,
}

impl fmt::Display for DressedLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DressedLevel::Ground => write!(f, "0"),
            DressedLevel::Minus(n) => write!(f, "{n}-"),
            DressedLevel::Plus(n) => write!(f, "{n}+"),
            DressedLevel::Top => write!(f, "top"),
        }
    }
}

impl FromStr for DressedLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(DressedLevel::Ground);
        }
        if s == "top" {
            return Ok(DressedLevel::Top);
        }
        let unknown = || Error::UnknownLevel(s.to_string());
        let (num, sign) = s.split_at(s.len().checked_sub(1).ok_or_else(unknown)?);
        let n: usize = num.parse().map_err(|_| unknown())?;
        if n == 0 {
            return Err(unknown());
        }
        match sign {
            "-" => Ok(DressedLevel::Minus(n)),
            "+" => Ok(DressedLevel::Plus(n)),
            _ => Err(unknown()),
        }
    }
}

/// Dressed-state basis of `H(g)` in the rotating frame.
///
/// Columns of `unitary` are `|0⟩`, then `|n⟩_−, |n⟩_+` for each couplet, then
/// `|n_max, e⟩` when it is retained. The dressed states follow the phase
/// convention `|n⟩_± = i/√2 (|n−1, e⟩ ± i |n, g⟩)`.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub unitary: CMatrix,
    pub energies: Vec<f64>,
    pub levels: Vec<DressedLevel>,
    pub g: f64,
    /// Set when the basis is the bare-basis fallback for vanishing coupling.
    pub degenerate: bool,
}

impl DressedBasis {
    pub fn index_of(&self, level: DressedLevel) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }

    pub(crate) fn require(&self, level: DressedLevel) -> Result<usize> {
        self.index_of(level).ok_or_else(|| Error::UnknownLevel(level.to_string()))
    }

    /// `U† op U`.
    pub fn to_dressed(&self, op: &CMatrix) -> CMatrix {
        self.unitary.adjoint() * op * &self.unitary
    }

    /// `U op U†`.
    pub fn from_dressed(&self, op: &CMatrix) -> CMatrix {
        &self.unitary * op * self.unitary.adjoint()
    }

    /// Bare-basis fallback for `g = 0`: the columns are the product states in
    /// the same slot order, with `|n−1, e⟩` in the `−` slot and `|n, g⟩` in the
    /// `+` slot.
    pub fn bare(detuning_frame: f64, dims: &SystemDims) -> Self {
        let mut basis = assemble(dims, |n, minus| {
            let mut v = vec![C64::new(0.0, 0.0); 2 * (dims.n_max() + 1)];
            if minus {
                v[2 * (n - 1) + 1] = C64::new(1.0, 0.0);
            } else {
                v[2 * n] = C64::new(1.0, 0.0);
            }
            v
        });
        let h = build_jc_hamiltonian(0.0, detuning_frame, dims);
        basis.energies = diagonal_energies(&basis.to_dressed(&h));
        basis.degenerate = true;
        basis
    }
}

fn diagonal_energies(m: &CMatrix) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, i)].re).collect()
}

/// Lay out dressed columns in slot order; `couplet(n, minus)` returns the
/// full-space column for `|n⟩_∓`.
fn assemble(dims: &SystemDims, couplet: impl Fn(usize, bool) -> Vec<C64>) -> DressedBasis {
    let full_dim = dims.full_dim();
    let mut columns: Vec<(DressedLevel, Vec<C64>)> = Vec::new();
    let mut ground = vec![C64::new(0.0, 0.0); full_dim];
    ground[0] = C64::new(1.0, 0.0);
    columns.push((DressedLevel::Ground, ground));
    for n in 1..=dims.n_max() {
        columns.push((DressedLevel::Minus(n), couplet(n, true)));
        columns.push((DressedLevel::Plus(n), couplet(n, false)));
    }
    let mut top = vec![C64::new(0.0, 0.0); full_dim];
    top[full_dim - 1] = C64::new(1.0, 0.0);
    columns.push((DressedLevel::Top, top));

    let keep = |level: &DressedLevel| match (level, dims.excitation_cap()) {
        (_, None) => true,
        (DressedLevel::Ground, _) => true,
        (DressedLevel::Minus(n) | DressedLevel::Plus(n), Some(cap)) => *n <= cap,
        (DressedLevel::Top, Some(cap)) => dims.n_max() < cap,
    };
    let columns: Vec<_> = columns.into_iter().filter(|(l, _)| keep(l)).collect();
    let d = dims.dim();
    debug_assert_eq!(columns.len(), d);
    let full = CMatrix::from_fn(full_dim, d, |r, c| columns[c].1[r]);
    let unitary = CMatrix::from_fn(d, d, |r, c| full[(dims.retained[r], c)]);
    DressedBasis {
        unitary,
        energies: Vec::new(),
        levels: columns.into_iter().map(|(l, _)| l).collect(),
        g: 0.0,
        degenerate: false,
    }
}

/// Dressed basis of `H(g)` with the default degeneracy threshold.
pub fn build_dressed_basis(g: f64, detuning_frame: f64, dims: &SystemDims) -> Result<DressedBasis> {
    build_dressed_basis_with_epsilon(g, detuning_frame, dims, DEFAULT_COUPLING_EPSILON)
}

pub fn build_dressed_basis_with_epsilon(
    g: f64,
    detuning_frame: f64,
    dims: &SystemDims,
    epsilon: f64,
) -> Result<DressedBasis> {
    if !(g >= epsilon) {
        return Err(Error::DegenerateCoupling { g, epsilon });
    }
    let amp = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let mut basis = assemble(dims, |n, minus| {
        let mut v = vec![C64::new(0.0, 0.0); 2 * (dims.n_max() + 1)];
        let sign = if minus { -1.0 } else { 1.0 };
        v[2 * (n - 1) + 1] = amp;
        v[2 * n] = amp * I * sign;
        v
    });
    let h = build_jc_hamiltonian(g, detuning_frame, dims);
    basis.energies = diagonal_energies(&basis.to_dressed(&h));
    basis.g = g;
    Ok(basis)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest absolute deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Largest off-diagonal magnitude.
pub fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst
}
