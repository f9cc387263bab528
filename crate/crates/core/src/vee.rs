//! Monochromatically driven three-level ∨ system `{|0⟩, |1⟩_−, |1⟩_+}`.
//!
//! The no-jump amplitudes obey
//!
//! ```text
//! Ċ0  = −e (C1− + C1+)
//! Ċ1∓ =  e C0 − (i(δ ∓ g) + Γ) C1∓ + c C1±
//! ```
//!
//! with `e = E/√2`, `Γ = (κ + γ/2)/2` and `c = (κ − γ/2)/2`. Competition is
//! removed by cutting the `|0⟩ ↔ |1⟩_−` coupling in both directions. The
//! drive frequency is reported as `δ̃ = −δ/g`, so the `|1⟩_+` resonance sits
//! at `δ̃ = 1`.
//!
//! Three routes to a one-photon response are provided:
//! * [`vee_response`]: amplitudes relaxed with the ground amplitude held
//!   fixed (the `s → 0` pole of the Laplace-transformed equations),
//!   normalized. Its peak reproduces the closed-form shift [`vee_peak_shift`].
//! * [`vee_emission_integral`]: `2κ∫|c_1g|² dt` from `|0⟩`, via a Lyapunov
//!   solve.
//! * [`vee_master_equation_scan`]: the full three-level master equation,
//!   with or without jumps and with optional dressed-state surgery.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::floquet::{conditional_state, steady_state};
use crate::liouvillian::{assemble_static_liouvillian, AblationSpec, Drive, ModelParams, Transition, KAPPA};
use crate::operators::{DressedLevel, SystemDims};
use crate::par::{self, Execution};
use crate::spectroscopy::{locate_peak, one_photon_rate, Observable, PeakReport, Spectrum};
use crate::C64;

/// Nominal `|0⟩ → |1⟩_+` resonance in `δ̃`.
pub const VEE_NOMINAL: f64 = 1.0;

/// Search range for the `δ̃ ≈ 1` peak.
pub const VEE_SEARCH: (f64, f64) = (0.8, 1.2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeeParams {
    pub g: f64,
    /// Drive amplitude.
    pub e: f64,
    pub gamma: f64,
    /// `ω − ω1`.
    pub delta: f64,
}

impl VeeParams {
    /// `g = 9`, `E = √2`, `γ = 2`, drive on the `|1⟩_+` resonance.
    pub fn reference_point() -> Self {
        Self { g: 9.0, e: std::f64::consts::SQRT_2, gamma: 2.0, delta: -9.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::invalid("g", "must be positive"));
        }
        if !(self.e >= 0.0 && self.e.is_finite()) {
            return Err(Error::invalid("e", "must be non-negative"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "must be non-negative"));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        Ok(())
    }

    pub fn delta_tilde(&self) -> f64 {
        -self.delta / self.g
    }

    pub fn with_delta_tilde(mut self, delta_tilde: f64) -> Self {
        self.delta = -delta_tilde * self.g;
        self
    }

    /// Generator parameters for the master-equation route.
    pub fn model(&self) -> ModelParams {
        ModelParams { g: self.g, detuning: self.delta, kappa: KAPPA, gamma: self.gamma, e1: self.e, e2: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeeAmplitudes {
    pub c0: C64,
    pub c1m: C64,
    pub c1p: C64,
}

impl VeeAmplitudes {
    pub fn ground() -> Self {
        Self { c0: C64::new(1.0, 0.0), c1m: C64::new(0.0, 0.0), c1p: C64::new(0.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1m.norm_sqr() + self.c1p.norm_sqr()
    }

    /// Overlap with `|1, g⟩`.
    pub fn photon_overlap(&self) -> C64 {
        (self.c1m - self.c1p) / std::f64::consts::SQRT_2
    }

    fn to_vector(self) -> Vector3<C64> {
        Vector3::new(self.c0, self.c1m, self.c1p)
    }

    fn from_vector(v: &Vector3<C64>) -> Self {
        Self { c0: v[0], c1m: v[1], c1p: v[2] }
    }
}

/// Coefficient `(κ − γ/2)/2` coupling `C1−` and `C1+`.
pub fn cross_coupling(gamma: f64) -> f64 {
    0.5 * (KAPPA - 0.5 * gamma)
}

/// Generator of the amplitude equations.
pub fn vee_matrix(p: &VeeParams, ablated: bool) -> Matrix3<C64> {
    let e = C64::new(p.e / std::f64::consts::SQRT_2, 0.0);
    let damp = 0.5 * (KAPPA + 0.5 * p.gamma);
    let c = C64::new(cross_coupling(p.gamma), 0.0);
    let mut m = Matrix3::new(
        C64::new(0.0, 0.0),
        -e,
        -e,
        e,
        -C64::new(damp, p.delta - p.g),
        c,
        e,
        c,
        -C64::new(damp, p.delta + p.g),
    );
    if ablated {
        m[(0, 1)] = C64::new(0.0, 0.0);
        m[(1, 0)] = C64::new(0.0, 0.0);
    }
    m
}

/// Time derivatives of the amplitudes.
pub fn vee_rhs(s: &VeeAmplitudes, p: &VeeParams, ablated: bool) -> VeeAmplitudes {
    VeeAmplitudes::from_vector(&(vee_matrix(p, ablated) * s.to_vector()))
}

/// Fixed-step RK4 evolution of the amplitudes.
pub fn vee_evolve(s: &VeeAmplitudes, p: &VeeParams, ablated: bool, t: f64, steps: usize) -> VeeAmplitudes {
    let m = vee_matrix(p, ablated);
    let h = C64::new(t / steps.max(1) as f64, 0.0);
    let mut y = s.to_vector();
    for _ in 0..steps.max(1) {
        let k1 = m * y;
        let k2 = m * (y + k1 * (h * 0.5));
        let k3 = m * (y + k2 * (h * 0.5));
        let k4 = m * (y + k3 * h);
        y += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (h / 6.0);
    }
    VeeAmplitudes::from_vector(&y)
}

/// Long-time amplitudes with the ground amplitude held at 1.
pub fn vee_quasi_steady(p: &VeeParams, ablated: bool) -> Result<VeeAmplitudes> {
    p.validate()?;
    let m = vee_matrix(p, ablated);
    let block = m.fixed_view::<2, 2>(1, 1).into_owned();
    let source = m.fixed_view::<2, 1>(1, 0).into_owned();
    let excited =
        block.lu().solve(&(-source)).ok_or_else(|| Error::SingularSystem("undamped excited manifold".into()))?;
    Ok(VeeAmplitudes { c0: C64::new(1.0, 0.0), c1m: excited[0], c1p: excited[1] })
}

/// One-photon response `2κ|c_1g|² / ‖ψ‖²` of the quasi-steady amplitudes.
pub fn vee_response(p: &VeeParams, ablated: bool) -> Result<f64> {
    let s = vee_quasi_steady(p, ablated)?;
    Ok(2.0 * KAPPA * s.photon_overlap().norm_sqr() / s.norm_sqr())
}

/// Time-integrated emission from `|0⟩` under the no-jump evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionIntegral {
    /// `2κ ∫ |c_1g|² dt`.
    pub photons: f64,
    /// `∫ ‖ψ‖² dt`.
    pub dwell: f64,
}

impl EmissionIntegral {
    /// Emission per unit time spent in the ∨ manifold.
    pub fn rate(&self) -> f64 {
        if self.dwell > 0.0 {
            self.photons / self.dwell
        } else {
            0.0
        }
    }
}

/// `X = ∫ ψψ† dt` from `M X + X M† = −ψ0ψ0†`, then the emission integrals.
pub fn vee_emission_integral(p: &VeeParams, ablated: bool) -> Result<EmissionIntegral> {
    p.validate()?;
    if p.e == 0.0 {
        // The ground state never decays; nothing is emitted.
        return Ok(EmissionIntegral { photons: 0.0, dwell: f64::INFINITY });
    }
    let m = vee_matrix(p, ablated);
    let eye = nalgebra::DMatrix::<C64>::identity(3, 3);
    let md = nalgebra::DMatrix::from_fn(3, 3, |r, c| m[(r, c)]);
    let system = eye.kronecker(&md) + md.map(|z| z.conj()).kronecker(&eye);
    let mut rhs = nalgebra::DVector::<C64>::zeros(9);
    rhs[0] = C64::new(-1.0, 0.0);
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("emission integral diverges (undamped mode)".into()))?;
    let x = nalgebra::DMatrix::from_column_slice(3, 3, x.as_slice());
    let w = nalgebra::DVector::from_vec(vec![
        C64::new(0.0, 0.0),
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
    ]);
    let photons = 2.0 * KAPPA * (w.adjoint() * &x * &w)[(0, 0)].re;
    Ok(EmissionIntegral { photons, dwell: x.trace().re })
}

fn check_formula_domain(p: &VeeParams) -> Result<f64> {
    p.validate()?;
    if (p.gamma - 2.0 * KAPPA).abs() > 1e-12 {
        return Err(Error::FormulaDomain(format!("gamma = {} but the formulas assume gamma/kappa = 2", p.gamma)));
    }
    let x = (2.0 + p.e * p.e) / (2.0 * p.g * p.g);
    if !(x < 1.0) {
        return Err(Error::FormulaDomain(format!("g = {}, E = {} gives (2+E²)/(2g²) = {x} ≥ 1", p.g, p.e)));
    }
    Ok(x)
}

/// Closed-form stationary points of the response, as magnitudes in `δ̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeeExtrema {
    pub minimum: f64,
    /// `√(1 − (2+E²)/(2g²))`: the competition-shifted peak.
    pub inner: f64,
    /// `√(1 + (2+E²)/(2g²))`.
    pub outer: f64,
}

pub fn vee_extrema(p: &VeeParams) -> Result<VeeExtrema> {
    let x = check_formula_domain(p)?;
    Ok(VeeExtrema { minimum: 0.0, inner: (1.0 - x).sqrt(), outer: (1.0 + x).sqrt() })
}

/// `Δδ̃ = √(1 − (2+E²)/(2g²)) − 1`.
pub fn vee_peak_shift(p: &VeeParams) -> Result<f64> {
    Ok(vee_extrema(p)?.inner - 1.0)
}

/// Master-equation variants of the three-level scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VeeVariant {
    /// Lindblad equation with jumps.
    Full,
    /// No jumps; ground amplitude held fixed.
    JumpFree,
    /// With jumps, `|0⟩ ↔ |1⟩_−` drive element removed.
    Ablated,
}

impl VeeVariant {
    pub const ALL: [VeeVariant; 3] = [VeeVariant::Full, VeeVariant::JumpFree, VeeVariant::Ablated];

    pub fn ablation(self) -> AblationSpec {
        match self {
            VeeVariant::Full => AblationSpec::none(),
            VeeVariant::JumpFree => AblationSpec { drop_jump_term: true, freeze_ground: true, ..Default::default() },
            VeeVariant::Ablated => {
                let mut ab = AblationSpec::none();
                ab.zeroed.insert(Transition::new(DressedLevel::Ground, DressedLevel::Minus(1), Drive::Fixed));
                ab
            }
        }
    }
}

impl fmt::Display for VeeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VeeVariant::Full => "full",
            VeeVariant::JumpFree => "jump-free",
            VeeVariant::Ablated => "ablated",
        })
    }
}

impl FromStr for VeeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(VeeVariant::Full),
            "jump-free" => Ok(VeeVariant::JumpFree),
            "ablated" => Ok(VeeVariant::Ablated),
            other => Err(Error::invalid("vee_variant", format!("unknown variant `{other}`"))),
        }
    }
}

fn vee_metadata(p: &VeeParams, label: String) -> Vec<(String, String)> {
    let mut meta = vec![
        ("g".into(), p.g.to_string()),
        ("e".into(), p.e.to_string()),
        ("gamma".into(), p.gamma.to_string()),
        ("route".into(), label),
    ];
    if let Ok(shift) = vee_peak_shift(p) {
        meta.push(("closed_form_shift".into(), shift.to_string()));
    }
    meta
}

/// `⟨a†a⟩` of the three-level stationary state over a `δ̃` grid.
///
/// Dropping the jump term also freezes the ground amplitude: without that,
/// the renormalized no-jump state coincides with the full one, because
/// every jump in this system lands in `|0⟩`.
pub fn vee_master_equation_scan(p: &VeeParams, grid: &[f64], ab: &AblationSpec, exec: Execution) -> Result<Spectrum> {
    p.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty"));
    }
    let mut ab = ab.clone();
    if ab.drop_jump_term {
        ab.freeze_ground = true;
    }
    let dims = SystemDims::three_level();
    let values = par::try_map(exec, grid, |&dt| {
        let point = p.with_delta_tilde(dt);
        let run = || -> Result<f64> {
            let l0 = assemble_static_liouvillian(&point.model(), &dims, &ab)?;
            let rho = if ab.drop_jump_term { conditional_state(&l0)? } else { steady_state(&l0)? };
            Ok(one_photon_rate(&rho, &dims))
        };
        run().map_err(|e| e.at_detuning(dt))
    })?;
    let points = grid.iter().copied().zip(values).collect();
    let mut meta = vee_metadata(p, "master-equation".into());
    meta.push(("ablation".into(), ab.describe()));
    Spectrum::new(Observable::N1, points, meta)
}

pub fn vee_variant_scan(p: &VeeParams, grid: &[f64], variant: VeeVariant, exec: Execution) -> Result<Spectrum> {
    let mut s = vee_master_equation_scan(p, grid, &variant.ablation(), exec)?;
    s.metadata.push(("variant".into(), variant.to_string()));
    Ok(s)
}

/// [`vee_response`] over a `δ̃` grid.
pub fn vee_response_scan(p: &VeeParams, grid: &[f64], ablated: bool) -> Result<Spectrum> {
    let points = grid
        .iter()
        .map(|&dt| vee_response(&p.with_delta_tilde(dt), ablated).map(|v| (dt, v)).map_err(|e| e.at_detuning(dt)))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::new(Observable::N1, points, vee_metadata(p, format!("quasi-steady ablated={ablated}")))
}

/// Peak near `δ̃ = 1`, reported relative to 1.
pub fn vee_scan_peak(spec: &Spectrum) -> Result<PeakReport> {
    locate_peak(spec, VEE_NOMINAL, VEE_SEARCH)
}
