//! Detuning scans of the two-photon count rate, background subtraction,
//! preset pathway ablations and peak location.
//!
//! The scanning detuning is reported as `δ̃ = (δ − g_f)/g_f`; the
//! `|1⟩_− → |2⟩_+` two-photon resonance sits at `δ̃ = 1 + √2`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::ensemble::CouplingDistribution;
use crate::error::{Error, Result};
use crate::floquet::{solve_liouvillian, FloquetOptions};
use crate::liouvillian::{AblationSpec, Drive, Liouvillian, PhysicalParams, Transition};
use crate::operators::{build_annihilation, DressedLevel, SystemDims};
use crate::par::{self, Execution};
use crate::CMatrix;

/// Nominal location of the `|1⟩_− → |2⟩_+` resonance in `δ̃`.
pub const RESONANCE_1M_2P: f64 = 1.0 + std::f64::consts::SQRT_2;

/// Half-width of the quadratic-fit window around the grid maximum.
pub const FIT_HALF_WIDTH: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `⟨a†²a²⟩`.
    W2,
    /// `w²(E1) − w²(E1 = 0)`.
    Delta2,
    /// `⟨a†a⟩`.
    N1,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observable::W2 => "w2",
            Observable::Delta2 => "delta2",
            Observable::N1 => "n1",
        })
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "w2" => Ok(Observable::W2),
            "delta2" => Ok(Observable::Delta2),
            "n1" => Ok(Observable::N1),
            other => Err(Error::invalid("observable", format!("unknown observable `{other}`"))),
        }
    }
}

/// Values on an increasing `δ̃` grid plus the settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub observable: Observable,
    points: Vec<(f64, f64)>,
    /// `key = value` pairs echoed into the text header.
    pub metadata: Vec<(String, String)>,
}

impl Spectrum {
    pub fn new(observable: Observable, points: Vec<(f64, f64)>, metadata: Vec<(String, String)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("spectrum", "no points"));
        }
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::invalid("spectrum", "detunings must be strictly increasing"));
        }
        Ok(Self { observable, points, metadata })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn delta_tildes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Trapezoidal `∫ |f| dδ̃` over the grid points inside `[lo, hi]`.
    pub fn integrate_abs(&self, lo: f64, hi: f64) -> f64 {
        let inside: Vec<&(f64, f64)> = self.points.iter().filter(|p| p.0 >= lo && p.0 <= hi).collect();
        inside.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1.abs() + w[1].1.abs())).sum()
    }

    /// Pointwise difference on a shared grid.
    pub fn difference(&self, other: &Spectrum) -> Result<Vec<(f64, f64)>> {
        if self.delta_tildes() != other.delta_tildes() {
            return Err(Error::invalid("spectrum", "grids differ"));
        }
        Ok(self.points.iter().zip(&other.points).map(|(a, b)| (a.0, a.1 - b.1)).collect())
    }

    /// `#`-prefixed header then two columns.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# observable = {}", self.observable);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "# delta_tilde {}", self.observable);
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x:e} {y:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut observable = None;
        let mut metadata = Vec::new();
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.split_once(" = ") {
                    let (k, v) = (k.trim(), v.trim());
                    if k == "observable" {
                        observable = Some(v.parse()?);
                    } else {
                        metadata.push((k.to_string(), v.to_string()));
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Table { line: i + 1, reason: format!("expected 2 columns, found {}", cols.len()) });
            }
            let num =
                |s: &str| s.parse::<f64>().map_err(|e| Error::Table { line: i + 1, reason: format!("`{s}`: {e}") });
            points.push((num(cols[0])?, num(cols[1])?));
        }
        let observable =
            observable.ok_or(Error::Table { line: 0, reason: "missing `# observable = ...` header".into() })?;
        Self::new(observable, points, metadata)
    }
}

/// `lo, lo + step, …` up to `hi` (inclusive within rounding).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("grid", format!("need lo ≤ hi and step > 0, got {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Union of grids, sorted, with points closer than `1e-9` merged.
pub fn merge_grids(grids: &[Vec<f64>]) -> Vec<f64> {
    let mut all: Vec<f64> = grids.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    all
}

/// `Tr(a†²a² ρ)`.
pub fn two_photon_rate(rho: &CMatrix, dims: &SystemDims) -> f64 {
    let a = build_annihilation(dims);
    let a2 = &a * &a;
    (a2.adjoint() * a2 * rho).trace().re
}

/// `Tr(a†a ρ)`.
pub fn one_photon_rate(rho: &CMatrix, dims: &SystemDims) -> f64 {
    let a = build_annihilation(dims);
    (a.adjoint() * a * rho).trace().re
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub n_max: usize,
    pub floquet: FloquetOptions,
    pub exec: Execution,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { n_max: 3, floquet: FloquetOptions::default(), exec: Execution::Parallel }
    }
}

/// Everything needed to evaluate one coupling node at any detuning.
struct Node {
    params: PhysicalParams,
    generator: Liouvillian,
}

impl Node {
    fn new(params: PhysicalParams, dims: &SystemDims, ab: &AblationSpec) -> Result<Self> {
        Ok(Self { generator: Liouvillian::assemble(&params.model(), dims, ab)?, params })
    }

    fn state(&self, delta: f64, dims: &SystemDims, ab: &AblationSpec, opts: &FloquetOptions) -> Result<CMatrix> {
        if delta.abs() < 1e-12 {
            // Both tones at ω1: one drive of amplitude E1 + E2.
            let mut folded = self.params.model();
            folded.e1 += folded.e2;
            folded.e2 = 0.0;
            let l = Liouvillian::assemble(&folded, dims, ab)?;
            return Ok(solve_liouvillian(&l, 1.0, opts)?.rho0().clone());
        }
        Ok(solve_liouvillian(&self.generator, delta, opts)?.rho0().clone())
    }
}

fn observable_value(rho: &CMatrix, dims: &SystemDims, observable: Observable) -> f64 {
    match observable {
        Observable::W2 | Observable::Delta2 => two_photon_rate(rho, dims),
        Observable::N1 => one_photon_rate(rho, dims),
    }
}

/// Settings echoed into every scan header.
pub fn params_metadata(
    p: &PhysicalParams,
    dist: &CouplingDistribution,
    ab: &AblationSpec,
    opts: &ScanOptions,
) -> Vec<(String, String)> {
    vec![
        ("g_f".into(), p.g_f.to_string()),
        ("gamma".into(), p.gamma.to_string()),
        ("e1".into(), p.e1.to_string()),
        ("e2".into(), p.e2.to_string()),
        ("n_max".into(), opts.n_max.to_string()),
        ("m_max".into(), opts.floquet.m_max.to_string()),
        ("harmonic_tolerance".into(), opts.floquet.harmonic_tolerance.to_string()),
        ("distribution_nodes".into(), dist.len().to_string()),
        ("distribution_cutoff".into(), dist.cutoff().to_string()),
        ("distribution_g_max".into(), dist.g_max().to_string()),
        ("distribution_mean".into(), dist.mean().to_string()),
        ("ablation".into(), ab.describe()),
    ]
}

/// Ensemble-averaged observable on a `δ̃` grid.
///
/// For [`Observable::Delta2`] the `E1 = 0` companion scan uses the same
/// ablation. Every (node, detuning) solve is an independent task; the
/// weighted reduction runs in node order.
pub fn scan_observable(
    p: &PhysicalParams,
    dist: &CouplingDistribution,
    grid: &[f64],
    ab: &AblationSpec,
    observable: Observable,
    opts: &ScanOptions,
) -> Result<Spectrum> {
    p.validate()?;
    ab.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty"));
    }
    let dims = SystemDims::new(opts.n_max)?;
    let variants: Vec<PhysicalParams> = match observable {
        Observable::Delta2 => vec![*p, PhysicalParams { e1: 0.0, ..*p }],
        _ => vec![*p],
    };
    let node_params: Vec<(usize, f64)> =
        (0..variants.len()).flat_map(|v| dist.nodes().iter().map(move |&g| (v, g))).collect();
    let nodes = par::try_map(opts.exec, &node_params, |&(v, g)| {
        Node::new(variants[v].with_g(g), &dims, ab).map_err(|e| e.at_coupling(g))
    })?;

    let n_nodes = dist.len();
    let tasks: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..nodes.len()).map(move |k| (i, k))).collect();
    let values = par::try_map(opts.exec, &tasks, |&(i, k)| {
        let dt = grid[i];
        let node = &nodes[k];
        let delta = p.g_f * (1.0 + dt);
        node.state(delta, &dims, ab, &opts.floquet)
            .map(|rho| observable_value(&rho, &dims, observable))
            .map_err(|e| e.at_coupling(node.params.g).at_detuning(dt))
    })?;

    let weights = dist.weights();
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let row = &values[i * nodes.len()..(i + 1) * nodes.len()];
            let avg = |part: &[f64]| part.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>();
            let mut value = avg(&row[..n_nodes]);
            if observable == Observable::Delta2 {
                value -= avg(&row[n_nodes..]);
            }
            (dt, value)
        })
        .collect();
    Spectrum::new(observable, points, params_metadata(p, dist, ab, opts))
}

/// 2PCR scan; `background_subtract` gives `Δ²` instead of `w²`.
pub fn scan_2pcr(
    p: &PhysicalParams,
    dist: &CouplingDistribution,
    grid: &[f64],
    ab: &AblationSpec,
    background_subtract: bool,
    opts: &ScanOptions,
) -> Result<Spectrum> {
    let observable = if background_subtract { Observable::Delta2 } else { Observable::W2 };
    scan_observable(p, dist, grid, ab, observable, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Quadratic3,
    Quadratic5,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::Quadratic3 => "quadratic-3pt",
            FitMethod::Quadratic5 => "quadratic-5pt-lsq",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    /// Fitted apex minus `nominal`.
    pub location: f64,
    pub apex: f64,
    pub height: f64,
    pub window: (f64, f64),
    pub fit_method: FitMethod,
    pub nominal: f64,
    /// RMS deviation of the fitted samples from the parabola.
    pub residual: f64,
}

/// Least-squares parabola through `(x, y)`; returns `(c0, c1, c2)` of
/// `c0 + c1 u + c2 u²` in the shifted variable `u = x − x_ref`.
fn fit_parabola(xs: &[f64], ys: &[f64], x_ref: f64) -> Option<(f64, f64, f64)> {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut r = nalgebra::Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let u = x - x_ref;
        let basis = [1.0, u, u * u];
        for i in 0..3 {
            r[i] += basis[i] * y;
            for j in 0..3 {
                m[(i, j)] += basis[i] * basis[j];
            }
        }
    }
    let c = m.lu().solve(&r)?;
    Some((c[0], c[1], c[2]))
}

/// Grid argmax inside `window`, refined by a 5-point least-squares parabola
/// (3-point next to the window edges).
pub fn find_peak(spec: &Spectrum, nominal: f64, window: (f64, f64)) -> Result<PeakReport> {
    let (lo, hi) = window;
    let no_peak = |reason: &str| Error::NoInteriorPeak { lo, hi, reason: reason.to_string() };
    let pts: Vec<(f64, f64)> =
        spec.points().iter().copied().filter(|p| p.0 >= lo - 1e-12 && p.0 <= hi + 1e-12).collect();
    if pts.len() < 5 {
        return Err(no_peak(&format!("{} grid points in window, need at least 5", pts.len())));
    }
    let best = pts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap();
    if best == 0 || best == pts.len() - 1 {
        return Err(no_peak("maximum on the window boundary"));
    }
    let (range, fit_method) = if best >= 2 && best + 2 < pts.len() {
        (best - 2..best + 3, FitMethod::Quadratic5)
    } else {
        (best - 1..best + 2, FitMethod::Quadratic3)
    };
    let xs: Vec<f64> = pts[range.clone()].iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts[range].iter().map(|p| p.1).collect();
    let x_ref = pts[best].0;
    let (c0, c1, c2) = fit_parabola(&xs, &ys, x_ref).ok_or_else(|| no_peak("degenerate fit"))?;
    if !(c2 < 0.0) {
        return Err(no_peak("fitted parabola is not concave"));
    }
    let u = -c1 / (2.0 * c2);
    let apex = x_ref + u;
    let height = c0 + c1 * u + c2 * u * u;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let v = x - x_ref;
            (c0 + c1 * v + c2 * v * v - y).powi(2)
        })
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    Ok(PeakReport { location: apex - nominal, apex, height, window, fit_method, nominal, residual })
}

/// Grid argmax inside `search`, then [`find_peak`] on a window of
/// half-width [`FIT_HALF_WIDTH`] around it (clipped to `search`).
pub fn locate_peak(spec: &Spectrum, nominal: f64, search: (f64, f64)) -> Result<PeakReport> {
    let (lo, hi) = search;
    let best = spec
        .points()
        .iter()
        .filter(|p| p.0 >= lo - 1e-12 && p.0 <= hi + 1e-12)
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| Error::NoInteriorPeak { lo, hi, reason: "no grid points in search range".into() })?;
    let window = ((best.0 - FIT_HALF_WIDTH).max(lo), (best.0 + FIT_HALF_WIDTH).min(hi));
    find_peak(spec, nominal, window)
}

pub const PRESET_NAMES: [&str; 6] =
    ["none", "no-1m-2m", "keep-only-resonant", "no-1m-linewidth", "no-0-1p", "combined-all"];

fn single_preset(name: &str) -> Result<AblationSpec> {
    use DressedLevel::*;
    let mut ab = AblationSpec::none();
    match name.trim() {
        "none" => {}
        "no-1m-2m" => {
            ab.zeroed.insert(Transition::new(Minus(1), Minus(2), Drive::Scanning));
        }
        "keep-only-resonant" => {
            let keep: BTreeSet<Transition> =
                [Transition::new(Ground, Minus(1), Drive::Fixed), Transition::new(Minus(1), Plus(2), Drive::Scanning)]
                    .into_iter()
                    .collect();
            ab.keep_only = Some(keep);
        }
        "no-1m-linewidth" => {
            ab.linewidth_removed.insert(Minus(1));
            ab.drop_jump_term = true;
        }
        "no-0-1p" => {
            ab.zeroed.insert(Transition::new(Ground, Plus(1), Drive::Scanning));
        }
        "combined-all" => {
            return ["keep-only-resonant", "no-1m-linewidth", "no-0-1p"]
                .iter()
                .try_fold(AblationSpec::none(), |acc, n| acc.combine(&single_preset(n)?));
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    }
    Ok(ab)
}

/// Named ablation, or several joined with `+` (e.g. `no-1m-2m+no-1m-linewidth`).
pub fn ablation_preset(name: &str) -> Result<AblationSpec> {
    name.split('+').try_fold(AblationSpec::none(), |acc, part| acc.combine(&single_preset(part)?))
}

/// Result of [`calibrate_cutoff`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub cutoff: f64,
    pub shift: f64,
    pub iterations: usize,
}

/// Bisection for the cutoff `F` at which `shift_of(F)` reaches `target`.
///
/// `bracket` must straddle the target. Stops when the shift is within
/// `tolerance` of the target or after `max_iter` halvings, returning the
/// best point seen.
pub fn calibrate_cutoff(
    target: f64,
    bracket: (f64, f64),
    tolerance: f64,
    max_iter: usize,
    shift_of: impl Fn(f64) -> Result<f64>,
) -> Result<Calibration> {
    let (mut lo, mut hi) = bracket;
    let (f_lo, f_hi) = (shift_of(lo)? - target, shift_of(hi)? - target);
    let mut best = if f_lo.abs() < f_hi.abs() {
        Calibration { cutoff: lo, shift: f_lo + target, iterations: 0 }
    } else {
        Calibration { cutoff: hi, shift: f_hi + target, iterations: 0 }
    };
    if (best.shift - target).abs() <= tolerance {
        return Ok(best);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::invalid(
            "cutoff",
            format!(
                "bracket [{lo}, {hi}] gives shifts {} and {}, both on one side of {target}",
                f_lo + target,
                f_hi + target
            ),
        ));
    }
    let lo_sign = f_lo.signum();
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        let s = shift_of(mid)?;
        if (s - target).abs() < (best.shift - target).abs() {
            best = Calibration { cutoff: mid, shift: s, iterations: it };
        }
        best.iterations = it;
        if (s - target).abs() <= tolerance {
            break;
        }
        if (s - target).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::delta_distribution;
    use crate::operators::Atom;
    use crate::C64;

    fn spectrum(points: Vec<(f64, f64)>) -> Spectrum {
        Spectrum::new(Observable::W2, points, vec![]).unwrap()
    }

    #[test]
    fn rates_on_simple_states() {
        let d = SystemDims::new(3).unwrap();
        assert_eq!(two_photon_rate(&d.projector(0, Atom::Ground), &d), 0.0);
        assert!((two_photon_rate(&d.projector(2, Atom::Ground), &d) - 2.0).abs() < 1e-14);
        assert!((one_photon_rate(&d.projector(1, Atom::Ground), &d) - 1.0).abs() < 1e-14);
        let mix = (d.projector(0, Atom::Ground) + d.projector(1, Atom::Ground)) * C64::new(0.5, 0.0);
        assert!((one_photon_rate(&mix, &d) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn poissonian_second_moment() {
        let d = SystemDims::new(12).unwrap();
        let nbar: f64 = 0.3;
        let mut rho = CMatrix::zeros(d.dim(), d.dim());
        let mut p = (-nbar).exp();
        for n in 0..=12 {
            let i = d.index(n, Atom::Ground).unwrap();
            rho[(i, i)] = C64::new(p, 0.0);
            p *= nbar / (n + 1) as f64;
        }
        assert!((two_photon_rate(&rho, &d) - nbar * nbar).abs() < 1e-10);
    }

    #[test]
    fn quadratic_apex_is_exact() {
        let pts: Vec<(f64, f64)> =
            uniform_grid(2.0, 2.6, 0.01).unwrap().into_iter().map(|x| (x, 3.0 - 40.0 * (x - 2.3137).powi(2))).collect();
        let r = find_peak(&spectrum(pts), RESONANCE_1M_2P, (2.1, 2.5)).unwrap();
        assert!((r.apex - 2.3137).abs() < 1e-12);
        assert!((r.location - (2.3137 - RESONANCE_1M_2P)).abs() < 1e-12);
        assert_eq!(r.fit_method, FitMethod::Quadratic5);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn symmetric_triangle_apex() {
        let pts: Vec<(f64, f64)> = (0..21).map(|i| (i as f64 * 0.1, 5.0 - (i as f64 * 0.1 - 1.2).abs())).collect();
        let r = find_peak(&spectrum(pts), 1.0, (0.0, 2.0)).unwrap();
        assert!((r.location - 0.2).abs() < 1e-12);
    }

    #[test]
    fn boundary_maximum_rejected() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert!(matches!(find_peak(&spectrum(pts.clone()), 0.0, (0.0, 9.0)), Err(Error::NoInteriorPeak { .. })));
        assert!(matches!(find_peak(&spectrum(pts), 0.0, (0.0, 3.0)), Err(Error::NoInteriorPeak { .. })));
    }

    #[test]
    fn three_point_fit_near_edges() {
        let pts: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, -(i as f64 - 1.2).powi(2))).collect();
        let r = find_peak(&spectrum(pts), 0.0, (0.0, 7.0)).unwrap();
        assert_eq!(r.fit_method, FitMethod::Quadratic3);
        assert!((r.apex - 1.2).abs() < 1e-12);
    }

    #[test]
    fn presets() {
        assert!(ablation_preset("none").unwrap().is_empty());
        let a = ablation_preset("no-1m-2m").unwrap();
        assert_eq!(
            a.zeroed.iter().copied().collect::<Vec<_>>(),
            vec![Transition::new(DressedLevel::Minus(1), DressedLevel::Minus(2), Drive::Scanning)]
        );
        let c = ablation_preset("combined-all").unwrap();
        assert_eq!(c.keep_only.as_ref().unwrap().len(), 2);
        assert!(c.drop_jump_term && c.linewidth_removed.contains(&DressedLevel::Minus(1)));
        let two = ablation_preset("no-1m-2m+no-1m-linewidth").unwrap();
        assert!(two.drop_jump_term && two.zeroed.len() == 1);
        assert!(matches!(ablation_preset("bogus"), Err(Error::UnknownPreset(_))));
        for name in PRESET_NAMES {
            ablation_preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn spectrum_text_round_trip() {
        let s = Spectrum::new(Observable::Delta2, vec![(0.1, -2e-5), (0.2, 3.5)], vec![("gamma".into(), "2".into())])
            .unwrap();
        let back = Spectrum::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
        assert!(Spectrum::new(Observable::W2, vec![(0.2, 1.0), (0.1, 1.0)], vec![]).is_err());
        assert!(Spectrum::from_text("0.1 2").is_err());
    }

    #[test]
    fn grids() {
        let g = uniform_grid(2.0, 2.6, 0.01).unwrap();
        assert_eq!(g.len(), 61);
        assert!((g[60] - 2.6).abs() < 1e-12);
        assert!(uniform_grid(1.0, 0.0, 0.1).is_err());
        let m = merge_grids(&[vec![0.0, 0.5, 1.0], vec![0.5 + 1e-12, 0.7]]);
        assert_eq!(m.len(), 4);
    }

    #[test]
    fn background_vanishes_without_fixed_drive() {
        let p = PhysicalParams { e1: 0.0, ..PhysicalParams::reference_point() };
        let dist = delta_distribution(9.0).unwrap();
        let opts = ScanOptions { n_max: 2, ..Default::default() };
        let s = scan_2pcr(&p, &dist, &[-1.0, 0.0, 2.4], &AblationSpec::none(), true, &opts).unwrap();
        assert!(s.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn coincident_tones_are_folded() {
        let p = PhysicalParams::reference_point();
        let dist = delta_distribution(9.0).unwrap();
        let opts = ScanOptions { n_max: 2, ..Default::default() };
        let s = scan_2pcr(&p, &dist, &[-1.0 - 1e-3, -1.0, -1.0 + 1e-3], &AblationSpec::none(), false, &opts).unwrap();
        assert!(s.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn scan_is_deterministic_across_execution_modes() {
        let p = PhysicalParams::reference_point();
        let dist = CouplingDistribution::new(vec![7.0, 8.0, 9.0], vec![0.2, 0.3, 0.5], 0.7, 9.0).unwrap();
        let grid = uniform_grid(2.2, 2.5, 0.05).unwrap();
        let ab = ablation_preset("no-1m-2m").unwrap();
        let seq = ScanOptions { n_max: 2, exec: Execution::Sequential, ..Default::default() };
        let par = ScanOptions { exec: Execution::Parallel, ..seq };
        let a = scan_2pcr(&p, &dist, &grid, &ab, true, &seq).unwrap();
        let b = scan_2pcr(&p, &dist, &grid, &ab, true, &par).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn calibration_by_bisection() {
        let c = calibrate_cutoff(-0.141, (0.5, 0.99), 1e-6, 60, |f| Ok(-0.3 * (1.0 - f))).unwrap();
        assert!((c.shift + 0.141).abs() < 1e-6);
        assert!((c.cutoff - (1.0 - 0.141 / 0.3)).abs() < 1e-4);
        assert!(calibrate_cutoff(1.0, (0.5, 0.9), 1e-6, 10, Ok).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn parabola_apex_recovered(x0 in 2.15f64..2.45, curv in 1.0f64..100.0, h in 0.1f64..5.0) {
                let pts: Vec<(f64, f64)> = uniform_grid(2.0, 2.6, 0.01).unwrap().into_iter()
                    .map(|x| (x, h - curv * (x - x0).powi(2))).collect();
                let r = locate_peak(&spectrum(pts), RESONANCE_1M_2P, (2.0, 2.6)).unwrap();
                prop_assert!((r.apex - x0).abs() < 1e-9);
                prop_assert!(r.location >= r.window.0 - r.nominal && r.location <= r.window.1 - r.nominal);
            }
        }
    }
}
