//! Coupling-strength distributions `P(g)` and ensemble averages over them.
//!
//! Atoms pass through a rectangular mask centred on a cavity antinode. Each
//! position sees `g = g_max · exp(−(x² + y²)/w0²) · cos(2πz/λ)`; sampling the
//! mask uniformly and histogramming `g` above a cutoff `F·g_max` gives the
//! distribution. Averages are taken on observables, which is exact because
//! both the average and the trace are linear.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::CMatrix;

pub const DEFAULT_CUTOFF: f64 = 0.35;
pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_POSITIONS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed_2b0c;

/// How the mask rectangle is laid over the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskGeometry {
    /// Mask in the plane through the waist centre: `x ∈ ±w0/2` transverse,
    /// `z ∈ ±λ/20` along the standing wave, `y = 0`.
    #[default]
    WaistPlane,
    /// As above, but atoms also cross the mode along `y`, sampled uniformly
    /// over the full chord on which `g` can still exceed the cutoff.
    Transit,
}

impl FromStr for MaskGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "waist" | "waist-plane" => Ok(Self::WaistPlane),
            "transit" => Ok(Self::Transit),
            other => Err(Error::invalid("mask_geometry", format!("unknown geometry `{other}`"))),
        }
    }
}

impl std::fmt::Display for MaskGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::WaistPlane => "waist-plane",
            Self::Transit => "transit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskSpec {
    pub g_max: f64,
    pub cutoff: f64,
    pub n_positions: usize,
    pub n_bins: usize,
    pub seed: u64,
    pub geometry: MaskGeometry,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self {
            g_max: 9.0,
            cutoff: DEFAULT_CUTOFF,
            n_positions: DEFAULT_POSITIONS,
            n_bins: DEFAULT_BINS,
            seed: DEFAULT_SEED,
            geometry: MaskGeometry::WaistPlane,
        }
    }
}

impl MaskSpec {
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }
}

/// Discrete `P(g)`: increasing nodes with normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingDistribution {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cutoff: f64,
    g_max: f64,
}

impl CouplingDistribution {
    /// Validates and renormalizes the weights.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, cutoff: f64, g_max: f64) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::invalid("distribution", "needs equally many nodes and weights, at least one"));
        }
        if !(g_max > 0.0 && g_max.is_finite()) || !(0.0..=1.0).contains(&cutoff) {
            return Err(Error::invalid("distribution", "needs g_max > 0 and 0 ≤ F ≤ 1"));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("distribution", "nodes must be strictly increasing"));
        }
        let slack = 1e-12 * g_max;
        if nodes[0] < cutoff * g_max - slack || nodes[nodes.len() - 1] > g_max + slack {
            return Err(Error::invalid("distribution", format!("nodes must lie in [{}, {g_max}]", cutoff * g_max)));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("distribution", "weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("distribution", "weights sum to zero"));
        }
        let weights = if (total - 1.0).abs() <= 4.0 * f64::EPSILON {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(Self { nodes, weights, cutoff, g_max })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(g, w)| g * w).sum()
    }

    /// Two-column `g weight` table with `#` header lines.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# g_max = {}", self.g_max);
        let _ = writeln!(out, "# cutoff = {}", self.cutoff);
        let _ = writeln!(out, "# g weight");
        for (g, w) in self.nodes.iter().zip(&self.weights) {
            let _ = writeln!(out, "{g:e} {w:e}");
        }
        out
    }

    /// Inverse of [`to_table`](Self::to_table). Without header lines the
    /// largest node is taken as `g_max` and the smallest fixes the cutoff.
    pub fn from_table(text: &str) -> Result<Self> {
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        let (mut g_max, mut cutoff) = (None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(header) = line.strip_prefix('#') {
                if let Some((k, v)) = header.split_once('=') {
                    let parse = |v: &str| {
                        v.trim().parse::<f64>().map_err(|e| Error::Table { line: i + 1, reason: e.to_string() })
                    };
                    match k.trim() {
                        "g_max" => g_max = Some(parse(v)?),
                        "cutoff" => cutoff = Some(parse(v)?),
                        _ => {}
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
            nodes.push(num(cols[0])?);
            weights.push(num(cols[1])?);
        }
        if nodes.is_empty() {
            return Err(Error::Table { line: 0, reason: "no data rows".into() });
        }
        let g_max = g_max.unwrap_or_else(|| nodes.iter().copied().fold(f64::MIN, f64::max));
        let cutoff = cutoff.unwrap_or_else(|| nodes.iter().copied().fold(f64::MAX, f64::min) / g_max);
        Self::new(nodes, weights, cutoff, g_max)
    }

    pub fn write_table(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_table())
    }

    pub fn read_table(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_table(&text)?)
    }
}

/// `P(g) = δ(g − g_f)`.
pub fn delta_distribution(g_f: f64) -> Result<CouplingDistribution> {
    if !(g_f > 0.0 && g_f.is_finite()) {
        return Err(Error::invalid("g_f", "must be positive"));
    }
    CouplingDistribution::new(vec![g_f], vec![1.0], 1.0, g_f)
}

/// Coupling at a mask position, lengths in units of the waist and wavelength.
pub fn mask_coupling(g_max: f64, x_over_waist: f64, y_over_waist: f64, z_over_wavelength: f64) -> f64 {
    g_max
        * (-(x_over_waist * x_over_waist + y_over_waist * y_over_waist)).exp()
        * (2.0 * std::f64::consts::PI * z_over_wavelength).cos()
}

/// Sample the mask uniformly and histogram the couplings above the cutoff.
pub fn build_mask_distribution(spec: &MaskSpec) -> Result<CouplingDistribution> {
    if !(spec.cutoff > 0.0 && spec.cutoff < 1.0) {
        return Err(Error::invalid("cutoff", format!("must lie in (0, 1), got {}", spec.cutoff)));
    }
    if !(spec.g_max > 0.0 && spec.g_max.is_finite()) {
        return Err(Error::invalid("g_max", "must be positive"));
    }
    if spec.n_bins == 0 {
        return Err(Error::invalid("n_bins", "must be at least 1"));
    }
    if spec.n_positions == 0 {
        return Err(Error::invalid("n_positions", "must be at least 1"));
    }
    let lo = spec.cutoff * spec.g_max;
    let hi = spec.g_max;
    let width = (hi - lo) / spec.n_bins as f64;
    let y_reach = (1.0 / spec.cutoff).ln().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut counts = vec![0u64; spec.n_bins];
    for _ in 0..spec.n_positions {
        let x = rng.gen_range(-0.5..=0.5);
        let z = rng.gen_range(-0.05..=0.05);
        let y = match spec.geometry {
            MaskGeometry::WaistPlane => 0.0,
            MaskGeometry::Transit => rng.gen_range(-y_reach..=y_reach),
        };
        let g = mask_coupling(spec.g_max, x, y, z);
        if g < lo {
            continue;
        }
        let bin = (((g - lo) / width) as usize).min(spec.n_bins - 1);
        counts[bin] += 1;
    }
    let kept: u64 = counts.iter().sum();
    if kept == 0 {
        return Err(Error::EmptySupport { lo, hi });
    }
    let (nodes, weights): (Vec<f64>, Vec<f64>) = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (lo + (i as f64 + 0.5) * width, c as f64 / kept as f64))
        .unzip();
    CouplingDistribution::new(nodes, weights, spec.cutoff, spec.g_max)
}

/// `Σ_i w_i f(g_i)`, evaluated per node (possibly concurrently) and reduced
/// in node order. Errors carry the offending node.
pub fn average_observable<F>(dist: &CouplingDistribution, exec: Execution, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let values = par::try_map(exec, dist.nodes(), |&g| f(g).map_err(|e| e.at_coupling(g)))?;
    Ok(values.iter().zip(dist.weights()).map(|(v, w)| v * w).sum())
}

/// Matrix-level average `Σ_i w_i ρ(g_i)`; kept for checking the
/// observable-level shortcut.
pub fn average_matrix<F>(dist: &CouplingDistribution, exec: Execution, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix> + Sync + Send,
{
    let mats = par::try_map(exec, dist.nodes(), |&g| f(g).map_err(|e| e.at_coupling(g)))?;
    let (r, c) = mats[0].shape();
    Ok(mats.iter().zip(dist.weights()).fold(CMatrix::zeros(r, c), |acc, (m, &w)| acc + m * crate::C64::new(w, 0.0)))
}
