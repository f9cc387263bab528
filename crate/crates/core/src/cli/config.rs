//! Flat `key = value` run configuration.
//!
//! Every key has a default, so an empty file is a complete configuration.
//! Unknown keys are rejected rather than ignored. The resolved configuration
//! can be written back as `# config.key = value` header lines and parsed
//! again to an identical [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::ensemble::{MaskGeometry, DEFAULT_BINS, DEFAULT_CUTOFF, DEFAULT_POSITIONS, DEFAULT_SEED};
use crate::liouvillian::{AblationSpec, PhysicalParams, Transition};
use crate::operators::DressedLevel;
use crate::spectroscopy::{ablation_preset, merge_grids, uniform_grid, RESONANCE_1M_2P};
use crate::vee::{VeeParams, VeeVariant};

/// Prefix of echoed configuration lines in output headers.
pub const ECHO_PREFIX: &str = "# config.";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },

    #[error("config key `{key}`: cannot read `{value}` as {expected}")]
    TypeMismatch { key: String, value: String, expected: &'static str },

    #[error("config key `{key}` is required: {reason}")]
    MissingRequired { key: String, reason: String },

    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
}

impl ConfigError {
    /// The key the error is about, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key }
            | ConfigError::TypeMismatch { key, .. }
            | ConfigError::MissingRequired { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
            ConfigError::Syntax { .. } => None,
        }
    }
}

fn invalid(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Scan2pcr,
    ScanVee,
    Peak,
    PgDist,
    ReproduceFigure,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Scan2pcr => "scan-2pcr",
            Mode::ScanVee => "scan-vee",
            Mode::Peak => "peak",
            Mode::PgDist => "pg-dist",
            Mode::ReproduceFigure => "reproduce-figure",
        })
    }
}

impl FromStr for Mode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "scan-2pcr" => Mode::Scan2pcr,
            "scan-vee" => Mode::ScanVee,
            "peak" => Mode::Peak,
            "pg-dist" => Mode::PgDist,
            "reproduce-figure" => Mode::ReproduceFigure,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4a,
    Fig4b,
    Fig5,
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig2 => "2",
            Figure::Fig3 => "3",
            Figure::Fig4a => "4a",
            Figure::Fig4b => "4b",
            Figure::Fig5 => "5",
        })
    }
}

impl FromStr for Figure {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "2" => Figure::Fig2,
            "3" => Figure::Fig3,
            "4a" => Figure::Fig4a,
            "4b" => Figure::Fig4b,
            "5" => Figure::Fig5,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistKind {
    /// All atoms at `g = g_f`.
    Delta,
    /// Histogram of the coupling seen through the slit mask.
    Mask,
    /// Two-column table read from `dist_file`.
    File,
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistKind::Delta => "delta",
            DistKind::Mask => "mask",
            DistKind::File => "file",
        })
    }
}

impl FromStr for DistKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "delta" => DistKind::Delta,
            "mask" => DistKind::Mask,
            "file" => DistKind::File,
            _ => return Err(()),
        })
    }
}

/// `auto`, or comma-separated `lo:hi:step` segments merged into one grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Auto,
    Segments(Vec<(f64, f64, f64)>),
}

impl GridSpec {
    /// Resolve to points; `auto_segments` is used for [`GridSpec::Auto`].
    pub fn points(&self, auto_segments: &[(f64, f64, f64)]) -> crate::Result<Vec<f64>> {
        let segs = match self {
            GridSpec::Auto => auto_segments,
            GridSpec::Segments(s) => s.as_slice(),
        };
        let grids = segs.iter().map(|&(lo, hi, step)| uniform_grid(lo, hi, step)).collect::<crate::Result<Vec<_>>>()?;
        Ok(merge_grids(&grids))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Auto => f.write_str("auto"),
            GridSpec::Segments(segs) => {
                let parts: Vec<String> = segs.iter().map(|(lo, hi, step)| format!("{lo}:{hi}:{step}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(GridSpec::Auto);
        }
        let segs = s
            .split(',')
            .map(|seg| {
                let nums: Vec<f64> = seg
                    .split(':')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
                    .collect::<Result<_, _>>()?;
                match nums[..] {
                    [lo, hi, step] if lo <= hi && step > 0.0 && step.is_finite() => Ok((lo, hi, step)),
                    [_, _, _] => Err(format!("segment `{seg}` needs lo <= hi and step > 0")),
                    _ => Err(format!("segment `{seg}` is not lo:hi:step")),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GridSpec::Segments(segs))
    }
}

/// Coarse scan over the whole spectrum, refined around the `δ̃ = √2 + 1` peak.
pub const AUTO_2PCR_GRID: [(f64, f64, f64); 2] = [(-1.5, 3.0, 0.02), (2.2, 2.65, 0.002)];

/// Coarse three-level scan, refined around `δ̃ = 1`.
pub const AUTO_VEE_GRID: [(f64, f64, f64); 2] = [(-2.0, 2.0, 0.02), (0.8, 1.2, 0.002)];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Required for `reproduce-figure`.
    pub figure: Option<Figure>,

    pub g_f: f64,
    pub gamma: f64,
    pub e1: f64,
    pub e2: f64,

    pub distribution: DistKind,
    pub dist_file: Option<PathBuf>,
    pub g_max: f64,
    pub cutoff: f64,
    pub n_positions: usize,
    pub n_bins: usize,
    pub mask_geometry: MaskGeometry,
    pub seed: u64,

    /// Named preset, `+`-composable; combined with the explicit keys below.
    pub preset: String,
    pub zero_transitions: Vec<Transition>,
    /// Empty means no whitelist.
    pub keep_only: Vec<Transition>,
    pub linewidth_removed: Vec<DressedLevel>,
    pub drop_jump_term: bool,

    pub delta_grid: GridSpec,
    pub background_subtract: bool,
    /// Search range for the `δ̃ ≈ √2 + 1` peak.
    pub peak_search: (f64, f64),

    pub n_max: usize,
    pub m_max: usize,
    pub harmonic_tolerance: f64,

    pub vee_g: f64,
    pub vee_e: f64,
    pub vee_gamma: f64,
    pub vee_variant: VeeVariant,

    /// Worker threads; 0 uses all available cores.
    pub threads: usize,
    /// Output directory.
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PhysicalParams::reference_point();
        let v = VeeParams::reference_point();
        Self {
            mode: Mode::Scan2pcr,
            figure: None,
            g_f: p.g_f,
            gamma: p.gamma,
            e1: p.e1,
            e2: p.e2,
            distribution: DistKind::Mask,
            dist_file: None,
            g_max: 9.0,
            cutoff: DEFAULT_CUTOFF,
            n_positions: DEFAULT_POSITIONS,
            n_bins: DEFAULT_BINS,
            mask_geometry: MaskGeometry::WaistPlane,
            seed: DEFAULT_SEED,
            preset: "none".into(),
            zero_transitions: Vec::new(),
            keep_only: Vec::new(),
            linewidth_removed: Vec::new(),
            drop_jump_term: false,
            delta_grid: GridSpec::Auto,
            background_subtract: false,
            peak_search: (RESONANCE_1M_2P - 0.2, RESONANCE_1M_2P + 0.2),
            n_max: 3,
            m_max: 3,
            harmonic_tolerance: crate::floquet::FloquetOptions::default().harmonic_tolerance,
            vee_g: v.g,
            vee_e: v.e,
            vee_gamma: v.gamma,
            vee_variant: VeeVariant::Full,
            threads: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// Keys in echo order.
pub const KEYS: [&str; 31] = [
    "mode",
    "figure",
    "g_f",
    "gamma",
    "e1",
    "e2",
    "distribution",
    "dist_file",
    "g_max",
    "cutoff",
    "n_positions",
    "n_bins",
    "mask_geometry",
    "seed",
    "preset",
    "zero_transitions",
    "keep_only",
    "linewidth_removed",
    "drop_jump_term",
    "delta_grid",
    "background_subtract",
    "peak_search",
    "n_max",
    "m_max",
    "harmonic_tolerance",
    "vee_g",
    "vee_e",
    "vee_gamma",
    "vee_variant",
    "threads",
    "out",
];

/// Shorter spellings accepted on input.
fn aliased(key: &str) -> &str {
    match key {
        "grid" => "delta_grid",
        "ablation" => "preset",
        "geometry" => "mask_geometry",
        other => other,
    }
}

fn typed<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| ConfigError::TypeMismatch {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn list<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<Vec<T>, ConfigError> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| typed(key, s, expected)).collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let key = aliased(key.trim());
        match key {
            "mode" => self.mode = typed(key, value, "one of scan-2pcr, scan-vee, peak, pg-dist, reproduce-figure")?,
            "figure" => {
                self.figure = if value.is_empty() { None } else { Some(typed(key, value, "one of 2, 3, 4a, 4b, 5")?) }
            }
            "g_f" => self.g_f = typed(key, value, "a real number")?,
            "gamma" => self.gamma = typed(key, value, "a real number")?,
            "e1" => self.e1 = typed(key, value, "a real number")?,
            "e2" => self.e2 = typed(key, value, "a real number")?,
            "distribution" => self.distribution = typed(key, value, "one of delta, mask, file")?,
            "dist_file" => self.dist_file = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            "g_max" => self.g_max = typed(key, value, "a real number")?,
            "cutoff" => self.cutoff = typed(key, value, "a real number")?,
            "n_positions" => self.n_positions = typed(key, value, "a non-negative integer")?,
            "n_bins" => self.n_bins = typed(key, value, "a non-negative integer")?,
            "mask_geometry" => self.mask_geometry = typed(key, value, "one of waist-plane, transit")?,
            "seed" => self.seed = typed(key, value, "a non-negative integer")?,
            "preset" => self.preset = value.to_string(),
            "zero_transitions" => self.zero_transitions = list(key, value, "a list of lower:upper:drive transitions")?,
            "keep_only" => self.keep_only = list(key, value, "a list of lower:upper:drive transitions")?,
            "linewidth_removed" => self.linewidth_removed = list(key, value, "a list of dressed levels")?,
            "drop_jump_term" => self.drop_jump_term = typed(key, value, "true or false")?,
            "delta_grid" => {
                self.delta_grid = value.parse().map_err(|_| ConfigError::TypeMismatch {
                    key: key.to_string(),
                    value: value.to_string(),
                    expected: "`auto` or lo:hi:step segments",
                })?
            }
            "background_subtract" => self.background_subtract = typed(key, value, "true or false")?,
            "peak_search" => {
                let mismatch =
                    || ConfigError::TypeMismatch { key: key.to_string(), value: value.to_string(), expected: "lo:hi" };
                let (lo, hi) = value.split_once(':').ok_or_else(mismatch)?;
                self.peak_search =
                    (lo.trim().parse().map_err(|_| mismatch())?, hi.trim().parse().map_err(|_| mismatch())?);
            }
            "n_max" => self.n_max = typed(key, value, "a non-negative integer")?,
            "m_max" => self.m_max = typed(key, value, "a non-negative integer")?,
            "harmonic_tolerance" => self.harmonic_tolerance = typed(key, value, "a real number")?,
            "vee_g" => self.vee_g = typed(key, value, "a real number")?,
            "vee_e" => self.vee_e = typed(key, value, "a real number")?,
            "vee_gamma" => self.vee_gamma = typed(key, value, "a real number")?,
            "vee_variant" => self.vee_variant = typed(key, value, "one of full, jump-free, ablated")?,
            "threads" => self.threads = typed(key, value, "a non-negative integer")?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// Current value of `key` in the form [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match aliased(key) {
            "mode" => self.mode.to_string(),
            "figure" => self.figure.map(|f| f.to_string()).unwrap_or_default(),
            "g_f" => self.g_f.to_string(),
            "gamma" => self.gamma.to_string(),
            "e1" => self.e1.to_string(),
            "e2" => self.e2.to_string(),
            "distribution" => self.distribution.to_string(),
            "dist_file" => self.dist_file.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "g_max" => self.g_max.to_string(),
            "cutoff" => self.cutoff.to_string(),
            "n_positions" => self.n_positions.to_string(),
            "n_bins" => self.n_bins.to_string(),
            "mask_geometry" => self.mask_geometry.to_string(),
            "seed" => self.seed.to_string(),
            "preset" => self.preset.clone(),
            "zero_transitions" => join(&self.zero_transitions),
            "keep_only" => join(&self.keep_only),
            "linewidth_removed" => join(&self.linewidth_removed),
            "drop_jump_term" => self.drop_jump_term.to_string(),
            "delta_grid" => self.delta_grid.to_string(),
            "background_subtract" => self.background_subtract.to_string(),
            "peak_search" => format!("{}:{}", self.peak_search.0, self.peak_search.1),
            "n_max" => self.n_max.to_string(),
            "m_max" => self.m_max.to_string(),
            "harmonic_tolerance" => self.harmonic_tolerance.to_string(),
            "vee_g" => self.vee_g.to_string(),
            "vee_e" => self.vee_e.to_string(),
            "vee_gamma" => self.vee_gamma.to_string(),
            "vee_variant" => self.vee_variant.to_string(),
            "threads" => self.threads.to_string(),
            "out" => self.out.display().to_string(),
            _ => return None,
        })
    }

    /// Canonical `(key, value)` pairs, one per key.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|&k| (k, self.get(k).expect("every canonical key has a value"))).collect()
    }

    /// The configuration as `# config.key = value` header lines.
    pub fn echo(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{ECHO_PREFIX}{k} = {v}\n")).collect()
    }

    /// Recover a configuration from the echoed header lines of an output file.
    pub fn from_echo(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix(ECHO_PREFIX) {
                let (k, v) =
                    rest.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: line.to_string() })?;
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            g: self.g_f,
            g_f: self.g_f,
            gamma: self.gamma,
            e1: self.e1,
            e2: self.e2,
            delta: self.g_f * (1.0 + RESONANCE_1M_2P),
        }
    }

    pub fn vee(&self) -> VeeParams {
        VeeParams { g: self.vee_g, e: self.vee_e, gamma: self.vee_gamma, delta: -self.vee_g }
    }

    /// The explicit ablation keys as a spec (without the preset).
    pub fn explicit_ablation(&self) -> AblationSpec {
        AblationSpec {
            zeroed: self.zero_transitions.iter().copied().collect(),
            keep_only: (!self.keep_only.is_empty()).then(|| self.keep_only.iter().copied().collect()),
            linewidth_removed: self.linewidth_removed.iter().copied().collect(),
            drop_jump_term: self.drop_jump_term,
            ..AblationSpec::none()
        }
    }

    /// Preset combined with the explicit keys.
    pub fn ablation(&self) -> Result<AblationSpec, ConfigError> {
        let preset = ablation_preset(&self.preset).map_err(|e| invalid("preset", e))?;
        preset.combine(&self.explicit_ablation()).map_err(|e| invalid("zero_transitions", e))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mode == Mode::ReproduceFigure && self.figure.is_none() {
            return Err(ConfigError::MissingRequired {
                key: "figure".into(),
                reason: "mode reproduce-figure needs one of 2, 3, 4a, 4b, 5".into(),
            });
        }
        if self.distribution == DistKind::File && self.dist_file.is_none() {
            return Err(ConfigError::MissingRequired {
                key: "dist_file".into(),
                reason: "distribution = file needs a table path".into(),
            });
        }
        if let Err(e) = self.physical().validate() {
            let key = match &e {
                crate::Error::InvalidParameter { name, .. } => *name,
                _ => "g_f",
            };
            return Err(invalid(key, e));
        }
        self.vee().validate().map_err(|e| invalid("vee_g", e))?;
        for (key, v, lo) in [
            ("g_max", self.g_max, 0.0),
            ("cutoff", self.cutoff, 0.0),
            ("harmonic_tolerance", self.harmonic_tolerance, 0.0),
        ] {
            if !(v.is_finite() && v > lo) {
                return Err(invalid(key, "must be positive and finite"));
            }
        }
        if self.cutoff >= 1.0 {
            return Err(invalid("cutoff", "must be below 1"));
        }
        if self.n_positions == 0 {
            return Err(invalid("n_positions", "must be positive"));
        }
        if self.n_bins == 0 {
            return Err(invalid("n_bins", "must be positive"));
        }
        if self.n_max < 2 {
            return Err(invalid("n_max", "at least 2 is needed for two-photon rates"));
        }
        if self.m_max == 0 {
            return Err(invalid("m_max", "must be at least 1"));
        }
        let (lo, hi) = self.peak_search;
        if !(lo < hi) {
            return Err(invalid("peak_search", "needs lo < hi"));
        }
        self.ablation()?.validate().map_err(|e| invalid("preset", e))?;
        Ok(())
    }
}

/// Parse a config document, apply `overrides` in order, and validate.
///
/// Lines are `key = value`; blank lines and lines starting with `#` are
/// skipped, except echoed `# config.key = value` lines, which are read as
/// settings. A document that has any echoed lines is treated as an output
/// file: only those lines are read, so results can be fed back in as config.
pub fn parse_config(text: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let echoed = text.lines().any(|l| l.trim_start().starts_with(ECHO_PREFIX));
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let body = if let Some(rest) = line.strip_prefix(ECHO_PREFIX) {
            rest
        } else if echoed || line.is_empty() || line.starts_with('#') {
            continue;
        } else {
            line
        };
        let (k, v) = body.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
        if k.trim().is_empty() {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        }
        cfg.set(k, v)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
