//! Execute a [`RunConfig`].
//!
//! Every mode first computes all of its artifacts in memory and only then
//! writes them, so a solver failure leaves nothing on disk. If a write fails
//! the files already written in this run are removed again.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{ConfigError, DistKind, Figure, Mode, RunConfig, AUTO_2PCR_GRID, AUTO_VEE_GRID};
use crate::ensemble::{build_mask_distribution, delta_distribution, CouplingDistribution, MaskSpec};
use crate::floquet::FloquetOptions;
use crate::liouvillian::AblationSpec;
use crate::par::{self, Execution};
use crate::spectroscopy::{
    ablation_preset, locate_peak, scan_observable, Observable, PeakReport, ScanOptions, Spectrum, RESONANCE_1M_2P,
};
use crate::vee::{vee_peak_shift, vee_scan_peak, vee_variant_scan, VeeVariant};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] crate::Error),

    #[error("reading coupling table {path}: {source}")]
    DistFile { path: PathBuf, source: anyhow::Error },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Model(_) => 3,
            RunError::DistFile { .. } | RunError::Io { .. } => 4,
        }
    }
}

/// One output file, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions {
        n_max: cfg.n_max,
        floquet: FloquetOptions {
            m_max: cfg.m_max,
            harmonic_tolerance: cfg.harmonic_tolerance,
            ..FloquetOptions::default()
        },
        exec: Execution::Parallel,
    }
}

pub fn build_distribution(cfg: &RunConfig) -> Result<CouplingDistribution, RunError> {
    Ok(match cfg.distribution {
        DistKind::Delta => delta_distribution(cfg.g_f)?,
        DistKind::Mask => build_mask_distribution(&MaskSpec {
            g_max: cfg.g_max,
            cutoff: cfg.cutoff,
            n_positions: cfg.n_positions,
            n_bins: cfg.n_bins,
            seed: cfg.seed,
            geometry: cfg.mask_geometry,
        })?,
        DistKind::File => {
            let path = cfg.dist_file.clone().ok_or_else(|| ConfigError::MissingRequired {
                key: "dist_file".into(),
                reason: "distribution = file needs a table path".into(),
            })?;
            CouplingDistribution::read_table(&path).map_err(|source| RunError::DistFile { path, source })?
        }
    })
}

fn with_header(cfg: &RunConfig, body: &str) -> String {
    let mut out = cfg.echo();
    out.push_str(body);
    out
}

fn peak_row(label: &str, r: &PeakReport) -> String {
    format!(
        "{label} {:.6} {:.6} {:.6e} {:.4} {:.4} {} {:.3e}\n",
        r.location, r.apex, r.height, r.window.0, r.window.1, r.fit_method, r.residual
    )
}

const PEAK_COLUMNS: &str = "# curve shift apex height window_lo window_hi fit residual\n";

/// A named 2PCR curve over the configured distribution.
struct Curve {
    label: String,
    spectrum: Spectrum,
}

fn scan_curve(
    cfg: &RunConfig,
    dist: &CouplingDistribution,
    grid: &[f64],
    label: String,
    ab: &AblationSpec,
    observable: Observable,
) -> Result<Curve, RunError> {
    let mut spectrum = scan_observable(&cfg.physical(), dist, grid, ab, observable, &scan_options(cfg))?;
    spectrum.metadata.push(("curve".into(), label.clone()));
    Ok(Curve { label, spectrum })
}

fn preset_curves(
    cfg: &RunConfig,
    dist: &CouplingDistribution,
    grid: &[f64],
    prefix: &str,
    presets: &[&str],
) -> Result<Vec<Curve>, RunError> {
    let observable = if cfg.background_subtract { Observable::Delta2 } else { Observable::W2 };
    presets
        .iter()
        .map(|name| scan_curve(cfg, dist, grid, format!("{prefix}-{name}"), &ablation_preset(name)?, observable))
        .collect()
}

/// Curve files plus a summary of the fitted peak shifts.
fn curve_bundle(cfg: &RunConfig, curves: &[Curve], extra: &str) -> Vec<Artifact> {
    let mut files: Vec<Artifact> = curves
        .iter()
        .map(|c| Artifact { name: format!("{}.dat", c.label), contents: with_header(cfg, &c.spectrum.to_text()) })
        .collect();
    let mut summary = String::from(PEAK_COLUMNS);
    for c in curves {
        match locate_peak(&c.spectrum, RESONANCE_1M_2P, cfg.peak_search) {
            Ok(r) => summary.push_str(&peak_row(&c.label, &r)),
            Err(e) => {
                let _ = writeln!(summary, "{} no-peak # {e}", c.label);
            }
        }
    }
    summary.push_str(extra);
    files.push(Artifact { name: "summary.txt".into(), contents: with_header(cfg, &summary) });
    files
}

fn figure_artifacts(cfg: &RunConfig, figure: Figure) -> Result<Vec<Artifact>, RunError> {
    match figure {
        Figure::Fig2 => {
            let dist = build_distribution(cfg)?;
            let grid = cfg.delta_grid.points(&AUTO_2PCR_GRID)?;
            let none = AblationSpec::none();
            let w2 = scan_curve(cfg, &dist, &grid, "fig2-w2".into(), &none, Observable::W2)?;
            let d2 = scan_curve(cfg, &dist, &grid, "fig2-delta2".into(), &none, Observable::Delta2)?;
            let diff = Spectrum::new(Observable::Delta2, w2.spectrum.difference(&d2.spectrum)?, Vec::new())?;
            let (near, homogeneous) = (diff.integrate_abs(2.2, 2.6), diff.integrate_abs(-1.0, 1.0));
            let extra = format!(
                "# background_change_near_peak = {near:e}\n# background_change_homogeneous = {homogeneous:e}\n# ratio = {:e}\n",
                near / homogeneous
            );
            Ok(curve_bundle(cfg, &[w2, d2], &extra))
        }
        Figure::Fig3 => {
            let dist = delta_distribution(cfg.g_f)?;
            let grid = cfg.delta_grid.points(&AUTO_2PCR_GRID)?;
            let curves = preset_curves(cfg, &dist, &grid, "fig3", &["none", "no-1m-2m"])?;
            Ok(curve_bundle(cfg, &curves, ""))
        }
        Figure::Fig4a => {
            let dist = build_distribution(cfg)?;
            let grid = cfg.delta_grid.points(&AUTO_2PCR_GRID)?;
            let curves = preset_curves(cfg, &dist, &grid, "fig4a", &["none", "no-1m-2m"])?;
            Ok(curve_bundle(cfg, &curves, ""))
        }
        Figure::Fig4b => {
            let dist = build_distribution(cfg)?;
            let grid = cfg.delta_grid.points(&AUTO_2PCR_GRID)?;
            let presets = ["no-1m-2m+no-1m-linewidth", "combined-all", "no-1m-2m+no-1m-linewidth+no-0-1p"];
            let curves = preset_curves(cfg, &dist, &grid, "fig4b", &presets)?;
            Ok(curve_bundle(cfg, &curves, ""))
        }
        Figure::Fig5 => {
            let p = cfg.vee();
            let grid = cfg.delta_grid.points(&AUTO_VEE_GRID)?;
            let mut files = Vec::new();
            let mut summary = String::from(PEAK_COLUMNS);
            for variant in VeeVariant::ALL {
                let spec = vee_variant_scan(&p, &grid, variant, Execution::Parallel)?;
                let label = format!("fig5-{variant}");
                match vee_scan_peak(&spec) {
                    Ok(r) => summary.push_str(&peak_row(&label, &r)),
                    Err(e) => {
                        let _ = writeln!(summary, "{label} no-peak # {e}");
                    }
                }
                files.push(Artifact { name: format!("{label}.dat"), contents: with_header(cfg, &spec.to_text()) });
            }
            match vee_peak_shift(&p) {
                Ok(shift) => {
                    let _ =
                        writeln!(summary, "# closed_form_shift = {shift:.6}\n# closed_form_peak = {:.6}", 1.0 + shift);
                }
                Err(e) => {
                    let _ = writeln!(summary, "# closed_form_shift unavailable: {e}");
                }
            }
            files.push(Artifact { name: "summary.txt".into(), contents: with_header(cfg, &summary) });
            Ok(files)
        }
    }
}

/// All artifacts of a run, computed but not yet written.
pub fn compute(cfg: &RunConfig) -> Result<Vec<Artifact>, RunError> {
    cfg.validate()?;
    let work = || -> Result<Vec<Artifact>, RunError> {
        match cfg.mode {
            Mode::PgDist => {
                let dist = build_distribution(cfg)?;
                Ok(vec![Artifact { name: "pg.dat".into(), contents: with_header(cfg, &dist.to_table()) }])
            }
            Mode::Scan2pcr | Mode::Peak => {
                let dist = build_distribution(cfg)?;
                let grid = cfg.delta_grid.points(&AUTO_2PCR_GRID)?;
                let observable = if cfg.background_subtract { Observable::Delta2 } else { Observable::W2 };
                let curve = scan_curve(cfg, &dist, &grid, "spectrum".into(), &cfg.ablation()?, observable)?;
                let mut files = vec![Artifact {
                    name: "spectrum.dat".into(),
                    contents: with_header(cfg, &curve.spectrum.to_text()),
                }];
                if cfg.mode == Mode::Peak {
                    let r = locate_peak(&curve.spectrum, RESONANCE_1M_2P, cfg.peak_search)?;
                    let body = format!("{PEAK_COLUMNS}{}", peak_row("spectrum", &r));
                    files.push(Artifact { name: "peak.txt".into(), contents: with_header(cfg, &body) });
                }
                Ok(files)
            }
            Mode::ScanVee => {
                let grid = cfg.delta_grid.points(&AUTO_VEE_GRID)?;
                let spec = vee_variant_scan(&cfg.vee(), &grid, cfg.vee_variant, Execution::Parallel)?;
                Ok(vec![Artifact {
                    name: format!("vee-{}.dat", cfg.vee_variant),
                    contents: with_header(cfg, &spec.to_text()),
                }])
            }
            Mode::ReproduceFigure => {
                let figure = cfg.figure.ok_or_else(|| ConfigError::MissingRequired {
                    key: "figure".into(),
                    reason: "mode reproduce-figure needs one of 2, 3, 4a, 4b, 5".into(),
                })?;
                figure_artifacts(cfg, figure)
            }
        }
    };
    par::with_threads(cfg.threads, work)?
}

/// Write `artifacts` into `dir`; on failure remove whatever this call wrote.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, RunError> {
    let created_dir = !dir.exists();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| RunError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        if let Err(e) = std::fs::write(&path, &a.contents).map_err(io(&path)) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            if created_dir {
                let _ = std::fs::remove_dir(dir);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let artifacts = compute(cfg)?;
    let files = write_artifacts(&cfg.out, &artifacts)?;
    let summary = artifacts
        .iter()
        .find(|a| a.name == "summary.txt" || a.name == "peak.txt")
        .map(|a| {
            a.contents.lines().filter(|l| !l.starts_with(super::config::ECHO_PREFIX)).collect::<Vec<_>>().join("\n")
        })
        .unwrap_or_default();
    Ok(RunOutcome { files, summary })
}
