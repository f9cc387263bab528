//! Command-line front end.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{run, RunError, RunOutcome};

#[derive(Debug, Parser)]
#[command(name = "jc-pcs", about = "Two-photon coincidence spectroscopy of a driven atom-cavity system")]
pub struct Args {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// scan-2pcr, scan-vee, peak, pg-dist or reproduce-figure.
    #[arg(long)]
    pub mode: Option<String>,
    /// 2, 3, 4a, 4b or 5 (with --mode reproduce-figure).
    #[arg(long)]
    pub figure: Option<String>,
    /// Ablation preset, `+` joins several.
    #[arg(long)]
    pub preset: Option<String>,
    /// LO:HI:STEP, comma-separated segments, or `auto`.
    #[arg(long = "delta-grid", allow_hyphen_values = true)]
    pub delta_grid: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Any other config key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl Args {
    /// Flag overrides in application order: `--set` first, named flags last.
    pub fn overrides(&self) -> Result<Vec<(String, String)>, ConfigError> {
        let mut out = Vec::new();
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: kv.clone() })?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let named = [
            ("mode", self.mode.clone()),
            ("figure", self.figure.clone()),
            ("preset", self.preset.clone()),
            ("delta_grid", self.delta_grid.clone()),
            ("threads", self.threads.map(|t| t.to_string())),
            ("seed", self.seed.map(|s| s.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        out.extend(named.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        Ok(out)
    }

    pub fn resolve(&self) -> Result<RunConfig, RunError> {
        let text = match &self.config {
            Some(path) => {
                std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.clone(), source })?
            }
            None => String::new(),
        };
        Ok(parse_config(&text, &self.overrides()?)?)
    }
}

/// Parse `args`, run, report; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match args.resolve().and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.summary.is_empty() {
                println!("{}", outcome.summary);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
