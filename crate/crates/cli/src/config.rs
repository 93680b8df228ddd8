//! Run configuration: command-line flags layered over an optional JSON
//! config file layered over per-command defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use slit_harmonic::geometry::GeometrySpec;
use slit_harmonic::{Error, Params, Result, SlitGeometry};

/// Flags shared by every subcommand. All are optional so that a config file
/// can fill the gaps.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Weight exponent a in (-1, 1).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "s")]
    pub a: Option<f64>,
    /// Fractional order s in (0, 1); a = 1 - 2s.
    #[arg(long)]
    pub s: Option<f64>,
    /// Cells per unit length (h = 1/N).
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for randomized data and property suites.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file; flags take precedence over its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Geometry JSON document ({"mode": "flat"|"curve", ...}).
    #[arg(long)]
    pub geometry: Option<PathBuf>,
}

/// Config-file entries. Unknown keys are rejected.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub a: Option<f64>,
    pub s: Option<f64>,
    pub grid_n: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub geometry: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub omega: Option<f64>,
    pub obstacle: Option<String>,
    pub alpha: Option<f64>,
    pub amplitude: Option<f64>,
    pub j_max: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Resolved configuration for one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub params: Option<Params>,
    pub grid_n: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub geometry_path: Option<PathBuf>,
    pub config_path: Option<PathBuf>,
    pub file: FileConfig,
}

impl RunConfig {
    pub fn resolve(subcommand: &'static str, args: &CommonArgs, default_grid_n: usize) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        // The a/s pair is one setting: a flag for either replaces the file's.
        let (a, s) = if args.a.is_some() || args.s.is_some() {
            (args.a, args.s)
        } else {
            (file.a, file.s)
        };
        let params = match (a, s) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParams("give exactly one of a and s".into()));
            }
            (Some(a), None) => Some(Params::from_a(a)?),
            (None, Some(s)) => Some(Params::from_s(s)?),
            (None, None) => None,
        };
        let grid_n = args.grid_n.or(file.grid_n).unwrap_or(default_grid_n);
        if grid_n < 4 {
            return Err(Error::InvalidParams(format!("grid-n = {grid_n} is too small")));
        }
        let out = args.out.clone().or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            subcommand,
            params,
            grid_n,
            out,
            seed: args.seed.or(file.seed).unwrap_or(0),
            geometry_path: args.geometry.clone().or_else(|| file.geometry.clone()),
            config_path: args.config.clone(),
            file,
        })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.grid_n as f64
    }

    /// Parameters, which must have been given as `--a` or `--s`.
    pub fn params(&self) -> Result<Params> {
        self.params
            .ok_or_else(|| Error::InvalidParams(format!("{} needs exactly one of --a and --s", self.subcommand)))
    }

    pub fn params_or_s(&self, s: f64) -> Result<Params> {
        match self.params {
            Some(p) => Ok(p),
            None => Params::from_s(s),
        }
    }

    pub fn geometry(&self) -> Result<SlitGeometry> {
        match &self.geometry_path {
            Some(p) => GeometrySpec::from_json(&std::fs::read_to_string(p)?)?.build(),
            None => Ok(SlitGeometry::flat()),
        }
    }

    /// Flag value, else config-file value, else the default.
    pub fn pick<T: Clone>(&self, flag: Option<T>, file: impl Fn(&FileConfig) -> Option<T>, default: T) -> T {
        flag.or_else(|| file(&self.file)).unwrap_or(default)
    }

    /// Header comment lines written into every output.
    pub fn banner(&self, extra: &[String]) -> Vec<String> {
        let mut lines = vec![format!("slit-harmonic {} {}", env!("CARGO_PKG_VERSION"), self.subcommand)];
        if let Some(p) = self.params {
            lines.push(format!("s = {}, a = {}", p.s(), p.a()));
        }
        lines.push(format!("grid-n = {} (h = 1/{}), seed = {}", self.grid_n, self.grid_n, self.seed));
        let config = self
            .config_path
            .as_ref()
            .map_or("none".to_string(), |p| p.display().to_string());
        lines.push(format!("precedence: flags > config ({config}) > defaults"));
        if let Some(g) = &self.geometry_path {
            lines.push(format!("geometry: {}", g.display()));
        }
        lines.extend(extra.iter().cloned());
        lines
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("{t:?} is not a number")))
        })
        .collect()
}

/// CSV header comment block for outputs that are not field dumps.
pub fn comment_block(banner: &[String]) -> String {
    banner.iter().map(|l| format!("# {l}\n")).collect()
}
