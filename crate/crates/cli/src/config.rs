//! Run configuration: flags override the config file, which overrides defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use flipqh::verify::VerifyConfig;
use flipqh::FlipGeometry;
use serde::{Deserialize, Serialize};

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

/// Flags shared by every subcommand. Unset flags fall back to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// r of the (r, r′) flip.
    #[arg(long, global = true)]
    pub r: Option<usize>,
    /// r′ of the (r, r′) flip.
    #[arg(long, global = true)]
    pub rp: Option<usize>,
    /// x-cap of the (2,1) border solve; u-order of the generic recursion.
    #[arg(long, global = true)]
    pub xcap: Option<i32>,
    /// y-cap of the (2,1) border solve.
    #[arg(long, global = true)]
    pub ycap: Option<i32>,
    /// z-cap of the (2,1) border solve.
    #[arg(long, global = true)]
    pub zcap: Option<i32>,
    /// q₁-degree cap of the I-function oracle.
    #[arg(long, global = true)]
    pub q1cap: Option<i32>,
    /// q₂-degree cap of the I-function oracle.
    #[arg(long, global = true)]
    pub q2cap: Option<i32>,
    /// q₁-cap of the flop series 𝐟.
    #[arg(long, global = true)]
    pub fcap: Option<i32>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Relative tolerance of the floating-point eigenvalue checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest d of the Cayley table.
    #[arg(long, global = true)]
    pub dmax: Option<usize>,
    /// Largest n of the combinatorial identities.
    #[arg(long, global = true)]
    pub nmax: Option<usize>,
    /// Seed of the random evaluation points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with any of the keys above.
    #[arg(long, global = true, env = "FLIPQH_CONFIG")]
    pub config: Option<PathBuf>,
}

/// Contents of a config file; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub r: Option<usize>,
    pub rp: Option<usize>,
    pub xcap: Option<i32>,
    pub ycap: Option<i32>,
    pub zcap: Option<i32>,
    pub q1cap: Option<i32>,
    pub q2cap: Option<i32>,
    pub fcap: Option<i32>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub dmax: Option<usize>,
    pub nmax: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub r: usize,
    pub rp: usize,
    pub xcap: i32,
    pub ycap: i32,
    pub zcap: i32,
    pub q1cap: i32,
    pub q2cap: i32,
    pub fcap: i32,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub tol: f64,
    pub dmax: usize,
    pub nmax: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let v = VerifyConfig::default();
        RunConfig {
            r: 2,
            rp: 1,
            xcap: v.border_caps[0],
            ycap: v.border_caps[1],
            zcap: v.border_caps[2],
            q1cap: v.oracle_caps.0,
            q2cap: v.oracle_caps.1,
            fcap: v.flop_q1cap,
            format: Format::Json,
            out: None,
            tol: v.tol,
            dmax: v.d_max,
            nmax: v.n_max,
            seed: v.seed,
        }
    }
}

/// Invalid input, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

impl RunConfig {
    /// Merge flags over the file over the defaults, then validate.
    pub fn resolve(flags: &Flags) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p).map_err(|e| UsageError(format!("{e:#}")))?,
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        macro_rules! pick {
            ($f:ident) => {
                flags.$f.clone().or(file.$f.clone()).unwrap_or(d.$f.clone())
            };
        }
        let cfg = RunConfig {
            r: pick!(r),
            rp: pick!(rp),
            xcap: pick!(xcap),
            ycap: pick!(ycap),
            zcap: pick!(zcap),
            q1cap: pick!(q1cap),
            q2cap: pick!(q2cap),
            fcap: pick!(fcap),
            format: pick!(format),
            out: flags.out.clone().or(file.out),
            tol: pick!(tol),
            dmax: pick!(dmax),
            nmax: pick!(nmax),
            seed: pick!(seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), UsageError> {
        for (name, v) in [
            ("xcap", self.xcap),
            ("ycap", self.ycap),
            ("zcap", self.zcap),
            ("q1cap", self.q1cap),
            ("q2cap", self.q2cap),
            ("fcap", self.fcap),
        ] {
            if v <= 0 {
                return Err(UsageError(format!("--{name} must be positive, got {v}")));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(UsageError(format!("--tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.dmax == 0 || self.nmax < 3 {
            return Err(UsageError("--dmax must be at least 1 and --nmax at least 3".into()));
        }
        self.geometry().map(|_| ())
    }

    pub fn geometry(&self) -> Result<FlipGeometry, UsageError> {
        FlipGeometry::new(self.r, self.rp).map_err(|e| UsageError(e.to_string()))
    }

    pub fn border_caps(&self) -> [i32; 3] {
        [self.xcap, self.ycap, self.zcap]
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            oracle_caps: (self.q1cap, self.q2cap),
            flop_q1cap: self.fcap,
            border_caps: self.border_caps(),
            n_max: self.nmax,
            d_max: self.dmax,
            tol: self.tol,
            seed: self.seed,
            ..VerifyConfig::default()
        }
    }
}
