use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use solarcast_core::dataset::DaylightWindow;
use solarcast_core::mar::DEFAULT_HORIZONS;
use solarcast_core::metrics::DEFAULT_MAPE_THRESHOLD;

/// Bad flags, config keys or values. Maps to exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderChoice {
    /// Pick from the training PACF.
    Auto,
    Fixed(usize),
}

impl fmt::Display for OrderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderChoice::Auto => f.write_str("auto"),
            OrderChoice::Fixed(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for OrderChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(OrderChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(m) if m > 0 => Ok(OrderChoice::Fixed(m)),
            _ => Err(format!("order must be `auto` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Mar,
    Ar,
    Cnn,
    Lstm,
}

impl ModelChoice {
    pub const ALL: [ModelChoice; 4] = [ModelChoice::Cnn, ModelChoice::Ar, ModelChoice::Lstm, ModelChoice::Mar];
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelChoice::Mar => "mar",
            ModelChoice::Ar => "ar",
            ModelChoice::Cnn => "cnn",
            ModelChoice::Lstm => "lstm",
        })
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mar" => Ok(ModelChoice::Mar),
            "ar" => Ok(ModelChoice::Ar),
            "cnn" => Ok(ModelChoice::Cnn),
            "lstm" => Ok(ModelChoice::Lstm),
            _ => Err(format!("unknown model `{s}` (expected mar, ar, cnn or lstm)")),
        }
    }
}

fn parse_horizons(s: &str) -> std::result::Result<Vec<usize>, String> {
    let hs = s
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(h) if h > 0 => Ok(h),
            _ => Err(format!("horizon `{t}` is not a positive step count")),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if hs.is_empty() {
        return Err("no horizons given".into());
    }
    Ok(hs)
}

/// Comma-separated horizon list as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonList(pub Vec<usize>);

impl FromStr for HorizonList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_horizons(s).map(HorizonList)
    }
}

fn parse_daylight(s: &str) -> std::result::Result<DaylightWindow, String> {
    s.parse().map_err(|e: solarcast_core::Error| e.to_string())
}

/// Options shared by every subcommand. Anything left unset falls back to
/// the `--config` file and then to the built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key=value` file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Input CSV (`timestamp,irradiance_wm2`).
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Fraction of whole days used for training.
    #[arg(long)]
    pub split: Option<f64>,
    /// Lag count, or `auto` to choose it from the PACF.
    #[arg(long)]
    pub order: Option<OrderChoice>,
    /// Comma-separated horizons in steps, e.g. `1,3,6`.
    #[arg(long)]
    pub horizons: Option<HorizonList>,
    #[arg(long)]
    pub model: Option<ModelChoice>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Daylight window `HH:MM-HH:MM`.
    #[arg(long, value_parser = parse_daylight)]
    pub daylight: Option<DaylightWindow>,
    /// Smallest actual value (W/m^2) counted by MAPE.
    #[arg(long)]
    pub mape_threshold: Option<f64>,
    /// Iterate one-step weights instead of fitting each horizon directly.
    #[arg(long)]
    pub recursive: bool,
    /// Skip ensemble deduction (plain AR).
    #[arg(long)]
    pub no_ensemble: bool,
    /// Override the training epoch count of the neural models.
    #[arg(long)]
    pub epochs: Option<usize>,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub split: f64,
    pub order: OrderChoice,
    pub horizons: Vec<usize>,
    pub daylight: DaylightWindow,
    pub model: ModelChoice,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub mape_threshold: f64,
    pub recursive: bool,
    pub ensemble: bool,
    pub epochs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            split: 0.7,
            order: OrderChoice::Auto,
            horizons: DEFAULT_HORIZONS.to_vec(),
            daylight: DaylightWindow::default(),
            model: ModelChoice::Mar,
            seed: 42,
            out: None,
            mape_threshold: DEFAULT_MAPE_THRESHOLD,
            recursive: false,
            ensemble: true,
            epochs: None,
        }
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        }
        if let Some(v) = &args.data {
            cfg.data = Some(v.clone());
        }
        if let Some(v) = args.split {
            cfg.split = v;
        }
        if let Some(v) = args.order {
            cfg.order = v;
        }
        if let Some(v) = &args.horizons {
            cfg.horizons = v.0.clone();
        }
        if let Some(v) = args.model {
            cfg.model = v;
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = &args.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = args.daylight {
            cfg.daylight = v;
        }
        if let Some(v) = args.mape_threshold {
            cfg.mape_threshold = v;
        }
        if args.recursive {
            cfg.recursive = true;
        }
        if args.no_ensemble {
            cfg.ensemble = false;
        }
        if let Some(v) = args.epochs {
            cfg.epochs = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(usage(format!("split must lie strictly between 0 and 1, got {}", self.split)));
        }
        if !(self.mape_threshold.is_finite() && self.mape_threshold >= 0.0) {
            return Err(usage(format!("mape threshold must be a non-negative number, got {}", self.mape_threshold)));
        }
        if self.epochs == Some(0) {
            return Err(usage("epochs must be at least 1"));
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), String> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, found `{line}`", i + 1))?;
            self.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = |what: &str| format!("bad {what} `{value}`");
        match key {
            "data" => self.data = (!value.is_empty()).then(|| PathBuf::from(value)),
            "split" => self.split = value.parse().map_err(|_| num("split"))?,
            "order" => self.order = value.parse()?,
            "horizons" => self.horizons = parse_horizons(value)?,
            "daylight" => self.daylight = parse_daylight(value)?,
            "model" => self.model = value.parse()?,
            "seed" => self.seed = value.parse().map_err(|_| num("seed"))?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "mape_threshold" => self.mape_threshold = value.parse().map_err(|_| num("mape_threshold"))?,
            "recursive" => self.recursive = parse_bool(value)?,
            "ensemble" => self.ensemble = parse_bool(value)?,
            "epochs" => {
                self.epochs = if value == "default" {
                    None
                } else {
                    Some(value.parse().map_err(|_| num("epochs"))?)
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// The configuration as `key=value` lines, in a form [`Self::apply_text`]
    /// reads back.
    pub fn key_values(&self) -> Vec<String> {
        let path = |p: &Option<PathBuf>| p.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
        let horizons: Vec<String> = self.horizons.iter().map(|h| h.to_string()).collect();
        vec![
            format!("data={}", path(&self.data)),
            format!("split={}", self.split),
            format!("order={}", self.order),
            format!("horizons={}", horizons.join(",")),
            format!("daylight={}", self.daylight),
            format!("model={}", self.model),
            format!("seed={}", self.seed),
            format!("out={}", path(&self.out)),
            format!("mape_threshold={}", self.mape_threshold),
            format!("recursive={}", self.recursive),
            format!("ensemble={}", self.ensemble),
            format!(
                "epochs={}",
                self.epochs.map(|e| e.to_string()).unwrap_or_else(|| "default".into())
            ),
        ]
    }

    /// Comment lines written at the top of every output file. The output
    /// path is left out so a rerun elsewhere gives an identical file.
    pub fn header(&self, command: &str, extra: &[String]) -> Vec<String> {
        let mut out = vec![format!("solarcast {} {command}", env!("CARGO_PKG_VERSION"))];
        out.extend(extra.iter().cloned());
        out.extend(self.key_values().into_iter().filter(|kv| !kv.starts_with("out=")));
        out
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().ok_or_else(|| usage("--data is required"))
    }

    pub fn out_path(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| usage("--out is required"))
    }
}
