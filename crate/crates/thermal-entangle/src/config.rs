//! Run configuration: defaults, `key=value` files and command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thermal_entangle_core::{Interaction, Outcome, SystemParams, Weighting};

use crate::error::CliError;

/// Inclusive range `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let g = match nums.as_slice() {
            [v] => Grid::new(*v, *v, 1.0),
            [a, b, s] => Grid::new(*a, *b, *s),
            _ => return Err(format!("expected start:stop:step, got {s:?}")),
        };
        if !(g.start.is_finite() && g.stop.is_finite() && g.step.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if g.step <= 0.0 || g.stop < g.start {
            return Err(format!("empty grid {s:?}"));
        }
        Ok(g)
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Momentum,
    Parity,
}

/// Everything a command needs. Keys of the config file equal the long flag
/// names without dashes.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kappa: f64,
    pub gamma: f64,
    pub temp: f64,
    /// Entangling time.
    pub time: f64,
    /// Reciprocation time; defaults to `time`.
    pub t2: Option<f64>,
    pub seed: u64,
    pub starts: usize,
    pub outcome: Outcome,
    pub interaction: Interaction,
    pub mode: Mode,
    pub weighting: Weighting,
    pub t_grid: Grid,
    pub temp_grid: Grid,
    pub p_grid: Grid,
    pub sweep: bool,
    /// 0 selects the cutoff from the tail rule.
    pub cutoff: usize,
    pub dt: f64,
    pub lambda_scale: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kappa: 0.01,
            gamma: 0.01,
            temp: 1.0,
            time: 2.0,
            t2: None,
            seed: 0x5eed,
            starts: 32,
            outcome: Outcome::E,
            interaction: Interaction::Simultaneous,
            mode: Mode::Momentum,
            weighting: Weighting::Probability,
            t_grid: Grid::new(0.0, 4.0, 0.05),
            temp_grid: Grid::new(0.0, 1.2, 0.02),
            p_grid: Grid::new(-6.0, 6.0, 0.1),
            sweep: false,
            cutoff: 0,
            dt: 1e-3,
            lambda_scale: 1.0,
            out: None,
            format: Format::Csv,
        }
    }
}

pub const KEYS: &[&str] = &[
    "kappa",
    "gamma",
    "temp",
    "time",
    "t2",
    "seed",
    "starts",
    "outcome",
    "interaction",
    "mode",
    "weighting",
    "t-grid",
    "temp-grid",
    "p-grid",
    "sweep",
    "cutoff",
    "dt",
    "lambda-scale",
    "out",
    "format",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key}={value}: {e}")))
}

fn non_negative(key: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{key} must be finite and >= 0, got {v}")))
    }
}

impl RunConfig {
    /// Reads `key=value` pairs; `#` starts a comment.
    pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
        let iter = dotenvy::from_path_iter(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        iter.map(|item| item.map_err(|e| CliError::Config(format!("{}: {e}", path.display()))))
            .collect()
    }

    /// Defaults overridden by `pairs` in order.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, CliError> {
        let mut c = Self::default();
        for (k, v) in pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "kappa" => self.kappa = non_negative("kappa", parse(&key, v)?)?,
            "gamma" => self.gamma = non_negative("gamma", parse(&key, v)?)?,
            "temp" => self.temp = non_negative("temp", parse(&key, v)?)?,
            "time" => self.time = non_negative("time", parse(&key, v)?)?,
            "t2" => self.t2 = Some(non_negative("t2", parse(&key, v)?)?),
            "seed" => self.seed = parse(&key, v)?,
            "starts" => self.starts = parse(&key, v)?,
            "outcome" => {
                self.outcome = match v {
                    "g" => Outcome::G,
                    "e" => Outcome::E,
                    _ => return Err(CliError::Config(format!("outcome must be g or e, got {v:?}"))),
                }
            }
            "interaction" => {
                self.interaction = match v {
                    "sim" => Interaction::Simultaneous,
                    "seq" => Interaction::Sequential,
                    _ => return Err(CliError::Config(format!("interaction must be sim or seq, got {v:?}"))),
                }
            }
            "mode" => {
                self.mode = match v {
                    "momentum" => Mode::Momentum,
                    "parity" => Mode::Parity,
                    _ => return Err(CliError::Config(format!("mode must be momentum or parity, got {v:?}"))),
                }
            }
            "weighting" => {
                self.weighting = match v {
                    "probability" => Weighting::Probability,
                    "uniform" => Weighting::Uniform,
                    _ => return Err(CliError::Config(format!("weighting must be probability or uniform, got {v:?}"))),
                }
            }
            "t-grid" => self.t_grid = parse(&key, v)?,
            "temp-grid" => self.temp_grid = parse(&key, v)?,
            "p-grid" => self.p_grid = parse(&key, v)?,
            "sweep" => self.sweep = parse(&key, v)?,
            "cutoff" => self.cutoff = parse(&key, v)?,
            "dt" => self.dt = parse(&key, v)?,
            "lambda-scale" => self.lambda_scale = parse(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(CliError::Config(format!("format must be csv or json, got {v:?}"))),
                }
            }
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.starts == 0 {
            return Err(CliError::Config("starts must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(CliError::Config("dt must be positive".into()));
        }
        if !(self.lambda_scale.is_finite()) {
            return Err(CliError::Config("lambda-scale must be finite".into()));
        }
        if self.cutoff != 0 && self.cutoff < 3 {
            return Err(CliError::Config("cutoff must be 0 (automatic) or at least 3".into()));
        }
        if self.temp_grid.start < 0.0 || self.t_grid.start < 0.0 {
            return Err(CliError::Config("temperature and time grids must be >= 0".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.kappa, self.gamma, self.temp)?
            .with_interaction(self.interaction)
            .with_lambda_scale(self.lambda_scale))
    }

    /// Same damping and interaction at another temperature.
    pub fn params_at(&self, temp: f64) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.kappa, self.gamma, temp)?
            .with_interaction(self.interaction)
            .with_lambda_scale(self.lambda_scale))
    }

    pub fn reciprocation_time(&self) -> f64 {
        self.t2.unwrap_or(self.time)
    }

    /// Every setting as `key=value`, for output headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let outcome = match self.outcome {
            Outcome::G => "g",
            Outcome::E => "e",
        };
        let interaction = match self.interaction {
            Interaction::Simultaneous => "sim",
            Interaction::Sequential => "seq",
        };
        let mode = match self.mode {
            Mode::Momentum => "momentum",
            Mode::Parity => "parity",
        };
        let weighting = match self.weighting {
            Weighting::Probability => "probability",
            Weighting::Uniform => "uniform",
        };
        let format = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        [
            ("kappa", self.kappa.to_string()),
            ("gamma", self.gamma.to_string()),
            ("temp", self.temp.to_string()),
            ("time", self.time.to_string()),
            ("t2", self.reciprocation_time().to_string()),
            ("seed", self.seed.to_string()),
            ("starts", self.starts.to_string()),
            ("outcome", outcome.into()),
            ("interaction", interaction.into()),
            ("mode", mode.into()),
            ("weighting", weighting.into()),
            ("t-grid", self.t_grid.to_string()),
            ("temp-grid", self.temp_grid.to_string()),
            ("p-grid", self.p_grid.to_string()),
            ("sweep", self.sweep.to_string()),
            ("cutoff", self.cutoff.to_string()),
            ("dt", self.dt.to_string()),
            ("lambda-scale", self.lambda_scale.to_string()),
            ("format", format.into()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:1:0.25".parse().unwrap();
        assert_eq!(g.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("2".parse::<Grid>().unwrap().values(), vec![2.0]);
        assert!("1:0:0.1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("0:1".parse::<Grid>().is_err());
        assert_eq!(Grid::new(0.0, 4.0, 0.05).values().len(), 81);
    }

    #[test]
    fn echo_round_trips() {
        let c = RunConfig::from_pairs([("kappa", "0.007"), ("outcome", "g"), ("mode", "parity"), ("t-grid", "0:3:0.1")]).unwrap();
        let echoed = c.echo();
        let again = RunConfig::from_pairs(echoed.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(c.t2, None);
        assert_eq!(again.kappa, c.kappa);
        assert_eq!(again.outcome, c.outcome);
        assert_eq!(again.mode, c.mode);
        assert_eq!(again.t_grid, c.t_grid);
    }

    #[test]
    fn rejects_bad_values() {
        for (k, v) in [("kappa", "-1"), ("outcome", "x"), ("format", "xml"), ("nope", "1"), ("cutoff", "2"), ("temp", "nan")] {
            assert!(matches!(RunConfig::from_pairs([(k, v)]), Err(CliError::Config(_))), "{k}={v}");
        }
    }
}
