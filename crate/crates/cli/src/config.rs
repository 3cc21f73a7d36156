//! Scenario configuration: defaults per scenario, then a `key = value`
//! file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown scenario `{0}` (expected one of: {names})", names = Scenario::NAMES.join(", "))]
    UnknownScenario(String),
    #[error("malformed config at line {line}, key `{key}`: {message}")]
    MalformedConfig { line: usize, key: String, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    Patch,
    Rectangle,
    GaussianDiag,
    GaussianFull,
    AlievPanfilov2d,
}

impl Scenario {
    pub const NAMES: [&'static str; 5] = ["patch", "rectangle", "gaussian-diag", "gaussian-full", "aliev-panfilov-2d"];
    pub const ALL: [Scenario; 5] = [
        Scenario::Patch,
        Scenario::Rectangle,
        Scenario::GaussianDiag,
        Scenario::GaussianFull,
        Scenario::AlievPanfilov2d,
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Self::NAMES
            .iter()
            .position(|n| *n == s)
            .map(|k| Self::ALL[k])
            .ok_or_else(|| ConfigError::UnknownScenario(s.to_owned()))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Vtk,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "vtk" => Ok(OutputFormat::Vtk),
            other => Err(format!("unknown format `{other}` (expected csv or vtk)")),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Vtk => "vtk",
        }
    }
}

/// Fully resolved run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Particle spacing; the vertical spacing for anisotropic lattices.
    pub dp: f64,
    /// Rows across the strip (rectangle only).
    pub ny: usize,
    /// Horizontal over vertical spacing.
    pub ratio: f64,
    pub t_init: f64,
    pub t_end: f64,
    pub dt_safety: f64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub snapshots: Vec<f64>,
    pub probe: [f64; 2],
    /// Diffusion tensor entries `(D11, D12, D22)`.
    pub diffusion: [f64; 3],
}

impl ScenarioConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let base = ScenarioConfig {
            scenario,
            dp: 0.02,
            ny: 20,
            ratio: 1.0,
            t_init: 0.0,
            t_end: 0.0,
            dt_safety: asph_core::solvers::DEFAULT_DT_SAFETY,
            out_dir: PathBuf::from("output").join(scenario.name()),
            format: OutputFormat::Csv,
            snapshots: Vec::new(),
            probe: [0.3, 0.7],
            diffusion: [1.0, 0.0, 1.0],
        };
        match scenario {
            Scenario::Patch => base,
            Scenario::Rectangle => {
                ScenarioConfig { dp: 0.1 / 20.0, ratio: 4.0, t_end: 2.0, snapshots: vec![0.0, 0.02, 0.04, 0.2], ..base }
            }
            Scenario::GaussianDiag | Scenario::GaussianFull => ScenarioConfig {
                dp: 1.0,
                t_init: 120.0,
                t_end: 1920.0,
                snapshots: vec![120.0, 1920.0],
                diffusion: if scenario == Scenario::GaussianDiag { [0.1, 0.0, 0.01] } else { [0.1, 0.03, 0.03] },
                ..base
            },
            Scenario::AlievPanfilov2d => {
                ScenarioConfig { dp: 0.01, t_end: 16.0, snapshots: vec![0.0, 0.5, 2.5, 7.0, 10.0, 14.0], ..base }
            }
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        fn list(v: &str) -> Result<Vec<f64>, String> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(num).collect()
        }
        match key {
            "scenario" => {
                let s: Scenario = value.parse().map_err(|e: ConfigError| e.to_string())?;
                if s != self.scenario {
                    *self = ScenarioConfig::defaults(s);
                }
            }
            "dp" => {
                self.dp = num(value)?;
                if self.scenario == Scenario::Rectangle {
                    self.ny = (0.1 / self.dp).round() as usize;
                }
            }
            "ny" => {
                self.ny = num(value)?;
                if self.scenario == Scenario::Rectangle && self.ny > 0 {
                    self.dp = 0.1 / self.ny as f64;
                }
            }
            "ratio" => self.ratio = num(value)?,
            "t_init" | "t-init" => self.t_init = num(value)?,
            "t_end" | "t-end" => self.t_end = num(value)?,
            "dt_safety" | "dt-safety" => self.dt_safety = num(value)?,
            "out_dir" | "out-dir" => self.out_dir = PathBuf::from(value),
            "format" => self.format = value.parse()?,
            "snapshots" => self.snapshots = list(value)?,
            "probe" => match list(value)?.as_slice() {
                [x, y] => self.probe = [*x, *y],
                _ => return Err("probe needs two coordinates `x,y`".into()),
            },
            "diffusion" => match list(value)?.as_slice() {
                [d11, d12, d22] => self.diffusion = [*d11, *d12, *d22],
                _ => return Err("diffusion needs `D11,D12,D22`".into()),
            },
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [("dp", self.dp), ("ratio", self.ratio), ("dt_safety", self.dt_safety)];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(format!("{k} must be positive, got {v}"));
        }
        if self.scenario == Scenario::Rectangle && self.ny < 4 {
            return Err(format!("ny must be at least 4, got {}", self.ny));
        }
        if self.t_end < self.t_init {
            return Err("t_end precedes t_init".into());
        }
        Ok(())
    }

    /// Reads defaults for the file's scenario (or `fallback`), then its settings.
    pub fn from_text(text: &str, fallback: Option<Scenario>) -> Result<Self, ConfigError> {
        let entries = parse_lines(text)?;
        let scenario = match entries.iter().find(|e| e.1 == "scenario") {
            Some((_, _, v)) => v.parse()?,
            None => fallback.ok_or_else(|| ConfigError::MalformedConfig {
                line: 0,
                key: "scenario".into(),
                message: "missing".into(),
            })?,
        };
        let mut cfg = ScenarioConfig::defaults(scenario);
        for (line, key, value) in &entries {
            if key == "scenario" {
                continue;
            }
            cfg.set(key, value).map_err(|message| ConfigError::MalformedConfig {
                line: *line,
                key: key.clone(),
                message,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path, fallback: Option<Scenario>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_text(&text, fallback)
    }

    /// Settings in file syntax, readable by [`ScenarioConfig::from_text`].
    pub fn render(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "scenario = {}\ndp = {}\nny = {}\nratio = {}\nt_init = {}\nt_end = {}\ndt_safety = {}\nout_dir = {}\nformat = {}\nsnapshots = {}\nprobe = {}\ndiffusion = {}\n",
            self.scenario,
            self.dp,
            self.ny,
            self.ratio,
            self.t_init,
            self.t_end,
            self.dt_safety,
            self.out_dir.display(),
            self.format.extension(),
            join(&self.snapshots),
            join(&self.probe),
            join(&self.diffusion),
        )
    }
}

fn parse_lines(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::MalformedConfig {
                line: k + 1,
                key: line.to_owned(),
                message: "expected `key = value`".into(),
            });
        };
        out.push((k + 1, key.trim().to_owned(), value.trim().to_owned()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!(matches!("nosuch".parse::<Scenario>(), Err(ConfigError::UnknownScenario(_))));
    }

    #[test]
    fn file_values_and_errors() {
        let cfg =
            ScenarioConfig::from_text("scenario = rectangle\nny = 40 # finer\n\nsnapshots = 0, 0.1\n", None).unwrap();
        assert_eq!(cfg.ny, 40);
        assert_eq!(cfg.dp, 0.1 / 40.0);
        assert_eq!(cfg.snapshots, vec![0.0, 0.1]);
        assert_eq!(cfg.ratio, 4.0);
        let err = ScenarioConfig::from_text("scenario = patch\nratio = abc\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::MalformedConfig { line: 2, ref key, .. } if key == "ratio"));
        let err = ScenarioConfig::from_text("scenario = patch\nbogus = 1\n", None).unwrap_err();
        assert!(matches!(err, ConfigError::MalformedConfig { line: 2, .. }));
        assert!(ScenarioConfig::from_text("just words\n", Some(Scenario::Patch)).is_err());
    }

    #[test]
    fn render_round_trips() {
        for s in Scenario::ALL {
            let cfg = ScenarioConfig::defaults(s);
            assert_eq!(ScenarioConfig::from_text(&cfg.render(), None).unwrap(), cfg);
        }
    }
}
