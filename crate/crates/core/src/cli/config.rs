//! Run configuration: defaults, optional `key=value` file, flag overrides,
//! and validation that names the offending key.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::backend::{BackendRegistry, OmegaChoice};
use crate::clock::ClockRegister;
use crate::leggett_garg::LgLattice;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error for `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub clock_n: usize,
    pub dt: f64,
    pub omega_index: i64,
    pub ka: usize,
    pub kb: usize,
    /// `None` selects the per-command default grid.
    pub phases: Option<Vec<f64>>,
    /// 0 selects exact (unsampled) mode.
    pub shots: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub backend: String,
    pub table1: bool,
    pub fit_omega: bool,
    pub incommensurate_harmonic: Option<f64>,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            clock_n: 64,
            dt: 1.0,
            omega_index: 3,
            ka: 8,
            kb: 16,
            phases: None,
            shots: 0,
            seed: 0,
            out: None,
            format: Format::Csv,
            backend: "history".into(),
            table1: false,
            fit_omega: false,
            incommensurate_harmonic: None,
            parallel: false,
        }
    }
}

/// Canonical key spelling: `clock-n`, `clock_n` and `--clock-n` all map to `clock_n`.
pub fn canonical_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err("config", format!("line {} is not key=value", lineno + 1)))?;
        out.insert(canonical_key(k), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// One phase token: a number or a multiple of pi such as `pi/6`, `2pi/3`, `0.5*pi`.
pub fn parse_phase(token: &str) -> Option<f64> {
    let t = token.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(x) = t.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().ok()?),
        None => (t.clone(), 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim_end_matches('*');
    let coeff = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    (den != 0.0).then(|| coeff * PI / den)
}

pub fn parse_phases(list: &str) -> Result<Vec<f64>, ConfigError> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|tok| parse_phase(tok).ok_or_else(|| err("phases", format!("cannot parse phase `{}`", tok.trim()))))
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| err(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(err(key, format!("expected a boolean, got `{other}`"))),
    }
}

impl RunConfig {
    /// Applies `key=value` settings over the current values.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        for (key, value) in settings {
            let k = key.as_str();
            match k {
                "clock_n" => self.clock_n = parse_value(k, value)?,
                "dt" => self.dt = parse_value(k, value)?,
                "omega_index" => self.omega_index = parse_value(k, value)?,
                "ka" => self.ka = parse_value(k, value)?,
                "kb" => self.kb = parse_value(k, value)?,
                "phases" => self.phases = Some(parse_phases(value)?),
                "shots" => self.shots = parse_value(k, value)?,
                "seed" => self.seed = parse_value(k, value)?,
                "out" => self.out = Some(PathBuf::from(value.trim())),
                "format" => {
                    self.format = match value.trim() {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        other => return Err(err(k, format!("expected csv or json, got `{other}`"))),
                    }
                }
                "backend" => self.backend = value.trim().to_string(),
                "table1" => self.table1 = parse_bool(k, value)?,
                "fit_omega" => self.fit_omega = parse_bool(k, value)?,
                "incommensurate_harmonic" => self.incommensurate_harmonic = Some(parse_value(k, value)?),
                "parallel" => self.parallel = parse_bool(k, value)?,
                _ => return Err(err(k, "unknown configuration key")),
            }
        }
        Ok(())
    }

    pub fn clock(&self) -> Result<ClockRegister, ConfigError> {
        if self.clock_n < 4 || self.clock_n % 2 != 0 {
            return Err(err("clock-n", format!("must be even and >= 4, got {}", self.clock_n)));
        }
        ClockRegister::new(self.clock_n, self.dt).map_err(|e| err("dt", e.to_string()))
    }

    /// Commensurate frequency of `omega-index`, or the incommensurate override.
    pub fn omega(&self) -> Result<f64, ConfigError> {
        let clock = self.clock()?;
        match self.incommensurate_harmonic {
            Some(h) if h.is_finite() => Ok(2.0 * PI * h / clock.span()),
            Some(h) => Err(err("incommensurate-harmonic", format!("must be finite, got {h}"))),
            None => clock
                .commensurate_frequency(self.omega_index)
                .map_err(|e| err("omega-index", e.to_string())),
        }
    }

    pub fn omega_choice(&self) -> Result<OmegaChoice, ConfigError> {
        if self.fit_omega || self.table1 {
            Ok(OmegaChoice::PerPhase { gap: self.kb - self.ka })
        } else {
            Ok(OmegaChoice::Fixed(self.omega()?))
        }
    }

    pub fn lattice(&self) -> Result<LgLattice, ConfigError> {
        Ok(LgLattice {
            clock: self.clock()?,
            omega: self.omega_choice()?,
            ka: self.ka,
        })
    }

    /// Checks every key before any computation runs.
    pub fn validate(&self, registry: &BackendRegistry) -> Result<(), ConfigError> {
        let clock = self.clock()?;
        self.omega()?;
        let n = clock.n();
        if self.ka == 0 || self.ka >= n {
            return Err(err("ka", format!("need 0 < ka < {n}, got {}", self.ka)));
        }
        if self.kb <= self.ka || self.kb >= n {
            return Err(err("kb", format!("need ka < kb < {n}, got kb = {}", self.kb)));
        }
        if !registry.names().any(|b| b == self.backend) {
            return Err(err("backend", format!("unknown backend `{}`", self.backend)));
        }
        if self.backend == "sampled" {
            return Err(err("backend", "choose an exact backend; sampling is enabled with --shots"));
        }
        if let Some(ph) = &self.phases {
            if ph.is_empty() {
                return Err(err("phases", "phase list is empty"));
            }
        }
        Ok(())
    }

    fn fit_grid(&self, start: f64, stop: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()
    }

    /// Default phase grid for `correlations`: every realizable lattice phase in
    /// `[0, pi]`, or 51 evenly spaced phases when the frequency is fitted.
    pub fn correlation_grid(&self) -> Result<Vec<f64>, ConfigError> {
        if let Some(p) = &self.phases {
            return Ok(p.clone());
        }
        match self.omega_choice()? {
            OmegaChoice::PerPhase { .. } => Ok(self.fit_grid(0.0, PI, 51)),
            OmegaChoice::Fixed(w) => {
                let step = w * self.dt;
                let max_gap = self.clock_n - 1 - self.ka;
                Ok((0..=max_gap)
                    .map(|g| g as f64 * step)
                    .take_while(|&x| x <= PI + 1e-12)
                    .collect())
            }
        }
    }

    /// Default grid for `lg`: realizable phases in `(0, pi/2]` whose doubled
    /// gap fits, the three reference phases in table mode, or 48 fitted phases.
    pub fn lg_grid(&self) -> Result<Vec<f64>, ConfigError> {
        if self.table1 {
            return Ok(crate::leggett_garg::TABLE_I.iter().map(|r| r.0).collect());
        }
        if let Some(p) = &self.phases {
            return Ok(p.clone());
        }
        match self.omega_choice()? {
            OmegaChoice::PerPhase { .. } => Ok(self.fit_grid(PI / 96.0, PI / 2.0, 48)),
            OmegaChoice::Fixed(w) => {
                let step = w * self.dt;
                let max_gap = (self.clock_n - 1 - self.ka) / 2;
                Ok((1..=max_gap)
                    .map(|g| g as f64 * step)
                    .take_while(|&x| x <= PI / 2.0 + 1e-12)
                    .collect())
            }
        }
    }
}
