//! Experiment configuration: a built-in preset, then an optional flat
//! `key = value` file, then command-line overrides.

use std::path::Path;

use brpqkd::link_budget::OpticalChain;
use brpqkd::montecarlo::{EveMode, EvePolicy, McConfig};
use brpqkd::optimizer::DEFAULT_SUPPRESSION_BUDGET;
use brpqkd::photon_stats::DEFAULT_LOSS_DB_PER_KM;
use brpqkd::{ChannelParams, DetectorParams, SourceParams};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub mu_s: f64,
    pub mu_b: f64,
    pub length_km: f64,
    pub loss_db_km: f64,
    pub eta_d: f64,
    pub y0: f64,
    pub e_detector: f64,
    pub e_0: f64,
    pub eve_mode: EveMode,
    pub suppress_fraction: f64,
    pub forward_lossless: bool,
    pub n_pulses: u64,
    pub seed: u64,
    pub source_intensity: f64,
    pub alice_split: f64,
    pub bob_split: f64,
    pub alice_atten_db: f64,
    pub bob_atten_db: f64,
    pub crosstalk_db: f64,
    pub afterpulse_prob: f64,
    pub suppression_budget: f64,
    pub mu_s_grid: Vec<f64>,
    pub length_grid: Vec<f64>,
    pub d_grid: Vec<f64>,
}

pub const PRESETS: [&str; 2] = ["gys2004", "ideal"];

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let det = match name {
            "gys2004" => DetectorParams::gys2004(),
            "ideal" => DetectorParams::ideal(),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown preset '{other}' (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            preset: name.to_string(),
            mu_s: 0.5,
            mu_b: 2e5,
            length_km: 146.0,
            loss_db_km: DEFAULT_LOSS_DB_PER_KM,
            eta_d: det.eta_d,
            y0: det.y0,
            e_detector: det.e_detector,
            e_0: det.e_0,
            eve_mode: EveMode::None,
            suppress_fraction: 0.0,
            forward_lossless: false,
            n_pulses: 1_000_000,
            seed: 42,
            source_intensity: 8e5,
            alice_split: 0.5,
            bob_split: 0.5,
            alice_atten_db: 56.0,
            bob_atten_db: 56.0,
            crosstalk_db: 20.0,
            afterpulse_prob: 0.008,
            suppression_budget: DEFAULT_SUPPRESSION_BUDGET,
            mu_s_grid: parse_grid("mu-s-grid", "0.1:0.05:1.0")?,
            length_grid: parse_grid("length-grid", "0:1:200")?,
            d_grid: parse_grid("d-grid", "0:0.005:0.25")?,
        })
    }

    /// Apply one `key = value` setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "mu-s" => self.mu_s = num(k, value)?,
            "mu-b" => self.mu_b = num(k, value)?,
            "length-km" => self.length_km = num(k, value)?,
            "loss-db-km" => self.loss_db_km = num(k, value)?,
            "eta-d" => self.eta_d = num(k, value)?,
            "y0" => self.y0 = num(k, value)?,
            "e-detector" => self.e_detector = num(k, value)?,
            "e-0" => self.e_0 = num(k, value)?,
            "eve-mode" => {
                self.eve_mode = match value {
                    "none" => EveMode::None,
                    "pns" => EveMode::Pns,
                    _ => return Err(bad(k, value, "none or pns")),
                }
            }
            "suppress-fraction" => self.suppress_fraction = num(k, value)?,
            "forward-lossless" => {
                self.forward_lossless = value.parse().map_err(|_| bad(k, value, "true or false"))?
            }
            "n-pulses" => self.n_pulses = count(k, value)?,
            "seed" => self.seed = count(k, value)?,
            "source-intensity" => self.source_intensity = num(k, value)?,
            "alice-split" => self.alice_split = num(k, value)?,
            "bob-split" => self.bob_split = num(k, value)?,
            "alice-atten-db" => self.alice_atten_db = num(k, value)?,
            "bob-atten-db" => self.bob_atten_db = num(k, value)?,
            "crosstalk-db" => self.crosstalk_db = num(k, value)?,
            "afterpulse-prob" => self.afterpulse_prob = num(k, value)?,
            "suppression-budget" => self.suppression_budget = num(k, value)?,
            "mu-s-grid" => self.mu_s_grid = parse_grid(k, value)?,
            "length-grid" => self.length_grid = parse_grid(k, value)?,
            "d-grid" => self.d_grid = parse_grid(k, value)?,
            _ => return Err(CliError::Usage(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Read a flat configuration file. Blank lines and `#` comments are
    /// ignored; a `preset` key must come first if present.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            if key.trim() == "preset" {
                *self = Self::preset(value.trim())?;
                continue;
            }
            self.set(key, value)
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn source(&self) -> Result<SourceParams, CliError> {
        Ok(SourceParams::new(self.mu_s, self.mu_b)?)
    }

    pub fn channel(&self) -> Result<ChannelParams, CliError> {
        Ok(ChannelParams::new(self.length_km, self.loss_db_km)?)
    }

    pub fn detector(&self) -> Result<DetectorParams, CliError> {
        let det = DetectorParams {
            eta_d: self.eta_d,
            y0: self.y0,
            e_detector: self.e_detector,
            e_0: self.e_0,
        };
        det.validate()?;
        Ok(det)
    }

    pub fn eve(&self) -> EvePolicy {
        EvePolicy {
            mode: self.eve_mode,
            suppress_fraction: self.suppress_fraction,
            forward_multiphoton_lossless: self.forward_lossless,
        }
    }

    pub fn chain(&self) -> Result<OpticalChain, CliError> {
        let chain = OpticalChain {
            source_intensity: self.source_intensity,
            alice_split_ratio: self.alice_split,
            bob_split_ratio: self.bob_split,
            alice_attenuation_db: self.alice_atten_db,
            bob_attenuation_db: self.bob_atten_db,
            channel: self.channel()?,
            switch_crosstalk_db: self.crosstalk_db,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn mc_config(&self) -> Result<McConfig, CliError> {
        let config = McConfig {
            n_pulses: self.n_pulses,
            source: SourceParams {
                mu_s: self.mu_s,
                mu_b: self.mu_b,
            },
            channel: self.channel()?,
            det: self.detector()?,
            eve: self.eve(),
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Check every parameter group.
    pub fn validate(&self) -> Result<(), CliError> {
        self.source()?;
        self.detector()?;
        self.chain()?;
        self.mc_config()?;
        if !(self.suppression_budget.is_finite() && self.suppression_budget > 0.0) {
            return Err(bad("suppression-budget", &self.suppression_budget.to_string(), "> 0"));
        }
        Ok(())
    }
}

fn bad(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Usage(format!("invalid value for {key}: '{value}' (expected {expected})"))
}

fn num(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, value, "a finite number"))
}

fn count(key: &str, value: &str) -> Result<u64, CliError> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    // accept 1e7-style counts when they are exact integers
    match value.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 => Ok(x as u64),
        _ => Err(bad(key, value, "a non-negative integer")),
    }
}

/// `start:step:end` (inclusive) or a comma-separated list.
pub fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = value.split(':').collect();
    let values = if parts.len() == 3 {
        let start = num(key, parts[0])?;
        let step = num(key, parts[1])?;
        let end = num(key, parts[2])?;
        if step <= 0.0 || end < start {
            return Err(bad(key, value, "start:step:end with step > 0 and end >= start"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| round12(start + k as f64 * step))
            .collect()
    } else {
        value
            .split(',')
            .map(|v| num(key, v.trim()))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad(key, value, "a non-empty strictly increasing list"));
    }
    Ok(values)
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let g = ExperimentConfig::preset("gys2004").unwrap();
        assert_eq!(g.y0, 1.7e-6);
        assert_eq!(g.mu_s_grid.len(), 19);
        assert_eq!(g.mu_s_grid[8], 0.5);
        let i = ExperimentConfig::preset("ideal").unwrap();
        assert_eq!((i.y0, i.e_detector), (0.0, 0.0));
        assert!(ExperimentConfig::preset("bb84").is_err());
    }

    #[test]
    fn file_then_override() {
        let mut c = ExperimentConfig::preset("gys2004").unwrap();
        c.apply_text("# comment\npreset = ideal\nmu_s = 0.3  # trailing\n\nlength-km=80\n")
            .unwrap();
        assert_eq!(c.preset, "ideal");
        assert_eq!(c.mu_s, 0.3);
        assert_eq!(c.length_km, 80.0);
        c.set("mu-s", "0.4").unwrap();
        assert_eq!(c.mu_s, 0.4);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = ExperimentConfig::preset("gys2004").unwrap();
        let e = c.apply_text("eta_d = abc").unwrap_err().to_string();
        assert!(e.contains("eta-d") && e.contains("line 1"), "{e}");
        let e = c.set("colour", "red").unwrap_err().to_string();
        assert!(e.contains("colour"));
        c.set("length-km", "-5").unwrap();
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("length_km"), "{e}");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("g", "0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("g", "0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("g", "0:0.1:0.3").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
        assert!(parse_grid("g", "0.3,0.1").is_err());
        assert!(parse_grid("g", "1:0:2").is_err());
    }

    #[test]
    fn scientific_counts() {
        let mut c = ExperimentConfig::preset("gys2004").unwrap();
        c.set("n-pulses", "1e7").unwrap();
        assert_eq!(c.n_pulses, 10_000_000);
        assert!(c.set("n-pulses", "1.5").is_err());
    }
}
