//! Experiment configuration: a TOML key-value file whose keys mirror the
//! command-line flags (`delay-grid` in the file is `--delay-grid` on the
//! command line). Flags override the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mmsrckf_core::map_model::{SamplingConfig, STATE_DIM};
use mmsrckf_core::patient_sim::InfusionProfile;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Simulate,
    Replay,
}

/// Which filter banks to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Mmsrckf,
    Mmekf,
    #[default]
    Both,
}

impl Algo {
    pub fn runs_srckf(self) -> bool {
        matches!(self, Self::Mmsrckf | Self::Both)
    }

    pub fn runs_ekf(self) -> bool {
        matches!(self, Self::Mmekf | Self::Both)
    }
}

impl FromStr for Algo {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmsrckf" => Ok(Self::Mmsrckf),
            "mmekf" => Ok(Self::Mmekf),
            "both" => Ok(Self::Both),
            other => Err(HarnessError::config("algo", format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mmsrckf => "mmsrckf",
            Self::Mmekf => "mmekf",
            Self::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Estimator sample period, s.
    pub ts: f64,
    /// Candidate delays, s.
    pub delay_grid: Vec<f64>,
    /// Process noise variances per step for [ΔMAP, K, T, MAP_b].
    pub q_diag: [f64; STATE_DIM],
    /// Measurement noise variance, mmHg².
    pub r: f64,
    pub init_delta_map: f64,
    pub init_k: f64,
    pub init_t: f64,
    /// Initial baseline; the first measurement when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_baseline: Option<f64>,
    pub init_cov_diag: [f64; STATE_DIM],
    /// Simulated duration, s.
    pub horizon: f64,
    /// Simulator integration step, s.
    pub sim_dt: f64,
    /// Simulator measurement noise standard deviation, mmHg.
    pub noise_std: f64,
    /// Steps excluded from the transient-skipped RMSE.
    pub transient_skip: usize,
    /// Piecewise-constant infusion as `[start s, rate ml/h]` pairs.
    pub infusion: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub algo: Algo,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let profile = InfusionProfile::<f64>::standard();
        Self {
            mode: Mode::Simulate,
            seed: 1,
            ts: 5.0,
            delay_grid: (0..=10).map(|i| 10.0 * i as f64).collect(),
            q_diag: [0.01f64.powi(2), 1e-4f64.powi(2), 0.1f64.powi(2), 0.01f64.powi(2)],
            r: 1.0,
            init_delta_map: 0.0,
            init_k: 0.5,
            init_t: 60.0,
            init_baseline: None,
            init_cov_diag: [5.0f64.powi(2), 0.25f64.powi(2), 50.0f64.powi(2), 10.0f64.powi(2)],
            horizon: 5000.0,
            sim_dt: 0.1,
            noise_std: 1.0,
            transient_skip: 60,
            infusion: profile.segments().iter().map(|&(t, r)| [t, r]).collect(),
            input: None,
            out: PathBuf::from("out"),
            algo: Algo::Both,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::config("config", e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Short stable digest of the serialized config, output directory
    /// excluded.
    pub fn hash(&self) -> String {
        let mut keyed = self.clone();
        keyed.out = PathBuf::new();
        let digest = Sha256::digest(keyed.to_toml_string().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn sampling(&self) -> Result<SamplingConfig<f64>> {
        SamplingConfig::new(self.ts, self.delay_grid.clone())
            .map_err(|e| HarnessError::config("delay-grid", e.to_string()))
    }

    pub fn infusion_profile(&self) -> Result<InfusionProfile<f64>> {
        InfusionProfile::new(self.infusion.iter().map(|p| (p[0], p[1])).collect())
            .map_err(|e| HarnessError::config("infusion", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0) || !self.ts.is_finite() {
            return Err(HarnessError::config("ts", "must be positive"));
        }
        self.sampling()?;
        if self.q_diag.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
            return Err(HarnessError::config("q-diag", "variances must be finite and >= 0"));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(HarnessError::config("r", "must be positive"));
        }
        if self.init_cov_diag.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(HarnessError::config("init-cov-diag", "variances must be positive"));
        }
        if !(self.init_t > 0.0) {
            return Err(HarnessError::config("init-t", "must be positive"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(HarnessError::config("horizon", "must be nonnegative"));
        }
        if !(self.sim_dt > 0.0 && self.sim_dt <= mmsrckf_core::patient_sim::MAX_STEP) {
            return Err(HarnessError::config("sim-dt", "must lie in (0, 0.5]"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(HarnessError::config("noise-std", "must be nonnegative"));
        }
        self.infusion_profile()?;
        if self.mode == Mode::Replay && self.input.is_none() {
            return Err(HarnessError::config("input", "replay needs an input CSV"));
        }
        Ok(())
    }
}

/// Parses a delay grid such as `0,10,20` or the progression shorthand
/// `0,10,...,100`.
pub fn parse_delay_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| HarnessError::config("delay-grid", format!("`{s}` is not a number")))
    };
    if let Some(pos) = parts.iter().position(|p| *p == "..." || *p == "…") {
        if pos < 2 || pos + 2 != parts.len() {
            return Err(HarnessError::config(
                "delay-grid",
                "progression form is `a,b,...,c`",
            ));
        }
        let head: Vec<f64> = parts[..pos].iter().map(|s| num(s)).collect::<Result<_>>()?;
        let last = num(parts[pos + 1])?;
        let step = head[pos - 1] - head[pos - 2];
        if !(step > 0.0) {
            return Err(HarnessError::config("delay-grid", "progression step must be positive"));
        }
        let start = head[0];
        let count = ((last - start) / step + 1e-9).floor() as usize;
        let mut grid: Vec<f64> = (0..=count).map(|i| start + step * i as f64).collect();
        if (grid[grid.len() - 1] - last).abs() > 1e-9 * step {
            grid.push(last);
        }
        return Ok(grid);
    }
    parts.iter().map(|s| num(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_standard_setup() {
        let c = ExperimentConfig::default();
        assert_eq!(c.ts, 5.0);
        assert_eq!(c.delay_grid.len(), 11);
        assert_eq!(c.delay_grid[10], 100.0);
        assert_eq!(c.init_cov_diag, [25.0, 0.0625, 2500.0, 100.0]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::default();
        c.seed = 99;
        c.init_baseline = Some(68.5);
        c.input = Some(PathBuf::from("data/run.csv"));
        c.algo = Algo::Mmekf;
        let text = c.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml_string(), text);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml_str("seed = 7\ndelay-grid = [0.0, 20.0, 40.0]\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.delay_grid, vec![0.0, 20.0, 40.0]);
        assert_eq!(c.ts, 5.0);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = ExperimentConfig::from_toml_str("sed = 7\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn delay_grid_forms() {
        assert_eq!(parse_delay_grid("0,10,...,100").unwrap().len(), 11);
        assert_eq!(parse_delay_grid("0, 10, 30").unwrap(), vec![0.0, 10.0, 30.0]);
        assert_eq!(parse_delay_grid("5,10,...,22").unwrap(), vec![5.0, 10.0, 15.0, 20.0, 22.0]);
        assert!(parse_delay_grid("0,...,100").is_err());
        assert!(parse_delay_grid("a,b").is_err());
    }

    #[test]
    fn validation_names_offending_key() {
        let mut c = ExperimentConfig::default();
        c.r = 0.0;
        match c.validate().unwrap_err() {
            HarnessError::Config { key, .. } => assert_eq!(key, "r"),
            other => panic!("unexpected {other:?}"),
        }
        let mut c = ExperimentConfig::default();
        c.mode = Mode::Replay;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
