//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_delay_grid, Algo, ExperimentConfig, Mode};
use crate::error::{HarnessError, Result};
use crate::scenario;

#[derive(Debug, Parser)]
#[command(name = "mmsrckf", version, about = "Multiple-model delay and parameter estimation runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a seeded patient and run both banks against its truth.
    Simulate(Overrides),
    /// Run the banks over a recorded `t_s,infusion_ml_h,map_meas_mmhg` CSV.
    Replay(Overrides),
    /// Recompute RMSE metrics for a finished simulate run in `--out`.
    Metrics(Overrides),
}

/// Flags overriding config-file keys of the same name.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub ts: Option<f64>,
    /// e.g. "0,10,...,100"
    #[arg(long = "delay-grid")]
    pub delay_grid: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, value_parser = ["mmsrckf", "mmekf", "both"])]
    pub algo: Option<String>,
    /// Replay input CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated process noise variances for [ΔMAP, K, T, MAP_b].
    #[arg(long = "q-diag")]
    pub q_diag: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "init-delta-map")]
    pub init_delta_map: Option<f64>,
    #[arg(long = "init-k")]
    pub init_k: Option<f64>,
    #[arg(long = "init-t")]
    pub init_t: Option<f64>,
    #[arg(long = "init-baseline")]
    pub init_baseline: Option<f64>,
    #[arg(long = "init-cov-diag")]
    pub init_cov_diag: Option<String>,
    #[arg(long = "sim-dt")]
    pub sim_dt: Option<f64>,
    #[arg(long = "noise-std")]
    pub noise_std: Option<f64>,
    #[arg(long = "transient-skip")]
    pub transient_skip: Option<usize>,
}

fn parse_four(key: &str, text: &str) -> Result<[f64; 4]> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::config(key, format!("`{s}` is not a number")))
        })
        .collect::<Result<_>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| HarnessError::config(key, format!("expected 4 values, got {}", v.len())))
}

impl Overrides {
    /// The config file (or defaults) with every given flag applied.
    pub fn resolve(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        c.mode = mode;
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.ts {
            c.ts = v;
        }
        if let Some(v) = &self.delay_grid {
            c.delay_grid = parse_delay_grid(v)?;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = &self.algo {
            c.algo = v.parse::<Algo>()?;
        }
        if let Some(v) = &self.input {
            c.input = Some(v.clone());
        }
        if let Some(v) = &self.q_diag {
            c.q_diag = parse_four("q-diag", v)?;
        }
        if let Some(v) = self.r {
            c.r = v;
        }
        if let Some(v) = self.init_delta_map {
            c.init_delta_map = v;
        }
        if let Some(v) = self.init_k {
            c.init_k = v;
        }
        if let Some(v) = self.init_t {
            c.init_t = v;
        }
        if let Some(v) = self.init_baseline {
            c.init_baseline = Some(v);
        }
        if let Some(v) = &self.init_cov_diag {
            c.init_cov_diag = parse_four("init-cov-diag", v)?;
        }
        if let Some(v) = self.sim_dt {
            c.sim_dt = v;
        }
        if let Some(v) = self.noise_std {
            c.noise_std = v;
        }
        if let Some(v) = self.transient_skip {
            c.transient_skip = v;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Executes a parsed command, returning the text to print.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Simulate(o) => {
            let cfg = o.resolve(Mode::Simulate)?;
            Ok(scenario::run_simulate(&cfg)?.to_text())
        }
        Command::Replay(o) => {
            let cfg = o.resolve(Mode::Replay)?;
            let out = scenario::run_replay(&cfg)?;
            Ok(format!(
                "steps: {}\nout: {}\n",
                out.stream.len(),
                cfg.out.display()
            ))
        }
        Command::Metrics(o) => {
            let cfg = o.resolve(Mode::Simulate)?;
            Ok(scenario::run_metrics(&cfg)?.to_text())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("mmsrckf-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.toml");
        std::fs::write(&p, "seed = 5\nts = 10.0\nr = 2.0\n").unwrap();
        let cli = Cli::try_parse_from([
            "mmsrckf",
            "simulate",
            "--config",
            p.to_str().unwrap(),
            "--seed",
            "9",
            "--delay-grid",
            "0,20,...,100",
            "--q-diag",
            "1,2,3,4",
        ])
        .unwrap();
        let Command::Simulate(o) = &cli.command else { panic!() };
        let c = o.resolve(Mode::Simulate).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.ts, 10.0);
        assert_eq!(c.r, 2.0);
        assert_eq!(c.delay_grid, vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
        assert_eq!(c.q_diag, [1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn bad_q_diag_is_config_error() {
        let o = Overrides {
            q_diag: Some("1,2".into()),
            ..Default::default()
        };
        assert_eq!(o.resolve(Mode::Simulate).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn replay_requires_input() {
        assert!(Overrides::default().resolve(Mode::Replay).is_err());
    }
}
