//! Simulate, replay and metrics scenarios.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mmsrckf_core::ekf::{EkfBelief, ExtendedFilter};
use mmsrckf_core::mm_bank::{CubatureFilter, HypothesisFilter, MultipleModelBank};
use mmsrckf_core::numerics::{LowerTriangular, Matrix};
use mmsrckf_core::patient_sim::{self, GroundTruthTrajectory, PatientCoefficients};
use mmsrckf_core::srckf::{GaussianBelief, NoiseModel};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::io::{self as csvio, EstimateRow, TRUTH_COLUMNS};
use crate::metrics::{AlgoMetrics, MetricsReport, TruthSeries};
use crate::resample::resample;

pub const SRCKF_NAME: &str = "mmsrckf";
pub const EKF_NAME: &str = "mmekf";

/// Uniformly sampled `(u, y)` stream fed to the banks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InputStream {
    pub times: Vec<f64>,
    pub inputs: Vec<f64>,
    pub measurements: Vec<f64>,
}

impl InputStream {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Bin-mean resampling of raw samples to period `ts`.
    pub fn from_samples(times: &[f64], inputs: &[f64], measurements: &[f64], ts: f64) -> Result<Self> {
        let r = resample(times, &[inputs, measurements], ts)?;
        let mut cols = r.columns.into_iter();
        Ok(Self {
            times: r.times,
            inputs: cols.next().unwrap_or_default(),
            measurements: cols.next().unwrap_or_default(),
        })
    }
}

/// Resamples a simulator trajectory to the estimator grid, returning the
/// bank input and the matching truth.
pub fn downsample_trajectory(traj: &GroundTruthTrajectory<f64>, ts: f64) -> Result<(InputStream, TruthSeries)> {
    let col = |f: fn(&patient_sim::TrajectoryRecord<f64>) -> f64| -> Vec<f64> { traj.records.iter().map(f).collect() };
    let times = col(|r| r.time);
    let columns = [
        col(|r| r.infusion),
        col(|r| r.measured_map),
        col(|r| r.sensitivity),
        col(|r| r.lag_time),
        col(|r| r.baseline),
        col(|r| r.delay),
        col(|r| r.true_map()),
    ];
    split_resampled(&times, &columns, ts)
}

fn split_resampled(times: &[f64], columns: &[Vec<f64>; 7], ts: f64) -> Result<(InputStream, TruthSeries)> {
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let r = resample(times, &refs, ts)?;
    let mut c = r.columns.into_iter();
    let mut next = || c.next().unwrap_or_default();
    let stream = InputStream {
        times: r.times,
        inputs: next(),
        measurements: next(),
    };
    let truth = TruthSeries {
        sensitivity: next(),
        lag_time: next(),
        baseline: next(),
        delay: next(),
        map: next(),
    };
    Ok((stream, truth))
}

fn initial_mean(cfg: &ExperimentConfig, stream: &InputStream) -> Result<Vec<f64>> {
    let baseline = match cfg.init_baseline {
        Some(b) => b,
        None => *stream
            .measurements
            .first()
            .ok_or_else(|| HarnessError::config("input", "no measurements"))?,
    };
    Ok(vec![cfg.init_delta_map, cfg.init_k, cfg.init_t, baseline])
}

fn run_bank<F: HypothesisFilter<f64>>(
    mut bank: MultipleModelBank<f64, F>,
    stream: &InputStream,
) -> Result<Vec<EstimateRow>> {
    let mut rows = Vec::with_capacity(stream.len());
    for k in 0..stream.len() {
        let (u, y) = (stream.inputs[k], stream.measurements[k]);
        let e = bank.step(u, y)?;
        rows.push(EstimateRow {
            time: stream.times[k],
            input: u,
            measurement: y,
            map: e.map_estimate,
            sensitivity: e.blended_state.sensitivity,
            lag_time: e.blended_state.lag_time,
            baseline: e.blended_state.baseline,
            delay: e.blended_delay,
            probabilities: e.probabilities,
        });
    }
    Ok(rows)
}

pub fn srckf_bank(cfg: &ExperimentConfig, mean: Vec<f64>) -> Result<MultipleModelBank<f64, CubatureFilter<f64>>> {
    let noise = NoiseModel::from_variances(&cfg.q_diag, &[cfg.r])?;
    let filter = CubatureFilter::new(cfg.ts, noise)?;
    let sd: Vec<f64> = cfg.init_cov_diag.iter().map(|v| v.sqrt()).collect();
    let belief = GaussianBelief::new(mean, LowerTriangular::from_diagonal(&sd)?)?;
    Ok(MultipleModelBank::new(filter, cfg.sampling()?, belief)?)
}

pub fn ekf_bank(cfg: &ExperimentConfig, mean: Vec<f64>) -> Result<MultipleModelBank<f64, ExtendedFilter<f64>>> {
    let filter = ExtendedFilter::from_variances(cfg.ts, &cfg.q_diag, cfg.r)?;
    let belief = EkfBelief::new(mean, Matrix::from_diagonal(&cfg.init_cov_diag))?;
    Ok(MultipleModelBank::new(filter, cfg.sampling()?, belief)?)
}

/// Runs the MMSRCKF bank over `stream`.
pub fn run_srckf(cfg: &ExperimentConfig, stream: &InputStream) -> Result<Vec<EstimateRow>> {
    run_bank(srckf_bank(cfg, initial_mean(cfg, stream)?)?, stream)
}

/// Runs the MMEKF bank over `stream`.
pub fn run_ekf(cfg: &ExperimentConfig, stream: &InputStream) -> Result<Vec<EstimateRow>> {
    run_bank(ekf_bank(cfg, initial_mean(cfg, stream)?)?, stream)
}

/// Everything a simulate run produces, before anything is written.
#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub coefficients: PatientCoefficients<f64>,
    pub trajectory: GroundTruthTrajectory<f64>,
    pub stream: InputStream,
    pub truth: TruthSeries,
    pub srckf: Option<Vec<EstimateRow>>,
    pub ekf: Option<Vec<EstimateRow>>,
    pub report: MetricsReport,
}

/// Simulates the patient sampled from `cfg.seed` and runs the banks.
pub fn simulate_scenario(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    simulate_patient(cfg, patient_sim::sample_coefficients(cfg.seed))
}

/// Like [`simulate_scenario`] with explicit patient coefficients.
pub fn simulate_patient(cfg: &ExperimentConfig, coefficients: PatientCoefficients<f64>) -> Result<SimulateOutput> {
    cfg.validate()?;
    let profile = cfg.infusion_profile()?;
    let trajectory = patient_sim::simulate(&coefficients, &profile, cfg.sim_dt, cfg.horizon, cfg.noise_std)?;
    let (stream, truth) = downsample_trajectory(&trajectory, cfg.ts)?;
    let srckf = cfg.algo.runs_srckf().then(|| run_srckf(cfg, &stream)).transpose()?;
    let ekf = cfg.algo.runs_ekf().then(|| run_ekf(cfg, &stream)).transpose()?;
    let report = build_report(cfg, &truth, srckf.as_deref(), ekf.as_deref())?;
    Ok(SimulateOutput {
        coefficients,
        trajectory,
        stream,
        truth,
        srckf,
        ekf,
        report,
    })
}

fn build_report(
    cfg: &ExperimentConfig,
    truth: &TruthSeries,
    srckf: Option<&[EstimateRow]>,
    ekf: Option<&[EstimateRow]>,
) -> Result<MetricsReport> {
    let mut algorithms = Vec::new();
    if let Some(rows) = srckf {
        algorithms.push(AlgoMetrics::compute(SRCKF_NAME, rows, truth, cfg.transient_skip)?);
    }
    if let Some(rows) = ekf {
        algorithms.push(AlgoMetrics::compute(EKF_NAME, rows, truth, cfg.transient_skip)?);
    }
    Ok(MetricsReport {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        steps: truth.len(),
        transient_skip: cfg.transient_skip,
        algorithms,
    })
}

pub fn estimates_path(out: &Path, name: &str) -> PathBuf {
    out.join(format!("{name}.csv"))
}

pub fn truth_path(out: &Path) -> PathBuf {
    out.join("truth.csv")
}

pub fn metrics_path(out: &Path) -> PathBuf {
    out.join("metrics.txt")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn write_bank_outputs(cfg: &ExperimentConfig, srckf: Option<&[EstimateRow]>, ekf: Option<&[EstimateRow]>) -> Result<()> {
    let n = cfg.delay_grid.len();
    if let Some(rows) = srckf {
        csvio::write_estimates_file(&estimates_path(&cfg.out, SRCKF_NAME), rows, n)?;
    }
    if let Some(rows) = ekf {
        csvio::write_estimates_file(&estimates_path(&cfg.out, EKF_NAME), rows, n)?;
    }
    Ok(())
}

/// Simulate scenario with outputs under `cfg.out`: `truth.csv`,
/// `mmsrckf.csv`, `mmekf.csv`, `metrics.txt`.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let out = simulate_scenario(cfg)?;
    ensure_dir(&cfg.out)?;
    let path = truth_path(&cfg.out);
    let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    out.trajectory.write_csv(&mut w).map_err(|e| HarnessError::io(&path, e))?;
    w.flush().map_err(|e| HarnessError::io(&path, e))?;
    write_bank_outputs(cfg, out.srckf.as_deref(), out.ekf.as_deref())?;
    write_text(&metrics_path(&cfg.out), &out.report.to_text())?;
    Ok(out.report)
}

#[derive(Clone, Debug)]
pub struct ReplayOutput {
    pub stream: InputStream,
    pub srckf: Option<Vec<EstimateRow>>,
    pub ekf: Option<Vec<EstimateRow>>,
}

/// Replays a recorded `(t, u, y)` CSV through the configured banks.
pub fn replay_scenario(cfg: &ExperimentConfig) -> Result<ReplayOutput> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| HarnessError::config("input", "replay needs an input CSV"))?;
    let mut checked = cfg.clone();
    checked.mode = crate::config::Mode::Replay;
    checked.validate()?;
    let series = csvio::read_replay(input)?;
    let stream = InputStream::from_samples(&series.times, &series.infusion, &series.measured_map, cfg.ts)?;
    let srckf = cfg.algo.runs_srckf().then(|| run_srckf(cfg, &stream)).transpose()?;
    let ekf = cfg.algo.runs_ekf().then(|| run_ekf(cfg, &stream)).transpose()?;
    Ok(ReplayOutput { stream, srckf, ekf })
}

/// Replay scenario writing `mmsrckf.csv` and/or `mmekf.csv` under `cfg.out`.
pub fn run_replay(cfg: &ExperimentConfig) -> Result<ReplayOutput> {
    let out = replay_scenario(cfg)?;
    ensure_dir(&cfg.out)?;
    write_bank_outputs(cfg, out.srckf.as_deref(), out.ekf.as_deref())?;
    Ok(out)
}

fn read_estimate_rows(path: &Path) -> Result<Vec<EstimateRow>> {
    let c = csvio::read_estimates(path)?;
    Ok((0..c[0].len())
        .map(|i| EstimateRow {
            time: c[0][i],
            input: c[1][i],
            measurement: c[2][i],
            map: c[3][i],
            sensitivity: c[4][i],
            lag_time: c[5][i],
            baseline: c[6][i],
            delay: c[7][i],
            probabilities: Vec::new(),
        })
        .collect())
}

/// Recomputes the metrics of a finished simulate run in `cfg.out` from its
/// CSV files and rewrites `metrics.txt`.
pub fn run_metrics(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let cols = csvio::read_columns(&truth_path(&cfg.out), &TRUTH_COLUMNS)?;
    let true_map: Vec<f64> = cols[5].iter().zip(&cols[6]).map(|(b, d)| b + d).collect();
    let columns = [
        cols[1].clone(),
        cols[7].clone(),
        cols[2].clone(),
        cols[3].clone(),
        cols[5].clone(),
        cols[4].clone(),
        true_map,
    ];
    let (_, truth) = split_resampled(&cols[0], &columns, cfg.ts)?;

    let load = |name: &str| -> Result<Option<Vec<EstimateRow>>> {
        let p = estimates_path(&cfg.out, name);
        if p.exists() {
            read_estimate_rows(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    let srckf = load(SRCKF_NAME)?;
    let ekf = load(EKF_NAME)?;
    if srckf.is_none() && ekf.is_none() {
        return Err(HarnessError::config("out", "no estimate CSVs found"));
    }
    let report = build_report(cfg, &truth, srckf.as_deref(), ekf.as_deref())?;
    write_text(&metrics_path(&cfg.out), &report.to_text())?;
    Ok(report)
}
