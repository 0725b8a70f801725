use std::path::Path;

use mmsrckf_core::patient_sim::{sample_coefficients, PatientCoefficients};
use mmsrckf_harness::io::{read_columns, ESTIMATE_COLUMNS};
use mmsrckf_harness::scenario::{self, estimates_path, truth_path};
use mmsrckf_harness::{Algo, ExperimentConfig, HarnessError, Mode};

fn short_config(dir: &Path, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        horizon: 2500.0,
        out: dir.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn replay_of_exported_trajectory_reproduces_simulate() {
    for seed in [2u64, 5] {
        let sim_dir = tempfile::tempdir().unwrap();
        let rep_dir = tempfile::tempdir().unwrap();
        let cfg = short_config(sim_dir.path(), seed);
        scenario::run_simulate(&cfg).unwrap();

        let replay_cfg = ExperimentConfig {
            mode: Mode::Replay,
            input: Some(truth_path(sim_dir.path())),
            out: rep_dir.path().to_path_buf(),
            algo: Algo::Mmsrckf,
            ..cfg.clone()
        };
        scenario::run_replay(&replay_cfg).unwrap();

        let a = read_columns(&estimates_path(sim_dir.path(), "mmsrckf"), &ESTIMATE_COLUMNS).unwrap();
        let b = read_columns(&estimates_path(rep_dir.path(), "mmsrckf"), &ESTIMATE_COLUMNS).unwrap();
        assert_eq!(a[0].len(), b[0].len());
        for (ca, cb) in a.iter().zip(&b) {
            for (x, y) in ca.iter().zip(cb) {
                assert!((x - y).abs() <= 1e-9, "seed {seed}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn identical_seeds_give_identical_files() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    scenario::run_simulate(&short_config(d1.path(), 8)).unwrap();
    scenario::run_simulate(&short_config(d2.path(), 8)).unwrap();
    for name in ["truth.csv", "mmsrckf.csv", "mmekf.csv", "metrics.txt"] {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d2.path().join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn output_schema_is_fixed() {
    let d = tempfile::tempdir().unwrap();
    scenario::run_simulate(&short_config(d.path(), 1)).unwrap();
    let text = std::fs::read_to_string(estimates_path(d.path(), "mmekf")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t_s,u_ml_h,y_mmhg,map_est,k_est,t_est,b_est,tau_est,p0,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10"
    );
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 19));
}

fn write_replay(path: &Path, rows: impl Iterator<Item = (f64, f64, f64)>) {
    let mut s = String::from("t_s,infusion_ml_h,map_meas_mmhg\n");
    for (t, u, y) in rows {
        s.push_str(&format!("{t},{u},{y}\n"));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn resting_measurements_identify_the_baseline() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("rest.csv");
    write_replay(&input, (0..2000).map(|k| (k as f64, 0.0, 70.0)));
    let cfg = ExperimentConfig {
        mode: Mode::Replay,
        input: Some(input),
        out: d.path().to_path_buf(),
        init_baseline: Some(60.0),
        ..Default::default()
    };
    let out = scenario::run_replay(&cfg).unwrap();
    for rows in [out.srckf.unwrap(), out.ekf.unwrap()] {
        let last = rows.last().unwrap();
        assert!((last.baseline - 70.0).abs() <= 0.5, "baseline {}", last.baseline);
        assert!((last.map - last.baseline).abs() < 0.5);
    }
}

#[test]
fn twenty_hertz_input_is_binned_to_the_sample_period() {
    let d = tempfile::tempdir().unwrap();
    let input = d.path().join("fast.csv");
    let n = 20 * 997 + 13;
    write_replay(&input, (0..n).map(|k| (k as f64 / 20.0, 10.0, 70.0 + (k as f64 * 0.01).sin())));
    let cfg = ExperimentConfig {
        mode: Mode::Replay,
        input: Some(input),
        out: d.path().to_path_buf(),
        algo: Algo::Mmsrckf,
        ..Default::default()
    };
    let out = scenario::run_replay(&cfg).unwrap();
    let duration = (n - 1) as f64 / 20.0;
    assert_eq!(out.srckf.unwrap().len(), (duration * 0.2).floor() as usize + 1);
}

#[test]
fn malformed_and_unordered_inputs_map_to_data_errors() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.csv");
    std::fs::write(&bad, "t_s,infusion_ml_h,map_meas_mmhg\n0,0,70\n5,0,seventy\n").unwrap();
    let cfg = ExperimentConfig {
        mode: Mode::Replay,
        input: Some(bad.clone()),
        out: d.path().to_path_buf(),
        ..Default::default()
    };
    let e = scenario::run_replay(&cfg).unwrap_err();
    assert!(matches!(e, HarnessError::MalformedCsv { .. }));
    assert_eq!(e.exit_code(), 3);

    write_replay(&bad, [(0.0, 0.0, 70.0), (5.0, 0.0, 70.0), (4.0, 0.0, 70.0)].into_iter());
    let e = scenario::run_replay(&cfg).unwrap_err();
    assert!(matches!(e, HarnessError::NonMonotonicTime { .. }));
}

#[test]
fn degenerate_patient_is_tracked_by_both_banks() {
    let d = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        noise_std: 0.0,
        transient_skip: 40,
        horizon: 3000.0,
        infusion: vec![[0.0, 100.0]],
        out: d.path().to_path_buf(),
        ..Default::default()
    };
    let patient = PatientCoefficients {
        k1: 0.0,
        b_t: 0.0,
        tau_max: 0.0,
        ..sample_coefficients(3)
    };
    let out = scenario::simulate_patient(&cfg, patient).unwrap();
    for name in ["mmsrckf", "mmekf"] {
        let m = out.report.algorithm(name).unwrap();
        let map = m.skipped.get("MAP").unwrap();
        assert!(map < 0.1, "{name} MAP RMSE {map}");
    }
}

#[test]
fn metrics_subcommand_recomputes_the_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = short_config(d.path(), 4);
    let direct = scenario::run_simulate(&cfg).unwrap();
    let again = scenario::run_metrics(&cfg).unwrap();
    for (a, b) in direct.algorithms.iter().zip(&again.algorithms) {
        for i in 0..5 {
            assert!((a.skipped.0[i] - b.skipped.0[i]).abs() < 1e-9);
            assert!((a.all.0[i] - b.all.0[i]).abs() < 1e-9);
        }
    }
}
