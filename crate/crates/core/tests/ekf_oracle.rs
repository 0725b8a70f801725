mod common;

use common::LinearKf;
use mmsrckf_core::ekf::{ekf_step, EkfBelief};
use mmsrckf_core::map_model::AugmentedState;
use mmsrckf_core::mm_bank::{CubatureFilter, HypothesisFilter};
use mmsrckf_core::numerics::{LowerTriangular, Matrix};
use mmsrckf_core::srckf::{GaussianBelief, NoiseModel};

const TS: f64 = 5.0;

// With K and T known exactly the augmented model is linear in [ΔMAP, MAP_b].
#[test]
fn ekf_with_known_parameters_is_the_linear_kalman_filter() {
    let (k, t, r) = (0.4, 45.0, 1.0);
    let q = [0.02, 0.0, 0.0, 0.001];
    let p0 = [9.0, 0.0, 0.0, 16.0];
    let mut belief = EkfBelief::new(vec![0.0, k, t, 68.0], Matrix::from_diagonal(&p0)).unwrap();
    let a = 1.0 - TS / t;
    let mut kf = LinearKf {
        a: vec![vec![a, 0.0], vec![0.0, 1.0]],
        b: vec![vec![TS * k / t], vec![0.0]],
        c: vec![vec![1.0, 1.0]],
        q: vec![vec![q[0], 0.0], vec![0.0, q[3]]],
        r: vec![vec![r]],
        mean: vec![0.0, 68.0],
        cov: vec![vec![p0[0], 0.0], vec![0.0, p0[3]]],
    };
    let q_mat = Matrix::from_diagonal(&q);
    let mut x = AugmentedState::new(0.0, k, t, 70.0);
    for step in 0..400 {
        let u = [0.0, 50.0, 120.0, 20.0][(step / 40) % 4];
        x = mmsrckf_core::map_model::transition(&x, u, TS, None);
        let y = x.map() + 0.3 * (step as f64 * 0.7).sin();
        let upd = ekf_step(&belief, u, y, TS, &q_mat, r).unwrap();
        belief = upd.belief;
        kf.predict(&[u]);
        kf.update(&[y]);
        assert!((belief.mean[0] - kf.mean[0]).abs() < 1e-9, "step {step}");
        assert!((belief.mean[3] - kf.mean[1]).abs() < 1e-9, "step {step}");
        assert!((belief.cov[(0, 0)] - kf.cov[0][0]).abs() < 1e-9);
        assert!((belief.cov[(0, 3)] - kf.cov[0][1]).abs() < 1e-9);
        assert!((belief.cov[(3, 3)] - kf.cov[1][1]).abs() < 1e-9);
        assert_eq!(belief.mean[1], k);
        assert_eq!(belief.mean[2], t);
    }
}

#[test]
fn ekf_and_srckf_agree_when_parameters_are_nearly_known() {
    let (k, t, r) = (0.4, 45.0, 1.0);
    let q = [0.02, 0.0, 0.0, 0.001];
    let p0 = [9.0, 1e-20, 1e-20, 16.0];
    let cub = CubatureFilter::new(TS, NoiseModel::from_variances(&q, &[r]).unwrap()).unwrap();
    let sd: Vec<f64> = p0.iter().map(|v: &f64| v.sqrt()).collect();
    let mut sr = GaussianBelief::new(vec![0.0, k, t, 68.0], LowerTriangular::from_diagonal(&sd).unwrap()).unwrap();
    let mut ek = EkfBelief::new(vec![0.0, k, t, 68.0], Matrix::from_diagonal(&p0)).unwrap();
    let q_mat = Matrix::from_diagonal(&q);
    let mut x = AugmentedState::new(0.0, k, t, 70.0);
    for step in 0..300 {
        let u = [0.0, 80.0, 30.0][(step / 30) % 3];
        x = mmsrckf_core::map_model::transition(&x, u, TS, None);
        let y = x.map();
        sr = cub.step(&sr, u, y).unwrap().belief;
        ek = ekf_step(&ek, u, y, TS, &q_mat, r).unwrap().belief;
        for i in 0..4 {
            assert!((sr.mean[i] - ek.mean[i]).abs() < 1e-6, "step {step} component {i}");
        }
        assert!(sr.sqrt_cov.diagonal().iter().all(|d| *d > 0.0));
    }
}
