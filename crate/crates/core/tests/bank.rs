mod common;

use common::delay_plant;
use mmsrckf_core::ekf::{EkfBelief, ExtendedFilter};
use mmsrckf_core::map_model::{AugmentedState, SamplingConfig};
use mmsrckf_core::mm_bank::{CubatureFilter, HypothesisFilter, MultipleModelBank};
use mmsrckf_core::numerics::{LowerTriangular, Matrix};
use mmsrckf_core::srckf::{GaussianBelief, NoiseModel};
use proptest::prelude::*;

const TS: f64 = 5.0;
const Q: [f64; 4] = [1e-4, 1e-8, 1e-2, 1e-4];
const R: f64 = 1.0;
const P0: [f64; 4] = [25.0, 0.0625, 2500.0, 100.0];

fn cubature_bank(grid: Vec<f64>, baseline: f64) -> MultipleModelBank<f64, CubatureFilter<f64>> {
    let filter = CubatureFilter::new(TS, NoiseModel::from_variances(&Q, &[R]).unwrap()).unwrap();
    let sd: Vec<f64> = P0.iter().map(|v| v.sqrt()).collect();
    let belief = GaussianBelief::new(vec![0.0, 0.5, 60.0, baseline], LowerTriangular::from_diagonal(&sd).unwrap()).unwrap();
    MultipleModelBank::new(filter, SamplingConfig::new(TS, grid).unwrap(), belief).unwrap()
}

fn extended_bank(baseline: f64) -> MultipleModelBank<f64, ExtendedFilter<f64>> {
    let filter = ExtendedFilter::from_variances(TS, &Q, R).unwrap();
    let belief = EkfBelief::new(vec![0.0, 0.5, 60.0, baseline], Matrix::from_diagonal(&P0)).unwrap();
    MultipleModelBank::new(filter, SamplingConfig::standard(), belief).unwrap()
}

fn truth() -> AugmentedState<f64> {
    AugmentedState::new(0.0, 0.3, 60.0, 70.0)
}

#[test]
fn bank_locks_onto_forty_second_delay() {
    let plant = delay_plant(40, 8, 1000, truth(), TS);
    let mut bank = cubature_bank(SamplingConfig::<f64>::standard().delay_grid, plant.measurements[0]);
    let mut within = 0;
    let mut last = None;
    for k in 0..plant.inputs.len() {
        let e = bank.step(plant.inputs[k], plant.measurements[k]).unwrap();
        if k >= 300 && (e.blended_delay - 40.0).abs() <= 5.0 {
            within += 1;
        }
        last = Some(e);
    }
    assert!(within as f64 >= 0.95 * 700.0, "{within} of 700 steps within 5 s");
    assert_eq!(last.unwrap().most_likely, 4);
}

#[test]
fn matched_hypothesis_dominates_for_several_delays() {
    for (seed, d) in [(1u64, 0usize), (2, 4), (3, 14), (4, 20)] {
        let plant = delay_plant(seed, d, 300, truth(), TS);
        let mut bank = cubature_bank(SamplingConfig::<f64>::standard().delay_grid, plant.measurements[0]);
        let mut e = None;
        for k in 0..plant.inputs.len() {
            e = Some(bank.step(plant.inputs[k], plant.measurements[k]).unwrap());
        }
        let e = e.unwrap();
        assert_eq!(e.most_likely, d / 2, "delay {} s", d as f64 * TS);
        assert!(e.probabilities[d / 2] > 0.9);
    }
}

#[test]
fn duplicated_hypotheses_share_probability() {
    let plant = delay_plant(9, 6, 200, truth(), TS);
    let mut bank = cubature_bank(vec![0.0, 30.0, 30.0, 60.0], plant.measurements[0]);
    for k in 0..plant.inputs.len() {
        let e = bank.step(plant.inputs[k], plant.measurements[k]).unwrap();
        assert!((e.probabilities[1] - e.probabilities[2]).abs() < 1e-12);
        let direct: f64 = [0.0, 30.0, 30.0, 60.0].iter().zip(&e.probabilities).map(|(t, p)| t * p).sum();
        assert!((e.blended_delay - direct).abs() < 1e-9);
    }
}

#[test]
fn ekf_bank_also_identifies_the_delay() {
    let plant = delay_plant(41, 8, 600, truth(), TS);
    let mut bank = extended_bank(plant.measurements[0]);
    let mut e = None;
    for k in 0..plant.inputs.len() {
        e = Some(bank.step(plant.inputs[k], plant.measurements[k]).unwrap());
    }
    assert_eq!(e.unwrap().most_likely, 4);
}

fn check_simplex<F: HypothesisFilter<f64>>(bank: &mut MultipleModelBank<f64, F>, u: &[f64], y: &[f64]) {
    for k in 0..u.len() {
        let e = bank.step(u[k], y[k]).unwrap();
        let s: f64 = e.probabilities.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(e.probabilities.iter().all(|p| *p >= 0.0));
        assert!((0.0..=100.0).contains(&e.blended_delay));
        for h in bank.hypotheses() {
            assert!(bank.filter().min_sqrt_diagonal(&h.belief) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn probabilities_stay_on_the_simplex(seed in 0u64..10_000, d in 0usize..=20, offset in -20.0f64..20.0) {
        let plant = delay_plant(seed, d, 120, truth(), TS);
        let y: Vec<f64> = plant.measurements.iter().map(|v| v + offset).collect();
        let mut sr = cubature_bank(SamplingConfig::<f64>::standard().delay_grid, 70.0);
        check_simplex(&mut sr, &plant.inputs, &y);
        let mut ek = extended_bank(70.0);
        check_simplex(&mut ek, &plant.inputs, &y);
    }
}
