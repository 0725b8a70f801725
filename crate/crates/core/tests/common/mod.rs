#![allow(dead_code)]

use mmsrckf_core::map_model::{transition, AugmentedState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for j in 0..b[0].len() {
            for k in 0..b.len() {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn tr(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

pub fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Inverse by Gauss-Jordan with partial pivoting.
pub fn inv(a: &Mat) -> Mat {
    let n = a.len();
    let mut m: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot = m[c].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Covariance-form linear Kalman filter.
pub struct LinearKf {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub q: Mat,
    pub r: Mat,
    pub mean: Vec<f64>,
    pub cov: Mat,
}

impl LinearKf {
    pub fn predict(&mut self, u: &[f64]) {
        let bu = mat_vec(&self.b, u);
        self.mean = mat_vec(&self.a, &self.mean).iter().zip(&bu).map(|(x, y)| x + y).collect();
        self.cov = add(&mul(&mul(&self.a, &self.cov), &tr(&self.a)), &self.q);
    }

    pub fn update(&mut self, y: &[f64]) {
        let pct = mul(&self.cov, &tr(&self.c));
        let s = add(&mul(&self.c, &pct), &self.r);
        let k = mul(&pct, &inv(&s));
        let innov: Vec<f64> = y.iter().zip(mat_vec(&self.c, &self.mean)).map(|(a, b)| a - b).collect();
        let dx = mat_vec(&k, &innov);
        self.mean = self.mean.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let n = self.mean.len();
        let kc = mul(&k, &self.c);
        let ikc: Mat = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } - kc[i][j]).collect())
            .collect();
        let joseph = mul(&mul(&ikc, &self.cov), &tr(&ikc));
        self.cov = add(&joseph, &mul(&mul(&k, &self.r), &tr(&k)));
    }
}

/// Seeded stable 3-state, 1-input, 2-output system with correlated noise.
pub struct LinearSystem {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub sqrt_q: Mat,
    pub sqrt_r: Mat,
}

pub fn seeded_system(seed: u64) -> LinearSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let a = (0..3)
        .map(|i| (0..3).map(|j| if i == j { 0.4 } else { u(-0.25, 0.25) }).collect())
        .collect();
    let b = (0..3).map(|_| vec![u(-1.0, 1.0)]).collect();
    let c = (0..2).map(|_| (0..3).map(|_| u(-1.0, 1.0)).collect()).collect();
    let sqrt_q = (0..3)
        .map(|i| (0..3).map(|j| if j < i { u(-0.1, 0.1) } else if j == i { u(0.1, 0.5) } else { 0.0 }).collect())
        .collect();
    let sqrt_r = vec![vec![u(0.2, 1.0), 0.0], vec![u(-0.2, 0.2), u(0.2, 1.0)]];
    LinearSystem { a, b, c, sqrt_q, sqrt_r }
}

/// Discrete delayed plant matching the bank's time convention:
/// `x_k = f(x_{k−1}, u_{k−1−d})`, `y_k = ΔMAP_k + MAP_b + v_k`.
pub struct DelayPlant {
    pub inputs: Vec<f64>,
    pub measurements: Vec<f64>,
    pub states: Vec<AugmentedState<f64>>,
}

pub fn delay_plant(seed: u64, delay_steps: usize, steps: usize, truth: AugmentedState<f64>, ts: f64) -> DelayPlant {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = Normal::new(0.0, 1.0).unwrap();
    let w = Normal::new(0.0, 0.01).unwrap();
    let mut inputs = Vec::with_capacity(steps);
    let mut level = 0.0;
    for k in 0..steps {
        if k % 12 == 0 {
            level = rng.random_range(0.0..200.0);
        }
        inputs.push(level);
    }
    let mut x = truth;
    let mut states = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    for k in 0..steps {
        let idx = k as isize - 1 - delay_steps as isize;
        let u = if idx >= 0 { inputs[idx as usize] } else { 0.0 };
        x = transition(&x, u, ts, Some([w.sample(&mut rng), 0.0, 0.0, 0.0]));
        states.push(x);
        measurements.push(x.delta_map + x.baseline + v.sample(&mut rng));
    }
    DelayPlant {
        inputs,
        measurements,
        states,
    }
}
