mod common;

use fuelmoist::models::*;
use fuelmoist::Error;
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn linear_matches_independent_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, p) = (200, 5);
    let x = Array2::from_shape_simple_fn((n, p), || rng.random_range(-2.0..2.0));
    let y: Vec<f64> = (0..n).map(|i| x.row(i).sum() * 0.7 - x[[i, 2]] + rng.random_range(-0.5..0.5)).collect();
    let m = fit_linear(&x, &y).unwrap();
    // augmented design [1 | X], normal equations solved by LU
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[[i, j - 1]] });
    let b = DVector::from_vec(y.clone());
    let sol = (a.transpose() * &a).lu().solve(&(a.transpose() * b)).unwrap();
    assert!((m.intercept - sol[0]).abs() < 1e-8);
    for j in 0..p {
        assert!((m.coeffs[j] - sol[j + 1]).abs() < 1e-8, "coef {j}");
    }
}

#[test]
fn linear_rank_deficient_is_singular() {
    let x = Array2::from_shape_fn((10, 2), |(i, _)| i as f64);
    let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
    // duplicated column: jitter rescues it, yielding a finite split of the slope
    let m = fit_linear(&x, &y).unwrap();
    assert!((m.coeffs[0] + m.coeffs[1] - 1.0).abs() < 1e-6);
    let zero = Array2::<f64>::zeros((10, 1)).mapv(|v| v * f64::INFINITY);
    assert!(matches!(fit_linear(&zero, &y), Err(Error::SingularSystem)));
}

#[test]
fn gbt_matches_reference_builder() {
    for seed in 0..20u64 {
        let n = 20 + (seed as usize * 7) % 31;
        let p = 1 + (seed as usize) % 3;
        let (x, y) = common::random_fixture(n, p, seed);
        let cfg = GbtConfig {
            max_depth: 1 + (seed as usize % 2),
            n_estimators: 3,
            learning_rate: 0.5,
            gamma: [0.0, 0.05][seed as usize % 2],
            lambda: [1.0, 0.0, 2.5][seed as usize % 3],
            ..Default::default()
        };
        let fast = gbt_fit(&x, &y, &cfg, seed).unwrap();
        let slow = common::reference_gbt(&x, &y, &cfg);
        common::assert_same_trees(&fast, &slow, 1e-9).unwrap_or_else(|e| panic!("fixture {seed}: {e}"));
    }
}

#[test]
fn gbt_stump_on_step_matches_exhaustive_scan() {
    let xs: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    let y: Vec<f64> = xs.iter().map(|&v| (v > 0.5) as u8 as f64).collect();
    let x = Array2::from_shape_vec((200, 1), xs).unwrap();
    let cfg = GbtConfig { learning_rate: 1.0, gamma: 0.0, lambda: 0.0, max_depth: 1, n_estimators: 1, ..Default::default() };
    let m = gbt_fit(&x, &y, &cfg, 0).unwrap();
    let r = common::reference_gbt(&x, &y, &cfg);
    common::assert_same_trees(&m, &r, 1e-12).unwrap();
    let p = gbt_predict(&m, &x).unwrap();
    assert!(p[..100].iter().all(|v| v.abs() < 1e-12));
    assert!(p[100..].iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn gbt_training_rmse_monotone_over_200_rounds() {
    let (x, y) = common::random_fixture(300, 4, 99);
    let cfg = GbtConfig { n_estimators: 200, max_depth: 3, learning_rate: 0.2, ..Default::default() };
    let m = gbt_fit(&x, &y, &cfg, 1).unwrap();
    let mut pred = vec![m.base_score; y.len()];
    let mut prev = f64::INFINITY;
    for t in &m.trees {
        let mut ss = 0.0;
        for i in 0..y.len() {
            pred[i] += m.learning_rate * t.predict_row(x.row(i).as_slice().unwrap());
            ss += (pred[i] - y[i]).powi(2);
        }
        assert!(ss <= prev * (1.0 + 1e-12));
        prev = ss;
    }
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for (a, arch) in common::ARCHS.iter().enumerate() {
        for (k, loss) in LossKind::ALL.iter().enumerate() {
            let worst = common::gradient_check(arch, *loss, 120, (a * 10 + k) as u64);
            assert!(worst <= 1e-4, "arch {a} loss {loss}: {worst}");
        }
    }
}

#[test]
fn mlp_zero_weights_give_head_bias() {
    let mut m = MlpModel::new(3, &common::ARCHS[1], 0).unwrap();
    let mut p = vec![0.0; m.n_params()];
    *p.last_mut().unwrap() = -1.25;
    m.set_params(&p).unwrap();
    let x = Array2::from_shape_fn((7, 3), |(i, j)| (i + j) as f64);
    assert!(m.predict(&x).unwrap().iter().all(|&v| v == -1.25));
}

#[test]
fn mlp_learns_sine() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let make = |rng: &mut ChaCha8Rng, n: usize| {
        let x: Array2<f64> = Array2::from_shape_simple_fn((n, 1), || rng.random_range(-1.0..1.0));
        let y: Vec<f64> = x.column(0).iter().map(|v| (3.0 * v).sin()).collect();
        (x, y)
    };
    let (x, y) = make(&mut rng, 2000);
    let (xv, yv) = make(&mut rng, 400);
    let arch = MlpArch { hidden_layers: 1, width: 16, dropout: 0.0, leaky_slope: 0.01 };
    let cfg = MlpTrainConfig { learning_rate: 1e-2, batch_size: 64, max_epochs: 500, early_stop_patience: 30, seed: 4, ..Default::default() };
    let (m, log) = mlp_train(&x, &y, &xv, &yv, &arch, &cfg).unwrap();
    assert!(log.best_val_rmse < 0.1, "val rmse {}", log.best_val_rmse);
    assert!(log.epochs.len() <= 500);
    let again = mlp_fit(&x, &y, &xv, &yv, &arch, &cfg).unwrap();
    assert_eq!(m, again, "training must be bit-reproducible");
}

#[test]
fn mlp_plateau_reduces_learning_rate() {
    let (x, y) = common::random_fixture(200, 3, 5);
    let arch = MlpArch { hidden_layers: 1, width: 8, dropout: 0.0, leaky_slope: 0.01 };
    let cfg = MlpTrainConfig { learning_rate: 0.05, batch_size: 32, max_epochs: 80, plateau_patience: 2, early_stop_patience: 1000, ..Default::default() };
    let (_, log) = mlp_train(&x, &y, &x, &y, &arch, &cfg).unwrap();
    let lrs: Vec<f64> = log.epochs.iter().map(|e| e.learning_rate).collect();
    assert!(lrs.windows(2).all(|w| w[1] == w[0] || (w[1] - w[0] * 0.1).abs() < 1e-15));
    assert!(lrs.last().unwrap() < &0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gbt_splits_respect_gamma_and_depth(seed in 0u64..1000, gamma in 0.0f64..2.0, depth in 1usize..5) {
        let (x, y) = common::random_fixture(60, 3, seed);
        let cfg = GbtConfig { gamma, max_depth: depth, n_estimators: 8, subsample: 0.8, colsample_bytree: 0.7, ..Default::default() };
        let m = gbt_fit(&x, &y, &cfg, seed).unwrap();
        for t in &m.trees {
            prop_assert!(t.depth() <= depth);
            for (_, _, g) in t.splits() {
                prop_assert!(g >= gamma);
            }
        }
    }

    #[test]
    fn predictions_finite_for_finite_inputs(seed in 0u64..1000) {
        let (x, y) = common::random_fixture(40, 3, seed);
        for cfg in [
            ModelConfig::Linear,
            ModelConfig::Gbt(GbtConfig { n_estimators: 10, ..Default::default() }),
            ModelConfig::Mlp { arch: common::ARCHS[1], train: MlpTrainConfig { max_epochs: 3, batch_size: 16, ..Default::default() } },
        ] {
            let m = fit_model(&cfg, &x, &y, &x, &y, seed).unwrap();
            let p = m.predict(&x).unwrap();
            prop_assert_eq!(p.len(), 40);
            prop_assert!(p.iter().all(|v| v.is_finite()));
        }
    }
}
