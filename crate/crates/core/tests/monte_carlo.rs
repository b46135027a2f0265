//! Statistical checks over many seeded draws.

use std::sync::Arc;

use licm_core::{
    accuracy, full_gradient, gaussian_attack, make_synthetic_quadratic, Data, GradientOracle, MlrTask, ParamVector,
    QuadraticTask, RngStream, Task,
};

const DRAWS: usize = 100_000;

/// Per-coordinate sample mean and (n - 1) variance of `draws` gradients minus `truth`.
fn residual_moments(oracle: &mut GradientOracle<f64>, w: &ParamVector, truth: &ParamVector) -> (Vec<f64>, Vec<f64>) {
    let d = w.dim();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..DRAWS {
        let g = oracle.stochastic_gradient(w).unwrap();
        for j in 0..d {
            let r = g[j] - truth[j];
            sum[j] += r;
            sum_sq[j] += r * r;
        }
    }
    let n = DRAWS as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| (sq - n * m * m) / (n - 1.0))
        .collect();
    (mean, var)
}

#[test]
fn quadratic_noise_is_centered_with_unit_variance() {
    let task = Task::Quadratic(QuadraticTask::new(ParamVector::new(vec![1.0, -2.0, 0.5, 3.0]), 1.0).unwrap());
    let w = ParamVector::new(vec![0.3, 0.3, -0.7, 4.0]);
    let truth = full_gradient(&task, &w).unwrap();
    let mut oracle = GradientOracle::new(task, RngStream::new(5, 0));
    let (mean, var) = residual_moments(&mut oracle, &w, &truth);
    for j in 0..4 {
        assert!(mean[j].abs() <= 0.02, "coordinate {j}: mean {}", mean[j]);
        assert!((var[j] - 1.0).abs() <= 0.05, "coordinate {j}: variance {}", var[j]);
        let tol = 3.0 * var[j].sqrt() / (DRAWS as f64).sqrt();
        assert!(mean[j].abs() <= tol, "coordinate {j}: mean {} beyond {tol}", mean[j]);
    }
}

#[test]
fn quadratic_without_noise_is_exact() {
    let task = make_synthetic_quadratic::<f64>(6, 3.0, 0.0, 1).unwrap();
    let w = ParamVector::new(vec![0.5; 6]);
    let mut oracle = GradientOracle::new(task.clone(), RngStream::new(0, 0));
    assert_eq!(oracle.stochastic_gradient(&w).unwrap(), full_gradient(&task, &w).unwrap());
}

#[test]
fn minibatch_gradient_is_unbiased() {
    let mut rng = RngStream::new(8, 1);
    let (n, f, c) = (12, 3, 3);
    let features: Vec<f64> = (0..n * f).map(|_| rng.uniform(0.0, 1.0)).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let data = Arc::new(Data::new(features, labels, f, c).unwrap());
    let task = Task::Mlr(MlrTask::new(data, 4, 0.0).unwrap());
    let w: ParamVector = (0..c * (f + 1)).map(|_| 0.5 * rng.standard_normal()).collect();
    let truth = full_gradient(&task, &w).unwrap();

    let mut oracle = GradientOracle::new(task, RngStream::new(8, 2));
    let (mean, var) = residual_moments(&mut oracle, &w, &truth);
    for j in 0..w.dim() {
        assert!(var[j].is_finite());
        let tol = 3.0 * var[j].sqrt() / (DRAWS as f64).sqrt();
        assert!(mean[j].abs() <= tol, "coordinate {j}: mean residual {} beyond {tol}", mean[j]);
    }
}

#[test]
fn gaussian_attack_moments() {
    let draws: ParamVector = gaussian_attack(DRAWS, 200.0, &mut RngStream::new(31, 1)).unwrap();
    let n = DRAWS as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 2.0, "mean {mean}");
    assert!((std - 200.0).abs() <= 5.0, "std {std}");
}

#[test]
fn random_classifier_is_at_chance() {
    let mut rng = RngStream::new(13, 0);
    let (n, f, c) = (20_000, 5, 4);
    let features: Vec<f64> = (0..n * f).map(|_| rng.uniform(0.0, 1.0)).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.index(c)).collect();
    let data = Arc::new(Data::new(features, labels, f, c).unwrap());
    let task = MlrTask::new(data.clone(), 1, 0.0).unwrap();
    let w: ParamVector = (0..c * (f + 1)).map(|_| rng.standard_normal()).collect();
    let acc = accuracy(&task, &w, &data).unwrap();
    assert!((acc - 1.0 / c as f64).abs() <= 0.05, "accuracy {acc}");
}
