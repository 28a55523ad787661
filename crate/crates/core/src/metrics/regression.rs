use nalgebra::{Cholesky, DMatrix, DVector};

use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Coefficient of determination, `1 - SS_res / SS_tot` around the truth mean.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!("{} predictions vs {} targets", pred.len(), truth.len())));
    }
    if truth.len() < 2 {
        return Err(Error::param("R² needs at least two samples"));
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in R² input"));
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateVariance("truth values are constant".into()));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Solves `(XᵀX + λI) w = Xᵀy` by Cholesky. No intercept is fitted.
pub fn ridge_fit(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<DVector<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param(format!("ridge lambda must be positive, got {lambda}")));
    }
    if x.ncols() == 0 {
        return Err(Error::shape("design matrix has no columns"));
    }
    if x.nrows() != y.len() {
        return Err(Error::shape(format!("{} rows vs {} targets", x.nrows(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in ridge input"));
    }
    let mut gram = x.transpose() * x;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = x.transpose() * DVector::from_column_slice(y);
    let chol = Cholesky::new(gram).ok_or_else(|| Error::data("normal equations are not positive definite"))?;
    Ok(chol.solve(&rhs))
}

/// Fits on the training split and scores R² on the test split.
pub fn ridge_probe(
    train_x: &DMatrix<f64>,
    train_y: &[f64],
    test_x: &DMatrix<f64>,
    test_y: &[f64],
    lambda: f64,
) -> Result<(DVector<f64>, f64)> {
    let w = ridge_fit(train_x, train_y, lambda)?;
    if test_x.ncols() != w.len() {
        return Err(Error::shape(format!("test features {} vs train features {}", test_x.ncols(), w.len())));
    }
    if test_x.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("non-finite value in test features"));
    }
    let pred = test_x * &w;
    let r2 = r_squared(pred.as_slice(), test_y)?;
    Ok((w, r2))
}

/// Synthetic label-efficiency setup: `y = aux_coef * x_aux + N(0, noise_sigma²)`
/// with `n_optical` pure-noise optical features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub n_optical: usize,
    pub aux_coef: f64,
    pub noise_sigma: f64,
    pub lambda: f64,
}

impl Default for EfficiencyConfig {
    fn default() -> Self {
        Self {
            n_train: 32,
            n_test: 1000,
            n_optical: 4,
            aux_coef: 3.0,
            noise_sigma: 0.5,
            lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyTrial {
    pub seed: u64,
    pub r2_optical: f64,
    pub r2_stacked: f64,
}

impl EfficiencyTrial {
    pub fn stacked_wins(&self) -> bool {
        self.r2_stacked > self.r2_optical
    }
}

/// One seed: probes on `[optical]` and `[optical ⧺ aux]` share the same draws.
pub fn efficiency_trial(cfg: &EfficiencyConfig, seed: u64) -> Result<EfficiencyTrial> {
    let mut rng = SplitMix64::new(seed);
    let mut draw = |n: usize| {
        let mut x = DMatrix::zeros(n, cfg.n_optical + 1);
        let mut y = Vec::with_capacity(n);
        for r in 0..n {
            for c in 0..=cfg.n_optical {
                x[(r, c)] = rng.next_gaussian();
            }
            y.push(cfg.aux_coef * x[(r, cfg.n_optical)] + cfg.noise_sigma * rng.next_gaussian());
        }
        (x, y)
    };
    let (train_x, train_y) = draw(cfg.n_train);
    let (test_x, test_y) = draw(cfg.n_test);
    let optical = |m: &DMatrix<f64>| m.columns(0, cfg.n_optical).into_owned();
    let (_, r2_optical) = ridge_probe(&optical(&train_x), &train_y, &optical(&test_x), &test_y, cfg.lambda)?;
    let (_, r2_stacked) = ridge_probe(&train_x, &train_y, &test_x, &test_y, cfg.lambda)?;
    Ok(EfficiencyTrial { seed, r2_optical, r2_stacked })
}

pub fn efficiency_experiment(cfg: &EfficiencyConfig, seeds: impl IntoIterator<Item = u64>) -> Result<Vec<EfficiencyTrial>> {
    seeds.into_iter().map(|s| efficiency_trial(cfg, s)).collect()
}
