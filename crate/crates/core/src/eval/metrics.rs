use serde::{Deserialize, Serialize};

use super::EvalError;

fn check(y: &[f64], yhat: &[f64]) -> Result<(), EvalError> {
    if y.len() != yhat.len() {
        return Err(EvalError::LengthMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    check(y, yhat)?;
    let total: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    Ok(total / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64, EvalError> {
    check(y, yhat)?;
    let total: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((total / y.len() as f64).sqrt())
}

/// Coefficient of determination against the mean of `y` itself. `None` when
/// every target is equal.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<Option<f64>, EvalError> {
    check(y, yhat)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Ok(None);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(Some(1.0 - ss_res / ss_tot))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub r2: Option<f64>,
}

pub fn compute_metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics, EvalError> {
    let m = Metrics {
        mae: mae(y, yhat)?,
        rmse: rmse(y, yhat)?,
        r2: r2(y, yhat)?,
    };
    // Power-mean inequality; the slack only absorbs rounding when all
    // absolute errors are equal.
    assert!(
        m.rmse >= m.mae * (1.0 - 1e-12),
        "RMSE {} below MAE {}",
        m.rmse,
        m.mae
    );
    Ok(m)
}

pub fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Percentage reduction of `model_mae` relative to `naive_mae`, one decimal.
pub fn improvement_vs_naive(model_mae: f64, naive_mae: f64) -> Result<f64, EvalError> {
    if !(naive_mae > 0.0) {
        return Err(EvalError::ZeroNaiveMae);
    }
    Ok(round1(100.0 * (naive_mae - model_mae) / naive_mae))
}
