//! Uncertainty gating and gated cross-window attention.
//!
//! The learned pieces (the uncertainty estimator and attention projections)
//! live upstream. Here the caller supplies per-step uncertainties and
//! already-projected features, and this module does the arithmetic:
//!
//! 1. min-max normalize uncertainties into reliability weights in `[0, 1]`,
//! 2. scale each auxiliary feature vector by its weight,
//! 3. attend from the main stream onto the gated auxiliary stream and add
//!    the result back as a residual.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_GATE_EPSILON: f64 = 1e-6;

/// Auxiliary features after gating, together with the weights used.
#[derive(Debug, Clone, PartialEq)]
pub struct GatedSequence {
    /// One row per time step.
    pub features: Array2<f64>,
    pub weights: Array1<f64>,
}

/// `w_t = 1 - (u_t - min u) / (max u - min u + epsilon)`.
pub fn uncertainty_gate(uncertainties: &[f64], epsilon: f64) -> Result<Array1<f64>> {
    if uncertainties.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!("gate epsilon must be > 0, got {epsilon}")));
    }
    let lo = uncertainties.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = uncertainties.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom = hi - lo + epsilon;
    Ok(uncertainties
        .iter()
        .map(|&u| (1.0 - (u - lo) / denom).clamp(0.0, 1.0))
        .collect())
}

pub fn apply_gate(auxiliary: ArrayView2<'_, f64>, weights: &Array1<f64>) -> Result<GatedSequence> {
    if auxiliary.nrows() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: auxiliary.nrows(),
            found: weights.len(),
        });
    }
    let features = &auxiliary * &weights.view().insert_axis(Axis(1));
    Ok(GatedSequence {
        features,
        weights: weights.clone(),
    })
}

/// Row-stochastic attention matrix `softmax(scale * Q K^T)` over key
/// positions.
pub fn attention_weights(queries: ArrayView2<'_, f64>, keys: ArrayView2<'_, f64>, scale: f64) -> Result<Array2<f64>> {
    if queries.ncols() != keys.ncols() {
        return Err(Error::DimensionMismatch {
            expected: queries.ncols(),
            found: keys.ncols(),
        });
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidConfig(format!("attention scale must be > 0, got {scale}")));
    }
    if keys.nrows() == 0 {
        return Err(Error::EmptySequence);
    }
    let mut logits = queries.dot(&keys.t()) * scale;
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    Ok(logits)
}

/// Single-head scaled dot-product attention from `main` onto the gated
/// auxiliary stream, added back to `main`.
pub fn cross_window_attention(main: ArrayView2<'_, f64>, gated: &GatedSequence, scale: f64) -> Result<Array2<f64>> {
    let values = gated.features.view();
    let attn = attention_weights(main, values, scale)?;
    Ok(&main + &attn.dot(&values))
}
