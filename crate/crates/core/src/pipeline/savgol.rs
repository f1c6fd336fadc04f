//! Savitzky-Golay smoothing.
//!
//! The filter is the projection ("hat") matrix `H = Q Q^T` of the window's
//! Vandermonde design, computed once per `(window, order)` pair. The centre
//! row gives the interior convolution weights; the leading and trailing rows
//! evaluate the polynomial fitted to the first and last full window at the
//! edge samples, so polynomials of degree `<= order` are reproduced
//! everywhere.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::model::{CurvePhase, StressStrainCurve};

fn hat_matrix(window: usize, order: usize) -> DMatrix<f64> {
    let half = window / 2;
    let scale = half.max(1) as f64;
    let design = DMatrix::from_fn(window, order + 1, |r, c| {
        ((r as f64 - half as f64) / scale).powi(c as i32)
    });
    let q = design.qr().q();
    &q * q.transpose()
}

pub fn savgol_smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>, PipelineError> {
    if window % 2 == 0 {
        return Err(PipelineError::Parameter(format!("window must be odd, got {window}")));
    }
    if window <= order {
        return Err(PipelineError::Parameter(format!(
            "window ({window}) must exceed the polynomial order ({order})"
        )));
    }
    let n = series.len();
    if n < window {
        return Err(PipelineError::Parameter(format!(
            "series of {n} samples is shorter than the window ({window})"
        )));
    }
    let h = hat_matrix(window, order);
    let half = window / 2;
    let apply = |row: usize, start: usize| -> f64 {
        (0..window).map(|j| h[(row, j)] * series[start + j]).sum()
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < half {
            apply(i, 0)
        } else if i + half >= n {
            apply(window - (n - i), n - window)
        } else {
            apply(half, i - half)
        };
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothingParams {
    pub window: usize,
    pub order: usize,
    /// Curves whose compression phase has fewer samples are left unsmoothed.
    pub min_compression_samples: usize,
    pub enabled: bool,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            window: 11,
            order: 3,
            min_compression_samples: 22,
            enabled: true,
        }
    }
}

/// Smooths stress within each phase separately. Strain is left untouched.
pub fn smooth_curve(curve: &StressStrainCurve, params: &SmoothingParams) -> Result<StressStrainCurve, PipelineError> {
    let mut out = curve.clone();
    if !params.enabled {
        return Ok(out);
    }
    let n_comp = curve.compression_indices().count();
    if n_comp < params.min_compression_samples {
        out.diagnostics.warnings.push(format!(
            "compression phase has {n_comp} samples (< {}); smoothing skipped",
            params.min_compression_samples
        ));
        return Ok(out);
    }
    for phase in [CurvePhase::Compression, CurvePhase::Decompression] {
        let idx: Vec<usize> = (0..curve.len()).filter(|&i| curve.phase[i] == phase).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < params.window {
            out.diagnostics.warnings.push(format!(
                "{} phase has {} samples; left unsmoothed",
                if phase == CurvePhase::Compression { "compression" } else { "decompression" },
                idx.len()
            ));
            continue;
        }
        let series: Vec<f64> = idx.iter().map(|&i| curve.stress_kpa[i]).collect();
        let smoothed = savgol_smooth(&series, params.window, params.order)?;
        for (&i, v) in idx.iter().zip(smoothed) {
            out.stress_kpa[i] = v;
        }
    }
    out.diagnostics.smoothed = true;
    Ok(out)
}
