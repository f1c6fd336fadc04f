//! Small least-squares and summary-statistics helpers shared by the
//! estimators.

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Fits a line with intercept. Returns `None` for fewer than two points or
/// when `x` has no spread.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    assert_eq!(x.len(), y.len(), "fit_line: length mismatch");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    if sxx <= f64::EPSILON * f64::EPSILON * (mx * mx).max(1.0) * n as f64 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fitted: Vec<f64> = x.iter().map(|&xi| slope * xi + intercept).collect();
    Some(LineFit {
        slope,
        intercept,
        r2: r_squared(y, &fitted),
        n,
    })
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
///
/// A constant target that is reproduced exactly scores 1; a constant target
/// that is missed scores 0.
pub fn r_squared(y: &[f64], fitted: &[f64]) -> f64 {
    let my = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted).map(|(a, b)| (a - b).powi(2)).sum();
    if ss_tot == 0.0 {
        let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        return if ss_res <= (1e-12 * scale).powi(2) * y.len() as f64 {
            1.0
        } else {
            0.0
        };
    }
    1.0 - ss_res / ss_tot
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Sample variance (divides by `n - 1`).
pub fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// `true` when the spread of `v` is at least `threshold` times its mean
/// magnitude. Zero-mean data with any spread qualifies; constant data never
/// does.
pub fn varies_enough(v: &[f64], threshold: f64) -> bool {
    if v.is_empty() {
        return false;
    }
    let std = population_std(v);
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if std <= 1e-12 * scale || std == 0.0 {
        return false;
    }
    std >= threshold * mean(v).abs()
}
