//! Log-log slope fitting: every measured decay or growth law in the crate is
//! reduced to a least-squares line through `(ln t, ln value)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of a log-log fit over samples `(t, value)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Pass condition a fitted slope is judged against.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlopeTarget {
    Within { target: f64, tol: f64 },
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitVerdict {
    Pass,
    Fail,
    /// The fit explained too little variance to call either way.
    Inconclusive,
}

/// Minimum explained variance for a definitive pass/fail call.
pub const DEFINITIVE_R_SQUARED: f64 = 0.9;

impl ExponentFit {
    /// Judges the fitted slope against `target`. A fit with `R^2` below
    /// `min_r_squared` is never a silent pass: it comes back inconclusive.
    pub fn judge(&self, target: &SlopeTarget, min_r_squared: f64) -> FitVerdict {
        if !self.r_squared.is_finite() || self.r_squared < min_r_squared {
            return FitVerdict::Inconclusive;
        }
        let ok = match *target {
            SlopeTarget::Within { target, tol } => (self.slope - target).abs() <= tol,
            SlopeTarget::AtMost { limit } => self.slope <= limit,
            SlopeTarget::AtLeast { limit } => self.slope >= limit,
        };
        if ok {
            FitVerdict::Pass
        } else {
            FitVerdict::Fail
        }
    }

    /// Model value `exp(intercept) * t^slope` at `t`.
    pub fn model(&self, t: f64) -> f64 {
        (self.intercept + self.slope * t.ln()).exp()
    }
}

/// Least squares on `(ln t, ln value)`.
///
/// Needs at least 4 samples with `t >= 1` and positive values. A
/// zero-variance response (exactly constant values) fits slope 0 with
/// `R^2 = 1` by convention.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "exponent fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    for &(t, v) in samples {
        if !(t >= 1.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample time {t} is not in [1, inf)")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponent fit needs positive finite values, got {v} at t = {t}"
            )));
        }
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|&(t, _)| t.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all sample times coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ExponentFit { samples: samples.to_vec(), slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_is_recovered() {
        let samples: Vec<(f64, f64)> = (0..6).map(|k| {
            let t = 2f64.powi(k);
            (t, t.powi(-2))
        }).collect();
        let fit = fit_exponent(&samples).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response_uses_degenerate_convention() {
        let samples = vec![(1.0, 3.0), (2.0, 3.0), (4.0, 3.0), (8.0, 3.0)];
        let fit = fit_exponent(&samples).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn perturbed_power_law_stays_within_tolerance() {
        let samples: Vec<(f64, f64)> = (0..8).map(|k| {
            let t = 2f64.powi(k);
            (t, t.powi(-1) * (1.0 + 0.1 * t.ln().sin()))
        }).collect();
        let fit = fit_exponent(&samples).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.1, "slope {}", fit.slope);
        assert!(fit.r_squared >= 0.9);
        assert_eq!(
            fit.judge(&SlopeTarget::Within { target: -1.0, tol: 0.1 }, DEFINITIVE_R_SQUARED),
            FitVerdict::Pass
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 1.0), (4.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(1.0, 1.0), (2.0, 0.0), (4.0, 1.0), (8.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(0.5, 1.0), (2.0, 1.0), (4.0, 1.0), (8.0, 1.0)]).is_err());
        assert!(fit_exponent(&[(1.0, -1.0), (2.0, 1.0), (4.0, 1.0), (8.0, 1.0)]).is_err());
    }

    #[test]
    fn low_r_squared_is_inconclusive_not_pass() {
        // alternating values carry no trend
        let samples = vec![(1.0, 1.0), (2.0, 10.0), (4.0, 1.0), (8.0, 10.0), (16.0, 1.0)];
        let fit = fit_exponent(&samples).unwrap();
        assert_eq!(
            fit.judge(&SlopeTarget::AtMost { limit: 10.0 }, DEFINITIVE_R_SQUARED),
            FitVerdict::Inconclusive
        );
    }
}
