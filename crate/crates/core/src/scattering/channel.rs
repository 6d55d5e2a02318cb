//! Channel wave operators at finite horizon with dyadic Cauchy
//! certification.
//!
//! The strong limit `t -> infinity` of the cutoff scattering representative
//! is replaced by a falsifiable certificate over dyadic sample times: the
//! increments between consecutive candidates must fall below an absolute
//! tolerance and contract geometrically over the final window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FieldState;
use crate::phase_space::CutoffSpec;

use super::{duhamel::omega_star, pair_norm, StateTrajectory};

/// Which cutoff pair localizes the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ChannelVariant {
    /// `F_c(|x|/t^alpha <= 1)` composed with the low-pass at `t^beta`;
    /// window `(n(1-alpha-beta) - 3 beta)/2 > 1`, square-integrable
    /// potentials, three or more dimensions.
    LowFrequency { alpha: f64, beta: f64 },
    /// `F_c(|x|/t^alpha <= 1)` composed with the high-pass at `t^(-b)`;
    /// window `b in [0, 1/2)`, `alpha in (b, min(1-b, 1-(2-delta)/n))` for
    /// weighted potentials with declared `delta`.
    HighFrequency {
        alpha: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        declared_delta: Option<f64>,
    },
}

impl ChannelVariant {
    /// `(space cutoff, frequency cutoff)` at transition width `width`.
    pub fn cutoffs(&self, width: f64) -> Result<(CutoffSpec, CutoffSpec)> {
        match *self {
            ChannelVariant::LowFrequency { alpha, beta } => {
                Ok((CutoffSpec::space_low(alpha, width)?, CutoffSpec::freq_low(beta, width)?))
            }
            ChannelVariant::HighFrequency { alpha, b, .. } => {
                Ok((CutoffSpec::space_low(alpha, width)?, CutoffSpec::freq_high(b, width)?))
            }
        }
    }

    /// True when the exponents sit inside the proven window for `dim`.
    pub fn in_window(&self, dim: usize) -> bool {
        let n = dim as f64;
        match *self {
            ChannelVariant::LowFrequency { alpha, beta } => {
                alpha > 0.0 && beta > 0.0 && (n * (1.0 - alpha - beta) - 3.0 * beta) / 2.0 > 1.0
            }
            ChannelVariant::HighFrequency { alpha, b, declared_delta } => {
                let cap = match declared_delta {
                    Some(delta) => (1.0 - b).min(1.0 - (2.0 - delta) / n),
                    None => 1.0 - b,
                };
                (0.0..0.5).contains(&b) && alpha > b && alpha < cap
            }
        }
    }
}

/// Certificate thresholds of the Cauchy verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSettings {
    pub variant: ChannelVariant,
    /// Cutoff transition-band width.
    pub width: f64,
    /// Absolute increment tolerance (callers usually derive it from the
    /// initial S norm).
    pub tol_abs: f64,
    /// Required contraction of consecutive increments over the final window.
    pub contraction_rho: f64,
    /// Increments at or below this floor count as converged noise; their
    /// ratios are not meaningful and are reported as zero.
    pub ratio_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Inconclusive,
    Diverging,
}

/// Dyadic Cauchy certificate for one channel operator.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub settings: ChannelSettings,
    pub times: Vec<f64>,
    /// L2-pair norms of consecutive candidate differences.
    pub increments: Vec<f64>,
    /// Contraction ratios `d_(k+1) / d_k` (0 below the noise floor).
    pub ratios: Vec<f64>,
    pub candidate_norms: Vec<f64>,
    pub verdict: Verdict,
    /// Set when the exponents leave the proven window.
    pub exploratory: bool,
    /// The last candidate, kept only when the verdict is converged.
    pub limit: Option<FieldState>,
}

impl ConvergenceReport {
    pub fn limit(&self) -> Result<&FieldState> {
        self.limit.as_ref().ok_or_else(|| Error::NotConverged(format!("{:?}", self.verdict)))
    }
}

/// The phase-space-localized candidate `F_space(t) F_freq(t) Omega*(t)`,
/// cutoffs applied componentwise.
pub fn channel_candidate(
    traj: &StateTrajectory,
    variant: &ChannelVariant,
    width: f64,
    t: f64,
) -> Result<FieldState> {
    let (space, freq) = variant.cutoffs(width)?;
    let omega = omega_star(traj, t)?;
    let u = space.apply_pow(&freq.apply_pow(omega.u(), t, 1.0)?, t, 1.0)?;
    let v = space.apply_pow(&freq.apply_pow(omega.udot(), t, 1.0)?, t, 1.0)?;
    FieldState::new(u, v)
}

fn last_window<T: Copy>(xs: &[T], n: usize) -> &[T] {
    &xs[xs.len().saturating_sub(n)..]
}

/// Runs the channel operator over dyadic `times` (at least 4, stored as
/// checkpoints of the trajectory) and certifies the verdict.
pub fn channel_wave_operator(
    traj: &StateTrajectory,
    settings: &ChannelSettings,
    times: &[f64],
) -> Result<ConvergenceReport> {
    if times.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "channel certification needs at least 4 dyadic times, got {}",
            times.len()
        )));
    }
    let exploratory = !settings.variant.in_window(traj.grid().dim());
    let mut candidates = Vec::with_capacity(times.len());
    for &t in times {
        candidates.push(channel_candidate(traj, &settings.variant, settings.width, t)?);
    }
    let candidate_norms =
        candidates.iter().map(pair_norm).collect::<Result<Vec<f64>>>()?;
    let mut increments = Vec::with_capacity(times.len() - 1);
    for pair in candidates.windows(2) {
        increments.push(pair_norm(&pair[1].sub(&pair[0])?)?);
    }
    let mut ratios = Vec::with_capacity(increments.len().saturating_sub(1));
    for pair in increments.windows(2) {
        let (d0, d1) = (pair[0], pair[1]);
        let r = if d1 <= settings.ratio_floor {
            0.0
        } else if d0 <= settings.ratio_floor {
            f64::INFINITY
        } else {
            d1 / d0
        };
        ratios.push(r);
    }

    let tail_increments = last_window(&increments, 3);
    let tail_ratios = last_window(&ratios, 3);
    let small = tail_increments.iter().all(|&d| d < settings.tol_abs);
    let contracting = tail_ratios.iter().all(|&r| r <= settings.contraction_rho);
    let blowing_up = !tail_ratios.is_empty() && tail_ratios.iter().all(|&r| r > 1.1);
    let verdict = if small && contracting {
        Verdict::Converged
    } else if blowing_up {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };
    let limit =
        (verdict == Verdict::Converged).then(|| candidates.last().expect("nonempty").clone());
    Ok(ConvergenceReport {
        settings: settings.clone(),
        times: times.to_vec(),
        increments,
        ratios,
        candidate_norms,
        verdict,
        exploratory,
        limit,
    })
}
