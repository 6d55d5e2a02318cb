//! Commutator-scaling and velocity-bound probes.
//!
//! Both reduce an operator statement to a sweep of power-iteration norms: the
//! commutator probe fits the decay of `||[space cutoff, frequency cutoff]||`
//! in time, the velocity probe compares directional-window norms against
//! the envelope `(t^e + sqrt(a))^(-delta)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::fit::{fit_exponent, ExponentFit};

use super::{operator_norm, CutoffSpec, CutoffVariant, LinearOperatorHandle};

/// Which commutator pairing the probe measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutatorKind {
    /// `[F_c(|x|/t^alpha <= 1), F_1(t^b |P| > 1)]`, expected slope `-(alpha - b)`.
    SpaceHighFreq,
    /// `[F_c(|x|/t^alpha <= 1), 1 - F_1(|P|/t^beta)]`, expected slope `-(alpha + beta)`.
    SpaceLowFreq,
}

#[derive(Debug, Clone)]
pub struct CommutatorProbe {
    pub kind: CommutatorKind,
    pub alpha: f64,
    /// `b` for the high-frequency pairing, `beta` for the low-frequency one.
    pub other_exponent: f64,
    pub norms: Vec<(f64, f64)>,
    pub fit: ExponentFit,
    pub expected_slope: f64,
}

/// Sweeps `t` over `times`, estimating the commutator norm at each, and fits
/// the log-log slope. Exponent ordering is enforced for the high-frequency
/// pairing (`b < alpha <= 1`).
pub fn commutator_norm_probe(
    grid: &Grid,
    kind: CommutatorKind,
    alpha: f64,
    other_exponent: f64,
    times: &[f64],
    width: f64,
    iterations: usize,
    seed: u64,
) -> Result<CommutatorProbe> {
    if times.len() < 4 {
        return Err(Error::InvalidParameter("commutator probe needs at least 4 times".into()));
    }
    let expected_slope = match kind {
        CommutatorKind::SpaceHighFreq => {
            if !(other_exponent < alpha && alpha <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "need b < alpha <= 1, got b = {other_exponent}, alpha = {alpha}"
                )));
            }
            -(alpha - other_exponent)
        }
        CommutatorKind::SpaceLowFreq => {
            if !(other_exponent > 0.0 && alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "need beta > 0 and 0 < alpha <= 1, got beta = {other_exponent}, alpha = {alpha}"
                )));
            }
            -(alpha + other_exponent)
        }
    };
    let mut norms = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let space = CutoffSpec::space_low(alpha, width)?;
        let freq = match kind {
            CommutatorKind::SpaceHighFreq => CutoffSpec::freq_high(other_exponent, width)?,
            CommutatorKind::SpaceLowFreq => CutoffSpec::freq_low(other_exponent, width)?,
        };
        let a = LinearOperatorHandle::from_cutoff(space, t);
        let b = LinearOperatorHandle::from_cutoff(freq, t);
        let comm = LinearOperatorHandle::commutator(&a, &b);
        let norm = operator_norm(&comm, grid, iterations, seed.wrapping_add(i as u64))?;
        norms.push((t, norm));
    }
    let fit = fit_exponent(&norms)?;
    Ok(CommutatorProbe { kind, alpha, other_exponent, norms, fit, expected_slope })
}

/// Direction selector of the velocity-bound probe: outgoing windows pair a
/// positive-frequency window with forward propagation, incoming ones pair
/// the complementary window with backward propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityDirection {
    OutgoingPlus,
    IncomingPlus,
    OutgoingMinus,
    IncomingMinus,
}

impl VelocityDirection {
    fn sign(self) -> i8 {
        match self {
            Self::OutgoingPlus | Self::IncomingPlus => 1,
            Self::OutgoingMinus | Self::IncomingMinus => -1,
        }
    }

    fn incoming(self) -> bool {
        matches!(self, Self::IncomingPlus | Self::IncomingMinus)
    }
}

#[derive(Debug, Clone)]
pub struct VelocityBound {
    pub direction: VelocityDirection,
    pub measured_norm: f64,
    /// `(t^e + sqrt(a))^(-delta)`; zero weight degenerates to exponent 0.
    pub envelope: f64,
    pub ratio: f64,
    /// Set when the requested parameters leave the proven window.
    pub exploratory: bool,
}

/// Estimates the norm of the directional-window composition
/// `F_2(sign x_j / t^e > 1) * F_1-window(sign t^b P_j vs 1/10) * exp(+/- i a omega) * <x_j>^{-delta}`
/// and compares it against the envelope `(t^e + sqrt(a))^{-delta}`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_bound_probe(
    grid: &Grid,
    e: f64,
    b: f64,
    delta: f64,
    a_or_c: f64,
    t: f64,
    axis: usize,
    direction: VelocityDirection,
    width: f64,
    iterations: usize,
    seed: u64,
) -> Result<VelocityBound> {
    if a_or_c <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propagation time must be positive, got {a_or_c}"
        )));
    }
    let mut exploratory = false;
    if !(e > 1.0 - b && b > 0.0 && b < 1.0) {
        exploratory = true;
    }
    if direction.incoming() && a_or_c > t {
        exploratory = true;
    }
    let sign = direction.sign();
    let space = CutoffSpec::new(CutoffVariant::DirectionalSpace { e, axis, sign }, width)?;
    let freq_high = CutoffSpec::new(
        CutoffVariant::DirectionalFreq {
            b,
            axis,
            sign,
            threshold: super::DIRECTIONAL_FREQ_THRESHOLD,
        },
        width,
    )?;
    let space_op = LinearOperatorHandle::from_cutoff(space, t);
    let freq_op = if direction.incoming() {
        LinearOperatorHandle::identity().sub(&LinearOperatorHandle::from_cutoff(freq_high, t))
    } else {
        LinearOperatorHandle::from_cutoff(freq_high, t)
    };
    let wave = LinearOperatorHandle::half_wave(a_or_c, if direction.incoming() { -1 } else { 1 });
    let weight = LinearOperatorHandle::physical_weight(move |x| {
        (1.0 + x[axis] * x[axis]).powf(-0.5 * delta)
    });
    let op = space_op.compose(&freq_op).compose(&wave).compose(&weight);
    let measured_norm = operator_norm(&op, grid, iterations, seed)?;
    let envelope = (t.powf(e) + a_or_c.sqrt()).powf(-delta);
    Ok(VelocityBound {
        direction,
        measured_norm,
        envelope,
        ratio: measured_norm / envelope,
        exploratory,
    })
}
