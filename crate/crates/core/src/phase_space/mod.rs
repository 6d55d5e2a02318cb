//! Smooth phase-space cutoff operators and their time-scaled variants.
//!
//! All cutoffs are built from one C^2 profile: the quintic smoothstep mapped
//! onto the transition band `[1, 1+w]` of the scaled variable, rising from 0
//! to 1 (a smooth characteristic function of `[1, inf)`). "Low" variants are
//! its complement. The five scalings:
//!
//! * `space_low`:        multiply by `1 - F(|x| / t^alpha)` in physical space
//! * `freq_high`:        multiply by `F(t^b |k|)` in spectral space
//! * `freq_low`:         multiply by `1 - F(|k| / t^beta)` in spectral space
//! * `directional_space`: multiply by `F(s * x_j / t^e)` in physical space
//! * `directional_freq`: multiply by `F(s * t^b k_j / threshold)` in spectral
//!   space, default threshold 1/10
//!
//! Profiles take values in `[0, 1]`, so every cutoff is an `L^2` contraction
//! and self-adjoint in its diagonalizing representation.

mod operators;
mod probes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

pub use operators::{operator_norm, operator_norm_history, LinearOperatorHandle};
pub use probes::{
    commutator_norm_probe, velocity_bound_probe, CommutatorKind, CommutatorProbe,
    VelocityBound, VelocityDirection,
};

/// Default threshold of the directional frequency cutoff.
pub const DIRECTIONAL_FREQ_THRESHOLD: f64 = 0.1;

/// Quintic smoothstep `6 s^5 - 15 s^4 + 10 s^3`, clamped outside `[0, 1]`.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

/// Derivative of [`smoothstep`].
#[inline]
pub fn smoothstep_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Rising profile: 0 below the band `[1, 1+w]`, 1 above it.
#[inline]
pub fn rising_profile(lambda: f64, width: f64) -> f64 {
    smoothstep((lambda - 1.0) / width)
}

/// `d/d lambda` of [`rising_profile`].
#[inline]
pub fn rising_profile_deriv(lambda: f64, width: f64) -> f64 {
    smoothstep_deriv((lambda - 1.0) / width) / width
}

/// Which phase-space window a cutoff selects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CutoffVariant {
    /// `F_c(|x|/t^alpha <= 1)`.
    SpaceLow { alpha: f64 },
    /// `F_1(t^b |P| > 1)`.
    FreqHigh { b: f64 },
    /// `1 - F_1(|P|/t^beta)`, the low-pass complement.
    FreqLow { beta: f64 },
    /// `F_2(sign * x_axis / t^e > 1)`.
    DirectionalSpace { e: f64, axis: usize, sign: i8 },
    /// `F_1(sign * t^b P_axis > threshold)`.
    DirectionalFreq { b: f64, axis: usize, sign: i8, threshold: f64 },
}

/// Where a cutoff acts as a plain multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffDomain {
    Physical,
    Spectral,
}

/// A smooth phase-space localizer: variant plus transition-band width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    #[serde(flatten)]
    pub variant: CutoffVariant,
    /// Transition-band ratio `w`; the band is `[1, 1+w]` in the scaled
    /// variable.
    pub width: f64,
}

impl CutoffSpec {
    pub fn new(variant: CutoffVariant, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cutoff transition width must be positive, got {width}"
            )));
        }
        Ok(Self { variant, width })
    }

    pub fn space_low(alpha: f64, width: f64) -> Result<Self> {
        Self::new(CutoffVariant::SpaceLow { alpha }, width)
    }

    pub fn freq_high(b: f64, width: f64) -> Result<Self> {
        Self::new(CutoffVariant::FreqHigh { b }, width)
    }

    pub fn freq_low(beta: f64, width: f64) -> Result<Self> {
        Self::new(CutoffVariant::FreqLow { beta }, width)
    }

    pub fn domain(&self) -> CutoffDomain {
        match self.variant {
            CutoffVariant::SpaceLow { .. } | CutoffVariant::DirectionalSpace { .. } => {
                CutoffDomain::Physical
            }
            _ => CutoffDomain::Spectral,
        }
    }

    fn axis(&self) -> Option<usize> {
        match self.variant {
            CutoffVariant::DirectionalSpace { axis, .. }
            | CutoffVariant::DirectionalFreq { axis, .. } => Some(axis),
            _ => None,
        }
    }

    /// Scaled variable `lambda` and the sign of `d lambda / d t * t / lambda`
    /// (`+b` when the scale multiplies, `-alpha` when it divides).
    #[inline]
    fn scaled_variable(&self, v: &[f64], t: f64) -> (f64, f64) {
        let radius = |v: &[f64]| v.iter().map(|q| q * q).sum::<f64>().sqrt();
        match self.variant {
            CutoffVariant::SpaceLow { alpha } => (radius(v) / t.powf(alpha), -alpha),
            CutoffVariant::FreqHigh { b } => (t.powf(b) * radius(v), b),
            CutoffVariant::FreqLow { beta } => (radius(v) / t.powf(beta), -beta),
            CutoffVariant::DirectionalSpace { e, axis, sign } => {
                (f64::from(sign) * v[axis] / t.powf(e), -e)
            }
            CutoffVariant::DirectionalFreq { b, axis, sign, threshold } => {
                (f64::from(sign) * t.powf(b) * v[axis] / threshold, b)
            }
        }
    }

    fn is_complement(&self) -> bool {
        matches!(self.variant, CutoffVariant::SpaceLow { .. } | CutoffVariant::FreqLow { .. })
    }

    /// Profile value at the point `v` (coordinates or frequencies, matching
    /// [`Self::domain`]) and time `t`.
    #[inline]
    pub fn profile_at(&self, v: &[f64], t: f64) -> f64 {
        let (lambda, _) = self.scaled_variable(v, t);
        let f = rising_profile(lambda, self.width);
        if self.is_complement() {
            1.0 - f
        } else {
            f
        }
    }

    /// `d/dt` of the profile at a fixed point.
    #[inline]
    pub fn profile_time_deriv_at(&self, v: &[f64], t: f64) -> f64 {
        let (lambda, exp) = self.scaled_variable(v, t);
        let df = rising_profile_deriv(lambda, self.width) * exp * lambda / t;
        if self.is_complement() {
            -df
        } else {
            df
        }
    }

    fn check(&self, field: &Field, t: f64) -> Result<()> {
        if t < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "cutoffs are scaled for t >= 1, got t = {t}"
            )));
        }
        if let Some(axis) = self.axis() {
            if axis >= field.grid().dim() {
                return Err(Error::InvalidParameter(format!(
                    "cutoff axis {axis} out of range for a {}-dimensional grid",
                    field.grid().dim()
                )));
            }
        }
        Ok(())
    }

    /// Multiplies the field by the cutoff profile (raised to `power`) in the
    /// cutoff's own domain; the output keeps the input's representation.
    pub fn apply_pow(&self, field: &Field, t: f64, power: f64) -> Result<Field> {
        self.check(field, t)?;
        let out = match self.domain() {
            CutoffDomain::Physical => {
                let weighted = field
                    .apply_physical_weight(|x| self.profile_at(x, t).powf(power).into());
                match field.representation() {
                    crate::grid::Representation::Physical => weighted,
                    crate::grid::Representation::Spectral => weighted.to_spectral(),
                }
            }
            CutoffDomain::Spectral => {
                field.apply_spectral_multiplier(|k| self.profile_at(k, t).powf(power).into())
            }
        };
        Ok(out)
    }

    /// Multiplies the field by `d/dt` of the cutoff profile.
    pub fn apply_time_deriv(&self, field: &Field, t: f64) -> Result<Field> {
        self.check(field, t)?;
        let out = match self.domain() {
            CutoffDomain::Physical => {
                let weighted =
                    field.apply_physical_weight(|x| self.profile_time_deriv_at(x, t).into());
                match field.representation() {
                    crate::grid::Representation::Physical => weighted,
                    crate::grid::Representation::Spectral => weighted.to_spectral(),
                }
            }
            CutoffDomain::Spectral => {
                field.apply_spectral_multiplier(|k| self.profile_time_deriv_at(k, t).into())
            }
        };
        Ok(out)
    }
}

/// Applies a phase-space cutoff to a field at time `t >= 1`.
pub fn apply_cutoff(field: &Field, spec: &CutoffSpec, t: f64) -> Result<Field> {
    spec.apply_pow(field, t, 1.0)
}
