//! Weighted lattice norms: `L^2`, `L^inf`, `L^1`, the Agmon-Sobolev family
//! `H^sigma_delta` (derivative weight applied spectrally, spatial weight
//! `<x>^delta` applied pointwise with the unwrapped box coordinate), and the
//! state norm `||u||_{H^1} + ||u'||_{L^2}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Field, FieldState};

/// Which norm [`Field::norm`] / [`FieldState::norm`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    L2,
    LInf,
    L1,
    /// `|| <x>^delta <grad>^sigma f ||_{L^2}`.
    HSigmaDelta { sigma: f64, delta: f64 },
    /// `||u||_{H^1} + ||udot||_{L^2}`; states only.
    SNorm,
}

/// `<x> = sqrt(1 + |x|^2)` over the unwrapped coordinate vector.
#[inline]
pub fn japanese_bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

fn l2(field: &Field) -> f64 {
    let sq: f64 = field.values().iter().map(|z| z.norm_sqr()).sum();
    (sq * field.grid().cell_volume()).sqrt()
}

fn check_finite(field: &Field) -> Result<()> {
    if !field.is_finite() {
        return Err(Error::NonFinite("field handed to a norm"));
    }
    Ok(())
}

impl Field {
    /// Discrete quadrature of the named norm. `L^inf` and `L^1` are taken in
    /// physical representation; `L^2` is representation-free.
    pub fn norm(&self, spec: &NormSpec) -> Result<f64> {
        check_finite(self)?;
        match *spec {
            NormSpec::L2 => Ok(l2(self)),
            NormSpec::LInf => {
                let phys = self.to_physical();
                Ok(phys.values().iter().map(|z| z.norm()).fold(0.0, f64::max))
            }
            NormSpec::L1 => {
                let phys = self.to_physical();
                let sum: f64 = phys.values().iter().map(|z| z.norm()).sum();
                Ok(sum * self.grid().cell_volume())
            }
            NormSpec::HSigmaDelta { sigma, delta } => {
                let mut g = if sigma == 0.0 {
                    self.to_physical()
                } else {
                    self.apply_spectral_multiplier(|k| {
                        let ksq: f64 = k.iter().map(|v| v * v).sum();
                        Complex64::new((1.0 + ksq).powf(0.5 * sigma), 0.0)
                    })
                    .to_physical()
                };
                if delta != 0.0 {
                    g = g.apply_physical_weight(|x| {
                        Complex64::new(japanese_bracket(x).powf(delta), 0.0)
                    });
                }
                Ok(l2(&g))
            }
            NormSpec::SNorm => Err(Error::InvalidParameter(
                "the S norm needs a state, not a single field".into(),
            )),
        }
    }

    /// Shorthand for the plain `L^2` norm.
    pub fn l2_norm(&self) -> f64 {
        l2(self)
    }
}

impl FieldState {
    /// State norms: `SNorm` is `||u||_{H^1} + ||udot||_{L^2}`; every other
    /// spec is applied per component and combined as `sqrt(a^2 + b^2)`, the
    /// `L^2 (+) L^2` convention.
    pub fn norm(&self, spec: &NormSpec) -> Result<f64> {
        match *spec {
            NormSpec::SNorm => {
                let hu = self.u().norm(&NormSpec::HSigmaDelta { sigma: 1.0, delta: 0.0 })?;
                let lv = self.udot().norm(&NormSpec::L2)?;
                Ok(hu + lv)
            }
            ref other => {
                let a = self.u().norm(other)?;
                let b = self.udot().norm(other)?;
                Ok((a * a + b * b).sqrt())
            }
        }
    }

    /// `||u||_{H^1} + ||udot||_{L^2}`, membership norm of the state space.
    pub fn s_norm(&self) -> Result<f64> {
        self.norm(&NormSpec::SNorm)
    }
}
