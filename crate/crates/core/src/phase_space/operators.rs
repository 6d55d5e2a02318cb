//! Matrix-free linear operators on fields and their power-iteration norms.
//!
//! Operators exist only as apply closures (compositions of multipliers,
//! pointwise weights, and propagators); the `L^2 -> L^2` norm is estimated
//! by power iteration on `A* A` from a seeded random start. Dense assembly
//! is possible only on tiny grids and is kept in test code as the oracle.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::propagators::half_wave_evolve;

use super::CutoffSpec;

type ApplyFn = Arc<dyn Fn(&Field) -> Result<Field> + Send + Sync>;

/// A linear map on fields given by apply/adjoint closures.
#[derive(Clone)]
pub struct LinearOperatorHandle {
    apply: ApplyFn,
    adjoint: ApplyFn,
}

impl std::fmt::Debug for LinearOperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LinearOperatorHandle")
    }
}

impl LinearOperatorHandle {
    pub fn new(
        apply: impl Fn(&Field) -> Result<Field> + Send + Sync + 'static,
        adjoint: impl Fn(&Field) -> Result<Field> + Send + Sync + 'static,
    ) -> Self {
        Self { apply: Arc::new(apply), adjoint: Arc::new(adjoint) }
    }

    /// A self-adjoint operator (real multiplier in its diagonalizing basis).
    pub fn self_adjoint(apply: impl Fn(&Field) -> Result<Field> + Send + Sync + 'static) -> Self {
        let apply: ApplyFn = Arc::new(apply);
        Self { adjoint: apply.clone(), apply }
    }

    pub fn identity() -> Self {
        Self::self_adjoint(|f| Ok(f.clone()))
    }

    /// The cutoff as a multiplication operator at fixed `t`.
    pub fn from_cutoff(spec: CutoffSpec, t: f64) -> Self {
        Self::self_adjoint(move |f| spec.apply_pow(f, t, 1.0))
    }

    /// Pointwise multiplication by a real weight `w(x)` in physical space.
    pub fn physical_weight(w: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::self_adjoint(move |f| {
            let out = f.apply_physical_weight(|x| Complex64::new(w(x), 0.0));
            Ok(match f.representation() {
                crate::grid::Representation::Physical => out,
                crate::grid::Representation::Spectral => out.to_spectral(),
            })
        })
    }

    /// The half-wave propagator `exp(sign i a omega(P))`; adjoint flips the
    /// sign.
    pub fn half_wave(a: f64, sign: i8) -> Self {
        Self {
            apply: Arc::new(move |f: &Field| half_wave_evolve(f, a, sign)),
            adjoint: Arc::new(move |f: &Field| half_wave_evolve(f, a, -sign)),
        }
    }

    /// Composition `self o other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.clone();
        let b = other.clone();
        let a2 = self.clone();
        let b2 = other.clone();
        Self {
            apply: Arc::new(move |f| a.apply(&b.apply(f)?)),
            adjoint: Arc::new(move |f| b2.adjoint_apply(&a2.adjoint_apply(f)?)),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let a = self.clone();
        let b = other.clone();
        let a2 = self.clone();
        let b2 = other.clone();
        Self {
            apply: Arc::new(move |f| a.apply(f)?.sub(&b.apply(f)?)),
            adjoint: Arc::new(move |f| a2.adjoint_apply(f)?.sub(&b2.adjoint_apply(f)?)),
        }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        a.compose(b).sub(&b.compose(a))
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        (self.apply)(f)
    }

    pub fn adjoint_apply(&self, f: &Field) -> Result<Field> {
        (self.adjoint)(f)
    }
}

/// Deterministic random start vector for the power iteration.
fn random_start(grid: &Grid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Field::zeros(grid);
    for v in f.values_mut() {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    f
}

/// Power-iteration estimate of `||A||_{L^2 -> L^2}` with the per-iterate
/// Rayleigh history (square roots of the `A* A` quotients).
///
/// The sequence is monotone nondecreasing up to rounding and always a lower
/// bound on the true norm. Stops at relative tolerance `1e-8` between
/// successive quotients or at the iteration cap.
pub fn operator_norm_history(
    op: &LinearOperatorHandle,
    grid: &Grid,
    iterations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if iterations < 20 {
        return Err(Error::InvalidParameter(format!(
            "power iteration needs at least 20 iterations, got {iterations}"
        )));
    }
    let mut v = random_start(grid, seed);
    let mut history = Vec::new();
    let mut prev = f64::NAN;
    for _ in 0..iterations {
        let norm_v = v.l2_norm();
        if !(norm_v.is_finite() && norm_v > 0.0) {
            return Err(Error::NonFinite("power iteration vector"));
        }
        let v_unit = v.scaled(Complex64::new(1.0 / norm_v, 0.0));
        let av = op.apply(&v_unit)?;
        if !av.is_finite() {
            return Err(Error::NonFinite("operator output in power iteration"));
        }
        let sigma = av.l2_norm();
        history.push(sigma);
        if sigma == 0.0 {
            return Ok(history);
        }
        if !prev.is_nan() && (sigma - prev).abs() <= 1e-8 * sigma.max(1e-300) {
            return Ok(history);
        }
        prev = sigma;
        v = op.adjoint_apply(&av)?;
    }
    Ok(history)
}

/// Power-iteration estimate of the operator norm; see
/// [`operator_norm_history`].
pub fn operator_norm(
    op: &LinearOperatorHandle,
    grid: &Grid,
    iterations: usize,
    seed: u64,
) -> Result<f64> {
    let history = operator_norm_history(op, grid, iterations, seed)?;
    Ok(history.last().copied().unwrap_or(0.0))
}
