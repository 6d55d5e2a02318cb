//! Catalog of interaction terms: localized static potentials, charge-transfer
//! sums of moving bumps, time-modulated potentials, and the local
//! nonlinearities `a(x) u^2 + b(x) u^3` and `lambda |u|^(p-1) u`.
//!
//! Nonlinear terms are treated as a linear time-dependent perturbation: the
//! effective potential `V(x,t) + N0(u(x,t))` is frozen from the current state
//! wherever the dynamics or a Duhamel integrand needs `V(s) u(s)`. Moving
//! bumps are evaluated analytically at shifted arguments, never by lattice
//! resampling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norms::japanese_bracket, Field, FieldState, Grid, NormSpec};
use crate::harness::fit::{fit_exponent, ExponentFit};
use crate::phase_space::CutoffSpec;
use crate::propagators::omega;
use crate::scattering::StateTrajectory;

/// Localized spatial bump shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SpatialProfile {
    /// `<x>^(-sigma)`.
    InversePower { sigma: f64 },
    /// `exp(-|x|^2 / rho^2)`.
    Gaussian { rho: f64 },
}

impl SpatialProfile {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            SpatialProfile::InversePower { sigma } => japanese_bracket(x).powf(-sigma),
            SpatialProfile::Gaussian { rho } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-r2 / (rho * rho)).exp()
            }
        }
    }

    /// True when `<x>^delta * profile` is bounded (membership in
    /// `L^inf_delta`).
    fn bounded_with_weight(&self, delta: f64) -> bool {
        match *self {
            SpatialProfile::InversePower { sigma } => sigma >= delta,
            SpatialProfile::Gaussian { .. } => true,
        }
    }

    /// True when `<x>^delta * profile` is square integrable on `R^dim`.
    fn square_integrable_with_weight(&self, delta: f64, dim: usize) -> bool {
        match *self {
            SpatialProfile::InversePower { sigma } => 2.0 * (sigma - delta) > dim as f64,
            SpatialProfile::Gaussian { .. } => true,
        }
    }
}

/// Trajectory scalar `g(t)` of a moving bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// `g(t) = t`.
    Linear,
    /// `g(t) = t + eps * sin(omega t)`.
    SinModulated { eps: f64, omega: f64 },
}

impl Trajectory {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Trajectory::Linear => t,
            Trajectory::SinModulated { eps, omega } => t + eps * (omega * t).sin(),
        }
    }
}

/// Time modulation `m(t)` of a static profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulation {
    One,
    Cos { omega: f64 },
    OnePlusEpsCos { eps: f64, omega: f64 },
}

impl Modulation {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Modulation::One => 1.0,
            Modulation::Cos { omega } => (omega * t).cos(),
            Modulation::OnePlusEpsCos { eps, omega } => 1.0 + eps * (omega * t).cos(),
        }
    }
}

/// Amplitude-carrying profile used by the nonlinear terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledProfile {
    pub amplitude: f64,
    #[serde(flatten)]
    pub profile: SpatialProfile,
}

impl ScaledProfile {
    #[inline]
    fn eval(&self, x: &[f64]) -> f64 {
        self.amplitude * self.profile.eval(x)
    }
}

/// One term of the interaction `N(u, x, t) = V(x,t) u + N0(u) u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum InteractionTerm {
    /// `V(x) = amplitude * profile(x)`.
    StaticLocalized {
        amplitude: f64,
        #[serde(flatten)]
        profile: SpatialProfile,
    },
    /// `V_j(x - g_j(t) v_j)`, a charge-transfer mover with `|v| < 1`.
    MovingBump {
        amplitude: f64,
        #[serde(flatten)]
        profile: SpatialProfile,
        velocity: Vec<f64>,
        trajectory: Trajectory,
    },
    /// `m(t) * V(x)`.
    TimeModulated {
        amplitude: f64,
        #[serde(flatten)]
        profile: SpatialProfile,
        modulation: Modulation,
    },
    /// `a(x) u^2 + b(x) u^3` with `a, b` bounded against `<x>^delta`.
    NonlinearLocal {
        quadratic: Option<ScaledProfile>,
        cubic: Option<ScaledProfile>,
        delta: f64,
    },
    /// `lambda |u|^(p-1) u`.
    NonlinearPower { lambda: f64, p: f64 },
}

/// Declarative description of the full interaction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub terms: Vec<InteractionTerm>,
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn is_free(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_nonlinear_terms(&self) -> bool {
        self.terms.iter().any(|t| {
            matches!(
                t,
                InteractionTerm::NonlinearLocal { .. } | InteractionTerm::NonlinearPower { .. }
            )
        })
    }

    /// Checks the catalog invariants against a grid dimension: subluminal
    /// movers, weighted-boundedness of nonlinear profiles, and the power
    /// window `1 <= p <= n/(n-2)` in three or more dimensions.
    pub fn validate(&self, dim: usize) -> Result<()> {
        for term in &self.terms {
            match term {
                InteractionTerm::MovingBump { velocity, .. } => {
                    if velocity.len() != dim {
                        return Err(Error::InvalidParameter(format!(
                            "moving bump velocity has {} components on a {dim}-dimensional grid",
                            velocity.len()
                        )));
                    }
                    let speed = velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if speed >= 1.0 {
                        return Err(Error::InvalidParameter(format!(
                            "moving bump speed {speed} is not subluminal"
                        )));
                    }
                }
                InteractionTerm::NonlinearLocal { quadratic, cubic, delta } => {
                    if *delta <= 2.0 {
                        return Err(Error::InvalidParameter(format!(
                            "nonlinear_local needs delta > 2, got {delta}"
                        )));
                    }
                    for sp in [quadratic, cubic].into_iter().flatten() {
                        if !sp.profile.bounded_with_weight(*delta) {
                            return Err(Error::InvalidParameter(
                                "nonlinear_local profile is unbounded against <x>^delta".into(),
                            ));
                        }
                    }
                }
                InteractionTerm::NonlinearPower { p, .. } => {
                    if *p < 1.0 {
                        return Err(Error::InvalidParameter(format!(
                            "nonlinear power needs p >= 1, got {p}"
                        )));
                    }
                    if dim >= 3 {
                        let cap = dim as f64 / (dim as f64 - 2.0);
                        if *p > cap {
                            return Err(Error::InvalidParameter(format!(
                                "nonlinear power p = {p} exceeds n/(n-2) = {cap} in dimension {dim}"
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Analytic class-membership check for the linear part: class one needs
    /// `V in L^inf_t L^2_delta` (or `L^inf_(delta+n/2)`) for a declared
    /// `delta > 1`.
    pub fn conforms_class_one(&self, delta: f64, dim: usize) -> bool {
        if delta <= 1.0 {
            return false;
        }
        self.linear_profiles().all(|p| {
            p.square_integrable_with_weight(delta, dim)
                || p.bounded_with_weight(delta + dim as f64 / 2.0)
        })
    }

    /// Class two needs `V in L^inf_t L^2_x`.
    pub fn conforms_class_two(&self, dim: usize) -> bool {
        self.linear_profiles().all(|p| p.square_integrable_with_weight(0.0, dim))
    }

    fn linear_profiles(&self) -> impl Iterator<Item = SpatialProfile> + '_ {
        self.terms.iter().filter_map(|t| match t {
            InteractionTerm::StaticLocalized { profile, .. }
            | InteractionTerm::MovingBump { profile, .. }
            | InteractionTerm::TimeModulated { profile, .. } => Some(*profile),
            _ => None,
        })
    }

    /// The frozen effective potential `V(x,t) + N0(u(x,t))` as a physical
    /// field (complex arithmetic; real for real states).
    pub fn effective_potential(&self, state: &FieldState, t: f64) -> Field {
        let grid = state.grid().clone();
        let u_phys = state.u().to_physical();
        let mut w = Field::zeros(&grid);
        for term in &self.terms {
            match term {
                InteractionTerm::StaticLocalized { amplitude, profile } => {
                    grid.for_each_coord(|idx, x| {
                        w.values_mut()[idx] += amplitude * profile.eval(x);
                    });
                }
                InteractionTerm::MovingBump { amplitude, profile, velocity, trajectory } => {
                    let g = trajectory.eval(t);
                    let mut shifted = [0.0f64; 3];
                    grid.for_each_coord(|idx, x| {
                        for (i, xi) in x.iter().enumerate() {
                            shifted[i] = xi - g * velocity[i];
                        }
                        w.values_mut()[idx] += amplitude * profile.eval(&shifted[..x.len()]);
                    });
                }
                InteractionTerm::TimeModulated { amplitude, profile, modulation } => {
                    let m = modulation.eval(t);
                    grid.for_each_coord(|idx, x| {
                        w.values_mut()[idx] += amplitude * m * profile.eval(x);
                    });
                }
                InteractionTerm::NonlinearLocal { quadratic, cubic, .. } => {
                    grid.for_each_coord(|idx, x| {
                        let u = u_phys.values()[idx];
                        let mut n0 = Complex64::new(0.0, 0.0);
                        if let Some(a) = quadratic {
                            n0 += a.eval(x) * u;
                        }
                        if let Some(b) = cubic {
                            n0 += b.eval(x) * u * u;
                        }
                        w.values_mut()[idx] += n0;
                    });
                }
                InteractionTerm::NonlinearPower { lambda, p } => {
                    for (slot, u) in w.values_mut().iter_mut().zip(u_phys.values()) {
                        *slot += *lambda * u.norm().powf(p - 1.0);
                    }
                }
            }
        }
        w
    }
}

/// The Duhamel integrand factor `(V(x,t) + N0(u)) u` in physical space.
pub fn evaluate_interaction(spec: &PotentialSpec, state: &FieldState, t: f64) -> Result<Field> {
    if !state.is_finite() {
        return Err(Error::NonFinite("state handed to evaluate_interaction"));
    }
    let mut w = spec.effective_potential(state, t);
    let u_phys = state.u().to_physical();
    for (slot, u) in w.values_mut().iter_mut().zip(u_phys.values()) {
        *slot *= u;
    }
    Ok(w)
}

/// Measured interaction norms along a trajectory plus the class verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassNormReport {
    /// `sup_t ||V(t) u(t)||_{L^2}` over the sampled checkpoints.
    pub sup_interaction_l2: f64,
    /// `sup_t ||u(t)||_S`, the global-solution surrogate constant.
    pub sup_s_norm: f64,
    pub initial_s_norm: f64,
    /// `sup_t ||V(t)||_{L^2}` of the frozen effective potential.
    pub sup_potential_l2: f64,
    pub declared_delta: Option<f64>,
    pub class_one: bool,
    pub class_two: bool,
    /// Conforming when a class check passed and every sampled norm stayed
    /// finite.
    pub conforming: bool,
}

/// Sweeps the stored checkpoints of a finished run, measuring the class
/// norms of the interaction. Always produces a report; a spec outside both
/// potential classes is marked nonconforming rather than rejected.
pub fn class_norm_report(
    spec: &PotentialSpec,
    trajectory: &StateTrajectory,
    declared_delta: Option<f64>,
) -> Result<ClassNormReport> {
    let times = trajectory.checkpoint_times();
    if times.is_empty() {
        return Err(Error::InvalidParameter("trajectory holds no checkpoints".into()));
    }
    let dim = trajectory.grid().dim();
    let mut sup_interaction_l2: f64 = 0.0;
    let mut sup_s_norm: f64 = 0.0;
    let mut sup_potential_l2: f64 = 0.0;
    for &t in &times {
        let state = trajectory.state_at(t)?;
        let vu = evaluate_interaction(spec, state, t)?;
        sup_interaction_l2 = sup_interaction_l2.max(vu.norm(&NormSpec::L2)?);
        sup_s_norm = sup_s_norm.max(state.s_norm()?);
        let v = spec.effective_potential(state, t);
        sup_potential_l2 = sup_potential_l2.max(v.norm(&NormSpec::L2)?);
    }
    let class_one = declared_delta.map(|d| spec.conforms_class_one(d, dim)).unwrap_or(false);
    let class_two = spec.conforms_class_two(dim);
    let initial_s_norm = trajectory.initial_state().s_norm()?;
    Ok(ClassNormReport {
        sup_interaction_l2,
        sup_s_norm,
        initial_s_norm,
        sup_potential_l2,
        declared_delta,
        class_one,
        class_two,
        conforming: (class_one || class_two)
            && sup_interaction_l2.is_finite()
            && sup_s_norm.is_finite(),
    })
}

/// Which interaction-decay law the probe measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionDecayVariant {
    /// Square-integrable potentials, `n >= 3`: cutoffs `F_c(alpha)` times the
    /// low-pass at `t^beta`; predicted slopes `-(n(1-alpha-beta)-beta)/2`
    /// for the `u` integrand and `-(n(1-alpha-beta)-3 beta)/2` for `udot`.
    SquareIntegrable { alpha: f64, beta: f64 },
    /// Weighted potentials (declared `delta > 1`), any dimension: cutoffs
    /// `F_c(alpha)` times the high-pass at `t^(-b)` with the derivative
    /// weight folded in; predicted slope
    /// `-(1 + min{(1-alpha) n/2 + dt/2 - 1, dt - 1})`, `dt = (1+delta)/2`.
    Weighted { alpha: f64, b: f64, delta: f64 },
}

#[derive(Debug, Clone)]
pub struct InteractionDecayProbe {
    pub variant: InteractionDecayVariant,
    pub samples_u: Vec<(f64, f64)>,
    pub samples_udot: Vec<(f64, f64)>,
    pub fit_u: ExponentFit,
    pub fit_udot: ExponentFit,
    pub predicted_slope_u: f64,
    pub predicted_slope_udot: f64,
    /// Set when the requested exponents sit outside the proven window.
    pub exploratory: bool,
}

impl InteractionDecayVariant {
    fn predictions(&self, dim: usize) -> (f64, f64, bool) {
        let n = dim as f64;
        match *self {
            InteractionDecayVariant::SquareIntegrable { alpha, beta } => {
                let s_u = -(n * (1.0 - alpha - beta) - beta) / 2.0;
                let s_v = -(n * (1.0 - alpha - beta) - 3.0 * beta) / 2.0;
                let in_window = dim >= 3 && alpha > 0.0 && alpha < 1.0 - 2.0 / n && beta > 0.0;
                (s_u, s_v, !in_window)
            }
            InteractionDecayVariant::Weighted { alpha, b, delta } => {
                let dt = 0.5 * (1.0 + delta);
                let beta_tilde = ((1.0 - alpha) * n / 2.0 + dt / 2.0 - 1.0).min(dt - 1.0);
                let slope = -(1.0 + beta_tilde);
                let cap = (1.0 - b).min(1.0 - (2.0 - delta) / n);
                let in_window = delta > 1.0
                    && (0.0..0.5).contains(&b)
                    && alpha > 0.0
                    && alpha < cap
                    && beta_tilde > 0.0;
                (slope, slope, !in_window)
            }
        }
    }
}

/// Measures the decay of the cutoff Duhamel integrands
/// `d/dt u_Omega = sin(t omega)/omega V(t)u(t)` and
/// `d/dt udot_Omega = -cos(t omega) V(t)u(t)` directly from stored
/// checkpoints, and fits both log-log slopes.
pub fn interaction_decay_probe(
    run: &StateTrajectory,
    variant: InteractionDecayVariant,
    times: &[f64],
    width: f64,
) -> Result<InteractionDecayProbe> {
    if times.len() < 4 {
        return Err(Error::InvalidParameter(
            "interaction decay probe needs at least 4 times".into(),
        ));
    }
    let grid: Grid = run.grid().clone();
    let (space, freq) = match variant {
        InteractionDecayVariant::SquareIntegrable { alpha, beta } => {
            (CutoffSpec::space_low(alpha, width)?, CutoffSpec::freq_low(beta, width)?)
        }
        InteractionDecayVariant::Weighted { alpha, b, .. } => {
            (CutoffSpec::space_low(alpha, width)?, CutoffSpec::freq_high(b, width)?)
        }
    };
    let weighted = matches!(variant, InteractionDecayVariant::Weighted { .. });
    let mut samples_u = Vec::with_capacity(times.len());
    let mut samples_udot = Vec::with_capacity(times.len());
    for &t in times {
        if t < 1.0 {
            return Err(Error::InvalidParameter(format!("probe time {t} is below 1")));
        }
        let state = run.state_at(t)?;
        let vu = evaluate_interaction(run.potential_spec(), state, t)?;
        let vu_hat = vu.to_spectral();
        // m(k) sin(t omega) with m = 1/omega plain, or 1 carrying the <P>
        // derivative weight (<P> and omega coincide at mass one).
        let du = vu_hat.apply_spectral_multiplier(|k| {
            let w = omega(k.iter().map(|v| v * v).sum());
            let s = (t * w).sin();
            Complex64::new(if weighted { s } else { s / w }, 0.0)
        });
        let dv = vu_hat.apply_spectral_multiplier(|k| {
            let w = omega(k.iter().map(|v| v * v).sum());
            Complex64::new(-(t * w).cos(), 0.0)
        });
        let cut_u = space.apply_pow(&freq.apply_pow(&du, t, 1.0)?, t, 1.0)?;
        let cut_v = space.apply_pow(&freq.apply_pow(&dv, t, 1.0)?, t, 1.0)?;
        samples_u.push((t, cut_u.norm(&NormSpec::L2)?));
        samples_udot.push((t, cut_v.norm(&NormSpec::L2)?));
    }
    let (predicted_slope_u, predicted_slope_udot, exploratory) = variant.predictions(grid.dim());
    let fit_u = fit_exponent(&samples_u)?;
    let fit_udot = fit_exponent(&samples_udot)?;
    Ok(InteractionDecayProbe {
        variant,
        samples_u,
        samples_udot,
        fit_u,
        fit_udot,
        predicted_slope_u,
        predicted_slope_udot,
        exploratory,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::grid::Grid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_state(grid: &Grid) -> FieldState {
        let u = Field::from_fn(grid, |x| c((-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0));
        FieldState::new(u, Field::zeros(grid)).unwrap()
    }

    #[test]
    fn empty_spec_gives_zero_interaction() {
        let grid = Grid::new(1, 20.0, 64).unwrap();
        let state = gaussian_state(&grid);
        let out = evaluate_interaction(&PotentialSpec::free(), &state, 2.0).unwrap();
        assert_eq!(out.l2_norm(), 0.0);
    }

    #[test]
    fn static_gaussian_on_constant_field_returns_the_profile() {
        let grid = Grid::new(1, 20.0, 64).unwrap();
        let u = Field::from_fn(&grid, |_| c(1.0, 0.0));
        let state = FieldState::new(u, Field::zeros(&grid)).unwrap();
        let spec = PotentialSpec {
            terms: vec![InteractionTerm::StaticLocalized {
                amplitude: 1.0,
                profile: SpatialProfile::Gaussian { rho: 2.0 },
            }],
        };
        let out = evaluate_interaction(&spec, &state, 0.0).unwrap();
        let mut max_err: f64 = 0.0;
        grid.for_each_coord(|idx, x| {
            let want = (-x[0] * x[0] / 4.0).exp();
            max_err = max_err.max((out.values()[idx] - want).norm());
        });
        assert!(max_err < 1e-14);
    }

    #[test]
    fn quadratic_local_term_matches_pointwise_oracle() {
        let grid = Grid::new(1, 20.0, 128).unwrap();
        let state = gaussian_state(&grid);
        let spec = PotentialSpec {
            terms: vec![InteractionTerm::NonlinearLocal {
                quadratic: Some(ScaledProfile {
                    amplitude: 1.0,
                    profile: SpatialProfile::InversePower { sigma: 3.0 },
                }),
                cubic: None,
                delta: 2.5,
            }],
        };
        spec.validate(1).unwrap();
        let out = evaluate_interaction(&spec, &state, 1.0).unwrap();
        let mut max_err: f64 = 0.0;
        grid.for_each_coord(|idx, x| {
            let u = (-x[0] * x[0]).exp();
            let want = (1.0 + x[0] * x[0]).powf(-1.5) * u * u;
            max_err = max_err.max((out.values()[idx] - want).norm());
        });
        assert!(max_err < 1e-12, "max error {max_err}");
    }

    #[test]
    fn moving_bump_equals_static_profile_at_shifted_coordinates() {
        let grid = Grid::new(1, 40.0, 128).unwrap();
        let state = gaussian_state(&grid);
        let t = 3.0;
        let v = 0.5;
        let spec = PotentialSpec {
            terms: vec![InteractionTerm::MovingBump {
                amplitude: 1.0,
                profile: SpatialProfile::Gaussian { rho: 1.5 },
                velocity: vec![v],
                trajectory: Trajectory::Linear,
            }],
        };
        spec.validate(1).unwrap();
        let w = spec.effective_potential(&state, t);
        let mut max_err: f64 = 0.0;
        grid.for_each_coord(|idx, x| {
            let s = x[0] - v * t;
            let want = (-s * s / 2.25).exp();
            max_err = max_err.max((w.values()[idx] - want).norm());
        });
        assert!(max_err < 1e-14);
    }

    #[test]
    fn validation_rejects_catalog_violations() {
        let fast = PotentialSpec {
            terms: vec![InteractionTerm::MovingBump {
                amplitude: 1.0,
                profile: SpatialProfile::Gaussian { rho: 1.0 },
                velocity: vec![1.0],
                trajectory: Trajectory::Linear,
            }],
        };
        assert!(fast.validate(1).is_err());

        let shallow = PotentialSpec {
            terms: vec![InteractionTerm::NonlinearLocal {
                quadratic: None,
                cubic: Some(ScaledProfile {
                    amplitude: 1.0,
                    profile: SpatialProfile::Gaussian { rho: 1.0 },
                }),
                delta: 1.5,
            }],
        };
        assert!(shallow.validate(1).is_err());

        let fat = PotentialSpec {
            terms: vec![InteractionTerm::NonlinearLocal {
                quadratic: Some(ScaledProfile {
                    amplitude: 1.0,
                    profile: SpatialProfile::InversePower { sigma: 2.0 },
                }),
                cubic: None,
                delta: 2.5,
            }],
        };
        assert!(fat.validate(1).is_err());

        let hot = PotentialSpec {
            terms: vec![InteractionTerm::NonlinearPower { lambda: 1.0, p: 4.0 }],
        };
        assert!(hot.validate(3).is_err());
        assert!(hot.validate(1).is_ok());
    }

    #[test]
    fn class_membership_rules() {
        let gauss = PotentialSpec {
            terms: vec![InteractionTerm::StaticLocalized {
                amplitude: 0.5,
                profile: SpatialProfile::Gaussian { rho: 2.0 },
            }],
        };
        assert!(gauss.conforms_class_one(2.5, 1));
        assert!(gauss.conforms_class_two(3));

        // <x>^-1 in 3d is not square integrable even unweighted
        let slow = PotentialSpec {
            terms: vec![InteractionTerm::StaticLocalized {
                amplitude: 1.0,
                profile: SpatialProfile::InversePower { sigma: 1.0 },
            }],
        };
        assert!(!slow.conforms_class_two(3));
        assert!(!slow.conforms_class_one(2.5, 3));

        // <x>^-3.5 against delta = 2.5 in 1d: 2(3.5 - 2.5) = 2 > 1
        let ok = PotentialSpec {
            terms: vec![InteractionTerm::StaticLocalized {
                amplitude: 1.0,
                profile: SpatialProfile::InversePower { sigma: 3.5 },
            }],
        };
        assert!(ok.conforms_class_one(2.5, 1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn potential_only_interaction_is_linear_in_u(seed in any::<u64>(), scale in 0.1f64..5.0) {
            let grid = Grid::new(1, 16.0, 32).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut u = Field::zeros(&grid);
            for v in u.values_mut() {
                *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let state = FieldState::new(u.clone(), Field::zeros(&grid)).unwrap();
            let scaled = FieldState::new(u.scaled(c(scale, 0.0)), Field::zeros(&grid)).unwrap();
            let spec = PotentialSpec {
                terms: vec![
                    InteractionTerm::StaticLocalized {
                        amplitude: 0.7,
                        profile: SpatialProfile::Gaussian { rho: 1.5 },
                    },
                    InteractionTerm::TimeModulated {
                        amplitude: 0.3,
                        profile: SpatialProfile::InversePower { sigma: 3.0 },
                        modulation: Modulation::Cos { omega: 2.0 },
                    },
                ],
            };
            let a = evaluate_interaction(&spec, &state, 1.3).unwrap().scaled(c(scale, 0.0));
            let b = evaluate_interaction(&spec, &scaled, 1.3).unwrap();
            let err = a.sub(&b).unwrap().l2_norm();
            prop_assert!(err < 1e-12 * b.l2_norm().max(1e-6));
        }

        #[test]
        fn cubic_only_interaction_scales_cubically(seed in any::<u64>(), scale in 0.1f64..3.0) {
            let grid = Grid::new(1, 16.0, 32).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut u = Field::zeros(&grid);
            for v in u.values_mut() {
                *v = c(rng.gen_range(-1.0..1.0), 0.0);
            }
            let state = FieldState::new(u.clone(), Field::zeros(&grid)).unwrap();
            let scaled = FieldState::new(u.scaled(c(scale, 0.0)), Field::zeros(&grid)).unwrap();
            let spec = PotentialSpec {
                terms: vec![InteractionTerm::NonlinearLocal {
                    quadratic: None,
                    cubic: Some(ScaledProfile {
                        amplitude: 0.8,
                        profile: SpatialProfile::InversePower { sigma: 3.0 },
                    }),
                    delta: 2.5,
                }],
            };
            let a = evaluate_interaction(&spec, &state, 0.0).unwrap().scaled(c(scale.powi(3), 0.0));
            let b = evaluate_interaction(&spec, &scaled, 0.0).unwrap();
            let err = a.sub(&b).unwrap().l2_norm();
            prop_assert!(err < 1e-12 * b.l2_norm().max(1e-6));
        }
    }
}
