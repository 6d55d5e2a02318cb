//! Duhamel-formula checks: the solution as free flow plus the propagated
//! interaction integral, and the scattering representative
//! `Omega*(t) = U0(0,t) U(t,0) u(0)` in both its propagator and integral
//! forms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, FieldState, NormSpec};
use crate::interactions::evaluate_interaction;
use crate::propagators::{free_evolve, omega};

use super::StateTrajectory;

/// `Omega*(t)`: the state pulled back through the free flow.
pub fn omega_star(traj: &StateTrajectory, t: f64) -> Result<FieldState> {
    let state = traj.state_at(t)?;
    free_evolve(state, -t)
}

/// Trapezoid weights for a sorted, possibly non-uniform node list.
fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut w = vec![0.0; m];
    for i in 0..m.saturating_sub(1) {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Accumulates `sum_s w_s m(t_ref, s, omega) * Vu_hat(s)` over the stored
/// checkpoints in `[0, t]` for the two propagated-integrand shapes
/// (`sin((t_ref - s) omega)/omega` and `cos((t_ref - s) omega)`).
fn quadrature(
    traj: &StateTrajectory,
    t: f64,
    phase_at: impl Fn(f64) -> f64,
) -> Result<(Field, Field)> {
    let nodes: Vec<f64> = traj
        .checkpoint_times()
        .into_iter()
        .filter(|&s| s >= -1e-12 && s <= t + 1e-9 * t.max(1.0))
        .collect();
    if nodes.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 checkpoints in [0, {t}] for the Duhamel quadrature"
        )));
    }
    let weights = trapezoid_weights(&nodes);
    let grid = traj.grid().clone();
    let mut acc_sin = Field::from_values(
        &grid,
        crate::grid::Representation::Spectral,
        vec![Complex64::new(0.0, 0.0); grid.site_count()],
    )?;
    let mut acc_cos = acc_sin.clone();
    for (&s, &w) in nodes.iter().zip(&weights) {
        let state = traj.state_at(s)?;
        let vu = evaluate_interaction(traj.potential_spec(), state, s)?;
        let vu_hat = vu.to_spectral();
        let tau = phase_at(s);
        let mut i = 0;
        grid.for_each_freq(|idx, k| {
            let om = omega(k.iter().map(|v| v * v).sum());
            let (sn, cs) = (tau * om).sin_cos();
            let z = vu_hat.values()[idx] * w;
            acc_sin.values_mut()[idx] += z * (sn / om);
            acc_cos.values_mut()[idx] += z * cs;
            i += 1;
        });
        debug_assert_eq!(i, grid.site_count());
    }
    Ok((acc_sin, acc_cos))
}

/// S-norm of the defect in the representation of `u(t)` as free flow minus
/// the time-integrated propagated interaction, evaluated by trapezoid
/// quadrature over the stored checkpoints in `[0, t]`.
pub fn duhamel_residual(traj: &StateTrajectory, t: f64) -> Result<f64> {
    let stored = traj.state_at(t)?;
    let free = free_evolve(traj.initial_state(), t)?;
    let (int_u, int_v) = quadrature(traj, t, |s| t - s)?;
    let rhs_u = free.u().sub(&int_u.to_physical())?;
    let rhs_v = free.udot().sub(&int_v.to_physical())?;
    let defect = FieldState::new(rhs_u, rhs_v)?.sub(stored)?;
    defect.norm(&NormSpec::SNorm)
}

/// The integral form of `Omega*(t)`:
/// `u_Omega(t) = u(0) + int_0^t sin(s omega)/omega V(s)u(s) ds` and
/// `udot_Omega(t) = udot(0) - int_0^t cos(s omega) V(s)u(s) ds`.
/// Cross-checks the propagator form of [`omega_star`] to quadrature error.
pub fn omega_star_duhamel(traj: &StateTrajectory, t: f64) -> Result<FieldState> {
    let (int_u, int_v) = quadrature(traj, t, |s| s)?;
    let u = traj.initial_state().u().add(&int_u.to_physical())?;
    let v = traj.initial_state().udot().sub(&int_v.to_physical())?;
    FieldState::new(u, v)
}
