//! Propagation observables: the sandwiched quadratic forms
//! `B1(t) = F_freq F_space F_freq` and `B11(t) = F_space F_freq F_space`
//! monitored along the scattering representative, and the flux split of
//! `d/dt <B1>` into sign-definite relaxation terms, Duhamel terms, and a
//! commutator remainder.
//!
//! With self-adjoint real multipliers the split reads
//!
//! ```text
//! d/dt <B1 : phi> = A1 + A2 + A3 + R + A4
//! A1 = <psi, dF_space/dt psi>,  psi = F_freq phi        (>= 0)
//! A2 = <dphi/dt, B1 phi>,  A3 = conj(A2)
//! A4 = 2 <chi, F_freq dF_freq/dt chi>,  chi = sqrt(F_space) phi  (>= 0)
//! R  = 2 Re <dF_freq/dt phi, F_space psi> - A4
//! ```
//!
//! and the certificate checks `A1, A4 >= 0`, the `<B1>` bound by the
//! squared norm, and a flat tail in the partial sums of `|A2|+|A3|+|R|`.

use crate::error::Result;
use crate::grid::Field;
use crate::interactions::evaluate_interaction;
use crate::propagators::omega;

use super::{channel::ChannelVariant, duhamel::omega_star, real_inner, StateTrajectory};

/// One logged time of the observable sweep. Flux terms are for the
/// `u`-component observable; the sign-definite pieces of the `udot`
/// observable are logged alongside.
#[derive(Debug, Clone, Copy)]
pub struct ObservableSample {
    pub time: f64,
    pub b1_u: f64,
    pub b1_udot: f64,
    pub b11_u: f64,
    pub b11_udot: f64,
    pub a1: f64,
    pub a2_abs: f64,
    pub a3_abs: f64,
    pub a4: f64,
    pub r: f64,
    pub a1_udot: f64,
    pub a4_udot: f64,
    /// Squared L2 norm of the weighted representative; the bound on `<B1>`.
    pub phi_l2_sq: f64,
    pub phi_dot_l2_sq: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationObservableLog {
    pub variant: ChannelVariant,
    pub samples: Vec<ObservableSample>,
    /// Partial sums of `|A2| + |A3| + |R|` over the sampled times; a
    /// Cauchy-flat tail is the integrability proxy.
    pub flux_partial_sums: Vec<f64>,
}

impl PropagationObservableLog {
    /// `A1, A4 >= -tol` and `|<B1>| <= ||phi||^2` at every logged time.
    pub fn sign_and_bound_conditions_hold(&self, tol: f64) -> bool {
        self.samples.iter().all(|s| {
            s.a1 >= -tol
                && s.a4 >= -tol
                && s.a1_udot >= -tol
                && s.a4_udot >= -tol
                && s.b1_u.abs() <= s.phi_l2_sq * (1.0 + 1e-10) + tol
                && s.b1_udot.abs() <= s.phi_dot_l2_sq * (1.0 + 1e-10) + tol
        })
    }

    /// Increments of the flux partial sums over the last `window` steps.
    pub fn tail_flux_increments(&self, window: usize) -> Vec<f64> {
        let sums = &self.flux_partial_sums;
        let start = sums.len().saturating_sub(window + 1);
        sums[start..].windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Sweeps the observables over checkpointed `times`.
pub fn propagation_observables(
    traj: &StateTrajectory,
    variant: &ChannelVariant,
    width: f64,
    times: &[f64],
) -> Result<PropagationObservableLog> {
    let (space, freq) = variant.cutoffs(width)?;
    let weighted = matches!(variant, ChannelVariant::HighFrequency { .. });
    let mut samples = Vec::with_capacity(times.len());
    let mut flux_partial_sums = Vec::with_capacity(times.len());
    let mut running = 0.0;
    for &t in times {
        let rep = omega_star(traj, t)?;
        // phi carries the derivative weight in the high-frequency variant
        let phi = if weighted {
            rep.u().apply_spectral_multiplier(|k| {
                omega(k.iter().map(|v| v * v).sum()).into()
            })
        } else {
            rep.u().clone()
        };
        let phi_dot = rep.udot().clone();

        let state = traj.state_at(t)?;
        let vu = evaluate_interaction(traj.potential_spec(), state, t)?;
        let dphi = vu.apply_spectral_multiplier(|k| {
            let w = omega(k.iter().map(|v| v * v).sum());
            let s = (t * w).sin();
            (if weighted { s } else { s / w }).into()
        });

        let psi = freq.apply_pow(&phi, t, 1.0)?;
        let psi_dot = freq.apply_pow(&phi_dot, t, 1.0)?;
        let space_psi = space.apply_pow(&psi, t, 1.0)?;

        let b1_u = real_inner(&psi, &space_psi)?;
        let b1_udot = real_inner(&psi_dot, &space.apply_pow(&psi_dot, t, 1.0)?)?;

        let chi = space.apply_pow(&phi, t, 1.0)?;
        let chi_dot = space.apply_pow(&phi_dot, t, 1.0)?;
        let b11_u = real_inner(&chi, &freq.apply_pow(&chi, t, 1.0)?)?;
        let b11_udot = real_inner(&chi_dot, &freq.apply_pow(&chi_dot, t, 1.0)?)?;

        let a1 = real_inner(&psi, &space.apply_time_deriv(&psi, t)?)?;
        let a1_udot = real_inner(&psi_dot, &space.apply_time_deriv(&psi_dot, t)?)?;

        let a2 = freq.apply_pow(&dphi, t, 1.0)?.inner(&space_psi)?;
        let a2_abs = a2.norm();

        let sqrt_space_phi = space.apply_pow(&phi, t, 0.5)?;
        let a4 = 2.0
            * real_inner(
                &sqrt_space_phi,
                &freq.apply_pow(&freq.apply_time_deriv(&sqrt_space_phi, t)?, t, 1.0)?,
            )?;
        let sqrt_space_dot = space.apply_pow(&phi_dot, t, 0.5)?;
        let a4_udot = 2.0
            * real_inner(
                &sqrt_space_dot,
                &freq.apply_pow(&freq.apply_time_deriv(&sqrt_space_dot, t)?, t, 1.0)?,
            )?;

        let r = 2.0 * real_inner(&freq.apply_time_deriv(&phi, t)?, &space_psi)? - a4;

        let phi_l2_sq = sq_l2(&phi);
        let phi_dot_l2_sq = sq_l2(&phi_dot);
        running += a2_abs + a2_abs + r.abs();
        flux_partial_sums.push(running);
        samples.push(ObservableSample {
            time: t,
            b1_u,
            b1_udot,
            b11_u,
            b11_udot,
            a1,
            a2_abs,
            a3_abs: a2_abs,
            a4,
            r,
            a1_udot,
            a4_udot,
            phi_l2_sq,
            phi_dot_l2_sq,
        });
    }
    Ok(PropagationObservableLog { variant: *variant, samples, flux_partial_sums })
}

fn sq_l2(f: &Field) -> f64 {
    let n = f.l2_norm();
    n * n
}
