//! Free/weak asymptotic decomposition and the localization probes built on
//! it: the `|x|`-moment growth of the weak part, and the weighted local
//! decay of solutions launched from range-anchored data.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldState, NormSpec};
use crate::harness::fit::{fit_exponent, ExponentFit};
use crate::interactions::PotentialSpec;
use crate::propagators::{free_evolve, omega};

use super::{
    channel::{ChannelVariant, ConvergenceReport},
    evolve_from, EvolveOptions, StateTrajectory,
};

/// The state at one time split into free radiation reconstructed from the
/// channel limit and the weakly localized remainder.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub time: f64,
    pub free_part: FieldState,
    pub weak_part: FieldState,
    /// `(<P> u_w, |x| <P> u_w)`.
    pub moment_u: f64,
    /// `(v_w, |x| v_w)`.
    pub moment_v: f64,
}

/// `|x|`-weighted moment `Re <g, |x| g>` with the unwrapped box coordinate.
fn radial_moment(g: &Field) -> f64 {
    let phys = g.to_physical();
    let mut acc = 0.0;
    phys.grid().clone().for_each_coord(|idx, x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        acc += r * phys.values()[idx].norm_sqr();
    });
    acc * phys.grid().cell_volume()
}

/// Splits `u(t)` into the free flow of the certified channel limit plus the
/// remainder, and records the weighted moments of the remainder. The report
/// must carry a converged verdict.
pub fn asymptotic_decomposition(
    traj: &StateTrajectory,
    report: &ConvergenceReport,
    t: f64,
) -> Result<Decomposition> {
    let limit = report.limit()?;
    let state = traj.state_at(t)?;
    let free_part = free_evolve(limit, t)?;
    let weak_part = state.sub(&free_part)?;
    let weighted = weak_part.u().apply_spectral_multiplier(|k| {
        omega(k.iter().map(|v| v * v).sum()).into()
    });
    let moment_u = radial_moment(&weighted);
    let moment_v = radial_moment(weak_part.udot());
    Ok(Decomposition { time: t, free_part, weak_part, moment_u, moment_v })
}

/// Outcome of the weak-localization probe.
#[derive(Debug, Clone)]
pub struct WeakLocalization {
    /// Log-log fit of the `u`-moment growth; absent when the weak part is
    /// negligible.
    pub fit: Option<ExponentFit>,
    pub negligible: bool,
    /// Pass threshold `e + 0.2` on the fitted growth slope.
    pub slope_cap: f64,
    pub moments_u: Vec<(f64, f64)>,
    pub moments_v: Vec<(f64, f64)>,
}

impl WeakLocalization {
    pub fn passes(&self) -> bool {
        match &self.fit {
            None => self.negligible,
            Some(fit) => fit.slope <= self.slope_cap,
        }
    }
}

/// Fits the growth of the weak-part moments over sampled decompositions
/// against the localization region exponent `e`.
pub fn weak_localization_probe(
    decompositions: &[Decomposition],
    e: f64,
    negligible_floor: f64,
) -> Result<WeakLocalization> {
    if decompositions.len() < 4 {
        return Err(Error::InvalidParameter(
            "weak localization probe needs at least 4 decompositions".into(),
        ));
    }
    let moments_u: Vec<(f64, f64)> =
        decompositions.iter().map(|d| (d.time, d.moment_u)).collect();
    let moments_v: Vec<(f64, f64)> =
        decompositions.iter().map(|d| (d.time, d.moment_v)).collect();
    for &(t, m) in moments_u.iter().chain(&moments_v) {
        if m < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "negative weighted moment {m} at t = {t}"
            )));
        }
    }
    let slope_cap = e + 0.2;
    if moments_u.iter().all(|&(_, m)| m <= negligible_floor) {
        return Ok(WeakLocalization { fit: None, negligible: true, slope_cap, moments_u, moments_v });
    }
    let fit = fit_exponent(&moments_u)?;
    Ok(WeakLocalization { fit: Some(fit), negligible: false, slope_cap, moments_u, moments_v })
}

/// Builds initial data approximately in the range of the channel operator:
/// cutoff `v` at the anchor scale, push it forward freely to the anchor
/// time, then pull it back to `t = 0` through the interacting flow.
pub fn range_anchored_data(
    v: &FieldState,
    spec: &PotentialSpec,
    anchor: f64,
    variant: &ChannelVariant,
    width: f64,
    dt: f64,
) -> Result<FieldState> {
    if anchor < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "anchor time must be >= 1, got {anchor}"
        )));
    }
    let (space, freq) = variant.cutoffs(width)?;
    let u = freq.apply_pow(&space.apply_pow(v.u(), anchor, 1.0)?, anchor, 1.0)?;
    let udot = freq.apply_pow(&space.apply_pow(v.udot(), anchor, 1.0)?, anchor, 1.0)?;
    let cut = FieldState::new(u, udot)?;
    let at_anchor = free_evolve(&cut, anchor)?;
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: Vec::new(),
        monitor_stride: 50,
        guard_factor: 1e3,
    };
    let back = evolve_from(&at_anchor, spec, anchor, 0.0, dt, &opts)?;
    Ok(back.final_state().clone())
}

/// Fits the decay of `||<x>^{-(n+1)/2} u(t)||_{L2 (+) L2}` over checkpointed
/// times; three dimensions only at desk scale.
pub fn local_decay_probe(traj: &StateTrajectory, times: &[f64]) -> Result<ExponentFit> {
    let dim = traj.grid().dim();
    if dim != 3 {
        return Err(Error::InvalidParameter(format!(
            "local decay probe runs in dimension 3, got {dim}"
        )));
    }
    if times.len() < 4 {
        return Err(Error::InvalidParameter("local decay probe needs at least 4 times".into()));
    }
    let delta = -0.5 * (dim as f64 + 1.0);
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let state = traj.state_at(t)?;
        let value = state.norm(&NormSpec::HSigmaDelta { sigma: 0.0, delta })?;
        samples.push((t, value));
    }
    fit_exponent(&samples)
}

