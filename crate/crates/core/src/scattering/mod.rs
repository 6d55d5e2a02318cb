//! Perturbed evolution and everything built on top of it: Duhamel checks,
//! channel wave operators with Cauchy certification, propagation
//! observables, the free/weak asymptotic decomposition, and the snapshot
//! codec.
//!
//! The stepper is Strang splitting: a half-step potential kick (`udot -=
//! dt/2 * (V + N0(u)) u` with `u` frozen, which solves the kick flow
//! exactly), one exact free step through the spectral propagator, and the
//! closing half kick. For a vanishing interaction the stepper reduces to the
//! exact free flow.

mod channel;
mod decomposition;
mod duhamel;
mod observables;
mod snapshot;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid, NormSpec};
use crate::interactions::{evaluate_interaction, PotentialSpec};
use crate::propagators::{free_energy, FreeFlowCache};

pub use channel::{
    channel_candidate, channel_wave_operator, ChannelSettings, ChannelVariant,
    ConvergenceReport, Verdict,
};
pub use decomposition::{
    asymptotic_decomposition, local_decay_probe, range_anchored_data, weak_localization_probe,
    Decomposition, WeakLocalization,
};
pub use duhamel::{duhamel_residual, omega_star, omega_star_duhamel};
pub use observables::{propagation_observables, ObservableSample, PropagationObservableLog};
pub use snapshot::{decode_snapshot, encode_snapshot};

/// Per-step scalars tracked during evolution.
#[derive(Debug, Clone, Copy)]
pub struct StepMonitor {
    pub time: f64,
    pub s_norm: f64,
    pub free_energy: f64,
}

/// How [`evolve`] stores its history.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Keep a snapshot every this many steps (besides endpoints); 0 stores
    /// endpoints and explicit extras only.
    pub checkpoint_stride: usize,
    /// Extra times to checkpoint exactly (must land on step boundaries);
    /// dyadic probe times go here.
    pub extra_checkpoint_times: Vec<f64>,
    /// Evaluate the monitors every this many steps.
    pub monitor_stride: usize,
    /// Abort when the S norm exceeds this multiple of its initial value.
    pub guard_factor: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            checkpoint_stride: 10,
            extra_checkpoint_times: Vec::new(),
            monitor_stride: 1,
            guard_factor: 1e3,
        }
    }
}

/// A finished run: the interaction it was driven by, stored snapshots at
/// checkpoint times, and the monitored scalars.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    grid: Grid,
    spec: PotentialSpec,
    dt: f64,
    snapshots: Vec<(f64, FieldState)>,
    monitors: Vec<StepMonitor>,
}

impl StateTrajectory {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential_spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn snapshots(&self) -> &[(f64, FieldState)] {
        &self.snapshots
    }

    pub fn monitors(&self) -> &[StepMonitor] {
        &self.monitors
    }

    pub fn initial_state(&self) -> &FieldState {
        &self.snapshots.first().expect("trajectory holds its initial state").1
    }

    pub fn final_state(&self) -> &FieldState {
        &self.snapshots.last().expect("trajectory holds its final state").1
    }

    /// The stored state at checkpoint time `t` (within `1e-9` absolute).
    pub fn state_at(&self, t: f64) -> Result<&FieldState> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|(_, state)| state)
            .ok_or(Error::NotCheckpoint(t))
    }
}

fn half_kick(state: &mut FieldState, spec: &PotentialSpec, t: f64, half_dt: f64) -> Result<()> {
    let w = evaluate_interaction(spec, state, t)?;
    let w_phys = w.to_physical();
    let udot = state.udot_mut();
    debug_assert!(matches!(udot.representation(), crate::grid::Representation::Physical));
    for (v, f) in udot.values_mut().iter_mut().zip(w_phys.values()) {
        *v -= half_dt * f;
    }
    Ok(())
}

/// Steps the interacting equation from `t_start` to `t_end` (either
/// direction) with magnitude-`dt` Strang steps.
///
/// `t_end - t_start` must be an integer number of steps, as must every extra
/// checkpoint time. Aborts with a diagnostic when the monitored S norm
/// exceeds `guard_factor` times its initial value; all estimates downstream
/// assume a uniformly bounded solution.
pub fn evolve_from(
    initial: &FieldState,
    spec: &PotentialSpec,
    t_start: f64,
    t_end: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<StateTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !initial.is_finite() {
        return Err(Error::NonFinite("initial state"));
    }
    let grid = initial.grid().clone();
    spec.validate(grid.dim())?;
    let span = t_end - t_start;
    let steps = (span.abs() / dt).round() as usize;
    if (steps as f64 * dt - span.abs()).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "span {span} is not an integer number of dt = {dt} steps"
        )));
    }
    let h = if span >= 0.0 { dt } else { -dt };
    let mut checkpoint_steps = std::collections::BTreeSet::new();
    checkpoint_steps.insert(0usize);
    checkpoint_steps.insert(steps);
    if opts.checkpoint_stride > 0 {
        for k in (0..=steps).step_by(opts.checkpoint_stride) {
            checkpoint_steps.insert(k);
        }
    }
    for &tau in &opts.extra_checkpoint_times {
        let k = ((tau - t_start) / h).round();
        if !(0.0..=(steps as f64)).contains(&k)
            || (t_start + k * h - tau).abs() > 1e-9 * tau.abs().max(1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "checkpoint time {tau} does not land on a step boundary"
            )));
        }
        checkpoint_steps.insert(k as usize);
    }

    let s0 = initial.s_norm()?;
    let guard = opts.guard_factor * s0.max(f64::MIN_POSITIVE);
    let cache = FreeFlowCache::new(&grid, h);
    let free = spec.is_free();
    let monitor_stride = opts.monitor_stride.max(1);

    let mut state = initial.clone();
    let mut snapshots = Vec::with_capacity(checkpoint_steps.len());
    let mut monitors = Vec::new();
    for k in 0..=steps {
        let t_k = t_start + k as f64 * h;
        if checkpoint_steps.contains(&k) {
            snapshots.push((t_k, state.clone()));
        }
        if k % monitor_stride == 0 || k == steps {
            let s_norm = state.s_norm()?;
            if !s_norm.is_finite() || s_norm > guard {
                return Err(Error::NormGuard { time: t_k, s_norm, limit: guard });
            }
            monitors.push(StepMonitor { time: t_k, s_norm, free_energy: free_energy(&state)? });
        }
        if k == steps {
            break;
        }
        if !free {
            half_kick(&mut state, spec, t_k, 0.5 * h)?;
        }
        state = cache.apply(&state)?;
        if !free {
            half_kick(&mut state, spec, t_k + h, 0.5 * h)?;
        }
    }
    Ok(StateTrajectory { grid, spec: spec.clone(), dt: h, snapshots, monitors })
}

/// Forward evolution from `t = 0`; see [`evolve_from`].
pub fn evolve(
    initial: &FieldState,
    spec: &PotentialSpec,
    t_end: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<StateTrajectory> {
    evolve_from(initial, spec, 0.0, t_end, dt, opts)
}

/// Energy functional `||udot||^2 + ||grad u||^2 + ||u||^2 + <u, V u>` whose
/// drift under Strang stepping is `O(dt^2)` for static potentials.
pub fn interacting_energy(state: &FieldState, spec: &PotentialSpec, t: f64) -> Result<f64> {
    let base = free_energy(state)?;
    if spec.is_free() {
        return Ok(base);
    }
    let vu = evaluate_interaction(spec, state, t)?;
    let coupling = state.u().to_physical().inner(&vu)?;
    Ok(base + coupling.re)
}

/// L2-pair norm `sqrt(||u||^2 + ||udot||^2)` used for increments and
/// residuals.
pub fn pair_norm(state: &FieldState) -> Result<f64> {
    state.norm(&NormSpec::L2)
}

/// Dyadic probe times `start, 2 start, ..., <= horizon`.
pub fn dyadic_times(start: f64, horizon: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = start;
    while t <= horizon * (1.0 + 1e-12) {
        out.push(t);
        t *= 2.0;
    }
    out
}

/// Real part of the inner product, asserting the imaginary part is noise.
pub(crate) fn real_inner(a: &crate::grid::Field, b: &crate::grid::Field) -> Result<f64> {
    let z: Complex64 = a.inner(b)?;
    Ok(z.re)
}

#[cfg(test)]
mod tests;
