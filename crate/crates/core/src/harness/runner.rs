//! The experiment pipeline behind the CLI subcommands: build the grid and
//! data from a config, evolve where needed, run the configured probes, and
//! emit CSVs plus `report.json` atomically.
//!
//! Probe order and child seeds are fixed by the config alone, so a rerun
//! with the same config and seed reproduces every output byte for byte. A
//! guard abort during evolution is recorded in the report with whatever
//! outputs were already produced left in place.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid, NormSpec};
use crate::harness::config::{child_seed, ExperimentConfig};
use crate::harness::fit::{FitVerdict, SlopeTarget, DEFINITIVE_R_SQUARED};
use crate::harness::report::{
    fmt_f64, write_csv, write_report, ExperimentReport, ProbeOutcome,
};
use crate::interactions::{class_norm_report, interaction_decay_probe};
use crate::phase_space::{commutator_norm_probe, velocity_bound_probe};
use crate::propagators::dispersive_decay_probe;
use crate::scattering::{
    asymptotic_decomposition, channel_wave_operator, duhamel_residual, dyadic_times,
    encode_snapshot, evolve, local_decay_probe, propagation_observables, range_anchored_data,
    weak_localization_probe, ChannelSettings, ChannelVariant, ConvergenceReport, Decomposition,
    EvolveOptions, PropagationObservableLog, StateTrajectory, Verdict,
};

/// Which pipeline a CLI subcommand runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Evolve and store snapshots plus monitors.
    Simulate,
    /// Channel wave operator with certification, observables, and the
    /// interaction-decay probes.
    WaveOp,
    /// Dispersive sup-norm decay and the weighted local-decay probe.
    DecayCheck,
    /// Commutator-scaling and velocity-bound probes.
    CommutatorCheck,
    /// Channel limit plus free/weak decomposition and localization fit.
    Decompose,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::WaveOp => "wave-op",
            Stage::DecayCheck => "decay-check",
            Stage::CommutatorCheck => "commutator-check",
            Stage::Decompose => "decompose",
        }
    }
}

/// Everything a stage produced, kept in memory for in-process callers.
#[derive(Debug)]
pub struct RunArtifacts {
    pub report: ExperimentReport,
    pub report_path: PathBuf,
    pub trajectory: Option<StateTrajectory>,
    pub convergence: Option<ConvergenceReport>,
    pub observables: Option<PropagationObservableLog>,
    pub decompositions: Vec<Decomposition>,
}

impl RunArtifacts {
    pub fn passed(&self) -> bool {
        self.report.status == "pass"
    }
}

fn fit_outcome_details(fit: &crate::harness::fit::ExponentFit, extra: serde_json::Value) -> serde_json::Value {
    let mut details = json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (details.as_object_mut(), extra) {
        for (k, v) in more {
            obj.insert(k, v);
        }
    }
    details
}

fn judged_outcome(
    id: &str,
    required: bool,
    fit: &crate::harness::fit::ExponentFit,
    target: &SlopeTarget,
    extra: serde_json::Value,
) -> ProbeOutcome {
    let details = fit_outcome_details(fit, extra);
    match fit.judge(target, DEFINITIVE_R_SQUARED) {
        FitVerdict::Pass => ProbeOutcome::new(id, required, true, details),
        FitVerdict::Fail => ProbeOutcome::new(id, required, false, details),
        FitVerdict::Inconclusive => ProbeOutcome::inconclusive(id, required, details),
    }
}

struct Pipeline<'a> {
    config: &'a ExperimentConfig,
    out_dir: &'a Path,
    grid: Grid,
    initial: FieldState,
    outcomes: Vec<ProbeOutcome>,
}

impl<'a> Pipeline<'a> {
    fn new(config: &'a ExperimentConfig, out_dir: &'a Path) -> Result<Self> {
        config.validate()?;
        let grid = config.grid.build()?;
        let initial = config.initial_data.build(&grid, config.seed)?;
        Ok(Self { config, out_dir, grid, initial, outcomes: Vec::new() })
    }

    fn evolve_options(&self) -> EvolveOptions {
        let mut extras = self.config.run.dyadic_times();
        extras.push(self.config.run.t_max);
        EvolveOptions {
            checkpoint_stride: self.config.run.checkpoint_stride,
            extra_checkpoint_times: extras,
            monitor_stride: self.config.run.monitor_stride,
            guard_factor: self.config.run.guard_factor,
        }
    }

    fn evolve_run(&self) -> Result<StateTrajectory> {
        evolve(
            &self.initial,
            &self.config.potential,
            self.config.run.t_max,
            self.config.run.dt,
            &self.evolve_options(),
        )
    }

    fn write_monitor_csv(&self, traj: &StateTrajectory) -> Result<()> {
        let rows: Vec<Vec<String>> = traj
            .monitors()
            .iter()
            .map(|m| vec![fmt_f64(m.time), fmt_f64(m.s_norm), fmt_f64(m.free_energy)])
            .collect();
        write_csv(&self.out_dir.join("monitors.csv"), "time,s_norm,free_energy", &rows)
    }

    fn write_snapshots(&self, traj: &StateTrajectory) -> Result<()> {
        if !self.config.output.snapshots {
            return Ok(());
        }
        let dir = self.out_dir.join("snapshots");
        for (idx, &t) in self.config.run.dyadic_times().iter().enumerate() {
            let state = traj.state_at(t)?;
            let bytes = encode_snapshot(state, t);
            crate::harness::report::write_atomic(&dir.join(format!("snap_{idx:04}.bin")), &bytes)?;
        }
        Ok(())
    }

    fn class_norms(&mut self, traj: &StateTrajectory) -> Result<()> {
        let Some(probe) = &self.config.probes.class_norms else { return Ok(()) };
        let report = class_norm_report(&self.config.potential, traj, probe.declared_delta)?;
        let details = json!({
            "sup_interaction_l2": report.sup_interaction_l2,
            "sup_s_norm": report.sup_s_norm,
            "initial_s_norm": report.initial_s_norm,
            "sup_potential_l2": report.sup_potential_l2,
            "class_one": report.class_one,
            "class_two": report.class_two,
        });
        let mut outcome =
            ProbeOutcome::new("class_norms", probe.required, report.conforming, details);
        if !report.conforming {
            outcome.verdict = "nonconforming".to_string();
        }
        self.outcomes.push(outcome);
        Ok(())
    }

    fn wave_op(
        &mut self,
        traj: &StateTrajectory,
    ) -> Result<(Option<ConvergenceReport>, Option<PropagationObservableLog>)> {
        let Some(probe) = self.config.probes.wave_op.clone() else {
            return Ok((None, None));
        };
        let variant = self.config.channel_variant(&probe);
        let times = self.config.run.dyadic_times();
        let s0 = self.initial.s_norm()?;
        let settings = ChannelSettings {
            variant,
            width: self.config.cutoffs.width,
            tol_abs: probe.tol_abs_rel * s0,
            contraction_rho: probe.contraction_rho,
            ratio_floor: 1e-13 * s0.max(1.0),
        };
        let report = channel_wave_operator(traj, &settings, &times)?;

        let mut rows = Vec::with_capacity(times.len());
        for (i, &t) in report.times.iter().enumerate() {
            let increment = if i > 0 { fmt_f64(report.increments[i - 1]) } else { String::new() };
            let ratio = if i > 1 { fmt_f64(report.ratios[i - 2]) } else { String::new() };
            rows.push(vec![fmt_f64(t), fmt_f64(report.candidate_norms[i]), increment, ratio]);
        }
        write_csv(
            &self.out_dir.join("wave_op.csv"),
            "time,candidate_norm,increment,ratio",
            &rows,
        )?;

        let converged = report.verdict == Verdict::Converged;
        let tail_ratios: Vec<f64> =
            report.ratios.iter().rev().take(3).rev().copied().collect();
        let details = json!({
            "verdict": format!("{:?}", report.verdict),
            "tol_abs": settings.tol_abs,
            "contraction_rho": settings.contraction_rho,
            "final_increments": report.increments.iter().rev().take(3).rev().collect::<Vec<_>>(),
            "final_ratios": tail_ratios,
            "exploratory": report.exploratory,
        });
        self.outcomes.push(ProbeOutcome::new("wave_op", probe.required, converged, details));

        let log = propagation_observables(traj, &report.settings.variant, settings.width, &times)?;
        let rows: Vec<Vec<String>> = log
            .samples
            .iter()
            .zip(&log.flux_partial_sums)
            .map(|(s, &sum)| {
                vec![
                    fmt_f64(s.time),
                    fmt_f64(s.b1_u),
                    fmt_f64(s.b1_udot),
                    fmt_f64(s.b11_u),
                    fmt_f64(s.b11_udot),
                    fmt_f64(s.a1),
                    fmt_f64(s.a2_abs),
                    fmt_f64(s.a3_abs),
                    fmt_f64(s.a4),
                    fmt_f64(s.r),
                    fmt_f64(sum),
                ]
            })
            .collect();
        write_csv(
            &self.out_dir.join("observables.csv"),
            "time,b1_u,b1_udot,b11_u,b11_udot,a1,a2_abs,a3_abs,a4,r,flux_partial_sum",
            &rows,
        )?;
        let signs_ok = log.sign_and_bound_conditions_hold(1e-10);
        let tail = log.tail_flux_increments(3);
        self.outcomes.push(ProbeOutcome::new(
            "observable_signs",
            probe.required,
            signs_ok,
            json!({
                "min_a1": log.samples.iter().map(|s| s.a1).fold(f64::INFINITY, f64::min),
                "min_a4": log.samples.iter().map(|s| s.a4).fold(f64::INFINITY, f64::min),
                "flux_tail_increments": tail,
            }),
        ));
        Ok((Some(report), Some(log)))
    }

    fn interaction_decay(&mut self, traj: &StateTrajectory) -> Result<()> {
        let times = self.config.run.dyadic_times();
        for (i, probe) in self.config.probes.interaction_decay.iter().enumerate() {
            let result =
                interaction_decay_probe(traj, probe.variant, &times, self.config.cutoffs.width)?;
            let id = format!("interaction_decay_{i}");
            let rows: Vec<Vec<String>> = result
                .samples_u
                .iter()
                .zip(&result.samples_udot)
                .map(|(&(t, vu), &(_, vv))| {
                    vec![
                        fmt_f64(t),
                        fmt_f64(vu),
                        fmt_f64(result.fit_u.model(t)),
                        fmt_f64(vv),
                        fmt_f64(result.fit_udot.model(t)),
                    ]
                })
                .collect();
            write_csv(
                &self.out_dir.join(format!("{id}.csv")),
                "time,value_u,fit_u,value_udot,fit_udot",
                &rows,
            )?;
            let extra = json!({
                "predicted_slope_u": result.predicted_slope_u,
                "predicted_slope_udot": result.predicted_slope_udot,
                "slope_u": result.fit_u.slope,
                "exploratory": result.exploratory,
            });
            self.outcomes.push(judged_outcome(
                &id,
                probe.required,
                &result.fit_udot,
                &SlopeTarget::AtMost { limit: probe.max_slope },
                extra,
            ));
        }
        Ok(())
    }

    fn duhamel(&mut self) -> Result<()> {
        let Some(probe) = self.config.probes.duhamel.clone() else { return Ok(()) };
        let mut residuals = Vec::new();
        for stride in [probe.coarse_stride, probe.coarse_stride / 2] {
            let opts = EvolveOptions {
                checkpoint_stride: stride,
                extra_checkpoint_times: vec![probe.time],
                monitor_stride: self.config.run.monitor_stride,
                guard_factor: self.config.run.guard_factor,
            };
            let traj = evolve(
                &self.initial,
                &self.config.potential,
                probe.time,
                self.config.run.dt,
                &opts,
            )?;
            residuals.push(duhamel_residual(&traj, probe.time)?);
        }
        let ratio = residuals[0] / residuals[1];
        let (lo, hi) = probe.ratio_window;
        let passed = ratio.is_finite() && ratio >= lo && ratio <= hi;
        write_csv(
            &self.out_dir.join("duhamel.csv"),
            "checkpoint_stride,residual",
            &[
                vec![format!("{}", probe.coarse_stride), fmt_f64(residuals[0])],
                vec![format!("{}", probe.coarse_stride / 2), fmt_f64(residuals[1])],
            ],
        )?;
        self.outcomes.push(ProbeOutcome::new(
            "duhamel_residual",
            probe.required,
            passed,
            json!({
                "residual_coarse": residuals[0],
                "residual_fine": residuals[1],
                "ratio": ratio,
                "window": [lo, hi],
            }),
        ));
        Ok(())
    }

    fn dispersive(&mut self) -> Result<()> {
        let Some(probe) = self.config.probes.dispersive.clone() else { return Ok(()) };
        let times = probe.times.clone().unwrap_or_else(|| self.config.run.dyadic_times());
        let radius = self.config.initial_data.data_radius(&self.grid);
        let horizon = if self.config.exploratory {
            f64::INFINITY
        } else {
            0.5 * self.grid.extent() - radius
        };
        let result = dispersive_decay_probe(self.initial.u(), &times, horizon)?;
        let rows: Vec<Vec<String>> = result
            .fit
            .samples
            .iter()
            .map(|&(t, v)| vec![fmt_f64(t), fmt_f64(v), fmt_f64(result.fit.model(t))])
            .collect();
        write_csv(
            &self.out_dir.join("dispersive.csv"),
            "time,sup_norm,fitted_model_value",
            &rows,
        )?;
        let extra = json!({
            "sup_ratio": result.sup_ratio,
            "ratio_spread": result.ratio_spread,
            "conforms": result.conforms(),
            "weight_l1": result.weight_l1,
        });
        self.outcomes.push(judged_outcome(
            "dispersive_decay",
            probe.required,
            &result.fit,
            &probe.target,
            extra,
        ));
        Ok(())
    }

    fn local_decay(&mut self) -> Result<()> {
        let Some(probe) = self.config.probes.local_decay.clone() else { return Ok(()) };
        let anchor = probe.anchor.unwrap_or(0.5 * self.config.run.t_max).max(1.0);
        let variant = ChannelVariant::LowFrequency {
            alpha: self.config.cutoffs.alpha,
            beta: self.config.cutoffs.beta,
        };
        let times = self.config.run.dyadic_times();
        let mut fits = Vec::new();
        let mut anchors = vec![anchor];
        if probe.anchor_sensitivity && anchor / 2.0 >= 1.0 {
            anchors.push(anchor / 2.0);
        }
        for (i, &a) in anchors.iter().enumerate() {
            let data = range_anchored_data(
                &self.initial,
                &self.config.potential,
                a,
                &variant,
                self.config.cutoffs.width,
                self.config.run.dt,
            )?;
            let traj = evolve(
                &data,
                &self.config.potential,
                self.config.run.t_max,
                self.config.run.dt,
                &self.evolve_options(),
            )?;
            let fit = local_decay_probe(&traj, &times)?;
            if i == 0 {
                let rows: Vec<Vec<String>> = fit
                    .samples
                    .iter()
                    .map(|&(t, v)| vec![fmt_f64(t), fmt_f64(v), fmt_f64(fit.model(t))])
                    .collect();
                write_csv(
                    &self.out_dir.join("local_decay.csv"),
                    "time,weighted_norm,fitted_model_value",
                    &rows,
                )?;
            }
            fits.push(fit);
        }
        let anchor_shift = fits.get(1).map(|f| f.slope - fits[0].slope);
        let extra = json!({
            "anchor": anchor,
            "anchor_sensitivity_slope_shift": anchor_shift,
        });
        self.outcomes.push(judged_outcome(
            "local_decay",
            probe.required,
            &fits[0],
            &SlopeTarget::AtMost { limit: probe.max_slope },
            extra,
        ));
        Ok(())
    }

    fn commutators(&mut self) -> Result<()> {
        for (i, probe) in self.config.probes.commutator.iter().enumerate() {
            let seed = child_seed(self.config.seed, &format!("commutator_{i}"));
            let result = commutator_norm_probe(
                &self.grid,
                probe.kind,
                probe.alpha,
                probe.other_exponent,
                &probe.times,
                self.config.cutoffs.width,
                probe.iterations,
                seed,
            )?;
            let id = format!("commutator_{i}");
            let rows: Vec<Vec<String>> = result
                .norms
                .iter()
                .map(|&(t, v)| vec![fmt_f64(t), fmt_f64(v), fmt_f64(result.fit.model(t))])
                .collect();
            write_csv(
                &self.out_dir.join(format!("{id}.csv")),
                "time,commutator_norm,fitted_model_value",
                &rows,
            )?;
            let extra = json!({
                "expected_slope": result.expected_slope,
                "kind": format!("{:?}", result.kind),
            });
            self.outcomes.push(judged_outcome(
                &id,
                probe.required,
                &result.fit,
                &SlopeTarget::Within {
                    target: result.expected_slope,
                    tol: probe.slope_tolerance,
                },
                extra,
            ));
        }
        Ok(())
    }

    fn velocity(&mut self) -> Result<()> {
        for (i, probe) in self.config.probes.velocity.iter().enumerate() {
            let id = format!("velocity_{i}");
            let mut rows = Vec::new();
            let mut samples = Vec::new();
            let mut exploratory = false;
            for (j, &a) in probe.sweep.iter().enumerate() {
                let seed = child_seed(self.config.seed, &format!("velocity_{i}_{j}"));
                let bound = velocity_bound_probe(
                    &self.grid,
                    self.config.cutoffs.e,
                    self.config.cutoffs.b,
                    probe.delta,
                    a,
                    probe.t,
                    probe.axis,
                    probe.direction,
                    self.config.cutoffs.width,
                    probe.iterations,
                    seed,
                )?;
                exploratory |= bound.exploratory;
                rows.push(vec![
                    fmt_f64(a),
                    fmt_f64(bound.measured_norm),
                    fmt_f64(bound.envelope),
                    fmt_f64(bound.ratio),
                ]);
                samples.push((a, bound.measured_norm.max(1e-300)));
            }
            write_csv(
                &self.out_dir.join(format!("{id}.csv")),
                "propagation_time,measured_norm,envelope,ratio",
                &rows,
            )?;
            let fit = crate::harness::fit::fit_exponent(&samples)?;
            let extra = json!({
                "direction": format!("{:?}", probe.direction),
                "delta": probe.delta,
                "exploratory": exploratory,
            });
            self.outcomes.push(judged_outcome(
                &id,
                probe.required,
                &fit,
                &SlopeTarget::AtMost { limit: probe.max_slope },
                extra,
            ));
        }
        Ok(())
    }

    fn decompose(
        &mut self,
        traj: &StateTrajectory,
        convergence: &ConvergenceReport,
    ) -> Result<Vec<Decomposition>> {
        let Some(probe) = self.config.probes.decompose.clone() else { return Ok(Vec::new()) };
        if convergence.verdict != Verdict::Converged {
            self.outcomes.push(ProbeOutcome::new(
                "weak_localization",
                probe.required,
                false,
                json!({ "blocked_by": "channel verdict not converged" }),
            ));
            return Ok(Vec::new());
        }
        let times = self.config.run.dyadic_times();
        let mut decomps = Vec::with_capacity(times.len());
        let mut rows = Vec::with_capacity(times.len());
        for &t in &times {
            let d = asymptotic_decomposition(traj, convergence, t)?;
            rows.push(vec![
                fmt_f64(t),
                fmt_f64(d.moment_u),
                fmt_f64(d.moment_v),
                fmt_f64(d.weak_part.norm(&NormSpec::L2)?),
                fmt_f64(d.free_part.s_norm()?),
            ]);
            decomps.push(d);
        }
        write_csv(
            &self.out_dir.join("decompose.csv"),
            "time,moment_u,moment_v,weak_pair_norm,free_s_norm",
            &rows,
        )?;
        let e = self.config.cutoffs.e;
        let weak = weak_localization_probe(&decomps, e, probe.negligible_floor)?;
        let cap = probe.max_moment_slope.unwrap_or(weak.slope_cap);
        let final_moment = decomps.last().map(|d| d.moment_u).unwrap_or(0.0);
        let outcome = match &weak.fit {
            None => ProbeOutcome::new(
                "weak_localization",
                probe.required,
                true,
                json!({ "negligible": true, "final_moment_u": final_moment }),
            ),
            Some(fit) => {
                let extra = json!({
                    "negligible": false,
                    "final_moment_u": final_moment,
                    "slope_cap": cap,
                });
                judged_outcome(
                    "weak_localization",
                    probe.required,
                    fit,
                    &SlopeTarget::AtMost { limit: cap },
                    extra,
                )
            }
        };
        self.outcomes.push(outcome);
        Ok(decomps)
    }

    fn finish(
        self,
        stage: Stage,
        aborted: Option<String>,
        trajectory: Option<StateTrajectory>,
        convergence: Option<ConvergenceReport>,
        observables: Option<PropagationObservableLog>,
        decompositions: Vec<Decomposition>,
    ) -> Result<RunArtifacts> {
        let report = ExperimentReport {
            stage: stage.name().to_string(),
            status: String::new(),
            aborted,
            outcomes: self.outcomes,
            config: self.config.clone(),
        }
        .finalize();
        let report_path = write_report(self.out_dir, &report)?;
        Ok(RunArtifacts {
            report,
            report_path,
            trajectory,
            convergence,
            observables,
            decompositions,
        })
    }
}

/// Runs one stage of the pipeline, writing all artifacts under `out_dir`.
/// The returned artifacts report `passed()` exactly when every required
/// probe passed and no guard abort happened.
pub fn run_experiment(
    config: &ExperimentConfig,
    stage: Stage,
    out_dir: &Path,
) -> Result<RunArtifacts> {
    let mut pipe = Pipeline::new(config, out_dir)?;
    match stage {
        Stage::Simulate => {
            match pipe.evolve_run() {
                Ok(traj) => {
                    pipe.write_monitor_csv(&traj)?;
                    pipe.write_snapshots(&traj)?;
                    pipe.class_norms(&traj)?;
                    pipe.finish(stage, None, Some(traj), None, None, Vec::new())
                }
                Err(Error::NormGuard { time, s_norm, limit }) => pipe.finish(
                    stage,
                    Some(format!(
                        "norm guard tripped at t = {time}: S = {s_norm:.3e} > {limit:.3e}"
                    )),
                    None,
                    None,
                    None,
                    Vec::new(),
                ),
                Err(e) => Err(e),
            }
        }
        Stage::WaveOp => {
            let traj = pipe.evolve_run()?;
            pipe.write_monitor_csv(&traj)?;
            let (convergence, observables) = pipe.wave_op(&traj)?;
            pipe.interaction_decay(&traj)?;
            pipe.duhamel()?;
            pipe.finish(stage, None, Some(traj), convergence, observables, Vec::new())
        }
        Stage::DecayCheck => {
            pipe.dispersive()?;
            pipe.local_decay()?;
            pipe.finish(stage, None, None, None, None, Vec::new())
        }
        Stage::CommutatorCheck => {
            pipe.commutators()?;
            pipe.velocity()?;
            pipe.finish(stage, None, None, None, None, Vec::new())
        }
        Stage::Decompose => {
            let traj = pipe.evolve_run()?;
            let (convergence, observables) = pipe.wave_op(&traj)?;
            let convergence = convergence.ok_or_else(|| {
                Error::Config("decompose needs a wave_op probe in the config".into())
            })?;
            let decomps = pipe.decompose(&traj, &convergence)?;
            pipe.finish(stage, None, Some(traj), Some(convergence), observables, decomps)
        }
    }
}

/// Convenience entry point for tests and the `report` subcommand.
pub fn dyadic_probe_times(config: &ExperimentConfig) -> Vec<f64> {
    dyadic_times(config.run.dyadic_start, config.run.t_max)
}
