use num_complex::Complex64;

use super::*;
use crate::grid::Field;
use crate::interactions::{InteractionTerm, PotentialSpec, ScaledProfile, SpatialProfile};
use crate::propagators::free_evolve;
use crate::scattering::channel::{ChannelSettings, ChannelVariant, Verdict};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn gaussian_state(grid: &Grid, amplitude: f64, radius: f64) -> FieldState {
    let u = Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        c(amplitude * (-r2 / (2.0 * radius * radius)).exp(), 0.0)
    });
    FieldState::new(u, Field::zeros(grid)).unwrap()
}

fn static_gaussian_potential(amplitude: f64, rho: f64) -> PotentialSpec {
    PotentialSpec {
        terms: vec![InteractionTerm::StaticLocalized {
            amplitude,
            profile: SpatialProfile::Gaussian { rho },
        }],
    }
}

#[test]
fn free_spec_reproduces_free_flow_at_checkpoints() {
    let grid = Grid::new(1, 40.0, 128).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let opts = EvolveOptions { checkpoint_stride: 16, ..Default::default() };
    let traj = evolve(&initial, &PotentialSpec::free(), 4.0, 0.05, &opts).unwrap();
    for &t in &traj.checkpoint_times() {
        let want = free_evolve(&initial, t).unwrap();
        let got = traj.state_at(t).unwrap();
        let err = pair_norm(&got.sub(&want).unwrap()).unwrap();
        assert!(err < 1e-10, "checkpoint {t} deviates by {err}");
    }
}

#[test]
fn constant_potential_mode_follows_shifted_dispersion() {
    // with V = c const, exp(ikx) data oscillates at sqrt(k^2 + 1 + c)
    let grid = Grid::new(1, 2.0 * std::f64::consts::PI, 32).unwrap();
    let u0 = Field::from_fn(&grid, |x| (c(0.0, 1.0) * x[0]).exp());
    let initial = FieldState::new(u0.clone(), Field::zeros(&grid)).unwrap();
    let vc = 0.5;
    let spec = PotentialSpec {
        terms: vec![InteractionTerm::StaticLocalized {
            amplitude: vc,
            profile: SpatialProfile::InversePower { sigma: 0.0 },
        }],
    };
    let t_end = 1.0;
    let shifted = (1.0 + 1.0 + vc).sqrt();
    let want = u0.scaled(c((t_end * shifted).cos(), 0.0));
    let mut errs = Vec::new();
    for dt in [2e-2, 1e-2] {
        let opts = EvolveOptions { checkpoint_stride: 0, ..Default::default() };
        let traj = evolve(&initial, &spec, t_end, dt, &opts).unwrap();
        let err = traj.final_state().u().sub(&want).unwrap().l2_norm();
        errs.push(err);
    }
    let order = errs[0] / errs[1];
    assert!(
        (2.5..6.0).contains(&order),
        "dt halving should cut the error about 4x, got {order} ({errs:?})"
    );
}

#[test]
fn static_potential_energy_drift_is_second_order() {
    let grid = Grid::new(1, 40.0, 128).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let spec = static_gaussian_potential(0.5, 2.0);
    let mut drifts = Vec::new();
    for dt in [4e-2, 2e-2] {
        let opts = EvolveOptions { checkpoint_stride: 0, ..Default::default() };
        let traj = evolve(&initial, &spec, 4.0, dt, &opts).unwrap();
        let e0 = interacting_energy(&initial, &spec, 0.0).unwrap();
        let e1 = interacting_energy(traj.final_state(), &spec, 4.0).unwrap();
        drifts.push((e1 - e0).abs());
    }
    let order = drifts[0] / drifts[1];
    assert!(
        (2.5..6.5).contains(&order),
        "energy drift should scale like dt^2, got factor {order} ({drifts:?})"
    );
}

#[test]
fn evolution_is_time_reversible() {
    let grid = Grid::new(1, 40.0, 128).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let spec = static_gaussian_potential(0.4, 2.0);
    let opts = EvolveOptions { checkpoint_stride: 0, ..Default::default() };
    let fwd = evolve(&initial, &spec, 3.0, 0.05, &opts).unwrap();
    let back = evolve_from(fwd.final_state(), &spec, 3.0, 0.0, 0.05, &opts).unwrap();
    let err = pair_norm(&back.final_state().sub(&initial).unwrap()).unwrap();
    assert!(err < 1e-11, "round trip defect {err}");
}

#[test]
fn norm_guard_trips_on_focusing_blowup() {
    let grid = Grid::new(1, 40.0, 128).unwrap();
    let initial = gaussian_state(&grid, 3.0, 1.0);
    let spec = PotentialSpec {
        terms: vec![InteractionTerm::NonlinearLocal {
            quadratic: None,
            cubic: Some(ScaledProfile {
                amplitude: -20.0,
                profile: SpatialProfile::Gaussian { rho: 4.0 },
            }),
            delta: 2.5,
        }],
    };
    let opts = EvolveOptions { guard_factor: 5.0, ..Default::default() };
    let out = evolve(&initial, &spec, 10.0, 0.01, &opts);
    assert!(matches!(out, Err(Error::NormGuard { .. })), "got {out:?}");
}

#[test]
fn rejects_off_step_spans_and_checkpoints() {
    let grid = Grid::new(1, 20.0, 32).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.0);
    let free = PotentialSpec::free();
    assert!(evolve(&initial, &free, 1.05, 0.1, &EvolveOptions::default()).is_err());
    let opts = EvolveOptions {
        extra_checkpoint_times: vec![0.55],
        ..Default::default()
    };
    assert!(evolve(&initial, &free, 1.0, 0.1, &opts).is_err());
}

#[test]
fn duhamel_residual_vanishes_for_free_flow() {
    let grid = Grid::new(1, 40.0, 128).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let opts = EvolveOptions { checkpoint_stride: 5, ..Default::default() };
    let traj = evolve(&initial, &PotentialSpec::free(), 4.0, 0.05, &opts).unwrap();
    let r = duhamel_residual(&traj, 4.0).unwrap();
    assert!(r < 1e-10, "free residual {r}");
}

#[test]
fn duhamel_residual_self_converges_at_order_two() {
    let grid = Grid::new(1, 40.0, 256).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let spec = static_gaussian_potential(0.5, 2.0);
    let dt = 2e-3;
    let mut residuals = Vec::new();
    for stride in [100usize, 50] {
        let opts = EvolveOptions { checkpoint_stride: stride, ..Default::default() };
        let traj = evolve(&initial, &spec, 4.0, dt, &opts).unwrap();
        residuals.push(duhamel_residual(&traj, 4.0).unwrap());
    }
    let order = residuals[0] / residuals[1];
    assert!(
        (3.0..5.0).contains(&order),
        "halving the checkpoint spacing should cut the residual 4x, got {order} ({residuals:?})"
    );
}

#[test]
fn omega_star_is_initial_data_for_free_flow() {
    let grid = Grid::new(1, 40.0, 128).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let opts = EvolveOptions { checkpoint_stride: 20, ..Default::default() };
    let traj = evolve(&initial, &PotentialSpec::free(), 4.0, 0.05, &opts).unwrap();
    for &t in &traj.checkpoint_times() {
        let rep = omega_star(&traj, t).unwrap();
        let err = pair_norm(&rep.sub(&initial).unwrap()).unwrap();
        assert!(err < 1e-10, "free omega* deviates by {err} at t = {t}");
    }
    let at_zero = omega_star(&traj, 0.0).unwrap();
    assert!(pair_norm(&at_zero.sub(&initial).unwrap()).unwrap() < 1e-12);
}

#[test]
fn omega_star_forms_agree_to_quadrature_error() {
    let grid = Grid::new(1, 40.0, 256).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.5);
    let spec = static_gaussian_potential(0.5, 2.0);
    let dt = 2e-3;
    let mut defects = Vec::new();
    for stride in [100usize, 50] {
        let opts = EvolveOptions { checkpoint_stride: stride, ..Default::default() };
        let traj = evolve(&initial, &spec, 4.0, dt, &opts).unwrap();
        let a = omega_star(&traj, 4.0).unwrap();
        let b = omega_star_duhamel(&traj, 4.0).unwrap();
        defects.push(pair_norm(&a.sub(&b).unwrap()).unwrap());
    }
    assert!(defects[1] < defects[0], "defect should shrink under refinement: {defects:?}");
    let order = defects[0] / defects[1];
    assert!((3.0..5.0).contains(&order), "expected second order, got {order}");
}

fn relaxed_settings() -> ChannelSettings {
    ChannelSettings {
        variant: ChannelVariant::LowFrequency { alpha: 0.8, beta: 0.8 },
        width: 1.0,
        tol_abs: 1e-3,
        contraction_rho: 0.75,
        ratio_floor: 1e-13,
    }
}

#[test]
fn free_channel_converges_to_initial_data() {
    let grid = Grid::new(1, 160.0, 512).unwrap();
    let initial = gaussian_state(&grid, 1.0, 0.8);
    let times = dyadic_times(1.0, 64.0);
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 64.0, 0.1, &opts).unwrap();
    let report = channel_wave_operator(&traj, &relaxed_settings(), &times).unwrap();
    assert_eq!(report.verdict, Verdict::Converged, "increments {:?}", report.increments);
    let limit = report.limit().unwrap();
    let err = pair_norm(&limit.sub(&initial).unwrap()).unwrap();
    assert!(err < 1e-3, "free limit deviates from data by {err}");
}

#[test]
fn channel_needs_at_least_four_times() {
    let grid = Grid::new(1, 80.0, 64).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.0);
    let times = vec![1.0, 2.0, 4.0];
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 4.0, 0.1, &opts).unwrap();
    assert!(channel_wave_operator(&traj, &relaxed_settings(), &times).is_err());
}

#[test]
fn observables_constant_for_free_flow_and_unscaled_cutoffs() {
    let grid = Grid::new(1, 80.0, 256).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.0);
    let times = dyadic_times(1.0, 8.0);
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 8.0, 0.1, &opts).unwrap();
    // exponent zero freezes both windows
    let variant = ChannelVariant::LowFrequency { alpha: 0.0, beta: 0.0 };
    let log = propagation_observables(&traj, &variant, 1.0, &times).unwrap();
    let first = log.samples.first().unwrap().b1_u;
    for s in &log.samples {
        assert!((s.b1_u - first).abs() < 1e-10 * first.abs().max(1.0));
        assert!(s.b1_u >= -1e-12 && s.b1_u <= s.phi_l2_sq * (1.0 + 1e-10));
    }
    assert!(log.sign_and_bound_conditions_hold(1e-10));
}

#[test]
fn observable_signs_hold_with_interaction() {
    let grid = Grid::new(1, 80.0, 256).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.0);
    let spec = static_gaussian_potential(0.5, 2.0);
    let times = dyadic_times(1.0, 16.0);
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &spec, 16.0, 0.05, &opts).unwrap();
    for variant in [
        ChannelVariant::LowFrequency { alpha: 0.4, beta: 0.3 },
        ChannelVariant::HighFrequency { alpha: 0.45, b: 0.3, declared_delta: None },
    ] {
        let log = propagation_observables(&traj, &variant, 1.0, &times).unwrap();
        assert!(log.sign_and_bound_conditions_hold(1e-10), "{variant:?}");
    }
}

#[test]
fn monotone_cutoff_widening_never_decreases_b11() {
    // with the frequency window frozen open, <B11> = ||p u||^2 is pointwise
    // monotone in the profile; doubling the window scale widens p.
    let grid = Grid::new(1, 80.0, 256).unwrap();
    let initial = gaussian_state(&grid, 1.0, 2.0);
    let times = vec![2.0];
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 2.0, 0.1, &opts).unwrap();
    let alpha = 0.5;
    let narrow = ChannelVariant::LowFrequency { alpha, beta: 3.0 };
    let b11_narrow =
        propagation_observables(&traj, &narrow, 1.0, &times).unwrap().samples[0].b11_u;
    // doubling t^alpha equals sampling the same cutoff at t' = 2^(1/alpha) t
    let t_wide = 2f64.powf(1.0 / alpha) * 2.0;
    let times_wide = vec![t_wide];
    let opts2 = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times_wide.clone(),
        ..Default::default()
    };
    let traj2 = evolve(&initial, &PotentialSpec::free(), t_wide, 0.1, &opts2).unwrap();
    let b11_wide =
        propagation_observables(&traj2, &narrow, 1.0, &times_wide).unwrap().samples[0].b11_u;
    assert!(
        b11_wide >= b11_narrow - 1e-12,
        "widened window lost mass: {b11_wide} < {b11_narrow}"
    );
}

#[test]
fn decomposition_identity_and_free_weak_part() {
    let grid = Grid::new(1, 160.0, 512).unwrap();
    let initial = gaussian_state(&grid, 1.0, 0.8);
    let times = dyadic_times(1.0, 64.0);
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 64.0, 0.1, &opts).unwrap();
    let report = channel_wave_operator(&traj, &relaxed_settings(), &times).unwrap();
    let mut decomps = Vec::new();
    for &t in &times {
        let d = asymptotic_decomposition(&traj, &report, t).unwrap();
        // free + weak reproduces the state exactly
        let recon = d.free_part.add(&d.weak_part).unwrap();
        let err = pair_norm(&recon.sub(traj.state_at(t).unwrap()).unwrap()).unwrap();
        assert!(err < 1e-12);
        assert!(d.moment_u >= 0.0 && d.moment_v >= 0.0);
        decomps.push(d);
    }
    // for the free run the weak part is cutoff-relaxation dust
    let weak = weak_localization_probe(&decomps, 0.55, 1e-4).unwrap();
    assert!(weak.negligible, "moments: {:?}", weak.moments_u);
}

#[test]
fn decomposition_requires_converged_report() {
    let grid = Grid::new(1, 80.0, 128).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.0);
    let times = dyadic_times(1.0, 8.0);
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 8.0, 0.1, &opts).unwrap();
    let strict = ChannelSettings {
        tol_abs: 0.0, // unreachable tolerance forces a non-converged verdict
        ..relaxed_settings()
    };
    let report = channel_wave_operator(&traj, &strict, &times).unwrap();
    assert_ne!(report.verdict, Verdict::Converged);
    assert!(asymptotic_decomposition(&traj, &report, 8.0).is_err());
}

#[test]
fn local_decay_probe_needs_dimension_three() {
    let grid = Grid::new(1, 40.0, 64).unwrap();
    let initial = gaussian_state(&grid, 1.0, 1.0);
    let times = dyadic_times(1.0, 8.0);
    let opts = EvolveOptions {
        checkpoint_stride: 0,
        extra_checkpoint_times: times.clone(),
        ..Default::default()
    };
    let traj = evolve(&initial, &PotentialSpec::free(), 8.0, 0.1, &opts).unwrap();
    assert!(local_decay_probe(&traj, &times).is_err());
}

#[test]
fn weighted_norm_is_dominated_by_plain_norm() {
    let grid = Grid::new(1, 40.0, 64).unwrap();
    let state = gaussian_state(&grid, 1.3, 1.0);
    let weighted = state.norm(&NormSpec::HSigmaDelta { sigma: 0.0, delta: -1.0 }).unwrap();
    let plain = state.norm(&NormSpec::L2).unwrap();
    assert!(weighted <= plain * (1.0 + 1e-12));
}

#[test]
fn anchored_data_reduces_to_cutoff_data_without_interaction() {
    let grid = Grid::new(1, 80.0, 256).unwrap();
    let v = gaussian_state(&grid, 1.0, 1.0);
    let variant = ChannelVariant::LowFrequency { alpha: 0.5, beta: 0.5 };
    let anchor = 8.0;
    let data =
        range_anchored_data(&v, &PotentialSpec::free(), anchor, &variant, 1.0, 0.05).unwrap();
    let (space, freq) = variant.cutoffs(1.0).unwrap();
    let want_u = freq
        .apply_pow(&space.apply_pow(v.u(), anchor, 1.0).unwrap(), anchor, 1.0)
        .unwrap();
    let err = data.u().sub(&want_u).unwrap().l2_norm();
    assert!(err < 1e-9, "free anchor should return the cutoff data, err {err}");
}

#[test]
fn zero_data_has_zero_weighted_norm() {
    let grid = Grid::new(3, 20.0, 8).unwrap();
    let state = FieldState::zeros(&grid);
    let n = state
        .norm(&NormSpec::HSigmaDelta { sigma: 0.0, delta: -2.0 })
        .unwrap();
    assert_eq!(n, 0.0);
}
