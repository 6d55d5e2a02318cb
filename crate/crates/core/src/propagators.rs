//! Exact free Klein-Gordon flow, half-wave propagators, and the dispersive
//! sup-norm decay probe.
//!
//! With `H0 = -Laplacian` and dispersion `omega(k) = sqrt(|k|^2 + 1)` the free
//! solution is
//!
//! ```text
//! u(t)    =  cos(t*omega) u(0) + sin(t*omega)/omega udot(0)
//! udot(t) = -omega*sin(t*omega) u(0) + cos(t*omega) udot(0)
//! ```
//!
//! applied mode by mode on the dual lattice, so the flow is exactly unitary
//! in the energy norm and the group law holds to rounding. The half-wave
//! operators `exp(+/- i t omega)` diagonalize it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, FieldState, Grid, NormSpec};
use crate::harness::fit::{fit_exponent, ExponentFit};

/// Mass-one dispersion relation `omega(k) = sqrt(|k|^2 + 1)`.
#[inline]
pub fn omega(k_sq: f64) -> f64 {
    (k_sq + 1.0).sqrt()
}

/// Per-mode multiplier tables of the free flow at one time.
///
/// Caches `cos(t*omega)`, `sin(t*omega)/omega`, and `omega*sin(t*omega)` per
/// lattice mode. Rebuilt for every requested `t`; reused only while stepping
/// with a fixed increment.
#[derive(Debug, Clone)]
pub struct FreeFlowCache {
    grid: Grid,
    time: f64,
    cos_tw: Vec<f64>,
    sinc_tw: Vec<f64>,
    omega_sin_tw: Vec<f64>,
}

impl FreeFlowCache {
    pub fn new(grid: &Grid, time: f64) -> Self {
        let sites = grid.site_count();
        let mut cos_tw = vec![0.0; sites];
        let mut sinc_tw = vec![0.0; sites];
        let mut omega_sin_tw = vec![0.0; sites];
        grid.for_each_freq(|idx, k| {
            let w = omega(k.iter().map(|v| v * v).sum());
            let (s, c) = (time * w).sin_cos();
            cos_tw[idx] = c;
            sinc_tw[idx] = s / w;
            omega_sin_tw[idx] = w * s;
        });
        Self { grid: grid.clone(), time, cos_tw, sinc_tw, omega_sin_tw }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Largest per-mode defect of `cos^2 + sin^2 = 1`.
    pub fn rotation_defect(&self) -> f64 {
        self.cos_tw
            .iter()
            .zip(&self.sinc_tw)
            .zip(&self.omega_sin_tw)
            .map(|((&c, &s_over_w), &w_s)| (c * c + s_over_w * w_s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Applies the cached flow to a state.
    pub fn apply(&self, state: &FieldState) -> Result<FieldState> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch("state grid differs from cache grid".into()));
        }
        if !state.is_finite() {
            return Err(Error::NonFinite("free flow input"));
        }
        let u_hat = state.u().to_spectral();
        let v_hat = state.udot().to_spectral();
        let mut new_u = u_hat.clone();
        let mut new_v = v_hat.clone();
        for idx in 0..self.cos_tw.len() {
            let a = u_hat.values()[idx];
            let b = v_hat.values()[idx];
            new_u.values_mut()[idx] = a * self.cos_tw[idx] + b * self.sinc_tw[idx];
            new_v.values_mut()[idx] = -a * self.omega_sin_tw[idx] + b * self.cos_tw[idx];
        }
        FieldState::new(new_u.to_physical(), new_v.to_physical())
    }
}

/// Evolves a state under the free equation for time `t` (either sign).
pub fn free_evolve(state: &FieldState, t: f64) -> Result<FieldState> {
    FreeFlowCache::new(state.grid(), t).apply(state)
}

/// Applies `exp(sign * i * t * omega(P))`.
pub fn half_wave_evolve(field: &Field, t: f64, sign: i8) -> Result<Field> {
    if !field.is_finite() {
        return Err(Error::NonFinite("half-wave input"));
    }
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    Ok(field.apply_spectral_multiplier(|k| {
        let w = omega(k.iter().map(|v| v * v).sum());
        Complex64::from_polar(1.0, s * t * w)
    }))
}

/// Free energy `||udot||^2 + ||grad u||^2 + ||u||^2`, the quantity the free
/// flow conserves exactly.
pub fn free_energy(state: &FieldState) -> Result<f64> {
    let h1 = state.u().norm(&NormSpec::HSigmaDelta { sigma: 1.0, delta: 0.0 })?;
    let l2 = state.udot().norm(&NormSpec::L2)?;
    Ok(h1 * h1 + l2 * l2)
}

/// Outcome of the dispersive decay probe: the log-log fit of
/// `t -> ||exp(i t omega) f||_inf` plus the sampled ratio against the
/// `t^(-n/2)` envelope with the `L^1` derivative weight.
#[derive(Debug, Clone)]
pub struct DispersiveDecay {
    pub fit: ExponentFit,
    /// `sup_t ||exp(it omega) f||_inf * t^(n/2) / ||<P>^((n+3)/2) f||_L1`.
    pub sup_ratio: f64,
    /// Ratio spread `sup/inf` over the sampled times; a bounded spread is
    /// the conformance signal, a widening one means the `L^1` weight does
    /// not control this datum (single modes).
    pub ratio_spread: f64,
    pub weight_l1: f64,
}

impl DispersiveDecay {
    /// True when the envelope ratio stayed bounded over the sweep.
    pub fn conforms(&self) -> bool {
        self.ratio_spread <= 4.0
    }
}

/// Measures the sup-norm decay rate of the half-wave flow on `field`.
///
/// Times must be `>= 1`, at least 4 of them, and within the caller's no-wrap
/// horizon. Intended for smooth localized data; non-localized data is
/// reported as non-conforming, not as an error.
pub fn dispersive_decay_probe(field: &Field, times: &[f64], horizon: f64) -> Result<DispersiveDecay> {
    if times.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "dispersive probe needs at least 4 times, got {}",
            times.len()
        )));
    }
    for &t in times {
        if t < 1.0 {
            return Err(Error::InvalidParameter(format!("probe time {t} is below 1")));
        }
        if t > horizon {
            return Err(Error::InvalidParameter(format!(
                "probe time {t} exceeds the validity horizon {horizon}"
            )));
        }
    }
    let n = field.grid().dim() as f64;
    let weight_l1 = field
        .apply_spectral_multiplier(|k| {
            let ksq: f64 = k.iter().map(|v| v * v).sum();
            Complex64::new((1.0 + ksq).powf(0.25 * (n + 3.0)), 0.0)
        })
        .norm(&NormSpec::L1)?;
    let mut samples = Vec::with_capacity(times.len());
    let mut ratios = Vec::with_capacity(times.len());
    for &t in times {
        let sup = half_wave_evolve(field, t, 1)?.norm(&NormSpec::LInf)?;
        samples.push((t, sup));
        ratios.push(sup * t.powf(0.5 * n) / weight_l1);
    }
    let fit = fit_exponent(&samples)?;
    let sup_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let inf_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(DispersiveDecay {
        fit,
        sup_ratio,
        ratio_spread: if inf_ratio > 0.0 { sup_ratio / inf_ratio } else { f64::INFINITY },
        weight_l1,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::grid::Grid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(grid: &Grid, seed: u64) -> FieldState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut u = Field::zeros(grid);
        let mut v = Field::zeros(grid);
        for z in u.values_mut() {
            *z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        for z in v.values_mut() {
            *z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        FieldState::new(u, v).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let grid = Grid::new(1, 10.0, 32).unwrap();
        let state = random_state(&grid, 1);
        let evolved = free_evolve(&state, 0.0).unwrap();
        let diff = evolved.sub(&state).unwrap();
        assert!(diff.u().l2_norm() < 1e-13);
        assert!(diff.udot().l2_norm() < 1e-13);
    }

    #[test]
    fn zero_state_stays_zero() {
        let grid = Grid::new(1, 10.0, 16).unwrap();
        let state = FieldState::zeros(&grid);
        let evolved = free_evolve(&state, 3.7).unwrap();
        assert_eq!(evolved.u().l2_norm(), 0.0);
        assert_eq!(evolved.udot().l2_norm(), 0.0);
    }

    #[test]
    fn plane_wave_follows_closed_form() {
        // u(0) = exp(ix), udot(0) = 0 solves u(t) = cos(t sqrt2) exp(ix),
        // udot(t) = -sqrt2 sin(t sqrt2) exp(ix).
        let grid = Grid::new(1, 2.0 * PI, 32).unwrap();
        let u0 = Field::from_fn(&grid, |x| (c(0.0, 1.0) * x[0]).exp());
        let state = FieldState::new(u0.clone(), Field::zeros(&grid)).unwrap();
        let t = 1.3;
        let w = 2.0f64.sqrt();
        let evolved = free_evolve(&state, t).unwrap();
        let want_u = u0.scaled(c((t * w).cos(), 0.0));
        let want_v = u0.scaled(c(-w * (t * w).sin(), 0.0));
        assert!(evolved.u().sub(&want_u).unwrap().l2_norm() < 1e-11);
        assert!(evolved.udot().sub(&want_v).unwrap().l2_norm() < 1e-11);
    }

    #[test]
    fn cache_rotation_defect_is_tiny() {
        let grid = Grid::new(2, 9.0, 16).unwrap();
        let cache = FreeFlowCache::new(&grid, 17.3);
        assert!(cache.rotation_defect() < 1e-12);
    }

    #[test]
    fn half_wave_single_mode_picks_up_phase() {
        let grid = Grid::new(1, 2.0 * PI, 32).unwrap();
        let f = Field::from_fn(&grid, |x| (c(0.0, 1.0) * x[0]).exp());
        let got = half_wave_evolve(&f, PI, 1).unwrap();
        let want = f.scaled(Complex64::from_polar(1.0, PI * 2.0f64.sqrt()));
        assert!(got.sub(&want).unwrap().l2_norm() < 1e-11);
    }

    #[test]
    fn half_wave_is_unitary_and_invertible() {
        let grid = Grid::new(1, 12.0, 64).unwrap();
        let state = random_state(&grid, 2);
        let f = state.u().clone();
        let fwd = half_wave_evolve(&f, 2.4, 1).unwrap();
        assert!((fwd.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let back = half_wave_evolve(&fwd, 2.4, -1).unwrap();
        assert!(back.sub(&f).unwrap().l2_norm() < 1e-10 * f.l2_norm());
    }

    #[test]
    fn free_flow_matches_half_wave_diagonalization() {
        let grid = Grid::new(1, 17.0, 64).unwrap();
        let state = random_state(&grid, 3);
        let t = 2.1;
        let evolved = free_evolve(&state, t).unwrap();

        let u_hat = state.u().to_spectral();
        let v_hat = state.udot().to_spectral();
        let mut plus = u_hat.clone();
        let mut minus = u_hat.clone();
        let grid2 = grid.clone();
        let freqs: Vec<f64> = {
            let mut ks = vec![0.0; grid2.site_count()];
            grid2.for_each_freq(|idx, k| ks[idx] = omega(k.iter().map(|v| v * v).sum()));
            ks
        };
        for idx in 0..grid.site_count() {
            let a = u_hat.values()[idx];
            let b = v_hat.values()[idx];
            let w = freqs[idx];
            plus.values_mut()[idx] = 0.5 * (a - c(0.0, 1.0) * b / w);
            minus.values_mut()[idx] = 0.5 * (a + c(0.0, 1.0) * b / w);
        }
        let plus_t = half_wave_evolve(&plus.to_physical(), t, 1).unwrap();
        let minus_t = half_wave_evolve(&minus.to_physical(), t, -1).unwrap();
        let recon = plus_t.add(&minus_t).unwrap();
        let err = recon.sub(&evolved.u().to_physical()).unwrap().l2_norm();
        assert!(err < 1e-10 * state.u().l2_norm(), "reconstruction error {err}");
    }

    #[test]
    fn dispersive_probe_rejects_bad_times() {
        let grid = Grid::new(1, 60.0, 256).unwrap();
        let f = Field::from_fn(&grid, |x| c((-0.5 * x[0] * x[0]).exp(), 0.0));
        assert!(dispersive_decay_probe(&f, &[1.0, 2.0, 4.0], 30.0).is_err());
        assert!(dispersive_decay_probe(&f, &[0.5, 2.0, 4.0, 8.0], 30.0).is_err());
        assert!(dispersive_decay_probe(&f, &[1.0, 2.0, 4.0, 40.0], 30.0).is_err());
    }

    #[test]
    fn gaussian_sup_norm_decays_at_half_power() {
        let grid = Grid::new(1, 100.0, 1024).unwrap();
        let f = Field::from_fn(&grid, |x| c((-0.5 * x[0] * x[0]).exp(), 0.0));
        let times = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let probe = dispersive_decay_probe(&f, &times, 45.0).unwrap();
        assert!(
            (probe.fit.slope + 0.5).abs() < 0.15,
            "slope {} should be near -0.5",
            probe.fit.slope
        );
        assert!(probe.conforms(), "ratio spread {}", probe.ratio_spread);
    }

    #[test]
    fn single_mode_is_flagged_non_conforming() {
        let grid = Grid::new(1, 100.0, 256).unwrap();
        let f = Field::from_fn(&grid, |x| (c(0.0, 1.0) * x[0]).exp());
        let times = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let probe = dispersive_decay_probe(&f, &times, 45.0).unwrap();
        assert!(!probe.conforms(), "flat sup norm must widen the ratio");
        assert!(probe.fit.slope.abs() < 0.05, "single mode has flat sup norm");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn group_law_and_time_reversal(seed in any::<u64>(), t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
            let grid = Grid::new(1, 11.0, 32).unwrap();
            let state = random_state(&grid, seed);
            let scale = state.u().l2_norm() + state.udot().l2_norm();

            let once = free_evolve(&free_evolve(&state, t1).unwrap(), t2).unwrap();
            let joint = free_evolve(&state, t1 + t2).unwrap();
            let d = once.sub(&joint).unwrap();
            prop_assert!(d.u().l2_norm() + d.udot().l2_norm() < 1e-10 * scale);

            let back = free_evolve(&free_evolve(&state, t1).unwrap(), -t1).unwrap();
            let r = back.sub(&state).unwrap();
            prop_assert!(r.u().l2_norm() + r.udot().l2_norm() < 1e-10 * scale);
        }

        #[test]
        fn free_energy_is_conserved(seed in any::<u64>(), t in 0.0f64..100.0) {
            let grid = Grid::new(1, 11.0, 32).unwrap();
            let state = random_state(&grid, seed);
            let e0 = free_energy(&state).unwrap();
            let e1 = free_energy(&free_evolve(&state, t).unwrap()).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-12 * e0.max(1.0));
        }
    }
}
