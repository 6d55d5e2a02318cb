//! Experiment configuration: one JSON document describing the grid, initial
//! data, interaction, cutoff exponents, run horizon, probes, and outputs.
//! All defaults are materialized on load so the resolved config embedded in
//! a report replays byte-identically.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldState, Grid, Representation};
use crate::harness::fit::SlopeTarget;
use crate::interactions::{InteractionDecayVariant, PotentialSpec};
use crate::phase_space::{CommutatorKind, VelocityDirection};
use crate::propagators::omega;
use crate::scattering::ChannelVariant;

/// Stable labeled child-seed derivation (FNV-1a folded with the root), so
/// every stochastic stage draws from its own stream.
pub fn child_seed(root: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ root;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ (root.rotate_left(17))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridConfig {
    pub dim: usize,
    pub extent: f64,
    pub points_per_dim: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.extent, self.points_per_dim)
    }
}

/// Named initial-data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InitialDataFamily {
    /// `A cos(k0 x_1) exp(-|x - center|^2 / (2 radius^2))`; `k0 = 0` gives
    /// the plain bump.
    Gaussian {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        modulation_wavenumber: f64,
    },
    /// `A exp(i k . x) exp(-|x|^2 / (2 radius^2))`.
    PlaneWavePacket { amplitude: f64, radius: f64, wavenumber: Vec<f64> },
    /// Independent complex Gaussian spectral amplitudes below
    /// `max_wavenumber`, drawn from the labeled child stream of the root
    /// seed. Fills the whole box: evolution configs using it need the
    /// exploratory override.
    RandomBandLimited { amplitude: f64, max_wavenumber: f64 },
}

/// How the velocity component is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityInit {
    #[default]
    Zero,
    /// `udot = -i omega(P) u`, a pure one-sided wave.
    Outgoing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataConfig {
    #[serde(flatten)]
    pub family: InitialDataFamily,
    #[serde(default)]
    pub velocity: VelocityInit,
}

impl InitialDataConfig {
    /// Effective support radius used by the no-wrap validity check.
    pub fn data_radius(&self, grid: &Grid) -> f64 {
        match &self.family {
            InitialDataFamily::Gaussian { radius, center, .. } => {
                let c = center.iter().map(|v| v * v).sum::<f64>().sqrt();
                c + 4.0 * radius
            }
            InitialDataFamily::PlaneWavePacket { radius, .. } => 4.0 * radius,
            InitialDataFamily::RandomBandLimited { .. } => 0.5 * grid.extent(),
        }
    }

    pub fn build(&self, grid: &Grid, root_seed: u64) -> Result<FieldState> {
        let u = match &self.family {
            InitialDataFamily::Gaussian { amplitude, radius, center, modulation_wavenumber } => {
                if !center.is_empty() && center.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "initial data center has {} components on a {}-dimensional grid",
                        center.len(),
                        grid.dim()
                    )));
                }
                let (a, r, k0) = (*amplitude, *radius, *modulation_wavenumber);
                let center = center.clone();
                Field::from_fn(grid, move |x| {
                    let mut r2 = 0.0;
                    for (i, xi) in x.iter().enumerate() {
                        let d = xi - center.get(i).copied().unwrap_or(0.0);
                        r2 += d * d;
                    }
                    let env = a * (-r2 / (2.0 * r * r)).exp();
                    Complex64::new(env * (k0 * x[0]).cos(), 0.0)
                })
            }
            InitialDataFamily::PlaneWavePacket { amplitude, radius, wavenumber } => {
                if wavenumber.len() != grid.dim() {
                    return Err(Error::Config(format!(
                        "wavenumber has {} components on a {}-dimensional grid",
                        wavenumber.len(),
                        grid.dim()
                    )));
                }
                let (a, r) = (*amplitude, *radius);
                let k = wavenumber.clone();
                Field::from_fn(grid, move |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    let phase: f64 = x.iter().zip(&k).map(|(xi, ki)| xi * ki).sum();
                    Complex64::from_polar(a * (-r2 / (2.0 * r * r)).exp(), phase)
                })
            }
            InitialDataFamily::RandomBandLimited { amplitude, max_wavenumber } => {
                let mut rng = ChaCha8Rng::seed_from_u64(child_seed(root_seed, "initial_data"));
                let mut hat = Field::from_values(
                    grid,
                    Representation::Spectral,
                    vec![Complex64::new(0.0, 0.0); grid.site_count()],
                )?;
                let kmax = *max_wavenumber;
                let amp = *amplitude;
                grid.for_each_freq(|idx, k| {
                    let klen = k.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if klen <= kmax {
                        hat.values_mut()[idx] = Complex64::new(
                            amp * rng.gen_range(-1.0..1.0),
                            amp * rng.gen_range(-1.0..1.0),
                        );
                    }
                });
                hat.to_physical()
            }
        };
        let udot = match self.velocity {
            VelocityInit::Zero => Field::zeros(grid),
            VelocityInit::Outgoing => u
                .apply_spectral_multiplier(|k| {
                    Complex64::new(0.0, -omega(k.iter().map(|v| v * v).sum()))
                })
                .to_physical(),
        };
        FieldState::new(u, udot)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CutoffConfig {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub e: f64,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_width() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunConfig {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_stride")]
    pub checkpoint_stride: usize,
    #[serde(default = "default_dyadic_start")]
    pub dyadic_start: f64,
    #[serde(default = "default_monitor_stride")]
    pub monitor_stride: usize,
    #[serde(default = "default_guard")]
    pub guard_factor: f64,
}

fn default_stride() -> usize {
    0
}

fn default_dyadic_start() -> f64 {
    1.0
}

fn default_monitor_stride() -> usize {
    1
}

fn default_guard() -> f64 {
    1e3
}

impl RunConfig {
    pub fn dyadic_times(&self) -> Vec<f64> {
        crate::scattering::dyadic_times(self.dyadic_start, self.t_max)
    }
}

/// Which channel variant a wave-operator probe certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    LowFrequency,
    HighFrequency,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveOpProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    pub channel: ChannelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_delta: Option<f64>,
    #[serde(default = "default_tol_rel")]
    pub tol_abs_rel: f64,
    #[serde(default = "default_rho")]
    pub contraction_rho: f64,
}

fn default_true() -> bool {
    true
}

fn default_tol_rel() -> f64 {
    1e-3
}

fn default_rho() -> f64 {
    0.75
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersiveProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    /// Defaults to the run's dyadic times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    pub target: SlopeTarget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutatorProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    pub kind: CommutatorKind,
    pub alpha: f64,
    /// `b` for the high-frequency pairing, `beta` for the low-frequency one.
    pub other_exponent: f64,
    pub times: Vec<f64>,
    #[serde(default = "default_slope_tol")]
    pub slope_tolerance: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_slope_tol() -> f64 {
    0.15
}

fn default_iterations() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VelocityProbeConfig {
    #[serde(default)]
    pub required: bool,
    pub delta: f64,
    pub t: f64,
    /// Propagation times `a` to sweep.
    pub sweep: Vec<f64>,
    #[serde(default)]
    pub axis: usize,
    pub direction: VelocityDirection,
    /// Pass when the fitted decay slope in `a` is at most this (usually
    /// `-(delta/2 - 0.3)`).
    pub max_slope: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionDecayProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    #[serde(flatten)]
    pub variant: InteractionDecayVariant,
    /// Pass when the fitted `udot` slope is at most this.
    pub max_slope: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DuhamelProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    /// Residuals are compared at strides `coarse` and `coarse/2`.
    pub coarse_stride: usize,
    pub time: f64,
    #[serde(default = "default_ratio_window")]
    pub ratio_window: (f64, f64),
}

fn default_ratio_window() -> (f64, f64) {
    (3.0, 5.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposeProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    /// Growth cap on the fitted moment slope; defaults to `e + 0.2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_moment_slope: Option<f64>,
    #[serde(default = "default_negligible_floor")]
    pub negligible_floor: f64,
}

fn default_negligible_floor() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalDecayProbeConfig {
    #[serde(default = "default_true")]
    pub required: bool,
    /// Anchor time of the range construction; `t_max / 2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<f64>,
    pub max_slope: f64,
    /// Also run at `anchor / 2` and report the slope shift.
    #[serde(default = "default_true")]
    pub anchor_sensitivity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassNormProbeConfig {
    #[serde(default)]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProbesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersive: Option<DispersiveProbeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub commutator: Vec<CommutatorProbeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub velocity: Vec<VelocityProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave_op: Option<WaveOpProbeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interaction_decay: Vec<InteractionDecayProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duhamel: Option<DuhamelProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decompose: Option<DecomposeProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_decay: Option<LocalDecayProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_norms: Option<ClassNormProbeConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    /// Write binary snapshots at the dyadic times (plus the endpoint).
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub initial_data: InitialDataConfig,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub cutoffs: CutoffConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub probes: ProbesConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Permits exponents outside proven windows and disables the no-wrap
    /// validity check.
    #[serde(default)]
    pub exploratory: bool,
}

fn default_threads() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The channel variant selected by a wave-operator probe, wired to the
    /// shared cutoff block.
    pub fn channel_variant(&self, probe: &WaveOpProbeConfig) -> ChannelVariant {
        match probe.channel {
            ChannelKind::LowFrequency => ChannelVariant::LowFrequency {
                alpha: self.cutoffs.alpha,
                beta: self.cutoffs.beta,
            },
            ChannelKind::HighFrequency => ChannelVariant::HighFrequency {
                alpha: self.cutoffs.alpha,
                b: self.cutoffs.b,
                declared_delta: probe.declared_delta,
            },
        }
    }

    /// Structural and physical validation; every violation carries the
    /// offending field in its message.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build().map_err(|e| Error::Config(format!("grid: {e}")))?;
        self.potential
            .validate(grid.dim())
            .map_err(|e| Error::Config(format!("potential: {e}")))?;
        if !(self.run.dt > 0.0 && self.run.dt.is_finite()) {
            return Err(Error::Config(format!("run.dt must be positive, got {}", self.run.dt)));
        }
        if self.run.t_max < 0.0 {
            return Err(Error::Config(format!(
                "run.t_max must be nonnegative, got {}",
                self.run.t_max
            )));
        }
        if !(self.cutoffs.width > 0.0) {
            return Err(Error::Config(format!(
                "cutoffs.width must be positive, got {}",
                self.cutoffs.width
            )));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.run.t_max > 0.0 && !self.exploratory {
            let radius = self.initial_data.data_radius(&grid);
            let bound = 0.5 * grid.extent();
            if self.run.t_max + radius >= bound {
                return Err(Error::Config(format!(
                    "validity window violated: t_max + data_radius = {} + {radius} \
                     reaches L/2 = {bound}; enlarge the box or set exploratory",
                    self.run.t_max
                )));
            }
        }
        if let Some(wave) = &self.probes.wave_op {
            let variant = self.channel_variant(wave);
            if !variant.in_window(self.grid.dim) && !self.exploratory {
                return Err(Error::Config(format!(
                    "wave_op exponents {variant:?} sit outside the proven window \
                     in dimension {}; set exploratory to run anyway",
                    self.grid.dim
                )));
            }
        }
        if self.probes.local_decay.is_some() && self.grid.dim != 3 {
            return Err(Error::Config(
                "local_decay runs in dimension 3 at desk scale".into(),
            ));
        }
        if let Some(d) = &self.probes.duhamel {
            if d.coarse_stride < 2 || d.coarse_stride % 2 != 0 {
                return Err(Error::Config(
                    "duhamel.coarse_stride must be even and at least 2".into(),
                ));
            }
        }
        for (i, v) in self.probes.velocity.iter().enumerate() {
            if v.axis >= self.grid.dim {
                return Err(Error::Config(format!(
                    "velocity[{i}].axis {} out of range for dimension {}",
                    v.axis, self.grid.dim
                )));
            }
            if v.sweep.len() < 4 {
                return Err(Error::Config(format!(
                    "velocity[{i}].sweep needs at least 4 propagation times"
                )));
            }
        }
        for (i, c) in self.probes.commutator.iter().enumerate() {
            if c.times.len() < 4 {
                return Err(Error::Config(format!(
                    "commutator[{i}].times needs at least 4 entries"
                )));
            }
        }
        Ok(())
    }
}
