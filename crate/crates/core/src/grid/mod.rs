//! Periodic spatial discretization, spectral transforms, and the weighted
//! norms used by every estimate in the crate.
//!
//! The box is `[-L/2, L/2)^n` sampled with `N` points per axis, so the dual
//! lattice is `k in (2*pi/L) * {-N/2, ..., N/2 - 1}^n`. Fields are stored as
//! complex samples in row-major order (last axis fastest) and tagged with
//! their representation; a forward transform is the unitary DFT, so the
//! discrete `L^2` norm carries the same quadrature weight `h^(n/2)` in both
//! representations and Parseval holds to rounding.

mod fft;
pub mod norms;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use norms::NormSpec;

/// Hard cap on total lattice sites (`N^dim`).
pub const MAX_SITES: usize = 1 << 24;

/// Which meaning the sample vector of a [`Field`] currently has.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Point values `f(x)` on the spatial lattice.
    Physical,
    /// Unitary-DFT coefficients on the dual lattice, FFT ordering.
    Spectral,
}

/// Periodic sample lattice with its dual frequency lattice.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    extent: f64,
    points_per_dim: usize,
    spacing: f64,
    /// Per-axis frequencies in FFT order: `2*pi/L * (0, 1, ..., N/2-1, -N/2, ..., -1)`.
    freqs: Arc<Vec<f64>>,
    /// Per-axis coordinates `-L/2 + i*h`.
    coords: Arc<Vec<f64>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.extent == other.extent
            && self.points_per_dim == other.points_per_dim
    }
}

impl Grid {
    /// Builds a grid for the box `[-extent/2, extent/2)^dim`.
    ///
    /// `points_per_dim` must be even and at least 8, `dim` in `1..=3`, and the
    /// total site count is capped at [`MAX_SITES`].
    pub fn new(dim: usize, extent: f64, points_per_dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim must be 1, 2, or 3, got {dim}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!("extent must be positive, got {extent}")));
        }
        if points_per_dim < 8 || points_per_dim % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points_per_dim must be even and >= 8, got {points_per_dim}"
            )));
        }
        let sites = points_per_dim.checked_pow(dim as u32).filter(|&s| s <= MAX_SITES);
        if sites.is_none() {
            return Err(Error::InvalidGrid(format!(
                "{points_per_dim}^{dim} sites exceed the {MAX_SITES} site budget"
            )));
        }
        let n = points_per_dim;
        let spacing = extent / n as f64;
        let dk = 2.0 * std::f64::consts::PI / extent;
        let freqs = (0..n)
            .map(|i| {
                let j = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                dk * j as f64
            })
            .collect();
        let coords = (0..n).map(|i| -0.5 * extent + spacing * i as f64).collect();
        Ok(Self {
            dim,
            extent,
            points_per_dim,
            spacing,
            freqs: Arc::new(freqs),
            coords: Arc::new(coords),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn site_count(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    /// Quadrature weight `h^dim` of one lattice cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Per-axis frequency values in FFT order.
    pub fn axis_freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Per-axis coordinates of the box `[-L/2, L/2)`.
    pub fn axis_coords(&self) -> &[f64] {
        &self.coords
    }

    /// Largest frequency magnitude along one axis (the Nyquist row).
    pub fn max_axis_freq(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    /// Splits a flat site index into per-axis indices (row-major, last axis
    /// fastest). Only the first `dim` entries are meaningful.
    #[inline]
    pub fn decompose(&self, index: usize) -> [usize; 3] {
        let n = self.points_per_dim;
        let mut out = [0usize; 3];
        match self.dim {
            1 => out[0] = index,
            2 => {
                out[0] = index / n;
                out[1] = index % n;
            }
            _ => {
                out[0] = index / (n * n);
                let r = index % (n * n);
                out[1] = r / n;
                out[2] = r % n;
            }
        }
        out
    }

    /// Calls `f(flat_index, per_axis_values)` for every site, where the
    /// per-axis values are read from `table` (coordinates or frequencies).
    #[inline]
    fn for_each_site(&self, table: &[f64], mut f: impl FnMut(usize, &[f64])) {
        let n = self.points_per_dim;
        match self.dim {
            1 => {
                for (i, &v) in table.iter().enumerate() {
                    f(i, std::slice::from_ref(&v));
                }
            }
            2 => {
                let mut idx = 0;
                for i0 in 0..n {
                    let v0 = table[i0];
                    for i1 in 0..n {
                        f(idx, &[v0, table[i1]]);
                        idx += 1;
                    }
                }
            }
            _ => {
                let mut idx = 0;
                for i0 in 0..n {
                    let v0 = table[i0];
                    for i1 in 0..n {
                        let v1 = table[i1];
                        for i2 in 0..n {
                            f(idx, &[v0, v1, table[i2]]);
                            idx += 1;
                        }
                    }
                }
            }
        }
    }

    /// Iterates every site with its spatial coordinates.
    pub fn for_each_coord(&self, f: impl FnMut(usize, &[f64])) {
        self.for_each_site(&self.coords.clone(), f);
    }

    /// Iterates every site of the dual lattice with its frequency vector.
    pub fn for_each_freq(&self, f: impl FnMut(usize, &[f64])) {
        self.for_each_site(&self.freqs.clone(), f);
    }
}

/// One complex scalar field on a [`Grid`], tagged with its representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    repr: Representation,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            repr: Representation::Physical,
            values: vec![Complex64::new(0.0, 0.0); grid.site_count()],
        }
    }

    /// Samples `f(x)` on the lattice.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.site_count()];
        grid.for_each_coord(|idx, x| values[idx] = f(x));
        Self { grid: grid.clone(), repr: Representation::Physical, values }
    }

    /// Builds a spectral-representation field from `f(k)`.
    pub fn from_fn_spectral(grid: &Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); grid.site_count()];
        grid.for_each_freq(|idx, k| values[idx] = f(k));
        Self { grid: grid.clone(), repr: Representation::Spectral, values }
    }

    pub fn from_values(grid: &Grid, repr: Representation, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.site_count() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} sites",
                values.len(),
                grid.site_count()
            )));
        }
        Ok(Self { grid: grid.clone(), repr, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn expect_repr(&self, expected: Representation) -> Result<()> {
        if self.repr != expected {
            return Err(Error::RepresentationMismatch { expected, found: self.repr });
        }
        Ok(())
    }

    /// Unitary DFT. `Forward` maps physical samples to spectral coefficients,
    /// `Inverse` goes back; both preserve the lattice `L^2` norm.
    pub fn transform(&self, direction: fft::Direction) -> Result<Field> {
        let expected = match direction {
            fft::Direction::Forward => Representation::Physical,
            fft::Direction::Inverse => Representation::Spectral,
        };
        self.expect_repr(expected)?;
        let mut values = self.values.clone();
        fft::transform(
            &mut values,
            self.grid.dim(),
            self.grid.points_per_dim(),
            direction,
        );
        let repr = match direction {
            fft::Direction::Forward => Representation::Spectral,
            fft::Direction::Inverse => Representation::Physical,
        };
        Ok(Field { grid: self.grid.clone(), repr, values })
    }

    /// The field in spectral representation (no-op if already spectral).
    pub fn to_spectral(&self) -> Field {
        match self.repr {
            Representation::Spectral => self.clone(),
            Representation::Physical => self.transform(fft::Direction::Forward).expect("repr checked"),
        }
    }

    /// The field in physical representation (no-op if already physical).
    pub fn to_physical(&self) -> Field {
        match self.repr {
            Representation::Physical => self.clone(),
            Representation::Spectral => self.transform(fft::Direction::Inverse).expect("repr checked"),
        }
    }

    /// Multiplies by `m(k)` on the dual lattice and returns the result in the
    /// input's representation.
    pub fn apply_spectral_multiplier(&self, mut m: impl FnMut(&[f64]) -> Complex64) -> Field {
        let mut hat = self.to_spectral();
        let grid = hat.grid.clone();
        grid.for_each_freq(|idx, k| hat.values[idx] *= m(k));
        match self.repr {
            Representation::Spectral => hat,
            Representation::Physical => hat.to_physical(),
        }
    }

    /// Multiplies pointwise by `w(x)` on the spatial lattice; input must be
    /// physical (or is transformed there first), output is physical.
    pub fn apply_physical_weight(&self, mut w: impl FnMut(&[f64]) -> Complex64) -> Field {
        let mut phys = self.to_physical();
        let grid = phys.grid.clone();
        grid.for_each_coord(|idx, x| phys.values[idx] *= w(x));
        phys
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// `self - other`; requires matching grids and representations.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v -= w;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v += w;
        }
        Ok(out)
    }

    fn compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("field grids differ".into()));
        }
        if self.repr != other.repr {
            return Err(Error::RepresentationMismatch { expected: self.repr, found: other.repr });
        }
        Ok(())
    }

    /// Lattice inner product `h^n * sum conj(f) g` (fields must share grid
    /// and representation; unitarity makes the value representation-free).
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.compatible(other)?;
        let dot: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(dot * self.grid.cell_volume())
    }

    /// `max |Im f| / max |f|` over the lattice; the realness diagnostic for
    /// physical fields evolved from real data.
    pub fn max_imag_ratio(&self) -> f64 {
        let mut max_im: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for z in &self.values {
            max_im = max_im.max(z.im.abs());
            max_abs = max_abs.max(z.norm());
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_im / max_abs
        }
    }
}

/// The state pair `(u, du/dt)` of the second-order equation, the vector the
/// flow acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    u: Field,
    udot: Field,
}

impl FieldState {
    pub fn new(u: Field, udot: Field) -> Result<Self> {
        if u.grid() != udot.grid() {
            return Err(Error::GridMismatch("state components live on different grids".into()));
        }
        Ok(Self { u, udot })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { u: Field::zeros(grid), udot: Field::zeros(grid) }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn udot(&self) -> &Field {
        &self.udot
    }

    pub fn into_parts(self) -> (Field, Field) {
        (self.u, self.udot)
    }

    pub fn u_mut(&mut self) -> &mut Field {
        &mut self.u
    }

    pub fn udot_mut(&mut self) -> &mut Field {
        &mut self.udot
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.udot.is_finite()
    }

    pub fn sub(&self, other: &FieldState) -> Result<FieldState> {
        Ok(FieldState { u: self.u.sub(&other.u)?, udot: self.udot.sub(&other.udot)? })
    }

    pub fn add(&self, other: &FieldState) -> Result<FieldState> {
        Ok(FieldState { u: self.u.add(&other.u)?, udot: self.udot.add(&other.udot)? })
    }

    pub fn scaled(&self, c: Complex64) -> FieldState {
        FieldState { u: self.u.scaled(c), udot: self.udot.scaled(c) }
    }
}

pub use fft::Direction;
