//! Shared dense-matrix oracles for the integration and acceptance suites.
//!
//! These deliberately avoid the library's own spectral path: operators are
//! assembled column by column into dense matrices, norms come from
//! nalgebra's SVD, and the evolution oracle is a scaling-and-squaring
//! matrix exponential. Small grids only.

use nalgebra::DMatrix;
use num_complex::Complex64;

use kglab_core::grid::{Field, FieldState, Grid, Representation};
use kglab_core::interactions::PotentialSpec;
use kglab_core::phase_space::LinearOperatorHandle;

/// Applies the handle to every basis vector, producing the dense matrix.
pub fn assemble_dense(op: &LinearOperatorHandle, grid: &Grid) -> Vec<Vec<Complex64>> {
    let m = grid.site_count();
    let mut cols = Vec::with_capacity(m);
    for j in 0..m {
        let mut values = vec![Complex64::new(0.0, 0.0); m];
        values[j] = Complex64::new(1.0, 0.0);
        let e_j = Field::from_values(grid, Representation::Physical, values).unwrap();
        let col = op.apply(&e_j).unwrap();
        cols.push(col.to_physical().values().to_vec());
    }
    cols
}

/// Largest singular value via the real embedding `[[X, -Y], [Y, X]]` of the
/// complex matrix `X + iY`, whose singular values are those of the complex
/// matrix (doubled in multiplicity).
pub fn dense_operator_norm(op: &LinearOperatorHandle, grid: &Grid) -> f64 {
    let cols = assemble_dense(op, grid);
    let m = cols.len();
    let mut real = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            real[(i, j)] = z.re;
            real[(i, j + m)] = -z.im;
            real[(i + m, j)] = z.im;
            real[(i + m, j + m)] = z.re;
        }
    }
    real.svd(false, false).singular_values[0]
}

/// Dense generator of the linearized flow: the state `(u, udot)` stacked as
/// one real vector of length `2m` obeys `d/dt w = -A w` with
/// `A = [[0, -I], [K + V, 0]]`, `K` the spectral `-Laplacian + 1`.
pub fn assemble_generator(grid: &Grid, spec: &PotentialSpec) -> DMatrix<f64> {
    let m = grid.site_count();
    let mut a = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        a[(i, m + i)] = -1.0;
    }
    // K columns through the library transform (the oracle checks the
    // stepper, not the FFT; the FFT itself is pinned by closed-form tests)
    for j in 0..m {
        let mut values = vec![Complex64::new(0.0, 0.0); m];
        values[j] = Complex64::new(1.0, 0.0);
        let e_j = Field::from_values(grid, Representation::Physical, values).unwrap();
        let k_col = e_j.apply_spectral_multiplier(|k| {
            let ksq: f64 = k.iter().map(|v| v * v).sum();
            Complex64::new(ksq + 1.0, 0.0)
        });
        for (i, z) in k_col.to_physical().values().iter().enumerate() {
            a[(m + i, j)] = z.re;
        }
    }
    // static potential on the diagonal
    let zero = FieldState::zeros(grid);
    let v = spec.effective_potential(&zero, 0.0);
    for (i, z) in v.to_physical().values().iter().enumerate() {
        a[(m + i, i)] += z.re;
    }
    a
}

/// Scaling-and-squaring Taylor exponential, accurate to rounding for the
/// modest norms of the desk-scale generators.
pub fn dense_matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.amax() * n as f64;
    let squarings = norm.log2().ceil().max(0.0) as u32 + 4;
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=24 {
        term = (&term * &scaled) / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Evolves a real state through the dense matrix exponential `exp(-T A)`.
pub fn dense_evolve(grid: &Grid, spec: &PotentialSpec, state: &FieldState, t: f64) -> FieldState {
    let a = assemble_generator(grid, spec);
    let exp = dense_matrix_exp(&(-t * a));
    let m = grid.site_count();
    let mut w_re = nalgebra::DVector::<f64>::zeros(2 * m);
    let mut w_im = nalgebra::DVector::<f64>::zeros(2 * m);
    for (i, z) in state.u().to_physical().values().iter().enumerate() {
        w_re[i] = z.re;
        w_im[i] = z.im;
    }
    for (i, z) in state.udot().to_physical().values().iter().enumerate() {
        w_re[m + i] = z.re;
        w_im[m + i] = z.im;
    }
    let out_re = &exp * w_re;
    let out_im = &exp * w_im;
    let mut u = vec![Complex64::new(0.0, 0.0); m];
    let mut udot = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..m {
        u[i] = Complex64::new(out_re[i], out_im[i]);
        udot[i] = Complex64::new(out_re[m + i], out_im[m + i]);
    }
    FieldState::new(
        Field::from_values(grid, Representation::Physical, u).unwrap(),
        Field::from_values(grid, Representation::Physical, udot).unwrap(),
    )
    .unwrap()
}
