//! Second-order process models: matrix spectral measures on a uniform
//! frequency grid, covariance sequences, and the quadrature/Fourier bridges
//! between them.
//!
//! One grid convention is used everywhere: `N` nodes (power of two) at
//! `omega_m = -pi + 2 pi m / N`, `m = 0..N-1`. Integrals over `[-pi, pi]`
//! are the periodic rectangle rule `(2 pi / N) * sum`, which is exact for
//! trigonometric polynomials of degree below `N` and spectrally accurate for
//! smooth periodic integrands. Discontinuous densities get O(1/N) accuracy;
//! tolerances downstream account for that.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::matrix::{ComplexMatrix, MatrixError};

/// Relative Frobenius asymmetry accepted for density/mass matrices.
const DENSITY_HERMITIAN_TOL: f64 = 1e-8;
/// Relative negative-eigenvalue slack accepted before a matrix is rejected
/// as not PSD.
const DENSITY_PSD_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid size {0} is not a power of two >= 8")]
    BadGridSize(usize),
    #[error("density has {got} nodes, grid has {want}")]
    DensityLength { got: usize, want: usize },
    #[error("matrix at node {node} is {got}x{got}, expected {dim}x{dim}")]
    BadDimension { node: usize, got: usize, dim: usize },
    #[error("density at node {node} is not Hermitian (relative asymmetry {deviation:.3e})")]
    NotHermitian { node: usize, deviation: f64 },
    #[error("density at node {node} is not PSD (eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemidefinite { node: usize, min_eigenvalue: f64 },
    #[error("atom frequency {0} outside (-pi, pi]")]
    AtomFrequencyOutOfRange(f64),
    #[error("empty covariance sequence")]
    EmptyCovariance,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Uniform grid `omega_m = -pi + 2 pi m / N` on `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    size: usize,
}

impl FrequencyGrid {
    pub const DEFAULT_SIZE: usize = 4096;

    pub fn new(size: usize) -> Result<Self, SpectralError> {
        if size < 8 || !size.is_power_of_two() {
            return Err(SpectralError::BadGridSize(size));
        }
        Ok(Self { size })
    }

    pub fn default_grid() -> Self {
        Self {
            size: Self::DEFAULT_SIZE,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        -PI + 2.0 * PI * m as f64 / self.size as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(|m| self.node(m))
    }

    /// The coarser grid whose nodes are every other node of this one.
    pub fn half(&self) -> Option<Self> {
        Self::new(self.size / 2).ok()
    }
}

/// `(2 pi / N) * sum` of scalar samples over the grid.
pub fn integrate_scalar(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    values.iter().sum::<f64>() * (2.0 * PI / n)
}

/// `(2 pi / N) * sum` of matrix samples over the grid.
pub fn integrate_matrix(values: &[ComplexMatrix]) -> ComplexMatrix {
    assert!(!values.is_empty());
    let mut acc = ComplexMatrix::zeros(values[0].rows(), values[0].cols());
    for v in values {
        acc = acc.add(v);
    }
    acc.scale_re(2.0 * PI / values.len() as f64)
}

/// Lag window applied by [`measure_from_covariance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    Rectangular,
    /// Triangular window `1 - h/H`; guarantees a PSD estimate before any
    /// clamping.
    Bartlett,
}

impl Taper {
    pub fn weight(&self, lag: usize, max_lag: usize) -> f64 {
        match self {
            Taper::Rectangular => 1.0,
            Taper::Bartlett => {
                if max_lag == 0 {
                    1.0
                } else {
                    1.0 - lag as f64 / max_lag as f64
                }
            }
        }
    }
}

/// Discrete spectral mass at a single frequency.
#[derive(Debug, Clone)]
pub struct SpectralAtom {
    pub omega: f64,
    pub mass: ComplexMatrix,
}

/// Spectral measure of a d-dimensional weakly stationary process: an
/// absolutely continuous part sampled on the grid plus discrete atoms. Atoms
/// are kept exact and never smeared onto the grid. A declared (not detected)
/// flag records a continuous-singular component.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    dim: usize,
    grid: FrequencyGrid,
    density: Vec<ComplexMatrix>,
    atoms: Vec<SpectralAtom>,
    singular_continuous: bool,
}

impl SpectralMeasure {
    pub fn new(
        grid: FrequencyGrid,
        dim: usize,
        density: Vec<ComplexMatrix>,
        atoms: Vec<SpectralAtom>,
        singular_continuous: bool,
    ) -> Result<Self, SpectralError> {
        if density.len() != grid.size() {
            return Err(SpectralError::DensityLength {
                got: density.len(),
                want: grid.size(),
            });
        }
        let mut checked = Vec::with_capacity(density.len());
        for (node, f) in density.into_iter().enumerate() {
            checked.push(validate_density_matrix(f, dim, node)?);
        }
        for atom in &atoms {
            if !(atom.omega > -PI && atom.omega <= PI) {
                return Err(SpectralError::AtomFrequencyOutOfRange(atom.omega));
            }
            validate_density_matrix(atom.mass.clone(), dim, usize::MAX)?;
        }
        Ok(Self {
            dim,
            grid,
            density: checked,
            atoms,
            singular_continuous,
        })
    }

    /// Sample a density function on the grid. The function must return
    /// Hermitian PSD `dim x dim` matrices.
    pub fn from_density_fn(
        grid: FrequencyGrid,
        dim: usize,
        f: impl Fn(f64) -> ComplexMatrix,
    ) -> Result<Self, SpectralError> {
        let density = grid.nodes().map(f).collect();
        Self::new(grid, dim, density, Vec::new(), false)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn density(&self) -> &[ComplexMatrix] {
        &self.density
    }

    pub fn density_at(&self, node: usize) -> &ComplexMatrix {
        &self.density[node]
    }

    pub fn atoms(&self) -> &[SpectralAtom] {
        &self.atoms
    }

    pub fn singular_continuous(&self) -> bool {
        self.singular_continuous
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    pub fn with_atoms(mut self, atoms: Vec<SpectralAtom>) -> Result<Self, SpectralError> {
        for atom in &atoms {
            if !(atom.omega > -PI && atom.omega <= PI) {
                return Err(SpectralError::AtomFrequencyOutOfRange(atom.omega));
            }
        }
        self.atoms = atoms;
        Ok(self)
    }

    pub fn with_singular_continuous(mut self, flag: bool) -> Self {
        self.singular_continuous = flag;
        self
    }

    /// Total mass `tr C(0) = integral of tr f + sum of atom traces`.
    pub fn trace_mass(&self) -> f64 {
        let density_part =
            integrate_scalar(&self.density.iter().map(|f| f.trace().re).collect::<Vec<_>>());
        let atom_part: f64 = self.atoms.iter().map(|a| a.mass.trace().re).sum();
        density_part + atom_part
    }

    /// The absolutely continuous part alone (atoms and flags dropped).
    pub fn absolutely_continuous_part(&self) -> Self {
        Self {
            dim: self.dim,
            grid: self.grid,
            density: self.density.clone(),
            atoms: Vec::new(),
            singular_continuous: false,
        }
    }

    /// Restriction to the half grid (every other node). Used for refinement
    /// diagnostics on sampled models.
    pub fn downsample_half(&self) -> Option<Self> {
        let grid = self.grid.half()?;
        let density = self.density.iter().step_by(2).cloned().collect();
        Some(Self {
            dim: self.dim,
            grid,
            density,
            atoms: self.atoms.clone(),
            singular_continuous: self.singular_continuous,
        })
    }

    /// Density and atoms scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            grid: self.grid,
            density: self.density.iter().map(|f| f.scale_re(c)).collect(),
            atoms: self
                .atoms
                .iter()
                .map(|a| SpectralAtom {
                    omega: a.omega,
                    mass: a.mass.scale_re(c),
                })
                .collect(),
            singular_continuous: self.singular_continuous,
        }
    }
}

fn validate_density_matrix(
    f: ComplexMatrix,
    dim: usize,
    node: usize,
) -> Result<ComplexMatrix, SpectralError> {
    if f.rows() != dim || f.cols() != dim {
        return Err(SpectralError::BadDimension {
            node,
            got: f.rows(),
            dim,
        });
    }
    let deviation = f.hermitian_deviation();
    if deviation > DENSITY_HERMITIAN_TOL {
        return Err(SpectralError::NotHermitian { node, deviation });
    }
    let herm = f.hermitian_part();
    let eig = herm.eig_hermitian()?;
    let scale = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if let Some(min) = eig.eigenvalues.last() {
        if *min < -DENSITY_PSD_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(SpectralError::NotPositiveSemidefinite {
                node,
                min_eigenvalue: *min,
            });
        }
    }
    Ok(herm)
}

/// Matrix covariance function on lags `-H..H`, stored for `h >= 0` with
/// `C(-h) = C(h)*` by construction.
#[derive(Debug, Clone)]
pub struct CovarianceSequence {
    dim: usize,
    mats: Vec<ComplexMatrix>,
}

impl CovarianceSequence {
    /// `mats[h]` is `C(h)` for `h = 0..=H`.
    pub fn new(dim: usize, mats: Vec<ComplexMatrix>) -> Result<Self, SpectralError> {
        if mats.is_empty() {
            return Err(SpectralError::EmptyCovariance);
        }
        for (h, m) in mats.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(SpectralError::BadDimension {
                    node: h,
                    got: m.rows(),
                    dim,
                });
            }
        }
        Ok(Self { dim, mats })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_lag(&self) -> usize {
        self.mats.len() - 1
    }

    /// `C(h)`, mirroring `C(-h) = C(h)*`.
    pub fn at(&self, h: i64) -> ComplexMatrix {
        let idx = h.unsigned_abs() as usize;
        if h >= 0 {
            self.mats[idx].clone()
        } else {
            self.mats[idx].adjoint()
        }
    }

    pub fn lag_matrices(&self) -> &[ComplexMatrix] {
        &self.mats
    }

    /// Principal submatrix sequence for the given channel indices.
    pub fn select_channels(&self, idx: &[usize]) -> Self {
        Self {
            dim: idx.len(),
            mats: self.mats.iter().map(|m| m.select(idx, idx)).collect(),
        }
    }
}

/// `C(h) = (2 pi / N) sum_m e^{i h omega_m} f(omega_m) + sum_j e^{i h omega_j} M_j`
/// for `h = 0..=max_lag`. Hermitian symmetry holds by construction through
/// the `C(-h) = C(h)*` mirror.
pub fn covariance_from_measure(measure: &SpectralMeasure, max_lag: usize) -> CovarianceSequence {
    let n = measure.grid().size();
    let weight = 2.0 * PI / n as f64;
    let d = measure.dim();
    let mut mats = Vec::with_capacity(max_lag + 1);
    for h in 0..=max_lag as i64 {
        let mut acc = ComplexMatrix::zeros(d, d);
        for (m, f) in measure.density().iter().enumerate() {
            let phase = Complex64::from_polar(weight, h as f64 * measure.grid().node(m));
            acc = acc.add(&f.scale(phase));
        }
        for atom in measure.atoms() {
            let phase = Complex64::from_polar(1.0, h as f64 * atom.omega);
            acc = acc.add(&atom.mass.scale(phase));
        }
        mats.push(acc);
    }
    CovarianceSequence::new(d, mats).expect("covariance from a valid measure")
}

/// Lag-window estimate
/// `f(omega_m) = (1/2pi) sum_{|h|<=H} taper(|h|/H) C(h) e^{-i h omega_m}`,
/// PSD-projected node by node (negative eigenvalues clamped to zero).
///
/// `H = 0` is a degenerate window, allowed: it returns the constant density
/// `C(0)/2pi`.
pub fn measure_from_covariance(
    cov: &CovarianceSequence,
    grid: FrequencyGrid,
    taper: Taper,
) -> Result<SpectralMeasure, SpectralError> {
    let d = cov.dim();
    let h_max = cov.max_lag();
    let c0 = cov.at(0).hermitian_part();
    let mut density = Vec::with_capacity(grid.size());
    for omega in grid.nodes() {
        let mut acc = c0.scale_re(taper.weight(0, h_max));
        for h in 1..=h_max {
            let w = taper.weight(h, h_max);
            if w == 0.0 {
                continue;
            }
            let ch = cov.at(h as i64);
            // C(h) e^{-i h w} plus its adjoint keeps the sum Hermitian exactly.
            let term = ch.scale(Complex64::from_polar(w, -(h as f64) * omega));
            acc = acc.add(&term).add(&term.adjoint());
        }
        acc = acc.scale_re(1.0 / (2.0 * PI));
        density.push(psd_project(&acc)?);
    }
    SpectralMeasure::new(grid, d, density, Vec::new(), false)
}

/// Clamp negative eigenvalues to zero and reconstruct.
fn psd_project(m: &ComplexMatrix) -> Result<ComplexMatrix, SpectralError> {
    let eig = m.hermitian_part().eig_hermitian()?;
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(m.hermitian_part());
    }
    let d = m.rows();
    let v = &eig.eigenvectors;
    let mut out = ComplexMatrix::zeros(d, d);
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam <= 0.0 {
            continue;
        }
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += v[(i, k)] * v[(j, k)].conj() * *lam;
            }
        }
    }
    Ok(out)
}

/// Fourier coefficients of grid samples:
/// `c(j) = (1/N) sum_m x_m e^{i j omega_m}` for `j = -N/2 .. N/2 - 1`,
/// computed by FFT. Entry `k` of the result holds `c(k - N/2)`.
pub fn fourier_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    debug_assert!(n.is_power_of_two());
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    // buf[k] = sum_m x_m e^{+2 pi i k m / N}; c(j) = (-1)^j buf[j mod N] / N.
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for (k, slot) in out.iter_mut().enumerate() {
        let j = k as i64 - (n / 2) as i64;
        let idx = j.rem_euclid(n as i64) as usize;
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *slot = buf[idx] * (sign * scale);
    }
    out
}

/// Signed index for entry `k` of a [`fourier_coefficients`] result of
/// length `n`.
pub fn coefficient_index(k: usize, n: usize) -> i64 {
    k as i64 - (n / 2) as i64
}

/// Evaluate `sum_j c(j) e^{-i j omega_m}` on the grid from coefficients in
/// [`fourier_coefficients`] layout (entry `k` is `c(k - N/2)`).
pub fn evaluate_fourier_series(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    debug_assert!(n.is_power_of_two());
    // sum_j c(j) e^{-i j omega_m} = sum_idx a_idx e^{-2 pi i idx m / N} with
    // a_{j mod N} = (-1)^j c(j).
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, &cjk) in coeffs.iter().enumerate() {
        let j = k as i64 - (n / 2) as i64;
        let idx = j.rem_euclid(n as i64) as usize;
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[idx] = cjk * sign;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}
