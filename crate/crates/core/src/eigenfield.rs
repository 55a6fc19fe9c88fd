//! Per-frequency eigenstructure of a spectral density: decomposition into an
//! eigenvalue field and an eigenvector field, gauge alignment of the
//! eigenvector phases across the grid, Fourier analysis of the aligned field
//! (the one-sidedness diagnostic), scalar outer factorization of eigenvalue
//! channels by the cepstral method, and assembly of the candidate spectral
//! factor `phi(omega) = U(omega) D(omega)`.
//!
//! Eigenvectors of a density are only determined up to a unit phase per
//! channel (more at eigenvalue ties); whether some choice of phases makes
//! the field one-sided is exactly what the alignment strategies probe. The
//! eigenvalues and the channel projectors `u_k u_k*` are gauge-invariant;
//! the negative-tail energy of the Fourier series is gauge-dependent by
//! design and is always reported with its gauge label.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::matrix::{ComplexMatrix, MatrixError};
use crate::spectral::{
    coefficient_index, evaluate_fourier_series, fourier_coefficients, FrequencyGrid,
    SpectralMeasure,
};

/// Default relative rank threshold: eigenvalues below `rank_tol * max`
/// (max over the whole grid) count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default one-sidedness threshold on the negative-tail energy fraction.
pub const DEFAULT_ONE_SIDED_TOL: f64 = 1e-6;
/// Eigenvalues closer than this (relative to the node scale) are treated as
/// tied and kept in solver position order, so channel identity does not
/// flip from node to node inside a degenerate eigenspace.
const TIE_TOL: f64 = 1e-8;
/// Adjacent-node eigenvector overlaps below this abort a continuity sweep.
const COLLAPSE_TOL: f64 = 1e-8;
/// Eigenvalue floor below which a channel cannot be log-factored.
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum EigenFieldError {
    #[error("rank is not constant across the grid (ranks {distinct:?})")]
    RankNotConstant {
        distinct: Vec<usize>,
        field: Box<EigenField>,
    },
    #[error(
        "eigenvector channel {channel} collapses between nodes {node} and {}: overlap {overlap:.3e}",
        node + 1
    )]
    ChannelCollapse {
        channel: usize,
        node: usize,
        overlap: f64,
    },
    #[error("eigenvalue {value:.3e} at node {node} admits no log factorization")]
    LogDivergence { node: usize, value: f64 },
    #[error("expected {expected} scalar factors, got {got}")]
    ChannelCountMismatch { expected: usize, got: usize },
    #[error("vectors at node {node} are not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { node: usize, deviation: f64 },
    #[error("field has no channels")]
    EmptyField,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Phase-fixing strategy for the eigenvector field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeStrategy {
    /// Descending-sort output as produced, no phase fixing.
    Raw,
    /// Make the largest-modulus component of each channel real positive at
    /// the first node.
    AnchorReal,
    /// Sweep left to right, rotating each node's channel by the phase of its
    /// inner product with the previous node.
    PhaseContinuity,
    /// The default pipeline: anchor at the first node, then sweep.
    AnchorRealThenContinuity,
    /// Field supplied in closed form by a model definition.
    Annotated,
}

impl GaugeStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            GaugeStrategy::Raw => "raw",
            GaugeStrategy::AnchorReal => "anchor_real",
            GaugeStrategy::PhaseContinuity => "phase_continuity",
            GaugeStrategy::AnchorRealThenContinuity => "anchor_real+phase_continuity",
            GaugeStrategy::Annotated => "annotated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(GaugeStrategy::Raw),
            "anchor_real" | "anchor" => Some(GaugeStrategy::AnchorReal),
            "phase_continuity" | "continuity" => Some(GaugeStrategy::PhaseContinuity),
            "anchor_real+phase_continuity" | "anchor-continuity" | "default" => {
                Some(GaugeStrategy::AnchorRealThenContinuity)
            }
            _ => None,
        }
    }
}

impl std::fmt::Display for GaugeStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Ordered eigenvalues and gauge-carrying eigenvector matrices of a density,
/// node by node. Stores `channels` columns, which exceeds the detected
/// `rank` when the per-node rank varies (the extra channels carry the
/// eigenvalues that vanish on part of the grid, so `U L U*` still
/// reconstructs the density everywhere).
#[derive(Debug, Clone)]
pub struct EigenField {
    dim: usize,
    rank: usize,
    channels: usize,
    grid: FrequencyGrid,
    /// `lambdas[node][channel]`, descending per node up to tie order.
    lambdas: Vec<Vec<f64>>,
    /// One `dim x channels` matrix per node; empty when `channels == 0`.
    vectors: Vec<ComplexMatrix>,
    gauge: GaugeStrategy,
    rank_profile: Vec<usize>,
    rank_tol: f64,
    lambda_scale: f64,
}

impl EigenField {
    /// Eigendecompose the density part of a measure node by node. The
    /// detected rank is the count of eigenvalues above
    /// `rank_tol * (global max eigenvalue)` at the median node; an error
    /// carrying the full field is returned when that count varies across
    /// nodes. Atoms, if any, are ignored here (the classifier handles them
    /// separately).
    pub fn decompose(
        measure: &SpectralMeasure,
        rank_tol: f64,
    ) -> Result<EigenField, EigenFieldError> {
        let (field, constant) = Self::decompose_lenient(measure, rank_tol)?;
        if constant {
            Ok(field)
        } else {
            let mut distinct: Vec<usize> = field.rank_profile.clone();
            distinct.sort_unstable();
            distinct.dedup();
            Err(EigenFieldError::RankNotConstant {
                distinct,
                field: Box::new(field),
            })
        }
    }

    /// Like [`EigenField::decompose`] but always returns the field, plus a
    /// flag telling whether the per-node rank is constant.
    pub fn decompose_lenient(
        measure: &SpectralMeasure,
        rank_tol: f64,
    ) -> Result<(EigenField, bool), EigenFieldError> {
        let n = measure.grid().size();
        let d = measure.dim();
        let mut all_values: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut all_vectors: Vec<ComplexMatrix> = Vec::with_capacity(n);

        for f in measure.density() {
            let eig = f.eig_hermitian()?;
            let mut idx: Vec<usize> = (0..d).collect();
            // Regroup near-ties by solver position so degenerate channels
            // keep a stable identity across nodes.
            let scale = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
            let tol = TIE_TOL * scale;
            let mut start = 0;
            while start < d {
                let mut end = start + 1;
                while end < d && (eig.eigenvalues[end - 1] - eig.eigenvalues[end]).abs() <= tol {
                    end += 1;
                }
                idx[start..end].sort_by_key(|&k| eig.source_positions[k]);
                start = end;
            }
            let values: Vec<f64> = idx.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
            let vectors = ComplexMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, idx[j])]);
            all_values.push(values);
            all_vectors.push(vectors);
        }

        let lambda_scale = all_values
            .iter()
            .flat_map(|v| v.iter().cloned())
            .fold(0.0, f64::max);
        let threshold = rank_tol * lambda_scale;
        let rank_profile: Vec<usize> = all_values
            .iter()
            .map(|v| v.iter().filter(|&&l| l > threshold).count())
            .collect();
        let mut sorted = rank_profile.clone();
        sorted.sort_unstable();
        let rank = sorted[n / 2];
        let channels = sorted[n - 1];
        let constant = rank_profile.iter().all(|&r| r == rank);

        let (lambdas, vectors) = if channels == 0 {
            (vec![Vec::new(); n], Vec::new())
        } else {
            let lambdas = all_values
                .into_iter()
                .map(|v| v[..channels].to_vec())
                .collect();
            let vectors = all_vectors
                .into_iter()
                .map(|u| {
                    let cols: Vec<usize> = (0..channels).collect();
                    let rows: Vec<usize> = (0..d).collect();
                    u.select(&rows, &cols)
                })
                .collect();
            (lambdas, vectors)
        };

        Ok((
            EigenField {
                dim: d,
                rank,
                channels,
                grid: measure.grid(),
                lambdas,
                vectors,
                gauge: GaugeStrategy::Raw,
                rank_profile,
                rank_tol,
                lambda_scale,
            },
            constant,
        ))
    }

    /// Build a field from explicit eigenvalues and eigenvector matrices.
    /// Columns must be orthonormal at every node.
    pub fn from_parts(
        grid: FrequencyGrid,
        dim: usize,
        lambdas: Vec<Vec<f64>>,
        vectors: Vec<ComplexMatrix>,
        gauge: GaugeStrategy,
    ) -> Result<Self, EigenFieldError> {
        let n = grid.size();
        assert_eq!(lambdas.len(), n);
        assert_eq!(vectors.len(), n);
        let channels = vectors.first().map_or(0, ComplexMatrix::cols);
        if channels == 0 {
            return Err(EigenFieldError::EmptyField);
        }
        for (node, u) in vectors.iter().enumerate() {
            let gram = u.adjoint().mul(u);
            let deviation = gram
                .sub(&ComplexMatrix::identity(channels))
                .frobenius_norm();
            if deviation > 1e-8 {
                return Err(EigenFieldError::NotOrthonormal { node, deviation });
            }
        }
        let lambda_scale = lambdas
            .iter()
            .flat_map(|v| v.iter().cloned())
            .fold(0.0, f64::max);
        Ok(EigenField {
            dim,
            rank: channels,
            channels,
            grid,
            rank_profile: vec![channels; n],
            lambdas,
            vectors,
            gauge,
            rank_tol: DEFAULT_RANK_TOL,
            lambda_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Detected rank (count above threshold at the median node).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Stored channel count; exceeds `rank` on rank-varying densities.
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn gauge(&self) -> GaugeStrategy {
        self.gauge
    }

    pub fn rank_profile(&self) -> &[usize] {
        &self.rank_profile
    }

    pub fn rank_constant(&self) -> bool {
        self.rank_profile.iter().all(|&r| r == self.rank)
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Global max eigenvalue over the grid.
    pub fn lambda_scale(&self) -> f64 {
        self.lambda_scale
    }

    pub fn lambdas_at(&self, node: usize) -> &[f64] {
        &self.lambdas[node]
    }

    /// Samples of one eigenvalue channel over the grid.
    pub fn lambda_channel(&self, channel: usize) -> Vec<f64> {
        self.lambdas.iter().map(|v| v[channel]).collect()
    }

    pub fn vectors_at(&self, node: usize) -> &ComplexMatrix {
        &self.vectors[node]
    }

    /// `U L U*` at a node (the density restricted to its numerical range).
    pub fn density_node(&self, node: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        if self.channels == 0 {
            return out;
        }
        let u = &self.vectors[node];
        for (k, lam) in self.lambdas[node].iter().enumerate() {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out[(i, j)] += u[(i, k)] * u[(j, k)].conj() * *lam;
                }
            }
        }
        out
    }

    /// Field restricted to the leading `k` channels.
    pub fn truncate_channels(&self, k: usize) -> EigenField {
        assert!(k >= 1 && k <= self.channels);
        let cols: Vec<usize> = (0..k).collect();
        EigenField {
            dim: self.dim,
            rank: self.rank.min(k),
            channels: k,
            grid: self.grid,
            lambdas: self.lambdas.iter().map(|v| v[..k].to_vec()).collect(),
            vectors: self
                .vectors
                .iter()
                .map(|u| u.select(&(0..self.dim).collect::<Vec<_>>(), &cols))
                .collect(),
            gauge: self.gauge,
            rank_profile: self.rank_profile.iter().map(|&r| r.min(k)).collect(),
            rank_tol: self.rank_tol,
            lambda_scale: self.lambda_scale,
        }
    }

    /// Field restricted to the half grid (every other node).
    pub fn downsample_half(&self) -> Option<EigenField> {
        let grid = self.grid.half()?;
        Some(EigenField {
            dim: self.dim,
            rank: self.rank,
            channels: self.channels,
            grid,
            lambdas: self.lambdas.iter().step_by(2).cloned().collect(),
            vectors: if self.vectors.is_empty() {
                Vec::new()
            } else {
                self.vectors.iter().step_by(2).cloned().collect()
            },
            gauge: self.gauge,
            rank_profile: self.rank_profile.iter().step_by(2).cloned().collect(),
            rank_tol: self.rank_tol,
            lambda_scale: self.lambda_scale,
        })
    }

    /// Re-phase the eigenvector field with the given strategy. Eigenvalues
    /// and channel projectors are untouched.
    pub fn align_gauge(&self, strategy: GaugeStrategy) -> Result<EigenField, EigenFieldError> {
        self.align_gauge_leading(strategy, self.channels)
    }

    /// Re-phase only the leading `k` channels; the rest keep their phases.
    /// Useful when trailing channels carry vanishing eigenvalues whose
    /// eigenvector directions are not meaningful.
    pub fn align_gauge_leading(
        &self,
        strategy: GaugeStrategy,
        k: usize,
    ) -> Result<EigenField, EigenFieldError> {
        let k = k.min(self.channels);
        let mut out = self.clone();
        out.gauge = strategy;
        if k == 0 {
            return Ok(out);
        }
        match strategy {
            GaugeStrategy::Raw | GaugeStrategy::Annotated => {}
            GaugeStrategy::AnchorReal => anchor_real(&mut out.vectors, self.dim, k),
            GaugeStrategy::PhaseContinuity => continuity_sweep(&mut out.vectors, self.dim, k)?,
            GaugeStrategy::AnchorRealThenContinuity => {
                anchor_real(&mut out.vectors, self.dim, k);
                continuity_sweep(&mut out.vectors, self.dim, k)?;
            }
        }
        Ok(out)
    }

    /// Fourier coefficients `psi(j) = (1/N) sum_m U(omega_m) e^{i j omega_m}`
    /// of the eigenvector field, with Parseval bookkeeping and the
    /// negative-tail energy fraction.
    pub fn fourier(&self) -> FourierSeries {
        let n = self.grid.size();
        let d = self.dim;
        let ch = self.channels;
        let mut coeffs = vec![ComplexMatrix::zeros(d.max(1), ch.max(1)); n];
        if ch > 0 {
            for i in 0..d {
                for j in 0..ch {
                    let samples: Vec<Complex64> =
                        self.vectors.iter().map(|u| u[(i, j)]).collect();
                    for (k, c) in fourier_coefficients(&samples).into_iter().enumerate() {
                        coeffs[k][(i, j)] = c;
                    }
                }
            }
        }
        let mut total = 0.0;
        let mut negative = 0.0;
        for (k, psi) in coeffs.iter().enumerate() {
            let e: f64 = psi.data().iter().map(|z| z.norm_sqr()).sum();
            total += e;
            if coefficient_index(k, n) < 0 {
                negative += e;
            }
        }
        FourierSeries {
            dim: d,
            channels: ch,
            n,
            coeffs,
            total_energy: total,
            negative_tail_energy: if total > 0.0 { negative / total } else { 0.0 },
            gauge: self.gauge,
        }
    }

    /// Mean squared Frobenius norm of the field over nodes; the Parseval
    /// counterpart of the Fourier series' total energy.
    pub fn mean_square_norm(&self) -> f64 {
        if self.channels == 0 {
            return 0.0;
        }
        self.vectors
            .iter()
            .map(|u| u.data().iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / self.grid.size() as f64
    }
}

fn anchor_real(vectors: &mut [ComplexMatrix], dim: usize, channels: usize) {
    for j in 0..channels {
        let first = &vectors[0];
        let (mut best_i, mut best_mag) = (0, 0.0);
        for i in 0..dim {
            let mag = first[(i, j)].norm();
            if mag > best_mag {
                best_i = i;
                best_mag = mag;
            }
        }
        if best_mag == 0.0 {
            continue;
        }
        let phase = first[(best_i, j)] / best_mag;
        let rot = phase.conj();
        for i in 0..dim {
            let v = vectors[0][(i, j)];
            vectors[0][(i, j)] = v * rot;
        }
    }
}

fn continuity_sweep(
    vectors: &mut [ComplexMatrix],
    dim: usize,
    channels: usize,
) -> Result<(), EigenFieldError> {
    for j in 0..channels {
        for m in 0..vectors.len() - 1 {
            let mut inner = Complex64::new(0.0, 0.0);
            for i in 0..dim {
                inner += vectors[m][(i, j)].conj() * vectors[m + 1][(i, j)];
            }
            let overlap = inner.norm();
            if overlap < COLLAPSE_TOL {
                return Err(EigenFieldError::ChannelCollapse {
                    channel: j,
                    node: m,
                    overlap,
                });
            }
            let rot = inner.conj() / overlap;
            for i in 0..dim {
                let v = vectors[m + 1][(i, j)];
                vectors[m + 1][(i, j)] = v * rot;
            }
        }
    }
    Ok(())
}

/// One-sidedness verdict of a Fourier series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Fourier coefficients of an eigenvector field, `psi(j)` for
/// `j = -N/2 .. N/2 - 1`.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    dim: usize,
    channels: usize,
    n: usize,
    /// Entry `k` holds `psi(k - N/2)`.
    coeffs: Vec<ComplexMatrix>,
    total_energy: f64,
    negative_tail_energy: f64,
    gauge: GaugeStrategy,
}

impl FourierSeries {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn psi(&self, j: i64) -> &ComplexMatrix {
        let k = (j + (self.n / 2) as i64) as usize;
        &self.coeffs[k]
    }

    /// `(j, psi(j))` pairs in ascending j.
    pub fn taps(&self) -> impl Iterator<Item = (i64, &ComplexMatrix)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, m)| (coefficient_index(k, self.n), m))
    }

    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    /// Fraction of coefficient energy at j < 0.
    pub fn negative_tail_energy(&self) -> f64 {
        self.negative_tail_energy
    }

    pub fn gauge(&self) -> GaugeStrategy {
        self.gauge
    }

    /// `one_sided` iff the negative-tail energy fraction is at most `tol`.
    pub fn one_sidedness(&self, tol: f64) -> Sidedness {
        if self.negative_tail_energy <= tol {
            Sidedness::OneSided
        } else {
            Sidedness::TwoSided
        }
    }

    /// Relative gap between coefficient energy and the field's mean square
    /// norm; ~0 when Parseval holds.
    pub fn parseval_gap(&self, field: &EigenField) -> f64 {
        let direct = field.mean_square_norm();
        if direct == 0.0 {
            self.total_energy
        } else {
            (self.total_energy - direct).abs() / direct
        }
    }
}

/// Boundary values and one-sided coefficients of the maximal scalar factor
/// of one eigenvalue channel: `|D(omega)|^2 = 2 pi lambda(omega)` with
/// `D(omega) = sum_{n>=0} delta(n) e^{-i n omega}` and no zeros inside the
/// disc (cepstral construction).
#[derive(Debug, Clone)]
pub struct ScalarOuterFactor {
    /// `D(omega_m)` on the grid.
    pub boundary: Vec<Complex64>,
    /// `delta(n)`, `n = 0 .. N/2 - 1`; one-sided by construction.
    pub coeffs: Vec<Complex64>,
    /// Energy fraction the construction leaked to negative indices
    /// (roundoff diagnostic; ~0 for smooth channels).
    pub acausal_energy: f64,
}

/// Cepstral outer factorization of a positive eigenvalue channel sampled on
/// the grid: exponential of the analytic (one-sided) half of
/// `log(2 pi lambda)`.
pub fn scalar_outer_factor(lambda: &[f64]) -> Result<ScalarOuterFactor, EigenFieldError> {
    let n = lambda.len();
    for (node, &l) in lambda.iter().enumerate() {
        if !(l > LOG_FLOOR) {
            return Err(EigenFieldError::LogDivergence { node, value: l });
        }
    }
    let log_samples: Vec<Complex64> = lambda
        .iter()
        .map(|&l| Complex64::new((2.0 * PI * l).ln(), 0.0))
        .collect();
    let cepstrum = fourier_coefficients(&log_samples);
    // Analytic half: c_0 / 2 at n = 0 plus c_n for n >= 1.
    let mut half = vec![Complex64::new(0.0, 0.0); n];
    for (k, slot) in half.iter_mut().enumerate() {
        let j = coefficient_index(k, n);
        if j == 0 {
            *slot = cepstrum[k] * 0.5;
        } else if j > 0 {
            *slot = cepstrum[k];
        }
    }
    let boundary: Vec<Complex64> = evaluate_fourier_series(&half)
        .into_iter()
        .map(|t| t.exp())
        .collect();
    let delta_full = fourier_coefficients(&boundary);
    let mut causal = Vec::with_capacity(n / 2);
    let mut acausal = 0.0;
    let mut total = 0.0;
    for (k, &v) in delta_full.iter().enumerate() {
        let j = coefficient_index(k, n);
        total += v.norm_sqr();
        if j >= 0 {
            causal.push(v);
        } else {
            acausal += v.norm_sqr();
        }
    }
    Ok(ScalarOuterFactor {
        boundary,
        coeffs: causal,
        acausal_energy: if total > 0.0 { acausal / total } else { 0.0 },
    })
}

/// Candidate spectral factor `phi = U D` on the grid plus its moving-average
/// coefficients `b(l)`.
#[derive(Debug, Clone)]
pub struct SpectralFactor {
    /// `phi(omega_m)`, `d x r`.
    pub boundary: Vec<ComplexMatrix>,
    /// `(l, b(l))` sorted by `l`; negligible taps dropped.
    pub taps: Vec<(i64, ComplexMatrix)>,
    /// True when every stored tap has `l >= 0`.
    pub causal: bool,
}

/// Assemble `phi(omega) = U(omega) diag(D_1 .. D_r)` and its coefficients
/// `b(l) = sum_j psi(j) diag(delta(l - j))`, convolving the field
/// coefficients with each channel's one-sided factor coefficients over the
/// available windows.
pub fn compose_spectral_factor(
    field: &EigenField,
    factors: &[ScalarOuterFactor],
) -> Result<SpectralFactor, EigenFieldError> {
    let ch = field.channels();
    if ch == 0 {
        return Err(EigenFieldError::EmptyField);
    }
    if factors.len() != ch {
        return Err(EigenFieldError::ChannelCountMismatch {
            expected: ch,
            got: factors.len(),
        });
    }
    let n = field.grid().size();
    let d = field.dim();
    let boundary: Vec<ComplexMatrix> = (0..n)
        .map(|m| {
            let u = field.vectors_at(m);
            ComplexMatrix::from_fn(d, ch, |i, j| u[(i, j)] * factors[j].boundary[m])
        })
        .collect();

    let series = field.fourier();
    let psi_scale = series.total_energy().sqrt();
    let mut acc: std::collections::BTreeMap<i64, ComplexMatrix> = std::collections::BTreeMap::new();
    for (j, psi) in series.taps() {
        if psi.frobenius_norm() <= 1e-13 * psi_scale {
            continue;
        }
        for (channel, factor) in factors.iter().enumerate() {
            let delta_scale = factor
                .coeffs
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            for (nn, &delta) in factor.coeffs.iter().enumerate() {
                if delta.norm() <= 1e-13 * delta_scale {
                    continue;
                }
                let l = j + nn as i64;
                if l >= (n / 2) as i64 {
                    break;
                }
                let slot = acc.entry(l).or_insert_with(|| ComplexMatrix::zeros(d, ch));
                for i in 0..d {
                    slot[(i, channel)] += psi[(i, channel)] * delta;
                }
            }
        }
    }
    let tap_scale = acc
        .values()
        .map(|m| m.frobenius_norm())
        .fold(0.0, f64::max);
    let taps: Vec<(i64, ComplexMatrix)> = acc
        .into_iter()
        .filter(|(_, m)| m.frobenius_norm() > 1e-12 * tap_scale)
        .collect();
    let causal = taps.iter().all(|(l, _)| *l >= 0);
    Ok(SpectralFactor {
        boundary,
        taps,
        causal,
    })
}
