//! Time-domain counterparts of the frequency-domain machinery: sample-path
//! simulation from a spectral model (moving-average route for the
//! absolutely continuous part, harmonic route for atoms), sliding-window
//! application of filter banks, finite-past prediction by the multichannel
//! Levinson recursion, and Monte Carlo verification of the closed-form
//! error certificates.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dpc::FilterBank;
use crate::eigenfield::{
    compose_spectral_factor, scalar_outer_factor, EigenField, EigenFieldError, GaugeStrategy,
};
use crate::matrix::{ComplexMatrix, MatrixError};
use crate::spectral::{CovarianceSequence, SpectralError, SpectralMeasure};

#[derive(Debug, Error)]
pub enum TimeDomainError {
    #[error("model cannot be simulated: {0}")]
    UnsimulableModel(String),
    #[error("path of length {len} is too short for a filter spanning {span}")]
    PathTooShort { len: usize, span: usize },
    #[error("real-valued mode unavailable: {0}")]
    RealModeUnavailable(String),
    #[error("prediction-error covariance became singular at order {order}")]
    SingularBlock { order: usize },
    #[error(transparent)]
    Eigen(#[from] EigenFieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A simulated path `X_t`, `t = 0..len-1`, with the provenance needed to
/// reproduce it bit for bit.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub dim: usize,
    /// `values[t][i]`.
    pub values: Vec<Vec<Complex64>>,
    pub seed: u64,
    pub generator: String,
    /// Number of presample innovations discarded before t = 0.
    pub burn_in: usize,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample covariance `(1/T') sum_t X_{t+h} X_t*` over the overlap.
    pub fn sample_covariance(&self, h: usize) -> ComplexMatrix {
        let t_max = self.len() - h;
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for t in 0..t_max {
            let lead = &self.values[t + h];
            let lag = &self.values[t];
            for i in 0..self.dim {
                for j in 0..self.dim {
                    acc[(i, j)] += lead[i] * lag[j].conj();
                }
            }
        }
        acc.scale_re(1.0 / t_max as f64)
    }
}

/// Moving-average plus harmonic representation of a model, ready to drive
/// with white noise.
#[derive(Debug, Clone)]
pub struct Simulator {
    dim: usize,
    /// `(l, b(l))`: `X_t += sum_l b(l) xi_{t-l}`.
    ma_taps: Vec<(i64, ComplexMatrix)>,
    noise_dim: usize,
    /// `(omega_j, mass^(1/2))`: `X_t += sum_j M_j^(1/2) zeta_j e^{i t omega_j}`.
    atoms: Vec<(f64, ComplexMatrix)>,
    generator: String,
}

impl Simulator {
    /// Build the simulator for a spectral measure. The density part must
    /// factor: constant rank and log-integrable eigenvalue channels; the
    /// moving average is truncated to `|l| <= window` coefficients.
    pub fn from_measure(
        measure: &SpectralMeasure,
        rank_tol: f64,
        window: usize,
    ) -> Result<Self, TimeDomainError> {
        let atoms: Vec<(f64, ComplexMatrix)> = measure
            .atoms()
            .iter()
            .map(|a| Ok((a.omega, a.mass.sqrt_psd()?)))
            .collect::<Result<_, MatrixError>>()?;

        let density_mass = measure.absolutely_continuous_part().trace_mass();
        let mut ma_taps: Vec<(i64, ComplexMatrix)> = Vec::new();
        let mut generator = String::new();
        if density_mass > 1e-14 {
            let field = match EigenField::decompose(measure, rank_tol) {
                Ok(f) => f,
                Err(EigenFieldError::RankNotConstant { distinct, .. }) => {
                    return Err(TimeDomainError::UnsimulableModel(format!(
                        "density rank varies across frequencies (ranks {distinct:?}); no \
                         moving-average factorization exists"
                    )))
                }
                Err(e) => return Err(e.into()),
            };
            let field = field.align_gauge(GaugeStrategy::AnchorRealThenContinuity)?;
            let mut factors = Vec::with_capacity(field.channels());
            for ch in 0..field.channels() {
                match scalar_outer_factor(&field.lambda_channel(ch)) {
                    Ok(f) => factors.push(f),
                    Err(EigenFieldError::LogDivergence { node, value }) => {
                        return Err(TimeDomainError::UnsimulableModel(format!(
                            "eigenvalue channel {ch} vanishes at node {node} (value {value:.3e}); \
                             log factorization diverges"
                        )))
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let factor = compose_spectral_factor(&field, &factors)?;
            ma_taps = factor
                .taps
                .into_iter()
                .filter(|(l, _)| l.unsigned_abs() as usize <= window)
                .collect();
            generator = format!(
                "ma[{} taps, {}]",
                ma_taps.len(),
                if factor.causal { "causal" } else { "two-sided" }
            );
        }
        if !atoms.is_empty() {
            if !generator.is_empty() {
                generator.push('+');
            }
            generator.push_str(&format!("harmonic[{} atoms]", atoms.len()));
        }
        if generator.is_empty() {
            generator = "zero".into();
        }
        let noise_dim = ma_taps.first().map_or(0, |(_, b)| b.cols());
        Ok(Self {
            dim: measure.dim(),
            ma_taps,
            noise_dim,
            atoms,
            generator,
        })
    }

    /// Drive an explicit set of moving-average taps with orthonormal white
    /// noise (a filter bank plus white-noise specification).
    pub fn from_ma_taps(dim: usize, taps: Vec<(i64, ComplexMatrix)>) -> Self {
        let noise_dim = taps.first().map_or(0, |(_, b)| b.cols());
        Self {
            dim,
            ma_taps: taps,
            noise_dim,
            atoms: Vec::new(),
            generator: "ma[explicit]".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    /// Simulate `length` samples. Complex mode draws
    /// `xi = (N(0,1/2) + i N(0,1/2))` per coordinate so `E xi xi* = I`;
    /// real mode requires real coefficients and no atoms and draws standard
    /// real normals instead.
    pub fn sample(
        &self,
        length: usize,
        seed: u64,
        real_valued: bool,
    ) -> Result<SamplePath, TimeDomainError> {
        if real_valued {
            let max_imag = self
                .ma_taps
                .iter()
                .flat_map(|(_, b)| b.data().iter())
                .map(|z| z.im.abs())
                .fold(0.0, f64::max);
            let scale = self
                .ma_taps
                .iter()
                .map(|(_, b)| b.max_abs())
                .fold(0.0, f64::max);
            if max_imag > 1e-12 * scale.max(1.0) {
                return Err(TimeDomainError::RealModeUnavailable(
                    "moving-average coefficients are not real".into(),
                ));
            }
            if !self.atoms.is_empty() {
                return Err(TimeDomainError::RealModeUnavailable(
                    "harmonic components require complex amplitudes".into(),
                ));
            }
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha12Rng| -> Complex64 {
            if real_valued {
                let x: f64 = StandardNormal.sample(rng);
                Complex64::new(x, 0.0)
            } else {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
            }
        };

        let mut values = vec![vec![Complex64::ZERO; self.dim]; length];
        let l_min = self.ma_taps.first().map_or(0, |(l, _)| *l);
        let l_max = self.ma_taps.last().map_or(0, |(l, _)| *l);
        let burn_in = l_max.max(0) as usize;
        if !self.ma_taps.is_empty() && length > 0 {
            // xi_s needed for s = -l_max .. length - 1 - l_min.
            let lead = (-l_min).max(0) as usize;
            let count = length + burn_in + lead;
            let noise: Vec<Vec<Complex64>> = (0..count)
                .map(|_| (0..self.noise_dim).map(|_| draw(&mut rng)).collect())
                .collect();
            // noise index offset: xi_s lives at noise[s + burn_in].
            for (t, slot) in values.iter_mut().enumerate() {
                for (l, b) in &self.ma_taps {
                    let s = t as i64 - l + burn_in as i64;
                    let xi = &noise[s as usize];
                    for i in 0..self.dim {
                        let mut acc = Complex64::ZERO;
                        for k in 0..self.noise_dim {
                            acc += b[(i, k)] * xi[k];
                        }
                        slot[i] += acc;
                    }
                }
            }
        }
        for (omega, sqrt_mass) in &self.atoms {
            let zeta: Vec<Complex64> = (0..self.dim).map(|_| draw(&mut rng)).collect();
            let amp = sqrt_mass.mul_vec(&zeta);
            for (t, slot) in values.iter_mut().enumerate() {
                let phase = Complex64::from_polar(1.0, *omega * t as f64);
                for i in 0..self.dim {
                    slot[i] += amp[i] * phase;
                }
            }
        }
        Ok(SamplePath {
            dim: self.dim,
            values,
            seed,
            generator: self.generator.clone(),
            burn_in,
        })
    }
}

/// Edge handling for sliding summations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePolicy {
    /// Emit only fully-covered indices.
    TruncateToValid,
    /// Treat samples outside the path as zero and emit the full length.
    ZeroPad,
}

/// A filtered path plus the index range (into the input path) its samples
/// correspond to.
#[derive(Debug, Clone)]
pub struct FilteredPath {
    pub path: SamplePath,
    pub start: usize,
}

fn convolve(
    taps: &[(i64, ComplexMatrix)],
    input: &SamplePath,
    edge: EdgePolicy,
    sign: i64,
) -> Result<FilteredPath, TimeDomainError> {
    let out_dim = taps[0].1.rows();
    let in_dim = taps[0].1.cols();
    assert_eq!(in_dim, input.dim);
    let len = input.len() as i64;
    let lo = taps.iter().map(|(j, _)| *j).min().unwrap();
    let hi = taps.iter().map(|(j, _)| *j).max().unwrap();
    // Output index t reads input at t + sign * j for each tap j.
    let (read_lo, read_hi) = if sign >= 0 { (lo, hi) } else { (-hi, -lo) };
    let (start, end) = match edge {
        EdgePolicy::TruncateToValid => ((-read_lo).max(0), (len - read_hi).min(len)),
        EdgePolicy::ZeroPad => (0, len),
    };
    if start >= end {
        return Err(TimeDomainError::PathTooShort {
            len: input.len(),
            span: (hi - lo) as usize,
        });
    }
    let mut values = Vec::with_capacity((end - start) as usize);
    for t in start..end {
        let mut slot = vec![Complex64::ZERO; out_dim];
        for (j, tap) in taps {
            let s = t + sign * j;
            if s < 0 || s >= len {
                continue;
            }
            let x = &input.values[s as usize];
            for i in 0..out_dim {
                let mut acc = Complex64::ZERO;
                for k in 0..in_dim {
                    acc += tap[(i, k)] * x[k];
                }
                slot[i] += acc;
            }
        }
        values.push(slot);
    }
    Ok(FilteredPath {
        path: SamplePath {
            dim: out_dim,
            values,
            seed: input.seed,
            generator: input.generator.clone(),
            burn_in: input.burn_in,
        },
        start: start as usize,
    })
}

/// Analysis pass `V_t = sum_j psi*(j) X_{t+j}`.
pub fn apply_analysis(
    bank: &FilterBank,
    path: &SamplePath,
    edge: EdgePolicy,
) -> Result<FilteredPath, TimeDomainError> {
    let taps: Vec<(i64, ComplexMatrix)> = bank
        .taps
        .iter()
        .map(|(j, psi)| (*j, psi.adjoint()))
        .collect();
    convolve(&taps, path, edge, 1)
}

/// Synthesis pass `X_t = sum_j psi(j) V_{t-j}`.
pub fn apply_synthesis(
    bank: &FilterBank,
    components: &SamplePath,
    edge: EdgePolicy,
) -> Result<FilteredPath, TimeDomainError> {
    convolve(&bank.taps, components, edge, -1)
}

/// Direct pass `X_t^(k) = sum_m w(m) X_{t-m}`.
pub fn apply_direct(
    bank: &FilterBank,
    path: &SamplePath,
    edge: EdgePolicy,
) -> Result<FilteredPath, TimeDomainError> {
    convolve(&bank.direct, path, edge, -1)
}

/// Finite-past prediction-error covariances `Sigma_n` for `n = 0..n_max`.
#[derive(Debug, Clone)]
pub struct PredictionResult {
    /// `sigmas[n]` is the order-n forward prediction-error covariance.
    pub sigmas: Vec<ComplexMatrix>,
    /// `det Sigma_n` (real parts; the determinants of PSD matrices).
    pub dets: Vec<f64>,
    /// Set when the recursion stopped before `n_max` on a singular block.
    pub stopped_at: Option<usize>,
}

impl PredictionResult {
    pub fn max_order(&self) -> usize {
        self.sigmas.len() - 1
    }
}

/// Multichannel Levinson recursion (forward/backward prediction) on a
/// covariance sequence with `C(h) = E(X_{t+h} X_t*)`. Stops early with a
/// partial result when a prediction-error covariance becomes numerically
/// singular, which is expected for rank-deficient processes.
pub fn levinson_prediction(
    cov: &CovarianceSequence,
    n_max: usize,
) -> Result<PredictionResult, TimeDomainError> {
    assert!(cov.max_lag() >= n_max, "covariance sequence too short");
    let c0 = cov.at(0).hermitian_part();
    let mut sigmas = vec![c0.clone()];
    let mut dets = vec![c0.det().re];
    let mut sigma_f = c0.clone();
    let mut sigma_b = c0;
    let mut fwd: Vec<ComplexMatrix> = Vec::new(); // A_i, i = 1..n
    let mut bwd: Vec<ComplexMatrix> = Vec::new(); // B_i, i = 1..n
    let mut stopped_at = None;

    for n in 0..n_max {
        // Delta_{n+1} = C(n+1) - sum_i A_i C(n+1-i).
        let mut delta = cov.at((n + 1) as i64);
        for (i, a) in fwd.iter().enumerate() {
            delta = delta.sub(&a.mul(&cov.at((n - i) as i64)));
        }
        let (kf, kb) = match (sigma_b.inverse(), sigma_f.inverse()) {
            (Ok(bi), Ok(fi)) => (delta.mul(&bi), delta.adjoint().mul(&fi)),
            _ => {
                stopped_at = Some(n);
                break;
            }
        };
        let mut new_fwd = Vec::with_capacity(n + 1);
        let mut new_bwd = Vec::with_capacity(n + 1);
        for i in 0..n {
            new_fwd.push(fwd[i].sub(&kf.mul(&bwd[n - 1 - i])));
            new_bwd.push(bwd[i].sub(&kb.mul(&fwd[n - 1 - i])));
        }
        new_fwd.push(kf.clone());
        new_bwd.push(kb.clone());
        fwd = new_fwd;
        bwd = new_bwd;
        sigma_f = sigma_f.sub(&kf.mul(&delta.adjoint())).hermitian_part();
        sigma_b = sigma_b.sub(&kb.mul(&delta)).hermitian_part();
        sigmas.push(sigma_f.clone());
        dets.push(sigma_f.det().re);
        let scale = sigmas[0].frobenius_norm().max(f64::MIN_POSITIVE);
        if sigma_f.frobenius_norm() < 1e-14 * scale {
            if sigmas.len() <= n_max {
                stopped_at = Some(n + 1);
            }
            break;
        }
    }
    Ok(PredictionResult {
        sigmas,
        dets,
        stopped_at,
    })
}

/// Monte Carlo estimate with its standard error across repetitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
    pub samples_per_rep: usize,
}

/// Average `|X_t - X_t^(k)|^2` over `reps` independent paths of the given
/// length, reconstructing through the bank's analysis + synthesis taps.
/// Per-rep seeds are derived as `seed + rep`.
pub fn monte_carlo_mse(
    simulator: &Simulator,
    bank: &FilterBank,
    length: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate, TimeDomainError> {
    assert!(reps >= 2, "need at least two repetitions for a standard error");
    let mut per_rep = Vec::with_capacity(reps);
    let mut samples_per_rep = 0;
    for rep in 0..reps {
        let path = simulator.sample(length, seed.wrapping_add(rep as u64), false)?;
        let analysis = apply_analysis(bank, &path, EdgePolicy::TruncateToValid)?;
        let synth = apply_synthesis(bank, &analysis.path, EdgePolicy::TruncateToValid)?;
        let offset = analysis.start + synth.start;
        let mut acc = 0.0;
        for (t, xhat) in synth.path.values.iter().enumerate() {
            let x = &path.values[t + offset];
            acc += x
                .iter()
                .zip(xhat)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>();
        }
        samples_per_rep = synth.path.len();
        per_rep.push(acc / synth.path.len() as f64);
    }
    let mean = per_rep.iter().sum::<f64>() / reps as f64;
    let var = per_rep.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64;
    Ok(McEstimate {
        mean,
        stderr: (var / reps as f64).sqrt(),
        reps,
        samples_per_rep,
    })
}
