//! Built-in reference models: one constructor per worked example of the
//! taxonomy (pure point spectrum, rank switching, divergent log-integral,
//! the two rank-2 fields with problematic/good eigenvector gauges, a rank-2
//! white noise) plus scalar MA(1) and white-noise baselines.
//!
//! Where a model has closed forms (eigenvalues, eigenvector field,
//! covariances) they are exposed as annotations so tests can use them as
//! independent oracles.

use num_complex::Complex64;
use serde_json::Value;
use std::f64::consts::PI;
use thiserror::Error;

use crate::eigenfield::{EigenField, GaugeStrategy};
use crate::matrix::ComplexMatrix;
use crate::spectral::{FrequencyGrid, SpectralAtom, SpectralError, SpectralMeasure};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown builtin model `{0}`")]
    UnknownId(String),
    #[error("bad parameters for `{id}`: {reason}")]
    BadParams { id: &'static str, reason: String },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Parameterized built-in model.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinModel {
    /// Harmonic process with orthogonal random amplitudes: pure point
    /// spectrum with one atom per frequency.
    Type0 {
        freqs: Vec<f64>,
        variances: Vec<(f64, f64)>,
    },
    /// Rank 2 on |omega| <= 1, rank 1 outside.
    Type1,
    /// Constant rank 2 with divergent log-eigenvalue integral
    /// (f22 = exp(-1/|omega|)).
    Type2,
    /// Constant density with the discontinuous-phase eigenvector gauge
    /// g(omega); the density itself is the same as `Regular`.
    Type3Illustration,
    /// Constant rank 2 whose density admits no one-sided eigenvector gauge.
    Type3Candidate,
    /// Rank-2 white noise; satisfies every regularity condition.
    Regular,
    /// Scalar MA(1): f = |1 + theta e^{-i omega}|^2 / (2 pi).
    ScalarMa1 { theta: f64 },
    /// Scalar white noise: f = sigma^2 / (2 pi).
    ScalarWhite { sigma2: f64 },
}

impl BuiltinModel {
    pub const IDS: [&'static str; 8] = [
        "type0",
        "type1",
        "type2",
        "type3_illustration",
        "type3_candidate",
        "regular",
        "scalar_ma1",
        "scalar_white",
    ];

    pub fn id(&self) -> &'static str {
        match self {
            BuiltinModel::Type0 { .. } => "type0",
            BuiltinModel::Type1 => "type1",
            BuiltinModel::Type2 => "type2",
            BuiltinModel::Type3Illustration => "type3_illustration",
            BuiltinModel::Type3Candidate => "type3_candidate",
            BuiltinModel::Regular => "regular",
            BuiltinModel::ScalarMa1 { .. } => "scalar_ma1",
            BuiltinModel::ScalarWhite { .. } => "scalar_white",
        }
    }

    /// Parse an id plus optional JSON parameter object.
    pub fn parse(id: &str, params: Option<&Value>) -> Result<Self, CorpusError> {
        let get_f64 = |key: &str| -> Option<f64> {
            params.and_then(|p| p.get(key)).and_then(Value::as_f64)
        };
        let model = match id {
            "type0" => {
                let freqs: Vec<f64> = params
                    .and_then(|p| p.get("freqs"))
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_f64).collect())
                    .unwrap_or_else(|| vec![1.0]);
                let variances: Vec<(f64, f64)> = params
                    .and_then(|p| p.get("variances"))
                    .and_then(Value::as_array)
                    .map(|a| {
                        a.iter()
                            .filter_map(|v| {
                                let pair = v.as_array()?;
                                Some((pair.first()?.as_f64()?, pair.get(1)?.as_f64()?))
                            })
                            .collect()
                    })
                    .unwrap_or_else(|| vec![(1.0, 1.0)]);
                BuiltinModel::Type0 { freqs, variances }
            }
            "type1" => BuiltinModel::Type1,
            "type2" => BuiltinModel::Type2,
            "type3_illustration" => BuiltinModel::Type3Illustration,
            "type3_candidate" => BuiltinModel::Type3Candidate,
            "regular" => BuiltinModel::Regular,
            "scalar_ma1" => BuiltinModel::ScalarMa1 {
                theta: get_f64("theta").unwrap_or(0.5),
            },
            "scalar_white" => BuiltinModel::ScalarWhite {
                sigma2: get_f64("sigma2").unwrap_or(1.0),
            },
            other => return Err(CorpusError::UnknownId(other.to_string())),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        match self {
            BuiltinModel::Type0 { freqs, variances } => {
                if freqs.is_empty() || freqs.len() != variances.len() {
                    return Err(CorpusError::BadParams {
                        id: "type0",
                        reason: format!(
                            "{} frequencies vs {} variance pairs",
                            freqs.len(),
                            variances.len()
                        ),
                    });
                }
                for (i, &w) in freqs.iter().enumerate() {
                    if !(w > -PI && w <= PI) {
                        return Err(CorpusError::BadParams {
                            id: "type0",
                            reason: format!("frequency {w} outside (-pi, pi]"),
                        });
                    }
                    if freqs[..i].iter().any(|&u| u == w) {
                        return Err(CorpusError::BadParams {
                            id: "type0",
                            reason: format!("duplicate frequency {w}"),
                        });
                    }
                }
                if variances.iter().any(|&(a, b)| a <= 0.0 || b <= 0.0) {
                    return Err(CorpusError::BadParams {
                        id: "type0",
                        reason: "variances must be positive".into(),
                    });
                }
            }
            BuiltinModel::ScalarMa1 { theta } => {
                if !theta.is_finite() {
                    return Err(CorpusError::BadParams {
                        id: "scalar_ma1",
                        reason: "theta must be finite".into(),
                    });
                }
            }
            BuiltinModel::ScalarWhite { sigma2 } => {
                if !(sigma2.is_finite() && *sigma2 > 0.0) {
                    return Err(CorpusError::BadParams {
                        id: "scalar_white",
                        reason: "sigma2 must be positive".into(),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            BuiltinModel::ScalarMa1 { .. } | BuiltinModel::ScalarWhite { .. } => 1,
            _ => 3,
        }
    }

    /// Density matrix at a frequency (zero matrix for the pure-atom model).
    pub fn density_at(&self, omega: f64) -> ComplexMatrix {
        match self {
            BuiltinModel::Type0 { .. } => ComplexMatrix::zeros(3, 3),
            BuiltinModel::Type1 => {
                let f22 = if omega.abs() <= 1.0 { 0.5 } else { 0.0 };
                template_density(1.0 / (2.0 * PI), f22)
            }
            BuiltinModel::Type2 => {
                let f22 = if omega == 0.0 {
                    0.0
                } else {
                    (-1.0 / omega.abs()).exp()
                };
                template_density(1.0 / (2.0 * PI), f22)
            }
            BuiltinModel::Type3Illustration | BuiltinModel::Regular => white_noise_density(),
            BuiltinModel::Type3Candidate => {
                let u22 = candidate_u22(omega);
                let u32 = candidate_u32(omega);
                let zero = Complex64::new(0.0, 0.0);
                ComplexMatrix::new(
                    3,
                    3,
                    vec![
                        Complex64::new(1.0, 0.0),
                        zero,
                        zero,
                        zero,
                        Complex64::new(u22.norm_sqr(), 0.0),
                        u22 * u32.conj(),
                        zero,
                        u32 * u22.conj(),
                        Complex64::new(u32.norm_sqr(), 0.0),
                    ],
                )
                .expect("candidate density")
            }
            BuiltinModel::ScalarMa1 { theta } => {
                let z = Complex64::new(1.0, 0.0) + Complex64::from_polar(*theta, -omega);
                ComplexMatrix::diag(&[z.norm_sqr() / (2.0 * PI)])
            }
            BuiltinModel::ScalarWhite { sigma2 } => ComplexMatrix::diag(&[sigma2 / (2.0 * PI)]),
        }
    }

    /// Sample the model on a grid, attaching atoms for the harmonic model.
    pub fn build(&self, grid: FrequencyGrid) -> Result<SpectralMeasure, CorpusError> {
        let measure = SpectralMeasure::from_density_fn(grid, self.dim(), |w| self.density_at(w))?;
        match self {
            BuiltinModel::Type0 { freqs, variances } => {
                let atoms = freqs
                    .iter()
                    .zip(variances)
                    .map(|(&omega, &(v1, v2))| SpectralAtom {
                        omega,
                        mass: template_density(v1, v2),
                    })
                    .collect();
                Ok(measure.with_atoms(atoms)?)
            }
            _ => Ok(measure),
        }
    }

    /// Closed-form eigenvalues of the density, descending, where stated by
    /// the source model.
    pub fn annotated_eigenvalues(&self, omega: f64) -> Option<Vec<f64>> {
        match self {
            BuiltinModel::Type0 { .. } => None,
            BuiltinModel::Type1 | BuiltinModel::Type2 => {
                let f = self.density_at(omega);
                let f11 = f[(0, 0)].re;
                let f22 = f[(1, 1)].re;
                let root = (f11 * f11 + f22 * f22 - f11 * f22).sqrt();
                Some(vec![f11 + f22 + root, f11 + f22 - root, 0.0])
            }
            BuiltinModel::Type3Illustration
            | BuiltinModel::Type3Candidate
            | BuiltinModel::Regular => Some(vec![1.0, 1.0, 0.0]),
            BuiltinModel::ScalarMa1 { .. } | BuiltinModel::ScalarWhite { .. } => {
                Some(vec![self.density_at(omega)[(0, 0)].re])
            }
        }
    }

    /// The model's stated eigenvector field sampled on a grid, where one is
    /// part of the definition. The gauge label is `"annotated"`.
    pub fn annotated_field(&self, grid: FrequencyGrid) -> Option<EigenField> {
        let columns: Box<dyn Fn(f64) -> Vec<Vec<Complex64>>> = match self {
            BuiltinModel::Regular => Box::new(|w: f64| {
                let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
                let e = Complex64::from_polar(1.0, -w);
                vec![
                    vec![e * inv_sqrt2, Complex64::ZERO, e * inv_sqrt2],
                    vec![Complex64::ZERO, e, Complex64::ZERO],
                ]
            }),
            BuiltinModel::Type3Illustration => Box::new(|w: f64| {
                let g = illustration_g(w);
                let sqrt2 = 2.0_f64.sqrt();
                vec![
                    vec![g, Complex64::ZERO, g],
                    vec![Complex64::ZERO, g * sqrt2, Complex64::ZERO],
                ]
            }),
            BuiltinModel::Type3Candidate => Box::new(|w: f64| {
                vec![
                    vec![Complex64::new(1.0, 0.0), Complex64::ZERO, Complex64::ZERO],
                    vec![Complex64::ZERO, candidate_u22(w), candidate_u32(w)],
                ]
            }),
            _ => return None,
        };
        let lambdas = vec![vec![1.0, 1.0]; grid.size()];
        let vectors = grid
            .nodes()
            .map(|w| {
                let cols = columns(w);
                ComplexMatrix::from_fn(3, cols.len(), |i, j| cols[j][i])
            })
            .collect();
        Some(
            EigenField::from_parts(grid, 3, lambdas, vectors, GaugeStrategy::Annotated)
                .expect("annotated fields are orthonormal"),
        )
    }

    /// Closed-form covariance matrices where the source model states them.
    pub fn annotated_covariance(&self, h: i64) -> Option<ComplexMatrix> {
        match self {
            BuiltinModel::Regular => {
                if h == 0 {
                    Some(template_covariance_white())
                } else {
                    Some(ComplexMatrix::zeros(3, 3))
                }
            }
            BuiltinModel::Type0 { freqs, variances } => {
                let mut acc = ComplexMatrix::zeros(3, 3);
                for (&w, &(v1, v2)) in freqs.iter().zip(variances) {
                    let phase = Complex64::from_polar(1.0, h as f64 * w);
                    acc = acc.add(&template_density(v1, v2).scale(phase));
                }
                Some(acc)
            }
            BuiltinModel::ScalarMa1 { theta } => {
                let v = match h.abs() {
                    0 => 1.0 + theta * theta,
                    1 => *theta,
                    _ => 0.0,
                };
                Some(ComplexMatrix::diag(&[v]))
            }
            BuiltinModel::ScalarWhite { sigma2 } => Some(ComplexMatrix::diag(&[if h == 0 {
                *sigma2
            } else {
                0.0
            }])),
            _ => None,
        }
    }
}

/// `[[f11, 0, f11], [0, f22, f22], [f11, f22, f11 + f22]]` -- the shared
/// covariance/density template of the three-channel examples, in which the
/// third channel is the sum of the first two.
pub fn template_density(f11: f64, f22: f64) -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    let c = |x: f64| Complex64::new(x, 0.0);
    ComplexMatrix::new(
        3,
        3,
        vec![
            c(f11),
            z,
            c(f11),
            z,
            c(f22),
            c(f22),
            c(f11),
            c(f22),
            c(f11 + f22),
        ],
    )
    .expect("template is well formed")
}

/// Constant density `[[1/2, 0, 1/2], [0, 1, 0], [1/2, 0, 1/2]]` of the
/// rank-2 white-noise example (third channel equals the first).
pub fn white_noise_density() -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    let c = |x: f64| Complex64::new(x, 0.0);
    ComplexMatrix::new(
        3,
        3,
        vec![c(0.5), z, c(0.5), z, c(1.0), z, c(0.5), z, c(0.5)],
    )
    .expect("white noise density")
}

/// `C(0) = [[pi, 0, pi], [0, 2 pi, 0], [pi, 0, pi]]` of the rank-2 white
/// noise.
pub fn template_covariance_white() -> ComplexMatrix {
    white_noise_density().scale_re(2.0 * PI)
}

/// `g(omega) = (e^{-i omega} + e^{i 2 omega}) / (2 sqrt(2) |cos(3 omega / 2)|)`,
/// with nodes within 1e-9 of the removable singularities (cos(3w/2) = 0)
/// filled by the one-sided limit from the right; |g| = 1/sqrt(2) there since
/// numerator and denominator vanish at the same rate.
pub fn illustration_g(omega: f64) -> Complex64 {
    let cosv = (1.5 * omega).cos();
    if cosv.abs() < 1e-9 {
        let sign = (1.5 * (omega + 1e-6)).cos().signum();
        Complex64::from_polar(1.0, 0.5 * omega) * (sign / 2.0_f64.sqrt())
    } else {
        let num = Complex64::from_polar(1.0, -omega) + Complex64::from_polar(1.0, 2.0 * omega);
        num / (2.0 * 2.0_f64.sqrt() * cosv.abs())
    }
}

/// `r(omega) e^{i phi(omega)} = (e^{-i omega} + e^{i 2 omega}) / 3`.
fn candidate_u22(omega: f64) -> Complex64 {
    (Complex64::from_polar(1.0, -omega) + Complex64::from_polar(1.0, 2.0 * omega)) / 3.0
}

/// `rho(omega) e^{i psi(omega)} = c(omega) (2 + e^{i 3 omega})` with
/// `c^2 = (1 - (2/9)(1 + cos 3w)) / (1 + 4 (1 + cos 3w))`, which makes
/// `r^2 + rho^2 = 1`.
fn candidate_u32(omega: f64) -> Complex64 {
    let one_plus_cos = 1.0 + (3.0 * omega).cos();
    let c2 = (1.0 - 2.0 / 9.0 * one_plus_cos) / (1.0 + 4.0 * one_plus_cos);
    (Complex64::new(2.0, 0.0) + Complex64::from_polar(1.0, 3.0 * omega)) * c2.sqrt()
}
