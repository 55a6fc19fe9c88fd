//! Regularity classification of a spectral measure and the
//! Kolmogorov-Szego innovation determinants.
//!
//! The decision cascade mirrors the taxonomy by the first violated
//! condition: a singular spectral part (atoms or a declared continuous
//! singular component) gives type (0); a per-node rank that varies on a
//! meaningful fraction of nodes gives type (1); a divergent log-eigenvalue
//! integral gives type (2); failing that, the eigenvector field is put
//! through a list of gauge strategies and the process is declared regular
//! when some gauge yields a one-sided Fourier series. When every attempted
//! gauge is two-sided the verdict is "inconclusive": whether such a process
//! is in fact non-regular is an open question, and the attempted gauges are
//! not exhaustive.
//!
//! Divergence of `integral of log lambda` can never be certified from grid
//! samples, and double precision floors eigenvalues near 1e-16 * scale by
//! cancellation long before a true underflow. The detector therefore keys
//! on the robust, scale-invariant signature of an essential zero: a thin
//! band of nodes (bounded measure, too wide for isolated zeros and too
//! narrow for a rank plateau) on which the smallest kept eigenvalue falls
//! below the rank threshold. The report always carries the raw quadrature
//! values at the working grid and its half grid alongside the verdict.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::eigenfield::{
    EigenField, EigenFieldError, GaugeStrategy, Sidedness, DEFAULT_ONE_SIDED_TOL,
    DEFAULT_RANK_TOL,
};
use crate::matrix::MatrixError;
use crate::spectral::{integrate_scalar, SpectralError, SpectralMeasure};

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("no principal minor of order {rank} is bounded away from zero (best min |det| {best:.3e})")]
    NoNonvanishingMinor { rank: usize, best: f64 },
    #[error("log integral requires rank >= 1")]
    RankZero,
    #[error(transparent)]
    Eigen(#[from] EigenFieldError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Regular,
    FullRankRegular,
    Type0,
    Type1,
    Type2,
    InconclusiveCondition3,
}

/// Tunable thresholds of the classifier. All defaults are exposed as CLI
/// flags by the binary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Eigenvalues below `rank_tol * global max` count as zero.
    pub rank_tol: f64,
    /// Max negative-tail energy fraction for a one-sided verdict.
    pub one_sided_tol: f64,
    /// Rank must differ from the median on at least this node fraction to
    /// call the rank non-constant (type 1).
    pub rank_vary_frac: f64,
    /// Deficient-node fractions at or below this are attributed to isolated
    /// eigenvalue zeros (null sets) rather than divergence.
    pub isolated_zero_frac: f64,
    /// Gauge strategies attempted for the one-sidedness condition.
    pub gauges: Vec<GaugeStrategy>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            one_sided_tol: DEFAULT_ONE_SIDED_TOL,
            rank_vary_frac: 0.05,
            isolated_zero_frac: 0.0025,
            gauges: vec![GaugeStrategy::AnchorRealThenContinuity, GaugeStrategy::Raw],
        }
    }
}

/// Quadrature of `sum_j log lambda_j` over the grid, with eigenvalues
/// floored at the rank threshold so the value stays finite and
/// reproducible. `floored_nodes` counts nodes where the floor engaged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogIntegral {
    pub total: f64,
    pub per_channel: Vec<f64>,
    pub floored_nodes: usize,
    pub floor: f64,
}

/// Quadrature of the log-eigenvalue sum over the first `rank` channels of
/// the field, floored at `rank_tol * lambda_scale`.
pub fn log_det_lambda_integral(field: &EigenField) -> Result<LogIntegral, RegularityError> {
    let rank = field.rank();
    if rank == 0 {
        return Err(RegularityError::RankZero);
    }
    let floor = (field.rank_tol() * field.lambda_scale()).max(1e-300);
    let n = field.grid().size();
    let mut per_channel = Vec::with_capacity(rank);
    let mut floored = vec![false; n];
    for j in 0..rank {
        let mut samples = Vec::with_capacity(n);
        for (m, flg) in floored.iter_mut().enumerate() {
            let l = field.lambdas_at(m)[j];
            if l <= floor {
                *flg = true;
            }
            samples.push(l.max(floor).ln());
        }
        per_channel.push(integrate_scalar(&samples));
    }
    Ok(LogIntegral {
        total: per_channel.iter().sum(),
        per_channel,
        floored_nodes: floored.iter().filter(|&&b| b).count(),
        floor,
    })
}

/// `(2 pi)^r exp(integral of sum_j log lambda_j / 2 pi)`: the innovation
/// determinant written through the eigenvalue channels.
pub fn kolmogorov_szego_lambda(field: &EigenField) -> Result<f64, RegularityError> {
    let integral = log_det_lambda_integral(field)?;
    let r = field.rank() as f64;
    Ok((2.0 * PI).powf(r) * (integral.total / (2.0 * PI)).exp())
}

/// A full-rank subprocess: channel indices (0-based), the worst-node
/// magnitude of its density determinant, and the Kolmogorov-Szego
/// innovation determinant computed through that subdensity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubprocessSelection {
    pub indices: Vec<usize>,
    pub min_abs_det: f64,
    pub det_sigma: f64,
    pub log_det_integral: f64,
}

/// Choose the `r`-subset of channels whose density minor stays farthest
/// from zero across the grid (exhaustive for d <= 16, greedy beyond), and
/// evaluate `det Sigma_r = (2 pi)^r exp(integral log det f_r / 2 pi)`.
pub fn select_full_rank_subprocess(
    measure: &SpectralMeasure,
    field: &EigenField,
) -> Result<SubprocessSelection, RegularityError> {
    let d = measure.dim();
    let r = field.rank();
    if r == 0 {
        return Err(RegularityError::RankZero);
    }
    let candidates: Vec<Vec<usize>> = if d <= 16 {
        subsets(d, r)
    } else {
        vec![greedy_subset(measure, r)]
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    for subset in candidates {
        let mut min_abs = f64::INFINITY;
        for f in measure.density() {
            let det = f.select(&subset, &subset).det().norm();
            if det < min_abs {
                min_abs = det;
            }
        }
        if best.as_ref().map_or(true, |(_, b)| min_abs > *b) {
            best = Some((subset, min_abs));
        }
    }
    let (indices, min_abs_det) = best.expect("at least one subset");
    let scale = field.lambda_scale().powi(r as i32);
    if min_abs_det <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(RegularityError::NoNonvanishingMinor {
            rank: r,
            best: min_abs_det,
        });
    }
    let log_samples: Vec<f64> = measure
        .density()
        .iter()
        .map(|f| f.select(&indices, &indices).det().norm().max(1e-300).ln())
        .collect();
    let log_det_integral = integrate_scalar(&log_samples);
    let det_sigma = (2.0 * PI).powf(r as f64) * (log_det_integral / (2.0 * PI)).exp();
    Ok(SubprocessSelection {
        indices,
        min_abs_det,
        det_sigma,
        log_det_integral,
    })
}

fn subsets(d: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(r);
    fn rec(start: usize, d: usize, r: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == r {
            out.push(current.clone());
            return;
        }
        for i in start..d {
            current.push(i);
            rec(i + 1, d, r, current, out);
            current.pop();
        }
    }
    rec(0, d, r, &mut current, &mut out);
    out
}

fn greedy_subset(measure: &SpectralMeasure, r: usize) -> Vec<usize> {
    let d = measure.dim();
    let mut chosen: Vec<usize> = Vec::with_capacity(r);
    for _ in 0..r {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..d {
            if chosen.contains(&cand) {
                continue;
            }
            let mut subset = chosen.clone();
            subset.push(cand);
            subset.sort_unstable();
            let mut min_abs = f64::INFINITY;
            for f in measure.density() {
                let det = f.select(&subset, &subset).det().norm();
                if det < min_abs {
                    min_abs = det;
                }
            }
            if best.map_or(true, |(_, b)| min_abs > b) {
                best = Some((cand, min_abs));
            }
        }
        chosen.push(best.expect("candidate exists").0);
        chosen.sort_unstable();
    }
    chosen
}

/// Outcome of one gauge attempt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeOutcome {
    pub gauge: String,
    pub rho_minus: Option<f64>,
    pub one_sided: Option<bool>,
    pub failure: Option<String>,
}

/// Log-integral diagnostics at the working grid and its half grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogIntegralDiagnostics {
    pub value: f64,
    pub value_half_grid: Option<f64>,
    pub floored_node_fraction: f64,
    pub per_channel: Vec<f64>,
    /// Fraction of nodes whose rank falls below the median.
    pub deficient_band_fraction: f64,
    pub divergence_fired: bool,
}

/// Full classification record; serializes to the report JSON emitted by the
/// CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub verdict: Verdict,
    pub dim: usize,
    pub grid_size: usize,
    pub rank: Option<usize>,
    pub rank_range: Option<(usize, usize)>,
    /// Fraction of nodes whose rank differs from the median rank.
    pub rank_deviation_fraction: Option<f64>,
    pub log_integral: Option<LogIntegralDiagnostics>,
    pub one_sidedness: Vec<GaugeOutcome>,
    /// `(2 pi)^r exp(integral sum log lambda_j / 2 pi)` (eigenvalue route).
    pub ks_lambda: Option<f64>,
    /// `(2 pi)^r exp(integral log det f_r / 2 pi)` over the selected
    /// subprocess (innovation determinant route; validated against
    /// time-domain prediction).
    pub ks_subprocess: Option<f64>,
    /// 1-based channel indices of the selected full-rank subprocess.
    pub subprocess_indices: Option<Vec<usize>>,
    pub atom_count: usize,
    pub singular_continuous: bool,
    /// Classification of the absolutely continuous part when a singular
    /// part is present (orthogonal decomposition into regular plus
    /// singular).
    pub ac_subreport: Option<Box<RegularityReport>>,
    pub config: ClassifierConfig,
    pub notes: Vec<String>,
}

/// Classify a spectral measure. A verdict is always produced for valid
/// measures; errors surface only hard numerical failures.
pub fn classify(
    measure: &SpectralMeasure,
    config: &ClassifierConfig,
) -> Result<RegularityReport, RegularityError> {
    let mut report = RegularityReport {
        verdict: Verdict::Regular,
        dim: measure.dim(),
        grid_size: measure.grid().size(),
        rank: None,
        rank_range: None,
        rank_deviation_fraction: None,
        log_integral: None,
        one_sidedness: Vec::new(),
        ks_lambda: None,
        ks_subprocess: None,
        subprocess_indices: None,
        atom_count: measure.atoms().len(),
        singular_continuous: measure.singular_continuous(),
        ac_subreport: None,
        config: config.clone(),
        notes: Vec::new(),
    };

    // (0) Singular spectral part.
    if measure.has_atoms() || measure.singular_continuous() {
        report.verdict = Verdict::Type0;
        let ac = measure.absolutely_continuous_part();
        if ac.trace_mass() > 1e-12 * measure.trace_mass().max(f64::MIN_POSITIVE) {
            report
                .notes
                .push("singular part coexists with an absolutely continuous part; see ac_subreport".into());
            report.ac_subreport = Some(Box::new(classify(&ac, config)?));
        }
        return Ok(report);
    }

    let (field, _constant) = EigenField::decompose_lenient(measure, config.rank_tol)?;
    let n = field.grid().size();
    let rank = field.rank();
    let profile = field.rank_profile();
    let min_rank = profile.iter().copied().min().unwrap_or(0);
    let max_rank = profile.iter().copied().max().unwrap_or(0);
    let deviation_frac =
        profile.iter().filter(|&&r| r != rank).count() as f64 / n as f64;
    report.rank = Some(rank);
    report.rank_range = Some((min_rank, max_rank));
    report.rank_deviation_fraction = Some(deviation_frac);

    if rank == 0 && max_rank == 0 {
        report.verdict = Verdict::Regular;
        report
            .notes
            .push("zero spectral measure: degenerate rank-0 process, trivially regular".into());
        return Ok(report);
    }

    // (1) Rank varies on a meaningful set of nodes.
    if deviation_frac >= config.rank_vary_frac {
        report.verdict = Verdict::Type1;
        return Ok(report);
    }

    // (2) Divergent log-eigenvalue integral: a thin positive-measure band
    // of numerically vanishing eigenvalues, too wide for isolated zeros.
    let below_frac = profile.iter().filter(|&&r| r < rank).count() as f64 / n as f64;
    let integral = log_det_lambda_integral(&field)?;
    let half_value = field
        .downsample_half()
        .map(|hf| log_det_lambda_integral(&hf).map(|li| li.total))
        .transpose()?;
    let fired = below_frac > config.isolated_zero_frac && below_frac < config.rank_vary_frac;
    report.log_integral = Some(LogIntegralDiagnostics {
        value: integral.total,
        value_half_grid: half_value,
        floored_node_fraction: integral.floored_nodes as f64 / n as f64,
        per_channel: integral.per_channel.clone(),
        deficient_band_fraction: below_frac,
        divergence_fired: fired,
    });
    if fired {
        report.verdict = Verdict::Type2;
        return Ok(report);
    }

    // Conditions (1)-(2) hold; evaluate the Kolmogorov-Szego quantities.
    report.ks_lambda = Some(kolmogorov_szego_lambda(&field)?);
    match select_full_rank_subprocess(measure, &field) {
        Ok(sel) => {
            report.ks_subprocess = Some(sel.det_sigma);
            report.subprocess_indices = Some(sel.indices.iter().map(|i| i + 1).collect());
        }
        Err(RegularityError::NoNonvanishingMinor { rank, best }) => {
            report.notes.push(format!(
                "no order-{rank} principal minor bounded away from zero (best {best:.3e}); subprocess route skipped"
            ));
        }
        Err(e) => return Err(e),
    }

    // Full rank: conditions (1) and (2) suffice, gauge search skipped.
    if rank == measure.dim() {
        report.verdict = Verdict::FullRankRegular;
        return Ok(report);
    }

    // (3) Search the gauge list for a one-sided eigenvector field.
    let mut any_one_sided = false;
    for &gauge in &config.gauges {
        match field.align_gauge(gauge) {
            Ok(aligned) => {
                let series = aligned.fourier();
                let rho = series.negative_tail_energy();
                let one_sided = series.one_sidedness(config.one_sided_tol) == Sidedness::OneSided;
                any_one_sided |= one_sided;
                report.one_sidedness.push(GaugeOutcome {
                    gauge: gauge.label().to_string(),
                    rho_minus: Some(rho),
                    one_sided: Some(one_sided),
                    failure: None,
                });
            }
            Err(e) => {
                report.one_sidedness.push(GaugeOutcome {
                    gauge: gauge.label().to_string(),
                    rho_minus: None,
                    one_sided: None,
                    failure: Some(e.to_string()),
                });
            }
        }
    }
    if any_one_sided {
        report.verdict = Verdict::Regular;
    } else {
        report.verdict = Verdict::InconclusiveCondition3;
        report.notes.push(
            "no attempted gauge is one-sided; the attempted gauges are not exhaustive and \
             necessity of the one-sidedness condition is open, so non-regularity is not asserted"
                .into(),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BuiltinModel;
    use crate::matrix::ComplexMatrix;
    use crate::spectral::FrequencyGrid;
    use num_complex::Complex64;

    fn field_of(model: &BuiltinModel, n: usize) -> EigenField {
        let measure = model.build(FrequencyGrid::new(n).unwrap()).unwrap();
        EigenField::decompose(&measure, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn log_integral_of_unit_eigenvalues_vanishes() {
        let field = field_of(&BuiltinModel::Regular, 512);
        let li = log_det_lambda_integral(&field).unwrap();
        assert!(li.total.abs() < 1e-10);
        assert_eq!(li.per_channel.len(), 2);
        assert_eq!(li.floored_nodes, 0);
    }

    #[test]
    fn log_integral_of_constant_channel() {
        // lambda = c constant, rank 1: integral is exactly 2 pi log c.
        let c = 0.37;
        let model = BuiltinModel::ScalarWhite {
            sigma2: 2.0 * PI * c,
        };
        let field = field_of(&model, 256);
        let li = log_det_lambda_integral(&field).unwrap();
        assert!((li.total - 2.0 * PI * c.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_integral_of_essential_zero_is_strongly_negative() {
        // The divergent-channel model: the grid value is floored-stable,
        // strongly negative at every resolution.
        let coarse = field_of_lenient(&BuiltinModel::Type2, 2048);
        let fine = field_of_lenient(&BuiltinModel::Type2, 4096);
        let a = log_det_lambda_integral(&coarse).unwrap();
        let b = log_det_lambda_integral(&fine).unwrap();
        assert!(a.total < -10.0 && b.total < -10.0);
        assert!((a.total - b.total).abs() < 0.5);
        assert!(b.floored_nodes > 0);
    }

    fn field_of_lenient(model: &BuiltinModel, n: usize) -> EigenField {
        let measure = model.build(FrequencyGrid::new(n).unwrap()).unwrap();
        EigenField::decompose_lenient(&measure, DEFAULT_RANK_TOL)
            .unwrap()
            .0
    }

    #[test]
    fn ks_lambda_examples() {
        let field = field_of(&BuiltinModel::Regular, 512);
        let ks = kolmogorov_szego_lambda(&field).unwrap();
        assert!((ks - 4.0 * PI * PI).abs() < 1e-8);

        let white = field_of(&BuiltinModel::ScalarWhite { sigma2: 2.5 }, 256);
        assert!((kolmogorov_szego_lambda(&white).unwrap() - 2.5).abs() < 1e-10);

        // MA(1): integral of log |1 + theta e^{-iw}|^2 vanishes for |theta|<1,
        // so the innovation variance is exactly 1.
        let ma1 = field_of(&BuiltinModel::ScalarMa1 { theta: 0.5 }, 1024);
        assert!((kolmogorov_szego_lambda(&ma1).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn subprocess_of_white_noise_model() {
        let model = BuiltinModel::Regular;
        let measure = model.build(FrequencyGrid::new(512).unwrap()).unwrap();
        let field = EigenField::decompose(&measure, DEFAULT_RANK_TOL).unwrap();
        let sel = select_full_rank_subprocess(&measure, &field).unwrap();
        assert_eq!(sel.indices, vec![0, 1]);
        assert!((sel.min_abs_det - 0.5).abs() < 1e-12);
        assert!((sel.det_sigma - 2.0 * PI * PI).abs() < 1e-8);
    }

    #[test]
    fn subprocess_of_diagonal_density_is_everything() {
        let grid = FrequencyGrid::new(128).unwrap();
        let measure = SpectralMeasure::from_density_fn(grid, 3, |w| {
            ComplexMatrix::diag(&[1.0, 2.0 + w.sin(), 0.5])
        })
        .unwrap();
        let field = EigenField::decompose(&measure, DEFAULT_RANK_TOL).unwrap();
        let sel = select_full_rank_subprocess(&measure, &field).unwrap();
        assert_eq!(sel.indices, vec![0, 1, 2]);
    }

    #[test]
    fn subprocess_of_candidate_model() {
        // The (1,2) minor vanishes at nodes where cos(3w) = -1 and the (2,3)
        // minor vanishes identically; (1,3) stays >= 5/9.
        let model = BuiltinModel::Type3Candidate;
        let measure = model.build(FrequencyGrid::new(512).unwrap()).unwrap();
        let field = EigenField::decompose(&measure, DEFAULT_RANK_TOL).unwrap();
        let sel = select_full_rank_subprocess(&measure, &field).unwrap();
        assert_eq!(sel.indices, vec![0, 2]);
        assert!(sel.min_abs_det > 0.5);
        assert!(sel.det_sigma.is_finite() && sel.det_sigma > 0.0);
    }

    #[test]
    fn classify_the_whole_taxonomy() {
        let grid = FrequencyGrid::new(1024).unwrap();
        let config = ClassifierConfig::default();
        let cases = [
            ("type0", Verdict::Type0),
            ("type1", Verdict::Type1),
            ("type2", Verdict::Type2),
            ("type3_candidate", Verdict::InconclusiveCondition3),
            ("regular", Verdict::Regular),
        ];
        for (id, expect) in cases {
            let model = BuiltinModel::parse(id, None).unwrap();
            let measure = model.build(grid).unwrap();
            let report = classify(&measure, &config).unwrap();
            assert_eq!(report.verdict, expect, "{id}");
        }
        // Scalar models are full rank: conditions (1)-(2) suffice.
        let ma1 = BuiltinModel::ScalarMa1 { theta: 0.5 }.build(grid).unwrap();
        let report = classify(&ma1, &config).unwrap();
        assert_eq!(report.verdict, Verdict::FullRankRegular);
        assert!((report.ks_lambda.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn classify_regular_report_contents() {
        let measure = BuiltinModel::Regular
            .build(FrequencyGrid::new(1024).unwrap())
            .unwrap();
        let report = classify(&measure, &ClassifierConfig::default()).unwrap();
        assert_eq!(report.rank, Some(2));
        assert_eq!(report.rank_range, Some((2, 2)));
        assert!((report.ks_lambda.unwrap() - 4.0 * PI * PI).abs() < 1e-8);
        assert!((report.ks_subprocess.unwrap() - 2.0 * PI * PI).abs() < 1e-8);
        assert_eq!(report.subprocess_indices, Some(vec![1, 2]));
        let first = &report.one_sidedness[0];
        assert_eq!(first.one_sided, Some(true));
        assert!(first.rho_minus.unwrap() < 1e-10);
    }

    #[test]
    fn classify_candidate_reports_two_sided_gauges() {
        let measure = BuiltinModel::Type3Candidate
            .build(FrequencyGrid::new(1024).unwrap())
            .unwrap();
        let report = classify(&measure, &ClassifierConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::InconclusiveCondition3);
        assert_eq!(report.one_sidedness.len(), 2);
        for outcome in &report.one_sidedness {
            assert_eq!(outcome.one_sided, Some(false), "{}", outcome.gauge);
            assert!(outcome.rho_minus.unwrap() > 1e-3);
        }
        // Conditions (1) and (2) hold, so both determinants are reported.
        assert!(report.ks_lambda.is_some() && report.ks_subprocess.is_some());
    }

    #[test]
    fn classify_mixed_spectrum_reports_ac_part() {
        let model = BuiltinModel::Regular;
        let measure = model
            .build(FrequencyGrid::new(512).unwrap())
            .unwrap()
            .with_atoms(vec![crate::spectral::SpectralAtom {
                omega: 1.0,
                mass: crate::corpus::template_density(1.0, 1.0),
            }])
            .unwrap();
        let report = classify(&measure, &ClassifierConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Type0);
        let sub = report.ac_subreport.unwrap();
        assert_eq!(sub.verdict, Verdict::Regular);
    }

    #[test]
    fn classify_zero_density_is_degenerate_regular() {
        let grid = FrequencyGrid::new(64).unwrap();
        let measure =
            SpectralMeasure::from_density_fn(grid, 2, |_| ComplexMatrix::zeros(2, 2)).unwrap();
        let report = classify(&measure, &ClassifierConfig::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Regular);
        assert_eq!(report.rank, Some(0));
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn classify_is_deterministic() {
        let measure = BuiltinModel::Type3Candidate
            .build(FrequencyGrid::new(512).unwrap())
            .unwrap();
        let config = ClassifierConfig::default();
        let a = serde_json::to_string(&classify(&measure, &config).unwrap()).unwrap();
        let b = serde_json::to_string(&classify(&measure, &config).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_rank_verdict_ignores_gauge_list() {
        let grid = FrequencyGrid::new(256).unwrap();
        let measure = SpectralMeasure::from_density_fn(grid, 2, |w| {
            let q = ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(1.0, 0.0) + Complex64::from_polar(0.4, -w),
                    Complex64::new(0.2, 0.0),
                    Complex64::ZERO,
                    Complex64::new(1.0, 0.0) + Complex64::from_polar(0.3, -2.0 * w),
                ],
            )
            .unwrap();
            q.mul(&q.adjoint()).scale_re(1.0 / (2.0 * PI))
        })
        .unwrap();
        for gauges in [
            vec![GaugeStrategy::Raw],
            vec![GaugeStrategy::AnchorRealThenContinuity],
            vec![],
        ] {
            let config = ClassifierConfig {
                gauges,
                ..ClassifierConfig::default()
            };
            let report = classify(&measure, &config).unwrap();
            assert_eq!(report.verdict, Verdict::FullRankRegular);
        }
    }

    #[test]
    fn diagonal_ks_is_product_of_scalar_ks() {
        let grid = FrequencyGrid::new(1024).unwrap();
        let lam = |theta: f64, w: f64| {
            (Complex64::new(1.0, 0.0) + Complex64::from_polar(theta, -w)).norm_sqr() / (2.0 * PI)
        };
        let measure = SpectralMeasure::from_density_fn(grid, 2, |w| {
            ComplexMatrix::diag(&[lam(0.3, w), lam(0.6, w)])
        })
        .unwrap();
        let field = EigenField::decompose(&measure, DEFAULT_RANK_TOL).unwrap();
        let sel = select_full_rank_subprocess(&measure, &field).unwrap();
        let scalar_ks = |theta: f64| {
            let f = field_of(&BuiltinModel::ScalarMa1 { theta }, 1024);
            kolmogorov_szego_lambda(&f).unwrap()
        };
        let product = scalar_ks(0.3) * scalar_ks(0.6);
        assert!((sel.det_sigma - product).abs() < 1e-8 * product);
    }

    #[test]
    fn scaling_the_density_scales_ks_and_keeps_verdicts() {
        let grid = FrequencyGrid::new(512).unwrap();
        let config = ClassifierConfig::default();
        for id in ["regular", "type3_candidate", "type2", "type1"] {
            let model = BuiltinModel::parse(id, None).unwrap();
            let base = model.build(grid).unwrap();
            let base_report = classify(&base, &config).unwrap();
            for c in [0.37, 2.0] {
                let scaled = base.scaled(c);
                let report = classify(&scaled, &config).unwrap();
                assert_eq!(report.verdict, base_report.verdict, "{id} c={c}");
                if let (Some(a), Some(b)) = (base_report.ks_lambda, report.ks_lambda) {
                    let r = base_report.rank.unwrap() as i32;
                    assert!((b - a * c.powi(r)).abs() < 1e-8 * b.abs(), "{id} c={c}");
                }
            }
        }
    }
}
