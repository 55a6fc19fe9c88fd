//! Command-line front end: reproducible batch runs of the regularity
//! classifier, the rank-k approximation pipeline, path simulation, and
//! Monte Carlo verification of the error certificates.
//!
//! Exit codes: 0 success (any verdict), 1 verification mismatch,
//! 2 usage/validation error, 3 numeric failure.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

use specdpc::corpus::CorpusError;
use specdpc::dpc::{build_filter_bank, DpcError, FilterBank, FilterBankConfig, SidedPolicy};
use specdpc::eigenfield::{EigenField, EigenFieldError, GaugeStrategy};
use specdpc::io::{
    self, filter_to_file, resolve_model, IoError, ModelDescriptor, PathSidecar, ReportFile,
    ToolInfo,
};
use specdpc::regularity::{classify, ClassifierConfig, RegularityError};
use specdpc::spectral::{SpectralError, SpectralMeasure};
use specdpc::timedomain::{monte_carlo_mse, Simulator, TimeDomainError};

#[derive(Parser)]
#[command(
    name = "specdpc",
    version,
    about = "Spectral regularity analysis and dynamic principal components \
             for multivariate stationary time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a model (regular / type 0-3 / inconclusive) and report the
    /// Kolmogorov-Szego determinants and one-sidedness diagnostics.
    Analyze {
        /// `builtin:<id>` or a model JSON file.
        #[arg(long)]
        model: String,
        /// Grid size for builtin models (power of two).
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        /// Comma-separated gauge strategies to attempt.
        #[arg(long, default_value = "anchor-continuity,raw")]
        gauges: String,
        /// Relative eigenvalue threshold for rank detection.
        #[arg(long, default_value_t = specdpc::eigenfield::DEFAULT_RANK_TOL)]
        rank_tol: f64,
        /// Negative-tail energy tolerance for the one-sided verdict.
        #[arg(long, default_value_t = specdpc::eigenfield::DEFAULT_ONE_SIDED_TOL)]
        one_sided_tol: f64,
        /// Node fraction at which a varying rank becomes type 1.
        #[arg(long, default_value_t = 0.05)]
        rank_vary_frac: f64,
        /// Node fraction attributed to isolated eigenvalue zeros.
        #[arg(long, default_value_t = 0.0025)]
        isolated_zero_frac: f64,
        /// Write the report JSON here (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the rank-k filter bank and its error certificate.
    Approximate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        /// Approximation rank k.
        #[arg(long)]
        rank: usize,
        /// Tap window (|j| <= taps); defaults to grid/8.
        #[arg(long)]
        taps: Option<usize>,
        /// One- or two-sided taps, or auto by the field's negative tail.
        #[arg(long, default_value = "auto")]
        sided: String,
        /// Abort when the discarded coefficient energy fraction exceeds
        /// this (pass "none" to disable).
        #[arg(long, default_value = "0.01")]
        tail_limit: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a sample path (CSV plus JSON sidecar).
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Moving-average window for the spectral factor.
        #[arg(long)]
        taps: Option<usize>,
        /// Draw real innovations (requires a real factor and no atoms).
        #[arg(long)]
        real: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the closed-form certificate against a Monte Carlo estimate.
    Verify {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 8)]
        mc_reps: usize,
        #[arg(long, default_value_t = 100_000)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        taps: Option<usize>,
        /// Write the verification summary JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure modes mapped onto process exit codes.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Matrix(m) => Failure::Numeric(m.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<RegularityError> for Failure {
    fn from(e: RegularityError) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<EigenFieldError> for Failure {
    fn from(e: EigenFieldError) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<TimeDomainError> for Failure {
    fn from(e: TimeDomainError) -> Self {
        match e {
            TimeDomainError::UnsimulableModel(_)
            | TimeDomainError::RealModeUnavailable(_)
            | TimeDomainError::PathTooShort { .. } => Failure::Usage(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("specdpc: error: {}", f.message());
            f.code()
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Analyze {
            model,
            grid,
            gauges,
            rank_tol,
            one_sided_tol,
            rank_vary_frac,
            isolated_zero_frac,
            out,
        } => {
            let (measure, desc) = resolve_model(&model, grid)?;
            let gauges = parse_gauges(&gauges)?;
            let config = ClassifierConfig {
                rank_tol,
                one_sided_tol,
                rank_vary_frac,
                isolated_zero_frac,
                gauges,
            };
            let report = classify(&measure, &config)?;
            println!("model:   {}", desc.source);
            println!(
                "verdict: {}",
                serde_json::to_value(report.verdict).unwrap().as_str().unwrap()
            );
            if let Some(rank) = report.rank {
                println!("rank:    {rank}");
            }
            if let (Some(a), Some(b)) = (report.ks_lambda, report.ks_subprocess) {
                println!("ks:      lambda-route {a:.9}, subprocess-route {b:.9}");
            }
            let file = ReportFile {
                tool: ToolInfo::current(),
                input: desc,
                report,
            };
            match out {
                Some(path) => io::write_report(&path, &file)?,
                None => println!("{}", io::to_pretty_json(&file)?),
            }
            Ok(0)
        }

        Command::Approximate {
            model,
            grid,
            rank,
            taps,
            sided,
            tail_limit,
            out,
        } => {
            let (measure, desc) = resolve_model(&model, grid)?;
            let bank = approximate(&measure, rank, taps, &sided, &tail_limit)?;
            let cert = &bank.certificate;
            println!(
                "rank {}: mse {:.9}, relative error {:.9}, {} taps ({:?}), tail energy {:.3e}",
                rank,
                cert.mse,
                cert.relative_error,
                bank.taps.len(),
                bank.sidedness,
                bank.tail_energy
            );
            let file = filter_to_file(&bank, desc);
            match out {
                Some(path) => io::write_filter(&path, &file)?,
                None => println!("{}", io::to_pretty_json(&file)?),
            }
            Ok(0)
        }

        Command::Simulate {
            model,
            grid,
            length,
            seed,
            taps,
            real,
            out,
        } => {
            let (measure, desc) = resolve_model(&model, grid)?;
            let window = taps.unwrap_or(measure.grid().size() / 8);
            let simulator =
                Simulator::from_measure(&measure, specdpc::eigenfield::DEFAULT_RANK_TOL, window)?;
            let path = simulator.sample(length, seed, real)?;
            io::save_path_csv(&path, &out)?;
            let sidecar = PathSidecar {
                tool: ToolInfo::current(),
                input: desc,
                seed,
                length,
                generator: path.generator.clone(),
                burn_in: path.burn_in,
                real_valued: real,
            };
            io::write_sidecar(&sidecar_path(&out), &sidecar)?;
            println!(
                "wrote {} samples (dim {}, generator {}) to {}",
                length,
                path.dim,
                path.generator,
                out.display()
            );
            Ok(0)
        }

        Command::Verify {
            model,
            grid,
            rank,
            mc_reps,
            length,
            seed,
            taps,
            out,
        } => {
            if mc_reps < 2 {
                return Err(Failure::Usage("--mc-reps must be at least 2".into()));
            }
            let (measure, desc) = resolve_model(&model, grid)?;
            let bank = approximate(&measure, rank, taps, "auto", "none")?;
            let window = taps.unwrap_or(measure.grid().size() / 8);
            let simulator =
                Simulator::from_measure(&measure, specdpc::eigenfield::DEFAULT_RANK_TOL, window)?;
            let mc = monte_carlo_mse(&simulator, &bank, length, mc_reps, seed)?;
            let cert = &bank.certificate;
            let gap = (mc.mean - cert.mse).abs();
            let sigmas = gap / mc.stderr.max(f64::MIN_POSITIVE);
            let pass = sigmas <= 5.0;
            println!("quantity      closed-form      monte-carlo      stderr       |gap|/stderr");
            println!(
                "mse(k={rank})      {:<16.9} {:<16.9} {:<12.3e} {:.2}",
                cert.mse, mc.mean, mc.stderr, sigmas
            );
            println!(
                "{}: Monte Carlo estimate within 5 standard errors of the certificate \
                 ({} reps x {} samples)",
                if pass { "PASS" } else { "FAIL" },
                mc.reps,
                mc.samples_per_rep
            );
            if let Some(path) = out {
                let summary = VerifySummary {
                    tool: ToolInfo::current(),
                    input: desc,
                    rank,
                    certificate_mse: cert.mse,
                    monte_carlo_mse: mc.mean,
                    stderr: mc.stderr,
                    reps: mc.reps,
                    samples_per_rep: mc.samples_per_rep,
                    gap_in_stderr: sigmas,
                    pass,
                };
                std::fs::write(&path, io::to_pretty_json(&summary)?)
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(if pass { 0 } else { 1 })
        }
    }
}

#[derive(serde::Serialize)]
struct VerifySummary {
    tool: ToolInfo,
    input: ModelDescriptor,
    rank: usize,
    certificate_mse: f64,
    monte_carlo_mse: f64,
    stderr: f64,
    reps: usize,
    samples_per_rep: usize,
    gap_in_stderr: f64,
    pass: bool,
}

/// Shared approximate/verify pipeline: lenient decomposition, leading-k
/// gauge alignment, filter-bank construction. Excess tail energy demotes to
/// a warning since the bank is still usable.
fn approximate(
    measure: &SpectralMeasure,
    rank: usize,
    taps: Option<usize>,
    sided: &str,
    tail_limit: &str,
) -> Result<FilterBank, Failure> {
    if measure.has_atoms() || measure.singular_continuous() {
        return Err(Failure::Usage(
            "approximation requires an absolutely continuous model (no atoms or singular part)"
                .into(),
        ));
    }
    let n = measure.grid().size();
    let sided = match sided {
        "auto" => SidedPolicy::Auto,
        "one" => SidedPolicy::One,
        "two" => SidedPolicy::Two,
        other => {
            return Err(Failure::Usage(format!(
                "unknown --sided value `{other}` (expected auto|one|two)"
            )))
        }
    };
    let max_tail_energy = match tail_limit {
        "none" => None,
        value => Some(value.parse::<f64>().map_err(|_| {
            Failure::Usage(format!("bad --tail-limit `{value}` (number or `none`)"))
        })?),
    };
    let (field, _) = EigenField::decompose_lenient(measure, specdpc::eigenfield::DEFAULT_RANK_TOL)?;
    if rank < 1 || rank > field.channels() {
        return Err(Failure::Usage(format!(
            "--rank {rank} outside 1..={}",
            field.channels()
        )));
    }
    let aligned = field.align_gauge_leading(GaugeStrategy::AnchorRealThenContinuity, rank)?;
    let config = FilterBankConfig {
        window: taps.unwrap_or(n / 8),
        sided,
        one_sided_tol: specdpc::eigenfield::DEFAULT_ONE_SIDED_TOL,
        max_tail_energy,
    };
    match build_filter_bank(&aligned, rank, &config) {
        Ok(bank) => Ok(bank),
        Err(DpcError::ExcessTailEnergy {
            tail_energy,
            limit,
            bank,
        }) => {
            eprintln!(
                "specdpc: warning: discarded coefficient energy {tail_energy:.3e} exceeds \
                 {limit:.3e}; reconstruction error will exceed the certificate"
            );
            Ok(*bank)
        }
        Err(DpcError::RankOutOfRange { k, max }) => {
            Err(Failure::Usage(format!("--rank {k} outside 1..={max}")))
        }
        Err(e) => Err(Failure::Numeric(e.to_string())),
    }
}

fn parse_gauges(arg: &str) -> Result<Vec<GaugeStrategy>, Failure> {
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            GaugeStrategy::parse(s)
                .ok_or_else(|| Failure::Usage(format!("unknown gauge strategy `{s}`")))
        })
        .collect()
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}
