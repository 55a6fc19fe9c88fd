pub mod corpus;
pub mod dpc;
pub mod eigenfield;
pub mod io;
pub mod matrix;
pub mod regularity;
pub mod spectral;
pub mod timedomain;
pub use dpc::{ApproximationCertificate, FilterBank, FilterBankConfig, SidedPolicy};
pub use eigenfield::{EigenField, FourierSeries, GaugeStrategy, ScalarOuterFactor, Sidedness};
pub use matrix::{ComplexMatrix, HermitianEigen};
pub use regularity::{ClassifierConfig, RegularityReport, Verdict};
pub use spectral::{CovarianceSequence, FrequencyGrid, SpectralMeasure, Taper};
pub use timedomain::{EdgePolicy, PredictionResult, SamplePath, Simulator};
