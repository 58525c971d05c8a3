//! From per-run DSC samples to model evidences and best fits.

mod aggregate;
mod compare;
mod evidence;
mod fit;
mod likelihood;
mod samples;

pub use aggregate::{aggregate, AggregateOptions, AggregatedPoint, Aggregation, Diagnostic};
pub use compare::{compare_models, highlight_families, ComparisonRow, ComparisonTable, HIGHLIGHT_GAP};
pub use evidence::{
    default_nodes, log10_bayes_factor, log_evidence, EvidenceMethod, EvidenceResult, QuadSpec,
    DEFAULT_MC_SAMPLES, SUPPORT_NATS,
};
pub use fit::{best_fit, best_fit_with_starts, halton, nelder_mead_unit, FitResult, DEFAULT_STARTS};
pub use likelihood::{log_likelihood, Likelihood};
pub use samples::{parse_samples, read_samples, samples_to_string, write_samples, SampleRecord, SAMPLES_HEADER};
