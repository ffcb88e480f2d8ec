//! Validation harness: KS tests, grid-law diagnostics, the off-grid
//! fingerprint, Fokker–Planck residuals and the constant-volatility
//! counterexample.

mod appendix;
mod diagnostics;
mod fingerprint;
mod fp;
mod ks;
mod report;

pub use appendix::{
    appendix_demo, linear_sde_prob_nonpositive, linear_sde_terminal, AppendixConfig, AppendixReport, ObjectiveSide,
    RiskNeutralSide,
};
pub use diagnostics::{
    grid_columns, grid_return_diagnostics, CorrelationCheck, GridDiagnostics, MarginalCheck, ReturnCheck,
};
pub use fingerprint::{off_grid_fingerprint, FingerprintReport, VarianceCheck};
pub use fp::{fp_residual, uniform_mesh, FpResidualReport};
pub use ks::{
    kolmogorov_survival, ks_test, ks_test_lognormal, ks_test_normal, ks_two_sample, KsResult, MIN_LOGNORMAL_SAMPLES,
};
pub use report::{ValidationEntry, ValidationReport};

/// Significance level of every KS check.
pub const KS_LEVEL: f64 = 0.01;
