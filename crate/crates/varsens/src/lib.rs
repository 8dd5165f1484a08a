//! Variance-based global sensitivity analysis for closed-form models.
//!
//! Given a model written as a plain math expression and a box domain for its
//! parameters, this crate answers "how much of the output's variance does
//! each input drive?" — deterministically, with fixed-resolution quadrature
//! rather than sampling, so results are exactly reproducible run to run. A
//! Monte Carlo baseline with standard errors is included for cross-checking.
//!
//! The pieces:
//!
//! * [`expr`] — parse and evaluate the model text, including JavaScript
//!   `Math.*` spellings; compile it once for tight evaluation loops.
//! * [`quad`] — trapezoid and midpoint rules on intervals and boxes, with
//!   compensated accumulation and an up-front evaluation budget.
//! * [`sensitivity`] — the estimators: fixed-point slice variances,
//!   first-order Sobol contributions via conditional expectations, grouped
//!   subsets, total variance, and pair interactions.
//! * [`sampling`] — seeded Monte Carlo versions of the two main analyses,
//!   with per-entry standard errors.
//!
//! ```
//! use varsens::{
//!     Expr, ParameterSpec, SensitivityConfig, first_order_variance_contributions,
//! };
//!
//! let model = Expr::parse("x + 2*y").unwrap();
//! let params = vec![
//!     ParameterSpec::with_fixed("x", 0.0, 1.0, 0.5),
//!     ParameterSpec::with_fixed("y", 0.0, 1.0, 0.5),
//! ];
//! let cfg = SensitivityConfig { delta_1d: 1e-3, ..SensitivityConfig::default() };
//! let report = first_order_variance_contributions(&model, &params, &cfg).unwrap();
//! // x contributes Var(x) = 1/12, y contributes Var(2y) = 4/12: a 20/80 split.
//! assert!((report.entries[0].percentage.unwrap() - 20.0).abs() < 1e-3);
//! assert!((report.entries[1].percentage.unwrap() - 80.0).abs() < 1e-3);
//! ```

pub mod expr;
pub mod quad;
pub mod sampling;
pub mod sensitivity;

pub use expr::{Binding, CompiledExpr, EvalError, Expr, ParseError};
pub use quad::{Interval, QuadError};
pub use sampling::{mc_sobol_first_order, mc_variance_contribution, SampleConfig};
pub use sensitivity::{
    absolute_indices, conditional_expectation_moments, first_order_variance_contributions,
    grouped_variance_contribution, sobol_first_order, sobol_pair_interaction, total_variance,
    variance_of, ConditionalMoments, Diagnostics, FixedValue, Method, ParameterResult,
    ParameterSpec, ScalarEstimate, SensitivityConfig, SensitivityError, SensitivityReport,
    SettingsEcho,
};
