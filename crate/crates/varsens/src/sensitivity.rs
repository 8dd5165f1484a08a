//! Variance-based sensitivity measures for expressions over box domains,
//! computed with deterministic quadrature.
//!
//! Two estimator families are provided:
//!
//! * **Fixed-point slices** ([`variance_of`],
//!   [`first_order_variance_contributions`]): vary one parameter over its
//!   range while every other parameter sits at its `fixed` value, and take
//!   the variance of that one-dimensional slice. Cheap — one 1-D integral
//!   per parameter at the fine `delta_1d` resolution — and exact for
//!   additive models, but blind to interactions.
//! * **Conditional expectations** ([`sobol_first_order`],
//!   [`conditional_expectation_moments`], [`grouped_variance_contribution`],
//!   [`total_variance`], [`sobol_pair_interaction`]): average the model over
//!   the complementary parameters first, then take the variance of that
//!   conditional mean. This is the first-order Sobol decomposition,
//!   averaging over the whole box instead of a single fixed point. The outer
//!   variance uses a midpoint grid and the inner means use trapezoid grids,
//!   both at the coarser `delta_base_nd` resolution — cost grows as
//!   `N^dim`, hence the evaluation budget.
//!
//! All variance estimates subtract the model's value at the domain center
//! before accumulating moments. Algebraically this changes nothing;
//! numerically it keeps `E[f²] - E[f]²` from cancelling catastrophically
//! when the model's mean dwarfs its spread, which is what makes the results
//! stable under large constant shifts of the model.
//!
//! Tiny negative variance estimates are quadrature noise around zero and
//! are clamped to `0` (counted in [`Diagnostics::clamped_negatives`]);
//! anything more negative than the tolerance is reported as
//! [`SensitivityError::NegativeVariance`] rather than silently absorbed.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, CompiledExpr, EvalError, Expr};
use crate::quad::{self, Interval, QuadError};

/// Resolution of the 1-D slice integrals.
pub const DEFAULT_RESOLUTION_1D: f64 = 1e-5;
/// Resolution of the multi-dimensional conditional-expectation grids.
pub const DEFAULT_RESOLUTION_ND: f64 = 1e-3;
/// Default cap on integrand evaluations per operation.
pub const DEFAULT_MAX_EVALUATIONS: u64 = 100_000_000;

/// Variance estimates in `[-NEGATIVE_VARIANCE_TOLERANCE, 0)` clamp to zero;
/// more negative values raise [`SensitivityError::NegativeVariance`].
pub const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-10;
/// Looser clamp tolerance for pair interactions, which subtract three
/// separately estimated variances and so carry more cancellation noise.
pub const PAIR_NEGATIVE_TOLERANCE: f64 = 1e-8;
/// When the raw variances sum to no more than this, the model is flat over
/// the domain and percentage shares are undefined.
pub const NO_VARIATION_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityConfig {
    /// Resolution for 1-D slice integrals ([`variance_of`] and friends).
    pub delta_1d: f64,
    /// Resolution for conditional-expectation grids (outer and inner).
    pub delta_base_nd: f64,
    /// Refuse any single operation that would evaluate the model more times
    /// than this; the check happens before the first evaluation.
    pub max_evaluations: u64,
}

impl Default for SensitivityConfig {
    fn default() -> SensitivityConfig {
        SensitivityConfig {
            delta_1d: DEFAULT_RESOLUTION_1D,
            delta_base_nd: DEFAULT_RESOLUTION_ND,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
        }
    }
}

/// One model input: a name, its range, and optionally the value it is held
/// at while other parameters are sliced. `fixed` is only consulted by the
/// fixed-point slice operations; the conditional-expectation family averages
/// over the whole range instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    #[serde(rename = "param")]
    pub name: String,
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<f64>,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> ParameterSpec {
        ParameterSpec {
            name: name.into(),
            min,
            max,
            fixed: None,
        }
    }

    pub fn with_fixed(name: impl Into<String>, min: f64, max: f64, fixed: f64) -> ParameterSpec {
        ParameterSpec {
            name: name.into(),
            min,
            max,
            fixed: Some(fixed),
        }
    }

    fn interval(&self) -> Interval {
        Interval {
            min: self.min,
            max: self.max,
        }
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Variance,
    Sobol,
    VarianceMc,
    SobolMc,
    TotalVariance,
    PairInteractions,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Variance => "variance",
            Method::Sobol => "sobol",
            Method::VarianceMc => "variance-mc",
            Method::SobolMc => "sobol-mc",
            Method::TotalVariance => "total-variance",
            Method::PairInteractions => "pair-interactions",
        })
    }
}

/// Per-parameter (or per-pair) line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterResult {
    pub param: String,
    pub raw_variance: f64,
    /// Share of the summed raw variances, in percent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percentage: Option<f64>,
    /// Raw variance divided by the total variance of the model, when the
    /// total is available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absolute_index: Option<f64>,
    /// One standard error of the estimate; Monte Carlo methods only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedValue {
    pub param: String,
    pub value: f64,
}

/// Echo of the settings a report was produced with; only the fields the
/// method actually consulted are present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SettingsEcho {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_1d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_base_nd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_outer: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_inner: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<FixedValue>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Variance estimates that fell inside the negative-noise tolerance and
    /// were reported as zero.
    pub clamped_negatives: u64,
    /// Model evaluations the operation performed. Derived from the grid
    /// arithmetic, so identical runs report identical counts.
    pub evaluations: u64,
    /// Wall-clock duration of the computation. Deliberately excluded from
    /// serialized reports so that identical analyses serialize identically.
    #[serde(skip)]
    pub wall_time: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub method: Method,
    pub entries: Vec<ParameterResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_variance: Option<f64>,
    pub settings: SettingsEcho,
    pub diagnostics: Diagnostics,
}

/// A single variance estimate plus bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub value: f64,
    /// The estimate was a small negative number inside the noise tolerance
    /// and has been reported as zero.
    pub clamped_negative: bool,
    pub evaluations: u64,
}

/// The two moments of a conditional expectation: `E[m²]` and `(E[m])²`
/// where `m(t)` is the model averaged over every other parameter with the
/// target held at `t`. Their difference is the first-order contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalMoments {
    pub mean_of_square: f64,
    pub square_of_mean: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("no parameters supplied")]
    NoParameters,
    #[error("parameter '{name}': {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("duplicate parameter name '{name}'")]
    DuplicateParameter { name: String },
    #[error("expression uses variable '{name}' but no parameter defines it")]
    UnknownVariable { name: String },
    #[error("parameter index {index} out of range for {count} parameters")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid parameter subset: {reason}")]
    InvalidSubset { reason: String },
    #[error("{which} must be at least 2, got {got}")]
    InvalidSampleCount { which: &'static str, got: u64 },
    #[error(
        "variance estimate {value} is more negative than the noise tolerance; \
         the quadrature resolution is too coarse for this model"
    )]
    NegativeVariance { value: f64 },
    #[error("model shows no variation over the domain (raw variances sum to {total})")]
    NoVariation { total: f64, raw_variances: Vec<f64> },
    #[error("total variance must be positive and finite to form ratios, got {value}")]
    InvalidTotalVariance { value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

pub(crate) fn validate_params(params: &[ParameterSpec]) -> Result<(), SensitivityError> {
    if params.is_empty() {
        return Err(SensitivityError::NoParameters);
    }
    for (i, p) in params.iter().enumerate() {
        if !expr::is_valid_variable_name(&p.name) {
            return Err(SensitivityError::InvalidParameter {
                name: p.name.clone(),
                reason: "not a usable variable name (identifier syntax, not reserved)".into(),
            });
        }
        if !(p.min.is_finite() && p.max.is_finite() && p.min < p.max) {
            return Err(SensitivityError::InvalidParameter {
                name: p.name.clone(),
                reason: format!("requires finite bounds with min < max, got [{}, {}]", p.min, p.max),
            });
        }
        if let Some(v) = p.fixed {
            if !v.is_finite() || v < p.min || v > p.max {
                return Err(SensitivityError::InvalidParameter {
                    name: p.name.clone(),
                    reason: format!("fixed value {v} lies outside [{}, {}]", p.min, p.max),
                });
            }
        }
        if params[..i].iter().any(|q| q.name == p.name) {
            return Err(SensitivityError::DuplicateParameter { name: p.name.clone() });
        }
    }
    Ok(())
}

pub(crate) fn compile_for(
    expr: &Expr,
    params: &[ParameterSpec],
) -> Result<CompiledExpr, SensitivityError> {
    let order: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
    expr.compile(&order).map_err(|e| match e {
        EvalError::UnboundVariable(name) => SensitivityError::UnknownVariable { name },
        // Compilation performs no arithmetic; only name resolution can fail.
        EvalError::NonFiniteResult => unreachable!("compilation does not evaluate"),
    })
}

pub(crate) fn require_fixed(params: &[ParameterSpec]) -> Result<Vec<f64>, SensitivityError> {
    params
        .iter()
        .map(|p| {
            p.fixed.ok_or_else(|| SensitivityError::InvalidParameter {
                name: p.name.clone(),
                reason: "a fixed value is required for fixed-point slice analysis".into(),
            })
        })
        .collect()
}

fn check_index(index: usize, count: usize) -> Result<(), SensitivityError> {
    if index < count {
        Ok(())
    } else {
        Err(SensitivityError::IndexOutOfRange { index, count })
    }
}

fn check_budget(needed: u128, budget: u64) -> Result<(), SensitivityError> {
    if needed > budget as u128 {
        Err(QuadError::BudgetExceeded { needed, budget }.into())
    } else {
        Ok(())
    }
}

fn clamp_negative(value: f64, tolerance: f64) -> Result<(f64, bool), SensitivityError> {
    if value >= 0.0 {
        Ok((value, false))
    } else if value >= -tolerance {
        Ok((0.0, true))
    } else {
        Err(SensitivityError::NegativeVariance { value })
    }
}

// ---------------------------------------------------------------------------
// Fixed-point slices
// ---------------------------------------------------------------------------

/// Variance of the model along the `target` parameter's range with every
/// other parameter held at its fixed value. Uses the fine 1-D resolution.
pub fn variance_of(
    expr: &Expr,
    params: &[ParameterSpec],
    target: usize,
    cfg: &SensitivityConfig,
) -> Result<ScalarEstimate, SensitivityError> {
    validate_params(params)?;
    check_index(target, params.len())?;
    let fixed = require_fixed(params)?;
    let compiled = compile_for(expr, params)?;
    slice_variance(&compiled, params, &fixed, target, cfg)
}

fn slice_cost(cfg: &SensitivityConfig) -> Result<u128, SensitivityError> {
    // Nodes of the 1-D grid plus the centering evaluation.
    Ok(quad::node_count(cfg.delta_1d)? as u128 + 2)
}

fn slice_variance(
    compiled: &CompiledExpr,
    params: &[ParameterSpec],
    fixed: &[f64],
    target: usize,
    cfg: &SensitivityConfig,
) -> Result<ScalarEstimate, SensitivityError> {
    let needed = slice_cost(cfg)?;
    check_budget(needed, cfg.max_evaluations)?;
    let interval = params[target].interval();
    let mut point = fixed.to_vec();

    point[target] = params[target].midpoint();
    let center = compiled.eval_raw(&point);
    if !center.is_finite() {
        return Err(QuadError::NonFiniteSample { point }.into());
    }

    let result = quad::moment_pair_1d(
        |t| {
            point[target] = t;
            compiled.eval_raw(&point) - center
        },
        interval,
        cfg.delta_1d,
        cfg.max_evaluations,
    );
    let (m1, m2) = match result {
        Ok(pair) => pair,
        Err(QuadError::NonFiniteSample { .. }) => {
            // Rebuild the full coordinate vector; `point` still holds the
            // offending slice position.
            return Err(QuadError::NonFiniteSample { point }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let (value, clamped_negative) = clamp_negative(m2 - m1 * m1, NEGATIVE_VARIANCE_TOLERANCE)?;
    Ok(ScalarEstimate {
        value,
        clamped_negative,
        evaluations: needed as u64,
    })
}

/// Fixed-point slice variance for every parameter, with percentage shares.
pub fn first_order_variance_contributions(
    expr: &Expr,
    params: &[ParameterSpec],
    cfg: &SensitivityConfig,
) -> Result<SensitivityReport, SensitivityError> {
    let start = Instant::now();
    validate_params(params)?;
    let fixed = require_fixed(params)?;
    let compiled = compile_for(expr, params)?;
    check_budget(
        slice_cost(cfg)? * params.len() as u128,
        cfg.max_evaluations,
    )?;

    let mut estimates = Vec::with_capacity(params.len());
    for target in 0..params.len() {
        estimates.push(slice_variance(&compiled, params, &fixed, target, cfg)?);
    }
    let mut report = assemble_report(Method::Variance, params, &estimates)?;
    report.settings = SettingsEcho {
        delta_1d: Some(cfg.delta_1d),
        max_evaluations: Some(cfg.max_evaluations),
        fixed: params
            .iter()
            .zip(&fixed)
            .map(|(p, v)| FixedValue {
                param: p.name.clone(),
                value: *v,
            })
            .collect(),
        ..SettingsEcho::default()
    };
    report.diagnostics.wall_time = Some(start.elapsed());
    Ok(report)
}

// ---------------------------------------------------------------------------
// Conditional expectations (shared subset machinery)
// ---------------------------------------------------------------------------

/// Centered moments of the conditional mean over a parameter subset. All
/// conditional-expectation operations funnel through this one loop, which is
/// what makes their overlap guarantees exact: a singleton subset reproduces
/// the first-order result bit for bit, the full subset the total variance.
struct SubsetMoments {
    /// Mean of `m(outer) - center` over the outer grid.
    mean: f64,
    /// Mean of `(m(outer) - center)²` over the outer grid.
    mean_square: f64,
    /// The model's value at the domain center, the centering constant.
    center: f64,
    evaluations: u64,
}

/// Outer-grid resolution rule: a plain 1-D variance (single axis, nothing to
/// average over) gets the fine 1-D resolution, every true conditional
/// analysis the n-D one.
fn outer_resolution(cfg: &SensitivityConfig, subset_len: usize, inner_len: usize) -> f64 {
    if inner_len == 0 && subset_len == 1 {
        cfg.delta_1d
    } else {
        cfg.delta_base_nd
    }
}

fn subset_cost(
    cfg: &SensitivityConfig,
    subset_len: usize,
    inner_len: usize,
) -> Result<u128, SensitivityError> {
    let n_outer = quad::node_count(outer_resolution(cfg, subset_len, inner_len))?;
    let outer_cells = (n_outer as u128).pow(subset_len as u32);
    let per_cell = if inner_len == 0 {
        1
    } else {
        quad::grid_evaluations(inner_len, cfg.delta_base_nd)?
    };
    // One extra evaluation for the centering constant.
    Ok(outer_cells * per_cell + 1)
}

fn subset_moments(
    compiled: &CompiledExpr,
    params: &[ParameterSpec],
    subset: &[usize],
    cfg: &SensitivityConfig,
) -> Result<SubsetMoments, SensitivityError> {
    let inner: Vec<usize> = (0..params.len()).filter(|i| !subset.contains(i)).collect();
    let needed = subset_cost(cfg, subset.len(), inner.len())?;
    check_budget(needed, cfg.max_evaluations)?;

    let n_outer = quad::node_count(outer_resolution(cfg, subset.len(), inner.len()))?;
    let outer_nodes: Vec<Vec<f64>> = subset
        .iter()
        .map(|&axis| quad::midpoint_nodes(params[axis].interval(), n_outer).collect())
        .collect();
    let inner_domain: Vec<Interval> = inner.iter().map(|&axis| params[axis].interval()).collect();

    let mut point: Vec<f64> = params.iter().map(ParameterSpec::midpoint).collect();
    let center = compiled.eval_raw(&point);
    if !center.is_finite() {
        return Err(QuadError::NonFiniteSample { point }.into());
    }

    let mut acc_mean = quad::CompensatedSum::new();
    let mut acc_square = quad::CompensatedSum::new();
    let mut idx = vec![0usize; subset.len()];
    for (k, &axis) in subset.iter().enumerate() {
        point[axis] = outer_nodes[k][0];
    }
    'outer: loop {
        let conditional_mean = if inner.is_empty() {
            let v = compiled.eval_raw(&point);
            if !v.is_finite() {
                return Err(QuadError::NonFiniteSample { point }.into());
            }
            v - center
        } else {
            let r = quad::mean_nd(
                |inner_point| {
                    for (slot, &axis) in inner.iter().enumerate() {
                        point[axis] = inner_point[slot];
                    }
                    compiled.eval_raw(&point) - center
                },
                &inner_domain,
                cfg.delta_base_nd,
                cfg.max_evaluations,
            );
            match r {
                Ok(v) => v,
                Err(QuadError::NonFiniteSample { .. }) => {
                    // `point` holds the full failing coordinates: the inner
                    // closure wrote them just before the evaluation.
                    return Err(QuadError::NonFiniteSample { point }.into());
                }
                Err(e) => return Err(e.into()),
            }
        };
        acc_mean.add(conditional_mean);
        acc_square.add(conditional_mean * conditional_mean);

        // Odometer over the outer grid, last subset axis fastest.
        let mut a = subset.len();
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            if idx[a] + 1 < n_outer as usize {
                idx[a] += 1;
                point[subset[a]] = outer_nodes[a][idx[a]];
                break;
            }
            idx[a] = 0;
            point[subset[a]] = outer_nodes[a][0];
        }
    }

    let cells = (n_outer as f64).powi(subset.len() as i32);
    Ok(SubsetMoments {
        mean: acc_mean.total() / cells,
        mean_square: acc_square.total() / cells,
        center,
        evaluations: needed as u64,
    })
}

fn subset_variance(
    compiled: &CompiledExpr,
    params: &[ParameterSpec],
    subset: &[usize],
    cfg: &SensitivityConfig,
    clamp_tolerance: f64,
) -> Result<ScalarEstimate, SensitivityError> {
    let m = subset_moments(compiled, params, subset, cfg)?;
    let (value, clamped_negative) =
        clamp_negative(m.mean_square - m.mean * m.mean, clamp_tolerance)?;
    Ok(ScalarEstimate {
        value,
        clamped_negative,
        evaluations: m.evaluations,
    })
}

/// First-order Sobol contribution of every parameter: the variance of the
/// model's conditional mean, with percentage shares over their sum.
pub fn sobol_first_order(
    expr: &Expr,
    params: &[ParameterSpec],
    cfg: &SensitivityConfig,
) -> Result<SensitivityReport, SensitivityError> {
    let start = Instant::now();
    validate_params(params)?;
    let compiled = compile_for(expr, params)?;
    let per_param = subset_cost(cfg, 1, params.len() - 1)?;
    check_budget(per_param * params.len() as u128, cfg.max_evaluations)?;

    let mut estimates = Vec::with_capacity(params.len());
    for target in 0..params.len() {
        estimates.push(subset_variance(
            &compiled,
            params,
            &[target],
            cfg,
            NEGATIVE_VARIANCE_TOLERANCE,
        )?);
    }
    let mut report = assemble_report(Method::Sobol, params, &estimates)?;
    report.settings = SettingsEcho {
        delta_base_nd: Some(cfg.delta_base_nd),
        max_evaluations: Some(cfg.max_evaluations),
        ..SettingsEcho::default()
    };
    report.diagnostics.wall_time = Some(start.elapsed());
    Ok(report)
}

/// The two moments behind one parameter's first-order contribution, before
/// the subtraction. Useful for inspecting how close the estimate sits to
/// the cancellation.
pub fn conditional_expectation_moments(
    expr: &Expr,
    params: &[ParameterSpec],
    target: usize,
    cfg: &SensitivityConfig,
) -> Result<ConditionalMoments, SensitivityError> {
    validate_params(params)?;
    check_index(target, params.len())?;
    let compiled = compile_for(expr, params)?;
    let m = subset_moments(&compiled, params, &[target], cfg)?;
    // De-center: E[m²] = E[(m-c)²] + 2c·E[m-c] + c², E[m] = E[m-c] + c.
    let mean = m.mean + m.center;
    Ok(ConditionalMoments {
        mean_of_square: m.mean_square + 2.0 * m.center * m.mean + m.center * m.center,
        square_of_mean: mean * mean,
        evaluations: m.evaluations,
    })
}

/// Variance of the model over the whole box.
pub fn total_variance(
    expr: &Expr,
    params: &[ParameterSpec],
    cfg: &SensitivityConfig,
) -> Result<ScalarEstimate, SensitivityError> {
    validate_params(params)?;
    let compiled = compile_for(expr, params)?;
    let all: Vec<usize> = (0..params.len()).collect();
    subset_variance(&compiled, params, &all, cfg, NEGATIVE_VARIANCE_TOLERANCE)
}

/// Joint first-order contribution of a parameter subset: the variance of the
/// model averaged over everything outside the subset. A singleton reproduces
/// that parameter's [`sobol_first_order`] entry exactly; the full set
/// reproduces [`total_variance`] exactly.
pub fn grouped_variance_contribution(
    expr: &Expr,
    params: &[ParameterSpec],
    subset: &[usize],
    cfg: &SensitivityConfig,
) -> Result<ScalarEstimate, SensitivityError> {
    validate_params(params)?;
    let subset = normalize_subset(subset, params.len())?;
    let compiled = compile_for(expr, params)?;
    subset_variance(&compiled, params, &subset, cfg, NEGATIVE_VARIANCE_TOLERANCE)
}

/// Pure two-parameter interaction: the joint contribution of the pair minus
/// both individual contributions. Zero (up to quadrature noise) for models
/// additive in the pair.
pub fn sobol_pair_interaction(
    expr: &Expr,
    params: &[ParameterSpec],
    first: usize,
    second: usize,
    cfg: &SensitivityConfig,
) -> Result<ScalarEstimate, SensitivityError> {
    validate_params(params)?;
    check_index(first, params.len())?;
    check_index(second, params.len())?;
    if first == second {
        return Err(SensitivityError::InvalidSubset {
            reason: format!("pair indices must be distinct, got ({first}, {second})"),
        });
    }
    let (lo, hi) = (first.min(second), first.max(second));
    let compiled = compile_for(expr, params)?;

    let n = params.len();
    let needed = subset_cost(cfg, 2, n - 2)? + 2 * subset_cost(cfg, 1, n - 1)?;
    check_budget(needed, cfg.max_evaluations)?;

    let joint = subset_variance(&compiled, params, &[lo, hi], cfg, NEGATIVE_VARIANCE_TOLERANCE)?;
    let lone_lo = subset_variance(&compiled, params, &[lo], cfg, NEGATIVE_VARIANCE_TOLERANCE)?;
    let lone_hi = subset_variance(&compiled, params, &[hi], cfg, NEGATIVE_VARIANCE_TOLERANCE)?;

    let (value, clamped_negative) = clamp_negative(
        joint.value - lone_lo.value - lone_hi.value,
        PAIR_NEGATIVE_TOLERANCE,
    )?;
    Ok(ScalarEstimate {
        value,
        clamped_negative,
        evaluations: joint.evaluations + lone_lo.evaluations + lone_hi.evaluations,
    })
}

fn normalize_subset(subset: &[usize], count: usize) -> Result<Vec<usize>, SensitivityError> {
    if subset.is_empty() {
        return Err(SensitivityError::InvalidSubset {
            reason: "subset is empty".into(),
        });
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(SensitivityError::InvalidSubset {
                reason: format!("index {} appears more than once", pair[0]),
            });
        }
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= count) {
        return Err(SensitivityError::IndexOutOfRange { index: bad, count });
    }
    Ok(sorted)
}

/// Raw contributions divided by the total variance — the dimensionless
/// first-order indices. For well-resolved models they sum to at most one
/// (up to quadrature error), with the shortfall measuring interactions.
pub fn absolute_indices(
    raw_variances: &[f64],
    total_variance: f64,
) -> Result<Vec<f64>, SensitivityError> {
    if !total_variance.is_finite() || total_variance <= 0.0 {
        return Err(SensitivityError::InvalidTotalVariance {
            value: total_variance,
        });
    }
    Ok(raw_variances.iter().map(|r| r / total_variance).collect())
}

pub(crate) fn assemble_report(
    method: Method,
    params: &[ParameterSpec],
    estimates: &[ScalarEstimate],
) -> Result<SensitivityReport, SensitivityError> {
    let sum: f64 = estimates.iter().map(|e| e.value).sum();
    if sum <= NO_VARIATION_THRESHOLD {
        return Err(SensitivityError::NoVariation {
            total: sum,
            raw_variances: estimates.iter().map(|e| e.value).collect(),
        });
    }
    let entries = params
        .iter()
        .zip(estimates)
        .map(|(p, e)| ParameterResult {
            param: p.name.clone(),
            raw_variance: e.value,
            percentage: Some(100.0 * e.value / sum),
            absolute_index: None,
            std_error: None,
        })
        .collect();
    Ok(SensitivityReport {
        method,
        entries,
        total_variance: None,
        settings: SettingsEcho::default(),
        diagnostics: Diagnostics {
            clamped_negatives: estimates.iter().filter(|e| e.clamped_negative).count() as u64,
            evaluations: estimates.iter().map(|e| e.evaluations).sum(),
            wall_time: None,
        },
    })
}
