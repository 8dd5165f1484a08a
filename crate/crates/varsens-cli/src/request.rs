//! Request orchestration: validate an analysis request, run each selected
//! method, and render the combined results as JSON or a plain-text table.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use varsens::{
    absolute_indices, first_order_variance_contributions, mc_sobol_first_order,
    mc_variance_contribution, sobol_first_order, sobol_pair_interaction, total_variance,
    Diagnostics, Expr, Method, ParameterResult, ParameterSpec, QuadError, SampleConfig,
    ScalarEstimate, SensitivityConfig, SensitivityError, SensitivityReport, SettingsEcho,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

/// Everything one invocation needs: the model, its parameters, the methods
/// to run, and the numeric knobs.
#[derive(Debug, Clone)]
pub struct AnalysisRequest {
    pub equation: String,
    pub parameters: Vec<ParameterSpec>,
    pub methods: Vec<Method>,
    pub quadrature: SensitivityConfig,
    pub sampling: SampleConfig,
    pub output: OutputFormat,
}

/// The combined report: one entry per requested method, in request order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub equation: String,
    pub results: Vec<SensitivityReport>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("method {method}: {source}")]
    Method {
        method: Method,
        source: SensitivityError,
    },
}

impl CliError {
    /// Process exit code: 2 for input problems, 3 for numerical failures,
    /// 4 for an exceeded evaluation budget.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Method { source, .. } => match source {
                SensitivityError::Quadrature(QuadError::BudgetExceeded { .. }) => 4,
                SensitivityError::Quadrature(QuadError::NonFiniteSample { .. })
                | SensitivityError::NegativeVariance { .. }
                | SensitivityError::NoVariation { .. }
                | SensitivityError::InvalidTotalVariance { .. } => 3,
                _ => 2,
            },
        }
    }
}

/// Runs every requested method (deduplicated, in request order) and returns
/// the combined report. When `total-variance` is among the methods, the
/// variance-style reports are additionally annotated with each parameter's
/// absolute index (raw variance / total variance).
pub fn run(request: &AnalysisRequest) -> Result<RunOutput, CliError> {
    let expr = Expr::parse(&request.equation)
        .map_err(|e| CliError::Input(format!("cannot parse equation: {e}")))?;
    let methods = dedup_methods(&request.methods);
    if methods.is_empty() {
        return Err(CliError::Input("at least one analysis method is required".into()));
    }
    check_coverage(&expr, &request.parameters)?;

    let mut total_cache: Option<ScalarEstimate> = None;
    let mut results = Vec::with_capacity(methods.len());
    for &method in &methods {
        let report = run_method(method, &expr, request, &mut total_cache)
            .map_err(|source| CliError::Method { method, source })?;
        results.push(report);
    }

    if methods.contains(&Method::TotalVariance) {
        let total = total_cache.expect("the total-variance method ran").value;
        for report in &mut results {
            annotate_with_total(report, total)?;
        }
    }

    Ok(RunOutput {
        equation: request.equation.clone(),
        results,
    })
}

fn dedup_methods(methods: &[Method]) -> Vec<Method> {
    let mut out = Vec::new();
    for &m in methods {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

// The parameters must cover the equation's free variables exactly: a missing
// definition leaves the model unevaluable, and an unused parameter is
// almost certainly a typo on one side or the other.
fn check_coverage(expr: &Expr, params: &[ParameterSpec]) -> Result<(), CliError> {
    let mut names = HashSet::new();
    for p in params {
        if !names.insert(p.name.as_str()) {
            return Err(CliError::Input(format!("duplicate parameter name '{}'", p.name)));
        }
    }
    let free = expr.free_variables();
    for name in &free {
        if !names.contains(name.as_str()) {
            return Err(CliError::Input(format!(
                "equation variable '{name}' has no parameter definition"
            )));
        }
    }
    let free_set: HashSet<&str> = free.iter().map(String::as_str).collect();
    for p in params {
        if !free_set.contains(p.name.as_str()) {
            return Err(CliError::Input(format!(
                "parameter '{}' does not appear in the equation",
                p.name
            )));
        }
    }
    Ok(())
}

fn run_method(
    method: Method,
    expr: &Expr,
    request: &AnalysisRequest,
    total_cache: &mut Option<ScalarEstimate>,
) -> Result<SensitivityReport, SensitivityError> {
    let params = &request.parameters;
    let quad = &request.quadrature;
    match method {
        Method::Variance => first_order_variance_contributions(expr, params, quad),
        Method::Sobol => sobol_first_order(expr, params, quad),
        Method::VarianceMc => mc_variance_contribution(expr, params, &request.sampling),
        Method::SobolMc => mc_sobol_first_order(expr, params, &request.sampling),
        Method::TotalVariance => {
            let started = Instant::now();
            let est = ensure_total(expr, params, quad, total_cache)?;
            Ok(total_report(&est, quad, started.elapsed()))
        }
        Method::PairInteractions => pair_report(expr, request, total_cache),
    }
}

fn ensure_total(
    expr: &Expr,
    params: &[ParameterSpec],
    quad: &SensitivityConfig,
    cache: &mut Option<ScalarEstimate>,
) -> Result<ScalarEstimate, SensitivityError> {
    if let Some(est) = cache {
        return Ok(*est);
    }
    let est = total_variance(expr, params, quad)?;
    *cache = Some(est);
    Ok(est)
}

fn quad_settings(quad: &SensitivityConfig) -> SettingsEcho {
    SettingsEcho {
        delta_base_nd: Some(quad.delta_base_nd),
        max_evaluations: Some(quad.max_evaluations),
        ..SettingsEcho::default()
    }
}

fn total_report(
    est: &ScalarEstimate,
    quad: &SensitivityConfig,
    elapsed: Duration,
) -> SensitivityReport {
    SensitivityReport {
        method: Method::TotalVariance,
        entries: Vec::new(),
        total_variance: Some(est.value),
        settings: quad_settings(quad),
        diagnostics: Diagnostics {
            clamped_negatives: est.clamped_negative as u64,
            evaluations: est.evaluations,
            wall_time: Some(elapsed),
        },
    }
}

// One entry per unordered parameter pair, named "a*b"; percentages are
// relative to the total variance, which the pair definition needs anyway.
fn pair_report(
    expr: &Expr,
    request: &AnalysisRequest,
    total_cache: &mut Option<ScalarEstimate>,
) -> Result<SensitivityReport, SensitivityError> {
    let params = &request.parameters;
    let quad = &request.quadrature;
    if params.len() < 2 {
        return Err(SensitivityError::InvalidSubset {
            reason: "pair interactions need at least two parameters".into(),
        });
    }
    let started = Instant::now();
    let total = ensure_total(expr, params, quad, total_cache)?;
    // The total's cost shows up under the total-variance method when that
    // was requested too; otherwise this method caused it, so count it here.
    let counts_total = !request.methods.contains(&Method::TotalVariance);
    let mut evaluations = if counts_total { total.evaluations } else { 0 };
    let mut clamped = if counts_total { total.clamped_negative as u64 } else { 0 };

    let mut entries = Vec::new();
    for i in 0..params.len() {
        for j in (i + 1)..params.len() {
            let est = sobol_pair_interaction(expr, params, i, j, quad)?;
            entries.push(ParameterResult {
                param: format!("{}*{}", params[i].name, params[j].name),
                raw_variance: est.value,
                percentage: (total.value > 0.0).then(|| 100.0 * est.value / total.value),
                absolute_index: None,
                std_error: None,
            });
            evaluations += est.evaluations;
            clamped += est.clamped_negative as u64;
        }
    }
    Ok(SensitivityReport {
        method: Method::PairInteractions,
        entries,
        total_variance: Some(total.value),
        settings: quad_settings(quad),
        diagnostics: Diagnostics {
            clamped_negatives: clamped,
            evaluations,
            wall_time: Some(started.elapsed()),
        },
    })
}

fn annotate_with_total(report: &mut SensitivityReport, total: f64) -> Result<(), CliError> {
    if !matches!(
        report.method,
        Method::Variance | Method::Sobol | Method::VarianceMc | Method::SobolMc
    ) {
        return Ok(());
    }
    let raws: Vec<f64> = report.entries.iter().map(|e| e.raw_variance).collect();
    let indices = absolute_indices(&raws, total).map_err(|source| CliError::Method {
        method: report.method,
        source,
    })?;
    for (entry, index) in report.entries.iter_mut().zip(indices) {
        entry.absolute_index = Some(index);
    }
    report.total_variance = Some(total);
    Ok(())
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Pretty-printed JSON report, newline-terminated. Key order is fixed by the
/// report types, so identical analyses serialize identically.
pub fn to_json(output: &RunOutput) -> String {
    let mut text =
        serde_json::to_string_pretty(output).expect("report serialization cannot fail");
    text.push('\n');
    text
}

// Decimal for ordinary magnitudes, scientific for extremes; trailing zeros
// trimmed so tables stay readable.
fn fmt_value(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    let magnitude = value.abs();
    if (1e-4..1e9).contains(&magnitude) {
        let mut text = format!("{value:.10}");
        while text.ends_with('0') {
            text.pop();
        }
        if text.ends_with('.') {
            text.pop();
        }
        text
    } else {
        format!("{value:.6e}")
    }
}

fn settings_line(settings: &SettingsEcho) -> Option<String> {
    let mut parts = Vec::new();
    if let Some(v) = settings.delta_1d {
        parts.push(format!("delta = {v}"));
    }
    if let Some(v) = settings.delta_base_nd {
        parts.push(format!("delta_base = {v}"));
    }
    if let Some(v) = settings.max_evaluations {
        parts.push(format!("budget = {v}"));
    }
    if let Some(v) = settings.seed {
        parts.push(format!("seed = {v}"));
    }
    if let Some(v) = settings.samples_outer {
        parts.push(format!("samples_outer = {v}"));
    }
    if let Some(v) = settings.samples_inner {
        parts.push(format!("samples_inner = {v}"));
    }
    if !settings.fixed.is_empty() {
        let fixed: Vec<String> = settings
            .fixed
            .iter()
            .map(|f| format!("{} = {}", f.param, f.value))
            .collect();
        parts.push(format!("fixed: {}", fixed.join(", ")));
    }
    if parts.is_empty() {
        None
    } else {
        Some(parts.join(", "))
    }
}

/// Plain-text table rendering of the combined report.
pub fn render_table(output: &RunOutput) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "equation: {}", output.equation);
    for report in &output.results {
        let _ = writeln!(out);
        let _ = writeln!(out, "method: {}", report.method);
        if let Some(line) = settings_line(&report.settings) {
            let _ = writeln!(out, "settings: {line}");
        }
        if !report.entries.is_empty() {
            let has_pct = report.entries.iter().any(|e| e.percentage.is_some());
            let has_idx = report.entries.iter().any(|e| e.absolute_index.is_some());
            let has_se = report.entries.iter().any(|e| e.std_error.is_some());

            let mut header = vec!["parameter".to_string(), "raw variance".to_string()];
            if has_pct {
                header.push("share %".into());
            }
            if has_idx {
                header.push("abs index".into());
            }
            if has_se {
                header.push("std error".into());
            }
            let mut rows = vec![header];
            for entry in &report.entries {
                let mut row = vec![entry.param.clone(), fmt_value(entry.raw_variance)];
                if has_pct {
                    row.push(entry.percentage.map(|p| format!("{p:.6}")).unwrap_or_default());
                }
                if has_idx {
                    row.push(
                        entry
                            .absolute_index
                            .map(|i| format!("{i:.6}"))
                            .unwrap_or_default(),
                    );
                }
                if has_se {
                    row.push(entry.std_error.map(fmt_value).unwrap_or_default());
                }
                rows.push(row);
            }

            let columns = rows[0].len();
            let widths: Vec<usize> = (0..columns)
                .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
                .collect();
            for row in &rows {
                let mut line = String::new();
                for (c, cell) in row.iter().enumerate() {
                    if c > 0 {
                        line.push_str("  ");
                    }
                    let _ = write!(line, "{cell:<width$}", width = widths[c]);
                }
                let _ = writeln!(out, "{}", line.trim_end());
            }
        }
        if let Some(total) = report.total_variance {
            let _ = writeln!(out, "total variance: {}", fmt_value(total));
        }
        let _ = writeln!(
            out,
            "evaluations: {} | clamped negatives: {}",
            report.diagnostics.evaluations, report.diagnostics.clamped_negatives
        );
    }
    out
}
