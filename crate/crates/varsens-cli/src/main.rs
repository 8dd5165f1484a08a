//! `varsens` — variance-based sensitivity analysis of closed-form models.
//!
//! Reads an equation and parameter ranges, runs the selected analysis
//! methods, and prints a combined report. Reports go to stdout; timing and
//! diagnostics go to stderr.

use std::process::ExitCode;

use clap::Parser;
use serde::Deserialize;
use varsens::{Method, ParameterSpec, SampleConfig, SensitivityConfig};
use varsens_cli::legacy::parse_legacy_params;
use varsens_cli::request::{self, AnalysisRequest, CliError, OutputFormat};

#[derive(Parser)]
#[command(
    name = "varsens",
    version,
    about = "Variance-based global sensitivity analysis via numerical quadrature",
    after_help = "Exit codes: 0 success, 2 input error, 3 numerical error, 4 evaluation budget exceeded."
)]
struct Cli {
    /// Model expression, e.g. "sin(x) + 7*pow(sin(y),2)". Both plain and
    /// Math.-prefixed function names are accepted. Overrides the equation
    /// given in the parameter document.
    #[arg(long)]
    equation: Option<String>,

    /// Parameter document: a path to a JSON file, or inline JSON when the
    /// value starts with '{'. Shape: {"equation": "...", "parameters":
    /// [{"param": "x", "min": 0, "max": 1, "fixed": 0.5}, ...]} with
    /// numeric fields; "equation" and each "fixed" are optional.
    #[arg(long, value_name = "FILE|JSON")]
    params: Option<String>,

    /// Parameters in the legacy form: JSON objects with string-valued
    /// fields joined by '&'. Requires --equation.
    #[arg(long, value_name = "TEXT", conflicts_with = "params")]
    legacy_params: Option<String>,

    /// Analysis method to run; repeat the flag (or comma-separate) for
    /// several methods in one invocation.
    #[arg(
        long = "method",
        value_parser = parse_method,
        value_delimiter = ',',
        default_value = "variance"
    )]
    methods: Vec<Method>,

    /// Grid resolution for one-dimensional integrals (fraction of the
    /// range per step).
    #[arg(long, value_name = "FRACTION")]
    delta: Option<f64>,

    /// Base grid resolution for multi-dimensional integrals.
    #[arg(long, value_name = "FRACTION")]
    delta_base: Option<f64>,

    /// Maximum number of model evaluations a single method may spend.
    #[arg(long, value_name = "COUNT")]
    budget: Option<u64>,

    /// Seed for the Monte Carlo methods.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Sample count for the Monte Carlo methods; sets both the outer and
    /// the inner loop.
    #[arg(long, value_name = "COUNT")]
    samples: Option<u64>,

    /// Report format.
    #[arg(long, value_enum, default_value = "table")]
    output: OutputFormat,
}

fn parse_method(text: &str) -> Result<Method, String> {
    match text {
        "variance" => Ok(Method::Variance),
        "sobol" => Ok(Method::Sobol),
        "variance-mc" => Ok(Method::VarianceMc),
        "sobol-mc" => Ok(Method::SobolMc),
        "total-variance" => Ok(Method::TotalVariance),
        "pair-interactions" => Ok(Method::PairInteractions),
        other => Err(format!(
            "unknown method '{other}' (expected variance, sobol, variance-mc, \
             sobol-mc, total-variance, or pair-interactions)"
        )),
    }
}

// Native parameter document, from a file or inline JSON.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDocument {
    #[serde(default)]
    equation: Option<String>,
    parameters: Vec<ParameterSpec>,
}

fn resolve_inputs(cli: &Cli) -> Result<(String, Vec<ParameterSpec>), CliError> {
    if let Some(text) = &cli.legacy_params {
        let equation = cli.equation.clone().ok_or_else(|| {
            CliError::Input(
                "the legacy parameter form carries no equation; provide --equation".into(),
            )
        })?;
        let parameters = parse_legacy_params(text).map_err(|e| CliError::Input(e.to_string()))?;
        return Ok((equation, parameters));
    }
    if let Some(source) = &cli.params {
        let text = if source.trim_start().starts_with('{') {
            source.clone()
        } else {
            std::fs::read_to_string(source).map_err(|e| {
                CliError::Input(format!("cannot read parameter file '{source}': {e}"))
            })?
        };
        let document: ParamsDocument = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid parameter document: {e}")))?;
        let equation = cli.equation.clone().or(document.equation).ok_or_else(|| {
            CliError::Input(
                "no equation given; provide --equation or an \"equation\" field in the \
                 parameter document"
                    .into(),
            )
        })?;
        return Ok((equation, document.parameters));
    }
    Err(CliError::Input(
        "no parameters given; provide --params or --legacy-params".into(),
    ))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let (equation, parameters) = resolve_inputs(cli)?;

    let mut quadrature = SensitivityConfig::default();
    if let Some(v) = cli.delta {
        quadrature.delta_1d = v;
    }
    if let Some(v) = cli.delta_base {
        quadrature.delta_base_nd = v;
    }
    if let Some(v) = cli.budget {
        quadrature.max_evaluations = v;
    }
    let mut sampling = SampleConfig::default();
    if let Some(v) = cli.seed {
        sampling.seed = v;
    }
    if let Some(v) = cli.samples {
        sampling.samples_outer = v;
        sampling.samples_inner = v;
    }

    let request = AnalysisRequest {
        equation,
        parameters,
        methods: cli.methods.clone(),
        quadrature,
        sampling,
        output: cli.output,
    };
    let output = request::run(&request)?;
    let rendered = match request.output {
        OutputFormat::Json => request::to_json(&output),
        OutputFormat::Table => request::render_table(&output),
    };
    print!("{rendered}");

    // Timing is diagnostic only and must never contaminate the report
    // stream, so it goes to stderr.
    for report in &output.results {
        if let Some(elapsed) = report.diagnostics.wall_time {
            eprintln!(
                "# {}: {} evaluations in {:.1} ms",
                report.method,
                report.diagnostics.evaluations,
                elapsed.as_secs_f64() * 1e3
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
