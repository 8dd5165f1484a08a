//! Shared fixtures and independent oracles for the integration tests.
//!
//! The Monte Carlo estimators in this module are deliberately written
//! against `rand` directly rather than through the library's sampling API:
//! they exist to check the quadrature machinery from the outside, so they
//! must not share code with it.

#![allow(dead_code)] // each integration-test binary uses a subset of these

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use varsens::{Expr, ParameterSpec};

// ---------------------------------------------------------------------------
// Reference values for the benchmark model
//   sin(x) + 7*sin(y)^2 + 0.1*z^4*sin(x)   on (-pi/10, pi/10)^3, fixed at 0
// obtained by symbolic integration of the model over the box, evaluated to
// 12 significant digits.
// ---------------------------------------------------------------------------

pub const BENCH_EQUATION: &str = "sin(x) + 7*pow(sin(y),2) + 0.1*(pow(z,4))*sin(x)";

/// Fixed-point slice variances (x, y, z).
pub const BENCH_SLICE_VARS: [f64; 3] = [0.0322553581057, 0.0400962619026, 0.0];
/// Slice variance percentage shares.
pub const BENCH_SLICE_PCTS: [f64; 3] = [44.58139, 55.41861, 0.0];
/// First-order conditional-expectation (Sobol) contributions.
pub const BENCH_SOBOL_VARS: [f64; 3] = [0.0322679271904, 0.0400962619026, 0.0];
/// Sobol percentage shares.
pub const BENCH_SOBOL_PCTS: [f64; 3] = [44.591016, 55.408984, 0.0];
/// E over x of (conditional mean of the model given x) squared.
pub const BENCH_X_MEAN_OF_SQUARE: f64 = 0.0832479253901;
/// (E over x of the conditional mean given x) squared.
pub const BENCH_X_SQUARE_OF_MEAN: f64 = 0.0509799981998;
/// E over y of (conditional mean given y) squared.
pub const BENCH_Y_MEAN_OF_SQUARE: f64 = 0.0910762601024;
/// Variance of the model over the whole box.
pub const BENCH_TOTAL_VARIANCE: f64 = 0.0723641912694;

pub fn bench_expr() -> Expr {
    Expr::parse(BENCH_EQUATION).unwrap()
}

pub fn bench_params() -> Vec<ParameterSpec> {
    let a = std::f64::consts::PI / 10.0;
    vec![
        ParameterSpec::with_fixed("x", -a, a, 0.0),
        ParameterSpec::with_fixed("y", -a, a, 0.0),
        ParameterSpec::with_fixed("z", -a, a, 0.0),
    ]
}

// ---------------------------------------------------------------------------
// Assertion helpers
// ---------------------------------------------------------------------------

/// Absolute-difference assertion with a readable failure message.
pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} (|diff| = {:.3e} > {tol:.3e})",
        (actual - expected).abs()
    );
}

/// Relative-difference assertion with a small absolute term so comparisons
/// against values at or near zero tolerate rounding noise.
pub fn assert_close_rel(actual: f64, expected: f64, rel: f64, what: &str) {
    let tol = rel * expected.abs() + 1e-15;
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} (|diff| = {:.3e} > {tol:.3e})",
        (actual - expected).abs()
    );
}

// ---------------------------------------------------------------------------
// Randomized additive fixtures
//
// Two-parameter models of the form term(x) + term(y) where each term touches
// one parameter only. For such models the fixed-point slice variances and
// the conditional-expectation contributions agree exactly in the limit, so
// they make good cross-method test subjects. Everything is derived from the
// fixture index, so the set is stable across runs.
// ---------------------------------------------------------------------------

pub struct AdditiveFixture {
    pub source: String,
    pub params: Vec<ParameterSpec>,
}

pub fn additive_fixture(index: u64) -> AdditiveFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + index);
    let coeff = |rng: &mut ChaCha8Rng| -> f64 {
        let c = Uniform::new(0.6f64, 1.8).unwrap().sample(rng);
        // Round to three decimals so the coefficient survives the trip
        // through the source string exactly as printed.
        (c * 1000.0).round() / 1000.0
    };
    let term = |rng: &mut ChaCha8Rng, kind: u64, var: &str| -> String {
        let a = coeff(rng);
        match kind % 3 {
            0 => format!("{a}*sin({var})"),
            1 => format!("{a}*exp({var})"),
            _ => {
                let b = coeff(rng);
                format!("{a}*{var}^2 + {b}*{var}")
            }
        }
    };
    let source = format!(
        "{} + {}",
        term(&mut rng, index, "x"),
        term(&mut rng, index + 1, "y")
    );

    let interval = |rng: &mut ChaCha8Rng| -> (f64, f64, f64) {
        let lo = Uniform::new(-0.6, 0.6).unwrap().sample(rng);
        let width = Uniform::new(0.6, 1.2).unwrap().sample(rng);
        let fixed_frac = Uniform::new(0.2, 0.8).unwrap().sample(rng);
        (lo, lo + width, lo + fixed_frac * width)
    };
    let (x_lo, x_hi, x_fix) = interval(&mut rng);
    let (y_lo, y_hi, y_fix) = interval(&mut rng);
    AdditiveFixture {
        source,
        params: vec![
            ParameterSpec::with_fixed("x", x_lo, x_hi, x_fix),
            ParameterSpec::with_fixed("y", y_lo, y_hi, y_fix),
        ],
    }
}

// ---------------------------------------------------------------------------
// Independent Monte Carlo oracles
// ---------------------------------------------------------------------------

pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn uniforms(params: &[ParameterSpec]) -> Vec<Uniform<f64>> {
    params
        .iter()
        .map(|p| Uniform::new(p.min, p.max).unwrap())
        .collect()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Plain Monte Carlo estimate of the model's variance over the box.
pub fn mc_total_variance_oracle(
    f: impl Fn(&[f64]) -> f64,
    params: &[ParameterSpec],
    samples: usize,
    seed: u64,
) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists = uniforms(params);
    let mut point = vec![0.0; params.len()];
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        for (slot, d) in point.iter_mut().zip(&dists) {
            *slot = d.sample(&mut rng);
        }
        values.push(f(&point));
    }
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|d| d * d).sum::<f64>() / (n - 1.0);
    let fourth = centered.iter().map(|d| d.powi(4)).sum::<f64>() / n;
    let vov = ((fourth - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    McEstimate {
        value: var,
        std_error: vov.sqrt(),
    }
}

/// Pick-freeze estimate of the closed contribution of a parameter subset:
/// the variance of the model's conditional mean given the subset. Uses the
/// classical two-matrix trick — correlate the model with a copy whose
/// complement coordinates are redrawn — which needs no inner loop and so
/// carries no nested-noise bias. `in_subset[i]` marks the frozen axes.
pub fn pick_freeze_oracle(
    f: impl Fn(&[f64]) -> f64,
    params: &[ParameterSpec],
    in_subset: &[bool],
    samples: usize,
    seed: u64,
) -> McEstimate {
    assert_eq!(in_subset.len(), params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists = uniforms(params);
    let mut a = vec![0.0; params.len()];
    let mut mixed = vec![0.0; params.len()];
    let mut f_a = Vec::with_capacity(samples);
    let mut f_b = Vec::with_capacity(samples);
    let mut products = Vec::with_capacity(samples);
    for _ in 0..samples {
        for (slot, d) in a.iter_mut().zip(&dists) {
            *slot = d.sample(&mut rng);
        }
        for i in 0..params.len() {
            mixed[i] = if in_subset[i] {
                a[i]
            } else {
                dists[i].sample(&mut rng)
            };
        }
        let va = f(&a);
        let vm = f(&mixed);
        f_a.push(va);
        f_b.push(vm);
        products.push(va * vm);
    }
    let (mean_a, se_a) = mean_and_se(&f_a);
    let (mean_b, se_b) = mean_and_se(&f_b);
    let (mean_prod, se_prod) = mean_and_se(&products);
    McEstimate {
        value: mean_prod - mean_a * mean_b,
        // Conservative: the three sampled terms are correlated, so sum their
        // error contributions instead of combining in quadrature.
        std_error: se_prod + mean_b.abs() * se_a + mean_a.abs() * se_b,
    }
}
