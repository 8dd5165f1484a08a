//! Deterministic quadrature on axis-aligned boxes.
//!
//! All integrators use the composite trapezoid rule with a fixed node count
//! per axis derived from a `resolution` parameter: `N = round(1/resolution)`
//! subintervals, hence `N + 1` nodes. The same resolution applies to every
//! axis of a box. Accumulation is compensated (Neumaier variant), so results
//! are reproducible bit-for-bit across runs and, for the sizes involved
//! here, independent of reasonable summation-order concerns.
//!
//! Trapezoid error decays quadratically with the resolution: halving the
//! resolution roughly quarters the error for twice-differentiable
//! integrands, which is what the convergence tests assert.
//!
//! Cost is exponential in the dimension — `(N + 1)^dim` evaluations — so
//! every entry point takes an evaluation budget and refuses up front, before
//! evaluating anything, when the grid would exceed it.

use thiserror::Error;

/// Closed interval `[min, max]` with `min < max`, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn new(min: f64, max: f64) -> Result<Interval, QuadError> {
        let iv = Interval { min, max };
        iv.validate(0)?;
        Ok(iv)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    fn validate(&self, axis: usize) -> Result<(), QuadError> {
        if self.min.is_finite() && self.max.is_finite() && self.min < self.max {
            Ok(())
        } else {
            Err(QuadError::InvalidDomain {
                axis,
                min: self.min,
                max: self.max,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("resolution must be a finite value in (0, 1], got {value}")]
    InvalidResolution { value: f64 },
    #[error("axis {axis}: domain requires finite min < max, got [{min}, {max}]")]
    InvalidDomain { axis: usize, min: f64, max: f64 },
    #[error("operation needs {needed} integrand evaluations, exceeding the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("integrand returned a non-finite value at {point:?}")]
    NonFiniteSample { point: Vec<f64> },
}

/// Number of subintervals per axis at the given resolution, at least one.
pub fn node_count(resolution: f64) -> Result<u64, QuadError> {
    if !resolution.is_finite() || resolution <= 0.0 || resolution > 1.0 {
        return Err(QuadError::InvalidResolution { value: resolution });
    }
    Ok(((1.0 / resolution).round() as u64).max(1))
}

/// Evaluations a full `dim`-dimensional trapezoid grid performs: `(N+1)^dim`.
/// Exact in `u128`, so callers can compare against a budget without overflow.
pub fn grid_evaluations(dim: usize, resolution: f64) -> Result<u128, QuadError> {
    let n = node_count(resolution)? as u128 + 1;
    Ok(n.pow(dim as u32))
}

fn check_budget(needed: u128, budget: u64) -> Result<(), QuadError> {
    if needed > budget as u128 {
        Err(QuadError::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// Neumaier compensated accumulator: like Kahan summation but robust when
/// an addend exceeds the running sum in magnitude.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> CompensatedSum {
        CompensatedSum::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Trapezoid nodes for one axis: endpoints exact, interior at `min + k*h`.
fn axis_nodes(interval: Interval, n: u64) -> Vec<f64> {
    let h = interval.width() / n as f64;
    let mut nodes = Vec::with_capacity(n as usize + 1);
    nodes.push(interval.min);
    for k in 1..n {
        nodes.push(interval.min + k as f64 * h);
    }
    nodes.push(interval.max);
    nodes
}

/// Midpoints of the `count` equal cells of `interval`, in ascending order.
pub fn midpoint_nodes(interval: Interval, count: u64) -> impl Iterator<Item = f64> {
    let h = interval.width() / count as f64;
    let min = interval.min;
    (0..count).map(move |k| min + (k as f64 + 0.5) * h)
}

/// Composite trapezoid integral of `f` over `interval`.
pub fn integrate_1d(
    mut f: impl FnMut(f64) -> f64,
    interval: Interval,
    resolution: f64,
    budget: u64,
) -> Result<f64, QuadError> {
    interval.validate(0)?;
    let n = node_count(resolution)?;
    check_budget(n as u128 + 1, budget)?;
    let nodes = axis_nodes(interval, n);
    let mut acc = CompensatedSum::new();
    for (k, &x) in nodes.iter().enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(QuadError::NonFiniteSample { point: vec![x] });
        }
        let w = if k == 0 || k == n as usize { 0.5 } else { 1.0 };
        acc.add(w * v);
    }
    Ok(acc.total() * (interval.width() / n as f64))
}

/// Average value of `f` over `interval`: the integral divided by the width.
pub fn mean_1d(
    f: impl FnMut(f64) -> f64,
    interval: Interval,
    resolution: f64,
    budget: u64,
) -> Result<f64, QuadError> {
    Ok(integrate_1d(f, interval, resolution, budget)? / interval.width())
}

/// Trapezoid estimates of the averages of `f` and of `f²` over `interval`,
/// from a single pass over the nodes.
pub fn moment_pair_1d(
    mut f: impl FnMut(f64) -> f64,
    interval: Interval,
    resolution: f64,
    budget: u64,
) -> Result<(f64, f64), QuadError> {
    interval.validate(0)?;
    let n = node_count(resolution)?;
    check_budget(n as u128 + 1, budget)?;
    let nodes = axis_nodes(interval, n);
    let mut first = CompensatedSum::new();
    let mut second = CompensatedSum::new();
    for (k, &x) in nodes.iter().enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(QuadError::NonFiniteSample { point: vec![x] });
        }
        let w = if k == 0 || k == n as usize { 0.5 } else { 1.0 };
        first.add(w * v);
        second.add(w * (v * v));
    }
    Ok((first.total() / n as f64, second.total() / n as f64))
}

/// Tensor-product trapezoid integral over an axis-aligned box. `f` receives
/// one coordinate per axis, in `domain` order. Nodes are visited in odometer
/// order with the last axis varying fastest, which fixes the accumulation
/// order and hence the exact result.
pub fn integrate_nd(
    mut f: impl FnMut(&[f64]) -> f64,
    domain: &[Interval],
    resolution: f64,
    budget: u64,
) -> Result<f64, QuadError> {
    assert!(!domain.is_empty(), "integrate_nd needs at least one axis");
    for (axis, iv) in domain.iter().enumerate() {
        iv.validate(axis)?;
    }
    let n = node_count(resolution)?;
    check_budget(grid_evaluations(domain.len(), resolution)?, budget)?;

    let axes: Vec<Vec<f64>> = domain.iter().map(|iv| axis_nodes(*iv, n)).collect();
    let dim = domain.len();
    let last = n as usize;
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0f64; dim];
    for (a, nodes) in axes.iter().enumerate() {
        point[a] = nodes[0];
    }
    let mut acc = CompensatedSum::new();
    loop {
        let v = f(&point);
        if !v.is_finite() {
            return Err(QuadError::NonFiniteSample { point: point.clone() });
        }
        let mut w = 1.0;
        for &i in &idx {
            if i == 0 || i == last {
                w *= 0.5;
            }
        }
        acc.add(w * v);

        // Odometer increment, last axis fastest.
        let mut a = dim;
        loop {
            if a == 0 {
                let cell: f64 = domain.iter().map(|iv| iv.width() / n as f64).product();
                return Ok(acc.total() * cell);
            }
            a -= 1;
            if idx[a] < last {
                idx[a] += 1;
                point[a] = axes[a][idx[a]];
                break;
            }
            idx[a] = 0;
            point[a] = axes[a][0];
        }
    }
}

/// Average value of `f` over the box: the integral divided by the volume.
pub fn mean_nd(
    f: impl FnMut(&[f64]) -> f64,
    domain: &[Interval],
    resolution: f64,
    budget: u64,
) -> Result<f64, QuadError> {
    let volume: f64 = domain.iter().map(Interval::width).product();
    Ok(integrate_nd(f, domain, resolution, budget)? / volume)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const BIG: u64 = u64::MAX;

    #[test]
    fn compensated_sum_survives_catastrophic_cancellation() {
        let mut s = CompensatedSum::new();
        for v in [1e16, 1.0, -1e16] {
            s.add(v);
        }
        assert_eq!(s.total(), 1.0);

        let mut t = CompensatedSum::new();
        for _ in 0..10_000_000 {
            t.add(0.1);
        }
        assert!((t.total() - 1e6).abs() < 1e-7, "total = {}", t.total());
    }

    #[test]
    fn node_counts_round_to_nearest() {
        assert_eq!(node_count(1e-5).unwrap(), 100_000);
        assert_eq!(node_count(0.0025).unwrap(), 400);
        assert_eq!(node_count(1.0).unwrap(), 1);
        assert_eq!(node_count(0.3).unwrap(), 3);
        assert!(matches!(node_count(0.0), Err(QuadError::InvalidResolution { .. })));
        assert!(matches!(node_count(-0.1), Err(QuadError::InvalidResolution { .. })));
        assert!(matches!(node_count(1.5), Err(QuadError::InvalidResolution { .. })));
        assert!(matches!(node_count(f64::NAN), Err(QuadError::InvalidResolution { .. })));
    }

    #[test]
    fn integrates_sine_over_half_period() {
        let iv = Interval::new(0.0, PI).unwrap();
        let v = integrate_1d(f64::sin, iv, 1e-5, BIG).unwrap();
        assert!((v - 2.0).abs() <= 1e-8, "integral = {v}");
    }

    #[test]
    fn mean_of_affine_function_is_exact() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        let v = mean_1d(|x| x, iv, 1e-3, BIG).unwrap();
        assert!((v - 1.0).abs() <= 1e-12, "mean = {v}");
        let w = mean_1d(|x| 3.0 * x - 5.0, iv, 0.125, BIG).unwrap();
        assert!((w + 2.0).abs() <= 1e-12, "mean = {w}");
    }

    #[test]
    fn mean_of_squared_sine_slice() {
        let iv = Interval::new(-PI / 10.0, PI / 10.0).unwrap();
        let v = mean_1d(|y| 7.0 * y.sin().powi(2), iv, 1e-3, BIG).unwrap();
        assert!((v - 0.2258).abs() <= 1e-3, "mean = {v}");
    }

    #[test]
    fn product_integral_over_unit_square() {
        let dom = [Interval::new(0.0, 1.0).unwrap(), Interval::new(0.0, 1.0).unwrap()];
        let v = integrate_nd(|p| p[0] * p[1], &dom, 1e-3, BIG).unwrap();
        assert!((v - 0.25).abs() <= 1e-6, "integral = {v}");
    }

    #[test]
    fn plane_slice_mean_recovers_conditional_value() {
        // Averaging sin(x) + 7*sin(v)^2 + 0.1*z^4*sin(x) over (x, z) at fixed
        // y = v leaves 7*sin(v)^2: the odd parts cancel on the symmetric box.
        let a = PI / 10.0;
        let dom = [Interval::new(-a, a).unwrap(), Interval::new(-a, a).unwrap()];
        for v in [0.0f64, 0.1, 0.3] {
            let expected = 7.0 * v.sin().powi(2);
            let got = mean_nd(
                |p| p[0].sin() + expected + 0.1 * p[1].powi(4) * p[0].sin(),
                &dom,
                1e-3,
                BIG,
            )
            .unwrap();
            assert!(
                (got - expected).abs() <= 1e-4,
                "slice mean at v={v}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn moment_pair_matches_separate_integrals() {
        let iv = Interval::new(-0.5, 1.5).unwrap();
        let (m1, m2) = moment_pair_1d(f64::sin, iv, 1e-3, BIG).unwrap();
        let e1 = mean_1d(f64::sin, iv, 1e-3, BIG).unwrap();
        let e2 = mean_1d(|x| x.sin() * x.sin(), iv, 1e-3, BIG).unwrap();
        assert!((m1 - e1).abs() < 1e-14, "{m1} vs {e1}");
        assert!((m2 - e2).abs() < 1e-14, "{m2} vs {e2}");
    }

    #[test]
    fn midpoints_partition_the_interval() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let nodes: Vec<f64> = midpoint_nodes(iv, 4).collect();
        assert_eq!(nodes, vec![0.125, 0.375, 0.625, 0.875]);
        let mean: f64 = midpoint_nodes(iv, 1000).map(|x| x * x).sum::<f64>() / 1000.0;
        assert!((mean - 1.0 / 3.0).abs() <= 1e-6, "midpoint mean = {mean}");
    }

    #[test]
    fn budget_refusal_happens_before_any_evaluation() {
        let dom = [
            Interval::new(0.0, 1.0).unwrap(),
            Interval::new(0.0, 1.0).unwrap(),
            Interval::new(0.0, 1.0).unwrap(),
        ];
        let mut calls = 0u64;
        let r = integrate_nd(
            |_| {
                calls += 1;
                1.0
            },
            &dom,
            1e-3,
            1_000_000,
        );
        match r {
            Err(QuadError::BudgetExceeded { needed, budget }) => {
                assert_eq!(needed, 1001u128.pow(3));
                assert_eq!(budget, 1_000_000);
            }
            other => panic!("expected budget refusal, got {other:?}"),
        }
        assert_eq!(calls, 0, "integrand ran despite the refusal");
    }

    #[test]
    fn non_finite_samples_report_the_offending_point() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        match integrate_1d(|x| 1.0 / x, iv, 0.5, BIG) {
            Err(QuadError::NonFiniteSample { point }) => assert_eq!(point, vec![0.0]),
            other => panic!("expected non-finite sample, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_domains_are_rejected() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NEG_INFINITY, 0.0).is_err());
        assert!(Interval::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn endpoints_are_hit_exactly() {
        // 0.1 * 7 does not equal 0.7 in floating point; the last node must
        // still be the exact upper bound.
        let iv = Interval::new(0.0, 0.7).unwrap();
        let mut seen = Vec::new();
        integrate_1d(
            |x| {
                seen.push(x);
                x
            },
            iv,
            1.0 / 7.0,
            BIG,
        )
        .unwrap();
        assert_eq!(seen.first().copied(), Some(0.0));
        assert_eq!(seen.last().copied(), Some(0.7));
        assert_eq!(seen.len(), 8);
    }
}
