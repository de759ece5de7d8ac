use alloc::vec::Vec;

use crate::error::{ensure_finite, invalid, Result};

/// Bound and regularity constants of a drift function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriftConstants {
    pub mu_max: f64,
    /// Size of the largest jump in time.
    pub c_mu_t: f64,
    pub c_mu_x: f64,
    pub c_mu_m: f64,
}

/// Drift `mu(t, S, M)`. The supported drifts depend on time only.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DriftFunction {
    #[default]
    Zero,
    Constant(f64),
    /// Right-continuous step function: `values[i]` on `[starts[i], starts[i+1])`.
    PiecewiseTime { starts: Vec<f64>, values: Vec<f64> },
}

impl DriftFunction {
    pub fn piecewise(starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(invalid("drift", "need one value per start time"));
        }
        if starts[0] != 0.0 {
            return Err(invalid("drift", "first start time must be 0"));
        }
        if starts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("drift", "start times must increase"));
        }
        for &v in starts.iter().chain(values.iter()) {
            ensure_finite(v, "drift")?;
        }
        Ok(DriftFunction::PiecewiseTime { starts, values })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftFunction::Zero => Ok(()),
            DriftFunction::Constant(v) => ensure_finite(*v, "drift"),
            DriftFunction::PiecewiseTime { starts, values } => {
                Self::piecewise(starts.clone(), values.clone()).map(|_| ())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DriftFunction::Zero => true,
            DriftFunction::Constant(v) => *v == 0.0,
            DriftFunction::PiecewiseTime { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DriftFunction::Zero => 0.0,
            DriftFunction::Constant(v) => *v,
            DriftFunction::PiecewiseTime { starts, values } => {
                let i = starts.partition_point(|s| *s <= t).max(1) - 1;
                values[i]
            }
        }
    }

    /// `int_{t0}^{t1} mu(u) du`, exact for step functions.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        match self {
            DriftFunction::Zero => 0.0,
            DriftFunction::Constant(v) => v * (t1 - t0),
            DriftFunction::PiecewiseTime { starts, values } => {
                let mut acc = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let lo = starts[i].max(t0);
                    let hi = starts.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t1);
                    if hi > lo {
                        acc += v * (hi - lo);
                    }
                }
                acc
            }
        }
    }

    pub fn constants(&self) -> DriftConstants {
        match self {
            DriftFunction::Zero => DriftConstants::default(),
            DriftFunction::Constant(v) => DriftConstants { mu_max: v.abs(), ..Default::default() },
            DriftFunction::PiecewiseTime { values, .. } => {
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                DriftConstants { mu_max: hi.abs().max(lo.abs()), c_mu_t: hi - lo, c_mu_x: 0.0, c_mu_m: 0.0 }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn piecewise_drift_integrates_across_breaks() {
        let d = DriftFunction::piecewise(vec![0.0, 0.5], vec![0.02, -0.01]).unwrap();
        assert_eq!(d.eval(0.0), 0.02);
        assert_eq!(d.eval(0.5), -0.01);
        assert!((d.integral(0.25, 0.75) - (0.25 * 0.02 - 0.25 * 0.01)).abs() < 1e-16);
        let c = d.constants();
        assert_eq!(c.mu_max, 0.02);
        assert!((c.c_mu_t - 0.03).abs() < 1e-16);
    }

    #[test]
    fn piecewise_validation() {
        assert!(DriftFunction::piecewise(vec![0.1], vec![1.0]).is_err());
        assert!(DriftFunction::piecewise(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(DriftFunction::piecewise(vec![0.0], vec![]).is_err());
        assert!(DriftFunction::Zero.is_zero());
        assert_eq!(DriftFunction::Constant(0.03).integral(0.0, 2.0), 0.06);
    }
}
