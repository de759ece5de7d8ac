//! Discretizations of the CIR squared-volatility process
//! `dv = k (theta - v) dt + xi sqrt(v) dW^v`.
//!
//! Both schemes produce a piecewise-constant, non-negative `v_bar` that the
//! spot leg reads at the left node of every step.

use alloc::vec::Vec;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::math::sqrt;
use crate::sim::SimGrid;

/// CIR parameters of the variance leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    /// Initial variance.
    pub v0: f64,
    /// Mean-reversion speed.
    pub k: f64,
    /// Long-run variance.
    pub theta: f64,
    /// Volatility of variance.
    pub xi: f64,
}

impl CirParams {
    pub fn new(v0: f64, k: f64, theta: f64, xi: f64) -> Result<Self> {
        let params = Self { v0, k, theta, xi };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.v0, "v0")?;
        ensure_finite(self.k, "k")?;
        ensure_finite(self.theta, "theta")?;
        ensure_finite(self.xi, "xi")?;
        if self.v0 <= 0.0 {
            return Err(invalid("v0", "must be positive"));
        }
        if self.k <= 0.0 {
            return Err(invalid("k", "must be positive"));
        }
        if self.theta <= 0.0 {
            return Err(invalid("theta", "must be positive"));
        }
        if self.xi < 0.0 {
            return Err(invalid("xi", "must be non-negative"));
        }
        Ok(())
    }

    /// `nu = 2 k theta / xi^2`, infinite when `xi = 0`.
    pub fn feller_ratio(&self) -> f64 {
        if self.xi == 0.0 {
            f64::INFINITY
        } else {
            2.0 * self.k * self.theta / (self.xi * self.xi)
        }
    }

    /// Whether the backward Euler-Maruyama root is available (`4 k theta > xi^2`).
    pub fn bem_admissible(&self) -> bool {
        4.0 * self.k * self.theta > self.xi * self.xi
    }

    pub(crate) fn check_bem(&self) -> Result<()> {
        if self.bem_admissible() {
            Ok(())
        } else {
            Err(Error::FellerTooSmall {
                four_k_theta: 4.0 * self.k * self.theta,
                xi_sq: self.xi * self.xi,
            })
        }
    }

    /// `E[v_t]` of the exact CIR process.
    pub fn mean_at(&self, t: f64) -> f64 {
        self.theta + (self.v0 - self.theta) * crate::math::exp(-self.k * t)
    }

    /// Lamperti coefficients `(alpha, beta, gamma)` of `y = sqrt(v)`.
    pub fn lamperti(&self) -> (f64, f64, f64) {
        (
            (4.0 * self.k * self.theta - self.xi * self.xi) / 8.0,
            -0.5 * self.k,
            0.5 * self.xi,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarianceScheme {
    /// Full truncation Euler on the signed auxiliary variance.
    Fte,
    /// Drift-implicit Euler on the square-root (Lamperti) variable.
    Bem,
}

impl VarianceScheme {
    pub fn name(self) -> &'static str {
        match self {
            VarianceScheme::Fte => "fte",
            VarianceScheme::Bem => "bem",
        }
    }
}

/// One full truncation Euler step of the signed auxiliary variance.
///
/// The result may be negative; readers take the positive part.
pub fn fte_step(v_tilde: f64, params: &CirParams, dt: f64, dwv: f64) -> Result<f64> {
    ensure_finite(v_tilde, "v_tilde")?;
    ensure_finite(dt, "dt")?;
    ensure_finite(dwv, "dWv")?;
    if dt <= 0.0 {
        return Err(invalid("dt", "must be positive"));
    }
    let vp = v_tilde.max(0.0);
    Ok(v_tilde + params.k * (params.theta - vp) * dt + params.xi * sqrt(vp) * dwv)
}

/// One backward Euler-Maruyama step of the Lamperti variable `y = sqrt(v)`.
///
/// Returns the explicit positive root of
/// `y' = y + (alpha / y' + beta y') dt + gamma dWv`.
pub fn bem_step(y_tilde: f64, params: &CirParams, dt: f64, dwv: f64) -> Result<f64> {
    ensure_finite(y_tilde, "y_tilde")?;
    ensure_finite(dt, "dt")?;
    ensure_finite(dwv, "dWv")?;
    params.check_bem()?;
    if dt <= 0.0 {
        return Err(invalid("dt", "must be positive"));
    }
    if y_tilde <= 0.0 {
        return Err(invalid("y_tilde", "must be positive"));
    }
    Ok(CirLeg::new(VarianceScheme::Bem, params, dt).advance(y_tilde, dwv))
}

/// Per-step stepping rule with the step-size dependent coefficients folded in.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CirLeg {
    Fte { k: f64, theta: f64, dt: f64, xi: f64 },
    Bem { inv_two_denom: f64, alpha_dt_over_denom: f64, gamma: f64 },
}

impl CirLeg {
    pub(crate) fn new(scheme: VarianceScheme, params: &CirParams, dt: f64) -> Self {
        match scheme {
            VarianceScheme::Fte => CirLeg::Fte { k: params.k, theta: params.theta, dt, xi: params.xi },
            VarianceScheme::Bem => {
                let (alpha, beta, gamma) = params.lamperti();
                let denom = 1.0 - beta * dt;
                CirLeg::Bem {
                    inv_two_denom: 0.5 / denom,
                    alpha_dt_over_denom: alpha * dt / denom,
                    gamma,
                }
            }
        }
    }

    /// Initial state: `v0` for FTE, `sqrt(v0)` for BEM.
    #[inline]
    pub(crate) fn initial(&self, v0: f64) -> f64 {
        match self {
            CirLeg::Fte { .. } => v0,
            CirLeg::Bem { .. } => sqrt(v0),
        }
    }

    /// The non-negative piecewise-constant variance read from a state.
    #[inline]
    pub(crate) fn bar(&self, state: f64) -> f64 {
        match self {
            CirLeg::Fte { .. } => state.max(0.0),
            CirLeg::Bem { .. } => state * state,
        }
    }

    #[inline]
    pub(crate) fn advance(&self, state: f64, dwv: f64) -> f64 {
        match *self {
            CirLeg::Fte { k, theta, dt, xi } => {
                let vp = state.max(0.0);
                state + k * (theta - vp) * dt + xi * sqrt(vp) * dwv
            }
            CirLeg::Bem { inv_two_denom, alpha_dt_over_denom, gamma } => {
                let half = (state + gamma * dwv) * inv_two_denom;
                half + sqrt((half * half + alpha_dt_over_denom).max(0.0))
            }
        }
    }
}

/// Node values of a discretized variance path.
#[derive(Debug, Clone, PartialEq)]
pub struct VariancePath {
    pub scheme: VarianceScheme,
    /// `t_n = n dt`, `n = 0..=N`.
    pub step_times: Vec<f64>,
    /// Signed FTE values or positive Lamperti values, per node.
    pub tilde_values: Vec<f64>,
    /// Non-negative piecewise-constant variance, per node.
    pub bar_values: Vec<f64>,
}

/// Runs the variance leg over `increments` (one Brownian increment per step).
pub fn simulate_variance(
    params: &CirParams,
    grid: &SimGrid,
    increments: &[f64],
    scheme: VarianceScheme,
) -> Result<VariancePath> {
    params.validate()?;
    if increments.len() != grid.steps {
        return Err(invalid("increments", "length must equal the step count"));
    }
    if scheme == VarianceScheme::Bem {
        params.check_bem()?;
    }
    let dt = grid.dt();
    let leg = CirLeg::new(scheme, params, dt);
    let n = grid.steps;
    let mut step_times = Vec::with_capacity(n + 1);
    let mut tilde_values = Vec::with_capacity(n + 1);
    let mut bar_values = Vec::with_capacity(n + 1);
    let mut state = leg.initial(params.v0);
    for (i, &dw) in increments.iter().enumerate() {
        ensure_finite(dw, "dWv")?;
        step_times.push(dt * i as f64);
        tilde_values.push(state);
        bar_values.push(leg.bar(state));
        state = leg.advance(state, dw);
    }
    ensure_finite(state, "variance state")?;
    step_times.push(grid.horizon);
    tilde_values.push(state);
    bar_values.push(leg.bar(state));
    Ok(VariancePath { scheme, step_times, tilde_values, bar_values })
}
