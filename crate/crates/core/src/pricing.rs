//! Monte Carlo payoff evaluation and Black-Scholes reference prices.

use alloc::string::String;
use core::ops::Range;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::exec::{run_chunked, PathExecutor};
use crate::math::{exp, ln, normal_cdf, sqrt};
use crate::rng::StreamKey;
use crate::sim::{simulate_path, SimGrid, SpdvModel, TerminalState};
use crate::stats::{ControlledMoments, Moments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayoffKind {
    EuropeanCall,
    EuropeanPut,
    /// Pays 1 if the running maximum stays strictly below the barrier.
    NoTouchUp,
}

impl PayoffKind {
    pub fn name(self) -> &'static str {
        match self {
            PayoffKind::EuropeanCall => "european_call",
            PayoffKind::EuropeanPut => "european_put",
            PayoffKind::NoTouchUp => "no_touch_up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    /// Strike or barrier.
    pub level: f64,
    /// Flat continuously compounded discount rate.
    pub discount: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, level: f64) -> Result<Self> {
        let spec = Self { kind, level, discount: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::EuropeanCall, strike)
    }

    pub fn put(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::EuropeanPut, strike)
    }

    pub fn no_touch_up(barrier: f64) -> Result<Self> {
        Self::new(PayoffKind::NoTouchUp, barrier)
    }

    pub fn with_discount(mut self, rate: f64) -> Self {
        self.discount = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.level, "strike_or_barrier")?;
        ensure_finite(self.discount, "discount")?;
        if self.level <= 0.0 {
            return Err(invalid("strike_or_barrier", "must be positive"));
        }
        Ok(())
    }

    /// Undiscounted payoff of one terminal state.
    pub fn payoff(&self, s: &TerminalState) -> f64 {
        match self.kind {
            PayoffKind::EuropeanCall => (s.spot() - self.level).max(0.0),
            PayoffKind::EuropeanPut => (self.level - s.spot()).max(0.0),
            PayoffKind::NoTouchUp => {
                if s.log_max < ln(self.level) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn discount_factor(&self, horizon: f64) -> f64 {
        exp(-self.discount * horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceEstimate {
    pub value: f64,
    pub std_error: f64,
    pub paths: u64,
    /// Digest of the model and grid configuration, filled in by callers that
    /// own a serialized configuration.
    pub config_hash: Option<String>,
}

impl PriceEstimate {
    fn from_moments(m: Moments, factor: f64) -> Self {
        Self { value: factor * m.mean, std_error: factor * m.std_error(), paths: m.count, config_hash: None }
    }
}

/// Prices `payoff` on already simulated terminal states.
pub fn price_terminals(terminals: &[TerminalState], payoff: &PayoffSpec, horizon: f64) -> Result<PriceEstimate> {
    payoff.validate()?;
    let m: Moments = terminals.iter().map(|s| payoff.payoff(s)).collect();
    finish(m, payoff, horizon)
}

fn finish(m: Moments, payoff: &PayoffSpec, horizon: f64) -> Result<PriceEstimate> {
    let est = PriceEstimate::from_moments(m, payoff.discount_factor(horizon));
    if !(est.value.is_finite() && est.std_error.is_finite()) {
        return Err(Error::NonFinite("price estimate"));
    }
    Ok(est)
}

/// Discounted sample mean of `payoff` over `grid.paths` simulated paths.
pub fn mc_price<E: PathExecutor>(model: &SpdvModel, grid: &SimGrid, payoff: &PayoffSpec, exec: &E) -> Result<PriceEstimate> {
    payoff_moments(model, grid, payoff, 0, exec).and_then(|m| finish(m.response(), payoff, grid.horizon))
}

/// Undiscounted payoff moments, with the terminal spot as control, over the
/// paths keyed by `(grid.seed, tag)`.
pub(crate) fn payoff_moments<E: PathExecutor>(
    model: &SpdvModel,
    grid: &SimGrid,
    payoff: &PayoffSpec,
    tag: u64,
    exec: &E,
) -> Result<ControlledMoments> {
    model.validate()?;
    grid.validate(model)?;
    payoff.validate()?;
    let key = StreamKey::new(grid.seed, tag);
    let chunks = run_chunked(exec, grid.paths, |range: Range<u64>| {
        let mut m = ControlledMoments::default();
        for p in range {
            let s = simulate_path(model, grid, &key, p, None)?;
            m.push(payoff.payoff(&s), s.spot());
        }
        Ok(m)
    })?;
    Ok(chunks.into_iter().fold(ControlledMoments::default(), ControlledMoments::merge))
}

fn check_bs(s0: f64, strike: f64, sigma: f64, horizon: f64, rate: f64) -> Result<()> {
    for (v, name) in [(s0, "s0"), (strike, "strike"), (sigma, "sigma"), (horizon, "horizon")] {
        ensure_finite(v, name)?;
        if v <= 0.0 {
            return Err(invalid(name, "must be positive"));
        }
    }
    ensure_finite(rate, "rate")
}

/// Black-Scholes call price.
pub fn black_scholes_call(s0: f64, strike: f64, sigma: f64, horizon: f64, rate: f64) -> Result<f64> {
    check_bs(s0, strike, sigma, horizon, rate)?;
    let sd = sigma * sqrt(horizon);
    let d1 = (ln(s0 / strike) + (rate + 0.5 * sigma * sigma) * horizon) / sd;
    let d2 = d1 - sd;
    Ok(s0 * normal_cdf(d1) - strike * exp(-rate * horizon) * normal_cdf(d2))
}

/// Black-Scholes put price.
pub fn black_scholes_put(s0: f64, strike: f64, sigma: f64, horizon: f64, rate: f64) -> Result<f64> {
    check_bs(s0, strike, sigma, horizon, rate)?;
    let sd = sigma * sqrt(horizon);
    let d1 = (ln(s0 / strike) + (rate + 0.5 * sigma * sigma) * horizon) / sd;
    let d2 = d1 - sd;
    Ok(strike * exp(-rate * horizon) * normal_cdf(-d2) - s0 * normal_cdf(-d1))
}
