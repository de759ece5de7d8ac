//! Strong and weak error ladders and log-log slope fits.
//!
//! The strong error at `N` steps is estimated by the `L^p` distance between
//! the `N`-step and `2N`-step approximations driven by the same Brownian path.
//! The weak error is the gap between payoff expectations at `N` and `2N`.

use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::exec::{run_chunked, PathExecutor};
use crate::math::{log2, powf, sqrt};
use crate::pricing::{payoff_moments, PayoffSpec};
use crate::rng::StreamKey;
use crate::sim::{simulate_coupled_path, SimGrid, SpdvModel};
use crate::math::exp;
use crate::stats::{ControlledMoments, Moments};

/// Levels `base_n, 2 base_n, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderSpec {
    pub base_n: usize,
    pub n_levels: usize,
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self { base_n: 16, n_levels: 6 }
    }
}

impl LadderSpec {
    pub fn new(base_n: usize, n_levels: usize) -> Self {
        Self { base_n, n_levels }
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_levels).map(move |j| self.base_n << j)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_n == 0 {
            return Err(invalid("base_n", "must be at least 1"));
        }
        if self.n_levels == 0 {
            return Err(invalid("n_levels", "must be at least 1"));
        }
        if self.n_levels > 24 || self.base_n.checked_shl(self.n_levels as u32 + 1).is_none() {
            return Err(invalid("n_levels", "too many levels"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderLevel {
    pub n: usize,
    pub error: f64,
    pub std_error: f64,
    pub paths: u64,
    /// `error > 2 std_error` and above the rounding floor.
    pub resolved: bool,
}

/// Errors below this multiple of the problem scale are rounding noise.
const ROUNDING_FLOOR: f64 = 1e-12;

impl LadderLevel {
    pub fn new(n: usize, error: f64, std_error: f64, paths: u64, scale: f64) -> Self {
        let resolved = error > 2.0 * std_error && error > ROUNDING_FLOOR * scale;
        Self { n, error, std_error, paths, resolved }
    }
}

/// What a ladder measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderKind {
    /// `L^p` strong error.
    Strong { p: f64 },
    /// Weak error of a payoff.
    Weak { payoff: PayoffSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorLadder {
    pub kind: LadderKind,
    pub levels: Vec<LadderLevel>,
}

impl ErrorLadder {
    pub fn fit(&self) -> Result<SlopeFit> {
        fit_slope(&self.levels)
    }
}

/// Least-squares line through `(log2 N, log2 error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Indices of the levels used.
    pub used: Vec<usize>,
    /// Indices of levels dropped as unresolved.
    pub excluded: Vec<usize>,
}

/// Fits the resolved levels of a ladder. Needs at least three.
pub fn fit_slope(levels: &[LadderLevel]) -> Result<SlopeFit> {
    let (used, excluded): (Vec<usize>, Vec<usize>) =
        (0..levels.len()).partition(|&i| levels[i].resolved && levels[i].error > 0.0 && levels[i].error.is_finite());
    if used.len() < 3 {
        return Err(Error::InsufficientResolvedLevels { found: used.len() });
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|&i| (log2(levels[i].n as f64), log2(levels[i].error))).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| p.1 - intercept - slope * p.0).map(|r| r * r).sum();
    let slope_se = sqrt(ssr / (n - 2.0) / sxx);
    Ok(SlopeFit { slope, intercept, slope_se, used, excluded })
}

/// Standard-error method for strong ladders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(Default)]
pub enum StrongErrorMethod {
    /// Delta method on the empirical `p`-th moment.
    #[default]
    Delta,
    /// Nonparametric bootstrap with the given number of resamples.
    Bootstrap { resamples: usize },
}


const LEVEL_TAG: u64 = 1 << 32;
const BOOTSTRAP_TAG: u64 = 1 << 40;

/// Strong ladders for every order in `orders`, sharing one coupled simulation
/// per level. `grid.steps` is ignored; the levels come from `spec`.
pub fn strong_ladders<E: PathExecutor>(
    model: &SpdvModel,
    grid: &SimGrid,
    spec: LadderSpec,
    orders: &[f64],
    method: StrongErrorMethod,
    exec: &E,
) -> Result<Vec<ErrorLadder>> {
    spec.validate()?;
    if orders.is_empty() {
        return Err(invalid("p", "need at least one order"));
    }
    if orders.iter().any(|p| !(*p >= 1.0 && p.is_finite())) {
        return Err(invalid("p", "must be finite and at least 1"));
    }
    if grid.paths < 2 {
        return Err(invalid("paths", "need at least 2 paths"));
    }
    let mut ladders: Vec<ErrorLadder> =
        orders.iter().map(|&p| ErrorLadder { kind: LadderKind::Strong { p }, levels: Vec::new() }).collect();
    for (j, n) in spec.steps().enumerate() {
        let g = grid.with_steps(n);
        model.validate()?;
        g.validate(model)?;
        let key = StreamKey::new(grid.seed, LEVEL_TAG + j as u64);
        let diffs: Vec<f64> = run_chunked(exec, g.paths, |range: Range<u64>| {
            range
                .map(|path| {
                    let pair = simulate_coupled_path(model, &g, &key, path)?;
                    Ok((pair.coarse.spot() - pair.fine.spot()).abs())
                })
                .collect::<Result<Vec<f64>>>()
        })?
        .into_iter()
        .flatten()
        .collect();
        for (ladder, &p) in ladders.iter_mut().zip(orders) {
            let (error, se) = match method {
                StrongErrorMethod::Delta => lp_delta(&diffs, p),
                StrongErrorMethod::Bootstrap { resamples } => {
                    let se = lp_bootstrap(&diffs, p, resamples, StreamKey::new(grid.seed, BOOTSTRAP_TAG + j as u64));
                    (lp_delta(&diffs, p).0, se)
                }
            };
            if !(error.is_finite() && se.is_finite()) {
                return Err(Error::NonFinite("strong error estimate"));
            }
            ladder.levels.push(LadderLevel::new(n, error, se, g.paths, model.s0));
        }
    }
    Ok(ladders)
}

/// Single-order form of [`strong_ladders`].
pub fn strong_ladder<E: PathExecutor>(
    model: &SpdvModel,
    grid: &SimGrid,
    spec: LadderSpec,
    p: f64,
    exec: &E,
) -> Result<ErrorLadder> {
    strong_ladders(model, grid, spec, &[p], StrongErrorMethod::Delta, exec).map(|mut v| v.remove(0))
}

/// `(mean d^p)^{1/p}` and its delta-method standard error.
fn lp_delta(diffs: &[f64], p: f64) -> (f64, f64) {
    let m: Moments = diffs.iter().map(|d| powf(*d, p)).collect();
    if m.mean <= 0.0 {
        return (0.0, 0.0);
    }
    let error = powf(m.mean, 1.0 / p);
    (error, error / (p * m.mean) * m.std_error())
}

fn lp_bootstrap(diffs: &[f64], p: f64, resamples: usize, key: StreamKey) -> f64 {
    let powered: Vec<f64> = diffs.iter().map(|d| powf(*d, p)).collect();
    let n = powered.len();
    let mut rng = key.stream(0, crate::rng::Substream::VarianceDriver);
    let est: Moments = (0..resamples.max(2))
        .map(|_| {
            let mean = (0..n).map(|_| powered[rng.random_range(0..n)]).sum::<f64>() / n as f64;
            powf(mean, 1.0 / p)
        })
        .collect();
    sqrt(est.variance())
}

/// Sampling scheme of weak ladders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeakSampling {
    /// Independent samples for `N` and `2N`.
    Independent,
    /// Both resolutions on the same Brownian path; the estimate is the mean
    /// of the pathwise payoff difference.
    #[default]
    Coupled,
}

/// Weak ladder for `payoff`. The max mode and scheme come from `grid`.
///
/// Each expectation is regression-adjusted with the terminal spot as control
/// variate: the log-Euler spot is an exact discrete martingale up to the
/// deterministic drift, so its mean is known at every resolution.
pub fn weak_ladder<E: PathExecutor>(
    model: &SpdvModel,
    grid: &SimGrid,
    spec: LadderSpec,
    payoff: &PayoffSpec,
    sampling: WeakSampling,
    exec: &E,
) -> Result<ErrorLadder> {
    spec.validate()?;
    payoff.validate()?;
    if grid.paths < 2 {
        return Err(invalid("paths", "need at least 2 paths"));
    }
    let df = payoff.discount_factor(grid.horizon);
    let mut levels = Vec::with_capacity(spec.n_levels);
    match sampling {
        WeakSampling::Independent => {
            // One independent estimate per resolution, keyed by its step count.
            let spot_mean = model.s0 * exp(model.drift.integral(0.0, grid.horizon));
            let mut estimates: Vec<(f64, f64)> = Vec::with_capacity(spec.n_levels + 1);
            for n in spec.steps().chain(core::iter::once(spec.base_n << spec.n_levels)) {
                let m = payoff_moments(model, &grid.with_steps(n), payoff, LEVEL_TAG + n as u64, exec)?;
                estimates.push(m.controlled(spot_mean));
            }
            for (j, n) in spec.steps().enumerate() {
                let ((a, sa), (b, sb)) = (estimates[j], estimates[j + 1]);
                let diff = df * (a - b).abs();
                let se = df * sqrt(sa * sa + sb * sb);
                levels.push(LadderLevel::new(n, diff, se, grid.paths, payoff.level));
            }
        }
        WeakSampling::Coupled => {
            for (j, n) in spec.steps().enumerate() {
                let g = grid.with_steps(n);
                model.validate()?;
                g.validate(model)?;
                let key = StreamKey::new(grid.seed, LEVEL_TAG + j as u64);
                let m = run_chunked(exec, g.paths, |range: Range<u64>| {
                    let mut m = ControlledMoments::default();
                    for path in range {
                        let pair = simulate_coupled_path(model, &g, &key, path)?;
                        m.push(
                            payoff.payoff(&pair.coarse) - payoff.payoff(&pair.fine),
                            pair.coarse.spot() - pair.fine.spot(),
                        );
                    }
                    Ok(m)
                })?
                .into_iter()
                .fold(ControlledMoments::default(), ControlledMoments::merge);
                let (diff, se) = m.controlled(0.0);
                levels.push(LadderLevel::new(n, df * diff.abs(), df * se, g.paths, payoff.level));
            }
        }
    }
    if levels.iter().any(|l| !(l.error.is_finite() && l.std_error.is_finite())) {
        return Err(Error::NonFinite("weak error estimate"));
    }
    Ok(ErrorLadder { kind: LadderKind::Weak { payoff: *payoff }, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::leverage::{arctan_max_leverage, constant_leverage, DriftFunction};
    use crate::pricing::PayoffKind;
    use crate::sim::MaxMode;
    use crate::variance::{CirParams, VarianceScheme};

    fn level(n: usize, error: f64, se: f64) -> LadderLevel {
        LadderLevel::new(n, error, se, 100, 0.0)
    }

    fn power_ladder(c: f64, rate: f64) -> Vec<LadderLevel> {
        (0..6).map(|j| 16usize << j).map(|n| level(n, c * (n as f64).powf(-rate), 0.0)).collect()
    }

    #[test]
    fn exact_power_laws() {
        for rate in [0.5, 1.0] {
            let fit = fit_slope(&power_ladder(0.3, rate)).unwrap();
            assert!((fit.slope + rate).abs() < 1e-12);
            assert!(fit.slope_se < 1e-12);
            assert_eq!(fit.used.len(), 6);
        }
    }

    #[test]
    fn noisy_top_level_is_excluded() {
        let mut ladder = power_ladder(0.3, 0.5);
        let clean = fit_slope(&ladder[..5]).unwrap();
        let top = ladder.last_mut().unwrap();
        *top = level(top.n, 0.2, 0.5);
        let fit = fit_slope(&ladder).unwrap();
        assert_eq!(fit.excluded, [5]);
        assert_eq!(fit.slope, clean.slope);
    }

    #[test]
    fn too_few_resolved_levels() {
        let mut ladder = power_ladder(0.3, 0.5);
        for l in &mut ladder[2..] {
            *l = level(l.n, 0.0, 0.0);
        }
        assert_eq!(fit_slope(&ladder).unwrap_err(), Error::InsufficientResolvedLevels { found: 2 });
    }

    #[test]
    fn ladder_spec_steps() {
        let s = LadderSpec::default();
        assert_eq!(s.steps().collect::<Vec<_>>(), [16, 32, 64, 128, 256, 512]);
        assert!(LadderSpec::new(0, 3).validate().is_err());
        assert!(LadderSpec::new(1, 0).validate().is_err());
    }

    fn deterministic_model() -> SpdvModel {
        SpdvModel::new(
            1.0,
            0.5,
            CirParams::new(0.04, 2.0, 0.04, 0.0).unwrap(),
            DriftFunction::Constant(0.03),
            constant_leverage(1.5).unwrap(),
        )
        .unwrap()
    }

    fn heston() -> SpdvModel {
        SpdvModel::new(
            1.0,
            -0.1,
            CirParams::new(0.025, 8.0, 0.02, 0.2).unwrap(),
            DriftFunction::Zero,
            arctan_max_leverage(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn exact_scheme_has_zero_strong_error() {
        // xi = 0 with v0 = theta keeps the variance constant, so log-Euler is exact.
        let grid = SimGrid::new(1.0, 1, 200, 1);
        let ladders =
            strong_ladders(&deterministic_model(), &grid, LadderSpec::new(4, 4), &[1.0, 2.0], StrongErrorMethod::Delta, &Sequential)
                .unwrap();
        for ladder in ladders {
            for l in ladder.levels {
                assert!(l.error < 1e-14, "{l:?}");
                assert!(!l.resolved);
            }
        }
    }

    #[test]
    fn l2_dominates_l1_and_runs_are_reproducible() {
        let grid = SimGrid::new(1.0, 1, 400, 9);
        let run = || strong_ladders(&heston(), &grid, LadderSpec::new(4, 3), &[1.0, 2.0], StrongErrorMethod::Delta, &Sequential).unwrap();
        let a = run();
        assert_eq!(a, run());
        for (l1, l2) in a[0].levels.iter().zip(&a[1].levels) {
            assert!(l2.error >= l1.error);
            assert!(l1.std_error > 0.0);
        }
    }

    #[test]
    fn bootstrap_agrees_with_delta_method() {
        let grid = SimGrid::new(1.0, 1, 2000, 4);
        let spec = LadderSpec::new(8, 1);
        let delta = strong_ladders(&heston(), &grid, spec, &[1.0], StrongErrorMethod::Delta, &Sequential).unwrap();
        let boot = strong_ladders(&heston(), &grid, spec, &[1.0], StrongErrorMethod::Bootstrap { resamples: 200 }, &Sequential)
            .unwrap();
        let (d, b) = (delta[0].levels[0], boot[0].levels[0]);
        assert_eq!(d.error, b.error);
        assert!((b.std_error / d.std_error - 1.0).abs() < 0.3, "{} vs {}", b.std_error, d.std_error);
    }

    #[test]
    fn constant_payoff_has_zero_weak_error() {
        // A barrier no path reaches pays 1 on every path.
        let payoff = PayoffSpec::no_touch_up(1e300).unwrap();
        let grid = SimGrid::new(1.0, 1, 300, 2);
        for sampling in [WeakSampling::Independent, WeakSampling::Coupled] {
            let ladder = weak_ladder(&heston(), &grid, LadderSpec::new(4, 3), &payoff, sampling, &Sequential).unwrap();
            for l in ladder.levels {
                assert_eq!(l.error, 0.0);
                assert_eq!(l.std_error, 0.0);
            }
        }
    }

    #[test]
    fn weak_ladder_shapes() {
        let payoff = PayoffSpec { kind: PayoffKind::EuropeanCall, level: 0.9, discount: 0.0 };
        let grid = SimGrid::new(1.0, 1, 500, 3).with_scheme(VarianceScheme::Bem).with_max_mode(MaxMode::BrownianBridge);
        for sampling in [WeakSampling::Independent, WeakSampling::Coupled] {
            let ladder = weak_ladder(&heston(), &grid, LadderSpec::new(4, 3), &payoff, sampling, &Sequential).unwrap();
            assert_eq!(ladder.levels.iter().map(|l| l.n).collect::<Vec<_>>(), [4, 8, 16]);
            assert!(ladder.levels.iter().all(|l| l.std_error > 0.0 && l.paths == 500));
        }
    }
}
