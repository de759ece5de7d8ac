//! Log-Euler simulation of `(log S, log M, v)`.
//!
//! Within a step the leverage, drift and variance are frozen at the left
//! node. The running maximum is either the maximum over the node values or,
//! in bridge mode, a sample of the maximum of the Brownian bridge between
//! consecutive log-spot nodes.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::exec::{run_chunked, PathExecutor};
use crate::leverage::{DriftFunction, LeverageFunction};
use crate::math::{exp, ln, sqrt};
use crate::rng::{open_closed_uniform, standard_normal, PathStreams, StreamKey};
use crate::variance::{CirLeg, CirParams, VarianceScheme};

/// Running-maximum tracking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaxMode {
    /// Maximum over the simulated nodes.
    Nodes,
    /// Maximum of the Brownian bridge interpolating each step.
    BrownianBridge,
}

impl MaxMode {
    pub fn name(self) -> &'static str {
        match self {
            MaxMode::Nodes => "nodes",
            MaxMode::BrownianBridge => "bridge",
        }
    }
}

/// Time grid and Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    pub horizon: f64,
    pub steps: usize,
    pub paths: u64,
    pub seed: u64,
    pub variance_scheme: VarianceScheme,
    pub max_mode: MaxMode,
}

impl SimGrid {
    /// Grid with the FTE scheme and node maximum.
    pub fn new(horizon: f64, steps: usize, paths: u64, seed: u64) -> Self {
        Self { horizon, steps, paths, seed, variance_scheme: VarianceScheme::Fte, max_mode: MaxMode::Nodes }
    }

    pub fn with_scheme(mut self, scheme: VarianceScheme) -> Self {
        self.variance_scheme = scheme;
        self
    }

    pub fn with_max_mode(mut self, mode: MaxMode) -> Self {
        self.max_mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self, model: &SpdvModel) -> Result<()> {
        ensure_finite(self.horizon, "horizon")?;
        if self.horizon <= 0.0 {
            return Err(invalid("horizon", "must be positive"));
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be at least 1"));
        }
        let n_t = model.leverage.constants().time_jumps();
        if n_t > 0 && !self.steps.is_multiple_of(n_t) {
            return Err(invalid("steps", "must be a multiple of the leverage time-jump count"));
        }
        if self.variance_scheme == VarianceScheme::Bem {
            model.cir.check_bem()?;
        }
        Ok(())
    }
}

/// Full model: spot, correlation, CIR leg, drift and leverage.
#[derive(Debug, Clone)]
pub struct SpdvModel {
    pub s0: f64,
    pub rho: f64,
    pub cir: CirParams,
    pub drift: DriftFunction,
    pub leverage: LeverageFunction,
}

impl SpdvModel {
    pub fn new(s0: f64, rho: f64, cir: CirParams, drift: DriftFunction, leverage: LeverageFunction) -> Result<Self> {
        let model = Self { s0, rho, cir, drift, leverage };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.s0, "s0")?;
        ensure_finite(self.rho, "rho")?;
        if self.s0 <= 0.0 {
            return Err(invalid("s0", "must be positive"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(invalid("rho", "must lie in (-1, 1)"));
        }
        self.cir.validate()?;
        self.drift.validate()?;
        self.leverage.constants().validate()
    }

    pub fn with_cir(mut self, cir: CirParams) -> Self {
        self.cir = cir;
        self
    }
}

/// Log-spot, log-running-maximum and the current piecewise-constant variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub x: f64,
    pub m: f64,
    pub v_bar: f64,
}

impl PathState {
    pub fn initial(model: &SpdvModel) -> Self {
        let x = ln(model.s0);
        Self { x, m: x, v_bar: model.cir.v0 }
    }

    pub fn spot(&self) -> f64 {
        exp(self.x)
    }

    pub fn running_max(&self) -> f64 {
        exp(self.m)
    }
}

/// Correlated increments over `n` steps: `dWv` from the variance stream,
/// `dWs = rho dWv + sqrt(1 - rho^2) dWperp`. Returns `(dWs, dWv)`.
pub fn correlated_increments(streams: &mut PathStreams, n: usize, dt: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let sd = sqrt(dt);
    let rho_bar = sqrt(1.0 - rho * rho);
    let mut dws = Vec::with_capacity(n);
    let mut dwv = Vec::with_capacity(n);
    for _ in 0..n {
        let v = sd * standard_normal(&mut streams.dwv);
        let p = sd * standard_normal(&mut streams.dwperp);
        dwv.push(v);
        dws.push(rho * v + rho_bar * p);
    }
    (dws, dwv)
}

/// One log-Euler step. The returned state keeps `v_bar`; the caller
/// advances the variance leg.
pub fn log_euler_step(state: PathState, model: &SpdvModel, t_n: f64, dt: f64, dws: f64) -> Result<PathState> {
    ensure_finite(state.x, "x")?;
    ensure_finite(state.m, "m")?;
    ensure_finite(state.v_bar, "v_bar")?;
    ensure_finite(dws, "dWs")?;
    if dt <= 0.0 {
        return Err(invalid("dt", "must be positive"));
    }
    let sigma = model.leverage.eval_log(t_n, state.x, state.m);
    let x = next_log_spot(state.x, model.drift.integral(t_n, t_n + dt), sigma, state.v_bar, dt, dws);
    Ok(PathState { x, m: state.m.max(x), v_bar: state.v_bar })
}

#[inline]
fn next_log_spot(x: f64, drift_integral: f64, sigma: f64, v_bar: f64, dt: f64, dws: f64) -> f64 {
    x + drift_integral - 0.5 * sigma * sigma * v_bar * dt + sigma * sqrt(v_bar) * dws
}

/// Bridge maximum of one step given its endpoints, folded into `m`.
pub fn bridge_max_update(x_n: f64, x_next: f64, sigma_n: f64, v_bar_n: f64, dt: f64, u: f64, m: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(invalid("u", "must lie in (0, 1]"));
    }
    let var = sigma_n * sigma_n * v_bar_n * dt;
    if !(var >= 0.0) {
        return Err(invalid("sigma^2 v_bar dt", "must be non-negative"));
    }
    Ok(bridge_max(x_n, x_next, var, u, m))
}

#[inline]
fn bridge_max(x_n: f64, x_next: f64, var: f64, u: f64, m: f64) -> f64 {
    // 0.5 (x_next + x_n + sqrt(d^2 + c))
    let d = (x_next - x_n).abs();
    let c = -2.0 * var * ln(u);
    let hi = x_n.max(x_next);
    let hat = if c > 0.0 { hi + 0.5 * c / (sqrt(d * d + c) + d) } else { hi };
    m.max(hat)
}

/// Terminal values of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalState {
    pub log_spot: f64,
    pub log_max: f64,
    pub v_bar: f64,
}

impl TerminalState {
    pub fn spot(&self) -> f64 {
        exp(self.log_spot)
    }

    pub fn running_max(&self) -> f64 {
        exp(self.log_max)
    }
}

/// One node of a stored path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathNode {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub m: f64,
    pub v_bar: f64,
}

/// Stepping rule for one resolution.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg<'a> {
    model: &'a SpdvModel,
    cir: CirLeg,
    dt: f64,
    bridge: bool,
    zero_drift: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LegState {
    pub x: f64,
    pub m: f64,
    pub var: f64,
}

impl<'a> Leg<'a> {
    pub(crate) fn new(model: &'a SpdvModel, scheme: VarianceScheme, max_mode: MaxMode, dt: f64) -> Self {
        Self {
            model,
            cir: CirLeg::new(scheme, &model.cir, dt),
            dt,
            bridge: max_mode == MaxMode::BrownianBridge,
            zero_drift: model.drift.is_zero(),
        }
    }

    pub(crate) fn start(&self) -> LegState {
        let x = ln(self.model.s0);
        LegState { x, m: x, var: self.cir.initial(self.model.cir.v0) }
    }

    #[inline]
    pub(crate) fn v_bar(&self, s: &LegState) -> f64 {
        self.cir.bar(s.var)
    }

    /// Advances from node `n`. `u` is only read in bridge mode.
    #[inline]
    pub(crate) fn advance(&self, s: &mut LegState, n: usize, dws: f64, dwv: f64, u: f64) {
        let t_n = self.dt * n as f64;
        let v_bar = self.cir.bar(s.var);
        let sigma = self.model.leverage.eval_log(t_n, s.x, s.m);
        let drift = if self.zero_drift { 0.0 } else { self.model.drift.integral(t_n, t_n + self.dt) };
        let x_next = next_log_spot(s.x, drift, sigma, v_bar, self.dt, dws);
        s.m = if self.bridge {
            bridge_max(s.x, x_next, sigma * sigma * v_bar * self.dt, u, s.m)
        } else {
            s.m.max(x_next)
        };
        s.x = x_next;
        s.var = self.cir.advance(s.var, dwv);
    }

    /// Advances two fine steps' worth from coarse node `n` given the fine
    /// increments. In bridge mode the coarse path is pinned at the step
    /// midpoint by the first fine increment and the maximum is taken over two
    /// half-step bridges driven by the fine uniforms.
    #[inline]
    pub(crate) fn advance_coarse(&self, s: &mut LegState, n: usize, dws: [f64; 2], dwv: f64, u: [f64; 2]) {
        if !self.bridge {
            return self.advance(s, n, dws[0] + dws[1], dwv, 1.0);
        }
        let t_n = self.dt * n as f64;
        let half = 0.5 * self.dt;
        let v_bar = self.cir.bar(s.var);
        let sigma = self.model.leverage.eval_log(t_n, s.x, s.m);
        let (d1, d2) = if self.zero_drift {
            (0.0, 0.0)
        } else {
            (self.model.drift.integral(t_n, t_n + half), self.model.drift.integral(t_n + half, t_n + self.dt))
        };
        let x_mid = next_log_spot(s.x, d1, sigma, v_bar, half, dws[0]);
        let x_next = next_log_spot(s.x, d1 + d2, sigma, v_bar, self.dt, dws[0] + dws[1]);
        let var = sigma * sigma * v_bar * half;
        s.m = bridge_max(x_mid, x_next, var, u[1], bridge_max(s.x, x_mid, var, u[0], s.m));
        s.x = x_next;
        s.var = self.cir.advance(s.var, dwv);
    }

    fn terminal(&self, s: &LegState) -> TerminalState {
        TerminalState { log_spot: s.x, log_max: s.m, v_bar: self.cir.bar(s.var) }
    }
}

#[inline]
fn check(s: &LegState, path: u64, step: usize) -> Result<()> {
    if s.x.is_finite() && s.m.is_finite() && s.var.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalFailure { path, step })
    }
}

/// Simulates path `path` of the family keyed by `key`; optionally records
/// every node.
pub fn simulate_path(
    model: &SpdvModel,
    grid: &SimGrid,
    key: &StreamKey,
    path: u64,
    mut record: Option<&mut Vec<PathNode>>,
) -> Result<TerminalState> {
    let leg = Leg::new(model, grid.variance_scheme, grid.max_mode, grid.dt());
    let mut streams = key.path(path);
    let sd = sqrt(grid.dt());
    let rho = model.rho;
    let rho_bar = sqrt(1.0 - rho * rho);
    let mut s = leg.start();
    for n in 0..grid.steps {
        if let Some(nodes) = record.as_deref_mut() {
            nodes.push(PathNode { step: n, t: grid.dt() * n as f64, x: s.x, m: s.m, v_bar: leg.v_bar(&s) });
        }
        let dwv = sd * standard_normal(&mut streams.dwv);
        let dws = rho * dwv + rho_bar * (sd * standard_normal(&mut streams.dwperp));
        let u = open_closed_uniform(&mut streams.bridge);
        leg.advance(&mut s, n, dws, dwv, u);
        check(&s, path, n + 1)?;
    }
    if let Some(nodes) = record {
        nodes.push(PathNode { step: grid.steps, t: grid.horizon, x: s.x, m: s.m, v_bar: leg.v_bar(&s) });
    }
    Ok(leg.terminal(&s))
}

/// Terminal states (and optionally full paths) for every path of `grid`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimOutput {
    pub terminals: Vec<TerminalState>,
    /// Per-path node records when requested.
    pub paths: Option<Vec<Vec<PathNode>>>,
}

pub fn simulate_paths<E: PathExecutor>(
    model: &SpdvModel,
    grid: &SimGrid,
    store_paths: bool,
    exec: &E,
) -> Result<SimOutput> {
    model.validate()?;
    grid.validate(model)?;
    let key = StreamKey::new(grid.seed, 0);
    let chunks = run_chunked(exec, grid.paths, |range: Range<u64>| {
        let mut terminals = Vec::with_capacity((range.end - range.start) as usize);
        let mut paths = Vec::new();
        for p in range {
            if store_paths {
                let mut nodes = Vec::with_capacity(grid.steps + 1);
                terminals.push(simulate_path(model, grid, &key, p, Some(&mut nodes))?);
                paths.push(nodes);
            } else {
                terminals.push(simulate_path(model, grid, &key, p, None)?);
            }
        }
        Ok((terminals, paths))
    })?;
    let mut out = SimOutput { terminals: Vec::with_capacity(grid.paths as usize), paths: None };
    let mut all_paths = Vec::new();
    for (t, p) in chunks {
        out.terminals.extend(t);
        all_paths.extend(p);
    }
    if store_paths {
        out.paths = Some(all_paths);
    }
    Ok(out)
}

/// Terminal states of the `N`-step and `2N`-step approximations driven by
/// the same Brownian path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledTerminal {
    pub coarse: TerminalState,
    pub fine: TerminalState,
}

/// One coupled pair. `grid.steps` is the coarse step count `N`; the fine leg
/// uses `2N` steps and the coarse increments are sums of fine pairs. The
/// coarse bridge maximum reuses the fine midpoint increment and uniforms, so
/// each leg has the law of its own uncoupled simulation.
pub fn simulate_coupled_path(model: &SpdvModel, grid: &SimGrid, key: &StreamKey, path: u64) -> Result<CoupledTerminal> {
    let dt_fine = 0.5 * grid.dt();
    let coarse = Leg::new(model, grid.variance_scheme, grid.max_mode, grid.dt());
    let fine = Leg::new(model, grid.variance_scheme, grid.max_mode, dt_fine);
    let mut streams = key.path(path);
    let sd = sqrt(dt_fine);
    let rho = model.rho;
    let rho_bar = sqrt(1.0 - rho * rho);
    let mut sc = coarse.start();
    let mut sf = fine.start();
    for n in 0..grid.steps {
        let mut dws = [0.0; 2];
        let mut u = [1.0; 2];
        let mut dwv_sum = 0.0;
        for half in 0..2 {
            let dwv = sd * standard_normal(&mut streams.dwv);
            dws[half] = rho * dwv + rho_bar * (sd * standard_normal(&mut streams.dwperp));
            u[half] = open_closed_uniform(&mut streams.bridge);
            fine.advance(&mut sf, 2 * n + half, dws[half], dwv, u[half]);
            check(&sf, path, 2 * n + half + 1)?;
            dwv_sum += dwv;
        }
        coarse.advance_coarse(&mut sc, n, dws, dwv_sum, u);
        check(&sc, path, n + 1)?;
    }
    Ok(CoupledTerminal { coarse: coarse.terminal(&sc), fine: fine.terminal(&sf) })
}

/// Coupled pairs for every path, keyed by `(grid.seed, tag)`.
pub fn simulate_coupled_pairs<E: PathExecutor>(
    model: &SpdvModel,
    grid: &SimGrid,
    tag: u64,
    exec: &E,
) -> Result<Vec<CoupledTerminal>> {
    model.validate()?;
    grid.validate(model)?;
    let key = StreamKey::new(grid.seed, tag);
    let chunks = run_chunked(exec, grid.paths, |range: Range<u64>| {
        range.map(|p| simulate_coupled_path(model, grid, &key, p)).collect::<Result<Vec<_>>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

/// [`simulate_coupled_pairs`] with the default tag.
pub fn simulate_coupled_pair<E: PathExecutor>(model: &SpdvModel, grid: &SimGrid, exec: &E) -> Result<Vec<CoupledTerminal>> {
    simulate_coupled_pairs(model, grid, 0, exec)
}
