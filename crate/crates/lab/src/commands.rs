//! Subcommand bodies. Every gate is checked before the first path is drawn.

use std::path::PathBuf;

use spdv_core::convergence::{strong_ladders, weak_ladder};
use spdv_core::critical::{t_star, CriticalInputs, CriticalTimeReport, SchemeGate, SearchOptions};
use spdv_core::pricing::mc_price;
use spdv_core::sim::simulate_paths;
use spdv_core::stats::Moments;
use spdv_core::{CirParams, PathExecutor, SimGrid, SpdvModel};

use crate::config::ExperimentConfig;
use crate::error::LabError;
use crate::report::{ladder_csv, num, write_atomic, Provenance, Table};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Proceed past admissibility warnings in strong and weak runs.
    pub force: bool,
    pub stamp: Option<String>,
    pub dump_paths: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

impl Outcome {
    fn write(&mut self, cfg: &ExperimentConfig, opts: &RunOptions, name: String, body: &str) -> Result<(), LabError> {
        let provenance = Provenance {
            config_digest: cfg.digest(),
            seed: cfg.grid_config()?.seed,
            stamp: opts.stamp.clone(),
        };
        self.files.push(write_atomic(&cfg.output.dir, &name, &provenance, body)?);
        Ok(())
    }
}

fn file_name(experiment: &str, grid: &SimGrid, tag: &str) -> String {
    format!("{experiment}_{}_{tag}_{}.csv", grid.variance_scheme.name(), grid.seed)
}

fn prepare(cfg: &ExperimentConfig) -> Result<(SpdvModel, SimGrid), LabError> {
    let model = cfg.build_model()?;
    let grid = cfg.build_grid()?;
    grid.validate(&model).map_err(LabError::invalid)?;
    Ok((model, grid))
}

fn with_k(model: &SpdvModel, k: f64) -> Result<SpdvModel, LabError> {
    let c = model.cir;
    let cir = CirParams::new(c.v0, k, c.theta, c.xi).map_err(LabError::invalid)?;
    Ok(model.clone().with_cir(cir))
}

/// Critical-time report of `model` on `grid` for moment order `p`.
pub fn admissibility(
    model: &SpdvModel,
    grid: &SimGrid,
    p: f64,
    opts: SearchOptions,
) -> spdv_core::Result<CriticalTimeReport> {
    let inputs = CriticalInputs::new(&model.cir, model.leverage.constants());
    t_star(p, &inputs, SchemeGate::new(grid.variance_scheme), grid.horizon, opts)
}

/// `None` when the horizon lies strictly below `T*(p)`.
fn admissibility_warning(model: &SpdvModel, grid: &SimGrid, p: f64, opts: SearchOptions) -> Option<String> {
    match admissibility(model, grid, p, opts) {
        Ok(r) if r.admissible => None,
        Ok(r) => Some(format!(
            "k = {}: horizon T = {} is not below T*({p}) = {}",
            model.cir.k, grid.horizon, r.t_star
        )),
        Err(e) => Some(format!("k = {}, p = {p}: {e}", model.cir.k)),
    }
}

fn search_options(cfg: &ExperimentConfig) -> SearchOptions {
    SearchOptions { grid_points: cfg.experiment.critical_grid_points }
}

/// Turns admissibility warnings into gate failures unless `force` is set.
fn gate_warnings(warnings: Vec<String>, force: bool, out: &mut Outcome) -> Result<(), LabError> {
    if warnings.is_empty() {
        return Ok(());
    }
    if !force {
        return Err(LabError::Gate(format!("{} (rerun with --force to proceed)", warnings.join("; "))));
    }
    out.warnings.extend(warnings);
    Ok(())
}

/// Terminal states, plus every path node when path dumps are on.
pub fn simulate<E: PathExecutor>(cfg: &ExperimentConfig, opts: &RunOptions, exec: &E) -> Result<Outcome, LabError> {
    let (model, grid) = prepare(cfg)?;
    let mut out = Outcome::default();
    out.warnings.extend(admissibility_warning(&model, &grid, 1.0, search_options(cfg)));
    let dump = opts.dump_paths || cfg.output.dump_paths;
    let sim = simulate_paths(&model, &grid, dump, exec)?;

    let mut table = Table::new(&["path", "S_T", "M_T", "v_bar_T"]);
    let mut spot = Moments::default();
    for (i, s) in sim.terminals.iter().enumerate() {
        spot.push(s.spot());
        table.push(vec![i.to_string(), num(s.spot()), num(s.running_max()), num(s.v_bar)]);
    }
    out.write(cfg, opts, file_name("simulate", &grid, "terminals"), &table.render())?;
    if let Some(paths) = &sim.paths {
        let mut nodes = Table::new(&["path", "step", "t", "x", "m", "v_bar"]);
        for (i, path) in paths.iter().enumerate() {
            for n in path {
                nodes.push(vec![i.to_string(), n.step.to_string(), num(n.t), num(n.x), num(n.m), num(n.v_bar)]);
            }
        }
        out.write(cfg, opts, file_name("simulate", &grid, "paths"), &nodes.render())?;
    }
    out.summary.push(format!(
        "simulate: {} paths, {} steps, mean S_T = {} (se {})",
        grid.paths,
        grid.steps,
        spot.mean,
        spot.std_error()
    ));
    Ok(out)
}

pub fn price<E: PathExecutor>(cfg: &ExperimentConfig, opts: &RunOptions, exec: &E) -> Result<Outcome, LabError> {
    let (model, grid) = prepare(cfg)?;
    let payoff = cfg.payoff()?;
    let mut out = Outcome::default();
    out.warnings.extend(admissibility_warning(&model, &grid, 1.0, search_options(cfg)));
    let mut est = mc_price(&model, &grid, &payoff, exec)?;
    est.config_hash = Some(cfg.digest());

    let mut table = Table::new(&["payoff", "param", "value", "stderr", "paths"]);
    table.push(vec![
        payoff.kind.name().into(),
        num(payoff.level),
        num(est.value),
        num(est.std_error),
        est.paths.to_string(),
    ]);
    out.write(cfg, opts, file_name("price", &grid, payoff.kind.name()), &table.render())?;
    out.summary.push(format!(
        "price {}({}): {} (se {}, {} paths)",
        payoff.kind.name(),
        payoff.level,
        est.value,
        est.std_error,
        est.paths
    ));
    Ok(out)
}

/// `T_x`, `T_S`, `T*` table per moment order, one file per mean-reversion speed.
pub fn critical_time(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, LabError> {
    let model = cfg.build_model()?;
    let grid = cfg.build_grid()?;
    let orders = cfg.orders()?;
    let ks = cfg.k_values()?;
    let sweep = !cfg.experiment.k_sweep.is_empty();
    let search = search_options(cfg);
    let mut out = Outcome::default();
    for k in ks {
        let model = with_k(&model, k)?;
        let mut table = Table::new(&["p", "T_x", "T_S", "T_star", "q_argmax", "admissible(T)"]);
        for &p in orders {
            let r = admissibility(&model, &grid, p, search)?;
            table.push(vec![
                num(p),
                r.t_x.to_string(),
                r.t_s.to_string(),
                r.t_star.to_string(),
                num(r.q_argmax),
                r.admissible.to_string(),
            ]);
            out.summary.push(format!("critical k = {k}, p = {p}: T* = {} (admissible at T = {}: {})", r.t_star, grid.horizon, r.admissible));
        }
        let experiment = if sweep { format!("critical-k{}", num(k)) } else { "critical".into() };
        out.write(cfg, opts, file_name(&experiment, &grid, "table"), &table.render())?;
    }
    Ok(out)
}

/// L^p strong ladders for every order, one file per (k, p).
pub fn strong_order<E: PathExecutor>(cfg: &ExperimentConfig, opts: &RunOptions, exec: &E) -> Result<Outcome, LabError> {
    let (model, grid) = prepare(cfg)?;
    let spec = cfg.ladder()?;
    let orders = cfg.orders()?;
    let sweep = !cfg.experiment.k_sweep.is_empty();
    let search = search_options(cfg);
    let mut out = Outcome::default();

    let mut models = Vec::new();
    let mut warnings = Vec::new();
    for k in cfg.k_values()? {
        let model = with_k(&model, k)?;
        for n in spec.steps() {
            grid.with_steps(n).validate(&model).map_err(LabError::invalid)?;
        }
        warnings.extend(orders.iter().filter_map(|&p| admissibility_warning(&model, &grid, p, search)));
        models.push((k, model));
    }
    gate_warnings(warnings, opts.force, &mut out)?;

    for (k, model) in models {
        let ladders = strong_ladders(&model, &grid, spec, orders, cfg.strong_method(), exec)?;
        let experiment = if sweep { format!("strong-k{}", num(k)) } else { "strong".into() };
        for (ladder, &p) in ladders.iter().zip(orders) {
            let fit = ladder.fit().ok();
            match &fit {
                Some(f) => out.summary.push(format!(
                    "strong k = {k}, p = {p}: slope {:.4} +- {:.4} over {} levels",
                    f.slope,
                    f.slope_se,
                    f.used.len()
                )),
                None => out.warnings.push(format!("strong k = {k}, p = {p}: fewer than 3 resolved levels, no slope")),
            }
            out.write(cfg, opts, file_name(&experiment, &grid, &format!("p{}", num(p))), &ladder_csv(ladder, fit.as_ref()))?;
        }
    }
    Ok(out)
}

/// Weak ladders of the configured payoff for each max mode.
pub fn weak_order<E: PathExecutor>(cfg: &ExperimentConfig, opts: &RunOptions, exec: &E) -> Result<Outcome, LabError> {
    let (model, grid) = prepare(cfg)?;
    let spec = cfg.ladder()?;
    let payoff = cfg.payoff()?;
    let mut out = Outcome::default();
    for n in spec.steps() {
        grid.with_steps(n).validate(&model).map_err(LabError::invalid)?;
    }
    let warnings = admissibility_warning(&model, &grid, 1.0, search_options(cfg)).into_iter().collect();
    gate_warnings(warnings, opts.force, &mut out)?;

    for mode in cfg.max_modes()? {
        let g = grid.with_max_mode(mode);
        let ladder = weak_ladder(&model, &g, spec, &payoff, cfg.sampling(), exec)?;
        let fit = ladder.fit().ok();
        let tag = format!("{}-{}", payoff.kind.name(), mode.name());
        match &fit {
            Some(f) => out.summary.push(format!(
                "weak {tag}: slope {:.4} +- {:.4} over {} levels",
                f.slope,
                f.slope_se,
                f.used.len()
            )),
            None => out.warnings.push(format!("weak {tag}: fewer than 3 resolved levels, no slope")),
        }
        out.write(cfg, opts, file_name("weak", &g, &tag), &ladder_csv(&ladder, fit.as_ref()))?;
    }
    Ok(out)
}
