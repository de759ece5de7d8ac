//! Grid extraction of the smallest admissible regularity constants, and the
//! lift from spot-Lipschitz to log-spot-Lipschitz constants.

use alloc::vec::Vec;

use super::{DriftConstants, LeverageConstants, LeverageFunction};
use crate::error::{invalid, Result};
use crate::math::{ln, sqrt};

/// Tensor grid over `[0, T] x [log s_lo, log s_hi] x [log s0 v log s_lo, log s_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub s0: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub time_points: usize,
    pub spot_points: usize,
    pub max_points: usize,
}

impl GridSpec {
    pub const DEFAULT_TIME_POINTS: usize = 64;
    pub const DEFAULT_SPACE_POINTS: usize = 256;

    pub fn new(horizon: f64, s0: f64, s_lo: f64, s_hi: f64) -> Self {
        Self {
            horizon,
            s0,
            s_lo,
            s_hi,
            time_points: Self::DEFAULT_TIME_POINTS,
            spot_points: Self::DEFAULT_SPACE_POINTS,
            max_points: Self::DEFAULT_SPACE_POINTS,
        }
    }

    /// Default grid for `f`: its clamp bounds when it has them, otherwise
    /// `s0 * exp(-+ 3 sqrt(v0 T))`.
    pub fn for_function(f: &LeverageFunction, s0: f64, v0: f64, horizon: f64) -> Self {
        match f.clamp_bounds() {
            Some((lo, hi)) => Self::new(horizon, s0, lo, hi),
            None => {
                let w = 3.0 * sqrt(v0 * horizon);
                Self::new(horizon, s0, s0 * crate::math::exp(-w), s0 * crate::math::exp(w))
            }
        }
    }

    pub fn with_resolution(mut self, time_points: usize, space_points: usize) -> Self {
        self.time_points = time_points;
        self.spot_points = space_points;
        self.max_points = space_points;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.time_points < 2 || self.spot_points < 2 || self.max_points < 2 {
            return Err(invalid("grid_spec", "need at least 2 points per axis"));
        }
        if !(self.horizon > 0.0 && self.s0 > 0.0 && self.s_lo > 0.0 && self.s_lo < self.s_hi) {
            return Err(invalid("grid_spec", "need horizon > 0 and 0 < s_lo < s_hi"));
        }
        Ok(())
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return alloc::vec![lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect()
}

/// Grid suprema of `sigma` and of its log-space difference quotients.
///
/// Lipschitz constants use adjacent-node quotients along each axis (any
/// longer chord is an average of those). The time constant uses all pairs of
/// time nodes on a spatial subgrid of at most 32 x 32 points. Jump constants
/// are copied from the declared ones.
pub fn estimate_constants(f: &LeverageFunction, grid: &GridSpec) -> Result<LeverageConstants> {
    grid.validate()?;
    let log_s0 = ln(grid.s0);
    let ts = axis(0.0, grid.horizon, grid.time_points);
    let xs = axis(ln(grid.s_lo), ln(grid.s_hi), grid.spot_points);
    let ms = axis(log_s0.max(ln(grid.s_lo)), ln(grid.s_hi).max(log_s0), grid.max_points);

    let nx = xs.len();
    let nm = ms.len();
    let mut slab = alloc::vec![f64::NAN; nx * nm];
    let mut sigma_max = 0.0f64;
    let mut c_x = 0.0f64;
    let mut c_m = 0.0f64;

    let stride_x = nx.div_ceil(32).max(1);
    let stride_m = nm.div_ceil(32).max(1);
    let mut time_samples: Vec<Vec<f64>> = Vec::with_capacity(ts.len());

    for &t in &ts {
        // slab[j * nx + i] = sigma(t, xs[i], ms[j]) when xs[i] <= ms[j].
        for (j, &m) in ms.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                let v = if x <= m { f.eval_log(t, x, m) } else { f64::NAN };
                slab[j * nx + i] = v;
                if v.abs() > sigma_max {
                    sigma_max = v.abs();
                }
            }
        }
        for j in 0..nm {
            let row = &slab[j * nx..(j + 1) * nx];
            for i in 1..nx {
                let (a, b) = (row[i - 1], row[i]);
                if a.is_nan() || b.is_nan() {
                    continue;
                }
                c_x = c_x.max((b - a).abs() / (xs[i] - xs[i - 1]));
            }
        }
        for j in 1..nm {
            for i in 0..nx {
                let (a, b) = (slab[(j - 1) * nx + i], slab[j * nx + i]);
                if a.is_nan() || b.is_nan() {
                    continue;
                }
                c_m = c_m.max((b - a).abs() / (ms[j] - ms[j - 1]));
            }
        }
        let mut sub = Vec::new();
        for j in (0..nm).step_by(stride_m) {
            for i in (0..nx).step_by(stride_x) {
                sub.push(slab[j * nx + i]);
            }
        }
        time_samples.push(sub);
    }

    let mut c_t = 0.0f64;
    for a in 0..ts.len() {
        for b in a + 1..ts.len() {
            let scale = sqrt(ts[b] - ts[a]);
            for (va, vb) in time_samples[a].iter().zip(&time_samples[b]) {
                if va.is_nan() || vb.is_nan() {
                    continue;
                }
                c_t = c_t.max((vb - va).abs() / scale);
            }
        }
    }

    Ok(LeverageConstants {
        sigma_max,
        c_sigma_t: c_t,
        c_sigma_x: c_x,
        c_sigma_m: c_m,
        jump_constants: f.constants().jump_constants.clone(),
    })
}

/// Constants of a function that is Lipschitz in spot and running maximum
/// (not in their logarithms) and flat outside `[s_min, s_max]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpotLipschitzConstants {
    /// `|f(0, s_min, s_min)|`.
    pub base_value: f64,
    pub c_t: f64,
    /// Lipschitz constant in spot.
    pub c_s: f64,
    /// Lipschitz constant in running maximum.
    pub c_m: f64,
    pub jump_constants: Vec<f64>,
}

/// Log-space constants obtained by the lift.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedConstants {
    /// `|f(0, s_min, s_min)| + sum_j C_j + (C_S + C_M)(s_max - s_min)`.
    pub base_bound: f64,
    pub c_t: f64,
    pub c_x: f64,
    pub c_m: f64,
    pub jump_constants: Vec<f64>,
    pub horizon: f64,
}

impl LiftedConstants {
    /// Leverage bound adds `C_t sqrt(T)`.
    pub fn into_leverage(self) -> LeverageConstants {
        LeverageConstants {
            sigma_max: self.base_bound + self.c_t * sqrt(self.horizon),
            c_sigma_t: self.c_t,
            c_sigma_x: self.c_x,
            c_sigma_m: self.c_m,
            jump_constants: self.jump_constants,
        }
    }

    /// Drift bound adds the time-jump constant `C_t` once.
    pub fn into_drift(self) -> DriftConstants {
        DriftConstants { mu_max: self.base_bound + self.c_t, c_mu_t: self.c_t, c_mu_x: self.c_x, c_mu_m: self.c_m }
    }
}

/// `C_x = C_S s_max` and `C_m = C_M s_max`, with the matching bound.
pub fn lift_spot_lipschitz_constants(
    spot: &SpotLipschitzConstants,
    s_min: f64,
    s_max: f64,
    horizon: f64,
) -> Result<LiftedConstants> {
    if !(s_max > 0.0 && s_min >= 0.0 && s_min < s_max) {
        return Err(invalid("s_max", "need 0 <= s_min < s_max"));
    }
    let jumps: f64 = spot.jump_constants.iter().sum();
    Ok(LiftedConstants {
        base_bound: spot.base_value.abs() + jumps + (spot.c_s + spot.c_m) * (s_max - s_min),
        c_t: spot.c_t,
        c_x: spot.c_s * s_max,
        c_m: spot.c_m * s_max,
        jump_constants: spot.jump_constants.clone(),
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leverage::{arctan_max_leverage, constant_leverage, svi_leverage, LeverageShape, SviSlice};

    fn reference_svi() -> LeverageFunction {
        let s = SviSlice { a: 1.0, b: 2.0, c: 0.0, d: 0.0, e: 0.25 };
        let w = 3.0 * (0.025f64).sqrt();
        svi_leverage([s, s], 1.0, (-w).exp(), w.exp()).unwrap()
    }

    #[test]
    fn constant_function_estimates_to_zero_slopes() {
        let f = constant_leverage(0.7).unwrap();
        let c = estimate_constants(&f, &GridSpec::new(1.0, 1.0, 0.5, 2.0).with_resolution(8, 16)).unwrap();
        assert_eq!(c, LeverageConstants::smooth(0.7, 0.0, 0.0, 0.0));
    }

    #[test]
    fn svi_estimates_are_dominated_by_declared_constants() {
        let f = reference_svi();
        let grid = GridSpec::for_function(&f, 1.0, 0.025, 1.0).with_resolution(16, 64);
        let est = estimate_constants(&f, &grid).unwrap();
        let dec = f.constants();
        assert!(est.sigma_max <= dec.sigma_max + 1e-12);
        assert!(est.c_sigma_x <= dec.c_sigma_x + 1e-12);
        assert!(est.c_sigma_m <= dec.c_sigma_m + 1e-12);
        assert!(est.c_sigma_t <= dec.c_sigma_t + 1e-12);
        assert!(est.c_sigma_x > 0.29);
    }

    #[test]
    fn lifted_svi_constants_dominate_grid_estimates() {
        let f = reference_svi();
        let LeverageShape::Svi(svi) = f.shape() else { unreachable!() };
        let (lo, hi) = f.clamp_bounds().unwrap();
        let lifted = lift_spot_lipschitz_constants(&svi.spot_lipschitz_constants(), lo, hi, 1.0).unwrap();
        let est = estimate_constants(&f, &GridSpec::for_function(&f, 1.0, 0.025, 1.0)).unwrap();
        let lev = lifted.into_leverage();
        assert!(lev.sigma_max >= est.sigma_max);
        assert!(lev.c_sigma_x >= est.c_sigma_x);
        assert!(lev.c_sigma_m >= est.c_sigma_m);
        assert!(lev.c_sigma_t >= est.c_sigma_t);
    }

    #[test]
    fn lift_formula() {
        let spot = SpotLipschitzConstants { base_value: 0.5, c_t: 0.0, c_s: 1.0, c_m: 0.0, jump_constants: Vec::new() };
        let l = lift_spot_lipschitz_constants(&spot, 0.5, 2.0, 1.0).unwrap();
        assert_eq!(l.c_x, 2.0);
        assert_eq!(l.c_m, 0.0);
        assert_eq!(l.clone().into_leverage().sigma_max, 0.5 + 1.5);
        assert_eq!(l.into_drift().mu_max, 0.5 + 1.5);
        let zero = SpotLipschitzConstants::default();
        assert_eq!(lift_spot_lipschitz_constants(&zero, 0.5, 2.0, 1.0).unwrap().c_x, 0.0);
        assert!(lift_spot_lipschitz_constants(&zero, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn arctan_max_slope_approaches_one() {
        let f = arctan_max_leverage(1.0).unwrap();
        let mut last = 0.0;
        for n in [8, 32, 128, 512] {
            let grid = GridSpec::new(1.0, 1.0, 0.6, 1.6).with_resolution(2, n);
            let c = estimate_constants(&f, &grid).unwrap();
            assert!(c.c_sigma_m >= last - 1e-15);
            assert!(c.c_sigma_m <= 1.0);
            assert_eq!(c.c_sigma_x, 0.0);
            last = c.c_sigma_m;
        }
        assert!(1.0 - last < 1e-5, "{last}");
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        let f = constant_leverage(1.0).unwrap();
        assert!(estimate_constants(&f, &GridSpec::new(1.0, 1.0, 0.5, 2.0).with_resolution(1, 4)).is_err());
    }
}
