//! Leverage `sigma(t, S, M)` and drift `mu(t, S, M)` functions together with
//! the regularity constants the admissibility horizons are built from.
//!
//! Evaluation happens in log coordinates (`lx = log S`, `lm = log M`) since
//! the simulation carries log-spot and log-running-maximum.

mod drift;
mod estimate;
mod svi;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub use drift::{DriftConstants, DriftFunction};
pub use estimate::{estimate_constants, lift_spot_lipschitz_constants, GridSpec, LiftedConstants, SpotLipschitzConstants};
pub use svi::{svi_leverage, SviLeverage, SviSlice};

use crate::error::{ensure_finite, invalid, Result};
use crate::math::{atan, exp, ln};

/// Bound and log-space Lipschitz/Hölder constants of a leverage function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LeverageConstants {
    pub sigma_max: f64,
    /// 1/2-Hölder constant in time.
    pub c_sigma_t: f64,
    /// Lipschitz constant in log-spot.
    pub c_sigma_x: f64,
    /// Lipschitz constant in log-running-maximum.
    pub c_sigma_m: f64,
    /// Jump sizes at the interior time nodes `j T / N_T`, `j = 1..=N_T`.
    pub jump_constants: Vec<f64>,
}

impl LeverageConstants {
    pub fn smooth(sigma_max: f64, c_sigma_t: f64, c_sigma_x: f64, c_sigma_m: f64) -> Self {
        Self { sigma_max, c_sigma_t, c_sigma_x, c_sigma_m, jump_constants: Vec::new() }
    }

    /// Number of declared time jumps `N_T` (0 when there are none).
    pub fn time_jumps(&self) -> usize {
        self.jump_constants.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            (self.sigma_max, "sigma_max"),
            (self.c_sigma_t, "c_sigma_t"),
            (self.c_sigma_x, "c_sigma_x"),
            (self.c_sigma_m, "c_sigma_m"),
        ];
        for (v, name) in fields {
            ensure_finite(v, name)?;
            if v < 0.0 {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        if self.jump_constants.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(invalid("jump_constants", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Right-hand side of the regularity inequality for two points in log
    /// coordinates on `[0, horizon]`.
    pub fn modulus(&self, horizon: f64, a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
        let (t1, x1, m1) = a;
        let (t2, x2, m2) = b;
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let n_t = self.jump_constants.len();
        let jumps: f64 = self
            .jump_constants
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let node = (*j as f64 + 1.0) * horizon / n_t as f64;
                lo < node && node <= hi
            })
            .map(|(_, c)| *c)
            .sum();
        self.c_sigma_t * crate::math::sqrt(hi - lo)
            + jumps
            + self.c_sigma_x * (x1 - x2).abs()
            + self.c_sigma_m * (m1 - m2).abs()
    }
}

/// A user-supplied leverage surface in log coordinates.
pub trait LeverageSurface: Send + Sync + fmt::Debug {
    fn eval_log(&self, t: f64, log_spot: f64, log_max: f64) -> f64;
}

/// Parameterization behind a [`LeverageFunction`].
#[derive(Debug, Clone)]
pub enum LeverageShape {
    Constant(f64),
    Svi(SviLeverage),
    /// `1 + atan(log M - log S0)`.
    ArctanMax,
    Custom(Arc<dyn LeverageSurface>),
}

impl LeverageShape {
    pub fn tag(&self) -> &'static str {
        match self {
            LeverageShape::Constant(_) => "constant",
            LeverageShape::Svi(_) => "svi",
            LeverageShape::ArctanMax => "arctan_max",
            LeverageShape::Custom(_) => "custom",
        }
    }
}

/// Leverage function with its declared regularity constants.
#[derive(Debug, Clone)]
pub struct LeverageFunction {
    shape: LeverageShape,
    constants: LeverageConstants,
    log_s0: f64,
}

/// `sigma == value` everywhere. With `value = 1` the model is Heston.
pub fn constant_leverage(value: f64) -> Result<LeverageFunction> {
    ensure_finite(value, "value")?;
    if value < 0.0 {
        return Err(invalid("value", "must be non-negative"));
    }
    Ok(LeverageFunction {
        shape: LeverageShape::Constant(value),
        constants: LeverageConstants::smooth(value, 0.0, 0.0, 0.0),
        log_s0: 0.0,
    })
}

/// `sigma(t, x, y) = 1 + atan(log y - log s0)`.
pub fn arctan_max_leverage(s0: f64) -> Result<LeverageFunction> {
    ensure_finite(s0, "s0")?;
    if s0 <= 0.0 {
        return Err(invalid("s0", "must be positive"));
    }
    Ok(LeverageFunction {
        shape: LeverageShape::ArctanMax,
        constants: LeverageConstants::smooth(1.0 + core::f64::consts::FRAC_PI_2, 0.0, 0.0, 1.0),
        log_s0: ln(s0),
    })
}

impl LeverageFunction {
    /// Wraps a custom surface; the caller vouches for `constants`.
    pub fn custom(surface: Arc<dyn LeverageSurface>, s0: f64, constants: LeverageConstants) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(invalid("s0", "must be positive"));
        }
        constants.validate()?;
        Ok(Self { shape: LeverageShape::Custom(surface), constants, log_s0: ln(s0) })
    }

    pub(crate) fn from_parts(shape: LeverageShape, constants: LeverageConstants, log_s0: f64) -> Self {
        Self { shape, constants, log_s0 }
    }

    pub fn shape(&self) -> &LeverageShape {
        &self.shape
    }

    /// Declared (analytic) constants.
    pub fn constants(&self) -> &LeverageConstants {
        &self.constants
    }

    pub fn with_constants(mut self, constants: LeverageConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    /// Flat-extrapolation bounds `(s_min, s_max)` when the shape has them.
    pub fn clamp_bounds(&self) -> Option<(f64, f64)> {
        match &self.shape {
            LeverageShape::Svi(s) => Some((s.s_min, s.s_max)),
            _ => None,
        }
    }

    pub fn s0(&self) -> f64 {
        exp(self.log_s0)
    }

    /// Whether the function ignores the running maximum.
    pub fn is_max_independent(&self) -> bool {
        match &self.shape {
            LeverageShape::Constant(_) => true,
            LeverageShape::ArctanMax => false,
            LeverageShape::Svi(s) => s.slices[1].b == 0.0,
            LeverageShape::Custom(_) => self.constants.c_sigma_m == 0.0,
        }
    }

    /// Evaluation in log coordinates. Points with `lm < max(lx, log s0)` are
    /// moved onto the domain by raising `lm`.
    #[inline]
    pub fn eval_log(&self, t: f64, lx: f64, lm: f64) -> f64 {
        let lm = lm.max(lx).max(self.log_s0);
        match &self.shape {
            LeverageShape::Constant(v) => *v,
            LeverageShape::Svi(s) => s.eval_log(t, lx, lm),
            LeverageShape::ArctanMax => 1.0 + atan(lm - self.log_s0),
            LeverageShape::Custom(c) => c.eval_log(t, lx, lm),
        }
    }

    /// Evaluation at spot `x > 0` and running maximum `y > 0`.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0) {
            return Err(invalid("x, y", "must be positive"));
        }
        Ok(self.eval_log(t, ln(x), ln(y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_leverage_has_zero_constants() {
        let f = constant_leverage(1.0).unwrap();
        assert_eq!(f.eval(0.3, 0.7, 1.2).unwrap(), 1.0);
        assert_eq!(f.constants(), &LeverageConstants::smooth(1.0, 0.0, 0.0, 0.0));
        assert!(constant_leverage(-0.1).is_err());
        assert!(f.is_max_independent());
    }

    #[test]
    fn arctan_leverage_values() {
        let f = arctan_max_leverage(1.0).unwrap();
        assert_eq!(f.eval(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(f.eval(0.0, 0.5, 1.0).unwrap(), 1.0);
        let c = f.constants();
        assert!((c.sigma_max - 2.571).abs() < 5e-4);
        assert_eq!((c.c_sigma_x, c.c_sigma_m, c.c_sigma_t), (0.0, 1.0, 0.0));
        assert!(f.eval(0.0, 1.0, 0.0).is_err());
        assert!(f.eval(0.0, 1.0, -1.0).is_err());
        assert!(arctan_max_leverage(0.0).is_err());
        assert!(!f.is_max_independent());
    }

    #[test]
    fn domain_guard_lifts_running_max() {
        let f = arctan_max_leverage(2.0).unwrap();
        // y below S0 is read as S0; y below x is read as x.
        assert_eq!(f.eval(0.0, 1.0, 1.5).unwrap(), f.eval(0.0, 1.0, 2.0).unwrap());
        assert_eq!(f.eval(0.0, 3.0, 2.5).unwrap(), f.eval(0.0, 3.0, 3.0).unwrap());
    }

    #[test]
    fn modulus_counts_jumps_between_times() {
        let c = LeverageConstants {
            sigma_max: 1.0,
            c_sigma_t: 0.0,
            c_sigma_x: 0.0,
            c_sigma_m: 0.0,
            jump_constants: alloc::vec![0.1, 0.2, 0.4, 0.8],
        };
        assert_eq!(c.time_jumps(), 4);
        // nodes at 0.25, 0.5, 0.75, 1.0
        let m = c.modulus(1.0, (0.1, 0.0, 0.0), (0.5, 0.0, 0.0));
        assert!((m - 0.3).abs() < 1e-15);
        let m = c.modulus(1.0, (1.0, 0.0, 0.0), (0.5, 0.0, 0.0));
        assert!((m - 1.2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn arctan_monotone_in_max(t in 0.0f64..1.0, x in 0.2f64..3.0, y1 in 0.2f64..5.0, dy in 0.0f64..2.0) {
            let f = arctan_max_leverage(1.0).unwrap();
            let a = f.eval(t, x, y1).unwrap();
            let b = f.eval(t, x, y1 + dy).unwrap();
            prop_assert!(b >= a);
            prop_assert!(a >= 0.0 && a <= f.constants().sigma_max);
        }

        #[test]
        fn arctan_respects_declared_regularity(
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
            lx1 in -1.0f64..1.0, lx2 in -1.0f64..1.0,
            e1 in 0.0f64..2.0, e2 in 0.0f64..2.0,
        ) {
            let f = arctan_max_leverage(1.0).unwrap();
            let lm1 = lx1.max(0.0) + e1;
            let lm2 = lx2.max(0.0) + e2;
            let diff = (f.eval_log(t1, lx1, lm1) - f.eval_log(t2, lx2, lm2)).abs();
            let bound = f.constants().modulus(1.0, (t1, lx1, lm1), (t2, lx2, lm2));
            prop_assert!(diff <= bound + 1e-9);
        }
    }
}
