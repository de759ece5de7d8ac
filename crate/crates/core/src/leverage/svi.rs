use super::{LeverageConstants, LeverageFunction, LeverageShape, SpotLipschitzConstants};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::math::{exp, ln, scan_max, sqrt};

/// One SVI slice `w(z) = a + b (c (z - d) + sqrt((z - d)^2 + e^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SviSlice {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl SviSlice {
    #[inline]
    pub fn total_variance(&self, z: f64) -> f64 {
        let dz = z - self.d;
        self.a + self.b * (self.c * dz + sqrt(dz * dz + self.e * self.e))
    }

    #[inline]
    fn total_variance_slope(&self, z: f64) -> f64 {
        let dz = z - self.d;
        self.b * (self.c + dz / sqrt(dz * dz + self.e * self.e))
    }

    /// `sqrt(w(z))` and its derivative in `z`.
    fn root_and_slope(&self, z: f64) -> (f64, f64) {
        let g = sqrt(self.total_variance(z).max(0.0));
        let slope = if g > 0.0 { self.total_variance_slope(z) / (2.0 * g) } else { 0.0 };
        (g, slope)
    }

    /// Smallest total variance on `[lo, hi]`, with its location.
    ///
    /// `w` has at most one critical point, so endpoints plus that point suffice.
    fn min_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (self.total_variance(lo), lo);
        let w_hi = self.total_variance(hi);
        if w_hi < best.0 {
            best = (w_hi, hi);
        }
        if self.c.abs() < 1.0 {
            let z = self.d - self.e.abs() * self.c / sqrt(1.0 - self.c * self.c);
            if z > lo && z < hi {
                let w = self.total_variance(z);
                if w < best.0 {
                    best = (w, z);
                }
            }
        }
        best
    }

    fn max_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.total_variance(lo).max(self.total_variance(hi));
        if self.c.abs() < 1.0 {
            let z = self.d - self.e.abs() * self.c / sqrt(1.0 - self.c * self.c);
            if z > lo && z < hi {
                best = best.max(self.total_variance(z));
            }
        }
        best
    }
}

/// Average of two SVI slices, one in clamped log-spot and one in clamped
/// log-running-maximum, scaled by `1 / sqrt(t + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SviLeverage {
    /// Spot slice and running-maximum slice.
    pub slices: [SviSlice; 2],
    pub s0: f64,
    pub s_min: f64,
    pub s_max: f64,
    log_s0: f64,
    log_lo: f64,
    log_hi: f64,
}

const SCAN_POINTS: usize = 4097;

pub fn svi_leverage(slices: [SviSlice; 2], s0: f64, s_min: f64, s_max: f64) -> Result<LeverageFunction> {
    for s in &slices {
        for (v, name) in [(s.a, "a"), (s.b, "b"), (s.c, "c"), (s.d, "d"), (s.e, "e")] {
            ensure_finite(v, name)?;
        }
        if s.e == 0.0 {
            return Err(invalid("e", "must be non-zero"));
        }
    }
    for (v, name) in [(s0, "s0"), (s_min, "s_min"), (s_max, "s_max")] {
        ensure_finite(v, name)?;
    }
    if !(0.0 < s_min && s_min < s0 && s0 < s_max) {
        return Err(invalid("s_min, s0, s_max", "need 0 < s_min < s0 < s_max"));
    }
    let log_s0 = ln(s0);
    let svi = SviLeverage {
        slices,
        s0,
        s_min,
        s_max,
        log_s0,
        log_lo: ln(s_min),
        log_hi: ln(s_max),
    };
    let (zlo, zhi) = svi.z_range();
    for s in &slices {
        let (w, z) = s.min_on(zlo, zhi);
        if w < 0.0 {
            return Err(Error::NegativeSviTotalVariance { z });
        }
    }
    let constants = svi.analytic_constants();
    Ok(LeverageFunction::from_parts(LeverageShape::Svi(svi), constants, log_s0))
}

impl SviLeverage {
    /// Clamped log-moneyness range `[log(s_min/s0), log(s_max/s0)]`.
    pub fn z_range(&self) -> (f64, f64) {
        (self.log_lo - self.log_s0, self.log_hi - self.log_s0)
    }

    /// Range of the running-maximum argument; `M >= S0` so it starts at 0.
    fn z_range_max(&self) -> (f64, f64) {
        let (lo, hi) = self.z_range();
        (lo.max(0.0), hi)
    }

    #[inline]
    pub(crate) fn eval_log(&self, t: f64, lx: f64, lm: f64) -> f64 {
        let zx = lx.clamp(self.log_lo, self.log_hi) - self.log_s0;
        let zm = lm.clamp(self.log_lo, self.log_hi) - self.log_s0;
        let w1 = self.slices[0].total_variance(zx);
        let w2 = self.slices[1].total_variance(zm);
        0.5 * (sqrt(w1) + sqrt(w2)) / sqrt(t + 1.0)
    }

    fn max_slope(slice: &SviSlice, lo: f64, hi: f64, weight: impl Fn(f64) -> f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        scan_max(|z| slice.root_and_slope(z).1.abs() * weight(z), lo, hi, SCAN_POINTS)
            .map_or(0.0, |(_, v)| v)
    }

    /// `sup_s (1 - (1 + s)^(-1/2)) / sqrt(s)`, the Hölder factor of `1/sqrt(t + 1)`.
    fn time_holder_factor() -> f64 {
        // The supremum sits near s = 1.6; [0, 50] contains it with room.
        scan_max(|s| if s <= 0.0 { 0.0 } else { (1.0 - 1.0 / sqrt(1.0 + s)) / sqrt(s) }, 0.0, 50.0, SCAN_POINTS)
            .map_or(0.0, |(_, v)| v)
    }

    /// Constants derived from the closed form: slice maxima at `t = 0`
    /// and suprema of the slice slopes over the clamped ranges.
    fn analytic_constants(&self) -> LeverageConstants {
        let (zlo, zhi) = self.z_range();
        let (mlo, mhi) = self.z_range_max();
        let g1 = sqrt(self.slices[0].max_on(zlo, zhi).max(0.0));
        let g2 = sqrt(self.slices[1].max_on(mlo, mhi).max(0.0));
        let sigma_max = 0.5 * (g1 + g2);
        let c_x = 0.5 * Self::max_slope(&self.slices[0], zlo, zhi, |_| 1.0);
        let c_m = 0.5 * Self::max_slope(&self.slices[1], mlo, mhi, |_| 1.0);
        let c_t = sigma_max * Self::time_holder_factor();
        LeverageConstants::smooth(sigma_max, c_t, c_x, c_m)
    }

    /// Constants in spot and running-maximum (not log) coordinates, for the
    /// lift to log-space constants.
    pub fn spot_lipschitz_constants(&self) -> SpotLipschitzConstants {
        let (zlo, zhi) = self.z_range();
        let (mlo, mhi) = self.z_range_max();
        let s0 = self.s0;
        let c_s = 0.5 * Self::max_slope(&self.slices[0], zlo, zhi, |z| 1.0 / (s0 * exp(z)));
        let c_m = 0.5 * Self::max_slope(&self.slices[1], mlo, mhi, |z| 1.0 / (s0 * exp(z)));
        // Value at (0, s_min, s_min) taken from the raw formula.
        let base = 0.5
            * (sqrt(self.slices[0].total_variance(zlo).max(0.0)) + sqrt(self.slices[1].total_variance(zlo).max(0.0)));
        let g1 = sqrt(self.slices[0].max_on(zlo, zhi).max(0.0));
        let g2 = sqrt(self.slices[1].max_on(mlo, mhi).max(0.0));
        SpotLipschitzConstants {
            base_value: base,
            c_t: 0.5 * (g1 + g2) * Self::time_holder_factor(),
            c_s,
            c_m,
            jump_constants: alloc::vec::Vec::new(),
        }
    }
}
