//! Feller gates and admissibility horizons.
//!
//! `T*(p)` is the horizon below which the strong order 1/2 of the log-Euler
//! scheme is guaranteed for the `L^p` error. It combines an exponential
//! moment horizon `T_x` for the log-spot with a moment horizon `T_S` of the
//! variance scheme.

use core::cmp::Ordering;
use core::f64::consts::FRAC_PI_2;
#[cfg(target_has_atomic = "64")]
use core::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::error::{ensure_finite, invalid, Error, Result};
use crate::leverage::LeverageConstants;
use crate::math::{adaptive_simpson, atan, bisect, exp, scan_max, scan_min, sqrt};
use crate::variance::{CirParams, VarianceScheme};

/// Scheme-dependent Feller threshold `nu*` and moment bound `p*(nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeGate {
    pub scheme: VarianceScheme,
}

impl SchemeGate {
    pub fn new(scheme: VarianceScheme) -> Self {
        Self { scheme }
    }

    pub fn nu_star(&self) -> f64 {
        match self.scheme {
            VarianceScheme::Fte => 2.0 + sqrt(3.0),
            VarianceScheme::Bem => 2.0,
        }
    }

    pub fn p_star(&self, nu: f64) -> f64 {
        if nu.is_infinite() {
            return f64::INFINITY;
        }
        match self.scheme {
            VarianceScheme::Fte => (nu - 1.0) * (nu - 1.0) / nu,
            VarianceScheme::Bem => nu,
        }
    }

    pub fn check(&self, nu: f64) -> Result<()> {
        if nu > self.nu_star() {
            Ok(())
        } else {
            Err(Error::FellerGateFailed { nu, nu_star: self.nu_star() })
        }
    }
}

/// Moment horizon variants of [`t_s`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentScheme {
    Fte,
    Bem,
    /// The exact CIR process.
    Cir,
}

impl From<VarianceScheme> for MomentScheme {
    fn from(s: VarianceScheme) -> Self {
        match s {
            VarianceScheme::Fte => MomentScheme::Fte,
            VarianceScheme::Bem => MomentScheme::Bem,
        }
    }
}

/// A positive time horizon, possibly unbounded. `Unbounded` compares greater
/// than every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Horizon {
    Finite(f64),
    Unbounded,
}

impl Horizon {
    pub fn from_f64(t: f64) -> Self {
        if t == f64::INFINITY {
            Horizon::Unbounded
        } else {
            Horizon::Finite(t)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Horizon::Finite(t) => t,
            Horizon::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_unbounded(self) -> bool {
        self == Horizon::Unbounded
    }

    /// Whether `t` lies strictly below this horizon.
    pub fn exceeds(self, t: f64) -> bool {
        t < self.as_f64()
    }

    pub fn min(self, other: Self) -> Self {
        match self.partial_cmp(&other) {
            Some(Ordering::Greater) => other,
            _ => self,
        }
    }
}

impl core::fmt::Display for Horizon {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Unbounded => f.write_str("inf"),
        }
    }
}

/// Constants entering the horizons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalInputs {
    pub k: f64,
    pub theta: f64,
    pub xi: f64,
    pub sigma_max: f64,
    pub c_sigma_x: f64,
    pub c_sigma_m: f64,
}

impl CriticalInputs {
    pub fn new(cir: &CirParams, leverage: &LeverageConstants) -> Self {
        Self {
            k: cir.k,
            theta: cir.theta,
            xi: cir.xi,
            sigma_max: leverage.sigma_max,
            c_sigma_x: leverage.c_sigma_x,
            c_sigma_m: leverage.c_sigma_m,
        }
    }

    pub fn nu(&self) -> f64 {
        if self.xi == 0.0 {
            f64::INFINITY
        } else {
            2.0 * self.k * self.theta / (self.xi * self.xi)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.k, "k"),
            (self.theta, "theta"),
            (self.xi, "xi"),
            (self.sigma_max, "sigma_max"),
            (self.c_sigma_x, "c_sigma_x"),
            (self.c_sigma_m, "c_sigma_m"),
        ] {
            ensure_finite(v, name)?;
            if v < 0.0 {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        if self.k <= 0.0 || self.theta <= 0.0 {
            return Err(invalid("k, theta", "must be positive"));
        }
        Ok(())
    }

    fn lipschitz_sum(&self) -> f64 {
        self.c_sigma_x + self.c_sigma_m
    }
}

/// Grid resolution for the inner infimum and outer supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub grid_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { grid_points: 512 }
    }
}

/// Relative endpoint offset of the open-interval searches.
const EDGE: f64 = 1e-6;

#[cfg(target_has_atomic = "64")]
static BETA0_BITS: AtomicU64 = AtomicU64::new(0);

/// `-e^{s^2/2} + s int_0^s e^{u^2/2} du`.
pub fn beta0_objective(s: f64) -> f64 {
    let integral = adaptive_simpson(&|u: f64| exp(0.5 * u * u), 0.0, s, 1e-10);
    -exp(0.5 * s * s) + s * integral
}

/// Positive root of [`beta0_objective`], about 1.3069. Cached after the first call.
#[cfg(target_has_atomic = "64")]
pub fn beta0() -> f64 {
    let bits = BETA0_BITS.load(AtomicOrdering::Relaxed);
    if bits != 0 {
        return f64::from_bits(bits);
    }
    let root = solve_beta0();
    BETA0_BITS.store(root.to_bits(), AtomicOrdering::Relaxed);
    root
}

/// Positive root of [`beta0_objective`], about 1.3069.
#[cfg(not(target_has_atomic = "64"))]
pub fn beta0() -> f64 {
    solve_beta0()
}

fn solve_beta0() -> f64 {
    bisect(beta0_objective, 1.0, 2.0, 1e-13).expect("objective changes sign on [1, 2]")
}

/// `phi(p) = xi^2 sigma_max^2 (p + sqrt((p - 1) p))^2`.
pub fn phi(p: f64, xi: f64, sigma_max: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid("p", "must be at least 1"));
    }
    let a = p + sqrt((p - 1.0) * p);
    Ok(xi * xi * sigma_max * sigma_max * a * a)
}

/// `phi~(p, q)` for `q > p`. The inner radicand equals
/// `C^2 ((2 + b^2) q - 2) + 4 C sigma_max` and is positive for `q >= 1`; a
/// negative value (only reachable with `q < 1`) yields NaN.
pub fn phi_tilde(p: f64, q: f64, inputs: &CriticalInputs) -> f64 {
    let b = beta0();
    let c = inputs.lipschitz_sum();
    let radicand = (2.0 + b * b) * c * c * q + 2.0 * c * (2.0 * inputs.sigma_max - c);
    if radicand < 0.0 {
        return f64::NAN;
    }
    let a = sqrt(radicand) + b * c * sqrt(q);
    p * q * inputs.xi * inputs.xi / (2.0 * (q - p)) * a * a
}

fn open_interval(lo: f64, hi: f64) -> (f64, f64) {
    let eps = EDGE * (hi - lo);
    (lo + eps, hi - eps)
}

/// `2/sqrt((phi - k^2)+) [pi/2 + atan(k / sqrt((phi - k^2)+))]`, unbounded when `phi <= k^2`.
fn riccati_horizon(phi: f64, k: f64) -> Horizon {
    let d = phi - k * k;
    if !(d > 0.0) {
        return Horizon::Unbounded;
    }
    let r = sqrt(d);
    Horizon::Finite(2.0 / r * (FRAC_PI_2 + atan(k / r)))
}

fn check_p(p: f64, p_star: f64) -> Result<()> {
    if p >= 1.0 && p < p_star {
        Ok(())
    } else {
        Err(Error::POutOfRange { p, p_star })
    }
}

/// `phi*(p) = inf_{q in (p, p*)} phi~(p, q)`, with its minimizer.
pub fn phi_star(p: f64, inputs: &CriticalInputs, gate: SchemeGate, opts: SearchOptions) -> Result<(f64, f64)> {
    let p_star = gate.p_star(inputs.nu());
    check_p(p, p_star)?;
    if inputs.xi == 0.0 || inputs.lipschitz_sum() == 0.0 {
        return Ok((0.0, p));
    }
    let (lo, hi) = open_interval(p, p_star);
    let (q, v) = scan_min(|q| phi_tilde(p, q, inputs), lo, hi, opts.grid_points).ok_or(Error::NonFinite("phi_tilde"))?;
    Ok((v, q))
}

/// Exponential moment horizon of the log-spot.
pub fn t_x(p: f64, inputs: &CriticalInputs, gate: SchemeGate, opts: SearchOptions) -> Result<Horizon> {
    inputs.validate()?;
    let (phi_s, _) = phi_star(p, inputs, gate, opts)?;
    Ok(riccati_horizon(phi_s, inputs.k))
}

/// Moment horizon of order `r` for the variance scheme or the exact process.
pub fn t_s(r: f64, k: f64, xi: f64, sigma_max: f64, scheme: MomentScheme) -> Result<Horizon> {
    if !(r > 1.0) {
        return Err(invalid("r", "must exceed 1"));
    }
    if r.is_infinite() {
        return Ok(Horizon::Finite(0.0));
    }
    let ph = phi(r, xi, sigma_max)?;
    if ph == 0.0 {
        return Ok(Horizon::Unbounded);
    }
    Ok(match scheme {
        MomentScheme::Fte if ph < 4.0 * k * k => Horizon::Finite(4.0 * k / ph),
        MomentScheme::Fte => Horizon::Finite(1.0 / (sqrt(ph) - k)),
        MomentScheme::Bem => Horizon::Finite(1.0 / sqrt(ph)),
        MomentScheme::Cir => riccati_horizon(ph, k),
    })
}

/// Outcome of [`t_star`] at the maximizing `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalTimeReport {
    pub p: f64,
    pub t_x: Horizon,
    pub t_s: Horizon,
    pub t_star: Horizon,
    pub q_argmax: f64,
    /// Whether the requested horizon lies strictly below `t_star`.
    pub admissible: bool,
}

/// `T*(p) = sup_{q in (2 v p, p*)} min(T_x(q), T_S(pq/(q - p)))`, checked
/// against the requested horizon.
pub fn t_star(
    p: f64,
    inputs: &CriticalInputs,
    gate: SchemeGate,
    horizon: f64,
    opts: SearchOptions,
) -> Result<CriticalTimeReport> {
    inputs.validate()?;
    let nu = inputs.nu();
    gate.check(nu)?;
    let p_star = gate.p_star(nu);
    check_p(p, p_star)?;
    let scheme = MomentScheme::from(gate.scheme);
    let report = |q: f64, tx: Horizon, ts: Horizon| {
        let t = tx.min(ts);
        CriticalTimeReport {
            p,
            t_x: tx,
            t_s: ts,
            t_star: t,
            q_argmax: q,
            admissible: t.exceeds(horizon),
        }
    };

    if p_star.is_infinite() {
        return Ok(report(f64::INFINITY, Horizon::Unbounded, Horizon::Unbounded));
    }
    let lo = if p > 2.0 { p } else { 2.0 };
    if !(lo < p_star) {
        return Err(Error::POutOfRange { p: lo, p_star });
    }
    let r_of = |q: f64| p * q / (q - p);
    let tx_of = |q: f64| t_x(q, inputs, gate, opts);
    let ts_of = |q: f64| t_s(r_of(q), inputs.k, inputs.xi, inputs.sigma_max, scheme);

    if inputs.lipschitz_sum() == 0.0 {
        // T_x is unbounded and T_S(pq/(q - p)) increases towards q = p*.
        let ts = t_s(r_of(p_star), inputs.k, inputs.xi, inputs.sigma_max, scheme)?;
        return Ok(report(p_star, Horizon::Unbounded, ts));
    }

    let (a, b) = open_interval(lo, p_star);
    let objective = |q: f64| match (tx_of(q), ts_of(q)) {
        (Ok(tx), Ok(ts)) => tx.min(ts).as_f64(),
        _ => f64::NAN,
    };
    let (q, _) = scan_max(objective, a, b, opts.grid_points).ok_or(Error::NonFinite("critical horizon"))?;
    let tx = tx_of(q)?;
    let ts = ts_of(q)?;
    Ok(report(q, tx, ts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn svi_inputs() -> CriticalInputs {
        CriticalInputs { k: 8.0, theta: 0.02, xi: 0.2, sigma_max: 1.437, c_sigma_x: 0.307, c_sigma_m: 0.307 }
    }

    fn arctan_inputs() -> CriticalInputs {
        CriticalInputs { sigma_max: 1.0 + FRAC_PI_2, c_sigma_x: 0.0, c_sigma_m: 1.0, ..svi_inputs() }
    }

    fn fte() -> SchemeGate {
        SchemeGate::new(VarianceScheme::Fte)
    }

    fn ts(p: f64, inputs: &CriticalInputs) -> f64 {
        t_star(p, inputs, fte(), 1.0, SearchOptions::default()).unwrap().t_star.as_f64()
    }

    #[test]
    fn gate_constants() {
        assert_eq!(fte().nu_star(), 2.0 + 3f64.sqrt());
        assert_eq!(SchemeGate::new(VarianceScheme::Bem).nu_star(), 2.0);
        assert_eq!(fte().p_star(8.0), 49.0 / 8.0);
        assert_eq!(SchemeGate::new(VarianceScheme::Bem).p_star(8.0), 8.0);
        assert!(fte().check(3.7).is_err());
        assert!(fte().check(3.8).is_ok());
    }

    #[test]
    fn horizon_ordering() {
        assert!(Horizon::Unbounded > Horizon::Finite(1e300));
        assert!(Horizon::Finite(1.0) < Horizon::Finite(2.0));
        assert_eq!(Horizon::Unbounded.min(Horizon::Finite(3.0)), Horizon::Finite(3.0));
        assert!(Horizon::Unbounded.exceeds(1e9));
        assert!(!Horizon::Finite(1.0).exceeds(1.0));
    }

    #[test]
    fn beta0_root() {
        assert!(beta0_objective(1.0) < 0.0 && beta0_objective(2.0) > 0.0);
        assert_eq!(beta0_objective(0.0), -1.0);
        let b = beta0();
        assert!((b - 1.307).abs() < 1e-3);
        // Residual with a fixed composite Simpson rule as an independent quadrature.
        let n = 20_000;
        let h = b / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let u = h * i as f64;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * (0.5 * u * u).exp();
        }
        let resid = -(0.5 * b * b).exp() + b * s * h / 3.0;
        assert!(resid.abs() < 1e-7, "{resid}");
        assert_eq!(beta0(), b);
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(1.0, 0.2, 1.437).unwrap(), 0.2 * 0.2 * 1.437 * 1.437);
        assert_eq!(phi(3.0, 0.0, 1.437).unwrap(), 0.0);
        assert!(phi(0.5, 0.2, 1.0).is_err());
        let v = phi(2.0, 0.2, 1.437).unwrap();
        let oracle = 0.04 * 1.437f64.powi(2) * (2.0 + 2f64.sqrt()).powi(2);
        assert!((v - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn t_s_branches() {
        let k = 2.0;
        let xi = 4.0 * k / 1.0;
        // phi(1) = xi^2 = 4 k^2 sits on the switch; both branches give 1/k.
        let at = t_s(1.0 + 1e-15, k, xi / 2.0, 1.0, MomentScheme::Fte).unwrap().as_f64();
        assert!((at - 1.0 / k).abs() < 1e-6, "{at}");
        assert_eq!(t_s(3.0, k, 0.0, 1.0, MomentScheme::Bem).unwrap(), Horizon::Unbounded);
        assert_eq!(t_s(3.0, k, 0.0, 1.0, MomentScheme::Cir).unwrap(), Horizon::Unbounded);
        assert!(t_s(1.0, k, 0.1, 1.0, MomentScheme::Fte).is_err());
    }

    #[test]
    fn svi_critical_times() {
        let t1 = ts(1.0, &svi_inputs());
        let t2 = ts(2.0, &svi_inputs());
        assert!((t1 / 132.58 - 1.0).abs() < 5e-3, "{t1}");
        assert!((t2 / 12.57 - 1.0).abs() < 5e-3, "{t2}");
    }

    #[test]
    fn arctan_critical_time() {
        let t1 = ts(1.0, &arctan_inputs());
        assert!((t1 / 38.92 - 1.0).abs() < 5e-3, "{t1}");
    }

    #[test]
    fn search_is_grid_stable() {
        let coarse = t_star(1.0, &svi_inputs(), fte(), 1.0, SearchOptions { grid_points: 256 }).unwrap();
        let fine = t_star(1.0, &svi_inputs(), fte(), 1.0, SearchOptions { grid_points: 512 }).unwrap();
        let (a, b) = (coarse.t_star.as_f64(), fine.t_star.as_f64());
        assert!((a / b - 1.0).abs() < 1e-3, "{a} {b}");
    }

    #[test]
    fn report_is_consistent() {
        let r = t_star(1.0, &svi_inputs(), fte(), 200.0, SearchOptions::default()).unwrap();
        assert!(!r.admissible);
        assert!(r.q_argmax > 2.0 && r.q_argmax < 49.0 / 8.0);
        assert_eq!(r.t_star, r.t_x.min(r.t_s));
        assert!(t_star(1.0, &svi_inputs(), fte(), 100.0, SearchOptions::default()).unwrap().admissible);
    }

    #[test]
    fn collapses_are_unbounded() {
        let heston = CriticalInputs { c_sigma_x: 0.0, c_sigma_m: 0.0, ..svi_inputs() };
        let opts = SearchOptions::default();
        assert_eq!(t_x(2.0, &heston, fte(), opts).unwrap(), Horizon::Unbounded);
        let r = t_star(1.0, &heston, fte(), 1.0, opts).unwrap();
        assert_eq!(r.t_x, Horizon::Unbounded);
        assert!(r.t_star.as_f64() > 0.0);
        let pdv = CriticalInputs { xi: 0.0, ..svi_inputs() };
        assert_eq!(t_x(5.0, &pdv, fte(), opts).unwrap(), Horizon::Unbounded);
        assert_eq!(t_star(7.0, &pdv, fte(), 1.0, opts).unwrap().t_star, Horizon::Unbounded);
    }

    #[test]
    fn gate_errors() {
        let low = CriticalInputs { k: 0.25, ..svi_inputs() };
        let opts = SearchOptions::default();
        assert!(matches!(t_star(1.0, &low, fte(), 1.0, opts), Err(Error::FellerGateFailed { .. })));
        assert!(matches!(t_star(6.2, &svi_inputs(), fte(), 1.0, opts), Err(Error::POutOfRange { .. })));
        assert!(matches!(t_x(6.2, &svi_inputs(), fte(), opts), Err(Error::POutOfRange { .. })));
        assert!(t_star(0.5, &svi_inputs(), fte(), 1.0, opts).is_err());
    }

    #[test]
    fn phi_tilde_nan_below_unit_order() {
        let big = CriticalInputs { sigma_max: 0.1, c_sigma_x: 1.0, c_sigma_m: 1.0, ..svi_inputs() };
        assert!(phi_tilde(0.01, 0.02, &big).is_nan());
        assert!(phi_tilde(1.0, 1.5, &big) > 0.0);
    }

    #[test]
    fn nonincreasing_in_p_and_vanishing_at_p_star() {
        let inputs = svi_inputs();
        let p_star = 49.0 / 8.0;
        let mut last = f64::INFINITY;
        for i in 0..12 {
            let p = 1.0 + (p_star - 1.0) * i as f64 / 12.0;
            let t = ts(p, &inputs);
            assert!(t <= last * (1.0 + 1e-9), "p = {p}: {t} > {last}");
            last = t;
        }
        assert!(ts(p_star - 1e-4, &inputs) < 1e-2 * ts(1.0, &inputs));
    }

    #[test]
    fn grows_with_mean_reversion() {
        let mut last = 0.0;
        for k in [8.0, 16.0, 32.0, 64.0, 128.0] {
            let t = ts(1.0, &CriticalInputs { k, ..svi_inputs() });
            assert!(t > last);
            last = t;
        }
        assert!(last > 1e3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn moment_horizons_are_ordered(
            k in 0.01f64..50.0, xi in 0.01f64..3.0, sigma in 0.01f64..5.0, r in 1.0001f64..50.0,
        ) {
            let cir = t_s(r, k, xi, sigma, MomentScheme::Cir).unwrap();
            let fte = t_s(r, k, xi, sigma, MomentScheme::Fte).unwrap();
            let bem = t_s(r, k, xi, sigma, MomentScheme::Bem).unwrap();
            prop_assert!(cir >= fte && fte >= bem, "{cir:?} {fte:?} {bem:?}");
            prop_assert!(bem.as_f64() > 0.0);
        }

        #[test]
        fn phi_tilde_finite_for_unit_orders(
            sigma in 0.0f64..5.0, cx in 0.0f64..20.0, cm in 0.0f64..20.0, p in 1.0f64..10.0, dq in 1e-6f64..10.0,
        ) {
            let inputs = CriticalInputs { sigma_max: sigma, c_sigma_x: cx, c_sigma_m: cm, ..svi_inputs() };
            let v = phi_tilde(p, p + dq, &inputs);
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
