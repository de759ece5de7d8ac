//! Scalar numerics used across the crate.
//!
//! `core` has no float intrinsics, so elementary functions route through
//! `libm`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn atan(x: f64) -> f64 {
    libm::atan(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Requires `f(lo) < 0 < f(hi)`; returns `None` otherwise.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximizer of a unimodal `f` on `[a, b]`.
///
/// `f` may return `+inf`; comparisons stay well defined. Returns the
/// best abscissa seen and its value.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Dense scan of `n` interior points of `[lo, hi]` followed by golden-section
/// refinement on the bracket around the best point. Maximizes `f`.
///
/// NaN values are skipped. Returns `None` if every sample is NaN.
pub fn scan_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    let n = n.max(3);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..n {
        let q = lo + h * i as f64;
        let v = f(q);
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, v) = best?;
    if v == f64::INFINITY {
        return Some((lo + h * i as f64, v));
    }
    let a = lo + h * i.saturating_sub(1) as f64;
    let b = lo + h * (i + 1).min(n - 1) as f64;
    let (q, fq) = golden_max(&mut f, a, b, 1e-12 * (1.0 + b.abs()));
    if fq >= v {
        Some((q, fq))
    } else {
        Some((lo + h * i as f64, v))
    }
}

/// Minimizing counterpart of [`scan_max`].
pub fn scan_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    scan_max(|x| -f(x), lo, hi, n).map(|(x, v)| (x, -v))
}
