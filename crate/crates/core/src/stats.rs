//! Streaming sample moments with an order-preserving merge.

/// Count, mean and centred second moment of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two disjoint samples.
    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / n as f64;
        Self {
            count: n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * w,
        }
    }

    /// Unbiased sample variance (0 for fewer than two points).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            crate::math::sqrt(self.variance() / self.count as f64)
        }
    }
}

/// Joint moments of a response `y` and a control `x` with known mean.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlledMoments {
    pub count: u64,
    mean_y: f64,
    mean_x: f64,
    m2_y: f64,
    m2_x: f64,
    c_xy: f64,
}

impl ControlledMoments {
    pub fn push(&mut self, y: f64, x: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dy = y - self.mean_y;
        let dx = x - self.mean_x;
        self.mean_y += dy / n;
        self.mean_x += dx / n;
        self.m2_y += dy * (y - self.mean_y);
        self.m2_x += dx * (x - self.mean_x);
        self.c_xy += dy * (x - self.mean_x);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let w = other.count as f64 / n as f64;
        let dy = other.mean_y - self.mean_y;
        let dx = other.mean_x - self.mean_x;
        let cross = self.count as f64 * w;
        Self {
            count: n,
            mean_y: self.mean_y + dy * w,
            mean_x: self.mean_x + dx * w,
            m2_y: self.m2_y + other.m2_y + dy * dy * cross,
            m2_x: self.m2_x + other.m2_x + dx * dx * cross,
            c_xy: self.c_xy + other.c_xy + dy * dx * cross,
        }
    }

    /// Plain sample moments of `y`.
    pub fn response(&self) -> Moments {
        Moments { count: self.count, mean: self.mean_y, m2: self.m2_y }
    }

    /// Regression-adjusted mean `mean_y - b (mean_x - x_mean)` and its
    /// standard error, with `b` the fitted slope of `y` on `x`.
    pub fn controlled(&self, x_mean: f64) -> (f64, f64) {
        if self.count < 3 || !(self.m2_x > 0.0) {
            let m = self.response();
            return (m.mean, m.std_error());
        }
        let n = self.count as f64;
        let b = self.c_xy / self.m2_x;
        let resid = (self.m2_y - b * self.c_xy).max(0.0) / (n - 2.0);
        (self.mean_y - b * (self.mean_x - x_mean), crate::math::sqrt(resid / n))
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn control_removes_linear_noise() {
        let mut c = ControlledMoments::default();
        for i in 0..100 {
            let x = (i as f64 * 0.37).sin();
            c.push(2.0 + 3.0 * x, x);
        }
        let (est, se) = c.controlled(0.0);
        assert!((est - 2.0).abs() < 1e-12);
        assert!(se < 1e-12);
        assert!(c.response().std_error() > 0.1);
    }

    proptest! {
        #[test]
        fn controlled_merge_matches_single_pass(
            xs in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 4..100), cut in 0usize..100,
        ) {
            let cut = cut.min(xs.len());
            let fold = |s: &[(f64, f64)]| {
                let mut c = ControlledMoments::default();
                for &(y, x) in s {
                    c.push(y, x);
                }
                c
            };
            let (a, b) = (fold(&xs).controlled(0.5), fold(&xs[..cut]).merge(fold(&xs[cut..])).controlled(0.5));
            prop_assert!((a.0 - b.0).abs() < 1e-8 * (1.0 + a.0.abs()));
            prop_assert!((a.1 - b.1).abs() < 1e-8 * (1.0 + a.1));
        }
    }

    #[test]
    fn small_sample() {
        let m: Moments = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        assert_eq!(m.mean, 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(Moments::default().std_error(), 0.0);
    }

    proptest! {
        #[test]
        fn merge_matches_single_pass(xs in proptest::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
            let cut = cut.min(xs.len());
            let all: Moments = xs.iter().copied().collect();
            let a: Moments = xs[..cut].iter().copied().collect();
            let b: Moments = xs[cut..].iter().copied().collect();
            let m = a.merge(b);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            prop_assert_eq!(m.count, all.count);
            prop_assert!((m.mean - mean).abs() < 1e-9);
            prop_assert!((m.variance() - var).abs() < 1e-7 * (1.0 + var));
        }
    }
}
