//! Small numeric helpers shared across modules.

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl core::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum(iter: impl IntoIterator<Item = f64>) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Time at which a function that is positive at `t0` and non-positive at
/// `t1` crosses zero, assuming it is linear in between.
pub fn linear_crossing(t0: f64, f0: f64, t1: f64, f1: f64) -> f64 {
    let denom = f0 - f1;
    if denom <= 0.0 || !denom.is_finite() {
        return t1;
    }
    let s = (f0 / denom).clamp(0.0, 1.0);
    t0 + s * (t1 - t0)
}

/// Least-squares line through `(x, y)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination. `NaN` when `y` has no spread.
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares for `y = slope * x + intercept`.
///
/// Returns `None` with fewer than two points or when all `x` coincide.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = sum(xs[..n].iter().copied()) / nf;
    let mean_y = sum(ys[..n].iter().copied()) / nf;
    let sxx = sum(xs[..n].iter().map(|x| (x - mean_x) * (x - mean_x)));
    if sxx <= 0.0 {
        return None;
    }
    let sxy = sum(xs[..n]
        .iter()
        .zip(&ys[..n])
        .map(|(x, y)| (x - mean_x) * (y - mean_y)));
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot = sum(ys[..n].iter().map(|y| (y - mean_y) * (y - mean_y)));
    let ss_res = sum(xs[..n].iter().zip(&ys[..n]).map(|(x, y)| {
        let r = y - (slope * x + intercept);
        r * r
    }));
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        f64::NAN
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = alloc::vec![1.0e16, 1.0, -1.0e16];
        assert_eq!(sum(terms.iter().copied()), 1.0);
        terms.reverse();
        assert_eq!(sum(terms.iter().copied()), 1.0);
    }

    #[test]
    fn crossing_interpolates() {
        assert_eq!(linear_crossing(1.0, 2.0, 2.0, -2.0), 1.5);
        assert_eq!(linear_crossing(1.0, 0.0, 2.0, 0.0), 2.0);
    }

    #[test]
    fn exact_line_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 2.0]).is_none());
    }
}
