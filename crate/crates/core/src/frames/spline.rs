//! Natural cubic splines with a positive floor.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
    floor: f64,
}

impl CubicSpline {
    /// Knots strictly increasing, values positive. The interpolant is clamped
    /// below at one hundredth of the smallest sample.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::InvalidSeed("sampled profile needs at least two (knot, value) pairs".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSeed("sampled profile knots must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSeed("sampled profile values must be positive".into()));
        }
        let m = knots.len();
        let mut second = vec![0.0; m];
        if m > 2 {
            // Thomas algorithm for the natural-spline moment equations.
            let k = m - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..m - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for i in 1..k {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
            }
            second[1..m - 1].copy_from_slice(&sol);
        }
        let floor = 0.01 * values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { knots, values, second, floor })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn value(&self, t: f64) -> f64 {
        let m = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p if p >= m => m - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let v = a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0;
        v.max(self.floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_knots_and_reproduces_lines() {
        let s = CubicSpline::new(vec![0.0, 0.5, 1.5, 2.0], vec![1.0, 2.0, 4.0, 5.0]).unwrap();
        for (k, v) in [(0.0, 1.0), (0.5, 2.0), (1.5, 4.0), (2.0, 5.0)] {
            assert!((s.value(k) - v).abs() < 1e-14);
        }
        assert!((s.value(1.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn clamped_from_below() {
        let s = CubicSpline::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.01, 1.0, 0.01]).unwrap();
        for k in 0..=300 {
            assert!(s.value(k as f64 * 0.01) >= 1e-4);
        }
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }
}
