//! Natural cubic spline on a strictly increasing knot grid.

/// Natural cubic spline interpolant. Construction solves the standard
/// tridiagonal system for the second derivatives; evaluation clamps to the
/// knot range (callers keep their grids wide enough that clamping only
/// happens from rounding).
#[derive(Clone, Debug)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>, // second derivatives at the knots
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        assert!(x.len() >= 3, "spline needs at least 3 knots");
        assert!(
            x.windows(2).all(|w| w[1] > w[0]),
            "knots must be strictly increasing"
        );
        let n = x.len();
        // Thomas algorithm on the interior equations; natural ends m0 = mn = 0.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        CubicSpline { x, y, m }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let t = t.clamp(self.x[0], self.x[n - 1]);
        // partition_point returns the first knot > t; interval index is one less.
        let i = self.x.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let x: Vec<f64> = (0..=200).map(|k| k as f64 * 0.02).collect();
        let y: Vec<f64> = x.iter().map(|&v| (-v).exp() * (3.0 * v).sin()).collect();
        let s = CubicSpline::new(x, y);
        // natural end conditions cost O(h^2) in a boundary layer, so probe
        // the interior where the h^4 rate holds
        let mut worst = 0.0f64;
        for k in 0..1000 {
            let t = 0.5 + k as f64 * 0.003;
            let exact = (-t).exp() * (3.0 * t).sin();
            worst = worst.max((s.eval(t) - exact).abs());
        }
        assert!(worst < 1e-6, "worst spline error {worst:.3e}");
    }

    #[test]
    fn exact_on_linear_data() {
        let x = vec![0.0, 1.0, 2.5, 4.0];
        let y: Vec<f64> = x.iter().map(|&v| 2.0 * v - 1.0).collect();
        let s = CubicSpline::new(x, y);
        assert!((s.eval(1.7) - (2.0 * 1.7 - 1.0)).abs() < 1e-14);
    }
}
