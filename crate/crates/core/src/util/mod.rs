//! Small numeric utilities: compensated summation, double-double
//! accumulation, and a natural cubic spline.

pub mod dd;
pub mod spline;

/// Neumaier-compensated running sum.
///
/// Used for MC reductions where the reduction order must not affect the
/// result: samples are accumulated sequentially in sample-index order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    sxy / sxx
}

/// Slope of log y against log x; inputs must be positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ls_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_cancelled_tail() {
        let mut k = Kahan::new();
        k.add(1.0);
        for _ in 0..10_000 {
            k.add(1e-17);
        }
        k.add(-1.0);
        let exact = 1e-13;
        assert!((k.value() - exact).abs() < 1e-24);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let x: Vec<f64> = (1..=6).map(|k| 2f64.powi(-k)).collect();
        let y: Vec<f64> = x.iter().map(|&v| 3.0 * v.powf(0.7)).collect();
        assert!((loglog_slope(&x, &y) - 0.7).abs() < 1e-12);
    }
}
