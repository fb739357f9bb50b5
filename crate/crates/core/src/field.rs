//! Fractional Brownian fields pinned at the origin: the product covariance,
//! exact-covariance Gaussian sampling on small grids, and the singular
//! φ_H-weighted inner product that measures second moments of Wiener
//! integrals.

use crate::error::{Error, Result};
use crate::estimates::HurstVector;
use crate::quad::{gauss_jacobi_01, gl8, piecewise_graded};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Covariance of one-parameter fractional Brownian motion pinned at 0:
/// R_H(x, y) = ½(|x|^{2H} + |y|^{2H} − |x−y|^{2H}).
pub fn cov_r(h: f64, x: f64, y: f64) -> f64 {
    let e = 2.0 * h;
    0.5 * (x.abs().powf(e) + y.abs().powf(e) - (x - y).abs().powf(e))
}

/// Mixed second derivative of R_H for H > 1/2:
/// φ_H(u, v) = H(2H−1)|u−v|^{2H−2}, the integral kernel of ⟨·,·⟩_H.
pub fn phi_h(h: f64, u: f64, v: f64) -> Result<f64> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::DomainViolation(format!(
            "phi kernel needs H in (1/2, 1), got {h}"
        )));
    }
    if u == v {
        return Err(Error::CoincidentPoints(
            "phi kernel diverges on the diagonal; integrate against it instead",
        ));
    }
    Ok(h * (2.0 * h - 1.0) * (u - v).abs().powf(2.0 * h - 2.0))
}

/// Tensor grid carrying the product covariance
/// cov(x, y) = ∏ᵢ R_{Hᵢ}(xᵢ, yᵢ) and (when needed) its Cholesky factor.
///
/// Nodes with a zero coordinate have identically zero field value (the field
/// is pinned on the coordinate hyperplanes through the origin), so their
/// rows and columns vanish; they are excluded from the factorization and
/// samples carry exact zeros there.
pub struct FieldGrid {
    hurst: HurstVector,
    axes: Vec<Vec<f64>>,
    nodes: Vec<Vec<f64>>,
    cov: DMatrix<f64>,
    /// indices of nodes with nonzero variance, in node order
    active: Vec<usize>,
    /// Cholesky factor of the active-block covariance (lower triangular)
    factor: DMatrix<f64>,
    jitter: f64,
}

/// Largest node count a dense grid will accept.
const MAX_NODES: usize = 4096;

impl FieldGrid {
    pub fn new(hurst: &HurstVector, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != hurst.dim() {
            return Err(Error::DimensionMismatch {
                expected: hurst.dim(),
                got: axes.len(),
            });
        }
        let mut n_nodes = 1usize;
        for axis in &axes {
            if axis.is_empty() {
                return Err(Error::InsufficientGrid { needed: 1, got: 0 });
            }
            if axis.iter().any(|x| !x.is_finite()) {
                return Err(Error::DomainViolation("grid nodes must be finite".into()));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::DomainViolation(
                    "axis nodes must be strictly increasing".into(),
                ));
            }
            n_nodes = n_nodes.saturating_mul(axis.len());
        }
        if n_nodes > MAX_NODES {
            return Err(Error::DomainViolation(format!(
                "grid has {n_nodes} nodes, dense covariance capped at {MAX_NODES}"
            )));
        }

        // cartesian product, last axis fastest
        let d = axes.len();
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut idx = vec![0usize; d];
        loop {
            nodes.push((0..d).map(|i| axes[i][idx[i]]).collect::<Vec<f64>>());
            let mut k = d;
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    break;
                }
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }

        let h = hurst.components();
        let mut cov = DMatrix::zeros(n_nodes, n_nodes);
        for j in 0..n_nodes {
            for i in 0..=j {
                let mut c = 1.0;
                for k in 0..d {
                    c *= cov_r(h[k], nodes[i][k], nodes[j][k]);
                }
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }

        let active: Vec<usize> = (0..n_nodes).filter(|&i| cov[(i, i)] != 0.0).collect();
        let m = active.len();
        let mut reduced = DMatrix::zeros(m, m);
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate() {
                reduced[(a, b)] = cov[(i, j)];
            }
        }

        let scale = if m > 0 {
            reduced.trace() / m as f64
        } else {
            0.0
        };
        let mut jitter = 0.0;
        let mut factor = None;
        if m == 0 {
            factor = Some(DMatrix::zeros(0, 0));
        } else {
            let try_jitter = |j: f64| -> Option<DMatrix<f64>> {
                let mut mtx = reduced.clone();
                for k in 0..m {
                    mtx[(k, k)] += j;
                }
                mtx.cholesky().map(|c| c.unpack())
            };
            if let Some(l) = try_jitter(0.0) {
                factor = Some(l);
            } else {
                let mut j = 1e-14 * scale;
                while j <= 1e-8 * scale * (1.0 + 1e-12) {
                    if let Some(l) = try_jitter(j) {
                        factor = Some(l);
                        jitter = j;
                        break;
                    }
                    j *= 10.0;
                }
            }
        }
        let factor = factor.ok_or(Error::NotPsd {
            max_jitter: 1e-8 * scale,
        })?;

        Ok(Self {
            hurst: hurst.clone(),
            axes,
            nodes,
            cov,
            active,
            factor,
            jitter,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn hurst(&self) -> &HurstVector {
        &self.hurst
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Diagonal jitter that was needed to factor the covariance (0 when the
    /// plain Cholesky succeeded).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

/// Draws `n_samples` exact Gaussian field realizations on the grid nodes.
/// Row k of the result is sample k, columns follow `grid.nodes()` order.
///
/// Each sample uses its own counter-indexed ChaCha stream derived from
/// `seed`, so the output is bitwise reproducible regardless of how many
/// worker threads rayon schedules.
pub fn sample_field(grid: &FieldGrid, n_samples: usize, seed: u64) -> DMatrix<f64> {
    let n_nodes = grid.nodes.len();
    let m = grid.active.len();
    let rows: Vec<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let z: Vec<f64> = (0..m)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let mut row = vec![0.0; n_nodes];
            for (a, &i) in grid.active.iter().enumerate() {
                let mut acc = 0.0;
                for (b, &zb) in z.iter().enumerate().take(a + 1) {
                    acc += grid.factor[(a, b)] * zb;
                }
                row[i] = acc;
            }
            row
        })
        .collect();
    DMatrix::from_fn(n_samples, n_nodes, |r, c| rows[r][c])
}

/// Renders samples as CSV: header row of space-separated node coordinates,
/// then one row per sample, full float precision.
pub fn samples_csv(grid: &FieldGrid, samples: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = grid
        .nodes
        .iter()
        .map(|n| {
            n.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for r in 0..samples.nrows() {
        for c in 0..samples.ncols() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", samples[(r, c)]);
        }
        out.push_str("\r\n");
    }
    out
}

/// ⟨f, g⟩_H = ∫∫ ∏_{j} φ_{H_{j mod d}}(u_j, v_j) f(u) g(v) du dv by graded
/// quadrature over the supplied support boxes (f over `f_box`, g over
/// `g_box`, each a (lows, highs) pair of length n·d).
///
/// Quadrature handles n·d ≤ 2 pair dimensions (4 total integration
/// dimensions); larger problems must fall back to Monte Carlo.
pub fn inner_product_h<F, G>(
    f: F,
    f_box: (&[f64], &[f64]),
    g: G,
    g_box: (&[f64], &[f64]),
    hurst: &HurstVector,
    n: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let d = hurst.dim();
    let dims = n * d;
    if n == 0 {
        return Err(Error::DomainViolation("chaos order must be >= 1".into()));
    }
    if dims > 2 {
        return Err(Error::DimensionTooLarge { dims, max: 2 });
    }
    for h in hurst.components() {
        if *h <= 0.5 {
            return Err(Error::DomainViolation(format!(
                "phi kernel needs every H > 1/2, got {h}"
            )));
        }
    }
    let check_box = |b: (&[f64], &[f64])| -> Result<()> {
        if b.0.len() != dims || b.1.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: b.0.len().min(b.1.len()),
            });
        }
        for (lo, hi) in b.0.iter().zip(b.1) {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::DomainViolation(
                    "support box needs finite lo < hi per axis".into(),
                ));
            }
        }
        Ok(())
    };
    check_box(f_box)?;
    check_box(g_box)?;

    let h = hurst.components();
    let hs: Vec<f64> = (0..dims).map(|j| h[j % d]).collect();

    let v = match dims {
        1 => inner_product_1d(&f, f_box.0[0], f_box.1[0], &g, g_box.0[0], g_box.1[0], hs[0]),
        _ => inner_product_2d(&f, f_box, &g, g_box, &hs),
    };
    if !v.is_finite() {
        return Err(Error::QuadratureFailure {
            context: "singular-kernel inner product",
            estimate: f64::INFINITY,
            tolerance: 0.0,
        });
    }
    Ok(v)
}

/// ∫_{delta}^{big} s^{th} q(s) ds with th in (-1, 0]. When the window starts
/// at the wall (delta = 0) the Gauss–Jacobi rule absorbs the weight exactly;
/// otherwise geometric doubling windows from the wall distance keep the
/// steep-but-smooth integrand resolved at every scale.
fn side_integral<Q: Fn(f64) -> f64>(
    q: &Q,
    delta: f64,
    big: f64,
    th: f64,
    gj: &(Vec<f64>, Vec<f64>),
) -> f64 {
    if !(big > delta) {
        return 0.0;
    }
    if delta == 0.0 {
        let scale = big.powf(1.0 + th);
        let (t, w) = gj;
        return scale
            * t.iter()
                .zip(w)
                .map(|(&ti, &wi)| wi * q(big * ti))
                .sum::<f64>();
    }
    let mut acc = 0.0;
    let mut a = delta;
    while a < big {
        let b = (2.0 * a).min(big);
        acc += gl8(&|s| s.powf(th) * q(s), a, b, 1);
        a = b;
    }
    acc
}

/// Inner v-integral ∫_{[g_lo, g_hi]} |v - u|^{th} q dv, split into the two
/// sides of u with the wall distance kept as an explicit lower limit (zero
/// when u lies inside the box, positive when it does not).
fn inner_pass<QL: Fn(f64) -> f64, QR: Fn(f64) -> f64>(
    q_left: &QL,
    q_right: &QR,
    u: f64,
    g_lo: f64,
    g_hi: f64,
    th: f64,
    gj: &(Vec<f64>, Vec<f64>),
) -> f64 {
    // v = u - s, s in [(u - g_hi)+, u - g_lo]
    let left = side_integral(q_left, (u - g_hi).max(0.0), u - g_lo, th, gj);
    // v = u + s, s in [(g_lo - u)+, g_hi - u]
    let right = side_integral(q_right, (g_lo - u).max(0.0), g_hi - u, th, gj);
    left + right
}

/// One pair dimension: outer integral over u graded dyadically at both
/// boxes' edges (the inner integral has |u − edge|^{2H−1} kinks there),
/// inner via [`inner_pass`] anchored at u so the kernel's |v − u| is always
/// an explicit quadrature variable, never a subtraction.
fn inner_product_1d<F, G>(
    f: &F,
    f_lo: f64,
    f_hi: f64,
    g: &G,
    g_lo: f64,
    g_hi: f64,
    h: f64,
) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let coef = h * (2.0 * h - 1.0);
    let th = 2.0 * h - 2.0;
    let gj = gauss_jacobi_01(12, th);
    let outer_pts = [
        (f_lo, Some(0.0)),
        (f_hi, Some(0.0)),
        (g_lo, Some(0.0)),
        (g_hi, Some(0.0)),
    ];
    let fo = |u: f64, _sp: Option<(f64, f64)>| -> f64 {
        let fu = f(&[u]);
        if fu == 0.0 {
            return 0.0;
        }
        let ql = |s: f64| g(&[u - s]);
        let qr = |s: f64| g(&[u + s]);
        fu * coef * inner_pass(&ql, &qr, u, g_lo, g_hi, th, &gj)
    };
    piecewise_graded(&fo, &outer_pts, f_lo, f_hi, 2)
}

/// Two pair dimensions: tensor nesting of the one-dimensional layout with
/// smaller rules (accuracy target ~1e-3; this path exists for product
/// checks and positivity probes, not high-precision values).
fn inner_product_2d<F, G>(
    f: &F,
    f_box: (&[f64], &[f64]),
    g: &G,
    g_box: (&[f64], &[f64]),
    hs: &[f64],
) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let coef = hs[0] * (2.0 * hs[0] - 1.0) * hs[1] * (2.0 * hs[1] - 1.0);
    let th: Vec<f64> = hs.iter().map(|h| 2.0 * h - 2.0).collect();
    let gj1 = gauss_jacobi_01(10, th[0]);
    let gj2 = gauss_jacobi_01(10, th[1]);

    let kernel = |u1: f64, u2: f64| -> f64 {
        let over_v2 = |v1: f64| -> f64 {
            let ql = |s: f64| g(&[v1, u2 - s]);
            let qr = |s: f64| g(&[v1, u2 + s]);
            inner_pass(&ql, &qr, u2, g_box.0[1], g_box.1[1], th[1], &gj2)
        };
        let ql = |s: f64| over_v2(u1 - s);
        let qr = |s: f64| over_v2(u1 + s);
        inner_pass(&ql, &qr, u1, g_box.0[0], g_box.1[0], th[0], &gj1)
    };

    let outer1 = [
        (f_box.0[0], Some(0.0)),
        (f_box.1[0], Some(0.0)),
        (g_box.0[0], Some(0.0)),
        (g_box.1[0], Some(0.0)),
    ];
    let fo1 = |u1: f64, _: Option<(f64, f64)>| -> f64 {
        let outer2 = [
            (f_box.0[1], Some(0.0)),
            (f_box.1[1], Some(0.0)),
            (g_box.0[1], Some(0.0)),
            (g_box.1[1], Some(0.0)),
        ];
        let fo2 = |u2: f64, _: Option<(f64, f64)>| -> f64 {
            let fu = f(&[u1, u2]);
            if fu == 0.0 {
                return 0.0;
            }
            fu * kernel(u1, u2)
        };
        piecewise_graded(&fo2, &outer2, f_box.0[1], f_box.1[1], 1)
    };
    coef * piecewise_graded(&fo1, &outer1, f_box.0[0], f_box.1[0], 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_kernel_examples() {
        assert_eq!(cov_r(0.75, 1.0, 1.0), 1.0);
        assert_eq!(cov_r(0.3, 0.0, 2.5), 0.0);
        assert_eq!(cov_r(0.9, -1.0, 0.0), 0.0);
        // H = 1/2 is Brownian motion: R(x, y) = min(x, y) on the positive axis
        assert!((cov_r(0.5, 1.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((cov_r(0.5, 0.25, 3.0) - 0.25).abs() < 1e-15);
        assert_eq!(cov_r(0.75, 0.4, 1.7), cov_r(0.75, 1.7, 0.4));
    }

    #[test]
    fn phi_kernel_examples() {
        assert!((phi_h(0.75, 0.0, 1.0).unwrap() - 0.375).abs() < 1e-15);
        assert!((phi_h(0.75, 1.0, 5.0).unwrap() - 0.1875).abs() < 1e-15);
        // the 2H - 1 factor kills the kernel as H drops to 1/2
        assert!(phi_h(0.5 + 1e-9, 0.0, 1.0).unwrap() < 1e-8);
        assert!(matches!(
            phi_h(0.5, 0.0, 1.0),
            Err(Error::DomainViolation(_))
        ));
        assert!(matches!(
            phi_h(0.75, 1.0, 1.0),
            Err(Error::CoincidentPoints(_))
        ));
    }

    #[test]
    fn grid_covariance_has_product_structure_and_pinning() {
        let h = HurstVector::new(vec![0.75]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![0.0, 1.0]]).unwrap();
        let c = grid.covariance();
        assert_eq!(c[(0, 0)], 0.0);
        assert_eq!(c[(0, 1)], 0.0);
        assert_eq!(c[(1, 1)], 1.0);
        assert_eq!(grid.jitter(), 0.0);

        let h = HurstVector::new(vec![0.75, 0.6]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![0.5, 1.0], vec![1.0]]).unwrap();
        // nodes: (0.5, 1), (1, 1)
        let c = grid.covariance();
        let want = cov_r(0.75, 0.5, 1.0) * cov_r(0.6, 1.0, 1.0);
        assert!((c[(0, 1)] - want).abs() < 1e-15);
        assert!((c[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        let h = HurstVector::new(vec![0.75]).unwrap();
        assert!(matches!(
            FieldGrid::new(&h, vec![vec![0.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            FieldGrid::new(&h, vec![vec![]]),
            Err(Error::InsufficientGrid { .. })
        ));
        assert!(FieldGrid::new(&h, vec![vec![0.0, 0.0]]).is_err());
        assert!(FieldGrid::new(&h, vec![vec![1.0, 0.5]]).is_err());
        assert!(FieldGrid::new(&h, vec![(0..5000).map(|i| i as f64).collect()]).is_err());
    }

    #[test]
    fn sampling_matches_marginal_variance_and_pins_origin() {
        let h = HurstVector::new(vec![0.75]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![0.0, 1.0]]).unwrap();
        let n = 10_000;
        let s = sample_field(&grid, n, 7);
        assert!((0..n).all(|r| s[(r, 0)] == 0.0));
        let var = (0..n).map(|r| s[(r, 1)] * s[(r, 1)]).sum::<f64>() / n as f64;
        let tol = 3.0 * (2.0 / n as f64).sqrt();
        assert!((var - 1.0).abs() < tol, "var {var}");

        // two-dimensional product variance at the (1, 1) corner
        let h = HurstVector::new(vec![0.75, 0.75]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![1.0], vec![1.0]]).unwrap();
        let s = sample_field(&grid, n, 11);
        let var = (0..n).map(|r| s[(r, 0)] * s[(r, 0)]).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < tol, "var {var}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let h = HurstVector::new(vec![0.8]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![0.5, 1.0, 2.0]]).unwrap();
        let a = sample_field(&grid, 64, 123);
        let b = sample_field(&grid, 64, 123);
        assert_eq!(a, b);
        let c = sample_field(&grid, 64, 124);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_covariance_matches_analytic_within_mc_error() {
        let h = HurstVector::new(vec![0.75]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![0.0, 0.5, 1.0, 1.5, 2.0]]).unwrap();
        let n = 100_000;
        let s = sample_field(&grid, n, 2024);
        let c = grid.covariance();
        for i in 0..5 {
            for j in i..5 {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += s[(r, i)] * s[(r, j)];
                }
                let est = acc / n as f64;
                // Var(X_i X_j) = c_ii c_jj + c_ij^2 for joint Gaussians
                let se = ((c[(i, i)] * c[(j, j)] + c[(i, j)] * c[(i, j)]) / n as f64).sqrt();
                assert!(
                    (est - c[(i, j)]).abs() <= 3.0 * se + 1e-12,
                    "entry ({i},{j}): {est} vs {}",
                    c[(i, j)]
                );
            }
        }
    }

    #[test]
    fn inner_product_of_unit_indicator_is_fbm_variance() {
        let one = |_: &[f64]| 1.0;
        for h in [0.75, 0.6] {
            let hv = HurstVector::new(vec![h]).unwrap();
            let v = inner_product_h(one, (&[0.0], &[1.0]), one, (&[0.0], &[1.0]), &hv, 1).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "H={h}: {v}");
        }
    }

    #[test]
    fn inner_product_disjoint_supports_matches_increment_covariance() {
        let one = |_: &[f64]| 1.0;
        let hv = HurstVector::new(vec![0.75]).unwrap();
        let v = inner_product_h(one, (&[0.0], &[1.0]), one, (&[2.0], &[3.0]), &hv, 1).unwrap();
        // E[(W(1)-W(0))(W(3)-W(2))] = ½(3^{2H} − 2·2^{2H} + 1)
        let want = 0.5 * (3f64.powf(1.5) - 2.0 * 2f64.powf(1.5) + 1.0);
        assert!((want - 0.26964908660712584).abs() < 1e-15);
        assert!((v - want).abs() < 1e-6, "{v} vs {want}");
    }

    #[test]
    fn inner_product_reproduces_covariance_on_rectangles() {
        let one = |_: &[f64]| 1.0;
        let hv = HurstVector::new(vec![0.7]).unwrap();
        for a in [0.5, 1.0, 2.0] {
            for b in [0.5, 1.0, 2.0] {
                let v =
                    inner_product_h(one, (&[0.0], &[a]), one, (&[0.0], &[b]), &hv, 1).unwrap();
                let want = cov_r(0.7, a, b);
                assert!((v - want).abs() < 1e-6, "(a,b)=({a},{b}): {v} vs {want}");
            }
        }
    }

    #[test]
    fn inner_product_is_positive_semidefinite() {
        let hv = HurstVector::new(vec![0.8]).unwrap();
        let f1 = |u: &[f64]| u[0] - 0.3;
        let v = inner_product_h(f1, (&[0.0], &[1.0]), f1, (&[0.0], &[1.0]), &hv, 1).unwrap();
        assert!(v >= 0.0, "sign-changing linear: {v}");
        let f2 = |u: &[f64]| (3.0 * u[0]).sin();
        let v = inner_product_h(f2, (&[0.0], &[1.0]), f2, (&[0.0], &[1.0]), &hv, 1).unwrap();
        assert!(v >= 0.0, "oscillatory: {v}");
    }

    #[test]
    fn inner_product_two_pair_dimensions_smoke() {
        // indicator of the unit square against itself: E[W^H(1,1)^2] = 1
        let one = |_: &[f64]| 1.0;
        let hv = HurstVector::new(vec![0.75, 0.6]).unwrap();
        let v = inner_product_h(
            one,
            (&[0.0, 0.0], &[1.0, 1.0]),
            one,
            (&[0.0, 0.0], &[1.0, 1.0]),
            &hv,
            1,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 2e-3, "{v}");
    }

    #[test]
    fn inner_product_rejects_large_dimension_and_bad_boxes() {
        let one = |_: &[f64]| 1.0;
        let hv = HurstVector::new(vec![0.75]).unwrap();
        assert!(matches!(
            inner_product_h(
                one,
                (&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]),
                one,
                (&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]),
                &hv,
                3
            ),
            Err(Error::DimensionTooLarge { dims: 3, max: 2 })
        ));
        assert!(inner_product_h(one, (&[0.0], &[1.0]), one, (&[1.0], &[1.0]), &hv, 1).is_err());
        assert!(inner_product_h(one, (&[0.0, 1.0], &[1.0, 2.0]), one, (&[0.0], &[1.0]), &hv, 1)
            .is_err());
        let low = HurstVector::new(vec![0.5]).unwrap();
        assert!(inner_product_h(one, (&[0.0], &[1.0]), one, (&[0.0], &[1.0]), &low, 1).is_err());
    }

    #[test]
    fn csv_export_round_trips() {
        let h = HurstVector::new(vec![0.75, 0.6]).unwrap();
        let grid = FieldGrid::new(&h, vec![vec![0.0, 1.0], vec![2.0]]).unwrap();
        let s = sample_field(&grid, 3, 5);
        let csv = samples_csv(&grid, &s);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "0 2,1 2");
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(row.len(), 2);
        assert_eq!(row[0], s[(0, 0)]);
        assert_eq!(row[1], s[(0, 1)]);
        assert_eq!(csv.lines().count(), 4);
    }
}
