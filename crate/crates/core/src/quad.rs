//! Gauss–Legendre quadrature, barycentric differentiation matrices, and the
//! periodic spectral second-derivative matrix.
//!
//! The transverse direction of a sphere suspension carries the Legendre
//! operator −d/dz[(1−z²) d/dz]. On Gauss nodes its divergence-form
//! discretization is exact on polynomials: N-point quadrature integrates
//! degree 2N−1, and the factor 1−z² vanishes at the endpoints, so no boundary
//! rows are ever assembled.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Value and derivative of the Legendre polynomial P_n at `x`.
///
/// Three-term recurrence; the derivative uses
/// (x²−1) P_n' = n (x P_n − P_{n−1}), with the closed form
/// P_n'(±1) = (±1)^{n−1} n(n+1)/2 on the boundary.
pub fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm1 = 1.0; // P_{k−1}
    let mut p = x; // P_k
    for k in 2..=n {
        let kf = k as f64;
        let pn = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * pm1) / kf;
        pm1 = p;
        p = pn;
    }
    let nf = n as f64;
    let denom = x * x - 1.0;
    let dp = if denom.abs() > 1e-12 {
        nf * (x * p - pm1) / denom
    } else {
        let sign: f64 = if x > 0.0 { 1.0 } else { -1.0 };
        sign.powi(n as i32 - 1) * nf * (nf + 1.0) / 2.0
    };
    (p, dp)
}

/// Gauss–Legendre nodes (ascending) and weights on [−1, 1].
///
/// Newton iteration from the Chebyshev-like initial guess; nodes come out
/// symmetric by construction and the weights sum to 2 up to rounding.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n / 2 {
        // i-th root counted from +1 downwards
        let mut xi = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..60 {
            let (p, d) = legendre_eval(n, xi);
            dp = d;
            let dx = p / d;
            xi -= dx;
            if dx.abs() <= 1e-15 * xi.abs().max(1.0) {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
        x[n - 1 - i] = xi;
        x[i] = -xi;
        w[n - 1 - i] = wi;
        w[i] = wi;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_eval(n, 0.0);
        x[n / 2] = 0.0;
        w[n / 2] = 2.0 / (dp * dp);
    }
    (x, w)
}

/// Barycentric interpolation weights for Gauss–Legendre nodes, up to an
/// irrelevant common factor: λ_i ∝ (−1)^i √((1−x_i²) w_i).
///
/// The closed form stays scaled near 1 for any n, unlike the defining product
/// Π (x_i − x_j), which over/underflows beyond a few dozen nodes.
pub fn gl_barycentric_weights(nodes: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(nodes.len(), weights.len());
    nodes
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (&x, &w))| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * ((1.0 - x * x) * w).sqrt()
        })
        .collect()
}

/// First-derivative collocation matrix for the Lagrange basis on `nodes`.
///
/// D_ij = (λ_j/λ_i)/(x_i − x_j) off the diagonal; the diagonal is the negated
/// row sum so that constants differentiate to exactly zero.
pub fn differentiation_matrix(nodes: &[f64], bary: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    assert_eq!(n, bary.len());
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Spectral second-derivative matrix on n uniform points of a circle with the
/// given circumference. Requires even n ≥ 4.
///
/// Entries for the canonical period 2π (h = 2π/n):
/// diagonal −π²/(3h²) − 1/6, off-diagonal −(−1)^k / (2 sin²(kh/2)) with
/// k = i−j; the matrix is symmetric circulant with eigenvalues −k² for
/// |k| ≤ n/2, rescaled by (2π/L)² for circumference L.
pub fn fourier_d2(n: usize, circumference: f64) -> Result<DMatrix<f64>> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "fourier_d2 needs an even node count >= 4, got {n}"
        )));
    }
    if !(circumference > 0.0) || !circumference.is_finite() {
        return Err(Error::InvalidInput(format!(
            "fourier_d2 needs a positive circumference, got {circumference}"
        )));
    }
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let scale = (2.0 * std::f64::consts::PI / circumference).powi(2);
    let diag = -std::f64::consts::PI.powi(2) / (3.0 * h * h) - 1.0 / 6.0;
    let mut d2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                d2[(i, j)] = scale * diag;
            } else {
                let k = i as isize - j as isize;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let s = (k as f64 * h / 2.0).sin();
                d2[(i, j)] = scale * (-sign / (2.0 * s * s));
            }
        }
    }
    Ok(d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_order_nodes_match_closed_forms() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(x[0], -r, epsilon = 1e-13);
        assert_abs_diff_eq!(x[1], r, epsilon = 1e-13);
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-13);

        let (x, w) = gauss_legendre(3);
        assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(x[2], (3f64 / 5.0).sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(w[1], 8.0 / 9.0, epsilon = 1e-13);
        assert_abs_diff_eq!(w[2], 5.0 / 9.0, epsilon = 1e-13);
    }

    #[test]
    fn quadrature_exact_through_degree_2n_minus_1() {
        let n = 8;
        let (x, w) = gauss_legendre(n);
        for k in 0..2 * n {
            let num: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(k as i32)).sum();
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert_abs_diff_eq!(num, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn large_order_rule_is_sane() {
        let n = 512;
        let (x, w) = gauss_legendre(n);
        let sum: f64 = w.iter().sum();
        assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-12);
        for i in 0..n {
            assert!(x[i].abs() < 1.0 && w[i] > 0.0);
            if i > 0 {
                assert!(x[i] > x[i - 1]);
            }
            assert_abs_diff_eq!(x[i], -x[n - 1 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn closed_form_barycentric_weights_match_product_formula() {
        let n = 24;
        let (x, w) = gauss_legendre(n);
        let bary = gl_barycentric_weights(&x, &w);
        // Defining product, normalized against node 0 to cancel the common factor.
        let product = |i: usize| -> f64 {
            let mut v = 1.0;
            for j in 0..n {
                if j != i {
                    v *= x[i] - x[j];
                }
            }
            1.0 / v
        };
        let p0 = product(0);
        for i in 0..n {
            assert_abs_diff_eq!(bary[i] / bary[0], product(i) / p0, epsilon = 1e-10);
        }
    }

    #[test]
    fn differentiation_matrix_exact_on_polynomials() {
        let n = 16;
        let (x, w) = gauss_legendre(n);
        let d = differentiation_matrix(&x, &gl_barycentric_weights(&x, &w));
        let f: Vec<f64> = x.iter().map(|&z| z.powi(5) - 3.0 * z * z).collect();
        for i in 0..n {
            let df: f64 = (0..n).map(|j| d[(i, j)] * f[j]).sum();
            assert_abs_diff_eq!(df, 5.0 * x[i].powi(4) - 6.0 * x[i], epsilon = 1e-10);
        }
        // constants are in the kernel by construction
        for i in 0..n {
            let row: f64 = (0..n).map(|j| d[(i, j)]).sum();
            assert_abs_diff_eq!(row, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn squared_differentiation_matrix_gives_second_derivatives() {
        let n = 20;
        let (x, w) = gauss_legendre(n);
        let d = differentiation_matrix(&x, &gl_barycentric_weights(&x, &w));
        let d2 = &d * &d;
        let f: Vec<f64> = x.iter().map(|&z| z.powi(4)).collect();
        for i in 0..n {
            let v: f64 = (0..n).map(|j| d2[(i, j)] * f[j]).sum();
            assert_abs_diff_eq!(v, 12.0 * x[i] * x[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn fourier_d2_reproduces_circle_modes() {
        let n = 32;
        let l = 2.0 * std::f64::consts::PI;
        let d2 = fourier_d2(n, l).unwrap();
        let h = l / n as f64;
        for &k in &[1usize, 3, 5] {
            let f: Vec<f64> = (0..n).map(|j| (k as f64 * j as f64 * h).cos()).collect();
            for i in 0..n {
                let v: f64 = (0..n).map(|j| d2[(i, j)] * f[j]).sum();
                let expect = -(k as f64 * k as f64) * (k as f64 * i as f64 * h).cos();
                assert_abs_diff_eq!(v, expect, epsilon = 1e-10);
            }
        }
        // symmetry and constant kernel
        for i in 0..n {
            let row: f64 = (0..n).map(|j| d2[(i, j)]).sum();
            assert_abs_diff_eq!(row, 0.0, epsilon = 1e-9);
            for j in 0..i {
                assert_abs_diff_eq!(d2[(i, j)], d2[(j, i)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fourier_d2_scales_with_circumference() {
        let n = 16;
        let d2 = fourier_d2(n, 1.0).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        let f: Vec<f64> = (0..n).map(|j| (two_pi * j as f64 / n as f64).cos()).collect();
        for i in 0..n {
            let v: f64 = (0..n).map(|j| d2[(i, j)] * f[j]).sum();
            assert_abs_diff_eq!(v, -two_pi * two_pi * f[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn fourier_d2_rejects_bad_sizes() {
        assert!(fourier_d2(7, 1.0).is_err());
        assert!(fourier_d2(2, 1.0).is_err());
        assert!(fourier_d2(8, 0.0).is_err());
    }
}
