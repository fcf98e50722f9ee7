//! The basic projector and the two Laplacians.
//!
//! `P` averages a function over each leaf-closure fiber with the fiber's
//! volume measure. On the tensor grids of [`crate::grid`] a fiber is a
//! contiguous (θ, s) block, so `P` is an exact weighted block mean: idempotent
//! and self-adjoint at the matrix level, not just in the limit.
//!
//! The full Laplacian of a diagonal metric with unit volume density is
//! Δ = Σ_a (−g^aa ∂²_a − (∂_a g^aa) ∂_a); for the sphere factor this is
//! −(1−z²)∂²_z + 2z ∂_z − (1−z²)^{-1} ∂²_θ − ∂²_s. It is applied with
//! second-order three-point stencils (periodic wrap on circle axes, one-sided
//! rows at the two extreme z nodes).
//!
//! The basic Laplacian acts on transverse functions. Along z it is assembled
//! in divergence form −d/dz[(1−z²) d/dz] on the Gauss–Legendre nodes with the
//! Lagrange differentiation matrix: quadrature exactness plus the vanishing of
//! 1−z² at ±1 make this the exact Galerkin operator on polynomials, with no
//! boundary rows. Along circle axes it is the periodic second difference.
//!
//! The two routes are kept deliberately independent. The commutation identity
//! Δ_B P = P Δ then has a nonzero discrete residual that measures the
//! second-order truncation of the full-Laplacian stencils; it converges at
//! O(h²) for smooth non-polynomial data and vanishes to rounding on
//! quadratics, where both routes are exact.

use crate::error::Result;
use crate::grid::{BasicGridFunction, Grid, GridFunction};
use crate::quad;
use nalgebra::DMatrix;

/// Normalized fiber weights (θ ⊗ s), summing to 1.
fn fiber_weights(grid: &Grid) -> Vec<f64> {
    let wt = &grid.axes[grid.model.theta_index()].weights;
    let ws = &grid.axes[grid.model.s_index()].weights;
    let mut fw = Vec::with_capacity(wt.len() * ws.len());
    for &a in wt {
        for &b in ws {
            fw.push(a * b);
        }
    }
    let total: f64 = fw.iter().sum();
    for v in &mut fw {
        *v /= total;
    }
    fw
}

/// Volume-weighted average over each leaf-closure fiber.
pub fn project_basic(grid: &Grid, f: &GridFunction) -> Result<BasicGridFunction> {
    grid.check(f)?;
    let fiber = grid.fiber_len();
    let fw = fiber_weights(grid);
    let values = f
        .values
        .chunks_exact(fiber)
        .map(|block| block.iter().zip(&fw).map(|(v, w)| v * w).sum())
        .collect();
    Ok(BasicGridFunction { values })
}

/// Extend a basic function to the full grid, constant on each fiber.
pub fn embed_basic(grid: &Grid, b: &BasicGridFunction) -> Result<GridFunction> {
    grid.check_basic(b)?;
    let fiber = grid.fiber_len();
    let mut values = Vec::with_capacity(grid.len());
    for &v in &b.values {
        values.extend(std::iter::repeat(v).take(fiber));
    }
    Ok(GridFunction { values })
}

/// P as an endomorphism of grid functions: embed ∘ project.
pub fn apply_projector(grid: &Grid, f: &GridFunction) -> Result<GridFunction> {
    embed_basic(grid, &project_basic(grid, f)?)
}

/// True when every divided difference along the closure directions (θ and s)
/// stays below `tol` in sup norm.
pub fn is_basic(grid: &Grid, f: &GridFunction, tol: f64) -> Result<bool> {
    grid.check(f)?;
    let dims = grid.dims();
    let strides = grid.strides();
    for axis in [grid.model.theta_index(), grid.model.s_index()] {
        let n = dims[axis];
        let stride = strides[axis];
        let h = grid.axes[axis].period.unwrap() / n as f64;
        let block = n * stride;
        for base in (0..grid.len()).step_by(block) {
            for inner in 0..stride {
                let line = base + inner;
                for k in 0..n {
                    let here = f.values[line + k * stride];
                    let next = f.values[line + ((k + 1) % n) * stride];
                    if ((next - here) / h).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Lagrange three-point derivative weights: first and second derivative of the
/// quadratic through (x0, x1, x2), evaluated at t.
fn three_point(x0: f64, x1: f64, x2: f64, t: f64) -> ([f64; 3], [f64; 3]) {
    let d0 = (x0 - x1) * (x0 - x2);
    let d1 = (x1 - x0) * (x1 - x2);
    let d2 = (x2 - x0) * (x2 - x1);
    (
        [(2.0 * t - x1 - x2) / d0, (2.0 * t - x0 - x2) / d1, (2.0 * t - x0 - x1) / d2],
        [2.0 / d0, 2.0 / d1, 2.0 / d2],
    )
}

/// Per-node z stencil: node offsets and combined weights for
/// −(1−z²) f'' + 2z f'.
fn z_stencils(nodes: &[f64]) -> Vec<([usize; 3], [f64; 3])> {
    let n = nodes.len();
    (0..n)
        .map(|k| {
            let (i, j, l) = if k == 0 {
                (0, 1, 2)
            } else if k == n - 1 {
                (n - 3, n - 2, n - 1)
            } else {
                (k - 1, k, k + 1)
            };
            let z = nodes[k];
            let (first, second) = three_point(nodes[i], nodes[j], nodes[l], z);
            let a = 1.0 - z * z;
            let mut w = [0.0; 3];
            for m in 0..3 {
                w[m] = -a * second[m] + 2.0 * z * first[m];
            }
            ([i, j, l], w)
        })
        .collect()
}

/// Apply the full Laplacian with second-order stencils.
pub fn apply_full_laplacian(grid: &Grid, f: &GridFunction) -> Result<GridFunction> {
    grid.check(f)?;
    let dims = grid.dims();
    let strides = grid.strides();
    let len = grid.len();
    let mut out = vec![0.0; len];
    let z_axis = grid.model.z_index();
    let theta_axis = grid.model.theta_index();

    for axis in 0..dims.len() {
        let n = dims[axis];
        let stride = strides[axis];
        let block = n * stride;
        if Some(axis) == z_axis {
            let stencils = z_stencils(&grid.axes[axis].nodes);
            for base in (0..len).step_by(block) {
                for inner in 0..stride {
                    let line = base + inner;
                    for (k, (idx, w)) in stencils.iter().enumerate() {
                        let v = w[0] * f.values[line + idx[0] * stride]
                            + w[1] * f.values[line + idx[1] * stride]
                            + w[2] * f.values[line + idx[2] * stride];
                        out[line + k * stride] += v;
                    }
                }
            }
        } else {
            // periodic circle direction: contribution −g^aa (f₊ − 2f + f₋)/h²,
            // where g^aa is 1/(1−z²) for θ over a sphere factor and 1 otherwise
            let h = grid.axes[axis].period.unwrap() / n as f64;
            let inv_h2 = 1.0 / (h * h);
            for base in (0..len).step_by(block) {
                for inner in 0..stride {
                    let line = base + inner;
                    let coef = if axis == theta_axis && z_axis.is_some() {
                        let zi = z_axis.unwrap();
                        let iz = (line / strides[zi]) % dims[zi];
                        let z = grid.axes[zi].nodes[iz];
                        -1.0 / (1.0 - z * z)
                    } else {
                        -1.0
                    };
                    for k in 0..n {
                        let prev = f.values[line + ((k + n - 1) % n) * stride];
                        let here = f.values[line + k * stride];
                        let next = f.values[line + ((k + 1) % n) * stride];
                        out[line + k * stride] += coef * inv_h2 * (next - 2.0 * here + prev);
                    }
                }
            }
        }
    }
    Ok(GridFunction { values: out })
}

/// Divergence-form Legendre operator on the given Gauss nodes:
/// u ↦ diag(w)^{-1} Dᵀ diag(w (1−z²)) D u.
pub fn legendre_divergence_matrix(nodes: &[f64], weights: &[f64]) -> DMatrix<f64> {
    let bary = quad::gl_barycentric_weights(nodes, weights);
    let d = quad::differentiation_matrix(nodes, &bary);
    let n = nodes.len();
    let mut wa = DMatrix::zeros(n, n);
    for i in 0..n {
        wa[(i, i)] = weights[i] * (1.0 - nodes[i] * nodes[i]);
    }
    let k = d.transpose() * wa * &d;
    let mut out = k;
    for i in 0..n {
        let wi = weights[i];
        for j in 0..n {
            out[(i, j)] /= wi;
        }
    }
    out
}

/// Apply the basic Laplacian on the transverse grid.
pub fn apply_basic_laplacian(grid: &Grid, b: &BasicGridFunction) -> Result<BasicGridFunction> {
    grid.check_basic(b)?;
    let tidx = grid.model.transverse_indices();
    let dims: Vec<usize> = tidx.iter().map(|&i| grid.axes[i].nodes.len()).collect();
    let len: usize = dims.iter().product();
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut out = vec![0.0; len];
    for (t, &axis) in tidx.iter().enumerate() {
        let n = dims[t];
        let stride = strides[t];
        let block = n * stride;
        if Some(axis) == grid.model.z_index() {
            let a = &grid.axes[axis];
            let m = legendre_divergence_matrix(&a.nodes, &a.weights);
            let mut line_in = vec![0.0; n];
            for base in (0..len).step_by(block) {
                for inner in 0..stride {
                    let line = base + inner;
                    for k in 0..n {
                        line_in[k] = b.values[line + k * stride];
                    }
                    for k in 0..n {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += m[(k, j)] * line_in[j];
                        }
                        out[line + k * stride] += acc;
                    }
                }
            }
        } else {
            // flat circle direction: −∂² with periodic wrap
            let h = grid.axes[axis].period.unwrap() / n as f64;
            let inv_h2 = 1.0 / (h * h);
            for base in (0..len).step_by(block) {
                for inner in 0..stride {
                    let line = base + inner;
                    for k in 0..n {
                        let prev = b.values[line + ((k + n - 1) % n) * stride];
                        let here = b.values[line + k * stride];
                        let next = b.values[line + ((k + 1) % n) * stride];
                        out[line + k * stride] -= inv_h2 * (next - 2.0 * here + prev);
                    }
                }
            }
        }
    }
    Ok(BasicGridFunction { values: out })
}

/// Volume-weighted L² norm of Δ_B(Pf) − P(Δf) over the leaf-closure space.
pub fn commutation_residual(grid: &Grid, f: &GridFunction) -> Result<f64> {
    let left = apply_basic_laplacian(grid, &project_basic(grid, f)?)?;
    let right = project_basic(grid, &apply_full_laplacian(grid, f)?)?;
    let tidx = grid.model.transverse_indices();
    let fiber_vol: f64 = [grid.model.theta_index(), grid.model.s_index()]
        .iter()
        .map(|&i| grid.axes[i].weights.iter().sum::<f64>())
        .product();
    let dims: Vec<usize> = tidx.iter().map(|&i| grid.axes[i].nodes.len()).collect();
    let mut acc = 0.0;
    for flat in 0..left.values.len() {
        let mut rem = flat;
        let mut w = fiber_vol;
        for k in (0..dims.len()).rev() {
            w *= grid.axes[tidx[k]].weights[rem % dims[k]];
            rem /= dims[k];
        }
        let d = left.values[flat] - right.values[flat];
        acc += w * d * d;
    }
    Ok(acc.sqrt())
}
