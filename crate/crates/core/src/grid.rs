//! Tensor-product grids weighted by the Riemannian volume.
//!
//! Periodic coordinates get uniform nodes with the trapezoid weight (exact for
//! periodic smooth functions); the z coordinate of a sphere factor gets
//! Gauss–Legendre nodes and weights, which keep every node strictly inside
//! (−1, 1) and make polynomial quadrature exact. Since the volume density of
//! every built-in model is 1 in cube coordinates, the product of the per-axis
//! weights is the volume measure, and the weights of a grid sum to the model
//! volume up to rounding.
//!
//! Grid data is stored row-major in axis order; the leaf-closure directions
//! (θ, s) are always the two trailing axes, so a leaf-closure fiber is one
//! contiguous block and a basic function is indexed by the leading
//! (transverse) axes alone.

use crate::error::{Error, Result};
use crate::model::SuspensionModel;
use crate::quad;

#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub periodic: bool,
    /// Circumference for periodic axes.
    pub period: Option<f64>,
}

impl Axis {
    fn uniform_periodic(name: &str, n: usize, period: f64) -> Axis {
        let h = period / n as f64;
        Axis {
            name: name.to_string(),
            nodes: (0..n).map(|k| k as f64 * h).collect(),
            weights: vec![h; n],
            periodic: true,
            period: Some(period),
        }
    }

    fn gauss(name: &str, n: usize) -> Axis {
        let (nodes, weights) = quad::gauss_legendre(n);
        Axis { name: name.to_string(), nodes, weights, periodic: false, period: None }
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub model: SuspensionModel,
    pub axes: Vec<Axis>,
}

impl Grid {
    /// Build a grid with `sizes[i]` nodes along coordinate i (model axis
    /// order). Every axis needs at least 4 nodes for the stencils downstream.
    pub fn new(model: &SuspensionModel, sizes: &[usize]) -> Result<Grid> {
        if sizes.len() != model.total_dim {
            return Err(Error::InvalidInput(format!(
                "{} sizes for a {}-coordinate model",
                sizes.len(),
                model.total_dim
            )));
        }
        if let Some(&n) = sizes.iter().find(|&&n| n < 4) {
            return Err(Error::GridTooCoarse(format!("axis with {n} nodes, need at least 4")));
        }
        let names = model.coord_names();
        let axes = names
            .iter()
            .enumerate()
            .map(|(i, name)| match model.period(i) {
                Some(p) => Axis::uniform_periodic(name, sizes[i], p),
                None => Axis::gauss(name, sizes[i]),
            })
            .collect();
        Ok(Grid { model: model.clone(), axes })
    }

    /// Cube grid: the same node count along every axis.
    pub fn cube(model: &SuspensionModel, n: usize) -> Result<Grid> {
        Self::new(model, &vec![n; model.total_dim])
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides, axis order.
    pub fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut s = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    }

    /// Number of transverse (basic) nodes — the leading axes.
    pub fn transverse_len(&self) -> usize {
        self.model
            .transverse_indices()
            .iter()
            .map(|&i| self.axes[i].nodes.len())
            .product()
    }

    /// Nodes per leaf-closure fiber (the trailing θ, s block).
    pub fn fiber_len(&self) -> usize {
        let nt = self.axes[self.model.theta_index()].nodes.len();
        let ns = self.axes[self.model.s_index()].nodes.len();
        nt * ns
    }

    /// Coordinates of the node with the given flat index.
    pub fn node_coords(&self, mut flat: usize) -> Vec<f64> {
        let strides = self.strides();
        let mut c = Vec::with_capacity(self.axes.len());
        for (axis, stride) in self.axes.iter().zip(&strides) {
            let k = flat / stride;
            flat %= stride;
            c.push(axis.nodes[k]);
        }
        c
    }

    /// Volume weight of the node with the given flat index.
    pub fn node_weight(&self, mut flat: usize) -> f64 {
        let strides = self.strides();
        let mut w = 1.0;
        for (axis, stride) in self.axes.iter().zip(&strides) {
            let k = flat / stride;
            flat %= stride;
            w *= axis.weights[k];
        }
        w
    }

    /// Volume-weighted inner product of two node vectors.
    pub fn inner(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.node_weight(i) * f.values[i] * g.values[i];
        }
        Ok(acc)
    }

    pub fn norm(&self, f: &GridFunction) -> Result<f64> {
        Ok(self.inner(f, f)?.sqrt())
    }

    pub fn check(&self, f: &GridFunction) -> Result<()> {
        if f.values.len() != self.len() {
            return Err(Error::GridMismatch(format!(
                "function has {} values, grid has {} nodes",
                f.values.len(),
                self.len()
            )));
        }
        Ok(())
    }

    pub fn check_basic(&self, f: &BasicGridFunction) -> Result<()> {
        if f.values.len() != self.transverse_len() {
            return Err(Error::GridMismatch(format!(
                "basic function has {} values, grid has {} transverse nodes",
                f.values.len(),
                self.transverse_len()
            )));
        }
        Ok(())
    }
}

/// One real value per grid node, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid) -> GridFunction {
        GridFunction { values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        let values = (0..grid.len()).map(|i| f(&grid.node_coords(i))).collect();
        GridFunction { values }
    }
}

/// One real value per transverse node: a function of the leaf-closure space.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicGridFunction {
    pub values: Vec<f64>,
}

impl BasicGridFunction {
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> BasicGridFunction {
        // transverse axes are the leading ones; enumerate their product
        let tidx = grid.model.transverse_indices();
        let dims: Vec<usize> = tidx.iter().map(|&i| grid.axes[i].nodes.len()).collect();
        let total: usize = dims.iter().product();
        let mut values = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut coords = vec![0.0; dims.len()];
            for k in (0..dims.len()).rev() {
                coords[k] = grid.axes[tidx[k]].nodes[rem % dims[k]];
                rem /= dims[k];
            }
            values.push(f(&coords));
        }
        BasicGridFunction { values }
    }
}
