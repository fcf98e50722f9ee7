//! Suspension-foliation models.
//!
//! Each model is a fiber `F x [0,1]` with the ends glued by an irrational
//! rotation of `F`; the `[0,1]` coordinate `s` sweeps out one-dimensional
//! leaves. Three fibers are built in:
//!
//! - torus: `F = T^2` with coordinates (ψ, θ), flat product metric, the glue
//!   rotating θ. Leaf closures are the 2-tori {ψ = const}; a single stratum.
//! - sphere: `F = S^2` in cylindrical coordinates (z, θ), round metric
//!   `dz²/(1−z²) + (1−z²)dθ²`, the glue rotating θ. Generic leaf closures are
//!   the 2-tori {z = const}; the two poles give closed leaves, a second
//!   stratum of closure dimension 1.
//! - product: `F = X x S^2` with `X` a product of circles of prescribed
//!   lengths, the glue acting on the sphere factor only. Strata mirror the
//!   sphere's, with the `X` coordinates along for the ride.
//!
//! The rotation angle is symbolic: orbit closures are declared from
//! irrationality, never computed from a floating-point angle, and a rational
//! rotation is rejected at build time because its orbit closures would be
//! finite and the stratification below would be wrong.
//!
//! Coordinate conventions: ψ, θ ∈ [0, 2π), s ∈ [0, 1), z ∈ [−1, 1], and each
//! product-factor coordinate x_i ∈ [0, ℓ_i). The volume density is 1 in these
//! coordinates for every built-in model (for the sphere that is the
//! archimedean z-projection identity), so coordinate cells measure volume.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Torus,
    Sphere,
    Product,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Torus => "torus-suspension",
            ModelKind::Sphere => "sphere-suspension",
            ModelKind::Product => "product-suspension",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "torus-suspension" => Ok(ModelKind::Torus),
            "sphere-suspension" => Ok(ModelKind::Sphere),
            "product-suspension" => Ok(ModelKind::Product),
            other => Err(Error::InvalidModel(format!("unknown model kind {other:?}"))),
        }
    }
}

/// How the gluing rotation is specified. Only symbolically irrational
/// rotations produce the dense orbit closures the rest of the crate assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSpec {
    /// An irrational angle, kept symbolic; never evaluated numerically.
    Irrational,
    /// A rational multiple num/den of the full turn. Always rejected.
    Rational { num: i64, den: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    IrrationalSymbolic,
}

/// Serializable description of a model; the only on-disk format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub kind: String,
    #[serde(default)]
    pub factor_lengths: Vec<f64>,
}

impl From<SuspensionModel> for ModelDescriptor {
    fn from(m: SuspensionModel) -> Self {
        ModelDescriptor {
            kind: m.kind.as_str().to_string(),
            factor_lengths: m.factor_lengths,
        }
    }
}

impl TryFrom<ModelDescriptor> for SuspensionModel {
    type Error = Error;
    fn try_from(d: ModelDescriptor) -> Result<Self> {
        SuspensionModel::build(ModelKind::parse(&d.kind)?, &d.factor_lengths, RotationSpec::Irrational)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "ModelDescriptor", try_from = "ModelDescriptor")]
pub struct SuspensionModel {
    pub kind: ModelKind,
    /// Leaf dimension; always 1 for suspensions of a single flow direction.
    pub leaf_dim: usize,
    /// Codimension of the foliation (transverse dimension).
    pub codim: usize,
    pub total_dim: usize,
    pub rotation_mode: RotationMode,
    /// Circle lengths of the `X` factor; empty unless kind = Product.
    pub factor_lengths: Vec<f64>,
    /// The built-in metrics make every leaf geodesic, so the mean curvature
    /// form vanishes identically and is in particular basic.
    pub mean_curvature_is_basic: bool,
}

impl SuspensionModel {
    pub fn build(kind: ModelKind, factor_lengths: &[f64], rotation: RotationSpec) -> Result<Self> {
        if let RotationSpec::Rational { num, den } = rotation {
            return Err(Error::InvalidModel(format!(
                "rational rotation {num}/{den}: orbit closures would be finite, not a suspension model in this sense"
            )));
        }
        match kind {
            ModelKind::Torus | ModelKind::Sphere => {
                if !factor_lengths.is_empty() {
                    return Err(Error::InvalidModel(format!(
                        "{} takes no factor lengths",
                        kind.as_str()
                    )));
                }
            }
            ModelKind::Product => {
                if factor_lengths.is_empty() {
                    return Err(Error::InvalidModel(
                        "product-suspension needs at least one circle length".into(),
                    ));
                }
                for &l in factor_lengths {
                    if !(l.is_finite() && l > 0.0) {
                        return Err(Error::InvalidModel(format!("bad circle length {l}")));
                    }
                }
            }
        }
        let d = factor_lengths.len();
        let codim = match kind {
            ModelKind::Torus | ModelKind::Sphere => 2,
            ModelKind::Product => 2 + d,
        };
        Ok(SuspensionModel {
            kind,
            leaf_dim: 1,
            codim,
            total_dim: 1 + codim,
            rotation_mode: RotationMode::IrrationalSymbolic,
            factor_lengths: factor_lengths.to_vec(),
            mean_curvature_is_basic: true,
        })
    }

    pub fn torus() -> Self {
        Self::build(ModelKind::Torus, &[], RotationSpec::Irrational).unwrap()
    }

    pub fn sphere() -> Self {
        Self::build(ModelKind::Sphere, &[], RotationSpec::Irrational).unwrap()
    }

    pub fn product(factor_lengths: &[f64]) -> Result<Self> {
        Self::build(ModelKind::Product, factor_lengths, RotationSpec::Irrational)
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        self.clone().into()
    }

    /// Number of circle factors in `X` (zero unless kind = Product).
    pub fn n_factors(&self) -> usize {
        self.factor_lengths.len()
    }

    pub fn coord_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total_dim);
        match self.kind {
            ModelKind::Torus => names.push("psi".to_string()),
            ModelKind::Sphere => names.push("z".to_string()),
            ModelKind::Product => {
                for i in 0..self.n_factors() {
                    names.push(format!("x{}", i + 1));
                }
                names.push("z".to_string());
            }
        }
        names.push("theta".to_string());
        names.push("s".to_string());
        names
    }

    /// Index of the z coordinate, when the sphere factor is present.
    pub fn z_index(&self) -> Option<usize> {
        match self.kind {
            ModelKind::Torus => None,
            ModelKind::Sphere => Some(0),
            ModelKind::Product => Some(self.n_factors()),
        }
    }

    pub fn theta_index(&self) -> usize {
        self.total_dim - 2
    }

    pub fn s_index(&self) -> usize {
        self.total_dim - 1
    }

    /// Coordinates a basic function may depend on: ψ for the torus, z for the
    /// sphere, (x_1..x_d, z) for the product.
    pub fn transverse_indices(&self) -> Vec<usize> {
        match self.kind {
            ModelKind::Torus | ModelKind::Sphere => vec![0],
            ModelKind::Product => (0..=self.n_factors()).collect(),
        }
    }

    /// Circumference of a periodic coordinate, None for z.
    pub fn period(&self, coord: usize) -> Option<f64> {
        let names = self.coord_names();
        match names[coord].as_str() {
            "psi" | "theta" => Some(TWO_PI),
            "s" => Some(1.0),
            "z" => None,
            _ => Some(self.factor_lengths[coord]),
        }
    }

    /// Total Riemannian volume, in closed form.
    pub fn volume(&self) -> f64 {
        match self.kind {
            // 2π (ψ) · 2π (θ) · 1 (s)
            ModelKind::Torus => TWO_PI * TWO_PI,
            // 4π (sphere area) · 1 (s)
            ModelKind::Sphere => 2.0 * TWO_PI,
            ModelKind::Product => 2.0 * TWO_PI * self.factor_lengths.iter().product::<f64>(),
        }
    }

    pub fn point(&self, coords: &[f64]) -> Result<ModelPoint> {
        ModelPoint::new(self, coords)
    }

    /// Stratum of the leaf closure through `p`. Lower closure dimension only
    /// occurs on the measure-zero pole set |z| = 1, so the classification is
    /// exact, not tolerance-based.
    pub fn classify_point(&self, p: &ModelPoint) -> StratumLabel {
        let max_dim = 2;
        match self.z_index() {
            None => StratumLabel { closure_dim: max_dim, is_minimal: false, is_regular: true },
            Some(zi) => {
                if p.coords[zi].abs() == 1.0 {
                    StratumLabel { closure_dim: 1, is_minimal: true, is_regular: false }
                } else {
                    StratumLabel { closure_dim: max_dim, is_minimal: false, is_regular: true }
                }
            }
        }
    }

    /// Leaf closure through `p`: which coordinates it sweeps and its dimension.
    pub fn leaf_closure(&self, p: &ModelPoint) -> LeafClosureDescriptor {
        let label = self.classify_point(p);
        let swept = if label.is_minimal {
            vec!["s".to_string()]
        } else {
            vec!["theta".to_string(), "s".to_string()]
        };
        LeafClosureDescriptor {
            base_point: p.clone(),
            dim: swept.len(),
            swept_coords: swept,
        }
    }

    /// Diagonal inverse metric and volume density at `p`, in the cube chart.
    ///
    /// Errors on |z| = 1 where the cylindrical chart components degenerate;
    /// the flow module covers the poles with its own charts.
    pub fn metric_at(&self, p: &ModelPoint) -> Result<MetricData> {
        let mut inv = vec![1.0; self.total_dim];
        if let Some(zi) = self.z_index() {
            let z = p.coords[zi];
            let a = 1.0 - z * z;
            if a <= 0.0 {
                return Err(Error::BoundaryEvaluation(format!(
                    "inverse metric components degenerate at z = {z}"
                )));
            }
            inv[zi] = a;
            inv[self.theta_index()] = 1.0 / a;
        }
        Ok(MetricData { inverse_diag: inv, volume_density: 1.0 })
    }
}

/// A point of the model in cube coordinates, reduced into the fundamental
/// domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub coords: Vec<f64>,
}

impl ModelPoint {
    pub fn new(model: &SuspensionModel, coords: &[f64]) -> Result<Self> {
        if coords.len() != model.total_dim {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, model {} needs {}",
                coords.len(),
                model.kind.as_str(),
                model.total_dim
            )));
        }
        let mut c = coords.to_vec();
        for (i, v) in c.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("coordinate {i} is {v}")));
            }
            match model.period(i) {
                Some(period) => *v = v.rem_euclid(period),
                None => {
                    if v.abs() > 1.0 {
                        return Err(Error::InvalidInput(format!("z = {v} outside [-1, 1]")));
                    }
                }
            }
        }
        Ok(ModelPoint { coords: c })
    }
}

/// Which stratum of the leaf-closure stratification a point sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StratumLabel {
    pub closure_dim: usize,
    pub is_minimal: bool,
    pub is_regular: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeafClosureDescriptor {
    pub base_point: ModelPoint,
    pub swept_coords: Vec<String>,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct MetricData {
    /// Diagonal of the inverse metric, one entry per cube coordinate.
    pub inverse_diag: Vec<f64>,
    /// √det g; identically 1 for the built-in models.
    pub volume_density: f64,
}
