//! The basic spectrum: closed-form tables and numeric eigensolves, reconciled.
//!
//! Closed forms: the flat model has λ_k = k² (circle modes in ψ), the sphere
//! model has λ_k = k(k+1) (Legendre modes in z), and product models sum a
//! circle eigenvalue per flat factor with one sphere eigenvalue.
//!
//! Two multiplicity conventions are carried side by side. `BasicCount` counts
//! mode classes of the transverse operator: one per k, or one per index tuple
//! on products. `AmbientCount` books the eigenvalue multiplicity upstairs:
//! 2k+1 on the sphere, 1 or 2 on circles, and products thereof. Singularity
//! locations downstream never depend on the choice; amplitudes do, so
//! everything that consumes a spectrum records which convention fed it.
//!
//! Numeric route: the Legendre operator is assembled in symmetric divergence
//! form Dᵀ diag(w(1−z²)) D on Gauss nodes and similarity-scaled by diag(√w),
//! so a symmetric eigensolver applies and no boundary conditions are imposed
//! (the coefficient 1−z² vanishes at the endpoints on its own). Quadrature
//! exactness makes this the Rayleigh–Ritz operator on polynomials, so the
//! first grid_size eigenvalues come out at k(k+1) to rounding. Circle factors
//! use the periodic spectral second-derivative matrix. Product spectra are
//! formed as sorted factor sums, which is exactly the spectrum of the tensor
//! discretization because the factor operators commute.

use crate::error::{Error, Result};
use crate::model::{ModelDescriptor, ModelKind, SuspensionModel, TWO_PI};
use crate::quad;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// How eigenvalue multiplicities are booked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// One count per transverse mode class (per k, or per index tuple).
    BasicCount,
    /// The eigenvalue multiplicity of the ambient manifold (2k+1 on the
    /// sphere, sin/cos pairs on circles).
    AmbientCount,
}

impl Convention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convention::BasicCount => "basic",
            Convention::AmbientCount => "ambient",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" | "basiccount" => Ok(Convention::BasicCount),
            "ambient" | "ambientcount" => Ok(Convention::AmbientCount),
            other => Err(Error::InvalidInput(format!(
                "unknown multiplicity convention '{other}' (expected basic or ambient)"
            ))),
        }
    }
}

/// Where a spectrum came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Numeric,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::Numeric => "numeric",
        }
    }
}

/// One eigenvalue with its booked multiplicity and a mode label
/// ("k3" for single-factor models, "m1.m0.k2" for products, "j5" for merged
/// numeric clusters).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub lambda: f64,
    pub multiplicity: u32,
    pub label: String,
}

/// A sorted basic spectrum for one model under one convention.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralData {
    pub model: ModelDescriptor,
    pub convention: Convention,
    pub provenance: Provenance,
    pub entries: Vec<SpectralEntry>,
}

impl SpectralData {
    /// √λ for every entry, in order.
    pub fn mu_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda.sqrt()).collect()
    }

    pub fn max_lambda(&self) -> f64 {
        self.entries.last().map(|e| e.lambda).unwrap_or(0.0)
    }

    /// Check the structural invariants: ascending λ ≥ 0 starting at the
    /// constant mode, positive multiplicities.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if self.entries[0].lambda.abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "spectrum does not start at the constant mode (λ₀ = {})",
                self.entries[0].lambda
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for e in &self.entries {
            if e.lambda < 0.0 || !e.lambda.is_finite() {
                return Err(Error::InvalidInput(format!("invalid eigenvalue {}", e.lambda)));
            }
            if e.lambda < prev {
                return Err(Error::InvalidInput("spectrum not sorted ascending".into()));
            }
            if e.multiplicity == 0 {
                return Err(Error::InvalidInput(format!("zero multiplicity at λ = {}", e.lambda)));
            }
            prev = e.lambda;
        }
        Ok(())
    }
}

fn circle_lambda(length: f64, m: u32) -> f64 {
    let f = TWO_PI * m as f64 / length;
    f * f
}

fn circle_ambient_mult(m: u32) -> u32 {
    if m == 0 {
        1
    } else {
        2
    }
}

/// Closed-form basic spectrum with modes indexed up to k_max per factor.
///
/// For products the returned list is truncated to the λ range on which it is
/// complete (below the smallest first-omitted factor mode), so no eigenvalue
/// is silently missing from the middle of the list.
pub fn analytic_spectrum(
    model: &SuspensionModel,
    k_max: u32,
    convention: Convention,
) -> Result<SpectralData> {
    let mut entries: Vec<SpectralEntry> = Vec::new();
    match model.kind {
        ModelKind::Torus => {
            for k in 0..=k_max {
                let mult = match convention {
                    Convention::BasicCount => 1,
                    Convention::AmbientCount => circle_ambient_mult(k),
                };
                entries.push(SpectralEntry {
                    lambda: (k as f64) * (k as f64),
                    multiplicity: mult,
                    label: format!("k{k}"),
                });
            }
        }
        ModelKind::Sphere => {
            for k in 0..=k_max {
                let mult = match convention {
                    Convention::BasicCount => 1,
                    Convention::AmbientCount => 2 * k + 1,
                };
                entries.push(SpectralEntry {
                    lambda: (k as f64) * (k as f64 + 1.0),
                    multiplicity: mult,
                    label: format!("k{k}"),
                });
            }
        }
        ModelKind::Product => {
            let lengths = &model.factor_lengths;
            let d = lengths.len();
            // complete below the cheapest omitted mode across all factors
            let mut cut = (k_max as f64 + 1.0) * (k_max as f64 + 2.0);
            for &l in lengths {
                cut = cut.min(circle_lambda(l, k_max + 1));
            }
            let mut tuple = vec![0u32; d];
            loop {
                let base: f64 = tuple
                    .iter()
                    .zip(lengths)
                    .map(|(&m, &l)| circle_lambda(l, m))
                    .sum();
                if base < cut {
                    for k in 0..=k_max {
                        let lambda = base + (k as f64) * (k as f64 + 1.0);
                        if lambda >= cut {
                            break;
                        }
                        let mult = match convention {
                            Convention::BasicCount => 1,
                            Convention::AmbientCount => {
                                let circ: u32 = tuple.iter().map(|&m| circle_ambient_mult(m)).product();
                                circ * (2 * k + 1)
                            }
                        };
                        let mut label = String::new();
                        for &m in &tuple {
                            label.push_str(&format!("m{m}."));
                        }
                        label.push_str(&format!("k{k}"));
                        entries.push(SpectralEntry { lambda, multiplicity: mult, label });
                    }
                }
                // odometer over the circle-mode tuple
                let mut carry = true;
                for slot in tuple.iter_mut().rev() {
                    if *slot < k_max {
                        *slot += 1;
                        carry = false;
                        break;
                    }
                    *slot = 0;
                }
                if carry {
                    break;
                }
            }
        }
    }
    entries.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then_with(|| a.label.cmp(&b.label))
    });
    let data = SpectralData {
        model: model.descriptor(),
        convention,
        provenance: Provenance::Analytic,
        entries,
    };
    data.validate()?;
    Ok(data)
}

/// The symmetrized Legendre operator diag(w)^{-1/2} Dᵀ diag(w(1−z²)) D diag(w)^{-1/2}
/// on n Gauss nodes, plus the relative asymmetry of the assembled form before
/// the explicit (K + Kᵀ)/2 cleanup (rounding-level; reported so callers can
/// assert on it).
pub fn symmetrized_legendre_operator(n: usize) -> Result<(DMatrix<f64>, f64)> {
    if n < 4 {
        return Err(Error::GridTooCoarse(format!("need at least 4 Gauss nodes, got {n}")));
    }
    let (nodes, weights) = quad::gauss_legendre(n);
    let bary = quad::gl_barycentric_weights(&nodes, &weights);
    let d = quad::differentiation_matrix(&nodes, &bary);
    let mut wa = DMatrix::zeros(n, n);
    for i in 0..n {
        wa[(i, i)] = weights[i] * (1.0 - nodes[i] * nodes[i]);
    }
    let k = d.transpose() * wa * &d;
    let mut max_entry = 0.0f64;
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_entry = max_entry.max(k[(i, j)].abs());
            max_asym = max_asym.max((k[(i, j)] - k[(j, i)]).abs());
        }
    }
    let rel_asym = max_asym / max_entry;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let sym = 0.5 * (k[(i, j)] + k[(j, i)]);
            a[(i, j)] = sym / (weights[i] * weights[j]).sqrt();
        }
    }
    Ok((a, rel_asym))
}

/// −D₂ for a circle of the given circumference (symmetric, PSD).
pub fn circle_operator(n: usize, circumference: f64) -> Result<DMatrix<f64>> {
    Ok(-quad::fourier_d2(n, circumference)?)
}

/// All eigenvalues of a symmetric PSD matrix, sorted ascending, with
/// rounding-level negatives clamped to zero.
fn sorted_eigenvalues(mat: DMatrix<f64>) -> Result<Vec<f64>> {
    let n = mat.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(mat, f64::EPSILON, 50_000)
        .ok_or_else(|| Error::SolverFailure(format!("symmetric eigensolve on {n}x{n} matrix did not converge")))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = vals.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
    for v in &mut vals {
        if *v < 0.0 {
            if *v < -1e-9 * scale {
                return Err(Error::SolverFailure(format!(
                    "discretization is indefinite: eigenvalue {v}"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(vals)
}

/// Merge a sorted eigenvalue list into (λ, multiplicity) clusters. Two values
/// land in one cluster when they agree to `rel_tol` (absolute floor of the
/// same size near zero).
fn merge_clusters(sorted: &[f64], rel_tol: f64) -> Vec<(f64, u32)> {
    let mut out: Vec<(f64, u32)> = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    let flush = |members: &mut Vec<f64>, out: &mut Vec<(f64, u32)>| {
        if !members.is_empty() {
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            out.push((mean, members.len() as u32));
            members.clear();
        }
    };
    for &v in sorted {
        if let Some(&first) = members.first() {
            if (v - first).abs() <= rel_tol * first.abs().max(1.0) {
                members.push(v);
                continue;
            }
            flush(&mut members, &mut out);
        }
        members.push(v);
    }
    flush(&mut members, &mut out);
    out
}

/// Default cluster-merge tolerance for numeric spectra.
pub const CLUSTER_REL_TOL: f64 = 1e-6;

/// Numeric basic spectrum: the first n_modes distinct eigenvalue clusters of
/// the discretized divergence-form operator, under BasicCount.
pub fn numeric_spectrum(model: &SuspensionModel, n_modes: usize, grid_size: usize) -> Result<SpectralData> {
    if n_modes == 0 {
        return Err(Error::InvalidInput("n_modes must be positive".into()));
    }
    if grid_size < 4 * n_modes {
        return Err(Error::GridTooCoarse(format!(
            "grid_size {grid_size} below the resolution heuristic 4·n_modes = {}",
            4 * n_modes
        )));
    }
    let clusters: Vec<(f64, u32)> = match model.kind {
        ModelKind::Torus => {
            let vals = sorted_eigenvalues(circle_operator(grid_size, TWO_PI)?)?;
            merge_clusters(&vals, CLUSTER_REL_TOL)
        }
        ModelKind::Sphere => {
            let (a, _) = symmetrized_legendre_operator(grid_size)?;
            let vals = sorted_eigenvalues(a)?;
            merge_clusters(&vals, CLUSTER_REL_TOL)
        }
        ModelKind::Product => {
            let mut factors: Vec<Vec<f64>> = Vec::new();
            for &l in &model.factor_lengths {
                factors.push(sorted_eigenvalues(circle_operator(grid_size, l)?)?);
            }
            let (a, _) = symmetrized_legendre_operator(grid_size)?;
            factors.push(sorted_eigenvalues(a)?);
            let sums = smallest_tensor_sums(&factors, n_modes)?;
            merge_clusters(&sums, CLUSTER_REL_TOL)
        }
    };
    let entries = clusters
        .into_iter()
        .take(n_modes)
        .enumerate()
        .map(|(j, (lambda, multiplicity))| SpectralEntry {
            lambda,
            multiplicity,
            label: format!("j{j}"),
        })
        .collect();
    let data = SpectralData {
        model: model.descriptor(),
        convention: Convention::BasicCount,
        provenance: Provenance::Numeric,
        entries,
    };
    data.validate()?;
    Ok(data)
}

/// Enough of the ascending sums Σ_f λ_f over factor eigenvalue tuples to cover
/// the first n_modes distinct clusters, with a completeness guarantee: the
/// per-factor window is widened until the n_modes-th distinct sum sits below
/// every factor's largest included eigenvalue, so no smaller sum can involve
/// an excluded mode.
fn smallest_tensor_sums(factors: &[Vec<f64>], n_modes: usize) -> Result<Vec<f64>> {
    let mut window = factors
        .iter()
        .map(|f| f.len().min((4 * n_modes).max(16)))
        .collect::<Vec<_>>();
    loop {
        let mut sums = vec![0.0f64];
        for (f, &w) in factors.iter().zip(&window) {
            let mut next = Vec::with_capacity(sums.len() * w);
            for &s in &sums {
                for &v in &f[..w] {
                    next.push(s + v);
                }
            }
            sums = next;
        }
        sums.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let clusters = merge_clusters(&sums, CLUSTER_REL_TOL);
        let needed = clusters.len().min(n_modes);
        let cut = clusters[needed - 1].0;
        let complete = factors
            .iter()
            .zip(&window)
            .all(|(f, &w)| cut <= f[w - 1] || w == f.len());
        if complete && clusters.len() >= n_modes {
            return Ok(sums);
        }
        let mut grew = false;
        for (f, w) in factors.iter().zip(window.iter_mut()) {
            if *w < f.len() {
                *w = (*w * 2).min(f.len());
                grew = true;
            }
        }
        if !grew {
            return Err(Error::GridTooCoarse(format!(
                "factor grids cannot resolve {n_modes} product modes"
            )));
        }
    }
}

/// Outcome of comparing two spectra's eigenvalue locations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareReport {
    /// Relative error per compared distinct eigenvalue, scaled by max(1, λ)
    /// so the constant mode is measured absolutely.
    pub per_mode_rel_error: Vec<f64>,
    pub max_rel_error: f64,
    pub modes_compared: usize,
    pub pass: bool,
}

/// Compare eigenvalue locations of two spectra for the same model and
/// convention. Multiplicities are deliberately not compared: the two
/// conventions book them differently and numeric clusters merge sin/cos
/// pairs, but the locations must agree regardless. Each side is first
/// collapsed to distinct eigenvalues and the overlap is compared pairwise.
pub fn spectrum_compare(a: &SpectralData, b: &SpectralData, rel_tol: f64) -> Result<CompareReport> {
    if a.convention != b.convention {
        return Err(Error::ConventionMismatch {
            left: a.convention.as_str(),
            right: b.convention.as_str(),
        });
    }
    if a.model.kind != b.model.kind || a.model.factor_lengths != b.model.factor_lengths {
        return Err(Error::InvalidInput(format!(
            "cannot compare spectra of different models ({} vs {})",
            a.model.kind, b.model.kind
        )));
    }
    let distinct = |s: &SpectralData| -> Vec<f64> {
        let lambdas: Vec<f64> = s.entries.iter().map(|e| e.lambda).collect();
        merge_clusters(&lambdas, CLUSTER_REL_TOL).into_iter().map(|(l, _)| l).collect()
    };
    let da = distinct(a);
    let db = distinct(b);
    let n = da.len().min(db.len());
    let mut errs = Vec::with_capacity(n);
    let mut max_err = 0.0f64;
    for j in 0..n {
        let e = (da[j] - db[j]).abs() / db[j].abs().max(1.0);
        max_err = max_err.max(e);
        errs.push(e);
    }
    Ok(CompareReport {
        per_mode_rel_error: errs,
        max_rel_error: max_err,
        modes_compared: n,
        pass: max_err <= rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // closed-form oracle for the sphere ladder k(k+1), frozen independently
    const SPHERE_LADDER: [f64; 21] = [
        0.0, 2.0, 6.0, 12.0, 20.0, 30.0, 42.0, 56.0, 72.0, 90.0, 110.0, 132.0, 156.0, 182.0,
        210.0, 240.0, 272.0, 306.0, 342.0, 380.0, 420.0,
    ];

    #[test]
    fn analytic_sphere_table_matches_both_conventions() {
        let m = SuspensionModel::sphere();
        let amb = analytic_spectrum(&m, 3, Convention::AmbientCount).unwrap();
        let got: Vec<(f64, u32)> = amb.entries.iter().map(|e| (e.lambda, e.multiplicity)).collect();
        assert_eq!(got, vec![(0.0, 1), (2.0, 3), (6.0, 5), (12.0, 7)]);
        let basic = analytic_spectrum(&m, 3, Convention::BasicCount).unwrap();
        assert!(basic.entries.iter().all(|e| e.multiplicity == 1));
        assert_eq!(basic.entries[2].label, "k2");
    }

    #[test]
    fn analytic_torus_table_is_the_square_ladder() {
        let m = SuspensionModel::torus();
        let amb = analytic_spectrum(&m, 3, Convention::AmbientCount).unwrap();
        let lambdas: Vec<f64> = amb.entries.iter().map(|e| e.lambda).collect();
        assert_eq!(lambdas, vec![0.0, 1.0, 4.0, 9.0]);
        let mults: Vec<u32> = amb.entries.iter().map(|e| e.multiplicity).collect();
        assert_eq!(mults, vec![1, 2, 2, 2]);
        let basic = analytic_spectrum(&m, 3, Convention::BasicCount).unwrap();
        assert!(basic.entries.iter().all(|e| e.multiplicity == 1));
    }

    #[test]
    fn analytic_product_sums_factor_modes() {
        let m = SuspensionModel::product(&[TWO_PI]).unwrap();
        let amb = analytic_spectrum(&m, 4, Convention::AmbientCount).unwrap();
        // circle of length 2π has λ_m = m²; look for m=1, k=1 at λ = 1 + 2 = 3
        let e = amb.entries.iter().find(|e| e.label == "m1.k1").unwrap();
        assert_abs_diff_eq!(e.lambda, 3.0, epsilon = 1e-14);
        assert_eq!(e.multiplicity, 2 * 3);
        let lambdas: Vec<f64> = amb.entries.iter().map(|e| e.lambda).take(6).collect();
        assert_eq!(lambdas, vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0]);
        // the m=0, k=1 entry carries only the sphere multiplicity
        let e = amb.entries.iter().find(|e| e.label == "m0.k1").unwrap();
        assert_eq!(e.multiplicity, 3);
    }

    #[test]
    fn analytic_product_truncates_where_enumeration_stops_being_complete() {
        let m = SuspensionModel::product(&[1.0]).unwrap();
        let s = analytic_spectrum(&m, 2, Convention::BasicCount).unwrap();
        // first omitted circle mode has λ = (2π·3)² ≈ 355, first omitted
        // sphere mode has λ = 12; nothing at or above 12 may be listed
        assert!(s.max_lambda() < 12.0);
        assert!(s.entries.iter().any(|e| e.label == "m0.k2"));
    }

    #[test]
    fn numeric_sphere_hits_the_legendre_ladder() {
        let s = numeric_spectrum(&SuspensionModel::sphere(), 21, 96).unwrap();
        assert_eq!(s.entries.len(), 21);
        for (e, &want) in s.entries.iter().zip(&SPHERE_LADDER) {
            let rel = (e.lambda - want).abs() / want.max(1.0);
            assert!(rel <= 1e-10, "λ = {} vs {want}, rel {rel}", e.lambda);
            assert_eq!(e.multiplicity, 1);
        }
    }

    #[test]
    fn numeric_sphere_richardson_pair_agrees_across_resolutions() {
        let coarse = numeric_spectrum(&SuspensionModel::sphere(), 12, 64).unwrap();
        let fine = numeric_spectrum(&SuspensionModel::sphere(), 12, 128).unwrap();
        for (a, b) in coarse.entries.iter().zip(&fine.entries) {
            let rel = (a.lambda - b.lambda).abs() / b.lambda.max(1.0);
            assert!(rel <= 1e-10, "resolutions disagree: {} vs {}", a.lambda, b.lambda);
        }
    }

    #[test]
    fn numeric_torus_merges_sine_cosine_pairs() {
        let s = numeric_spectrum(&SuspensionModel::torus(), 10, 64).unwrap();
        for (j, e) in s.entries.iter().enumerate() {
            let k = j as f64;
            assert_abs_diff_eq!(e.lambda, k * k, epsilon = 1e-8);
            assert_eq!(e.multiplicity, if j == 0 { 1 } else { 2 }, "mode {j}");
        }
    }

    #[test]
    fn numeric_zero_mode_has_flat_eigenvector() {
        let n = 48;
        let (a, _) = symmetrized_legendre_operator(n).unwrap();
        let eig = nalgebra::SymmetricEigen::new(a);
        let mut idx = 0;
        for i in 0..n {
            if eig.eigenvalues[i] < eig.eigenvalues[idx] {
                idx = i;
            }
        }
        assert!(eig.eigenvalues[idx].abs() <= 1e-10);
        // zero mode of the scaled operator is √w, i.e. constant after unscaling
        let (_, weights) = quad::gauss_legendre(n);
        let v = eig.eigenvectors.column(idx);
        let ratio0 = v[0] / weights[0].sqrt();
        for i in 0..n {
            assert_abs_diff_eq!(v[i] / weights[i].sqrt(), ratio0, epsilon = 1e-9);
        }
    }

    #[test]
    fn numeric_product_matches_analytic_sums() {
        let m = SuspensionModel::product(&[1.0]).unwrap();
        let num = numeric_spectrum(&m, 10, 64).unwrap();
        let ana = analytic_spectrum(&m, 12, Convention::BasicCount).unwrap();
        let report = spectrum_compare(&num, &ana, 1e-6).unwrap();
        assert!(report.pass, "max rel err {}", report.max_rel_error);
        assert!(report.modes_compared >= 10);
    }

    #[test]
    fn comparisons_enforce_convention_and_model_agreement() {
        let m = SuspensionModel::sphere();
        let a = analytic_spectrum(&m, 5, Convention::BasicCount).unwrap();
        let b = analytic_spectrum(&m, 5, Convention::AmbientCount).unwrap();
        assert!(matches!(
            spectrum_compare(&a, &b, 1e-6),
            Err(Error::ConventionMismatch { .. })
        ));
        let t = analytic_spectrum(&SuspensionModel::torus(), 5, Convention::BasicCount).unwrap();
        assert!(spectrum_compare(&a, &t, 1e-6).is_err());
        let same = spectrum_compare(&a, &a, 0.0).unwrap();
        assert_eq!(same.max_rel_error, 0.0);
        assert!(same.pass);
    }

    #[test]
    fn analytic_and_numeric_reconcile_for_both_single_factor_models() {
        let sphere = SuspensionModel::sphere();
        let ana = analytic_spectrum(&sphere, 20, Convention::BasicCount).unwrap();
        let num = numeric_spectrum(&sphere, 21, 96).unwrap();
        let rep = spectrum_compare(&ana, &num, 1e-6).unwrap();
        assert!(rep.pass, "sphere max rel err {}", rep.max_rel_error);

        let torus = SuspensionModel::torus();
        let ana = analytic_spectrum(&torus, 9, Convention::BasicCount).unwrap();
        let num = numeric_spectrum(&torus, 10, 64).unwrap();
        let rep = spectrum_compare(&ana, &num, 1e-8).unwrap();
        assert!(rep.pass, "torus max rel err {}", rep.max_rel_error);
    }

    #[test]
    fn eigenvalues_are_monotone_and_positive_past_the_kernel() {
        for (model, n, g) in [
            (SuspensionModel::sphere(), 15, 64),
            (SuspensionModel::torus(), 8, 48),
            (SuspensionModel::product(&[1.5]).unwrap(), 8, 48),
        ] {
            let s = numeric_spectrum(&model, n, g).unwrap();
            assert!(s.entries[0].lambda.abs() <= 1e-9);
            for w in s.entries.windows(2) {
                assert!(w[1].lambda >= w[0].lambda);
            }
            assert!(s.entries[1].lambda > 0.0);
        }
    }

    #[test]
    fn rayleigh_quotients_match_reported_eigenvalues() {
        let n = 64;
        let (a, rel_asym) = symmetrized_legendre_operator(n).unwrap();
        assert!(rel_asym <= 1e-12, "assembled asymmetry {rel_asym}");
        let eig = nalgebra::SymmetricEigen::new(a.clone());
        for i in 0..n {
            let lambda = eig.eigenvalues[i];
            if lambda <= 1e-10 {
                continue;
            }
            let v = eig.eigenvectors.column(i).clone_owned();
            let quotient = (v.transpose() * &a * &v)[(0, 0)] / (v.transpose() * &v)[(0, 0)];
            let rel = (quotient - lambda).abs() / lambda;
            assert!(rel <= 1e-8, "mode {i}: Rayleigh {quotient} vs λ {lambda}");
        }
    }

    #[test]
    fn refinement_errors_shrink_or_sit_at_rounding() {
        let lam = |n: usize| {
            numeric_spectrum(&SuspensionModel::sphere(), 21, n)
                .unwrap()
                .entries
                .iter()
                .map(|e| e.lambda)
                .collect::<Vec<_>>()
        };
        let (a, b, c) = (lam(96), lam(192), lam(384));
        for j in 0..21 {
            let coarse = (a[j] - b[j]).abs() / b[j].max(1.0);
            let fine = (b[j] - c[j]).abs() / c[j].max(1.0);
            // exact-by-construction eigenvalues plateau at rounding, which
            // scales with the matrix norm (≈ N² at resolution N), so the
            // decrease is asserted up to that allowance
            assert!(fine <= coarse + 1e-9, "mode {j}: {coarse} then {fine}");
        }
    }

    #[test]
    fn numeric_preconditions_are_enforced() {
        let m = SuspensionModel::sphere();
        assert!(matches!(numeric_spectrum(&m, 20, 64), Err(Error::GridTooCoarse(_))));
        assert!(numeric_spectrum(&m, 0, 64).is_err());
    }
}
