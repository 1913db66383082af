//! Metrics, pointwise jets, and scalar curvature by two independent routes.
//!
//! The two curvature routes are kept strictly separate:
//!
//! * [`ricci_scalar_christoffel`] assembles Christoffel symbols and their
//!   derivatives from the jet. It is the project's ground truth.
//! * [`ricci_scalar_direct`] evaluates a closed expression in the metric
//!   determinant, the inverse metric, and their partials (six addends,
//!   exposed individually through [`curvature_addends`]).
//!
//! [`formula_audit`] compares the two on arbitrary metrics and reports the
//! difference as data; it never reconciles them.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::{self, DiffConfig};
use crate::error::{Error, Result};

/// Highest supported ambient dimension (rank-4 jet storage grows as n^4).
pub const MAX_DIMENSION: usize = 6;

/// Per-mode tolerance constants used across the test suite and the CLI.
pub mod tol {
    /// `g * g_inv - I` max-norm, analytic mode.
    pub const LIN_ANALYTIC: f64 = 1e-10;
    /// `g * g_inv - I` max-norm, numeric mode.
    pub const LIN_NUMERIC: f64 = 1e-7;
    /// Relative curvature agreement, analytic mode.
    pub const CURVATURE_REL_ANALYTIC: f64 = 1e-9;
    /// Relative curvature agreement, numeric mode.
    pub const CURVATURE_REL_NUMERIC: f64 = 1e-5;
    /// Exact linear-algebra identity deviation.
    pub const IDENTITY_ABS: f64 = 1e-12;
}

/// A point of the configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// How metric partials are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Closed-form partials supplied with the metric.
    Analytic,
    /// Central finite differences of the evaluator.
    Numeric,
}

type Evaluator = Arc<dyn Fn(&Point) -> DMatrix<f64> + Send + Sync>;
type FirstPartials = Arc<dyn Fn(&Point) -> Vec<DMatrix<f64>> + Send + Sync>;
type SecondPartials = Arc<dyn Fn(&Point) -> Vec<Vec<DMatrix<f64>>> + Send + Sync>;

/// A smooth field of symmetric positive-definite matrices on R^n.
///
/// Evaluators are shared behind `Arc` and must be safe for concurrent
/// read-only evaluation.
#[derive(Clone)]
pub struct MetricField {
    dimension: usize,
    label: String,
    mode: DerivativeMode,
    evaluator: Evaluator,
    first_partials: Option<FirstPartials>,
    second_partials: Option<SecondPartials>,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField")
            .field("dimension", &self.dimension)
            .field("label", &self.label)
            .field("mode", &self.mode)
            .finish()
    }
}

impl MetricField {
    /// Metric with numeric (finite-difference) partials.
    pub fn numeric<F>(dimension: usize, label: impl Into<String>, evaluator: F) -> Result<Self>
    where
        F: Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    {
        check_dimension(dimension)?;
        Ok(MetricField {
            dimension,
            label: label.into(),
            mode: DerivativeMode::Numeric,
            evaluator: Arc::new(evaluator),
            first_partials: None,
            second_partials: None,
        })
    }

    /// Metric with closed-form first and second partials.
    pub fn analytic<F, D1, D2>(
        dimension: usize,
        label: impl Into<String>,
        evaluator: F,
        first: D1,
        second: D2,
    ) -> Result<Self>
    where
        F: Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
        D1: Fn(&Point) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
        D2: Fn(&Point) -> Vec<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    {
        check_dimension(dimension)?;
        Ok(MetricField {
            dimension,
            label: label.into(),
            mode: DerivativeMode::Analytic,
            evaluator: Arc::new(evaluator),
            first_partials: Some(Arc::new(first)),
            second_partials: Some(Arc::new(second)),
        })
    }

    /// Copy of this metric that ignores closed-form partials and
    /// differentiates the evaluator numerically.
    pub fn forced_numeric(&self) -> Self {
        MetricField {
            dimension: self.dimension,
            label: self.label.clone(),
            mode: DerivativeMode::Numeric,
            evaluator: Arc::clone(&self.evaluator),
            first_partials: None,
            second_partials: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.mode
    }

    /// Evaluate the metric matrix at `p`.
    pub fn eval(&self, p: &Point) -> Result<DMatrix<f64>> {
        if p.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: p.dim(),
            });
        }
        Ok((self.evaluator)(p))
    }

    /// Closed-form first partials g_{ab,c}, when this metric carries them
    /// (analytic mode only).
    pub fn analytic_first_partials(&self, p: &Point) -> Option<Vec<DMatrix<f64>>> {
        if self.mode != DerivativeMode::Analytic {
            return None;
        }
        self.first_partials.as_ref().map(|f| f(p))
    }

    fn eval_at(&self, coords: &[f64]) -> DMatrix<f64> {
        (self.evaluator)(&Point(coords.to_vec()))
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

/// The metric, its inverse, determinant, and all first/second partials at
/// one point. Complete input to every curvature formula in the crate.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub point: Point,
    pub mode: DerivativeMode,
    /// g_ab
    pub g: DMatrix<f64>,
    /// g^ab
    pub g_inv: DMatrix<f64>,
    /// det g (positive)
    pub det: f64,
    /// dg[c] = (g_ab,c) as a matrix in (a, b)
    pub dg: Vec<DMatrix<f64>>,
    /// d2g[c][d] = (g_ab,cd)
    pub d2g: Vec<Vec<DMatrix<f64>>>,
    /// (det g)_,a
    pub d_det: Vec<f64>,
    /// (det g)_,ab
    pub d2_det: DMatrix<f64>,
    /// d_ginv[c] = (g^ab_,c)
    pub d_ginv: Vec<DMatrix<f64>>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Second partials of the inverse metric, assembled from the jet:
    /// (g^ab)_,cd = -[(g^.._,d) (g_.._,c) g^.. + g^.. (g_.._,cd) g^.. + g^.. (g_.._,c) (g^.._,d)].
    pub fn d2_ginv(&self, c: usize, d: usize) -> DMatrix<f64> {
        -(&self.d_ginv[d] * &self.dg[c] * &self.g_inv)
            - (&self.g_inv * &self.d2g[c][d] * &self.g_inv)
            - (&self.g_inv * &self.dg[c] * &self.d_ginv[d])
    }

    /// Max-norm tolerance for linear identities in this jet's mode.
    pub fn lin_tolerance(&self) -> f64 {
        match self.mode {
            DerivativeMode::Analytic => tol::LIN_ANALYTIC,
            DerivativeMode::Numeric => tol::LIN_NUMERIC,
        }
    }
}

/// Evaluate the full jet of `metric` at `p`.
///
/// In analytic mode the metric's closed-form partials are used and the
/// determinant derivatives follow from Jacobi's formula; in numeric mode
/// every derivative (including those of the determinant) is an independent
/// finite difference of the evaluator, so the jet invariants are real checks.
pub fn metric_jet(metric: &MetricField, p: &Point, cfg: &DiffConfig) -> Result<MetricJet> {
    cfg.validate()?;
    let n = metric.dimension();
    let g = metric.eval(p)?;
    let chol = Cholesky::new(g.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        label: metric.label().to_string(),
        point: p.coords().to_vec(),
    })?;
    let det = chol.determinant();
    let g_inv = chol.inverse();

    let (dg, d2g, d_det, d2_det) = match metric.mode {
        DerivativeMode::Analytic => {
            let dg = metric.first_partials.as_ref().expect("analytic mode")(p);
            let d2g = metric.second_partials.as_ref().expect("analytic mode")(p);
            // Jacobi's formula and its derivative, exact given dg/d2g.
            let mut d_det = vec![0.0; n];
            for c in 0..n {
                d_det[c] = det * (&g_inv * &dg[c]).trace();
            }
            let d_ginv_tmp: Vec<DMatrix<f64>> =
                (0..n).map(|c| -(&g_inv * &dg[c] * &g_inv)).collect();
            let mut d2_det = DMatrix::zeros(n, n);
            for c in 0..n {
                for d in 0..n {
                    d2_det[(c, d)] = d_det[d] * (&g_inv * &dg[c]).trace()
                        + det * ((&d_ginv_tmp[d] * &dg[c]).trace() + (&g_inv * &d2g[c][d]).trace());
                }
            }
            (dg, d2g, d_det, d2_det)
        }
        DerivativeMode::Numeric => numeric_partials(metric, p, cfg),
    };

    let d_ginv: Vec<DMatrix<f64>> = (0..n).map(|c| -(&g_inv * &dg[c] * &g_inv)).collect();

    Ok(MetricJet {
        point: p.clone(),
        mode: metric.mode,
        g,
        g_inv,
        det,
        dg,
        d2g,
        d_det,
        d2_det,
        d_ginv,
    })
}

type Partials = (
    Vec<DMatrix<f64>>,
    Vec<Vec<DMatrix<f64>>>,
    Vec<f64>,
    DMatrix<f64>,
);

fn numeric_partials(metric: &MetricField, p: &Point, cfg: &DiffConfig) -> Partials {
    let n = metric.dimension();
    let x = p.coords();

    let entry = |a: usize, b: usize, y: &[f64]| metric.eval_at(y)[(a, b)];
    let det_at = |y: &[f64]| metric.eval_at(y).determinant();

    let mut dg = vec![DMatrix::zeros(n, n); n];
    let mut d2g = vec![vec![DMatrix::zeros(n, n); n]; n];
    for a in 0..n {
        for b in a..n {
            for c in 0..n {
                let v = diff::partial(|y| entry(a, b, y), x, c, cfg);
                dg[c][(a, b)] = v;
                dg[c][(b, a)] = v;
                for d in c..n {
                    let w = diff::partial2(|y| entry(a, b, y), x, c, d, cfg);
                    d2g[c][d][(a, b)] = w;
                    d2g[c][d][(b, a)] = w;
                    d2g[d][c][(a, b)] = w;
                    d2g[d][c][(b, a)] = w;
                }
            }
        }
    }

    let mut d_det = vec![0.0; n];
    let mut d2_det = DMatrix::zeros(n, n);
    for c in 0..n {
        d_det[c] = diff::partial(det_at, x, c, cfg);
        for d in c..n {
            let w = diff::partial2(det_at, x, c, d, cfg);
            d2_det[(c, d)] = w;
            d2_det[(d, c)] = w;
        }
    }

    (dg, d2g, d_det, d2_det)
}

/// The six addends of the determinant-route curvature expression:
///
/// ```text
/// A1 = -g^{ab} g_{,a,b} / g
/// A2 = (3/4) g^{ab} g_{,a} g_{,b} / g^2
/// A3 = -(g_{,b}/g) g^{ab}_{,a}
/// A4 = -(1/2) g^{ab}_{,l} g_{ra,b} g^{lr}
/// A5 = (1/4) g^{ab}_{,l} g_{ab,r} g^{lr}
/// A6 = -g^{ab}_{,a,b}
/// ```
///
/// Their sum equals the Ricci scalar (see [`ricci_scalar_direct`]); the
/// first five terms alone do not, which [`formula_audit`] makes measurable.
pub fn curvature_addends(jet: &MetricJet) -> [f64; 6] {
    let n = jet.dim();
    let g_inv = &jet.g_inv;
    let det = jet.det;

    let mut a1 = 0.0;
    let mut a2 = 0.0;
    let mut a3 = 0.0;
    for a in 0..n {
        for b in 0..n {
            a1 -= g_inv[(a, b)] * jet.d2_det[(a, b)] / det;
            a2 += 0.75 * g_inv[(a, b)] * jet.d_det[a] * jet.d_det[b] / (det * det);
            a3 -= jet.d_det[b] / det * jet.d_ginv[a][(a, b)];
        }
    }

    let mut a4 = 0.0;
    let mut a5 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for l in 0..n {
                for r in 0..n {
                    let dginv_abl = jet.d_ginv[l][(a, b)];
                    a4 -= 0.5 * dginv_abl * jet.dg[b][(r, a)] * g_inv[(l, r)];
                    a5 += 0.25 * dginv_abl * jet.dg[r][(a, b)] * g_inv[(l, r)];
                }
            }
        }
    }

    let mut a6 = 0.0;
    for a in 0..n {
        for b in 0..n {
            a6 -= jet.d2_ginv(a, b)[(a, b)];
        }
    }

    [a1, a2, a3, a4, a5, a6]
}

/// Scalar curvature as a closed expression in the determinant and inverse
/// metric: the sum of the six [`curvature_addends`].
pub fn ricci_scalar_direct(jet: &MetricJet) -> f64 {
    curvature_addends(jet).iter().sum()
}

/// Scalar curvature via Christoffel symbols assembled from the jet:
///
/// ```text
/// R = g^{ab} (G^c_{ab,c} - G^c_{ac,b} + G^c_{cd} G^d_{ab} - G^c_{ad} G^d_{cb})
/// ```
///
/// This route is the project's ground truth for curvature.
pub fn ricci_scalar_christoffel(jet: &MetricJet) -> f64 {
    let n = jet.dim();
    let g_inv = &jet.g_inv;

    // G^i_{jk} = (1/2) g^{il} (g_{lj,k} + g_{lk,j} - g_{jk,l})
    let mut gamma = vec![0.0; n * n * n];
    let idx3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s +=
                        g_inv[(i, l)] * (jet.dg[k][(l, j)] + jet.dg[j][(l, k)] - jet.dg[l][(j, k)]);
                }
                gamma[idx3(i, j, k)] = 0.5 * s;
            }
        }
    }

    // d_gamma[(i,j,k),e] = partial_e G^i_{jk}
    let mut d_gamma = vec![0.0; n * n * n * n];
    let idx4 = |i: usize, j: usize, k: usize, e: usize| ((i * n + j) * n + k) * n + e;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for e in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += jet.d_ginv[e][(i, l)]
                            * (jet.dg[k][(l, j)] + jet.dg[j][(l, k)] - jet.dg[l][(j, k)]);
                        s += g_inv[(i, l)]
                            * (jet.d2g[k][e][(l, j)] + jet.d2g[j][e][(l, k)]
                                - jet.d2g[l][e][(j, k)]);
                    }
                    d_gamma[idx4(i, j, k, e)] = 0.5 * s;
                }
            }
        }
    }

    let mut r = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut term = 0.0;
            for c in 0..n {
                term += d_gamma[idx4(c, a, b, c)] - d_gamma[idx4(c, a, c, b)];
                for d in 0..n {
                    term += gamma[idx3(c, c, d)] * gamma[idx3(d, a, b)]
                        - gamma[idx3(c, a, d)] * gamma[idx3(d, c, b)];
                }
            }
            r += g_inv[(a, b)] * term;
        }
    }
    r
}

/// Per-point comparison of the two curvature routes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub metric: String,
    pub points: Vec<Vec<f64>>,
    pub direct: Vec<f64>,
    pub christoffel: Vec<f64>,
    pub abs_diff: Vec<f64>,
    pub rel_diff: Vec<f64>,
    pub pass: bool,
}

/// Evaluate both curvature routes at each sample and report the pairs, their
/// absolute and relative differences, and a pass/fail flag at `tolerance`
/// (relative, with an absolute floor of the same size near zero). The two
/// values are reported verbatim; disagreement is data, not an error.
pub fn formula_audit(
    metric: &MetricField,
    samples: &[Point],
    cfg: &DiffConfig,
    tolerance: f64,
) -> Result<AuditReport> {
    if samples.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    // parallel over points, deterministic ordering
    let pairs: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|p| {
            let jet = metric_jet(metric, p, cfg)?;
            Ok((ricci_scalar_direct(&jet), ricci_scalar_christoffel(&jet)))
        })
        .collect::<Result<_>>()?;
    let mut direct = Vec::with_capacity(samples.len());
    let mut christoffel = Vec::with_capacity(samples.len());
    let mut abs_diff = Vec::with_capacity(samples.len());
    let mut rel_diff = Vec::with_capacity(samples.len());
    let mut pass = true;
    for (d, c) in pairs {
        let ad = (d - c).abs();
        let rd = ad / c.abs().max(1.0);
        if rd > tolerance {
            pass = false;
        }
        direct.push(d);
        christoffel.push(c);
        abs_diff.push(ad);
        rel_diff.push(rd);
    }
    Ok(AuditReport {
        metric: metric.label().to_string(),
        points: samples.iter().map(|p| p.coords().to_vec()).collect(),
        direct,
        christoffel,
        abs_diff,
        rel_diff,
        pass,
    })
}

/// Jet invariant checks, shared by unit and property tests.
pub mod checks {
    use super::*;

    /// Max-norm of g * g_inv - I.
    pub fn inverse_defect(jet: &MetricJet) -> f64 {
        let n = jet.dim();
        let prod = &jet.g * &jet.g_inv;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Max deviation of d_det[a] from det * tr(g_inv * dg[a]).
    pub fn jacobi_defect(jet: &MetricJet) -> f64 {
        let n = jet.dim();
        (0..n)
            .map(|a| {
                let expected = jet.det * (&jet.g_inv * &jet.dg[a]).trace();
                (jet.d_det[a] - expected).abs() / jet.det.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Max deviation of d_ginv[c] from -g_inv * dg[c] * g_inv.
    pub fn inverse_derivative_defect(jet: &MetricJet) -> f64 {
        let n = jet.dim();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            let expected = -(&jet.g_inv * &jet.dg[c] * &jet.g_inv);
            worst = worst.max((&jet.d_ginv[c] - expected).abs().max());
        }
        worst
    }

    /// Max asymmetry of second partials, d2g[c][d] vs d2g[d][c].
    pub fn second_partial_asymmetry(jet: &MetricJet) -> f64 {
        let n = jet.dim();
        let mut worst: f64 = 0.0;
        for c in 0..n {
            for d in 0..n {
                worst = worst.max((&jet.d2g[c][d] - &jet.d2g[d][c]).abs().max());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn euclidean(n: usize) -> MetricField {
        catalog::metric(&format!("euclidean:{n}")).unwrap()
    }

    #[test]
    fn flat_jet_is_trivial() {
        let m = euclidean(3);
        let cfg = DiffConfig::default();
        let jet = metric_jet(&m, &Point(vec![0.3, -1.2, 0.7]), &cfg).unwrap();
        assert_abs_diff_eq!(jet.det, 1.0, epsilon = 1e-14);
        for c in 0..3 {
            assert!(jet.dg[c].abs().max() < 1e-14);
            for d in 0..3 {
                assert!(jet.d2g[c][d].abs().max() < 1e-14);
            }
        }
        assert!(jet.d_det.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn spherical_jet_matches_hand_differentiation() {
        // det = r^4 sin^2(theta); at (2, pi/2, 0): det = 16, d_det = (32, 0, 0)
        let m = catalog::metric("spherical3").unwrap();
        let cfg = DiffConfig::default();
        let p = Point(vec![2.0, std::f64::consts::FRAC_PI_2, 0.0]);
        let jet = metric_jet(&m, &p, &cfg).unwrap();
        assert_relative_eq!(jet.det, 16.0, epsilon = 1e-10);
        assert_relative_eq!(jet.d_det[0], 32.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jet.d_det[1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jet.d_det[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn stereographic_two_sphere_at_origin() {
        let m = catalog::metric("stereo-sphere:2:1").unwrap();
        let cfg = DiffConfig::default();
        let jet = metric_jet(&m, &Point(vec![0.0, 0.0]), &cfg).unwrap();
        assert_relative_eq!(jet.g[(0, 0)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(jet.g[(1, 1)], 4.0, epsilon = 1e-12);
        assert_relative_eq!(jet.det, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn non_positive_definite_is_rejected() {
        let m = MetricField::numeric(2, "bad", |p: &Point| {
            DMatrix::from_diagonal_element(2, 2, p.0[0])
        })
        .unwrap();
        let err = metric_jet(&m, &Point(vec![-1.0, 0.0]), &DiffConfig::default());
        assert!(matches!(err, Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = euclidean(3);
        let err = metric_jet(&m, &Point(vec![0.0, 0.0]), &DiffConfig::default());
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn christoffel_flat_in_spherical_coordinates() {
        let m = catalog::metric("spherical3").unwrap();
        let cfg = DiffConfig::default();
        for p in [
            Point(vec![1.0, 1.0, 0.3]),
            Point(vec![2.5, 0.4, 2.0]),
            Point(vec![0.7, 2.6, 5.0]),
        ] {
            let jet = metric_jet(&m, &p, &cfg).unwrap();
            assert_abs_diff_eq!(ricci_scalar_christoffel(&jet), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn unit_spheres_have_constant_curvature() {
        let cfg = DiffConfig::default();
        for n in 2..=4usize {
            let m = catalog::metric(&format!("stereo-sphere:{n}:1")).unwrap();
            let expected = (n * (n - 1)) as f64;
            for pt in catalog::sample_points(&m, 5, 42).unwrap() {
                let jet = metric_jet(&m, &pt, &cfg).unwrap();
                assert_relative_eq!(
                    ricci_scalar_christoffel(&jet),
                    expected,
                    max_relative = 1e-9
                );
                assert_relative_eq!(ricci_scalar_direct(&jet), expected, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn direct_route_agrees_with_christoffel_on_generic_metric() {
        let m = catalog::metric("poly-perturb:3:7:0.1").unwrap();
        let cfg = DiffConfig::default();
        for pt in catalog::sample_points(&m, 6, 11).unwrap() {
            let jet = metric_jet(&m, &pt, &cfg).unwrap();
            let d = ricci_scalar_direct(&jet);
            let c = ricci_scalar_christoffel(&jet);
            assert_relative_eq!(d, c, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn sixth_addend_is_required() {
        // The five-addend truncation of the determinant-route expression is
        // not the scalar curvature; the defect is exactly the sixth addend.
        let m = catalog::metric("stereo-sphere:2:1").unwrap();
        let cfg = DiffConfig::default();
        let jet = metric_jet(&m, &Point(vec![0.3, -0.2]), &cfg).unwrap();
        let addends = curvature_addends(&jet);
        let five: f64 = addends[..5].iter().sum();
        let truth = ricci_scalar_christoffel(&jet);
        assert_relative_eq!(truth, 2.0, max_relative = 1e-9);
        assert!(
            (five - truth).abs() > 0.1,
            "five-term truncation unexpectedly matches: {five} vs {truth}"
        );
        assert_relative_eq!(five + addends[5], truth, max_relative = 1e-9);
    }

    #[test]
    fn christoffel_invariant_under_axis_permutation() {
        // relabeling coordinates of a diagonal metric permutes axes
        let cfg = DiffConfig::default();
        let base = MetricField::numeric(3, "diag", |p: &Point| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                1.0 + p.0[0] * p.0[0],
                1.0 + 0.5 * p.0[1] * p.0[1],
                1.0 + 0.25 * p.0[2] * p.0[2],
            ]))
        })
        .unwrap();
        let perm = MetricField::numeric(3, "diag-perm", |p: &Point| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                1.0 + 0.25 * p.0[0] * p.0[0],
                1.0 + p.0[1] * p.0[1],
                1.0 + 0.5 * p.0[2] * p.0[2],
            ]))
        })
        .unwrap();
        let p = Point(vec![0.4, 0.2, -0.3]);
        // permuted point: base axes (x,y,z) -> perm axes (z,x,y)
        let q = Point(vec![-0.3, 0.4, 0.2]);
        let r1 = ricci_scalar_christoffel(&metric_jet(&base, &p, &cfg).unwrap());
        let r2 = ricci_scalar_christoffel(&metric_jet(&perm, &q, &cfg).unwrap());
        assert_relative_eq!(r1, r2, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn audit_flat_metric_all_zero() {
        let m = euclidean(3);
        let pts = catalog::sample_points(&m, 10, 1).unwrap();
        let report = formula_audit(&m, &pts, &DiffConfig::default(), 1e-6).unwrap();
        assert!(report.pass);
        assert_eq!(report.points.len(), 10);
        for (d, c) in report.direct.iter().zip(&report.christoffel) {
            assert_abs_diff_eq!(*d, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn audit_two_sphere_passes() {
        let m = catalog::metric("stereo-sphere:2:1").unwrap();
        let pts = catalog::sample_points(&m, 5, 3).unwrap();
        let report = formula_audit(&m, &pts, &DiffConfig::default(), 1e-6).unwrap();
        assert!(report.pass);
        for (d, c) in report.direct.iter().zip(&report.christoffel) {
            assert_relative_eq!(*d, 2.0, max_relative = 1e-6);
            assert_relative_eq!(*c, 2.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn audit_requires_samples() {
        let m = euclidean(2);
        assert!(matches!(
            formula_audit(&m, &[], &DiffConfig::default(), 1e-6),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn numeric_mode_jet_invariants() {
        let m = catalog::metric("conf-gauss:3:0.25")
            .unwrap()
            .forced_numeric();
        let cfg = DiffConfig::default();
        let jet = metric_jet(&m, &Point(vec![0.2, -0.4, 0.1]), &cfg).unwrap();
        assert!(checks::inverse_defect(&jet) <= tol::LIN_NUMERIC);
        assert!(checks::jacobi_defect(&jet) <= tol::LIN_NUMERIC);
        assert!(checks::inverse_derivative_defect(&jet) <= tol::LIN_NUMERIC);
        assert!(checks::second_partial_asymmetry(&jet) <= tol::LIN_NUMERIC);
    }

    #[test]
    fn numeric_mode_curvature_matches_analytic() {
        let analytic = catalog::metric("conf-gauss:3:0.25").unwrap();
        let numeric = analytic.forced_numeric();
        let cfg = DiffConfig::default();
        let p = Point(vec![0.3, 0.1, -0.2]);
        let ra = ricci_scalar_christoffel(&metric_jet(&analytic, &p, &cfg).unwrap());
        let rn = ricci_scalar_christoffel(&metric_jet(&numeric, &p, &cfg).unwrap());
        assert_relative_eq!(ra, rn, max_relative = tol::CURVATURE_REL_NUMERIC);
    }
}
