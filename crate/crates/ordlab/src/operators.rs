//! Factor orderings of the kinetic term as executable differential
//! operators on scalar fields.
//!
//! Sign convention (crate-wide): operators are the quantization of
//! `+g^{ab} p_a p_b` with `p_a = -i d/dq^a`, so the principal part is
//! `-g^{ab} d_a d_b`, hbar = m = 1, and the 1/2m prefactor is omitted.
//! Where a demo needs the physical 1/2 it is reinstated explicitly.
//!
//! Application is by nested numeric differentiation: each divergence-form
//! ordering is evaluated as an outer derivative of an inner flux, with the
//! outer step widened by a factor of 8 to keep the second-order nesting off
//! the inner roundoff floor.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::{self, DiffConfig};
use crate::error::{Error, Result};
use crate::geometry::{metric_jet, ricci_scalar_christoffel, MetricField, Point};

/// Widening factor for the outer derivative of nested applications.
const OUTER_STEP_FACTOR: f64 = 8.0;

type FieldFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> Vec<f64> + Send + Sync>;
type HessFn = Arc<dyn Fn(&Point) -> Vec<Vec<f64>> + Send + Sync>;

/// A twice continuously differentiable scalar function on R^n, with
/// optional closed-form partials (used in place of finite differences
/// when present).
#[derive(Clone)]
pub struct ScalarField {
    dimension: usize,
    label: Option<String>,
    eval: FieldFn,
    gradient: Option<GradFn>,
    hessian: Option<HessFn>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dimension", &self.dimension)
            .field("label", &self.label)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(dimension: usize, eval: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField {
            dimension,
            label: None,
            eval: Arc::new(eval),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Point) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&Point) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// The constant field c.
    pub fn constant(dimension: usize, c: f64) -> Self {
        ScalarField::new(dimension, move |_| c)
            .with_gradient(move |_| vec![0.0; dimension])
            .with_hessian(move |_| vec![vec![0.0; dimension]; dimension])
            .with_label(format!("const:{c}"))
    }

    /// The coordinate field q^axis.
    pub fn coordinate(dimension: usize, axis: usize) -> Self {
        ScalarField::new(dimension, move |p: &Point| p.0[axis])
            .with_gradient(move |_| {
                let mut g = vec![0.0; dimension];
                g[axis] = 1.0;
                g
            })
            .with_hessian(move |_| vec![vec![0.0; dimension]; dimension])
    }

    /// exp(a |x|^2), with closed-form partials.
    pub fn exp_quadratic(dimension: usize, a: f64) -> Self {
        ScalarField::new(dimension, move |p: &Point| {
            (a * p.0.iter().map(|v| v * v).sum::<f64>()).exp()
        })
        .with_gradient(move |p: &Point| {
            let f = (a * p.0.iter().map(|v| v * v).sum::<f64>()).exp();
            p.0.iter().map(|v| 2.0 * a * v * f).collect()
        })
        .with_label(format!("expquad:{a}"))
    }

    /// a f + b g, combining closed-form gradients when both carry them.
    pub fn linear_combination(a: f64, f: &ScalarField, b: f64, g: &ScalarField) -> Self {
        assert_eq!(f.dimension, g.dimension);
        let (fe, ge) = (Arc::clone(&f.eval), Arc::clone(&g.eval));
        let mut out = ScalarField::new(f.dimension, move |p: &Point| a * fe(p) + b * ge(p));
        if let (Some(fg), Some(gg)) = (&f.gradient, &g.gradient) {
            let (fg, gg) = (Arc::clone(fg), Arc::clone(gg));
            out = out.with_gradient(move |p: &Point| {
                fg(p)
                    .iter()
                    .zip(gg(p).iter())
                    .map(|(x, y)| a * x + b * y)
                    .collect()
            });
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn value(&self, p: &Point) -> f64 {
        (self.eval)(p)
    }

    fn value_at(&self, coords: &[f64]) -> f64 {
        (self.eval)(&Point(coords.to_vec()))
    }

    /// d_a psi, closed form when available.
    pub fn partial(&self, p: &Point, a: usize, cfg: &DiffConfig) -> f64 {
        match &self.gradient {
            Some(g) => g(p)[a],
            None => diff::partial(|y| self.value_at(y), p.coords(), a, cfg),
        }
    }

    /// d_a d_b psi, closed form when available.
    pub fn partial2(&self, p: &Point, a: usize, b: usize, cfg: &DiffConfig) -> f64 {
        match &self.hessian {
            Some(h) => h(p)[a][b],
            None => diff::partial2(|y| self.value_at(y), p.coords(), a, b, cfg),
        }
    }
}

/// Declarative description of a factor ordering.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum OperatorSpec {
    /// -g^{ab} d_a d_b
    Naive,
    /// -(1/sqrt g) d_a (sqrt g g^{ab} d_b .)
    LaplaceBeltrami,
    /// LaplaceBeltrami + ((n-2)/(4(n-1))) R
    ConformalLB,
    /// -(1/(sqrt g * g^(alpha+beta))) d_a (g^alpha sqrt g g^{ab} d_b (g^beta .))
    PowerOrdering { alpha: f64, beta: f64 },
    /// -(1/w_pre) d_a (w_mid g^{ab} d_b (w_post .)); weight fields are
    /// serialized by label and resolvable only for registry fields.
    Sandwich {
        #[serde(with = "sandwich_weights")]
        w_pre: ScalarField,
        #[serde(with = "sandwich_weights")]
        w_mid: ScalarField,
        #[serde(with = "sandwich_weights")]
        w_post: ScalarField,
    },
}

/// Serialize sandwich weights by label; deserialize from the small registry
/// of named fields (`const:c`, `expquad:a`).
mod sandwich_weights {
    use super::ScalarField;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(field: &ScalarField, s: S) -> Result<S::Ok, S::Error> {
        match field.label() {
            Some(l) => s.serialize_str(l),
            None => Err(serde::ser::Error::custom(
                "sandwich weight has no serializable label",
            )),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ScalarField, D::Error> {
        let label = String::deserialize(d)?;
        parse_field(&label).ok_or_else(|| de::Error::custom(format!("unknown field `{label}`")))
    }

    pub fn parse_field(label: &str) -> Option<ScalarField> {
        // registry fields are one-dimensional (the oscillator demo's domain)
        if let Some(inner) = label
            .strip_prefix("product(")
            .and_then(|rest| rest.strip_suffix(')'))
        {
            let split = top_level_comma(inner)?;
            let left = parse_field(&inner[..split])?;
            let right = parse_field(&inner[split + 1..])?;
            return Some(super::product_field(&left, &right));
        }
        let parts: Vec<&str> = label.split(':').collect();
        match parts.as_slice() {
            ["const", c] => c.parse().ok().map(|c| ScalarField::constant(1, c)),
            ["expquad", a] => a.parse().ok().map(|a| ScalarField::exp_quadratic(1, a)),
            _ => None,
        }
    }

    fn top_level_comma(s: &str) -> Option<usize> {
        let mut depth = 0usize;
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth = depth.saturating_sub(1),
                ',' if depth == 0 => return Some(i),
                _ => {}
            }
        }
        None
    }
}

impl OperatorSpec {
    fn validate(&self, metric: &MetricField) -> Result<()> {
        match self {
            OperatorSpec::ConformalLB if metric.dimension() < 2 => {
                Err(Error::CurvatureCoefficientUndefined)
            }
            OperatorSpec::PowerOrdering { alpha, beta }
                if !alpha.is_finite() || !beta.is_finite() =>
            {
                Err(Error::InvalidConfig(
                    "power ordering exponents must be finite".into(),
                ))
            }
            OperatorSpec::Sandwich {
                w_pre,
                w_mid,
                w_post,
            } => {
                for w in [w_pre, w_mid, w_post] {
                    if w.dimension() != metric.dimension() {
                        return Err(Error::DimensionMismatch {
                            expected: metric.dimension(),
                            got: w.dimension(),
                        });
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// An executable ordering, immutable once built.
#[derive(Debug, Clone)]
pub struct Operator {
    spec: OperatorSpec,
    metric: MetricField,
}

/// Build the executable operator for `spec` over `metric`.
pub fn build_operator(spec: &OperatorSpec, metric: &MetricField) -> Result<Operator> {
    spec.validate(metric)?;
    Ok(Operator {
        spec: spec.clone(),
        metric: metric.clone(),
    })
}

impl Operator {
    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    /// (op psi)(p).
    pub fn apply(&self, psi: &ScalarField, p: &Point, cfg: &DiffConfig) -> Result<f64> {
        apply_operator(self, psi, p, cfg)
    }
}

fn sqrt_det(metric: &MetricField, coords: &[f64]) -> f64 {
    metric
        .eval(&Point(coords.to_vec()))
        .map(|g| g.determinant().sqrt())
        .unwrap_or(f64::NAN)
}

/// Evaluate `(op psi)(p)` by nested differentiation. Closed-form partials of
/// psi and of the metric are used where available; the outer divergence uses
/// a widened step (see module docs).
pub fn apply_operator(
    op: &Operator,
    psi: &ScalarField,
    p: &Point,
    cfg: &DiffConfig,
) -> Result<f64> {
    cfg.validate()?;
    let metric = &op.metric;
    let n = metric.dimension();
    if psi.dimension() != n || p.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi.dimension().max(p.dim()),
        });
    }
    let outer = cfg.widened(OUTER_STEP_FACTOR);

    let value = apply_operator_inner(op, psi, p, cfg, &outer)?;
    if !value.is_finite() {
        return Err(Error::SingularMetric {
            label: metric.label().to_string(),
            point: p.coords().to_vec(),
        });
    }
    Ok(value)
}

fn apply_operator_inner(
    op: &Operator,
    psi: &ScalarField,
    p: &Point,
    cfg: &DiffConfig,
    outer: &DiffConfig,
) -> Result<f64> {
    let metric = &op.metric;
    let n = metric.dimension();
    let outer = *outer;

    match &op.spec {
        OperatorSpec::Naive => {
            let g_inv = metric
                .eval(p)?
                .try_inverse()
                .ok_or_else(|| Error::SingularMetric {
                    label: metric.label().to_string(),
                    point: p.coords().to_vec(),
                })?;
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    if g_inv[(a, b)] != 0.0 {
                        acc += g_inv[(a, b)] * psi.partial2(p, a, b, cfg);
                    }
                }
            }
            Ok(-acc)
        }
        OperatorSpec::LaplaceBeltrami => {
            let divergence =
                divergence_of_flux(metric, psi, p, cfg, &outer, |_| 1.0, &PostWeight::unit())?;
            Ok(-divergence / sqrt_det(metric, p.coords()))
        }
        OperatorSpec::ConformalLB => {
            let divergence =
                divergence_of_flux(metric, psi, p, cfg, &outer, |_| 1.0, &PostWeight::unit())?;
            let lb = -divergence / sqrt_det(metric, p.coords());
            let jet = metric_jet(metric, p, cfg)?;
            let r = ricci_scalar_christoffel(&jet);
            let coeff = (n as f64 - 2.0) / (4.0 * (n as f64 - 1.0));
            Ok(lb + coeff * r * psi.value(p))
        }
        OperatorSpec::PowerOrdering { alpha, beta } => {
            let (alpha, beta) = (*alpha, *beta);
            let det_at = {
                let metric = metric.clone();
                move |coords: &[f64]| metric.eval(&Point(coords.to_vec())).unwrap().determinant()
            };
            let pre_weight = {
                let det_at = det_at.clone();
                move |coords: &[f64]| det_at(coords).powf(alpha)
            };
            let post_weight = PostWeight::det_power(metric, beta);
            let divergence =
                divergence_of_flux(metric, psi, p, cfg, &outer, pre_weight, &post_weight)?;
            let det_p = metric.eval(p)?.determinant();
            Ok(-divergence / (det_p.sqrt() * det_p.powf(alpha + beta)))
        }
        OperatorSpec::Sandwich {
            w_pre,
            w_mid,
            w_post,
        } => {
            for (field, which) in [(w_pre, "w_pre"), (w_mid, "w_mid"), (w_post, "w_post")] {
                if field.value(p) <= 0.0 {
                    return Err(Error::NonpositiveWeight {
                        which,
                        point: p.coords().to_vec(),
                    });
                }
            }
            // flux_a(x) = w_mid(x) g^{ab}(x) d_b(w_post psi)(x)
            let metric_cl = metric.clone();
            let psi_cl = psi.clone();
            let post = w_post.clone();
            let mid = w_mid.clone();
            let inner_cfg = *cfg;
            let flux = move |coords: &[f64], a: usize| {
                let pt = Point(coords.to_vec());
                let g_inv = match metric_cl.eval(&pt).map(|g| g.try_inverse()) {
                    Ok(Some(inv)) => inv,
                    _ => return f64::NAN,
                };
                let nn = coords.len();
                let mut acc = 0.0;
                for b in 0..nn {
                    if g_inv[(a, b)] != 0.0 {
                        let dwpsi = weighted_partial(&post, &psi_cl, &pt, b, &inner_cfg);
                        acc += g_inv[(a, b)] * dwpsi;
                    }
                }
                mid.value(&pt) * acc
            };
            let mut divergence = 0.0;
            for a in 0..n {
                divergence += diff::partial(|y| flux(y, a), p.coords(), a, &outer);
            }
            Ok(-divergence / w_pre.value(p))
        }
    }
}

/// d_b (w(x) psi(x)) with w given as a closure over coordinates; uses the
/// product rule with closed-form psi partials when psi carries them.
fn weighted_partial(
    w: &ScalarField,
    psi: &ScalarField,
    p: &Point,
    b: usize,
    cfg: &DiffConfig,
) -> f64 {
    let wp = w.partial(p, b, cfg);
    let pp = psi.partial(p, b, cfg);
    wp * psi.value(p) + w.value(p) * pp
}

/// Scalar weight inside the divergence flux, with an optional closed-form
/// partial; absent partials fall back to finite differences of the value.
struct PostWeight {
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    partial: Option<Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>>,
}

impl PostWeight {
    fn unit() -> Self {
        PostWeight {
            value: Arc::new(|_| 1.0),
            partial: Some(Arc::new(|_, _| 0.0)),
        }
    }

    /// det(g)^beta; the partial uses the metric's closed-form first
    /// partials through Jacobi's formula when the metric carries them.
    fn det_power(metric: &MetricField, beta: f64) -> Self {
        let m_val = metric.clone();
        let value = Arc::new(move |coords: &[f64]| {
            m_val
                .eval(&Point(coords.to_vec()))
                .map(|g| g.determinant().powf(beta))
                .unwrap_or(f64::NAN)
        });
        let m_par = metric.clone();
        let has_analytic = metric.derivative_mode() == crate::geometry::DerivativeMode::Analytic;
        let partial: Option<Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>> = if has_analytic {
            Some(Arc::new(move |coords: &[f64], b: usize| {
                let pt = Point(coords.to_vec());
                let g = match m_par.eval(&pt) {
                    Ok(g) => g,
                    Err(_) => return f64::NAN,
                };
                let det = g.determinant();
                let g_inv = match g.try_inverse() {
                    Some(inv) => inv,
                    None => return f64::NAN,
                };
                let dg = match m_par.analytic_first_partials(&pt) {
                    Some(dg) => dg,
                    None => return f64::NAN,
                };
                let d_det = det * (&g_inv * &dg[b]).trace();
                beta * det.powf(beta - 1.0) * d_det
            }))
        } else {
            None
        };
        PostWeight { value, partial }
    }

    fn partial_at(&self, coords: &[f64], b: usize, cfg: &DiffConfig) -> f64 {
        match &self.partial {
            Some(p) => p(coords, b),
            None => {
                let value = Arc::clone(&self.value);
                diff::partial(move |y| value(y), coords, b, cfg)
            }
        }
    }
}

/// Sum over a of d_a [ pre(x) sqrt(g) g^{ab} d_b (post(x) psi) ](p), the
/// common divergence core of the Laplace-Beltrami family.
fn divergence_of_flux<Pre>(
    metric: &MetricField,
    psi: &ScalarField,
    p: &Point,
    inner_cfg: &DiffConfig,
    outer_cfg: &DiffConfig,
    pre: Pre,
    post: &PostWeight,
) -> Result<f64>
where
    Pre: Fn(&[f64]) -> f64,
{
    let n = metric.dimension();
    let inner = *inner_cfg;
    let flux = |coords: &[f64], a: usize| {
        let pt = Point(coords.to_vec());
        let g = match metric.eval(&pt) {
            Ok(g) => g,
            Err(_) => return f64::NAN,
        };
        let det = g.determinant();
        let g_inv = match g.try_inverse() {
            Some(inv) => inv,
            None => return f64::NAN,
        };
        let mut acc = 0.0;
        for b in 0..n {
            if g_inv[(a, b)] != 0.0 {
                // d_b (post * psi): product rule
                let post_val = (post.value)(coords);
                let dpost = post.partial_at(coords, b, &inner);
                let dpsi = psi.partial(&pt, b, &inner);
                acc += g_inv[(a, b)] * (dpost * psi.value(&pt) + post_val * dpsi);
            }
        }
        pre(coords) * det.sqrt() * acc
    };

    let mut divergence = 0.0;
    for a in 0..n {
        divergence += diff::partial(|y| flux(y, a), p.coords(), a, outer_cfg);
    }
    if !divergence.is_finite() {
        return Err(Error::SingularMetric {
            label: metric.label().to_string(),
            point: p.coords().to_vec(),
        });
    }
    Ok(divergence)
}

/// Zeroth- and first-order coefficients of (ordering - LaplaceBeltrami) at a
/// point, with curvature comparison.
///
/// `v_eff` is `(op - LB)` applied to the constant field 1. `fitted_c` and
/// `residual` are quoted in the `Delta + C R` normalization (the form the
/// constant C multiplies when the operator is written with a positive
/// Laplacian), i.e. `fitted_c = -v_eff / ricci`; with that convention the
/// conformally invariant ordering carries C = -(n-2)/(4(n-1)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectivePotentialReport {
    pub point: Vec<f64>,
    pub v_eff: f64,
    pub drift: Vec<f64>,
    pub ricci: f64,
    #[serde(rename = "fitted_C")]
    pub fitted_c: Option<f64>,
    pub residual: Option<f64>,
}

/// Extract the effective potential and first-order drift of `spec` relative
/// to the Laplace-Beltrami ordering, using the probe fields {1, q^1, .., q^n}.
pub fn effective_potential(
    spec: &OperatorSpec,
    metric: &MetricField,
    p: &Point,
    cfg: &DiffConfig,
) -> Result<EffectivePotentialReport> {
    let n = metric.dimension();
    let op = build_operator(spec, metric)?;
    let lb = build_operator(&OperatorSpec::LaplaceBeltrami, metric)?;

    let one = ScalarField::constant(n, 1.0);
    let v_eff = op.apply(&one, p, cfg)? - lb.apply(&one, p, cfg)?;

    let mut drift = Vec::with_capacity(n);
    for c in 0..n {
        let qc = ScalarField::coordinate(n, c);
        let dc = op.apply(&qc, p, cfg)? - lb.apply(&qc, p, cfg)? - v_eff * p.0[c];
        drift.push(dc);
    }

    let jet = metric_jet(metric, p, cfg)?;
    let ricci = ricci_scalar_christoffel(&jet);
    let (fitted_c, residual) = if ricci.abs() > 1e-8 {
        let c = -v_eff / ricci;
        (Some(c), Some(((-v_eff) - c * ricci).abs()))
    } else {
        (None, None)
    };

    Ok(EffectivePotentialReport {
        point: p.coords().to_vec(),
        v_eff,
        drift,
        ricci,
        fitted_c,
        residual,
    })
}

/// Batch extraction plus a least-squares fit of a single global C across the
/// sample set (in the same `Delta + C R` normalization as `fitted_c`).
pub struct BatchPotentialFit {
    pub reports: Vec<EffectivePotentialReport>,
    /// argmin_C sum_i (-v_i - C r_i)^2, None when sum r_i^2 vanishes
    pub fitted_c: Option<f64>,
    /// rms of the fit residuals
    pub residual_rms: f64,
}

pub fn effective_potential_batch(
    spec: &OperatorSpec,
    metric: &MetricField,
    points: &[Point],
    cfg: &DiffConfig,
) -> Result<BatchPotentialFit> {
    // parallel over points, deterministic ordering
    let reports: Vec<EffectivePotentialReport> = points
        .par_iter()
        .map(|p| effective_potential(spec, metric, p, cfg))
        .collect::<Result<_>>()?;
    Ok(fit_batch(reports))
}

pub(crate) fn fit_batch(reports: Vec<EffectivePotentialReport>) -> BatchPotentialFit {
    let sum_rr: f64 = reports.iter().map(|r| r.ricci * r.ricci).sum();
    let sum_vr: f64 = reports.iter().map(|r| (-r.v_eff) * r.ricci).sum();
    let fitted_c = if sum_rr > 1e-16 {
        Some(sum_vr / sum_rr)
    } else {
        None
    };
    let c = fitted_c.unwrap_or(0.0);
    let ss: f64 = reports
        .iter()
        .map(|r| ((-r.v_eff) - c * r.ricci).powi(2))
        .sum();
    let residual_rms = (ss / reports.len().max(1) as f64).sqrt();
    BatchPotentialFit {
        reports,
        fitted_c,
        residual_rms,
    }
}

/// Serialize a batch of reports as CSV with columns
/// `point..., V_eff, drift..., ricci, fitted_C, residual`.
pub fn reports_to_csv(reports: &[EffectivePotentialReport]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let n = reports.first().map(|r| r.point.len()).unwrap_or(0);
    let mut header: Vec<String> = (0..n).map(|i| format!("point{}", i + 1)).collect();
    header.push("V_eff".into());
    header.extend((0..n).map(|i| format!("drift{}", i + 1)));
    header.extend(["ricci".into(), "fitted_C".into(), "residual".into()]);
    wtr.write_record(&header).expect("csv write");
    for r in reports {
        let mut row: Vec<String> = r.point.iter().map(|v| v.to_string()).collect();
        row.push(r.v_eff.to_string());
        row.extend(r.drift.iter().map(|v| v.to_string()));
        row.push(r.ricci.to_string());
        row.push(r.fitted_c.map(|c| c.to_string()).unwrap_or_default());
        row.push(r.residual.map(|c| c.to_string()).unwrap_or_default());
        wtr.write_record(&row).expect("csv write");
    }
    Ok(String::from_utf8(wtr.into_inner().expect("csv flush")).expect("utf8"))
}

/// The ordering `-(1/(f h)) d_x (f d_x (h psi))` as a sandwich spec over the
/// flat metric: w_pre = f h, w_mid = f, w_post = h. One-dimensional for the
/// oscillator demo, arbitrary n in general.
pub fn similarity_ordering(f: &ScalarField, h: &ScalarField) -> OperatorSpec {
    let pre = product_field(f, h);
    OperatorSpec::Sandwich {
        w_pre: pre,
        w_mid: f.clone(),
        w_post: h.clone(),
    }
}

fn product_field(f: &ScalarField, h: &ScalarField) -> ScalarField {
    assert_eq!(f.dimension(), h.dimension());
    let (fe, he) = (Arc::clone(&f.eval), Arc::clone(&h.eval));
    let mut out = ScalarField::new(f.dimension(), move |p: &Point| fe(p) * he(p));
    if let (Some(fg), Some(hg)) = (&f.gradient, &h.gradient) {
        let (fe, he) = (Arc::clone(&f.eval), Arc::clone(&h.eval));
        let (fg, hg) = (Arc::clone(fg), Arc::clone(hg));
        out = out.with_gradient(move |p: &Point| {
            let (fv, hv) = (fe(p), he(p));
            fg(p)
                .iter()
                .zip(hg(p).iter())
                .map(|(df, dh)| df * hv + fv * dh)
                .collect()
        });
    }
    if let (Some(fl), Some(hl)) = (f.label(), h.label()) {
        out = out.with_label(format!("product({fl},{hl})"));
    }
    out
}
